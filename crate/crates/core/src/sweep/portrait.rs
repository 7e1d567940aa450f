use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CellResult, GridPlan};
use crate::error::{Error, Result};
use crate::toy::{OutcomeTag, Regime, Thresholds};

/// Regime windows used for slope fits; the crossover band between them is never fitted.
pub const LAZY_MAX_GAMMA: f64 = 1e-2;
pub const RICH_MIN_GAMMA: f64 = 1e2;
const MIN_FIT_COLUMNS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Largest convergent rate.
    Upper,
    /// Smallest convergent rate.
    Lower,
    /// Largest rate that did not diverge.
    NonDivergent,
    /// Smallest rate whose loss spiked by the catapult factor without diverging.
    CatapultLower,
    /// Largest rate whose loss spiked by the catapult factor without diverging.
    CatapultUpper,
}

impl Boundary {
    pub const ALL: [Boundary; 5] =
        [Boundary::Upper, Boundary::Lower, Boundary::NonDivergent, Boundary::CatapultLower, Boundary::CatapultUpper];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub regime: Regime,
    pub boundary: Boundary,
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    /// `(log10 gamma, log10 eta)` pairs that entered the fit.
    pub points: Vec<(f64, f64)>,
}

impl SlopeFit {
    /// Approximate 95% interval.
    pub fn interval(&self) -> (f64, f64) {
        (self.slope - 1.96 * self.stderr, self.slope + 1.96 * self.stderr)
    }
}

/// Ordinary least squares of `y` on `x`: `(slope, intercept, stderr of slope)`.
pub fn ols(points: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return Err(Error::Fit(format!("need at least two points, got {}", points.len())));
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all points share one x value".into()));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if points.len() > 2 {
        let sse: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok((slope, intercept, stderr))
}

/// A finished sweep: one column of attempted cells per gamma.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePortrait {
    pub gammas: Vec<f64>,
    pub etas: Vec<f64>,
    /// Sorted by `(gamma_index, eta_index)`.
    pub cells: Vec<CellResult>,
    pub top_convergent: Vec<Option<f64>>,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    gammas: &'a [f64],
    etas: &'a [f64],
    top_convergent: &'a [Option<f64>],
    fits: Vec<SlopeFit>,
}

#[derive(Deserialize)]
struct SidecarIn {
    gammas: Vec<f64>,
    etas: Vec<f64>,
    top_convergent: Vec<Option<f64>>,
}

impl PhasePortrait {
    pub fn new(plan: GridPlan, mut cells: Vec<CellResult>, top_convergent: Vec<Option<f64>>) -> Self {
        cells.sort_by_key(|c| (c.cell.gamma_index, c.cell.eta_index));
        Self { gammas: plan.gammas, etas: plan.etas, cells, top_convergent }
    }

    pub fn get(&self, gamma_index: usize, eta_index: usize) -> Option<&CellResult> {
        self.cells
            .binary_search_by_key(&(gamma_index, eta_index), |c| (c.cell.gamma_index, c.cell.eta_index))
            .ok()
            .map(|i| &self.cells[i])
    }

    pub fn column(&self, gamma_index: usize) -> impl Iterator<Item = &CellResult> {
        self.cells.iter().filter(move |c| c.cell.gamma_index == gamma_index)
    }

    /// `gammas x etas` matrix of outcome tags; `None` where no cell ran or the runner failed.
    pub fn tag_matrix(&self) -> Vec<Vec<Option<OutcomeTag>>> {
        let mut m = vec![vec![None; self.etas.len()]; self.gammas.len()];
        for c in &self.cells {
            m[c.cell.gamma_index][c.cell.eta_index] = c.outcome.map(|o| o.tag);
        }
        m
    }

    /// Boundary rate of one column, if the column has one.
    pub fn boundary_eta(&self, gamma_index: usize, boundary: Boundary) -> Option<f64> {
        let spiked = |c: &CellResult| {
            c.outcome.is_some_and(|o| {
                o.tag != OutcomeTag::Diverged && o.max_loss >= Thresholds::default().catapult * o.initial_loss
            })
        };
        let pick: Vec<f64> = self
            .column(gamma_index)
            .filter(|c| match boundary {
                Boundary::Upper | Boundary::Lower => c.is_convergent(),
                Boundary::NonDivergent => c.outcome.is_some_and(|o| o.tag != OutcomeTag::Diverged),
                Boundary::CatapultLower | Boundary::CatapultUpper => spiked(c),
            })
            .map(|c| c.cell.eta)
            .collect();
        match boundary {
            Boundary::Upper | Boundary::NonDivergent | Boundary::CatapultUpper => pick.into_iter().reduce(f64::max),
            Boundary::Lower | Boundary::CatapultLower => pick.into_iter().reduce(f64::min),
        }
    }

    pub fn in_window(gamma: f64, regime: Regime) -> bool {
        match regime {
            Regime::Lazy => gamma <= LAZY_MAX_GAMMA * (1.0 + 1e-9),
            Regime::UltraRich => gamma >= RICH_MIN_GAMMA * (1.0 - 1e-9),
        }
    }

    pub fn boundary_points(&self, regime: Regime, boundary: Boundary) -> Vec<(f64, f64)> {
        self.gammas
            .iter()
            .enumerate()
            .filter(|(_, &g)| Self::in_window(g, regime))
            .filter_map(|(gi, &g)| self.boundary_eta(gi, boundary).map(|eta| (g.log10(), eta.log10())))
            .collect()
    }

    pub fn fits(&self) -> Vec<SlopeFit> {
        let mut out = Vec::new();
        for regime in [Regime::Lazy, Regime::UltraRich] {
            for boundary in Boundary::ALL {
                if let Ok(fit) = fit_boundary_slope(self, regime, boundary) {
                    out.push(fit);
                }
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("gamma,eta,outcome,final_loss,max_loss,accuracy,truncated\n");
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        for c in &self.cells {
            let tag = match (&c.outcome, &c.failure) {
                (Some(o), _) => o.tag.as_str(),
                (None, _) => "failed",
            };
            let _ = writeln!(
                s,
                "{:e},{:e},{},{},{},{},{}",
                c.cell.gamma,
                c.cell.eta,
                tag,
                opt(c.outcome.map(|o| o.final_loss)),
                opt(c.outcome.map(|o| o.max_loss)),
                opt(c.accuracy),
                c.truncated
            );
        }
        s
    }

    /// Writes `portrait.csv` and the `portrait.json` sidecar with fitted slopes.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("portrait.csv"), self.to_csv())?;
        let sidecar = Sidecar { gammas: &self.gammas, etas: &self.etas, top_convergent: &self.top_convergent, fits: self.fits() };
        std::fs::write(dir.join("portrait.json"), serde_json::to_vec_pretty(&sidecar)?)?;
        Ok(())
    }

    /// Reads a portrait written by a sweep into `dir`. Trajectories stay on disk.
    pub fn load(dir: &Path) -> Result<Self> {
        let side: SidecarIn = serde_json::from_slice(&std::fs::read(dir.join("portrait.json"))?)?;
        let body = std::fs::read_to_string(dir.join("cells.jsonl"))?;
        let mut cells = std::collections::BTreeMap::new();
        for line in body.lines().filter(|l| !l.trim().is_empty()) {
            let cell: CellResult = serde_json::from_str(line)?;
            if cell.cell.gamma_index >= side.gammas.len() || cell.cell.eta_index >= side.etas.len() {
                return Err(Error::Validation(format!("cell {} lies outside the saved grid", cell.cell.id())));
            }
            cells.insert((cell.cell.gamma_index, cell.cell.eta_index), cell);
        }
        if side.top_convergent.len() != side.gammas.len() {
            return Err(Error::Validation("portrait.json has one top rate per gamma".into()));
        }
        let plan = GridPlan { gammas: side.gammas, etas: side.etas };
        Ok(Self::new(plan, cells.into_values().collect(), side.top_convergent))
    }
}

/// Log-log slope of a boundary across the columns of one regime window.
pub fn fit_boundary_slope(portrait: &PhasePortrait, regime: Regime, boundary: Boundary) -> Result<SlopeFit> {
    let points = portrait.boundary_points(regime, boundary);
    if points.len() < MIN_FIT_COLUMNS {
        return Err(Error::Fit(format!(
            "{boundary:?} boundary has {} columns in the {regime:?} window, need {MIN_FIT_COLUMNS}",
            points.len()
        )));
    }
    let (slope, intercept, stderr) = ols(&points)?;
    Ok(SlopeFit { regime, boundary, slope, stderr, intercept, points })
}
