//! Deterministic SVG figures, each with a CSV twin holding exactly the plotted data.

mod svg;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::nn::OptimizerKind;
use crate::sweep::PhasePortrait;
use crate::toy::{predict_regime, OutcomeTag, PowerLaw, Regime, RegimeBounds, ToyLoss};
use svg::{axes, escape, header, legend, palette, polyline, ramp, Frame};

/// Color reserved for divergent cells.
pub const DIVERGED_COLOR: &str = "#9e9e9e";
/// Color of cells whose runner failed.
pub const FAILED_COLOR: &str = "#ffffff";
/// Range of `log10(final loss)` covered by the color scale.
pub const LOSS_CLIP: (f64, f64) = (-6.0, 2.0);

/// An SVG and the CSV of the series it draws.
#[derive(Clone, Debug, PartialEq)]
pub struct Figure {
    pub svg: String,
    pub csv: String,
}

impl Figure {
    /// Writes `<stem>.svg` and `<stem>.csv` into `dir`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let svg = dir.join(format!("{stem}.svg"));
        let csv = dir.join(format!("{stem}.csv"));
        std::fs::write(&svg, &self.svg)?;
        std::fs::write(&csv, &self.csv)?;
        Ok((svg, csv))
    }
}

/// A named curve; coordinates are raw (not logged).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self { name: name.into(), points }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeatValue {
    /// `log10` of the final loss, clipped to [`LOSS_CLIP`].
    FinalLoss,
    /// Final accuracy on `[0, 1]`.
    Accuracy,
}

/// Reference lines `eta = gamma^a T^b` from the regime predictions, sampled
/// across `[gamma_lo, gamma_hi]` wherever their regime applies.
pub fn regime_overlays(
    loss: ToyLoss,
    optimizer: OptimizerKind,
    depth: u32,
    steps: u64,
    gamma_lo: f64,
    gamma_hi: f64,
) -> Vec<Series> {
    let (a, b) = (gamma_lo.log10().floor(), gamma_hi.log10().ceil());
    let n = ((b - a) * 20.0).round().max(1.0) as usize;
    let gammas: Vec<f64> = (0..=n).map(|i| 10f64.powf(a + (b - a) * i as f64 / n as f64)).collect();
    let mut laws: Vec<(Regime, &'static str, PowerLaw)> = Vec::new();
    for regime in [Regime::Lazy, Regime::UltraRich] {
        let bounds = RegimeBounds::for_regime(loss, optimizer, depth, regime);
        let mut push = |name, law: PowerLaw| {
            if !laws.iter().any(|(r, _, l)| *r == regime && *l == law) {
                laws.push((regime, name, law));
            }
        };
        push("eta_max", bounds.eta_max);
        if let Some(c) = bounds.eta_crit {
            push("eta_crit", c);
        }
        push("eta_min", bounds.eta_min);
    }
    laws.into_iter()
        .map(|(regime, name, law)| {
            let field = |v: &crate::toy::RegimeValues| match name {
                "eta_max" => Some(v.eta_max),
                "eta_crit" => v.eta_crit,
                _ => Some(v.eta_min),
            };
            let points = gammas
                .iter()
                .map(|&g| {
                    let p = predict_regime(loss, optimizer, depth, g, steps);
                    (g, p.branch(regime).and_then(field).unwrap_or(f64::NAN))
                })
                .collect();
            let label = format!("{} {name} ~ gamma^{} T^{}", regime_name(regime), fmt_exp(law.gamma_exp), fmt_exp(law.t_exp));
            Series::new(label, points)
        })
        .collect()
}

fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::Lazy => "lazy",
        Regime::UltraRich => "rich",
    }
}

fn fmt_exp(e: f64) -> String {
    let s = format!("{e:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn lattice_step(values: &[f64]) -> f64 {
    let mut logs: Vec<f64> = values.iter().map(|v| v.log10()).collect();
    logs.sort_by(f64::total_cmp);
    logs.windows(2).map(|w| w[1] - w[0]).filter(|d| *d > 1e-9).fold(f64::INFINITY, f64::min).min(1.0)
}

/// Phase-portrait heatmap on log-log axes with overlay lines.
pub fn heatmap(portrait: &PhasePortrait, value: HeatValue, overlays: &[Series], title: &str) -> Figure {
    let mut csv = String::from("series,gamma,eta,outcome,value\n");
    let mut out = String::new();
    header(&mut out, title);
    let etas: Vec<f64> = portrait.cells.iter().map(|c| c.cell.eta).collect();
    let (dx, dy) = (lattice_step(&portrait.gammas), lattice_step(&etas));
    let span = |v: &mut dyn Iterator<Item = f64>| {
        v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x.log10()), b.max(x.log10())))
    };
    let (gx0, gx1) = span(&mut portrait.gammas.iter().copied());
    let (ey0, ey1) = span(&mut etas.iter().copied());
    let frame = if portrait.cells.is_empty() {
        Frame::new((0.0, 1.0), (0.0, 1.0))
    } else {
        Frame::new((gx0 - dx / 2.0, gx1 + dx / 2.0), (ey0 - dy / 2.0, ey1 + dy / 2.0))
    };
    for c in &portrait.cells {
        let (gx, ey) = (c.cell.gamma.log10(), c.cell.eta.log10());
        let (tag, v, color) = match &c.outcome {
            None => ("failed", None, FAILED_COLOR.to_string()),
            Some(o) if o.tag == OutcomeTag::Diverged => (o.tag.as_str(), None, DIVERGED_COLOR.to_string()),
            Some(o) => {
                let v = match value {
                    HeatValue::FinalLoss => o.final_loss.max(1e-300).log10().clamp(LOSS_CLIP.0, LOSS_CLIP.1),
                    HeatValue::Accuracy => c.accuracy.unwrap_or(f64::NAN),
                };
                let t = match value {
                    HeatValue::FinalLoss => (v - LOSS_CLIP.0) / (LOSS_CLIP.1 - LOSS_CLIP.0),
                    HeatValue::Accuracy => v,
                };
                let color = if t.is_finite() { ramp(t) } else { FAILED_COLOR.to_string() };
                (o.tag.as_str(), Some(v), color)
            }
        };
        let (x0, x1) = (frame.px(gx - dx / 2.0), frame.px(gx + dx / 2.0));
        let (y0, y1) = (frame.py(ey + dy / 2.0), frame.py(ey - dy / 2.0));
        let _ = writeln!(
            out,
            r#"<rect x="{x0:.1}" y="{y0:.1}" width="{:.1}" height="{:.1}" fill="{color}"><title>{tag}</title></rect>"#,
            x1 - x0,
            y1 - y0
        );
        let _ = writeln!(csv, "cell,{:e},{:e},{tag},{}", c.cell.gamma, c.cell.eta, v.map(|v| format!("{v:e}")).unwrap_or_default());
    }
    let mut entries = Vec::new();
    for (i, s) in overlays.iter().enumerate() {
        let logged: Vec<(f64, f64)> = s.points.iter().map(|&(x, y)| (x.log10(), y.log10())).collect();
        polyline(&mut out, &frame, &logged, palette(i), true);
        entries.push((s.name.clone(), palette(i).to_string()));
        for (x, y) in &s.points {
            if y.is_finite() {
                let _ = writeln!(csv, "{},{x:e},{y:e},,", csv_field(&s.name));
            }
        }
    }
    let label = match value {
        HeatValue::FinalLoss => format!("color: log10 final loss in [{}, {}]; grey: diverged", LOSS_CLIP.0, LOSS_CLIP.1),
        HeatValue::Accuracy => "color: final accuracy in [0, 1]; grey: diverged".to_string(),
    };
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" font-size="10">{}</text>"#, svg::LEFT, svg::TOP - 4.0, escape(&label));
    axes(&mut out, &frame, "gamma", "eta", true, true);
    legend(&mut out, &entries);
    out.push_str("</svg>\n");
    Figure { svg: out, csv }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Line chart of several series.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, log_x: bool, log_y: bool, series: &[Series]) -> Figure {
    let mut csv = String::from("series,x,y\n");
    let tx = |x: f64| if log_x { x.log10() } else { x };
    let ty = |y: f64| if log_y { y.log10() } else { y };
    let mut xr = (f64::INFINITY, f64::NEG_INFINITY);
    let mut yr = (f64::INFINITY, f64::NEG_INFINITY);
    for s in series {
        for &(x, y) in &s.points {
            let _ = writeln!(csv, "{},{x:e},{y:e}", csv_field(&s.name));
            let (x, y) = (tx(x), ty(y));
            if x.is_finite() && y.is_finite() {
                xr = (xr.0.min(x), xr.1.max(x));
                yr = (yr.0.min(y), yr.1.max(y));
            }
        }
    }
    if !xr.0.is_finite() {
        xr = (0.0, 1.0);
        yr = (0.0, 1.0);
    }
    let frame = Frame::new(xr, yr);
    let mut out = String::new();
    header(&mut out, title);
    let mut entries = Vec::new();
    for (i, s) in series.iter().enumerate() {
        let pts: Vec<(f64, f64)> = s.points.iter().map(|&(x, y)| (tx(x), ty(y))).collect();
        polyline(&mut out, &frame, &pts, palette(i), false);
        entries.push((s.name.clone(), palette(i).to_string()));
    }
    axes(&mut out, &frame, x_label, y_label, log_x, log_y);
    if series.len() > 1 {
        legend(&mut out, &entries);
    }
    out.push_str("</svg>\n");
    Figure { svg: out, csv }
}

/// Scatter of `(x, y)` pairs with the diagonal.
pub fn scatter(title: &str, x_label: &str, y_label: &str, pairs: &[(f64, f64)]) -> Figure {
    let mut csv = String::from("x,y\n");
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &(x, y) in pairs {
        let _ = writeln!(csv, "{x:e},{y:e}");
        if x.is_finite() && y.is_finite() {
            lo = lo.min(x.min(y));
            hi = hi.max(x.max(y));
        }
    }
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    let frame = Frame::new((lo, hi), (lo, hi));
    let mut out = String::new();
    header(&mut out, title);
    polyline(&mut out, &frame, &[(frame.x0, frame.y0), (frame.x1, frame.y1)], "#999999", true);
    for &(x, y) in pairs {
        if frame.contains(x, y) {
            let _ = writeln!(out, r#"<circle cx="{:.1}" cy="{:.1}" r="2" fill="{}"/>"#, frame.px(x), frame.py(y), palette(0));
        }
    }
    axes(&mut out, &frame, x_label, y_label, false, false);
    out.push_str("</svg>\n");
    Figure { svg: out, csv }
}
