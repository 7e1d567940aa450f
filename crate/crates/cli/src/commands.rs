use std::path::{Path, PathBuf};

use serde::Serialize;

use richsweep::metrics::{activation_kernel, cka, function_agreement, kta, MatrixNorm};
use richsweep::nn::{LossKind, OptimizerKind};
use richsweep::par;
use richsweep::report::{heatmap, line_plot, regime_overlays, scatter, HeatValue, Series};
use richsweep::sweep::{ols, run_sweep, GridSpec, MlpRunner, MlpSpec, PhasePortrait, SweepOptions, ToyRunner};
use richsweep::toy::{ToyLoss, ToyModel};

use crate::run::{execute, run_figures, sci, LoadedRun};
use crate::spec::{invalid, CompareSpec, NetPhaseSpec, ReportSpec, SpectraSpec, ToyPhaseSpec, TrainOneSpec};
use crate::{Failure, Settings};

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Failure> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, serde_json::to_vec_pretty(value)?)?;
    Ok(())
}

fn sweep_options(s: &Settings, store_trajectories: bool) -> SweepOptions {
    SweepOptions { jobs: s.jobs, out_dir: Some(s.out.clone()), resume: s.resume, store_trajectories, ..Default::default() }
}

fn toy_loss(loss: LossKind) -> ToyLoss {
    match loss {
        LossKind::Mse => ToyLoss::Mse,
        LossKind::SoftmaxCrossEntropy => ToyLoss::Xent,
    }
}

fn overlays(loss: ToyLoss, optimizer: OptimizerKind, depth: u32, grid: &GridSpec) -> Vec<Series> {
    regime_overlays(loss, optimizer, depth, grid.steps, grid.gamma_lo, grid.gamma_hi)
}

fn failures(p: &PhasePortrait) -> Result<(), Failure> {
    let failed: Vec<String> = p.cells.iter().filter(|c| c.failure.is_some()).map(|c| c.cell.id()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Partial(format!("{} cells failed: {}", failed.len(), failed.join(", "))))
    }
}

fn print_fits(p: &PhasePortrait) {
    for f in p.fits() {
        println!("{:?} {:?} slope {:.3} ± {:.3} over {} columns", f.regime, f.boundary, f.slope, f.stderr, f.points.len());
    }
}

pub fn toy_phase(mut spec: ToyPhaseSpec, s: &Settings) -> Result<(), Failure> {
    if let Some(seed) = s.seed {
        spec.grid.seed = seed;
    }
    write_json(&s.out.join("spec.json"), &spec)?;
    let runner = ToyRunner { model: spec.model, loss: spec.loss, optimizer: spec.optimizer };
    let report = run_sweep(&spec.grid, &runner, &sweep_options(s, true))?;
    let depth = match spec.model {
        ToyModel::OneParam { depth } => depth,
        ToyModel::TwoParam => 2,
    };
    let name = if spec.model == ToyModel::TwoParam { "two-param" } else { "one-param" };
    let title = format!("{name} L={depth}, {:?}, {:?}, T={}", spec.loss, spec.optimizer, spec.grid.steps);
    let lines = overlays(spec.loss, spec.optimizer, depth, &spec.grid);
    heatmap(&report.portrait, HeatValue::FinalLoss, &lines, &title).save(&s.out, "heatmap")?;
    println!("{} cells run, {} reused", report.executed, report.portrait.cells.len() - report.executed);
    print_fits(&report.portrait);
    failures(&report.portrait)
}

fn heat_value(spec: &MlpSpec) -> Result<HeatValue, Failure> {
    Ok(if spec.task.build()?.is_classification() { HeatValue::Accuracy } else { HeatValue::FinalLoss })
}

pub fn net_phase(mut spec: NetPhaseSpec, s: &Settings) -> Result<(), Failure> {
    if let Some(seed) = s.seed {
        spec.grid.seed = seed;
    }
    write_json(&s.out.join("spec.json"), &spec)?;
    let runner = MlpRunner::new(spec.mlp.clone())?;
    let report = run_sweep(&spec.grid, &runner, &sweep_options(s, true))?;
    let value = match spec.value {
        Some(v) => v,
        None => heat_value(&spec.mlp)?,
    };
    let m = &spec.mlp;
    let title = format!("MLP L={} N={}, {:?}, {:?}, T={}", m.arch.depth, m.arch.width, m.loss, m.optimizer, spec.grid.steps);
    let lines = overlays(toy_loss(m.loss), m.optimizer, m.arch.depth as u32, &spec.grid);
    heatmap(&report.portrait, value, &lines, &title).save(&s.out, "heatmap")?;
    if let Some(fig) = sharpness_across(&report.portrait) {
        fig.save(&s.out, "sharpness_vs_gamma")?;
    }
    println!("{} cells run, {} reused", report.executed, report.portrait.cells.len() - report.executed);
    print_fits(&report.portrait);
    failures(&report.portrait)
}

/// End-of-training sharpness at each column's top convergent rate.
fn sharpness_across(p: &PhasePortrait) -> Option<richsweep::report::Figure> {
    let points: Vec<(f64, f64)> = p
        .gammas
        .iter()
        .enumerate()
        .filter_map(|(gi, &g)| {
            let top = p.top_convergent[gi]?;
            let cell = p.column(gi).find(|c| c.cell.eta == top)?;
            cell.extras.get("sharpness").map(|v| (g, *v))
        })
        .collect();
    if points.is_empty() {
        return None;
    }
    Some(line_plot("Sharpness at the largest trainable rate", "gamma", "sharpness", true, true, &[Series::new("top convergent", points)]))
}

pub fn train_one(mut spec: TrainOneSpec, s: &Settings) -> Result<(), Failure> {
    if let Some(seed) = s.seed {
        spec.run.seed = seed;
    }
    let summary = execute(&spec.run, &s.out, s.resume)?;
    println!(
        "{}: {:?}, {} updates, final held-out loss {}",
        summary.label(),
        summary.outcome.map(|o| o.tag),
        summary.updates,
        summary.final_test_loss.map(sci).unwrap_or_else(|| "n/a".into())
    );
    Ok(())
}

#[derive(Serialize)]
struct SpectraPoint {
    gamma: f64,
    eta: f64,
    dir: String,
    final_sharpness: Option<f64>,
    /// `sharpness * eta / 2`; 1 is the stability limit of gradient descent.
    final_ratio: Option<f64>,
}

pub fn spectra(mut spec: SpectraSpec, s: &Settings) -> Result<(), Failure> {
    if let Some(seed) = s.seed {
        spec.run.seed = seed;
    }
    write_json(&s.out.join("spec.json"), &spec)?;
    let dirs: Vec<PathBuf> = (0..spec.points.len()).map(|i| s.out.join("runs").join(format!("{i:03}"))).collect();
    let jobs: Vec<usize> = (0..spec.points.len()).collect();
    let results = par::map(s.jobs, &jobs, |&i| {
        let mut run = spec.run.clone();
        run.gamma = Some(spec.points[i].gamma);
        run.eta = Some(spec.points[i].eta);
        execute(&run, &dirs[i], s.resume)
    });
    let mut missing = Vec::new();
    let mut runs = Vec::new();
    let mut errors = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(_) => runs.extend(LoadedRun::load(&dirs[i], &mut missing)),
            Err(e) => errors.push(format!("points[{i}]: {e}")),
        }
    }
    let points: Vec<SpectraPoint> = runs
        .iter()
        .map(|r| {
            let last = r.metrics.iter().rev().find(|m| m.metric_name == "sharpness").map(|m| m.values[0]);
            SpectraPoint {
                gamma: r.summary.gamma(),
                eta: r.summary.eta(),
                dir: r.dir.display().to_string(),
                final_sharpness: last,
                final_ratio: last.map(|v| v * r.summary.eta() / 2.0),
            }
        })
        .collect();
    let finite: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|p| p.final_sharpness.filter(|v| v.is_finite() && *v > 0.0).map(|v| (p.gamma, v)))
        .collect();
    let logs: Vec<(f64, f64)> = finite.iter().map(|(g, v)| (g.log10(), v.log10())).collect();
    let slope = if logs.len() >= 2 { ols(&logs).ok().map(|f| f.0) } else { None };
    write_json(&s.out.join("spectra.json"), &serde_json::json!({ "points": points, "log_log_slope": slope }))?;
    for (stem, fig) in run_figures(&runs) {
        if stem.starts_with("sharpness") || stem.starts_with("loss") {
            fig.save(&s.out, &stem)?;
        }
    }
    if !finite.is_empty() {
        line_plot("Final sharpness", "gamma", "sharpness", true, true, &[Series::new("final", finite)]).save(&s.out, "sharpness_vs_gamma")?;
    }
    if let Some(v) = slope {
        println!("final sharpness ~ gamma^{v:.3} over {} runs", logs.len());
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(Failure::Partial(errors.join("; ")))
    }
}

#[derive(Serialize)]
struct Comparison {
    runs: Vec<String>,
    /// Pearson correlation of true-class outputs on the shared probe set.
    pearson: Vec<Vec<Option<f64>>>,
    /// Final hidden-layer kernel alignment with the probe targets, per norm.
    kta: Vec<Vec<(MatrixNorm, Option<f64>)>>,
    /// Linear CKA between hidden-layer kernels.
    cka: Vec<Vec<Option<f64>>>,
    kernel_examples: usize,
}

/// Examples used for kernel statistics; kernels are `P x P`.
const KERNEL_EXAMPLES: usize = 512;

fn load_runs(dirs: &[String], field: &str) -> Result<Vec<LoadedRun>, Failure> {
    let mut missing = Vec::new();
    let runs: Vec<LoadedRun> = dirs.iter().filter_map(|d| LoadedRun::load(Path::new(d), &mut missing)).collect();
    if runs.len() != dirs.len() {
        return Err(invalid(field, format!("not a run directory: {}", missing.join(", "))));
    }
    Ok(runs)
}

/// Errors unless every run was evaluated on the same probe set as the first.
fn check_probe_sets(runs: &[LoadedRun]) -> Result<(), Failure> {
    let first = &runs[0].summary.config;
    for (i, r) in runs.iter().enumerate().skip(1) {
        let c = &r.summary.config;
        if c.task != first.task || c.probe_size != first.probe_size {
            return Err(invalid(&format!("runs[{i}]"), "probe set differs from runs[0] (task or probe_size)"));
        }
    }
    Ok(())
}

pub fn compare(spec: CompareSpec, s: &Settings) -> Result<(), Failure> {
    let runs = load_runs(&spec.runs, "runs")?;
    check_probe_sets(&runs)?;
    let probe = runs[0].probe()?;
    let nets = runs.iter().map(|r| r.network()).collect::<Result<Vec<_>, _>>()?;
    let n = runs.len();
    let p = probe.len().min(KERNEL_EXAMPLES);
    let inputs = probe.inputs.columns(0, p).into_owned();
    let targets = probe.targets.columns(0, p).into_owned();
    let kernels: Vec<Option<_>> = nets
        .iter()
        .map(|net| {
            let layer = spec.layer.unwrap_or(net.config().depth.saturating_sub(1));
            activation_kernel(net, &inputs, layer).ok()
        })
        .collect();

    let mut pearson = vec![vec![None; n]; n];
    let mut cka_m = vec![vec![None; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i <= j {
                let agree = function_agreement(&nets[i], &nets[j], &probe).ok();
                if let Some(a) = &agree {
                    if i < j {
                        let title = format!("{} vs {}", runs[i].summary.label(), runs[j].summary.label());
                        scatter(&title, &runs[i].summary.label(), &runs[j].summary.label(), &a.pairs)
                            .save(&s.out, &format!("agreement_{i}_{j}"))?;
                    }
                }
                pearson[i][j] = agree.map(|a| a.pearson);
                cka_m[i][j] = match (&kernels[i], &kernels[j]) {
                    (Some(a), Some(b)) => cka(a, b).ok(),
                    _ => None,
                };
            } else {
                pearson[i][j] = pearson[j][i];
                cka_m[i][j] = cka_m[j][i];
            }
        }
    }
    let kta_rows = kernels
        .iter()
        .map(|k| MatrixNorm::ALL.iter().map(|&norm| (norm, k.as_ref().and_then(|k| kta(k, &targets, norm).ok()))).collect())
        .collect();
    let result = Comparison {
        runs: runs.iter().map(|r| r.dir.display().to_string()).collect(),
        pearson,
        kta: kta_rows,
        cka: cka_m,
        kernel_examples: p,
    };
    write_json(&s.out.join("compare.json"), &result)?;
    for (i, row) in result.pearson.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|v| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into())).collect();
        println!("{}: {}", runs[i].summary.label(), cells.join(" "));
    }
    Ok(())
}

pub fn report(spec: ReportSpec, s: &Settings) -> Result<(), Failure> {
    let mut missing = Vec::new();
    let mut notes = Vec::new();
    let runs: Vec<LoadedRun> = spec.runs.iter().filter_map(|d| LoadedRun::load(Path::new(d), &mut missing)).collect();
    for (stem, fig) in run_figures(&runs) {
        fig.save(&s.out, &stem)?;
    }
    if runs.len() >= 2 {
        match agreement_figure(&runs[..2]) {
            Ok(fig) => {
                fig.save(&s.out, "agreement")?;
            }
            Err(e) => notes.push(format!("function agreement skipped: {e}")),
        }
    }
    for (i, d) in spec.portraits.iter().enumerate() {
        let dir = Path::new(d);
        let portrait = match PhasePortrait::load(dir) {
            Ok(p) => p,
            Err(e) => {
                missing.push(format!("{}: {e}", dir.display()));
                continue;
            }
        };
        let (lines, title, value) = portrait_context(dir, &portrait);
        heatmap(&portrait, value, &lines, &title).save(&s.out, &format!("portrait_{i}"))?;
        if let Some(fig) = sharpness_across(&portrait) {
            fig.save(&s.out, &format!("portrait_{i}_sharpness"))?;
        }
        for cell in &portrait.cells {
            if let Some(rel) = &cell.trajectory_path {
                if !dir.join(rel).exists() {
                    missing.push(dir.join(rel).display().to_string());
                }
            }
        }
    }
    for m in &missing {
        eprintln!("missing: {m}");
    }
    for n in &notes {
        eprintln!("{n}");
    }
    write_json(&s.out.join("report.json"), &serde_json::json!({ "runs": spec.runs, "portraits": spec.portraits, "missing": missing, "notes": notes }))?;
    Ok(())
}

fn agreement_figure(runs: &[LoadedRun]) -> Result<richsweep::report::Figure, Failure> {
    check_probe_sets(runs)?;
    let probe = runs[0].probe()?;
    let a = function_agreement(&runs[0].network()?, &runs[1].network()?, &probe)?;
    let (la, lb) = (runs[0].summary.label(), runs[1].summary.label());
    Ok(scatter(&format!("Function agreement, r = {:.4}", a.pearson), &la, &lb, &a.pairs))
}

/// Overlay lines, title and heat value for a saved sweep, read from its manifest.
fn portrait_context(dir: &Path, p: &PhasePortrait) -> (Vec<Series>, String, HeatValue) {
    let manifest: Option<serde_json::Value> =
        std::fs::read(dir.join("sweep.json")).ok().and_then(|b| serde_json::from_slice(&b).ok());
    let fallback = (Vec::new(), dir.display().to_string(), HeatValue::FinalLoss);
    let Some(m) = manifest else { return fallback };
    let Ok(grid) = serde_json::from_value::<GridSpec>(m["grid"].clone()) else { return fallback };
    let runner = &m["runner"];
    let config = runner["config"].clone();
    let value = if p.cells.iter().any(|c| c.accuracy.is_some()) { HeatValue::Accuracy } else { HeatValue::FinalLoss };
    match runner["runner"].as_str() {
        Some("toy") => match serde_json::from_value::<ToyRunner>(config) {
            Ok(t) => {
                let depth = match t.model {
                    ToyModel::OneParam { depth } => depth,
                    ToyModel::TwoParam => 2,
                };
                (overlays(t.loss, t.optimizer, depth, &grid), format!("{}", dir.display()), HeatValue::FinalLoss)
            }
            Err(_) => fallback,
        },
        Some("mlp") => match serde_json::from_value::<MlpSpec>(config) {
            Ok(m) => (overlays(toy_loss(m.loss), m.optimizer, m.arch.depth as u32, &grid), format!("{}", dir.display()), value),
            Err(_) => fallback,
        },
        _ => fallback,
    }
}
