//! Single training runs: execution, on-disk layout and figures.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use richsweep::data::{Batch, Task};
use richsweep::metrics::{KtaProbe, MovementProbe, SharpnessProbe, SpectrumOptions};
use richsweep::nn::{
    init_network, read_jsonl, read_snapshot, train, write_jsonl, write_snapshot, CenteredNetwork, MetricRecord,
    OptimizerConfig, OptimizerKind, Recorder, RunStatus, TrajectoryRecord,
};
use richsweep::report::{line_plot, Figure, Series};
use richsweep::toy::{classify_outcome, Outcome, Thresholds};

use crate::spec::RunConfig;
use crate::Failure;

pub const RUN_FILE: &str = "run.json";
const TRAJECTORY_FILE: &str = "trajectory.jsonl";
const METRICS_FILE: &str = "metrics.jsonl";
const PARAMS_DIR: &str = "params";

/// Contents of `run.json`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    /// The executed configuration, with `gamma`, `eta` and `seed` resolved.
    pub config: RunConfig,
    pub status: RunStatus,
    pub outcome: Option<Outcome>,
    pub updates: u64,
    pub initial_test_loss: Option<f64>,
    pub final_test_loss: Option<f64>,
    pub final_test_accuracy: Option<f64>,
}

impl RunSummary {
    pub fn gamma(&self) -> f64 {
        self.config.gamma.unwrap_or(f64::NAN)
    }

    pub fn eta(&self) -> f64 {
        self.config.eta.unwrap_or(f64::NAN)
    }

    pub fn label(&self) -> String {
        format!("gamma={} eta={}", sci(self.gamma()), sci(self.eta()))
    }
}

/// Compact scientific notation: `100.0 -> 1e2`, `17.78 -> 1.778e1`.
pub fn sci(x: f64) -> String {
    let s = format!("{x:.3e}");
    match s.split_once('e') {
        Some((m, e)) => format!("{}e{e}", m.trim_end_matches('0').trim_end_matches('.')),
        None => s,
    }
}

pub fn optimizer(kind: OptimizerKind, eta: f64) -> OptimizerConfig {
    match kind {
        OptimizerKind::Sgd => OptimizerConfig::sgd(eta),
        OptimizerKind::SignSgd => OptimizerConfig::sign_sgd(eta),
    }
}

fn build_task(config: &RunConfig) -> Result<Box<dyn Task>, Failure> {
    config.task.build().map_err(|e| crate::spec::invalid("run.task", e))
}

/// Trains `config` (rates resolved) and writes the run into `dir`.
/// With `resume`, a finished run of the same configuration is reused.
pub fn execute(config: &RunConfig, dir: &Path, resume: bool) -> Result<RunSummary, Failure> {
    if resume {
        if let Ok(done) = read_summary(dir) {
            if done.config == *config && dir.join(PARAMS_DIR).join("live.bin").exists() {
                return Ok(done);
            }
        }
    }
    let (gamma, eta) = (config.gamma.expect("resolved gamma"), config.eta.expect("resolved eta"));
    let task = build_task(config)?;
    let net_config = config.arch.network(task.as_ref(), gamma, config.seed);
    let mut net = init_network(net_config)?;
    let opt = optimizer(config.optimizer, eta);
    let schedule = config.record.clone();
    let mut recorder = Recorder { schedule: schedule.clone(), ..Default::default() }.with_probe(task.probe(config.probe_size));
    if let Some(s) = &config.metrics.sharpness {
        recorder = recorder.with(SharpnessProbe {
            batch: task.probe(s.batch),
            loss: config.loss,
            optimizer: opt.clone(),
            schedule: schedule.clone(),
            options: SpectrumOptions { k: s.k, seed: config.seed, ..Default::default() },
        });
    }
    if let Some(k) = &config.metrics.kta {
        recorder = recorder.with(KtaProbe {
            batch: task.probe(k.batch),
            layer: k.layer.unwrap_or(config.arch.depth - 1),
            norms: k.norms.clone(),
            schedule: schedule.clone(),
        });
    }
    if let Some(norm) = config.metrics.movement {
        recorder = recorder.with(MovementProbe { norm, schedule });
    }
    let report = train(&mut net, task.as_ref(), config.loss, &opt, config.steps, config.batch, &mut recorder)?;
    let outcome = classify_outcome(&report.outcome_series(), &Thresholds::default()).ok();

    std::fs::create_dir_all(dir.join(PARAMS_DIR))?;
    write_jsonl(dir.join(TRAJECTORY_FILE), &report.trajectory)?;
    write_jsonl(dir.join(METRICS_FILE), &report.metrics)?;
    write_snapshot(net.live(), dir.join(PARAMS_DIR).join("live"))?;
    write_snapshot(net.frozen(), dir.join(PARAMS_DIR).join("frozen"))?;
    let summary = RunSummary {
        schema_version: crate::spec::SCHEMA_VERSION,
        config: config.clone(),
        status: report.status,
        outcome,
        updates: report.updates,
        initial_test_loss: report.initial_probe_loss,
        final_test_loss: report.final_probe_loss,
        final_test_accuracy: report.final_probe_accuracy,
    };
    std::fs::write(dir.join(RUN_FILE), serde_json::to_vec_pretty(&summary)?)?;
    let loaded = LoadedRun { dir: dir.to_path_buf(), summary: summary.clone(), trajectory: report.trajectory, metrics: report.metrics };
    for (stem, fig) in run_figures(&[loaded]) {
        fig.save(dir, &stem)?;
    }
    Ok(summary)
}

pub fn read_summary(dir: &Path) -> Result<RunSummary, Failure> {
    let path = dir.join(RUN_FILE);
    let bytes = std::fs::read(&path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    serde_json::from_slice(&bytes).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

/// A run read back from disk.
pub struct LoadedRun {
    pub dir: PathBuf,
    pub summary: RunSummary,
    pub trajectory: Vec<TrajectoryRecord>,
    pub metrics: Vec<MetricRecord>,
}

impl LoadedRun {
    /// Reads whatever is present; missing pieces are appended to `missing`.
    pub fn load(dir: &Path, missing: &mut Vec<String>) -> Option<Self> {
        let summary = match read_summary(dir) {
            Ok(s) => s,
            Err(_) => {
                missing.push(dir.join(RUN_FILE).display().to_string());
                return None;
            }
        };
        let mut read = |name: &str| -> Option<PathBuf> {
            let p = dir.join(name);
            if p.exists() {
                Some(p)
            } else {
                missing.push(p.display().to_string());
                None
            }
        };
        let trajectory = read(TRAJECTORY_FILE).and_then(|p| read_jsonl(p).ok()).unwrap_or_default();
        let metrics = read(METRICS_FILE).and_then(|p| read_jsonl(p).ok()).unwrap_or_default();
        Some(Self { dir: dir.to_path_buf(), summary, trajectory, metrics })
    }

    pub fn probe(&self) -> Result<Batch, Failure> {
        Ok(build_task(&self.summary.config)?.probe(self.summary.config.probe_size))
    }

    /// Rebuilds the trained network from its snapshots.
    pub fn network(&self) -> Result<CenteredNetwork, Failure> {
        let c = &self.summary.config;
        let task = build_task(c)?;
        let config = c.arch.network(task.as_ref(), self.summary.gamma(), c.seed);
        let live = read_snapshot(self.dir.join(PARAMS_DIR).join("live"))?;
        let frozen = read_snapshot(self.dir.join(PARAMS_DIR).join("frozen"))?;
        Ok(CenteredNetwork::from_params(config, live, frozen)?)
    }

    fn metric<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a MetricRecord> + 'a {
        self.metrics.iter().filter(move |m| m.metric_name == name)
    }
}

/// Loss, sharpness, alignment and movement curves; one series per run (and per norm or layer).
pub fn run_figures(runs: &[LoadedRun]) -> Vec<(String, Figure)> {
    let mut out = Vec::new();
    let loss = |r: &LoadedRun, x: fn(&TrajectoryRecord) -> f64| -> Series {
        let points = r.trajectory.iter().map(|t| (x(t), t.test_loss.unwrap_or(t.train_loss))).collect();
        Series::new(r.summary.label(), points)
    };
    let by_step: Vec<Series> = runs.iter().map(|r| loss(r, |t| t.step as f64)).collect();
    let by_tau: Vec<Series> = runs.iter().map(|r| loss(r, |t| t.tau)).collect();
    push(&mut out, "loss_vs_step", line_plot("Held-out loss", "step", "loss", false, true, &by_step));
    push(&mut out, "loss_vs_tau", line_plot("Held-out loss against rescaled time", "tau = eta t / gamma", "loss", false, true, &by_tau));

    let mut sharp = Vec::new();
    for r in runs {
        let points: Vec<(f64, f64)> = r.metric("sharpness").map(|m| (m.step as f64, m.values[0])).collect();
        if points.is_empty() {
            continue;
        }
        let (first, last) = (points[0].0, points[points.len() - 1].0);
        sharp.push(Series::new(r.summary.label(), points));
        let limit = 2.0 / r.summary.eta();
        sharp.push(Series::new(format!("{} 2/eta", r.summary.label()), vec![(first, limit), (last, limit)]));
    }
    if !sharp.is_empty() {
        push(&mut out, "sharpness_vs_step", line_plot("Top Hessian eigenvalue", "step", "sharpness", false, true, &sharp));
    }

    let mut kta = Vec::new();
    for r in runs {
        let Some(spec) = &r.summary.config.metrics.kta else { continue };
        for (i, norm) in spec.norms.iter().enumerate() {
            let points: Vec<(f64, f64)> = r.metric("kta").filter_map(|m| m.values.get(i).map(|v| (m.tau, *v))).collect();
            if !points.is_empty() {
                kta.push(Series::new(format!("{} {}", r.summary.label(), norm.as_str()), points));
            }
        }
    }
    if !kta.is_empty() {
        push(&mut out, "kta_vs_tau", line_plot("Kernel-target alignment", "tau = eta t / gamma", "KTA", false, false, &kta));
    }

    let mut movement = Vec::new();
    for r in runs {
        let layers = r.metric("movement").map(|m| m.values.len()).max().unwrap_or(0);
        for l in 0..layers {
            let points: Vec<(f64, f64)> = r.metric("movement").filter_map(|m| m.values.get(l).map(|v| (m.step as f64, *v))).collect();
            movement.push(Series::new(format!("{} layer {l}", r.summary.label()), points));
        }
    }
    if !movement.is_empty() {
        push(&mut out, "movement_vs_step", line_plot("Weight movement", "step", "||W - W0||", false, false, &movement));
    }
    out
}

fn push(out: &mut Vec<(String, Figure)>, stem: &str, fig: Figure) {
    out.push((stem.to_string(), fig));
}
