use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{build_grid, CellResult, CellRunner, GridPlan, GridSpec, PhasePortrait, SweepCell};
use crate::error::{Error, Result};
use crate::par;

pub const SWEEP_SCHEMA_VERSION: u32 = 1;
const CELLS_FILE: &str = "cells.jsonl";
const MANIFEST_FILE: &str = "sweep.json";
const TRAJECTORY_DIR: &str = "trajectories";

#[derive(Clone, Debug)]
pub struct SweepOptions {
    pub jobs: usize,
    /// Where to persist the portrait. `None` keeps everything in memory.
    pub out_dir: Option<PathBuf>,
    pub resume: bool,
    pub store_trajectories: bool,
    pub cell_timeout: Option<Duration>,
    pub cancel: Arc<AtomicBool>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            jobs: 1,
            out_dir: None,
            resume: false,
            store_trajectories: true,
            cell_timeout: Some(Duration::from_secs(120)),
            cancel: Arc::new(AtomicBool::new(false)),
        }
    }
}

#[derive(Serialize, Deserialize, PartialEq)]
struct Manifest {
    schema_version: u32,
    grid: GridSpec,
    runner: serde_json::Value,
}

/// Appends finished cells to `cells.jsonl`; the only writer for a sweep.
struct Store {
    dir: PathBuf,
    cells: Mutex<File>,
    store_trajectories: bool,
}

impl Store {
    fn open(dir: &Path, manifest: &Manifest, resume: bool, store_trajectories: bool) -> Result<(Self, HashMap<String, CellResult>)> {
        std::fs::create_dir_all(dir.join(TRAJECTORY_DIR))?;
        let manifest_path = dir.join(MANIFEST_FILE);
        let cells_path = dir.join(CELLS_FILE);
        let mut done = HashMap::new();
        if resume && manifest_path.exists() {
            let existing: Manifest = serde_json::from_slice(&std::fs::read(&manifest_path)?)?;
            if existing != *manifest {
                return Err(Error::Validation(format!(
                    "{} was written by a different sweep spec; refusing to resume",
                    manifest_path.display()
                )));
            }
            if cells_path.exists() {
                for line in BufReader::new(File::open(&cells_path)?).lines() {
                    let line = line?;
                    // a torn final line from an interrupted write is simply re-run
                    if let Ok(result) = serde_json::from_str::<CellResult>(&line) {
                        done.insert(result.cell.id(), result);
                    }
                }
            }
        } else if cells_path.exists() {
            std::fs::remove_file(&cells_path)?;
        }
        std::fs::write(&manifest_path, serde_json::to_vec_pretty(manifest)?)?;
        let file = OpenOptions::new().create(true).append(true).open(&cells_path)?;
        Ok((Self { dir: dir.to_path_buf(), cells: Mutex::new(file), store_trajectories }, done))
    }

    fn record(&self, result: &mut CellResult) -> Result<()> {
        if self.store_trajectories && !result.trajectory.is_empty() {
            let mut body = Vec::new();
            for rec in &result.trajectory {
                serde_json::to_writer(&mut body, rec)?;
                body.push(b'\n');
            }
            let digest = Sha256::digest(&body);
            let name: String = digest.iter().map(|b| format!("{b:02x}")).collect();
            let rel = format!("{TRAJECTORY_DIR}/{name}.jsonl");
            let path = self.dir.join(&rel);
            if !path.exists() {
                std::fs::write(&path, &body)?;
            }
            result.trajectory_path = Some(rel);
        }
        let mut line = serde_json::to_vec(&result)?;
        line.push(b'\n');
        let mut file = self.cells.lock().unwrap_or_else(|e| e.into_inner());
        file.write_all(&line)?;
        file.flush()?;
        Ok(())
    }
}

struct Context<'a> {
    spec: &'a GridSpec,
    runner: &'a dyn CellRunner,
    store: Option<&'a Store>,
    done: &'a HashMap<String, CellResult>,
    cancel: &'a AtomicBool,
    timeout: Option<Duration>,
    executed: &'a AtomicUsize,
}

impl Context<'_> {
    fn cell(&self, plan: &GridPlan, gi: usize, ei: usize) -> SweepCell {
        SweepCell {
            gamma_index: gi,
            eta_index: ei,
            gamma: plan.gammas[gi],
            eta: plan.etas[ei],
            seed: self.spec.cell_seed(gi, ei),
            steps: self.spec.steps,
            batch: self.spec.batch,
        }
    }

    fn run_cell(&self, cell: SweepCell) -> Result<CellResult> {
        if let Some(prev) = self.done.get(&cell.id()) {
            return Ok(prev.clone());
        }
        if self.cancel.load(Ordering::SeqCst) {
            return Err(Error::Interrupted);
        }
        let deadline = self.timeout.map(|t| Instant::now() + t);
        let mut result = match catch_unwind(AssertUnwindSafe(|| self.runner.run(&cell, deadline))) {
            Ok(Ok(run)) => CellResult::from_run(cell, run),
            Ok(Err(e)) => CellResult::failed(cell, e.to_string()),
            Err(panic) => {
                let msg = panic
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "runner panicked".into());
                CellResult::failed(cell, format!("panic: {msg}"))
            }
        };
        self.executed.fetch_add(1, Ordering::SeqCst);
        if let Some(store) = self.store {
            store.record(&mut result)?;
        }
        Ok(result)
    }
}

/// Result of descending one gamma column.
#[derive(Clone, Debug, PartialEq)]
pub struct Descent {
    pub top_convergent: Option<f64>,
    pub cells: Vec<CellResult>,
}

fn descend(ctx: &Context<'_>, plan: &GridPlan, gi: usize) -> Result<Descent> {
    let mut cells = Vec::new();
    let mut top = None;
    let mut ei = 0;
    while ei < plan.etas.len() {
        let result = ctx.run_cell(ctx.cell(plan, gi, ei))?;
        let convergent = result.is_convergent();
        cells.push(result);
        ei += 1;
        if convergent {
            top = Some(plan.etas[ei - 1]);
            break;
        }
    }
    if let Some(top_eta) = top {
        let mut kept = 0;
        while ei < plan.etas.len() {
            if let Some(limit) = ctx.spec.keep_count {
                if kept >= limit || plan.etas[ei] < top_eta / ctx.spec.keep_window * (1.0 - 1e-9) {
                    break;
                }
            }
            cells.push(ctx.run_cell(ctx.cell(plan, gi, ei))?);
            kept += 1;
            ei += 1;
        }
    }
    Ok(Descent { top_convergent: top, cells })
}

/// Descends the learning-rate plan of column `gamma_index` in memory.
pub fn descend_eta(spec: &GridSpec, plan: &GridPlan, gamma_index: usize, runner: &dyn CellRunner) -> Result<Descent> {
    let done = HashMap::new();
    let executed = AtomicUsize::new(0);
    let cancel = AtomicBool::new(false);
    let ctx = Context {
        spec,
        runner,
        store: None,
        done: &done,
        cancel: &cancel,
        timeout: None,
        executed: &executed,
    };
    descend(&ctx, plan, gamma_index)
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub portrait: PhasePortrait,
    /// Cells executed in this invocation (resumed cells excluded).
    pub executed: usize,
}

impl SweepReport {
    pub fn failures(&self) -> usize {
        self.portrait.cells.iter().filter(|c| c.failure.is_some()).count()
    }
}

/// Runs every gamma column, in parallel across columns.
pub fn run_sweep(spec: &GridSpec, runner: &dyn CellRunner, options: &SweepOptions) -> Result<SweepReport> {
    run_plan(spec, build_grid(spec)?, runner, options)
}

/// Like [`run_sweep`] over an explicit plan, which may be empty.
pub fn run_plan(spec: &GridSpec, plan: GridPlan, runner: &dyn CellRunner, options: &SweepOptions) -> Result<SweepReport> {
    let manifest = Manifest { schema_version: SWEEP_SCHEMA_VERSION, grid: spec.clone(), runner: runner.key() };
    let (store, done) = match &options.out_dir {
        Some(dir) => {
            let (s, d) = Store::open(dir, &manifest, options.resume, options.store_trajectories)?;
            (Some(s), d)
        }
        None => (None, HashMap::new()),
    };
    let executed = AtomicUsize::new(0);
    let ctx = Context {
        spec,
        runner,
        store: store.as_ref(),
        done: &done,
        cancel: &options.cancel,
        timeout: options.cell_timeout,
        executed: &executed,
    };
    let columns: Vec<usize> = (0..plan.gammas.len()).collect();
    let descents = par::map(options.jobs, &columns, |&gi| descend(&ctx, &plan, gi));
    let mut tops = Vec::with_capacity(descents.len());
    let mut cells = Vec::new();
    for d in descents {
        let d = d?;
        tops.push(d.top_convergent);
        cells.extend(d.cells);
    }
    let portrait = PhasePortrait::new(plan, cells, tops);
    if let Some(dir) = &options.out_dir {
        portrait.save(dir)?;
    }
    Ok(SweepReport { portrait, executed: executed.load(Ordering::SeqCst) })
}
