use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// One line of a trajectory file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub step: u64,
    /// Rescaled time `eta * step / gamma`.
    pub tau: f64,
    pub train_loss: f64,
    pub test_loss: Option<f64>,
    pub test_accuracy: Option<f64>,
    pub lr: f64,
    /// Tangent kernel of the two-parameter toy model.
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<f64>,
}

/// One line of a metrics file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub step: u64,
    pub tau: f64,
    pub metric_name: String,
    pub values: Vec<f64>,
}

/// Which steps get recorded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RecordSchedule {
    /// Every step below `dense_until`, then `per_decade` log-spaced steps per decade.
    LogSpaced { dense_until: u64, per_decade: u32 },
    Every { interval: u64 },
    Steps { steps: Vec<u64> },
}

impl Default for RecordSchedule {
    fn default() -> Self {
        RecordSchedule::LogSpaced { dense_until: 100, per_decade: 20 }
    }
}

impl RecordSchedule {
    pub fn due(&self, step: u64) -> bool {
        match self {
            RecordSchedule::LogSpaced { dense_until, per_decade } => {
                if step < *dense_until || step == 0 {
                    return true;
                }
                let bucket = |t: u64| ((t as f64).log10() * *per_decade as f64 + 1e-9).floor();
                bucket(step) > bucket(step - 1)
            }
            RecordSchedule::Every { interval } => step.is_multiple_of((*interval).max(1)),
            RecordSchedule::Steps { steps } => steps.contains(&step),
        }
    }
}

pub fn write_jsonl<T: Serialize>(path: impl AsRef<Path>, records: &[T]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}
