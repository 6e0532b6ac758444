use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepType {
    /// Initialisation.
    Ini,
    /// One pass of the universe at a fixed sub-sequence index.
    Up,
    /// Self-healing pass.
    Sh,
}

impl fmt::Display for StepType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepType::Ini => "INI",
            StepType::Up => "UP",
            StepType::Sh => "SH",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub step: u64,
    pub step_type: StepType,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub mean_ensemble_size: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Micro-averaged precision/recall/F1 over queries.
///
/// A prediction of an enrolled identity that differs from the truth is a
/// false positive; a query of an enrolled identity not predicted as itself is
/// a false negative. A wrong enrolled label therefore counts as both.
pub fn compute_metrics(predictions: &[Label], truths: &[Label]) -> Result<Scores> {
    if predictions.len() != truths.len() {
        return Err(Error::InvalidConfig(format!(
            "{} predictions for {} truths",
            predictions.len(),
            truths.len()
        )));
    }
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (p, t) in predictions.iter().zip(truths) {
        match (p, t) {
            (Label::Known(a), Label::Known(b)) if a == b => tp += 1,
            (Label::Known(_), Label::Known(_)) => {
                fp += 1;
                fn_ += 1;
            }
            (Label::Known(_), Label::Unknown) => fp += 1,
            (Label::Unknown, Label::Known(_)) => fn_ += 1,
            (Label::Unknown, Label::Unknown) => {}
        }
    }
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(Scores { precision, recall, f1 })
}

pub const METRICS_HEADER: &str = "step,step_type,precision,recall,f1,mean_ensemble_size";

pub fn write_metrics<W: Write>(records: &[MetricsRecord], mut out: W) -> Result<()> {
    writeln!(out, "{METRICS_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.step, r.step_type, r.precision, r.recall, r.f1, r.mean_ensemble_size
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Step-wise mean over several runs sharing one schedule.
pub fn average_records(runs: &[Vec<MetricsRecord>]) -> Result<Vec<MetricsRecord>> {
    let Some(first) = runs.first() else {
        return Ok(Vec::new());
    };
    if runs.iter().any(|r| r.len() != first.len()) {
        return Err(Error::InvalidConfig("runs have different schedules".into()));
    }
    let n = runs.len() as f64;
    Ok(first
        .iter()
        .enumerate()
        .map(|(i, r0)| {
            let mean = |f: fn(&MetricsRecord) -> f64| runs.iter().map(|r| f(&r[i])).sum::<f64>() / n;
            MetricsRecord {
                step: r0.step,
                step_type: r0.step_type,
                precision: mean(|r| r.precision),
                recall: mean(|r| r.recall),
                f1: mean(|r| r.f1),
                mean_ensemble_size: mean(|r| r.mean_ensemble_size),
            }
        })
        .collect())
}
