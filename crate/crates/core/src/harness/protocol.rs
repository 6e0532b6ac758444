//! Streaming protocol: initialise from labelled sequences, then run laps over
//! the operational sequences with periodic self-healing, testing after every
//! adaptation step.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adaptation::{decide, process_query, self_heal};
use crate::error::{Error, Result};
use crate::harness::baseline::CosineGallery;
use crate::harness::data::DataSource;
use crate::harness::metrics::{average_records, compute_metrics, MetricsRecord, StepType};
use crate::harness::splits::make_splits;
use crate::state::SystemState;
use crate::types::{FrameSequence, HyperParams, Identity, Label};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// `N`: enrolled identities per universe.
    pub num_ioi: usize,
    /// `N_U`: identities querying the system.
    pub universe_size: usize,
    /// `N_D`: identities of the dataset used to build splits.
    pub dataset_size: usize,
    pub laps: usize,
    /// `f`: `t = 0` initial, `t = 1..f-1` operational, `t = f` testing.
    pub subsequences: usize,
    /// Labelled frames taken from the start of `S_0`.
    pub initial_frames: usize,
    pub seed: u64,
    /// Disable self-update and healing.
    pub adapt: bool,
    /// Also test on the unknown identities' testing sequences.
    pub test_unknowns: bool,
    /// Similarity threshold of the cosine baseline.
    pub baseline_threshold: f64,
    pub hyperparams: HyperParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            num_ioi: 20,
            universe_size: 40,
            dataset_size: 40,
            laps: 3,
            subsequences: 9,
            initial_frames: 5,
            seed: 0,
            adapt: true,
            test_unknowns: false,
            baseline_threshold: 0.5,
            hyperparams: HyperParams::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.num_ioi == 0 {
            return bad("experiment.num_ioi must be positive".into());
        }
        if self.num_ioi > self.universe_size || self.universe_size > self.dataset_size {
            return bad(format!(
                "need num_ioi <= universe_size <= dataset_size, got {} / {} / {}",
                self.num_ioi, self.universe_size, self.dataset_size
            ));
        }
        if self.subsequences < 2 {
            return bad("experiment.subsequences must be >= 2".into());
        }
        if self.initial_frames == 0 {
            return bad("experiment.initial_frames must be positive".into());
        }
        self.hyperparams.validate()
    }
}

/// Step types of one run, in order.
pub fn step_schedule(laps: usize, subsequences: usize, heal_period: usize) -> Vec<StepType> {
    let mut out = vec![StepType::Ini];
    for _ in 0..laps {
        for _ in 1..subsequences {
            out.push(StepType::Up);
            if out.len() % heal_period == 0 {
                out.push(StepType::Sh);
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct UniverseRun {
    pub universe: Vec<Identity>,
    pub records: Vec<MetricsRecord>,
    pub final_state: SystemState,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    /// Step-wise mean over all splits.
    pub records: Vec<MetricsRecord>,
    pub runs: Vec<UniverseRun>,
}

fn check_data(cfg: &ExperimentConfig, data: &DataSource, universe: &[Identity]) -> Result<()> {
    for id in universe {
        for t in 0..=cfg.subsequences {
            data.sequence(id, t)?;
        }
    }
    Ok(())
}

fn labelled_set(cfg: &ExperimentConfig, data: &DataSource, ioi: &[Identity]) -> Result<Vec<(Identity, FrameSequence)>> {
    ioi.iter()
        .map(|k| Ok((k.clone(), data.sequence(k, 0)?.prefix(cfg.initial_frames))))
        .collect()
}

fn test_set<'a>(
    cfg: &ExperimentConfig,
    data: &'a DataSource,
    universe: &[Identity],
) -> Result<Vec<(Label, &'a FrameSequence)>> {
    let take = if cfg.test_unknowns { universe.len() } else { cfg.num_ioi };
    universe[..take]
        .iter()
        .enumerate()
        .map(|(i, k)| {
            let truth = if i < cfg.num_ioi { Label::Known(k.clone()) } else { Label::Unknown };
            Ok((truth, data.sequence(k, cfg.subsequences)?))
        })
        .collect()
}

fn evaluate(
    state: &SystemState,
    tests: &[(Label, &FrameSequence)],
    step: u64,
    step_type: StepType,
) -> Result<MetricsRecord> {
    let mut preds = Vec::with_capacity(tests.len());
    let mut truths = Vec::with_capacity(tests.len());
    for (truth, s) in tests {
        preds.push(decide(state, s)?.label);
        truths.push(truth.clone());
    }
    let m = compute_metrics(&preds, &truths)?;
    Ok(MetricsRecord {
        step,
        step_type,
        precision: m.precision,
        recall: m.recall,
        f1: m.f1,
        mean_ensemble_size: state.mean_ensemble_size(),
    })
}

/// One experiment over an explicit universe; the first `num_ioi` identities
/// are enrolled, the rest act as unknowns.
pub fn run_universe(cfg: &ExperimentConfig, data: &DataSource, universe: &[Identity], seed: u64) -> Result<UniverseRun> {
    cfg.validate()?;
    if universe.len() < cfg.num_ioi {
        return Err(Error::InvalidConfig(format!(
            "universe of {} identities cannot hold {} enrolled ones",
            universe.len(),
            cfg.num_ioi
        )));
    }
    check_data(cfg, data, universe)?;
    let ioi = &universe[..cfg.num_ioi];
    let labelled = labelled_set(cfg, data, ioi)?;
    let tests = test_set(cfg, data, universe)?;
    let mut state = SystemState::initialize(&labelled, cfg.hyperparams.clone(), seed)?;
    let heal_period = cfg.hyperparams.heal_period as u64;

    let mut records = vec![evaluate(&state, &tests, 0, StepType::Ini)?];
    for lap in 0..cfg.laps {
        for t in 1..cfg.subsequences {
            let step = state.advance_step();
            if cfg.adapt {
                for k in universe {
                    let mut query = data.sequence(k, t)?.clone();
                    query.lap = lap;
                    process_query(&mut state, &query)?;
                }
            }
            records.push(evaluate(&state, &tests, step, StepType::Up)?);
            if (step + 1) % heal_period == 0 {
                let step = state.advance_step();
                if cfg.adapt {
                    self_heal(&mut state)?;
                }
                records.push(evaluate(&state, &tests, step, StepType::Sh)?);
            }
        }
    }
    Ok(UniverseRun {
        universe: universe.to_vec(),
        records,
        final_state: state,
    })
}

/// Universes of every split of the first `dataset_size` identities.
pub fn split_universes(cfg: &ExperimentConfig, data: &DataSource) -> Result<Vec<Vec<Identity>>> {
    cfg.validate()?;
    let ids = data.identities();
    if cfg.dataset_size > ids.len() {
        return Err(Error::Data(format!(
            "dataset_size {} exceeds the {} identities in the data",
            cfg.dataset_size,
            ids.len()
        )));
    }
    if data.num_sequences() < cfg.subsequences + 1 {
        return Err(Error::Data(format!(
            "data holds {} sequences per identity, {} required",
            data.num_sequences(),
            cfg.subsequences + 1
        )));
    }
    Ok(make_splits(cfg.dataset_size, cfg.universe_size)?
        .into_iter()
        .map(|r| ids[r].to_vec())
        .collect())
}

/// Run every split (in parallel) and average the metrics step-wise. Split `i`
/// uses seed `cfg.seed + i`.
pub fn run_experiment(cfg: &ExperimentConfig, data: &DataSource) -> Result<ExperimentResult> {
    let universes = split_universes(cfg, data)?;
    let runs = universes
        .par_iter()
        .enumerate()
        .map(|(i, u)| run_universe(cfg, data, u, cfg.seed.wrapping_add(i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let per_run: Vec<Vec<MetricsRecord>> = runs.iter().map(|r| r.records.clone()).collect();
    Ok(ExperimentResult {
        records: average_records(&per_run)?,
        runs,
    })
}

/// Static cosine baseline over the same schedule: metrics are computed once
/// and repeated for every step.
pub fn run_baseline_universe(cfg: &ExperimentConfig, data: &DataSource, universe: &[Identity]) -> Result<Vec<MetricsRecord>> {
    cfg.validate()?;
    check_data(cfg, data, universe)?;
    let gallery = CosineGallery::build(&labelled_set(cfg, data, &universe[..cfg.num_ioi])?)?;
    let tests = test_set(cfg, data, universe)?;
    let mut preds = Vec::new();
    let mut truths = Vec::new();
    for (truth, s) in &tests {
        preds.push(gallery.decide(s, cfg.baseline_threshold)?.label);
        truths.push(truth.clone());
    }
    let m = compute_metrics(&preds, &truths)?;
    Ok(step_schedule(cfg.laps, cfg.subsequences, cfg.hyperparams.heal_period)
        .into_iter()
        .enumerate()
        .map(|(step, step_type)| MetricsRecord {
            step: step as u64,
            step_type,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            mean_ensemble_size: 1.0,
        })
        .collect())
}

pub fn run_baseline(cfg: &ExperimentConfig, data: &DataSource) -> Result<Vec<MetricsRecord>> {
    let universes = split_universes(cfg, data)?;
    let per_run = universes
        .par_iter()
        .map(|u| run_baseline_universe(cfg, data, u))
        .collect::<Result<Vec<_>>>()?;
    average_records(&per_run)
}
