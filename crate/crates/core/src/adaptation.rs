//! Unsupervised adaptation: self-update from pseudo-labels, diversity-based
//! size limitation, and self-healing of wrong updates.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evt::recognition_decision;
use crate::scoring::{frame_scores, score_all};
use crate::state::{sample_frames, SystemState};
use crate::svm::{make_unit, train_svm};
use crate::types::{DecisionOutcome, Ensemble, FeatureVector, FrameSequence, Identity, Label};

/// The `min(n, n_F)` frames of `s` with the lowest frame score under `e`,
/// kept in temporal order. Ties favour the earlier frame.
pub fn select_hardest_frames(e: &Ensemble, s: &FrameSequence, n: usize) -> Result<FrameSequence> {
    if n == 0 {
        return Err(Error::InvalidConfig("hardest-frame count must be >= 1".into()));
    }
    let scores = frame_scores(e, s)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    order.truncate(n);
    order.sort_unstable();
    Ok(FrameSequence {
        frames: order.into_iter().map(|i| s.frames[i].clone()).collect(),
        ..s.clone()
    })
}

/// Uniform draw without replacement from the stored positives of every
/// ensemble other than `exclude`.
pub fn draw_negatives<R: Rng + ?Sized>(
    state: &SystemState,
    exclude: &Identity,
    n: usize,
    rng: &mut R,
) -> Result<Vec<FeatureVector>> {
    let pool: Vec<&FeatureVector> = state
        .ensembles
        .iter()
        .filter(|(id, _)| *id != exclude)
        .flat_map(|(_, e)| e.classifiers.iter())
        .flat_map(|c| c.stored_positives.frames.iter())
        .collect();
    if pool.is_empty() {
        return Err(Error::EmptyNegativePool(exclude.to_string()));
    }
    Ok(sample_frames(&pool, n, rng))
}

/// Frames used to measure diversity: the stored positives of all ensembles,
/// subsampled to `eval_pool_cap` when larger.
pub fn evaluation_pool<R: Rng + ?Sized>(state: &SystemState, rng: &mut R) -> Vec<FeatureVector> {
    let all = state.all_stored_frames();
    sample_frames(&all, state.config.eval_pool_cap, rng)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityReport {
    /// `D(h_i)` in ensemble order.
    pub per_classifier: Vec<f64>,
    pub pool_size: usize,
    /// FNV-1a digest of the pool's bit patterns.
    pub pool_digest: String,
}

fn sign(v: f64) -> i8 {
    if v < 0.0 {
        -1
    } else {
        1
    }
}

/// Sign-agreement counts `A_ij = sum_q sgn(h_i(x_q)) sgn(h_j(x_q))`.
fn agreement_matrix(e: &Ensemble, pool: &[FeatureVector]) -> Vec<Vec<i64>> {
    let signs: Vec<Vec<i8>> = e
        .classifiers
        .iter()
        .map(|h| pool.iter().map(|x| sign(h.model.decision_unchecked(x.values()))).collect())
        .collect();
    let m = signs.len();
    let mut a = vec![vec![0i64; m]; m];
    for i in 0..m {
        for j in i + 1..m {
            let s: i64 = signs[i]
                .iter()
                .zip(&signs[j])
                .map(|(p, q)| (*p as i64) * (*q as i64))
                .sum();
            a[i][j] = s;
            a[j][i] = s;
        }
    }
    a
}

fn check_pool(e: &Ensemble, pool: &[FeatureVector]) -> Result<()> {
    if pool.is_empty() {
        return Err(Error::EmptyInput("diversity pool"));
    }
    let d = e
        .classifiers
        .first()
        .map(|c| c.model.dim())
        .ok_or_else(|| Error::EmptyEnsemble(e.identity.to_string()))?;
    for x in pool {
        crate::types::check_vector(x, d)?;
    }
    Ok(())
}

fn pool_digest(pool: &[FeatureVector]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for x in pool {
        for v in x.values() {
            for byte in v.to_bits().to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
    }
    format!("{h:016x}")
}

/// Diversity score of every ensemble member over `pool`.
///
/// `d(h_i, h_j) = -(1/Q) sum_q sgn(h_i(x_q)) sgn(h_j(x_q))` with `sgn(0) = +1`,
/// and `D(h_i) = sum_{j != i} d(h_i, h_j)`.
pub fn diversity(e: &Ensemble, pool: &[FeatureVector]) -> Result<DiversityReport> {
    if e.len() < 2 {
        return Err(Error::NotApplicable);
    }
    check_pool(e, pool)?;
    let a = agreement_matrix(e, pool);
    let q = pool.len() as f64;
    let per_classifier = a.iter().map(|row| -(row.iter().sum::<i64>() as f64) / q).collect();
    Ok(DiversityReport {
        per_classifier,
        pool_size: pool.len(),
        pool_digest: pool_digest(pool),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitOutcome {
    pub ensemble: Ensemble,
    /// Indices (into the input ensemble) of removed members, in removal order.
    pub removed: Vec<usize>,
}

/// Shrink `e` to `e.max_size` by repeatedly dropping the least diverse
/// member. Ties go to the oldest member (smallest creation step, then
/// position). The initial classifier is never a candidate when
/// `exempt_initial` is set.
pub fn enforce_limit(e: &Ensemble, pool: &[FeatureVector], exempt_initial: bool) -> Result<LimitOutcome> {
    if e.len() <= e.max_size {
        return Ok(LimitOutcome {
            ensemble: e.clone(),
            removed: Vec::new(),
        });
    }
    check_pool(e, pool)?;
    let a = agreement_matrix(e, pool);
    let mut alive: Vec<usize> = (0..e.len()).collect();
    let mut removed = Vec::new();
    while alive.len() > e.max_size {
        // D_i = -(sum of agreements)/Q, so minimum D = maximum agreement sum.
        let victim = alive
            .iter()
            .copied()
            .filter(|&i| !(exempt_initial && e.classifiers[i].is_initial))
            .max_by(|&i, &j| {
                let si: i64 = alive.iter().filter(|&&k| k != i).map(|&k| a[i][k]).sum();
                let sj: i64 = alive.iter().filter(|&&k| k != j).map(|&k| a[j][k]).sum();
                si.cmp(&sj).then_with(|| {
                    let (ci, cj) = (e.classifiers[i].creation_step, e.classifiers[j].creation_step);
                    cj.cmp(&ci).then(j.cmp(&i))
                })
            });
        let Some(victim) = victim else { break };
        alive.retain(|&i| i != victim);
        removed.push(victim);
    }
    Ok(LimitOutcome {
        ensemble: Ensemble {
            classifiers: alive.iter().map(|&i| e.classifiers[i].clone()).collect(),
            ..e.clone()
        },
        removed,
    })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct UpdateReport {
    pub updated: Option<Identity>,
    /// Set when the new classifier did not reach the solver tolerance.
    pub svm_converged: bool,
    /// Members removed by the limitation step (indices into the ensemble
    /// after the new classifier was appended).
    pub limited: Vec<usize>,
}

/// Add a classifier trained on the hardest frames of `s` to the ensemble of
/// the predicted identity. No-op for UNKNOWN outcomes. On error the state is
/// left untouched.
pub fn self_update(state: &mut SystemState, s: &FrameSequence, outcome: &DecisionOutcome) -> Result<UpdateReport> {
    let Label::Known(id) = &outcome.label else {
        return Ok(UpdateReport::default());
    };
    let ensemble = state
        .ensembles
        .get(id)
        .ok_or_else(|| Error::UnknownIdentity(id.to_string()))?;
    let positives = select_hardest_frames(ensemble, s, state.config.hard_frames)?;

    let mut trial = state.clone();
    let mut rng = trial.next_rng();
    let negatives = draw_negatives(&trial, id, trial.config.negatives, &mut rng)?;
    let svm_cfg = trial.svm_config(&mut rng);
    let fit = train_svm(&positives.frames, &negatives, &svm_cfg)?;
    let converged = fit.converged;
    let unit = make_unit(fit, positives, trial.step_counter, false);

    let mut grown = trial.ensembles[id].clone();
    grown.classifiers.push(unit);
    let mut limited = Vec::new();
    if grown.len() > grown.max_size {
        trial.ensembles.insert(id.clone(), grown.clone());
        let mut pool_rng = trial.next_rng();
        let pool = evaluation_pool(&trial, &mut pool_rng);
        let out = enforce_limit(&grown, &pool, trial.config.exempt_initial)?;
        limited = out.removed;
        grown = out.ensemble;
    }
    trial.ensembles.insert(id.clone(), grown);
    *state = trial;
    Ok(UpdateReport {
        updated: Some(id.clone()),
        svm_converged: converged,
        limited,
    })
}

/// Score `s` against all ensembles and decide, without adapting.
pub fn decide(state: &SystemState, s: &FrameSequence) -> Result<DecisionOutcome> {
    let scores = score_all(state, s)?;
    recognition_decision(&scores, &state.config)
}

/// Decide on `s`, then self-update when the decision is a known identity.
pub fn process_query(state: &mut SystemState, s: &FrameSequence) -> Result<DecisionOutcome> {
    let outcome = decide(state, s)?;
    if outcome.label.is_known() {
        self_update(state, s, &outcome)?;
    }
    state.queries_processed += 1;
    Ok(outcome)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct HealReport {
    /// `(identity, creation_step)` of every removed classifier.
    pub removed: Vec<(Identity, u64)>,
    /// Evaluate-then-remove rounds run before reaching a fixed point.
    pub rounds: usize,
}

/// Re-identify each classifier's stored positives with the full system and
/// drop classifiers whose positives no longer map to their own identity.
///
/// Each round evaluates every eligible classifier against the state as it
/// stood at the start of the round, then removes all failures at once.
/// Rounds repeat until nothing changes, so a second call right after is a
/// no-op. An ensemble is never emptied: if every member fails, the oldest
/// one is kept.
pub fn self_heal(state: &mut SystemState) -> Result<HealReport> {
    let mut report = HealReport::default();
    loop {
        report.rounds += 1;
        let mut doomed: Vec<(Identity, Vec<usize>)> = Vec::new();
        for (id, e) in &state.ensembles {
            let mut bad = Vec::new();
            for (i, h) in e.classifiers.iter().enumerate() {
                if state.config.exempt_initial && h.is_initial {
                    continue;
                }
                let outcome = decide(state, &h.stored_positives)?;
                if outcome.label.identity() != Some(id) {
                    bad.push(i);
                }
            }
            if bad.len() == e.len() {
                bad.remove(0);
            }
            if !bad.is_empty() {
                doomed.push((id.clone(), bad));
            }
        }
        if doomed.is_empty() {
            break;
        }
        for (id, bad) in doomed {
            let e = state.ensembles.get_mut(&id).expect("present");
            let mut i = 0;
            e.classifiers.retain(|h| {
                let drop = bad.contains(&i);
                if drop {
                    report.removed.push((id.clone(), h.creation_step));
                }
                i += 1;
                !drop
            });
        }
    }
    Ok(report)
}
