//! Sequence scoring: collapse the `n_F x M^k` classifier responses of one
//! ensemble on one sequence into a single score.
//!
//! Frame level takes the median over classifiers, sequence level the median
//! over frames. Scores stay in raw orientation (higher = better match).

use crate::error::{Error, Result};
use crate::state::SystemState;
use crate::types::{check_vector, Ensemble, FeatureVector, FrameSequence, ScoreVector};

/// Median with the even-count convention of averaging the two central values.
/// Returns `None` for an empty slice.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    let n = v.len();
    let mid = n / 2;
    let (_, upper, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        Some(upper)
    } else {
        let lower = v[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(0.5 * (lower + upper))
    }
}

fn ensemble_dim(e: &Ensemble) -> Result<usize> {
    e.classifiers
        .first()
        .map(|c| c.model.dim())
        .ok_or_else(|| Error::EmptyEnsemble(e.identity.to_string()))
}

/// Median of the ensemble members' responses to `x`.
pub fn frame_score(e: &Ensemble, x: &FeatureVector) -> Result<f64> {
    let d = ensemble_dim(e)?;
    check_vector(x, d)?;
    Ok(frame_score_unchecked(e, x))
}

pub(crate) fn frame_score_unchecked(e: &Ensemble, x: &FeatureVector) -> f64 {
    let responses: Vec<f64> = e
        .classifiers
        .iter()
        .map(|h| h.model.decision_unchecked(x.values()))
        .collect();
    median(&responses).expect("non-empty ensemble")
}

/// Per-frame scores of `s` under `e`, in temporal order.
pub fn frame_scores(e: &Ensemble, s: &FrameSequence) -> Result<Vec<f64>> {
    let d = ensemble_dim(e)?;
    if s.is_empty() {
        return Err(Error::EmptyInput("frame sequence"));
    }
    s.frames
        .iter()
        .map(|x| {
            check_vector(x, d)?;
            Ok(frame_score_unchecked(e, x))
        })
        .collect()
}

/// Median over frames of [`frame_score`].
pub fn sequence_score(e: &Ensemble, s: &FrameSequence) -> Result<f64> {
    let scores = frame_scores(e, s)?;
    Ok(median(&scores).expect("non-empty sequence"))
}

/// Score `s` against every ensemble in `state`.
pub fn score_all(state: &SystemState, s: &FrameSequence) -> Result<ScoreVector> {
    if state.ensembles.is_empty() {
        return Err(Error::EmptyInput("system has no ensembles"));
    }
    state
        .ensembles
        .iter()
        .map(|(id, e)| Ok((id.clone(), sequence_score(e, s)?)))
        .collect()
}
