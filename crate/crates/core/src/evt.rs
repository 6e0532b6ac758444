//! Recognition decision based on extreme value theory.
//!
//! Raw scores are negated so that the best match becomes the minimum `c`.
//! The remaining scores are centred on their median `m`; absolute deviations
//! of those lying below `m` form the non-match tail, which is fitted with a
//! two-parameter Weibull by maximum likelihood. The candidate is accepted as
//! known when its own deviation `|c - m|` lies so far in that tail that the
//! fitted survival probability drops below `T_W`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring::median;
use crate::types::{DecisionOutcome, HyperParams, Label, ScoreVector};

/// Relative tolerance on the shape parameter.
const SHAPE_RTOL: f64 = 1e-10;
const MAX_SHAPE: f64 = 1e6;
const MIN_SHAPE: f64 = 1e-6;
const MAX_NEWTON_ITERS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullParams {
    pub shape: f64,
    pub scale: f64,
}

impl WeibullParams {
    pub fn survival(&self, x: f64) -> f64 {
        weibull_survival(self, x)
    }
}

/// Entrywise negation; turns the best raw score into the minimum.
pub fn transform_scores(raw: &ScoreVector) -> ScoreVector {
    raw.iter().map(|(id, s)| (id.clone(), -s)).collect()
}

/// `exp(-(x/scale)^shape)`, clamped to `[0, 1]`. Negative inputs are treated
/// as zero.
pub fn weibull_survival(p: &WeibullParams, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    (-(x / p.scale).powf(p.shape)).exp().clamp(0.0, 1.0)
}

/// Sums needed by the profile likelihood of the shape `k`, on samples
/// pre-divided by their maximum (so every `ln y <= 0` and nothing overflows).
struct ShapeSums {
    s0: f64,
    s1: f64,
    s2: f64,
}

fn shape_sums(ln_y: &[f64], k: f64) -> ShapeSums {
    let mut sums = ShapeSums { s0: 0.0, s1: 0.0, s2: 0.0 };
    for &l in ln_y {
        let t = (k * l).exp();
        sums.s0 += t;
        sums.s1 += t * l;
        sums.s2 += t * l * l;
    }
    sums
}

/// Score equation of the profile log-likelihood; strictly increasing in `k`.
fn profile_score(ln_y: &[f64], mean_ln: f64, k: f64) -> (f64, f64) {
    let s = shape_sums(ln_y, k);
    let ratio = s.s1 / s.s0;
    let g = ratio - 1.0 / k - mean_ln;
    let dg = (s.s2 / s.s0 - ratio * ratio) + 1.0 / (k * k);
    (g, dg)
}

/// Maximum-likelihood two-parameter Weibull fit.
///
/// The shape solves the profile score equation by Newton steps safeguarded
/// with bisection on a bracketing interval; the scale follows in closed form.
pub fn fit_weibull(samples: &[f64], min_tail_size: usize) -> Result<WeibullParams> {
    if samples.len() < min_tail_size.max(2) {
        return Err(Error::InsufficientTail {
            found: samples.len(),
            required: min_tail_size.max(2),
        });
    }
    if let Some(&bad) = samples.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        return Err(Error::InvalidTailSample(bad));
    }
    let max = samples.iter().copied().fold(f64::MIN, f64::max);
    let min = samples.iter().copied().fold(f64::MAX, f64::min);
    if max - min <= max * 1e-12 {
        return Err(Error::DegenerateTail);
    }

    let ln_y: Vec<f64> = samples.iter().map(|x| (x / max).ln()).collect();
    let mean_ln = ln_y.iter().sum::<f64>() / ln_y.len() as f64;

    let (mut lo, mut hi) = (1.0, 1.0);
    if profile_score(&ln_y, mean_ln, 1.0).0 < 0.0 {
        while profile_score(&ln_y, mean_ln, hi).0 < 0.0 {
            lo = hi;
            hi *= 2.0;
            if hi > MAX_SHAPE {
                return Err(Error::DegenerateTail);
            }
        }
    } else {
        while profile_score(&ln_y, mean_ln, lo).0 >= 0.0 {
            hi = lo;
            lo *= 0.5;
            if lo < MIN_SHAPE {
                return Err(Error::DegenerateTail);
            }
        }
    }

    let mut k = 0.5 * (lo + hi);
    for _ in 0..MAX_NEWTON_ITERS {
        let (g, dg) = profile_score(&ln_y, mean_ln, k);
        if g < 0.0 {
            lo = k;
        } else {
            hi = k;
        }
        let mut next = k - g / dg;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        let done = (next - k).abs() <= SHAPE_RTOL * next || (hi - lo) <= SHAPE_RTOL * k;
        k = next;
        if done {
            break;
        }
    }

    let s0 = shape_sums(&ln_y, k).s0;
    let scale = max * (s0 / ln_y.len() as f64).powf(1.0 / k);
    if !(scale.is_finite() && scale > 0.0 && k.is_finite()) {
        return Err(Error::DegenerateTail);
    }
    Ok(WeibullParams { shape: k, scale })
}

/// Pieces of one decision, exposed for inspection and testing.
#[derive(Debug, Clone, PartialEq)]
pub struct TailAnalysis {
    /// Transformed score of the best candidate.
    pub candidate: f64,
    /// Median of the transformed scores without the candidate.
    pub center: f64,
    pub deviations: Vec<f64>,
    pub fit: Option<WeibullParams>,
}

/// Known-vs-unknown decision on one score vector.
pub fn recognition_decision(raw: &ScoreVector, cfg: &HyperParams) -> Result<DecisionOutcome> {
    let (outcome, _) = recognition_decision_detailed(raw, cfg)?;
    Ok(outcome)
}

pub fn recognition_decision_detailed(
    raw: &ScoreVector,
    cfg: &HyperParams,
) -> Result<(DecisionOutcome, Option<TailAnalysis>)> {
    if raw.is_empty() {
        return Err(Error::EmptyInput("score vector"));
    }
    let transformed = transform_scores(raw);

    // Strict comparison keeps the lexicographically first label on ties.
    let mut best: Option<(&crate::types::Identity, f64)> = None;
    for (id, t) in transformed.iter() {
        if best.is_none_or(|(_, b)| t < b) {
            best = Some((id, t));
        }
    }
    let (best_id, c) = best.expect("non-empty");

    let unknown = |tail: Option<f64>| DecisionOutcome {
        label: Label::Unknown,
        raw_scores: raw.clone(),
        tail_probability: tail,
    };

    let rest: Vec<f64> = transformed
        .iter()
        .filter(|(id, _)| *id != best_id)
        .map(|(_, t)| t)
        .collect();
    let Some(m) = median(&rest) else {
        return Ok((unknown(None), None));
    };
    let deviations: Vec<f64> = rest.iter().filter(|&&x| x < m).map(|x| (x - m).abs()).collect();
    let mut analysis = TailAnalysis {
        candidate: c,
        center: m,
        deviations,
        fit: None,
    };
    let fit = match fit_weibull(&analysis.deviations, cfg.min_tail_size) {
        Ok(p) => p,
        Err(Error::InsufficientTail { .. }) | Err(Error::DegenerateTail) => {
            return Ok((unknown(None), Some(analysis)));
        }
        Err(e) => return Err(e),
    };
    analysis.fit = Some(fit);
    let tail = weibull_survival(&fit, (c - m).abs());
    let outcome = if tail < cfg.tail_threshold {
        DecisionOutcome {
            label: Label::Known(best_id.clone()),
            raw_scores: raw.clone(),
            tail_probability: Some(tail),
        }
    } else {
        unknown(Some(tail))
    };
    Ok((outcome, Some(analysis)))
}
