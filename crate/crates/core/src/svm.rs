//! Soft-margin linear SVM trained by dual coordinate descent.
//!
//! The bias is folded into the weight vector through a constant feature of
//! value [`SvmConfig::bias_feature`], so the solved problem is
//!
//! ```text
//! min_{w,b}  1/2 (|w|^2 + b^2) + sum_i C_i max(0, 1 - y_i (w.x_i + b))
//! ```
//!
//! with per-class costs `C_i = C * n / (2 n_{y_i})` so that five positives are
//! not drowned by a hundred negatives. The dual is solved one coordinate at a
//! time over a seeded random permutation of the samples, stopping once the
//! projected-gradient spread falls below `tolerance`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::types::{check_vector, dot, ClassifierUnit, FeatureVector, FrameSequence, LinearModel};

#[derive(Debug, Clone, PartialEq)]
pub struct SvmConfig {
    pub c: f64,
    pub max_iters: usize,
    pub tolerance: f64,
    pub seed: u64,
    /// Value of the constant feature carrying the bias.
    pub bias_feature: f64,
    /// Keep per-epoch objective values in [`SvmFit::trace`].
    pub record_trace: bool,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            max_iters: 1000,
            tolerance: 1e-3,
            seed: 0,
            bias_feature: 1.0,
            record_trace: false,
        }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidConfig("svm C must be positive".into()));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::InvalidConfig("svm tolerance must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("svm max_iters must be >= 1".into()));
        }
        if !self.bias_feature.is_finite() {
            return Err(Error::InvalidConfig("svm bias feature must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochTrace {
    pub dual: f64,
    pub primal: f64,
    /// Primal value of the iterate that would be returned after this epoch.
    pub best_primal: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmFit {
    pub model: LinearModel,
    pub epochs: usize,
    /// False when the iteration budget ran out before the tolerance was met.
    pub converged: bool,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub trace: Vec<EpochTrace>,
}

struct Problem<'a> {
    xs: Vec<&'a [f64]>,
    ys: Vec<f64>,
    upper: Vec<f64>,
    bias_feature: f64,
}

impl Problem<'_> {
    fn margin(&self, w: &[f64], b: f64, i: usize) -> f64 {
        self.ys[i] * (dot(w, self.xs[i]) + b * self.bias_feature)
    }

    fn primal(&self, w: &[f64], b: f64) -> f64 {
        let reg = 0.5 * (dot(w, w) + b * b);
        let loss: f64 = (0..self.xs.len())
            .map(|i| self.upper[i] * (1.0 - self.margin(w, b, i)).max(0.0))
            .sum();
        reg + loss
    }
}

/// Train a linear classifier separating `positives` (+1) from `negatives` (-1).
pub fn train_svm(
    positives: &[FeatureVector],
    negatives: &[FeatureVector],
    cfg: &SvmConfig,
) -> Result<SvmFit> {
    cfg.validate()?;
    if positives.is_empty() {
        return Err(Error::EmptyInput("svm positives"));
    }
    if negatives.is_empty() {
        return Err(Error::EmptyInput("svm negatives"));
    }
    let d = positives[0].dim();
    for v in positives.iter().chain(negatives) {
        check_vector(v, d)?;
    }

    let n = (positives.len() + negatives.len()) as f64;
    let c_pos = cfg.c * n / (2.0 * positives.len() as f64);
    let c_neg = cfg.c * n / (2.0 * negatives.len() as f64);
    let mut prob = Problem {
        xs: Vec::with_capacity(n as usize),
        ys: Vec::with_capacity(n as usize),
        upper: Vec::with_capacity(n as usize),
        bias_feature: cfg.bias_feature,
    };
    for p in positives {
        prob.xs.push(p.values());
        prob.ys.push(1.0);
        prob.upper.push(c_pos);
    }
    for q in negatives {
        prob.xs.push(q.values());
        prob.ys.push(-1.0);
        prob.upper.push(c_neg);
    }
    Ok(solve_dual(&prob, d, cfg))
}

fn solve_dual(prob: &Problem, d: usize, cfg: &SvmConfig) -> SvmFit {
    let l = prob.xs.len();
    let bf = prob.bias_feature;
    let diag: Vec<f64> = prob.xs.iter().map(|x| dot(x, x) + bf * bf).collect();
    let mut alpha = vec![0.0; l];
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut order: Vec<usize> = (0..l).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut best = (w.clone(), b, prob.primal(&w, b));
    let mut trace = Vec::new();
    let mut converged = false;
    let mut epochs = 0;

    while epochs < cfg.max_iters {
        order.shuffle(&mut rng);
        let mut pg_max = f64::NEG_INFINITY;
        let mut pg_min = f64::INFINITY;
        for &i in &order {
            let g = prob.margin(&w, b, i) - 1.0;
            let pg = if alpha[i] <= 0.0 {
                g.min(0.0)
            } else if alpha[i] >= prob.upper[i] {
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg.abs() > 1e-14 && diag[i] > 0.0 {
                let old = alpha[i];
                alpha[i] = (old - g / diag[i]).clamp(0.0, prob.upper[i]);
                let step = (alpha[i] - old) * prob.ys[i];
                if step != 0.0 {
                    for (wj, xj) in w.iter_mut().zip(prob.xs[i]) {
                        *wj += step * xj;
                    }
                    b += step * bf;
                }
            }
        }
        epochs += 1;

        let primal = prob.primal(&w, b);
        if primal < best.2 {
            best = (w.clone(), b, primal);
        }
        if cfg.record_trace {
            trace.push(EpochTrace {
                dual: dual_objective(&alpha, &w, b),
                primal,
                best_primal: best.2,
            });
        }
        if pg_max - pg_min <= cfg.tolerance {
            converged = true;
            break;
        }
    }

    // The converged iterate is the one whose optimality the tolerance certifies.
    let dual = dual_objective(&alpha, &w, b);
    let (w, b, primal) = if converged {
        let p = prob.primal(&w, b);
        (w, b, p)
    } else {
        best
    };
    SvmFit {
        model: LinearModel::new(w, b * bf),
        epochs,
        converged,
        primal_objective: primal,
        dual_objective: dual,
        trace,
    }
}

fn dual_objective(alpha: &[f64], w: &[f64], b: f64) -> f64 {
    alpha.iter().sum::<f64>() - 0.5 * (dot(w, w) + b * b)
}

/// Response `w·x + b` of a classifier; higher means more likely the
/// ensemble's identity.
pub fn decision_value(h: &ClassifierUnit, x: &FeatureVector) -> Result<f64> {
    h.model.decision(x)
}

/// Wrap a fitted model together with the positives it was trained on.
pub fn make_unit(fit: SvmFit, positives: FrameSequence, creation_step: u64, is_initial: bool) -> ClassifierUnit {
    ClassifierUnit {
        model: fit.model,
        stored_positives: positives,
        creation_step,
        is_initial,
    }
}
