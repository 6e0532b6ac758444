#![allow(dead_code, clippy::needless_range_loop)]

use nalgebra::{DMatrix, DVector};
use openset_core::harness::{generate_universe, DataSource, SyntheticUniverseSpec};
use openset_core::{FeatureVector, FrameSequence, Identity};

pub fn fv(v: &[f64]) -> FeatureVector {
    FeatureVector(v.to_vec())
}

pub fn fvs(rows: &[[f64; 2]]) -> Vec<FeatureVector> {
    rows.iter().map(|r| fv(r)).collect()
}

/// Fixed 8-point 2-D training set: four positives, four negatives, not
/// linearly separable (one negative sits among the positives).
pub const QP_POS: [[f64; 2]; 4] = [[2.0, 2.0], [3.0, 1.0], [2.5, 3.0], [0.5, 0.2]];
pub const QP_NEG: [[f64; 2]; 4] = [[-1.0, -1.0], [-2.0, 0.5], [-0.5, -2.0], [1.0, 0.3]];

/// Weights and bias of the QP optimum on `QP_POS`/`QP_NEG` with C = 1,
/// frozen from [`qp_oracle`].
pub const QP_FROZEN: ([f64; 2], f64) = ([0.4, 4.0 / 15.0], -1.0 / 3.0);

/// Exact box-constrained dual solution by enumeration of active sets.
///
/// Solves `max sum(a) - 1/2 a'Qa`, `0 <= a_i <= c_i`, with
/// `Q_ij = y_i y_j (x_i.x_j + 1)`. Every split of the indices into
/// lower-bound, upper-bound and free sets is tried; the free block is
/// solved linearly and the best point satisfying all KKT conditions wins.
pub fn qp_oracle(pos: &[FeatureVector], neg: &[FeatureVector], c: f64) -> (Vec<f64>, f64) {
    let xs: Vec<&FeatureVector> = pos.iter().chain(neg).collect();
    let ys: Vec<f64> = pos.iter().map(|_| 1.0).chain(neg.iter().map(|_| -1.0)).collect();
    let n = xs.len();
    let cp = c * n as f64 / (2.0 * pos.len() as f64);
    let cn = c * n as f64 / (2.0 * neg.len() as f64);
    let upper: Vec<f64> = ys.iter().map(|&y| if y > 0.0 { cp } else { cn }).collect();
    let q = DMatrix::from_fn(n, n, |i, j| {
        let k: f64 = xs[i].0.iter().zip(&xs[j].0).map(|(a, b)| a * b).sum::<f64>() + 1.0;
        ys[i] * ys[j] * k
    });

    let mut best: Option<(f64, DVector<f64>)> = None;
    for code in 0..3usize.pow(n as u32) {
        // 0 = at zero, 1 = at upper bound, 2 = free
        let mut state = vec![0u8; n];
        let mut rest = code;
        for s in state.iter_mut() {
            *s = (rest % 3) as u8;
            rest /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut alpha = DVector::from_fn(n, |i, _| if state[i] == 1 { upper[i] } else { 0.0 });
        if !free.is_empty() {
            let qff = DMatrix::from_fn(free.len(), free.len(), |a, b| q[(free[a], free[b])]);
            let qa = &q * &alpha;
            let rhs = DVector::from_fn(free.len(), |a, _| 1.0 - qa[free[a]]);
            let Some(sol) = qff.lu().solve(&rhs) else { continue };
            for (a, &i) in free.iter().enumerate() {
                alpha[i] = sol[a];
            }
        }
        let eps = 1e-9;
        if (0..n).any(|i| alpha[i] < -eps || alpha[i] > upper[i] + eps) {
            continue;
        }
        let grad = &q * &alpha - DVector::from_element(n, 1.0);
        let kkt = (0..n).all(|i| match state[i] {
            0 => grad[i] >= -1e-7,
            1 => grad[i] <= 1e-7,
            _ => grad[i].abs() <= 1e-7,
        });
        if !kkt {
            continue;
        }
        let obj = alpha.sum() - 0.5 * (alpha.transpose() * &q * &alpha)[(0, 0)];
        if best.as_ref().is_none_or(|(o, _)| obj > *o) {
            best = Some((obj, alpha));
        }
    }
    let (_, alpha) = best.expect("a KKT point exists");
    let d = xs[0].0.len();
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    for i in 0..n {
        for (wj, xj) in w.iter_mut().zip(&xs[i].0) {
            *wj += alpha[i] * ys[i] * xj;
        }
        b += alpha[i] * ys[i];
    }
    (w, b)
}

/// Median computed by full sort, independent of the library helper.
pub fn sort_median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

pub fn id(k: usize) -> Identity {
    Identity::new(format!("id{k:04}"))
}

pub fn seq(frames: Vec<FeatureVector>) -> FrameSequence {
    FrameSequence::new(frames)
}

/// Universe tuned so a static system starts with roughly half the true
/// identities recognised.
pub fn drifting_spec(seed: u64) -> SyntheticUniverseSpec {
    SyntheticUniverseSpec {
        num_identities: 40,
        dim: 64,
        noise: 0.25,
        drift: 1.05,
        frames_per_subsequence: 10,
        subsequences: 9,
        sessions: 3,
        seed,
    }
}

/// Small, well separated universe for fast end-to-end checks.
pub fn tiny_spec(seed: u64) -> SyntheticUniverseSpec {
    SyntheticUniverseSpec {
        num_identities: 24,
        dim: 16,
        noise: 0.1,
        drift: 0.5,
        frames_per_subsequence: 8,
        subsequences: 9,
        sessions: 3,
        seed,
    }
}

pub fn tiny_data(seed: u64) -> DataSource {
    generate_universe(&tiny_spec(seed)).unwrap()
}

pub fn prop_cases(cases: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases,
        failure_persistence: None,
        ..Default::default()
    }
}

pub fn unit(weights: &[f64], bias: f64, step: u64, initial: bool) -> openset_core::ClassifierUnit {
    openset_core::ClassifierUnit {
        model: openset_core::LinearModel::new(weights.to_vec(), bias),
        stored_positives: FrameSequence::new(vec![fv(&vec![0.0; weights.len()])]),
        creation_step: step,
        is_initial: initial,
    }
}

pub fn ensemble(name: &str, units: Vec<openset_core::ClassifierUnit>, max_size: usize) -> openset_core::Ensemble {
    openset_core::Ensemble {
        identity: Identity::new(name),
        classifiers: units,
        max_size,
    }
}

pub fn score_vector(values: &[f64]) -> openset_core::ScoreVector {
    values.iter().enumerate().map(|(k, &v)| (id(k), v)).collect()
}

pub fn weibull_pdf(k: f64, lambda: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    (k / lambda) * (x / lambda).powf(k - 1.0) * (-(x / lambda).powf(k)).exp()
}

/// Adaptive Simpson quadrature.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64, eps: f64, whole: f64, m: f64, fm: f64, depth: u32) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * eps {
            return left + right + delta / 15.0;
        }
        rec(f, a, fa, m, fm, eps / 2.0, left, lm, flm, depth - 1) + rec(f, m, fm, b, fb, eps / 2.0, right, rm, frm, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, eps, whole, m, fm, 50)
}

/// Inverse-CDF draws from Weibull(k, lambda).
pub fn weibull_samples(k: f64, lambda: f64, n: usize, seed: u64) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let u: f64 = rng.random::<f64>();
            lambda * (-(1.0 - u).ln()).powf(1.0 / k)
        })
        .collect()
}

/// `n` raw scores drawn i.i.d. from N(0, 1).
pub fn normal_scores(n: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Vec<f64> {
    use rand_distr::{Distribution, StandardNormal};
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Fraction of `trials` i.i.d. score vectors of length 100 declared known.
pub fn false_known_rate(tail_threshold: f64, trials: usize, seed: u64) -> f64 {
    use rand::SeedableRng;
    let cfg = openset_core::HyperParams { tail_threshold, ..Default::default() };
    let mut known = 0;
    for t in 0..trials {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed.wrapping_add(t as u64));
        let raw = score_vector(&normal_scores(100, &mut rng));
        if openset_core::recognition_decision(&raw, &cfg).unwrap().label.is_known() {
            known += 1;
        }
    }
    known as f64 / trials as f64
}

/// Fraction of trials where a score 10 standard deviations above 99 i.i.d.
/// N(0, 1) scores is returned as the known identity.
pub fn outlier_detection_rate(trials: usize, seed: u64) -> f64 {
    use rand::{Rng, SeedableRng};
    let cfg = openset_core::HyperParams::default();
    let mut hits = 0;
    for t in 0..trials {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed.wrapping_add(t as u64));
        let mut values = normal_scores(99, &mut rng);
        let at = rng.random_range(0..100);
        values.insert(at, 10.0);
        let out = openset_core::recognition_decision(&score_vector(&values), &cfg).unwrap();
        if out.label.identity() == Some(&id(at)) {
            hits += 1;
        }
    }
    hits as f64 / trials as f64
}

/// Diversity scores by direct double summation in floating point.
pub fn oracle_diversity(e: &openset_core::Ensemble, pool: &[FeatureVector]) -> Vec<f64> {
    let sgn = |v: f64| if v < 0.0 { -1.0 } else { 1.0 };
    let m = e.classifiers.len();
    let q = pool.len() as f64;
    let mut out = vec![0.0; m];
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            let mut agree = 0.0;
            for x in pool {
                let hi = e.classifiers[i].model.decision(x).unwrap();
                let hj = e.classifiers[j].model.decision(x).unwrap();
                agree += sgn(hi) * sgn(hj);
            }
            out[i] += -agree / q;
        }
    }
    out
}

/// Index of the member an oracle limitation step removes: minimum D, ties
/// to the smallest creation step then position, skipping the initial
/// classifier when exempt.
pub fn oracle_victim(e: &openset_core::Ensemble, pool: &[FeatureVector], exempt_initial: bool) -> usize {
    let d = oracle_diversity(e, pool);
    (0..d.len())
        .filter(|&i| !(exempt_initial && e.classifiers[i].is_initial))
        .min_by(|&a, &b| {
            let tie = (d[a] - d[b]).abs() < 1e-9;
            let order = if tie { std::cmp::Ordering::Equal } else { d[a].partial_cmp(&d[b]).unwrap() };
            order
                .then(e.classifiers[a].creation_step.cmp(&e.classifiers[b].creation_step))
                .then(a.cmp(&b))
        })
        .unwrap()
}

/// Initialise a system on the first `n` identities of `data`, enrolled from
/// the first `frames` frames of sub-sequence 0.
pub fn enrolled(data: &DataSource, n: usize, frames: usize, seed: u64) -> openset_core::SystemState {
    let labelled: Vec<(Identity, FrameSequence)> = data
        .identities()
        .into_iter()
        .take(n)
        .map(|who| {
            let s = data.sequence(&who, 0).unwrap().prefix(frames);
            (who, s)
        })
        .collect();
    openset_core::SystemState::initialize(&labelled, openset_core::HyperParams::default(), seed).unwrap()
}

/// Append a classifier trained on identity `j`'s frames to ensemble `k`,
/// heal, and report whether the planted classifier is gone.
pub fn planted_update_removed(seed: u64) -> bool {
    let data = tiny_data(seed);
    let mut state = enrolled(&data, 12, 5, seed);
    let ids = data.identities();
    let k = ids[(seed % 12) as usize].clone();
    let j = ids[((seed + 1 + seed / 12 % 11) % 12) as usize].clone();
    let step = state.advance_step();
    let wrong = openset_core::DecisionOutcome {
        label: openset_core::Label::Known(k.clone()),
        raw_scores: openset_core::ScoreVector::new(),
        tail_probability: None,
    };
    let s = data.sequence(&j, 1 + (seed % 7) as usize).unwrap().clone();
    openset_core::self_update(&mut state, &s, &wrong).unwrap();
    assert_eq!(state.ensembles[&k].len(), 2);
    state.advance_step();
    openset_core::self_heal(&mut state).unwrap();
    !state.ensembles[&k].classifiers.iter().any(|h| h.creation_step == step)
}
