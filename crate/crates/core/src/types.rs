//! Domain vocabulary shared by the engine, the harness and the CLI.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default embedding dimension produced by the face encoder.
pub const DEFAULT_DIM: usize = 512;

/// Opaque identity label. Ordering is lexicographic on the label text and is
/// used for every tie-break in the engine.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Identity(pub String);

impl Identity {
    pub fn new(label: impl Into<String>) -> Self {
        Identity(label.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Identity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Identity {
    fn from(s: &str) -> Self {
        Identity(s.to_owned())
    }
}

/// Embedding of one video frame. Values are used as-is; normalisation is the
/// producer's job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Self {
        FeatureVector(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        dot(&self.0, other)
    }
}

impl From<Vec<f64>> for FeatureVector {
    fn from(v: Vec<f64>) -> Self {
        FeatureVector(v)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// True iff `v` has exactly `d` entries and all of them are finite.
pub fn validate_vector(v: &FeatureVector, d: usize) -> bool {
    v.dim() == d && v.0.iter().all(|x| x.is_finite())
}

pub(crate) fn check_vector(v: &FeatureVector, d: usize) -> Result<()> {
    if v.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: v.dim(),
        });
    }
    if !v.0.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// Temporally ordered frames assumed to share one identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSequence {
    pub frames: Vec<FeatureVector>,
    /// Ground truth, only known for evaluation and for labelled sequences.
    pub source_identity: Option<Identity>,
    pub sequence_index: usize,
    pub lap: usize,
}

impl FrameSequence {
    pub fn new(frames: Vec<FeatureVector>) -> Self {
        FrameSequence {
            frames,
            source_identity: None,
            sequence_index: 0,
            lap: 0,
        }
    }

    pub fn labelled(frames: Vec<FeatureVector>, identity: Identity, sequence_index: usize) -> Self {
        FrameSequence {
            frames,
            source_identity: Some(identity),
            sequence_index,
            lap: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Same sequence restricted to its first `n` frames.
    pub fn prefix(&self, n: usize) -> FrameSequence {
        FrameSequence {
            frames: self.frames.iter().take(n).cloned().collect(),
            ..self.clone()
        }
    }

    pub fn dim(&self) -> Option<usize> {
        self.frames.first().map(FeatureVector::dim)
    }
}

/// Linear decision function `w·x + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn new(weights: Vec<f64>, bias: f64) -> Self {
        LinearModel { weights, bias }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn decision(&self, x: &FeatureVector) -> Result<f64> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.dim(),
            });
        }
        Ok(self.decision_unchecked(x.values()))
    }

    #[inline]
    pub(crate) fn decision_unchecked(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }
}

/// One ensemble member: a trained linear classifier and the positive frames it
/// was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierUnit {
    pub model: LinearModel,
    pub stored_positives: FrameSequence,
    pub creation_step: u64,
    pub is_initial: bool,
}

impl ClassifierUnit {
    pub fn weights(&self) -> &[f64] {
        &self.model.weights
    }

    pub fn bias(&self) -> f64 {
        self.model.bias
    }
}

/// Ensemble of classifiers attached to one identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub identity: Identity,
    pub classifiers: Vec<ClassifierUnit>,
    pub max_size: usize,
}

impl Ensemble {
    pub fn new(identity: Identity, initial: ClassifierUnit, max_size: usize) -> Self {
        Ensemble {
            identity,
            classifiers: vec![initial],
            max_size,
        }
    }

    pub fn len(&self) -> usize {
        self.classifiers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classifiers.is_empty()
    }

    pub fn initial_count(&self) -> usize {
        self.classifiers.iter().filter(|c| c.is_initial).count()
    }
}

/// Output label of the recognition decision.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    Known(Identity),
    Unknown,
}

impl Label {
    pub fn identity(&self) -> Option<&Identity> {
        match self {
            Label::Known(id) => Some(id),
            Label::Unknown => None,
        }
    }

    pub fn is_known(&self) -> bool {
        matches!(self, Label::Known(_))
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Known(id) => write!(f, "{id}"),
            Label::Unknown => f.write_str("UNKNOWN"),
        }
    }
}

/// One sequence score per live ensemble, in raw orientation (higher is a
/// better match).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScoreVector(pub BTreeMap<Identity, f64>);

impl ScoreVector {
    pub fn new() -> Self {
        ScoreVector(BTreeMap::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, id: &Identity) -> Option<f64> {
        self.0.get(id).copied()
    }

    pub fn insert(&mut self, id: Identity, score: f64) {
        self.0.insert(id, score);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Identity, f64)> {
        self.0.iter().map(|(k, v)| (k, *v))
    }

    /// Identity with the highest score; ties go to the smallest label.
    pub fn argmax(&self) -> Option<&Identity> {
        let mut best: Option<(&Identity, f64)> = None;
        for (id, s) in self.iter() {
            match best {
                Some((_, b)) if s <= b => {}
                _ => best = Some((id, s)),
            }
        }
        best.map(|(id, _)| id)
    }
}

impl FromIterator<(Identity, f64)> for ScoreVector {
    fn from_iter<T: IntoIterator<Item = (Identity, f64)>>(iter: T) -> Self {
        ScoreVector(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionOutcome {
    pub label: Label,
    pub raw_scores: ScoreVector,
    /// Tail survival value of the best candidate; absent when the fallback fired.
    pub tail_probability: Option<f64>,
}

/// Engine hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperParams {
    /// Weibull tail threshold `T_W`.
    pub tail_threshold: f64,
    /// Maximum ensemble size `M`.
    pub max_ensemble: usize,
    /// Adaptation steps between self-healing passes.
    pub heal_period: usize,
    /// Hardest frames used as positives for a self-update.
    pub hard_frames: usize,
    /// Negatives drawn for every new classifier.
    pub negatives: usize,
    pub exempt_initial: bool,
    pub svm_c: f64,
    pub svm_tolerance: f64,
    pub svm_max_iters: usize,
    pub min_tail_size: usize,
    /// Cap on the diversity evaluation pool.
    pub eval_pool_cap: usize,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            tail_threshold: 0.01,
            max_ensemble: 10,
            heal_period: 5,
            hard_frames: 5,
            negatives: 100,
            exempt_initial: true,
            svm_c: 1.0,
            svm_tolerance: 1e-3,
            svm_max_iters: 1000,
            min_tail_size: 3,
            eval_pool_cap: 2000,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: &str| {
            Err(Error::InvalidConfig(format!("hyperparams.{field}: {why}")))
        };
        if !(self.tail_threshold > 0.0 && self.tail_threshold < 1.0) {
            return bad("tail_threshold", "must lie in (0, 1)");
        }
        if self.max_ensemble == 0 {
            return bad("max_ensemble", "must be positive");
        }
        if self.heal_period == 0 {
            return bad("heal_period", "must be positive");
        }
        if self.hard_frames == 0 {
            return bad("hard_frames", "must be positive");
        }
        if self.negatives == 0 {
            return bad("negatives", "must be positive");
        }
        if !(self.svm_c > 0.0 && self.svm_c.is_finite()) {
            return bad("svm_c", "must be a positive real");
        }
        if !(self.svm_tolerance > 0.0 && self.svm_tolerance.is_finite()) {
            return bad("svm_tolerance", "must be a positive real");
        }
        if self.svm_max_iters == 0 {
            return bad("svm_max_iters", "must be at least 1");
        }
        if self.min_tail_size == 0 {
            return bad("min_tail_size", "must be positive");
        }
        if self.eval_pool_cap == 0 {
            return bad("eval_pool_cap", "must be positive");
        }
        Ok(())
    }
}
