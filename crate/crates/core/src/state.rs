//! Whole-system state: every ensemble plus the bookkeeping needed to replay a
//! run deterministically.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::svm::{make_unit, train_svm, SvmConfig};
use crate::types::{Ensemble, FeatureVector, FrameSequence, HyperParams, Identity};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub ensembles: BTreeMap<Identity, Ensemble>,
    pub config: HyperParams,
    /// Adaptation-step counter; never decreases.
    pub step_counter: u64,
    pub rng_seed: u64,
    /// Number of random streams consumed so far.
    pub draw_counter: u64,
    pub queries_processed: u64,
}

impl SystemState {
    /// Empty system; use [`SystemState::initialize`] to enrol identities.
    pub fn empty(config: HyperParams, rng_seed: u64) -> Self {
        SystemState {
            ensembles: BTreeMap::new(),
            config,
            step_counter: 0,
            rng_seed,
            draw_counter: 0,
            queries_processed: 0,
        }
    }

    /// Build one single-classifier ensemble per labelled sequence. Each
    /// initial classifier uses its own frames as positives and a random draw
    /// from the other identities' labelled frames as negatives.
    pub fn initialize(
        labelled: &[(Identity, FrameSequence)],
        config: HyperParams,
        rng_seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        if labelled.is_empty() {
            return Err(Error::EmptyInput("no labelled sequences"));
        }
        let d = labelled[0]
            .1
            .dim()
            .ok_or(Error::EmptyInput("labelled sequence"))?;
        let mut by_id: BTreeMap<Identity, FrameSequence> = BTreeMap::new();
        for (id, seq) in labelled {
            if seq.is_empty() {
                return Err(Error::EmptyInput("labelled sequence"));
            }
            for f in &seq.frames {
                crate::types::check_vector(f, d)?;
            }
            if by_id.insert(id.clone(), seq.clone()).is_some() {
                return Err(Error::InvalidConfig(format!("identity {id} enrolled twice")));
            }
        }

        let mut state = SystemState::empty(config, rng_seed);
        let mut ensembles = BTreeMap::new();
        for (id, positives) in &by_id {
            let pool: Vec<&FeatureVector> = by_id
                .iter()
                .filter(|(other, _)| *other != id)
                .flat_map(|(_, s)| s.frames.iter())
                .collect();
            if pool.is_empty() {
                return Err(Error::EmptyNegativePool(id.to_string()));
            }
            let mut rng = state.next_rng();
            let negatives = sample_frames(&pool, state.config.negatives, &mut rng);
            let cfg = state.svm_config(&mut rng);
            let fit = train_svm(&positives.frames, &negatives, &cfg)?;
            let unit = make_unit(fit, positives.clone(), 0, true);
            ensembles.insert(id.clone(), Ensemble::new(id.clone(), unit, state.config.max_ensemble));
        }
        state.ensembles = ensembles;
        Ok(state)
    }

    /// Fresh random stream; every call consumes one stream index.
    pub(crate) fn next_rng(&mut self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        rng.set_stream(self.draw_counter);
        self.draw_counter += 1;
        rng
    }

    pub(crate) fn svm_config(&self, rng: &mut ChaCha8Rng) -> SvmConfig {
        use rand::Rng;
        SvmConfig {
            c: self.config.svm_c,
            max_iters: self.config.svm_max_iters,
            tolerance: self.config.svm_tolerance,
            seed: rng.random(),
            ..SvmConfig::default()
        }
    }

    pub fn dim(&self) -> Option<usize> {
        self.ensembles
            .values()
            .flat_map(|e| e.classifiers.first())
            .map(|c| c.model.dim())
            .next()
    }

    pub fn ensemble(&self, id: &Identity) -> Option<&Ensemble> {
        self.ensembles.get(id)
    }

    pub fn identities(&self) -> impl Iterator<Item = &Identity> {
        self.ensembles.keys()
    }

    pub fn mean_ensemble_size(&self) -> f64 {
        if self.ensembles.is_empty() {
            return 0.0;
        }
        let total: usize = self.ensembles.values().map(Ensemble::len).sum();
        total as f64 / self.ensembles.len() as f64
    }

    /// Move to the next adaptation step.
    pub fn advance_step(&mut self) -> u64 {
        self.step_counter += 1;
        self.step_counter
    }

    /// Every stored positive frame of every ensemble, in identity then
    /// classifier order.
    pub(crate) fn all_stored_frames(&self) -> Vec<&FeatureVector> {
        self.ensembles
            .values()
            .flat_map(|e| e.classifiers.iter())
            .flat_map(|c| c.stored_positives.frames.iter())
            .collect()
    }
}

/// Uniform draw of `n` frames without replacement; everything when the pool
/// is smaller than `n`. Output follows pool order.
pub(crate) fn sample_frames<R: rand::Rng + ?Sized>(
    pool: &[&FeatureVector],
    n: usize,
    rng: &mut R,
) -> Vec<FeatureVector> {
    if pool.len() <= n {
        return pool.iter().map(|f| (*f).clone()).collect();
    }
    let mut picked = index::sample(rng, pool.len(), n).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| pool[i].clone()).collect()
}
