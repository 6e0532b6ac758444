//! Seeded synthetic stand-in for encoder output.
//!
//! Each identity `k` owns a unit direction `mu_k`. Sub-sequences are grouped
//! into consecutive sessions (camera changes); session `m` of identity `k`
//! adds an offset `o_km` of norm `drift`. A frame is
//! `normalize(mu_k + o_km + eps)` with `eps ~ N(0, noise^2 I)`.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::data::DataSource;
use crate::types::{FeatureVector, FrameSequence, Identity};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticUniverseSpec {
    pub num_identities: usize,
    pub dim: usize,
    /// Per-coordinate standard deviation of frame noise.
    pub noise: f64,
    /// Norm of every session offset.
    pub drift: f64,
    pub frames_per_subsequence: usize,
    /// `f`: sequences `S_0..S_f` are generated, i.e. `f + 1` per identity.
    pub subsequences: usize,
    pub sessions: usize,
    pub seed: u64,
}

impl SyntheticUniverseSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.num_identities == 0 {
            return bad("synthetic.num_identities must be positive".into());
        }
        if self.dim == 0 {
            return bad("synthetic.dim must be positive".into());
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad("synthetic.noise must be >= 0".into());
        }
        if !(self.drift >= 0.0 && self.drift.is_finite()) {
            return bad("synthetic.drift must be >= 0".into());
        }
        if self.frames_per_subsequence == 0 {
            return bad("synthetic.frames_per_subsequence must be positive".into());
        }
        if self.subsequences == 0 {
            return bad("synthetic.subsequences must be positive".into());
        }
        if self.sessions == 0 || self.sessions > self.subsequences + 1 {
            return bad(format!(
                "synthetic.sessions must be in 1..={}",
                self.subsequences + 1
            ));
        }
        Ok(())
    }

    /// Session of sub-sequence `t`: sessions split `0..=f` into consecutive
    /// near-equal blocks (3 sessions over `0..=9` give 0-3, 4-6, 7-9).
    pub fn session_of(&self, t: usize) -> usize {
        t * self.sessions / (self.subsequences + 1)
    }

    pub fn identity_label(&self, k: usize) -> Identity {
        let width = self.num_identities.saturating_sub(1).to_string().len().max(4);
        Identity(format!("id{k:0width$}"))
    }
}

fn gaussian(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| StandardNormal.sample(rng)).collect()
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    v
}

/// Unit direction of identity `k`, as used by [`generate_universe`].
pub fn identity_directions(spec: &SyntheticUniverseSpec) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    (0..spec.num_identities)
        .map(|_| normalize(gaussian(&mut rng, spec.dim)))
        .collect()
}

pub fn generate_universe(spec: &SyntheticUniverseSpec) -> Result<DataSource> {
    spec.validate()?;
    let d = spec.dim;
    let centers = identity_directions(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(1);

    let mut sequences = BTreeMap::new();
    for (k, mu) in centers.iter().enumerate() {
        let offsets: Vec<Vec<f64>> = (0..spec.sessions)
            .map(|_| {
                normalize(gaussian(&mut rng, d))
                    .into_iter()
                    .map(|x| x * spec.drift)
                    .collect()
            })
            .collect();
        let id = spec.identity_label(k);
        let seqs: Vec<FrameSequence> = (0..=spec.subsequences)
            .map(|t| {
                let offset = &offsets[spec.session_of(t)];
                let frames = (0..spec.frames_per_subsequence)
                    .map(|_| {
                        let v: Vec<f64> = (0..d)
                            .map(|j| {
                                let eps: f64 = StandardNormal.sample(&mut rng);
                                mu[j] + offset[j] + spec.noise * eps
                            })
                            .collect();
                        FeatureVector(normalize(v))
                    })
                    .collect();
                FrameSequence::labelled(frames, id.clone(), t)
            })
            .collect();
        sequences.insert(id, seqs);
    }
    DataSource::new(sequences)
}
