//! Static cosine-similarity baseline: one gallery centre per enrolled
//! identity, compared with the centre of each query sequence.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::types::{dot, DecisionOutcome, FrameSequence, Identity, Label, ScoreVector};

#[derive(Debug, Clone, PartialEq)]
pub struct CosineGallery {
    centers: BTreeMap<Identity, Vec<f64>>,
}

/// Normalised mean of the normalised frames.
pub fn sequence_center(s: &FrameSequence) -> Result<Vec<f64>> {
    let first = s.frames.first().ok_or(Error::EmptyInput("query sequence"))?;
    let mut acc = vec![0.0; first.dim()];
    for f in &s.frames {
        if f.dim() != acc.len() {
            return Err(Error::DimensionMismatch {
                expected: acc.len(),
                found: f.dim(),
            });
        }
        let n = dot(f.values(), f.values()).sqrt();
        if n > 0.0 {
            acc.iter_mut().zip(f.values()).for_each(|(a, x)| *a += x / n);
        }
    }
    let n = dot(&acc, &acc).sqrt();
    if n > 0.0 {
        acc.iter_mut().for_each(|a| *a /= n);
    }
    Ok(acc)
}

impl CosineGallery {
    pub fn build(labelled: &[(Identity, FrameSequence)]) -> Result<Self> {
        let centers = labelled
            .iter()
            .map(|(id, s)| Ok((id.clone(), sequence_center(s)?)))
            .collect::<Result<_>>()?;
        Ok(CosineGallery { centers })
    }

    pub fn similarities(&self, query: &FrameSequence) -> Result<ScoreVector> {
        let q = sequence_center(query)?;
        self.centers
            .iter()
            .map(|(id, c)| {
                if c.len() != q.len() {
                    return Err(Error::DimensionMismatch {
                        expected: c.len(),
                        found: q.len(),
                    });
                }
                Ok((id.clone(), dot(c, &q)))
            })
            .collect()
    }

    /// Best-matching identity if its similarity exceeds `threshold`.
    pub fn decide(&self, query: &FrameSequence, threshold: f64) -> Result<DecisionOutcome> {
        let sims = self.similarities(query)?;
        let label = match sims.argmax() {
            Some(id) if sims.get(id).unwrap() > threshold => Label::Known(id.clone()),
            _ => Label::Unknown,
        };
        Ok(DecisionOutcome {
            label,
            raw_scores: sims,
            tail_probability: None,
        })
    }
}

/// Convenience wrapper around [`CosineGallery::decide`].
pub fn baseline_cosine(gallery: &CosineGallery, query: &FrameSequence, threshold: f64) -> Result<DecisionOutcome> {
    gallery.decide(query, threshold)
}
