//! Feature data keyed by `(identity, t, frame)` and its CSV form.
//!
//! CSV header: `identity,t,frame,f0,...,f{d-1}`. Floats are written with the
//! shortest representation that parses back to the same bits.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::{FeatureVector, FrameSequence, Identity};

/// Every sequence `S_t^k` for `t = 0..=f`, for every identity.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSource {
    dim: usize,
    sequences: BTreeMap<Identity, Vec<FrameSequence>>,
}

impl DataSource {
    /// Assemble from complete per-identity sequence lists (index = `t`).
    pub fn new(sequences: BTreeMap<Identity, Vec<FrameSequence>>) -> Result<Self> {
        let mut dim = None;
        let mut count = None;
        for (id, seqs) in &sequences {
            if *count.get_or_insert(seqs.len()) != seqs.len() {
                return Err(Error::Data(format!(
                    "identity {id} has {} sequences, expected {}",
                    seqs.len(),
                    count.unwrap()
                )));
            }
            for (t, s) in seqs.iter().enumerate() {
                if s.is_empty() {
                    return Err(Error::Data(format!("sequence ({id}, {t}) has no frames")));
                }
                for f in &s.frames {
                    let d = *dim.get_or_insert(f.dim());
                    if !crate::types::validate_vector(f, d) {
                        return Err(Error::Data(format!(
                            "sequence ({id}, {t}) holds an invalid vector (dimension {}, expected {d})",
                            f.dim()
                        )));
                    }
                }
            }
        }
        let dim = dim.ok_or_else(|| Error::Data("no identities found (0 identities)".into()))?;
        Ok(DataSource { dim, sequences })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_identities(&self) -> usize {
        self.sequences.len()
    }

    /// Sequences per identity (`f + 1`).
    pub fn num_sequences(&self) -> usize {
        self.sequences.values().next().map_or(0, Vec::len)
    }

    pub fn num_vectors(&self) -> usize {
        self.sequences.values().flatten().map(FrameSequence::len).sum()
    }

    /// Identities in ascending label order.
    pub fn identities(&self) -> Vec<Identity> {
        self.sequences.keys().cloned().collect()
    }

    pub fn sequence(&self, id: &Identity, t: usize) -> Result<&FrameSequence> {
        self.sequences
            .get(id)
            .and_then(|s| s.get(t))
            .ok_or_else(|| Error::Data(format!("missing sequence ({id}, {t})")))
    }

    pub fn sequences(&self) -> &BTreeMap<Identity, Vec<FrameSequence>> {
        &self.sequences
    }
}

/// Write `data` as feature CSV.
pub fn write_features<W: Write>(data: &DataSource, out: W) -> Result<()> {
    let mut w = std::io::BufWriter::new(out);
    write!(w, "identity,t,frame")?;
    for j in 0..data.dim() {
        write!(w, ",f{j}")?;
    }
    writeln!(w)?;
    for (id, seqs) in data.sequences() {
        if id.as_str().contains([',', '"', '\n', '\r']) {
            return Err(Error::Data(format!("identity label {id:?} cannot be written as CSV")));
        }
        for (t, s) in seqs.iter().enumerate() {
            for (i, f) in s.frames.iter().enumerate() {
                write!(w, "{id},{t},{i}")?;
                for v in f.values() {
                    write!(w, ",{v}")?;
                }
                writeln!(w)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn save_features(data: &DataSource, path: impl AsRef<Path>) -> Result<()> {
    write_features(data, std::fs::File::create(path)?)
}

pub fn load_features(path: impl AsRef<Path>) -> Result<DataSource> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.as_ref().display())))?;
    read_features(file)
}

/// Parse feature CSV. Problems are reported with their line numbers.
pub fn read_features<R: Read>(input: R) -> Result<DataSource> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let header = reader
        .headers()
        .map_err(|e| Error::Data(format!("line 1: {e}")))?
        .clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::Data("no identities found (0 identities): empty file".into()));
    }
    if header.len() < 4 || &header[0] != "identity" || &header[1] != "t" || &header[2] != "frame" {
        return Err(Error::Data(
            "line 1: header must start with identity,t,frame followed by f0..f{d-1}".into(),
        ));
    }
    let d = header.len() - 3;
    for (j, name) in header.iter().skip(3).enumerate() {
        if name != format!("f{j}") {
            return Err(Error::Data(format!("line 1: column {} should be f{j}, found {name}", j + 4)));
        }
    }

    let mut cells: BTreeMap<(Identity, usize), BTreeMap<usize, FeatureVector>> = BTreeMap::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Data(format!("malformed row: {e}")))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != d + 3 {
            return Err(Error::Data(format!(
                "line {line}: expected {} fields, found {} (inconsistent dimension)",
                d + 3,
                rec.len()
            )));
        }
        let id = Identity::new(&rec[0]);
        let parse_idx = |s: &str, what: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::Data(format!("line {line}: bad {what} value {s:?}")))
        };
        let t = parse_idx(&rec[1], "t")?;
        let frame = parse_idx(&rec[2], "frame")?;
        let values = rec
            .iter()
            .skip(3)
            .map(|s| {
                let v: f64 = s
                    .trim()
                    .parse()
                    .map_err(|_| Error::Data(format!("line {line}: bad feature value {s:?}")))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Data(format!("line {line}: non-finite feature value {s:?}")))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        let slot = cells.entry((id.clone(), t)).or_default();
        if slot.insert(frame, FeatureVector(values)).is_some() {
            return Err(Error::Data(format!(
                "line {line}: duplicate frame {frame} for ({id}, {t})"
            )));
        }
    }
    if cells.is_empty() {
        return Err(Error::Data("no identities found (0 identities)".into()));
    }

    let max_t = cells.keys().map(|(_, t)| *t).max().unwrap_or(0);
    let ids: Vec<Identity> = {
        let mut v: Vec<Identity> = cells.keys().map(|(id, _)| id.clone()).collect();
        v.dedup();
        v
    };
    let missing: Vec<String> = ids
        .iter()
        .flat_map(|id| (0..=max_t).map(move |t| (id.clone(), t)))
        .filter(|key| !cells.contains_key(key))
        .map(|(id, t)| format!("({id}, {t})"))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Data(format!(
            "missing sequences for {} (identity, t) pairs: {}",
            missing.len(),
            missing.join(" ")
        )));
    }

    let mut sequences: BTreeMap<Identity, Vec<FrameSequence>> = BTreeMap::new();
    for ((id, t), frames) in cells {
        let seq = FrameSequence::labelled(frames.into_values().collect(), id.clone(), t);
        sequences.entry(id).or_default().push(seq);
    }
    DataSource::new(sequences)
}
