//! Versioned, lossless JSON snapshot of a [`SystemState`].

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::SystemState;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSnapshotFile {
    pub format_version: u32,
    pub state: SystemState,
}

impl StateSnapshotFile {
    pub fn new(state: SystemState) -> Self {
        StateSnapshotFile {
            format_version: FORMAT_VERSION,
            state,
        }
    }
}

pub fn write_state<W: Write>(state: &SystemState, out: W) -> Result<()> {
    let mut out = std::io::BufWriter::new(out);
    serde_json::to_writer_pretty(&mut out, &StateSnapshotFile::new(state.clone()))
        .map_err(|e| Error::Snapshot(e.to_string()))?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

pub fn read_state<R: Read>(mut input: R) -> Result<SystemState> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Snapshot(format!("not valid JSON: {e}")))?;
    match value.get("format_version").and_then(serde_json::Value::as_u64) {
        Some(v) if v == FORMAT_VERSION as u64 => {}
        Some(v) => {
            return Err(Error::Snapshot(format!(
                "unsupported format_version {v} (expected {FORMAT_VERSION})"
            )))
        }
        None => return Err(Error::Snapshot("missing or invalid format_version".into())),
    }
    let file: StateSnapshotFile =
        serde_json::from_value(value).map_err(|e| Error::Snapshot(e.to_string()))?;
    Ok(file.state)
}

pub fn save_state(state: &SystemState, path: impl AsRef<Path>) -> Result<()> {
    write_state(state, std::fs::File::create(path)?)
}

pub fn load_state(path: impl AsRef<Path>) -> Result<SystemState> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Snapshot(format!("cannot open {}: {e}", path.display())))?;
    read_state(file)
}

/// Stable plain-text summary of a state.
pub fn describe_state(state: &SystemState) -> String {
    use std::fmt::Write as _;
    let mut s = String::new();
    let _ = writeln!(s, "step_counter {}", state.step_counter);
    let _ = writeln!(s, "queries_processed {}", state.queries_processed);
    let _ = writeln!(s, "ensembles {}", state.ensembles.len());
    for (id, e) in &state.ensembles {
        let _ = writeln!(s, "ensemble {id} size {}", e.len());
        for (i, c) in e.classifiers.iter().enumerate() {
            let _ = writeln!(
                s,
                "  classifier {i} creation_step {} initial {}",
                c.creation_step, c.is_initial
            );
        }
    }
    s
}
