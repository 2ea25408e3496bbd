//! Synthetic inputs with known ground truth: count series with injected
//! group-dynamics events, and grayscale videos of moving discs.

mod blobs;
mod counts;

pub use blobs::{generate_blob_frames, render_background, BlobSceneSpec, BlobSpec, MergeEvent, SplitEvent};
pub use counts::{generate_count_series, EventKind, ScenarioEvent, ScenarioSpec};

use crate::config::KeyValues;
use crate::error::{Error, Result};

/// A parsed scenario file, dispatched on its `kind` key.
#[derive(Debug, Clone, PartialEq)]
pub enum SynthSpec {
    Counts(ScenarioSpec),
    Blobs(BlobSceneSpec),
}

impl SynthSpec {
    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        let kind = kv
            .get("kind")
            .ok_or_else(|| Error::parse(kv.source(), 0, "missing required key `kind` (counts or blobs)"))?;
        match kind.value.as_str() {
            "counts" => ScenarioSpec::from_key_values(kv).map(SynthSpec::Counts),
            "blobs" => BlobSceneSpec::from_key_values(kv).map(SynthSpec::Blobs),
            other => Err(Error::parse(
                kv.source(),
                kind.line,
                format!("key `kind`: unknown scenario kind `{other}`"),
            )),
        }
    }
}
