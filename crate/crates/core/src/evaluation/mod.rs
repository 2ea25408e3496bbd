//! Alarm scoring and parameter tuning.
//!
//! Alarms are matched to labelled anomaly onsets within a time window around
//! each label; precision, recall and F1 follow from the matched counts. The
//! descriptor's `(T, L, t*)` are tuned by exhaustive grid search, either on
//! the whole video set (supervised) or leave-one-out.

mod grid;
mod io;
mod matching;
mod metrics;

pub use grid::{
    evaluate_combo, grid_search_supervised, leave_one_out, Combo, GridResult, GridSpec, LooResult, ParamStats, Video,
};
pub use io::{read_labels, read_manifest, write_labels, write_report, write_sweep, ManifestEntry, ReportRow};
pub use matching::{match_alarms, match_frames, MatchConfig, MatchCounts};
pub use metrics::{compute_metrics, EvalReport};

/// A manually labelled anomaly onset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct LabelEvent {
    pub frame: u64,
}
