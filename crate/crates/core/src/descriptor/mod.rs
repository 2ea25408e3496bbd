//! Trit-based temporal descriptor over group-count series.
//!
//! A series of group counts (one per selected frame) is scanned by an outer
//! window of `L` samples. Inside it, every inner window of `2W + 1` samples is
//! encoded as `2W` trits comparing each neighbour with the window centre, and
//! the trits are read as a base-3 [`PatternCode`]. The `L - 2W` codes of one
//! outer window form a [`PatternHistogram`]. A static crowd maps every inner
//! window to the all-ones quiet code, so the histogram's quiet fraction drops
//! when groups form or break up faster than the count threshold `T` allows.

mod alarm;
mod code;
mod histogram;
mod output;

pub use alarm::{crossing_indices, detect_alarms, AlarmDetector, AlarmEvent};
pub use code::{decimal_to_trits, encode_pattern, encode_trits, quiet_code, trits_to_decimal, PatternCode, TritCode};
pub use histogram::{histogram_stream, window_histogram, PatternHistogram, StreamingDescriptor};
pub use output::{read_alarms_csv, write_alarms_csv, write_descriptor_csv};

use crate::error::{Error, Result};

/// Parameters shared by every descriptor stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescriptorParams {
    /// Source video frame rate in frames per second.
    pub frame_rate: f64,
    /// `F`: one frame is counted every `skip` frames.
    pub skip: usize,
    /// `W`: the inner window spans `2W + 1` samples.
    pub half_width: usize,
    /// `L`: samples per outer window (one histogram each).
    pub outer_window: usize,
    /// `T`: count differences up to this value are treated as unchanged.
    pub count_threshold: u32,
    /// `t*`: an outer window is anomalous when its quiet fraction falls below this.
    pub bin_threshold: f64,
}

impl Default for DescriptorParams {
    fn default() -> Self {
        DescriptorParams {
            frame_rate: 30.0,
            skip: 20,
            half_width: 2,
            outer_window: 15,
            count_threshold: 3,
            bin_threshold: 0.85,
        }
    }
}

impl DescriptorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.frame_rate.is_finite() && self.frame_rate > 0.0) {
            return Err(Error::invalid(format!(
                "frame rate must be positive, got {}",
                self.frame_rate
            )));
        }
        if self.skip < 1 {
            return Err(Error::invalid("skip F must be at least 1"));
        }
        if self.half_width < 1 {
            return Err(Error::invalid("half width W must be at least 1"));
        }
        // 3^(2W) must fit the u64 pattern code.
        if self.half_width > 20 {
            return Err(Error::invalid(format!(
                "half width W={} is too large (max 20)",
                self.half_width
            )));
        }
        if self.outer_window <= 2 * self.half_width {
            return Err(Error::invalid(format!(
                "outer window L={} must exceed 2W={}",
                self.outer_window,
                2 * self.half_width
            )));
        }
        if !(self.bin_threshold > 0.0 && self.bin_threshold <= 1.0) {
            return Err(Error::invalid(format!(
                "bin threshold t* must lie in (0, 1], got {}",
                self.bin_threshold
            )));
        }
        Ok(())
    }

    pub fn inner_window(&self) -> usize {
        2 * self.half_width + 1
    }

    /// Number of pattern codes per outer window, `L - 2W`.
    pub fn codes_per_window(&self) -> usize {
        self.outer_window - 2 * self.half_width
    }
}

/// Group counts for the selected frames of one video.
#[derive(Debug, Clone, PartialEq)]
pub struct CountSeries {
    pub counts: Vec<u32>,
    /// Source frame index of `counts[0]`.
    pub first_frame: u64,
    /// Source frames between consecutive samples.
    pub stride: u64,
    pub frame_rate: f64,
}

impl CountSeries {
    pub fn new(counts: Vec<u32>, first_frame: u64, stride: u64, frame_rate: f64) -> Result<Self> {
        if stride == 0 {
            return Err(Error::invalid("series stride must be at least 1"));
        }
        if !(frame_rate.is_finite() && frame_rate > 0.0) {
            return Err(Error::invalid("series frame rate must be positive"));
        }
        Ok(CountSeries {
            counts,
            first_frame,
            stride,
            frame_rate,
        })
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Source frame index of sample `i`.
    pub fn frame_of(&self, i: usize) -> u64 {
        self.first_frame + i as u64 * self.stride
    }

    pub fn frames(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.len()).map(|i| self.frame_of(i))
    }
}

/// Indices of the frames that get counted: `0, F, 2F, ...` below `n_total`.
pub fn select_frames(n_total: usize, params: &DescriptorParams) -> Vec<usize> {
    (0..n_total).step_by(params.skip.max(1)).collect()
}

/// Runs the descriptor and the alarm trigger over a whole series.
pub fn analyze_series(
    series: &CountSeries,
    params: &DescriptorParams,
) -> Result<(Vec<PatternHistogram>, Vec<AlarmEvent>)> {
    let histograms = histogram_stream(series, params)?;
    let alarms = detect_alarms(&histograms, params);
    Ok((histograms, alarms))
}
