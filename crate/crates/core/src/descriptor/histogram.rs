use std::collections::{BTreeMap, VecDeque};

use super::code::{encode_pattern, quiet_code, PatternCode};
use super::{CountSeries, DescriptorParams};
use crate::error::{Error, Result};

/// Pattern-code occurrences over one outer window.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternHistogram {
    pub bins: BTreeMap<PatternCode, u32>,
    /// Number of codes binned, always `L - 2W`.
    pub total: u32,
    /// Position `k` of the outer window in the series.
    pub window_index: usize,
    /// Source frame of the outer window's central sample.
    pub center_frame: u64,
    pub quiet: PatternCode,
}

impl PatternHistogram {
    pub fn count(&self, code: PatternCode) -> u32 {
        self.bins.get(&code).copied().unwrap_or(0)
    }

    pub fn quiet_count(&self) -> u32 {
        self.count(self.quiet)
    }

    pub fn quiet_fraction(&self) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        f64::from(self.quiet_count()) / f64::from(self.total)
    }
}

/// Sample offset of the centre of an outer window. For even `L` this is the
/// lower of the two middle samples.
fn center_offset(outer_window: usize) -> usize {
    (outer_window - 1) / 2
}

/// Histogram of the `L - 2W` inner-window codes of one outer window.
///
/// The returned histogram has `window_index` 0 and `center_frame` equal to the
/// central sample's position in `array`.
pub fn window_histogram(array: &[u32], params: &DescriptorParams) -> Result<PatternHistogram> {
    let inner = params.inner_window();
    if params.outer_window <= 2 * params.half_width {
        return Err(Error::invalid(format!(
            "outer window L={} must exceed 2W={}",
            params.outer_window,
            2 * params.half_width
        )));
    }
    if array.len() != params.outer_window {
        return Err(Error::invalid(format!(
            "outer window must hold L={} counts, got {}",
            params.outer_window,
            array.len()
        )));
    }
    let mut bins = BTreeMap::new();
    for window in array.windows(inner) {
        *bins.entry(encode_pattern(window, params.count_threshold)).or_insert(0) += 1;
    }
    Ok(PatternHistogram {
        bins,
        total: (array.len() - 2 * params.half_width) as u32,
        window_index: 0,
        center_frame: center_offset(params.outer_window) as u64,
        quiet: quiet_code(params.half_width),
    })
}

/// Incremental descriptor: feed one count per selected frame, get one
/// histogram per sample once `L` samples have arrived.
///
/// Each push encodes the single new inner window and retires the code that
/// left the outer window, so the per-sample cost is independent of the
/// series length.
#[derive(Debug, Clone)]
pub struct StreamingDescriptor {
    params: DescriptorParams,
    first_frame: u64,
    stride: u64,
    inner: VecDeque<u32>,
    codes: VecDeque<PatternCode>,
    bins: BTreeMap<PatternCode, u32>,
    pushed: usize,
    quiet: PatternCode,
}

impl StreamingDescriptor {
    pub fn new(params: DescriptorParams, first_frame: u64, stride: u64) -> Result<Self> {
        params.validate()?;
        if stride == 0 {
            return Err(Error::invalid("stride must be at least 1"));
        }
        Ok(StreamingDescriptor {
            inner: VecDeque::with_capacity(params.inner_window()),
            codes: VecDeque::with_capacity(params.codes_per_window()),
            bins: BTreeMap::new(),
            pushed: 0,
            quiet: quiet_code(params.half_width),
            params,
            first_frame,
            stride,
        })
    }

    pub fn params(&self) -> &DescriptorParams {
        &self.params
    }

    /// Samples pushed so far.
    pub fn len(&self) -> usize {
        self.pushed
    }

    pub fn is_empty(&self) -> bool {
        self.pushed == 0
    }

    pub fn push(&mut self, count: u32) -> Option<PatternHistogram> {
        let inner = self.params.inner_window();
        if self.inner.len() == inner {
            self.inner.pop_front();
        }
        self.inner.push_back(count);
        self.pushed += 1;

        if self.inner.len() == inner {
            let (a, b) = self.inner.as_slices();
            let code = if b.is_empty() {
                encode_pattern(a, self.params.count_threshold)
            } else {
                let window: Vec<u32> = self.inner.iter().copied().collect();
                encode_pattern(&window, self.params.count_threshold)
            };
            if self.codes.len() == self.params.codes_per_window() {
                let old = self.codes.pop_front().expect("non-empty code window");
                if let Some(n) = self.bins.get_mut(&old) {
                    *n -= 1;
                    if *n == 0 {
                        self.bins.remove(&old);
                    }
                }
            }
            self.codes.push_back(code);
            *self.bins.entry(code).or_insert(0) += 1;
        }

        if self.pushed < self.params.outer_window {
            return None;
        }
        let window_index = self.pushed - self.params.outer_window;
        let center_sample = window_index + center_offset(self.params.outer_window);
        Some(PatternHistogram {
            bins: self.bins.clone(),
            total: self.codes.len() as u32,
            window_index,
            center_frame: self.first_frame + center_sample as u64 * self.stride,
            quiet: self.quiet,
        })
    }
}

/// All `K = M - L + 1` histograms of a series of `M` samples, one per outer
/// window position.
pub fn histogram_stream(series: &CountSeries, params: &DescriptorParams) -> Result<Vec<PatternHistogram>> {
    params.validate()?;
    if series.len() < params.outer_window {
        return Err(Error::InsufficientData {
            what: "count samples for one outer window",
            needed: params.outer_window,
            got: series.len(),
        });
    }
    let mut stream = StreamingDescriptor::new(*params, series.first_frame, series.stride)?;
    let mut out = Vec::with_capacity(series.len() - params.outer_window + 1);
    out.extend(series.counts.iter().filter_map(|&c| stream.push(c)));
    Ok(out)
}
