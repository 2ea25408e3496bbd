//! Group counting front ends.
//!
//! Two counters turn grayscale frames into a group count per selected frame:
//! clustering of dense optical flow (COF) and background-subtraction blob
//! detection (BD). Counts produced elsewhere, by hand or by an external person
//! detector, enter through [`import_counts`].

mod background;
mod blob;
mod counts_csv;
mod dbscan;
mod flow;
mod frames_io;
pub mod morphology;

pub use background::{estimate_background, RunningBackground};
pub use blob::{binarize_foreground, connected_components, count_groups_blob, gaussian_blur, Component};
pub use counts_csv::{import_counts, parse_counts, write_counts, ImportNotes};
pub use dbscan::{angle_distance, dbscan_cluster_count, feature_distance, flow_to_points, FlowPoint};
pub use flow::{dense_optical_flow, FlowField};
pub use frames_io::{list_frame_files, read_pgm, read_raw_planes, write_pgm, write_raw_planes, FrameDir, RawHeader};
pub use morphology::StructuringElement;

use std::time::{Duration, Instant};

use crate::descriptor::{select_frames, CountSeries, DescriptorParams};
use crate::error::{Error, Result};

/// Smallest accepted frame side, in pixels.
pub const MIN_FRAME_SIDE: usize = 8;

/// One 8-bit grayscale frame, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
    /// Position in the source sequence.
    pub index: u64,
}

impl Frame {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>, index: u64) -> Result<Self> {
        if width < MIN_FRAME_SIDE || height < MIN_FRAME_SIDE {
            return Err(Error::invalid(format!(
                "frame {index}: {width}x{height} is below the {MIN_FRAME_SIDE}x{MIN_FRAME_SIDE} minimum"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::invalid(format!(
                "frame {index}: expected {} pixels for {width}x{height}, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(Frame {
            width,
            height,
            pixels,
            index,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8, index: u64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height], index)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn same_dims(&self, other: &Frame) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn check_dims(&self, other: &Frame) -> Result<()> {
        if self.same_dims(other) {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "frame dimensions differ: {}x{} (frame {}) vs {}x{} (frame {})",
                self.width, self.height, self.index, other.width, other.height, other.index
            )))
        }
    }
}

/// Per-feature weights of the clustering metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureWeights {
    pub x: f64,
    pub y: f64,
    pub magnitude: f64,
    pub angle: f64,
}

/// Clustering of optical flow settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CofConfig {
    /// Horn-Schunck smoothness weight, on intensities scaled to [0, 1].
    pub smoothness: f64,
    /// Jacobi iterations per warp.
    pub iterations: usize,
    /// Warps (re-linearizations) per pyramid level.
    pub warps: usize,
    /// Maximum pyramid levels, including full resolution.
    pub pyramid_levels: usize,
    /// Pixels moving at most this far (pixels per step) are dropped.
    pub motion_floor: f64,
    /// Pixels whose smoothed image gradient is at most this are dropped, so
    /// flow filled into flat regions does not join separate groups.
    pub gradient_floor: f64,
    /// DBSCAN neighbourhood radius in the weighted feature space.
    pub eps: f64,
    /// DBSCAN core threshold; a point counts itself.
    pub min_points: usize,
    pub weights: FeatureWeights,
}

impl Default for CofConfig {
    fn default() -> Self {
        CofConfig {
            smoothness: 0.1,
            iterations: 40,
            warps: 2,
            pyramid_levels: 3,
            motion_floor: 0.3,
            gradient_floor: 0.02,
            eps: 2.5,
            min_points: 6,
            weights: FeatureWeights {
                x: 1.0,
                y: 1.0,
                magnitude: 1.0,
                angle: 2.0,
            },
        }
    }
}

/// Blob detector settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BdConfig {
    /// Running-average background learning rate in (0, 1].
    pub learning_rate: f64,
    pub blur_radius: usize,
    /// Foreground when the blurred background difference exceeds this.
    pub threshold: u8,
    pub morph_radius: usize,
    pub structuring: StructuringElement,
    /// Components smaller than this many pixels are ignored.
    pub min_area: usize,
}

impl Default for BdConfig {
    fn default() -> Self {
        BdConfig {
            learning_rate: 0.05,
            blur_radius: 2,
            threshold: 30,
            morph_radius: 1,
            structuring: StructuringElement::Cross,
            min_area: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CounterConfig {
    pub cof: CofConfig,
    pub bd: BdConfig,
}

impl CounterConfig {
    pub fn validate(&self) -> Result<()> {
        let c = &self.cof;
        if !(c.eps > 0.0 && c.eps.is_finite()) {
            return Err(Error::invalid("COF eps must be positive"));
        }
        if c.min_points < 1 {
            return Err(Error::invalid("COF min_points must be at least 1"));
        }
        if !(c.smoothness > 0.0 && c.smoothness.is_finite()) {
            return Err(Error::invalid("COF smoothness must be positive"));
        }
        if c.iterations < 1 || c.warps < 1 || c.pyramid_levels < 1 {
            return Err(Error::invalid(
                "COF iterations, warps and pyramid levels must be at least 1",
            ));
        }
        if !(c.motion_floor >= 0.0 && c.motion_floor.is_finite()) {
            return Err(Error::invalid("COF motion floor must be non-negative"));
        }
        if !(c.gradient_floor >= 0.0 && c.gradient_floor.is_finite()) {
            return Err(Error::invalid("COF gradient floor must be non-negative"));
        }
        let w = c.weights;
        if [w.x, w.y, w.magnitude, w.angle]
            .iter()
            .any(|v| !(v.is_finite() && *v >= 0.0))
        {
            return Err(Error::invalid("COF feature weights must be finite and non-negative"));
        }
        let b = &self.bd;
        if !(b.learning_rate > 0.0 && b.learning_rate <= 1.0) {
            return Err(Error::invalid("BD learning rate must lie in (0, 1]"));
        }
        if b.blur_radius < 1 || b.morph_radius < 1 {
            return Err(Error::invalid("BD blur and morphology radii must be at least 1"));
        }
        if b.min_area < 1 {
            return Err(Error::invalid("BD minimum blob area must be at least 1"));
        }
        Ok(())
    }
}

/// Which front end produces the counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CounterKind {
    /// Clustering of optical flow between consecutive selected frames.
    Cof,
    /// Blob detection against a background model.
    Bd,
}

impl std::str::FromStr for CounterKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cof" => Ok(CounterKind::Cof),
            "bd" => Ok(CounterKind::Bd),
            other => Err(format!("unknown counter `{other}` (expected cof or bd)")),
        }
    }
}

impl std::fmt::Display for CounterKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CounterKind::Cof => "cof",
            CounterKind::Bd => "bd",
        })
    }
}

/// Random access to the frames of one video.
pub trait FrameSource {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn frame(&self, index: usize) -> Result<Frame>;
}

impl FrameSource for [Frame] {
    fn len(&self) -> usize {
        <[Frame]>::len(self)
    }

    fn frame(&self, index: usize) -> Result<Frame> {
        self.get(index)
            .cloned()
            .ok_or_else(|| Error::invalid(format!("frame {index} out of range")))
    }
}

impl FrameSource for Vec<Frame> {
    fn len(&self) -> usize {
        self.as_slice().len()
    }

    fn frame(&self, index: usize) -> Result<Frame> {
        self.as_slice().frame(index)
    }
}

/// Cluster count of the flow between `prev` and `next`.
pub fn count_groups_cof(prev: &Frame, next: &Frame, config: &CounterConfig) -> Result<usize> {
    let field = dense_optical_flow(prev, next, config)?;
    let points = flow_to_points(&field, config);
    Ok(dbscan_cluster_count(&points, config))
}

/// Count series plus per-sample counting time.
#[derive(Debug, Clone)]
pub struct CountRun {
    pub series: CountSeries,
    pub timings: Vec<Duration>,
}

/// Counts groups on every selected frame of `frames`.
///
/// BD estimates a background as the temporal median of the selected frames
/// and yields `ceil(n/F)` samples. COF pairs each selected frame with the
/// next selected one and yields one sample fewer.
pub fn build_count_series<S: FrameSource + ?Sized>(
    frames: &S,
    counter: CounterKind,
    params: &DescriptorParams,
    config: &CounterConfig,
) -> Result<CountRun> {
    params.validate()?;
    config.validate()?;
    if frames.is_empty() {
        return Err(Error::InsufficientData {
            what: "frames",
            needed: 1,
            got: 0,
        });
    }
    let selected = select_frames(frames.len(), params);
    let mut counts = Vec::with_capacity(selected.len());
    let mut timings = Vec::with_capacity(selected.len());
    match counter {
        CounterKind::Bd => {
            let loaded = selected.iter().map(|&i| frames.frame(i)).collect::<Result<Vec<_>>>()?;
            check_uniform_dims(&loaded)?;
            let background = estimate_background(&loaded)?;
            for frame in &loaded {
                let start = Instant::now();
                counts.push(count_groups_blob(frame, &background, config)? as u32);
                timings.push(start.elapsed());
            }
        }
        CounterKind::Cof => {
            if selected.len() < 2 {
                return Err(Error::InsufficientData {
                    what: "selected frames for optical-flow pairs",
                    needed: 2,
                    got: selected.len(),
                });
            }
            let mut prev = frames.frame(selected[0])?;
            for &i in &selected[1..] {
                let next = frames.frame(i)?;
                prev.check_dims(&next)?;
                let start = Instant::now();
                counts.push(count_groups_cof(&prev, &next, config)? as u32);
                timings.push(start.elapsed());
                prev = next;
            }
        }
    }
    let first_frame = selected[0] as u64;
    let series = CountSeries::new(counts, first_frame, params.skip as u64, params.frame_rate)?;
    Ok(CountRun { series, timings })
}

fn check_uniform_dims(frames: &[Frame]) -> Result<()> {
    if let Some(first) = frames.first() {
        for f in &frames[1..] {
            first.check_dims(f)?;
        }
    }
    Ok(())
}
