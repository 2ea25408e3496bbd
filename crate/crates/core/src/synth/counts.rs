use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{parse_list, KeyValues};
use crate::descriptor::{select_frames, CountSeries, DescriptorParams};
use crate::error::{Error, Result};
use crate::evaluation::LabelEvent;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    FastFormation,
    FastBreakup,
    SlowFormation,
    SlowBreakup,
}

impl EventKind {
    pub fn is_fast(self) -> bool {
        matches!(self, EventKind::FastFormation | EventKind::FastBreakup)
    }
}

impl std::str::FromStr for EventKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "fast_formation" => Ok(EventKind::FastFormation),
            "fast_breakup" => Ok(EventKind::FastBreakup),
            "slow_formation" => Ok(EventKind::SlowFormation),
            "slow_breakup" => Ok(EventKind::SlowBreakup),
            other => Err(format!("unknown event kind `{other}`")),
        }
    }
}

/// A change of `delta` groups spread linearly over `ramp` frames from `frame`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScenarioEvent {
    pub frame: u64,
    pub kind: EventKind,
    pub delta: i64,
    pub ramp: u64,
}

impl ScenarioEvent {
    /// Contribution at source frame `f`: `delta * min(f - frame + 1, ramp) / ramp`,
    /// truncated toward zero.
    fn contribution(&self, f: u64) -> i64 {
        if f < self.frame {
            return 0;
        }
        let progressed = (f - self.frame + 1).min(self.ramp) as i64;
        self.delta * progressed / self.ramp as i64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    /// Length of the simulated video in frames.
    pub duration: u64,
    pub base_groups: u32,
    pub events: Vec<ScenarioEvent>,
    /// Uniform integer jitter amplitude per sample.
    pub noise: u32,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn validate(&self, params: &DescriptorParams) -> Result<()> {
        params.validate()?;
        if self.duration == 0 {
            return Err(Error::invalid("scenario duration must be positive"));
        }
        let fast_limit = (params.skip * params.inner_window()) as u64;
        for (i, e) in self.events.iter().enumerate() {
            if e.ramp < 1 {
                return Err(Error::invalid(format!("event {i}: ramp must be at least 1 frame")));
            }
            if e.frame >= self.duration {
                return Err(Error::invalid(format!(
                    "event {i}: frame {} is past the duration",
                    e.frame
                )));
            }
            if i > 0 && e.frame < self.events[i - 1].frame {
                return Err(Error::invalid("scenario events must be sorted by frame"));
            }
            if e.kind.is_fast() && e.ramp >= fast_limit {
                return Err(Error::invalid(format!(
                    "event {i}: a fast event needs a ramp shorter than F*(2W+1) = {fast_limit} frames"
                )));
            }
            if !e.kind.is_fast()
                && e.delta.unsigned_abs() * params.skip as u64 > u64::from(params.count_threshold) * e.ramp
            {
                return Err(Error::invalid(format!(
                    "event {i}: a slow event must change by at most T={} per sample",
                    params.count_threshold
                )));
            }
        }
        Ok(())
    }

    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        kv.check_known(&["kind", "duration", "base_groups", "noise", "seed", "event"])?;
        let mut events = Vec::new();
        for entry in kv.get_all("event") {
            let err = |m: String| Error::parse(kv.source(), entry.line, format!("key `event`: {m}"));
            let fields: Vec<String> = parse_list(&entry.value).map_err(err)?;
            let [frame, kind, delta, ramp] = fields.as_slice() else {
                return Err(err("expected `frame,kind,delta,ramp`".into()));
            };
            events.push(ScenarioEvent {
                frame: frame.parse().map_err(|_| err(format!("bad frame `{frame}`")))?,
                kind: kind.parse().map_err(err)?,
                delta: delta.parse().map_err(|_| err(format!("bad delta `{delta}`")))?,
                ramp: ramp.parse().map_err(|_| err(format!("bad ramp `{ramp}`")))?,
            });
        }
        Ok(ScenarioSpec {
            duration: kv.require("duration")?,
            base_groups: kv.require("base_groups")?,
            events,
            noise: kv.parse_value("noise")?.unwrap_or(0),
            seed: kv.parse_value("seed")?.unwrap_or(0),
        })
    }
}

/// Samples the scenario at the selected frames.
///
/// Fast events are labelled at their first frame; slow events are not.
pub fn generate_count_series(spec: &ScenarioSpec, params: &DescriptorParams) -> Result<(CountSeries, Vec<LabelEvent>)> {
    spec.validate(params)?;
    let frames = select_frames(spec.duration as usize, params);
    let clean: Vec<i64> = frames
        .iter()
        .map(|&f| i64::from(spec.base_groups) + spec.events.iter().map(|e| e.contribution(f as u64)).sum::<i64>())
        .collect();
    if let Some((i, c)) = clean.iter().enumerate().find(|(_, &c)| c < 0) {
        return Err(Error::invalid(format!(
            "events drive the count to {c} at frame {}",
            frames[i]
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = i64::from(spec.noise);
    let counts = clean
        .into_iter()
        .map(|c| {
            let jitter = if noise > 0 { rng.gen_range(-noise..=noise) } else { 0 };
            (c + jitter).max(0) as u32
        })
        .collect();
    let labels = spec
        .events
        .iter()
        .filter(|e| e.kind.is_fast())
        .map(|e| LabelEvent { frame: e.frame })
        .collect();
    let series = CountSeries::new(counts, 0, params.skip as u64, params.frame_rate)?;
    Ok((series, labels))
}
