use super::LabelEvent;
use crate::descriptor::AlarmEvent;
use crate::error::{Error, Result};

/// Matching window around each label. The window spans `pre_seconds` before
/// and `post_seconds` after the label, both ends inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchConfig {
    pub frame_rate: f64,
    pub pre_seconds: f64,
    pub post_seconds: f64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig::symmetric(27.0, 30.0)
    }
}

impl MatchConfig {
    /// A window of `window_seconds` in total, centred on the label.
    pub fn symmetric(window_seconds: f64, frame_rate: f64) -> Self {
        MatchConfig {
            frame_rate,
            pre_seconds: window_seconds / 2.0,
            post_seconds: window_seconds / 2.0,
        }
    }

    pub fn window_seconds(&self) -> f64 {
        self.pre_seconds + self.post_seconds
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.frame_rate.is_finite() && self.frame_rate > 0.0) {
            return Err(Error::invalid("match frame rate must be positive"));
        }
        if !(self.pre_seconds >= 0.0 && self.post_seconds >= 0.0 && self.window_seconds() > 0.0) {
            return Err(Error::invalid("match window must be positive"));
        }
        Ok(())
    }

    fn contains(&self, label: u64, alarm: u64) -> bool {
        let d = alarm as f64 - label as f64;
        d >= -self.pre_seconds * self.frame_rate && d <= self.post_seconds * self.frame_rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MatchCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl std::ops::AddAssign for MatchCounts {
    fn add_assign(&mut self, o: Self) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
    }
}

impl std::iter::Sum for MatchCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(MatchCounts::default(), |mut a, b| {
            a += b;
            a
        })
    }
}

fn check_sorted(frames: &[u64], what: &str) -> Result<()> {
    if frames.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid(format!("{what} must be sorted by frame")));
    }
    Ok(())
}

/// Matches alarm frames against label frames.
///
/// Labels are visited in time order; each takes the nearest unconsumed alarm
/// inside its window (earlier alarm on ties) and scores one TP. Further
/// alarms inside a matched label's window are absorbed rather than counted as
/// false. Labels without an alarm are FN; alarms outside every label window
/// are FP.
pub fn match_frames(alarms: &[u64], labels: &[u64], config: &MatchConfig) -> Result<MatchCounts> {
    check_sorted(alarms, "alarms")?;
    check_sorted(labels, "labels")?;
    let mut consumed = vec![false; alarms.len()];
    let mut counts = MatchCounts::default();
    for &label in labels {
        let best = alarms
            .iter()
            .enumerate()
            .filter(|&(i, &a)| !consumed[i] && config.contains(label, a))
            .min_by_key(|&(_, &a)| a.abs_diff(label));
        match best {
            Some((i, _)) => {
                consumed[i] = true;
                counts.tp += 1;
            }
            None => counts.fn_ += 1,
        }
    }
    counts.fp = alarms
        .iter()
        .enumerate()
        .filter(|&(i, &a)| !consumed[i] && !labels.iter().any(|&l| config.contains(l, a)))
        .count() as u64;
    Ok(counts)
}

pub fn match_alarms(alarms: &[AlarmEvent], labels: &[LabelEvent], config: &MatchConfig) -> Result<MatchCounts> {
    let a: Vec<u64> = alarms.iter().map(|a| a.frame).collect();
    let l: Vec<u64> = labels.iter().map(|l| l.frame).collect();
    match_frames(&a, &l, config)
}
