use super::histogram::PatternHistogram;
use super::DescriptorParams;

/// A detected anomaly instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlarmEvent {
    /// Source frame, the centre of the triggering outer window.
    pub frame: u64,
    pub quiet_fraction: f64,
}

/// Edge-triggered threshold on the quiet fraction.
///
/// Fires when the fraction drops strictly below `t_star` while armed and
/// re-arms once it climbs back to `t_star` or above. Starts armed.
#[derive(Debug, Clone, Copy)]
pub struct AlarmDetector {
    t_star: f64,
    armed: bool,
}

impl AlarmDetector {
    pub fn new(t_star: f64) -> Self {
        AlarmDetector { t_star, armed: true }
    }

    /// Returns true when this observation raises an alarm.
    pub fn observe(&mut self, quiet_fraction: f64) -> bool {
        let below = quiet_fraction < self.t_star;
        let fire = below && self.armed;
        self.armed = !below;
        fire
    }

    pub fn update(&mut self, histogram: &PatternHistogram) -> Option<AlarmEvent> {
        let q = histogram.quiet_fraction();
        self.observe(q).then_some(AlarmEvent {
            frame: histogram.center_frame,
            quiet_fraction: q,
        })
    }
}

/// Indices at which the fraction sequence crosses below `t_star`.
pub fn crossing_indices(fractions: &[f64], t_star: f64) -> Vec<usize> {
    let mut det = AlarmDetector::new(t_star);
    fractions
        .iter()
        .enumerate()
        .filter_map(|(k, &q)| det.observe(q).then_some(k))
        .collect()
}

pub fn detect_alarms(histograms: &[PatternHistogram], params: &DescriptorParams) -> Vec<AlarmEvent> {
    let mut det = AlarmDetector::new(params.bin_threshold);
    histograms.iter().filter_map(|h| det.update(h)).collect()
}
