use crate::error::{Error, Result};
use crate::events::{AnalogTrace, EventSeries};

/// Rectangular TTL pulse used to render an event series as a waveform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseShape {
    pub width_samples: usize,
    pub amplitude: f32,
    pub baseline: f32,
}

impl Default for PulseShape {
    fn default() -> Self {
        Self {
            width_samples: 10,
            amplitude: 3.3,
            baseline: 0.0,
        }
    }
}

/// Renders one pulse per event, sampled at the series resolution. A pulse is
/// cut short so at least one baseline sample precedes the next event, which
/// keeps every onset distinct under threshold digitization. Events in
/// adjacent slots cannot be separated that way and are rejected.
pub fn synthesize_trace(series: &EventSeries, shape: PulseShape, channel_label: &str) -> Result<AnalogTrace> {
    if shape.width_samples == 0 {
        return Err(Error::Argument("pulse width must be at least one sample".into()));
    }
    if !(shape.amplitude.is_finite() && shape.baseline.is_finite()) {
        return Err(Error::Argument("pulse levels must be finite".into()));
    }
    let n = series.len();
    let mut samples = vec![shape.baseline; n];
    let mut ones = series.ones().peekable();
    while let Some(k) = ones.next() {
        let mut end = (k + shape.width_samples).min(n);
        if let Some(&next) = ones.peek() {
            if next == k + 1 {
                return Err(Error::Argument(format!(
                    "events in adjacent slots {k} and {next} cannot be drawn as separate pulses"
                )));
            }
            end = end.min(next - 1);
        }
        samples[k..end].fill(shape.amplitude);
    }
    AnalogTrace::new(series.resolution(), samples, channel_label)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{digitize, Thresholds};

    #[test]
    fn pulses_digitize_back() {
        let s = EventSeries::from_slots(200, 1e-9, [0, 5, 7, 60, 199]).unwrap();
        let t = synthesize_trace(&s, PulseShape::default(), "sig").unwrap();
        assert_eq!(t.samples()[0..4], [3.3; 4]);
        assert_eq!(t.samples()[4], 0.0);
        assert_eq!(t.samples()[69], 3.3);
        assert_eq!(t.samples()[70], 0.0);
        assert_eq!(digitize(&t, &Thresholds::default()).unwrap(), s);
    }

    #[test]
    fn adjacent_events_rejected() {
        let s = EventSeries::from_slots(10, 1e-9, [3, 4]).unwrap();
        assert!(synthesize_trace(&s, PulseShape::default(), "").is_err());
    }
}
