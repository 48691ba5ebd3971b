use crate::error::{Error, Result};
use crate::events::EventSeries;

/// Dead time expressed in whole slots, `ceil(dead_time / resolution)`.
///
/// Ratios within 1e-9 relative of an integer snap to it first, so 22 ns at
/// 1 ns is 22 slots even though `22e-9 / 1e-9` is not exactly 22 in binary.
pub fn dead_time_slots(dead_time: f64, resolution: f64) -> Result<usize> {
    if !(dead_time.is_finite() && dead_time >= 0.0) {
        return Err(Error::Argument(format!(
            "dead time must be non-negative and finite, got {dead_time}"
        )));
    }
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(Error::Argument(format!("invalid resolution {resolution}")));
    }
    let ratio = dead_time / resolution;
    let nearest = ratio.round();
    let slots = if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        ratio.ceil()
    };
    if slots > usize::MAX as f64 {
        return Err(Error::Argument(format!("dead time {dead_time} s is too long")));
    }
    Ok(slots as usize)
}

/// Non-paralyzable dead time: scanning forward, an event survives only if at
/// least `ceil(dead_time / resolution)` slots separate it from the previous
/// surviving event. Suppressed events do not extend the window.
pub fn apply_dead_time(series: &EventSeries, dead_time: f64) -> Result<EventSeries> {
    let slots = dead_time_slots(dead_time, series.resolution())?;
    Ok(apply_dead_time_slots(series, slots))
}

pub fn apply_dead_time_slots(series: &EventSeries, slots: usize) -> EventSeries {
    if slots <= 1 {
        return series.clone();
    }
    let mut out = series.cleared();
    let words = out.words_mut();
    let mut last: Option<usize> = None;
    for k in series.ones() {
        if last.is_none_or(|l| k - l >= slots) {
            words[k / 64] |= 1 << (k % 64);
            last = Some(k);
        }
    }
    out
}
