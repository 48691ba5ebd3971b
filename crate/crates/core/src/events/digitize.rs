use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::events::series::words_for;
use crate::events::{AnalogTrace, EventSeries};

/// TTL-compatible defaults in volts.
pub const DEFAULT_THRESHOLD_HIGH: f64 = 1.5;
pub const DEFAULT_THRESHOLD_LOW: f64 = 0.5;

/// Samples per parallel work unit. A multiple of 64 so chunks own whole words.
const CHUNK_SAMPLES: usize = 1 << 16;

/// Comparator levels for onset detection.
///
/// An onset fires at the first sample `>= high` while armed; the comparator
/// then disarms and re-arms only once a sample falls `< low`. The single
/// threshold mode is the degenerate case `low == high`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    high: f64,
    low: f64,
}

impl Thresholds {
    pub fn hysteresis(high: f64, low: f64) -> Result<Self> {
        if !(high.is_finite() && low.is_finite()) {
            return Err(Error::Argument(format!(
                "thresholds must be finite, got high={high} low={low}"
            )));
        }
        if low >= high {
            return Err(Error::Argument(format!(
                "threshold_low ({low}) must be below threshold_high ({high})"
            )));
        }
        Ok(Self { high, low })
    }

    pub fn single(level: f64) -> Result<Self> {
        if !level.is_finite() {
            return Err(Error::Argument(format!("threshold must be finite, got {level}")));
        }
        Ok(Self {
            high: level,
            low: level,
        })
    }

    pub fn high(&self) -> f64 {
        self.high
    }

    pub fn low(&self) -> f64 {
        self.low
    }

    /// Comparator state forced by a sample, if any: `Some(true)` armed,
    /// `Some(false)` disarmed, `None` when the sample sits between the levels.
    #[inline]
    fn decisive(&self, v: f32) -> Option<bool> {
        let v = f64::from(v);
        if v >= self.high {
            Some(false)
        } else if v < self.low {
            Some(true)
        } else {
            None
        }
    }
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            high: DEFAULT_THRESHOLD_HIGH,
            low: DEFAULT_THRESHOLD_LOW,
        }
    }
}

/// Scans `samples` starting from the given comparator state, setting onset
/// bits into `words` (bit 0 of `words[0]` is `samples[0]`). Returns the final
/// state.
fn scan(samples: &[f32], th: &Thresholds, mut armed: bool, words: &mut [u64]) -> bool {
    for (i, &v) in samples.iter().enumerate() {
        let v = f64::from(v);
        if armed {
            if v >= th.high {
                words[i / 64] |= 1 << (i % 64);
                armed = false;
            }
        } else if v < th.low {
            armed = true;
        }
    }
    armed
}

fn check(trace: &AnalogTrace) -> Result<()> {
    if trace.is_empty() {
        return Err(Error::Argument("cannot digitize an empty trace".into()));
    }
    Ok(())
}

/// Converts a waveform into a binary onset series with the same length and
/// resolution. The comparator starts armed, so a trace that opens above
/// `high` reports an onset at slot 0.
///
/// Chunks are scanned in parallel; each chunk's entry state is resolved from
/// the last decisive sample before it, so the output is bit-identical to
/// [`digitize_sequential`].
pub fn digitize(trace: &AnalogTrace, thresholds: &Thresholds) -> Result<EventSeries> {
    check(trace)?;
    let samples = trace.samples();
    let exits: Vec<Option<bool>> = samples
        .par_chunks(CHUNK_SAMPLES)
        .map(|chunk| chunk.iter().rev().find_map(|&v| thresholds.decisive(v)))
        .collect();
    let mut entry = Vec::with_capacity(exits.len());
    let mut state = true;
    for exit in &exits {
        entry.push(state);
        if let Some(s) = exit {
            state = *s;
        }
    }

    let mut words = vec![0u64; words_for(samples.len())];
    words
        .par_chunks_mut(CHUNK_SAMPLES / 64)
        .zip(samples.par_chunks(CHUNK_SAMPLES))
        .zip(entry.par_iter())
        .for_each(|((w, s), &armed)| {
            scan(s, thresholds, armed, w);
        });
    EventSeries::from_words(samples.len(), trace.sample_period(), 0.0, words)
}

/// Single-pass reference scan.
pub fn digitize_sequential(trace: &AnalogTrace, thresholds: &Thresholds) -> Result<EventSeries> {
    check(trace)?;
    let mut words = vec![0u64; words_for(trace.len())];
    scan(trace.samples(), thresholds, true, &mut words);
    EventSeries::from_words(trace.len(), trace.sample_period(), 0.0, words)
}
