use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::events::EventSeries;

/// Which idler slots can herald a signal event in slot `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowMode {
    /// Idler anywhere in `[k - w, k + w]`.
    #[default]
    Symmetric,
    /// Idler in `[k - w, k]`: the herald opens a window forward in time.
    Forward,
}

impl FromStr for WindowMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symmetric" => Ok(WindowMode::Symmetric),
            "forward" => Ok(WindowMode::Forward),
            other => Err(Error::Argument(format!("unknown window mode '{other}'"))),
        }
    }
}

impl std::fmt::Display for WindowMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            WindowMode::Symmetric => "symmetric",
            WindowMode::Forward => "forward",
        })
    }
}

const CHUNK_WORDS: usize = 1 << 10;

/// Keeps the signal events that have at least one idler event within the
/// coincidence window. The output lives on the signal arm's time base; one
/// idler event may herald several signal events.
pub fn herald(signal: &EventSeries, idler: &EventSeries, window_slots: usize, mode: WindowMode) -> Result<EventSeries> {
    if signal.resolution() != idler.resolution() {
        return Err(Error::Argument(format!(
            "resolution mismatch: signal {} s, idler {} s",
            signal.resolution(),
            idler.resolution()
        )));
    }
    if signal.len() != idler.len() {
        return Err(Error::Argument(format!(
            "length mismatch: signal {} slots, idler {} slots",
            signal.len(),
            idler.len()
        )));
    }
    let mut out = signal.cleared();
    out.words_mut()
        .par_chunks_mut(CHUNK_WORDS)
        .enumerate()
        .for_each(|(c, chunk)| {
            let base = c * CHUNK_WORDS;
            for (j, word) in chunk.iter_mut().enumerate() {
                let mut bits = signal.words()[base + j];
                while bits != 0 {
                    let bit = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    let k = (base + j) * 64 + bit;
                    let lo = k.saturating_sub(window_slots);
                    let hi = match mode {
                        WindowMode::Symmetric => k.saturating_add(window_slots),
                        WindowMode::Forward => k,
                    };
                    if idler.any_in(lo..hi.saturating_add(1)) {
                        *word |= 1 << bit;
                    }
                }
            }
        });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(signal: &[usize], idler: &[usize], w: usize, mode: WindowMode) -> Vec<usize> {
        let s = EventSeries::from_slots(20, 1e-9, signal.iter().copied()).unwrap();
        let i = EventSeries::from_slots(20, 1e-9, idler.iter().copied()).unwrap();
        herald(&s, &i, w, mode).unwrap().ones().collect()
    }

    #[test]
    fn window_examples() {
        let sym = WindowMode::Symmetric;
        assert_eq!(run(&[5], &[5], 1, sym), vec![5]);
        assert_eq!(run(&[5], &[6], 1, sym), vec![5]);
        assert_eq!(run(&[5], &[4], 1, sym), vec![5]);
        assert_eq!(run(&[5], &[8], 1, sym), Vec::<usize>::new());
        assert_eq!(run(&[5], &[6], 0, sym), Vec::<usize>::new());
    }

    #[test]
    fn one_idler_heralds_several_signals() {
        assert_eq!(run(&[4, 5, 6], &[5], 1, WindowMode::Symmetric), vec![4, 5, 6]);
    }

    #[test]
    fn forward_window_looks_back_only() {
        assert_eq!(run(&[5], &[4], 1, WindowMode::Forward), vec![5]);
        assert_eq!(run(&[5], &[6], 1, WindowMode::Forward), Vec::<usize>::new());
    }

    #[test]
    fn window_clips_at_edges() {
        assert_eq!(run(&[0, 19], &[1, 18], 1, WindowMode::Symmetric), vec![0, 19]);
        assert_eq!(run(&[0], &[19], usize::MAX, WindowMode::Symmetric), vec![0]);
    }

    #[test]
    fn mismatches_rejected() {
        let a = EventSeries::zeros(10, 1e-9).unwrap();
        let b = EventSeries::zeros(11, 1e-9).unwrap();
        let c = EventSeries::zeros(10, 2e-9).unwrap();
        assert!(matches!(
            herald(&a, &b, 1, WindowMode::Symmetric),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            herald(&a, &c, 1, WindowMode::Symmetric),
            Err(Error::Argument(_))
        ));
    }
}
