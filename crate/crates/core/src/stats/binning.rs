use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::events::EventSeries;

/// Binning target: one detection per bin on average.
pub const DEFAULT_TARGET_MEAN: f64 = 1.0;

/// Counts 1-bits in consecutive windows of `bin_width_slots`. A trailing
/// partial window is dropped, so the result has `len / bin_width_slots`
/// entries.
pub fn bin_counts(series: &EventSeries, bin_width_slots: usize) -> Result<Vec<u32>> {
    if bin_width_slots == 0 {
        return Err(Error::Argument("bin width must be at least one slot".into()));
    }
    let n_bins = series.len() / bin_width_slots;
    Ok((0..n_bins)
        .into_par_iter()
        .with_min_len(1 << 12)
        .map(|k| series.count_ones_in(k * bin_width_slots..(k + 1) * bin_width_slots) as u32)
        .collect())
}

/// Running popcount at each word boundary: `prefix[i]` is the number of
/// 1-bits in words `0..i`.
fn word_prefix(series: &EventSeries) -> Vec<u64> {
    let mut acc = 0u64;
    let mut prefix = Vec::with_capacity(series.words().len() + 1);
    prefix.push(0);
    for w in series.words() {
        acc += u64::from(w.count_ones());
        prefix.push(acc);
    }
    prefix
}

fn ones_before(series: &EventSeries, prefix: &[u64], end: usize) -> u64 {
    let (word, bit) = (end / 64, end % 64);
    let mut n = prefix[word];
    if bit > 0 {
        n += u64::from((series.words()[word] & ((1u64 << bit) - 1)).count_ones());
    }
    n
}

/// Integer bin width whose mean count is closest to `target_mean` over all
/// widths from 1 to the series length. Ties go to the smaller width.
///
/// Widths sharing the same bin count `b = len / w` form a contiguous group in
/// which the mean `ones(b * w) / b` is non-decreasing, so each group is
/// settled by binary search instead of a full scan.
pub fn calibrate_bin_width(series: &EventSeries, target_mean: f64) -> Result<usize> {
    if !(target_mean.is_finite() && target_mean > 0.0) {
        return Err(Error::Argument(format!(
            "target mean must be positive and finite, got {target_mean}"
        )));
    }
    if series.count_ones() == 0 {
        return Err(Error::Statistics(
            "cannot calibrate bin width on a series without events".into(),
        ));
    }
    let prefix = word_prefix(series);
    let len = series.len();

    let mut groups = Vec::new();
    let mut lo = 1;
    while lo <= len {
        let bins = len / lo;
        let hi = len / bins;
        groups.push((bins, lo, hi));
        lo = hi + 1;
    }

    let best = groups
        .par_iter()
        .with_min_len(64)
        .map(|&(bins, lo, hi)| {
            let mean = |w: usize| ones_before(series, &prefix, bins * w) as f64 / bins as f64;
            // First width in [lo, hi] whose mean is at least `value`.
            let first_at_least = |lo: usize, hi: usize, value: f64| {
                let (mut a, mut b) = (lo, hi + 1);
                while a < b {
                    let m = a + (b - a) / 2;
                    if mean(m) < value {
                        a = m + 1;
                    } else {
                        b = m;
                    }
                }
                a
            };
            let mut best = (f64::INFINITY, usize::MAX);
            let mut consider = |w: usize| {
                let cand = ((mean(w) - target_mean).abs(), w);
                if cand.0 < best.0 || (cand.0 == best.0 && cand.1 < best.1) {
                    best = cand;
                }
            };
            let above = first_at_least(lo, hi, target_mean);
            if above <= hi {
                consider(above);
            }
            if above > lo {
                let below = mean(above - 1);
                consider(first_at_least(lo, above - 1, below));
            }
            best
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .expect("non-empty series has at least one width");
    Ok(best.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_count() {
        let s = EventSeries::from_slots(10, 1e-9, [0, 3, 7]).unwrap();
        assert_eq!(bin_counts(&s, 5).unwrap(), vec![2, 1]);
        assert_eq!(bin_counts(&s, 10).unwrap(), vec![3]);
        assert_eq!(bin_counts(&s, 3).unwrap(), vec![1, 1, 1]);
        assert_eq!(bin_counts(&s, 11).unwrap(), Vec::<u32>::new());
        assert!(bin_counts(&s, 0).is_err());
    }

    #[test]
    fn empty_series_gives_no_bins() {
        let s = EventSeries::zeros(0, 1e-9).unwrap();
        assert!(bin_counts(&s, 4).unwrap().is_empty());
    }

    #[test]
    fn calibration_rate_arithmetic() {
        let s = EventSeries::from_slots(1000, 1e-9, (0..100).map(|i| i * 10)).unwrap();
        assert_eq!(calibrate_bin_width(&s, 1.0).unwrap(), 10);
        assert_eq!(calibrate_bin_width(&s, 2.0).unwrap(), 20);
    }

    #[test]
    fn calibration_single_event() {
        // Only the full-length bin sees the event in the last slot.
        let s = EventSeries::from_slots(8, 1e-9, [7]).unwrap();
        assert_eq!(calibrate_bin_width(&s, 1.0).unwrap(), 8);
        // Earlier, the first single-bin width that covers it wins the tie.
        let s = EventSeries::from_slots(8, 1e-9, [3]).unwrap();
        assert_eq!(calibrate_bin_width(&s, 1.0).unwrap(), 5);
    }

    #[test]
    fn calibration_ties_prefer_smaller_width() {
        // Events at 0 and 2 in 4 slots: w=1 and w=2 both miss target 0.75
        // by 0.25 (means 0.5 and 1.0).
        let s = EventSeries::from_slots(4, 1e-9, [0, 2]).unwrap();
        assert_eq!(calibrate_bin_width(&s, 0.75).unwrap(), 1);
    }

    #[test]
    fn calibration_errors() {
        let s = EventSeries::zeros(100, 1e-9).unwrap();
        assert!(matches!(calibrate_bin_width(&s, 1.0), Err(Error::Statistics(_))));
        let s = EventSeries::from_slots(100, 1e-9, [1]).unwrap();
        assert!(matches!(calibrate_bin_width(&s, 0.0), Err(Error::Argument(_))));
    }
}
