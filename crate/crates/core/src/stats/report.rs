use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::events::EventSeries;
use crate::stats::{
    bin_counts, calibrate_bin_width, fmt_display, fmt_exact, herald, histogram, mandel_q, CountHistogram, Moments,
    WindowMode,
};

const REPORT_MAGIC: &str = "# photonstat-qreport v1";

/// Spread of Q across repeated acquisitions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spread {
    pub q_mean: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub q_std: f64,
}

pub fn aggregate(qs: &[f64]) -> Result<Spread> {
    if qs.len() < 2 {
        return Err(Error::Argument(format!(
            "need at least two iterations to aggregate, got {}",
            qs.len()
        )));
    }
    if let Some(q) = qs.iter().find(|q| !q.is_finite()) {
        return Err(Error::Argument(format!("non-finite Q value {q}")));
    }
    let n = qs.len() as f64;
    let q_mean = qs.iter().sum::<f64>() / n;
    let ss = qs.iter().map(|q| (q - q_mean).powi(2)).sum::<f64>();
    Ok(Spread {
        q_mean,
        q_std: (ss / (n - 1.0)).sqrt(),
    })
}

/// Result of calibrating, binning and histogramming one series.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationStats {
    pub events: u64,
    pub bin_width_slots: usize,
    pub histogram: CountHistogram,
    pub moments: Moments,
    pub q: f64,
}

/// Calibrates the bin width to `target_mean`, bins, and reports Q.
pub fn analyze_series(series: &EventSeries, target_mean: f64) -> Result<IterationStats> {
    let bin_width_slots = calibrate_bin_width(series, target_mean)?;
    let counts = bin_counts(series, bin_width_slots)?;
    let histogram = histogram(&counts, bin_width_slots)?;
    let moments = histogram.moments();
    let q = mandel_q(moments.mean, moments.variance)
        .map_err(|e| Error::Statistics(format!("calibrated bins give no Q: {e}")))?;
    Ok(IterationStats {
        events: series.count_ones(),
        bin_width_slots,
        histogram,
        moments,
        q,
    })
}

/// Runs [`analyze_series`] on each series, in parallel, preserving order.
pub fn analyze_iterations(series: &[EventSeries], target_mean: f64) -> Result<Vec<IterationStats>> {
    series.par_iter().map(|s| analyze_series(s, target_mean)).collect()
}

/// Heralds each signal/idler pair and analyzes the coincidence stream.
pub fn analyze_heralded(
    signals: &[EventSeries],
    idlers: &[EventSeries],
    window_slots: usize,
    mode: WindowMode,
    target_mean: f64,
) -> Result<Vec<IterationStats>> {
    if signals.len() != idlers.len() {
        return Err(Error::Argument(format!(
            "{} signal series but {} idler series",
            signals.len(),
            idlers.len()
        )));
    }
    signals
        .par_iter()
        .zip(idlers.par_iter())
        .map(|(s, i)| analyze_series(&herald(s, i, window_slots, mode)?, target_mean))
        .collect()
}

/// Q summary over one or more iterations.
///
/// `mean` and `variance` average the per-iteration moments and `q` is formed
/// from them; `q_mean`/`q_std` describe the per-iteration Q values. With a
/// single iteration `q_std` is undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct QReport {
    pub mean: f64,
    pub variance: f64,
    pub q: f64,
    pub per_iteration_q: Vec<f64>,
    pub bin_widths: Vec<usize>,
    pub q_mean: f64,
    pub q_std: Option<f64>,
    /// Free-form lines written as `#` comments in the header.
    pub notes: Vec<String>,
}

impl QReport {
    pub fn from_iterations(iterations: &[IterationStats]) -> Result<Self> {
        if iterations.is_empty() {
            return Err(Error::Argument("no iterations to report".into()));
        }
        let n = iterations.len() as f64;
        let mean = iterations.iter().map(|it| it.moments.mean).sum::<f64>() / n;
        let variance = iterations.iter().map(|it| it.moments.variance).sum::<f64>() / n;
        let q = mandel_q(mean, variance).map_err(|e| Error::Statistics(e.to_string()))?;
        let per_iteration_q: Vec<f64> = iterations.iter().map(|it| it.q).collect();
        let (q_mean, q_std) = if per_iteration_q.len() >= 2 {
            let s = aggregate(&per_iteration_q)?;
            (s.q_mean, Some(s.q_std))
        } else {
            (per_iteration_q[0], None)
        };
        Ok(Self {
            mean,
            variance,
            q,
            bin_widths: iterations.iter().map(|it| it.bin_width_slots).collect(),
            per_iteration_q,
            q_mean,
            q_std,
            notes: Vec::new(),
        })
    }

    pub fn iterations(&self) -> usize {
        self.per_iteration_q.len()
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e| Error::io("<stream>", e);
        let kv =
            |out: &mut W, key: &str, v: f64| writeln!(out, "{key}={}  # {}", fmt_exact(v), fmt_display(v)).map_err(io);
        writeln!(out, "{REPORT_MAGIC}").map_err(io)?;
        for note in &self.notes {
            writeln!(out, "# {note}").map_err(io)?;
        }
        writeln!(out, "iterations={}", self.iterations()).map_err(io)?;
        kv(&mut out, "mean", self.mean)?;
        kv(&mut out, "variance", self.variance)?;
        kv(&mut out, "q", self.q)?;
        kv(&mut out, "q_mean", self.q_mean)?;
        match self.q_std {
            Some(s) => kv(&mut out, "q_std", s)?,
            None => writeln!(out, "q_std=undefined").map_err(io)?,
        }
        for (i, q) in self.per_iteration_q.iter().enumerate() {
            kv(&mut out, &format!("q[{i}]"), *q)?;
        }
        for (i, w) in self.bin_widths.iter().enumerate() {
            writeln!(out, "bin_width[{i}]={w}").map_err(io)?;
        }
        out.flush().map_err(io)
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut notes = Vec::new();
        let mut fields = BTreeMap::new();
        for (i, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<stream>", e))?;
            let n = i + 1;
            if n == 1 {
                if line.trim_end() != REPORT_MAGIC {
                    return Err(Error::format_at_line(1, format!("expected '{REPORT_MAGIC}'")));
                }
                continue;
            }
            if let Some(note) = line.strip_prefix('#') {
                notes.push(note.trim().to_owned());
                continue;
            }
            let body = line.split('#').next().unwrap().trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| Error::format_at_line(n, "expected key=value"))?;
            fields.insert(key.trim().to_owned(), (n, value.trim().to_owned()));
        }

        let get = |key: &str| -> Result<&(usize, String)> {
            fields
                .get(key)
                .ok_or_else(|| Error::format_at_line(0, format!("missing key '{key}'")))
        };
        let float = |key: &str| -> Result<f64> {
            let (n, v) = get(key)?;
            v.parse()
                .map_err(|_| Error::format_at_line(*n, format!("'{key}' is not a number")))
        };
        let (n, it) = get("iterations")?;
        let iterations: usize = it
            .parse()
            .map_err(|_| Error::format_at_line(*n, "'iterations' is not an integer"))?;
        let per_iteration_q = (0..iterations)
            .map(|i| float(&format!("q[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        let bin_widths = (0..iterations)
            .filter_map(|i| fields.get(&format!("bin_width[{i}]")))
            .map(|(n, v)| {
                v.parse()
                    .map_err(|_| Error::format_at_line(*n, "bin width is not an integer"))
            })
            .collect::<Result<Vec<_>>>()?;
        let q_std = match get("q_std")?.1.as_str() {
            "undefined" => None,
            _ => Some(float("q_std")?),
        };
        Ok(Self {
            mean: float("mean")?,
            variance: float("variance")?,
            q: float("q")?,
            per_iteration_q,
            bin_widths,
            q_mean: float("q_mean")?,
            q_std,
            notes,
        })
    }
}
