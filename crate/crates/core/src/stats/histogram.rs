use std::io::Write;

use crate::error::{Error, Result};
use crate::stats::{fmt_display, fmt_exact};

/// Photon-number distribution: how many bins held exactly `n` detections.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountHistogram {
    bin_width_slots: usize,
    /// `counts_per_n[n]` bins contained `n` events; the last entry is non-zero.
    counts_per_n: Vec<u64>,
    total_bins: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    /// Population variance of the per-bin counts.
    pub variance: f64,
}

impl Moments {
    pub fn q(&self) -> Result<f64> {
        mandel_q(self.mean, self.variance)
    }
}

pub fn histogram(counts: &[u32], bin_width_slots: usize) -> Result<CountHistogram> {
    if counts.is_empty() {
        return Err(Error::Argument("cannot build a histogram from zero bins".into()));
    }
    if bin_width_slots == 0 {
        return Err(Error::Argument("bin width must be at least one slot".into()));
    }
    let max = *counts.iter().max().unwrap() as usize;
    let mut counts_per_n = vec![0u64; max + 1];
    for &c in counts {
        counts_per_n[c as usize] += 1;
    }
    Ok(CountHistogram {
        bin_width_slots,
        counts_per_n,
        total_bins: counts.len() as u64,
    })
}

impl CountHistogram {
    pub fn bin_width_slots(&self) -> usize {
        self.bin_width_slots
    }

    pub fn total_bins(&self) -> u64 {
        self.total_bins
    }

    /// Dense table indexed by photon number.
    pub fn counts_per_n(&self) -> &[u64] {
        &self.counts_per_n
    }

    pub fn count(&self, n: usize) -> u64 {
        self.counts_per_n.get(n).copied().unwrap_or(0)
    }

    pub fn probability(&self, n: usize) -> f64 {
        self.count(n) as f64 / self.total_bins as f64
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let total = self.total_bins as f64;
        self.counts_per_n.iter().map(|&c| c as f64 / total).collect()
    }

    pub fn moments(&self) -> Moments {
        moments(self)
    }

    /// CSV with `#` header lines carrying bin width, bin total, mean,
    /// variance and Q, then `n,count,probability` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e| Error::io("<stream>", e);
        let m = self.moments();
        writeln!(out, "# photonstat-histogram v1").map_err(io)?;
        writeln!(out, "# bin_width_slots={}", self.bin_width_slots).map_err(io)?;
        writeln!(out, "# total_bins={}", self.total_bins).map_err(io)?;
        writeln!(out, "# mean={} ({})", fmt_exact(m.mean), fmt_display(m.mean)).map_err(io)?;
        writeln!(
            out,
            "# variance={} ({})",
            fmt_exact(m.variance),
            fmt_display(m.variance)
        )
        .map_err(io)?;
        match m.q() {
            Ok(q) => writeln!(out, "# q={} ({})", fmt_exact(q), fmt_display(q)),
            Err(_) => writeln!(out, "# q=undefined"),
        }
        .map_err(io)?;
        writeln!(out, "n,count,probability").map_err(io)?;
        for (n, &c) in self.counts_per_n.iter().enumerate() {
            writeln!(out, "{n},{c},{}", fmt_exact(self.probability(n))).map_err(io)?;
        }
        out.flush().map_err(io)
    }

    /// Self-contained SVG bar chart of p(n), with the Poisson distribution of
    /// the same mean drawn as markers for reference.
    pub fn write_svg<W: Write>(&self, mut out: W, title: &str) -> Result<()> {
        let io = |e| Error::io("<stream>", e);
        let (w, h, pad) = (640.0, 400.0, 50.0);
        let probs = self.probabilities();
        let m = self.moments();
        let poisson: Vec<f64> = (0..probs.len())
            .scan(1.0f64, |fact, n| {
                if n > 0 {
                    *fact *= n as f64;
                }
                Some((-m.mean).exp() * m.mean.powi(n as i32) / *fact)
            })
            .collect();
        let top = probs.iter().chain(&poisson).cloned().fold(0.0, f64::max).max(1e-12);
        let bar = (w - 2.0 * pad) / probs.len() as f64;
        let y = |p: f64| h - pad - p / top * (h - 2.0 * pad);

        writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
        )
        .map_err(io)?;
        writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).map_err(io)?;
        let q = m.q().map(|q| format!("{q:.3}")).unwrap_or_else(|_| "undefined".into());
        writeln!(
            out,
            r#"<text x="{pad}" y="30" font-family="sans-serif" font-size="14">{} (mean {:.3}, variance {:.3}, Q {q})</text>"#,
            escape(title),
            m.mean,
            m.variance
        )
        .map_err(io)?;
        for (n, p) in probs.iter().enumerate() {
            let x = pad + n as f64 * bar;
            writeln!(
                out,
                r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#4a7ab5"/>"##,
                x + 0.1 * bar,
                y(*p),
                0.8 * bar,
                h - pad - y(*p)
            )
            .map_err(io)?;
            writeln!(
                out,
                r##"<circle cx="{:.2}" cy="{:.2}" r="4" fill="#d95f02"/>"##,
                x + 0.5 * bar,
                y(poisson[n])
            )
            .map_err(io)?;
            writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">{n}</text>"#,
                x + 0.5 * bar,
                h - pad + 16.0
            )
            .map_err(io)?;
        }
        writeln!(
            out,
            r#"<line x1="{pad}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/>"#,
            h - pad,
            w - pad
        )
        .map_err(io)?;
        writeln!(out, "</svg>").map_err(io)?;
        out.flush().map_err(io)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Mean and population variance of the binned counts.
///
/// Sums are accumulated as integers and combined as
/// `(N Σn² - (Σn)²) / N²`, so the only rounding is the final division.
pub fn moments(h: &CountHistogram) -> Moments {
    let total = u128::from(h.total_bins);
    let mut sum = 0u128;
    let mut sum_sq = 0u128;
    for (n, &c) in h.counts_per_n.iter().enumerate() {
        let (n, c) = (n as u128, u128::from(c));
        sum += n * c;
        sum_sq += n * n * c;
    }
    let mean = sum as f64 / total as f64;
    let numerator = total
        .checked_mul(sum_sq)
        .and_then(|a| sum.checked_mul(sum).map(|b| a - b));
    let variance = match numerator {
        Some(num) => num as f64 / (total as f64 * total as f64),
        None => {
            // Out of u128 range: fall back to a two-pass float sum.
            let t = total as f64;
            h.counts_per_n
                .iter()
                .enumerate()
                .map(|(n, &c)| c as f64 * (n as f64 - mean).powi(2))
                .sum::<f64>()
                / t
        }
    };
    Moments { mean, variance }
}

/// `Q = (variance - mean) / mean`.
pub fn mandel_q(mean: f64, variance: f64) -> Result<f64> {
    if !(mean.is_finite() && mean > 0.0) {
        return Err(Error::Argument(format!("Q needs a positive mean, got {mean}")));
    }
    if !(variance.is_finite() && variance >= 0.0) {
        return Err(Error::Argument(format!(
            "Q needs a non-negative variance, got {variance}"
        )));
    }
    Ok((variance - mean) / mean)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tallies() {
        let h = histogram(&[2, 1], 5).unwrap();
        assert_eq!(h.counts_per_n(), &[0, 1, 1]);
        assert_eq!(h.total_bins(), 2);
        let h = histogram(&[0, 0, 0], 5).unwrap();
        assert_eq!(h.counts_per_n(), &[3]);
        assert!(histogram(&[], 5).is_err());
    }

    #[test]
    fn small_moments() {
        let m = histogram(&[0, 2], 1).unwrap().moments();
        assert_eq!((m.mean, m.variance), (1.0, 1.0));
        let m = histogram(&[1; 17], 1).unwrap().moments();
        assert_eq!((m.mean, m.variance), (1.0, 0.0));
        assert_eq!(m.q().unwrap(), -1.0);
    }

    #[test]
    fn q_values() {
        assert!((mandel_q(1.0, 1.06).unwrap() - 0.06).abs() <= 1e-12);
        assert_eq!(mandel_q(1.0, 1.0).unwrap(), 0.0);
        assert!((mandel_q(1.0, 0.9).unwrap() + 0.10).abs() <= 1e-12);
        assert!((mandel_q(1.0, 1.24).unwrap() - 0.24).abs() <= 1e-12);
        assert!((mandel_q(1.0, 1.28).unwrap() - 0.28).abs() <= 1e-12);
        assert!((mandel_q(2.0, 1.0).unwrap() + 0.5).abs() <= 1e-15);
    }

    #[test]
    fn q_rejects_bad_input() {
        assert!(mandel_q(0.0, 1.0).is_err());
        assert!(mandel_q(-1.0, 1.0).is_err());
        assert!(mandel_q(1.0, -0.1).is_err());
        assert!(mandel_q(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn csv_export() {
        let h = histogram(&[0, 2, 1, 1], 7).unwrap();
        let mut out = Vec::new();
        h.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1], "# bin_width_slots=7");
        assert_eq!(lines[2], "# total_bins=4");
        assert!(lines[3].starts_with("# mean=1.0000000000000000e0"));
        assert!(lines[4].starts_with("# variance=5.0000000000000000e-1"));
        assert!(lines[5].starts_with("# q=-5.0000000000000000e-1"));
        assert_eq!(lines[6], "n,count,probability");
        assert_eq!(lines[7], "0,1,2.5000000000000000e-1");
        assert_eq!(lines[8], "1,2,5.0000000000000000e-1");
        assert_eq!(lines.len(), 10);
    }

    #[test]
    fn svg_is_self_contained() {
        let h = histogram(&[0, 1, 1, 2, 3], 10).unwrap();
        let mut out = Vec::new();
        h.write_svg(&mut out, "a<b").unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("<svg"));
        assert!(text.trim_end().ends_with("</svg>"));
        assert!(text.contains("a&lt;b"));
        assert_eq!(text.matches("<rect").count(), 1 + 4);
    }
}
