//! Photon-number distributions and the Mandel Q-parameter.

mod binning;
mod coincidence;
mod histogram;
mod report;

pub use binning::{bin_counts, calibrate_bin_width, DEFAULT_TARGET_MEAN};
pub use coincidence::{herald, WindowMode};
pub use histogram::{histogram, mandel_q, moments, CountHistogram, Moments};
pub use report::{aggregate, analyze_heralded, analyze_iterations, analyze_series, IterationStats, QReport, Spread};

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_exact(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// Short human-readable form shown next to exact values.
pub fn fmt_display(v: f64) -> String {
    format!("{v:.4}")
}
