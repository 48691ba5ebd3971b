//! Photon-counting statistics toolkit.
//!
//! The pipeline turns detector waveforms into bit-packed detection series,
//! gates one arm on the other to form a heralded stream, bins the result into
//! a photon-number distribution and reports the Mandel Q-parameter
//! `Q = (<(Δn)²> - <n>) / <n>`.
//!
//! - [`events`]: trace formats, threshold digitization, dead time.
//! - [`stats`]: binning, bin-width calibration, coincidences, moments, Q.
//! - [`sim`]: Monte Carlo generator for coherent and SPDC pair sources.

pub mod error;
pub mod events;
pub mod sim;
pub mod stats;

pub use error::{Error, ErrorKind, Result};
pub use events::{AnalogTrace, EventSeries, Thresholds, TraceFormat};
pub use sim::{SimConfig, SourceKind};
pub use stats::{CountHistogram, IterationStats, QReport, WindowMode};
