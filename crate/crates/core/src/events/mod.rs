//! Detector waveforms and the binary detection series derived from them.

mod dead_time;
mod digitize;
mod series;
mod trace;

pub use dead_time::{apply_dead_time, apply_dead_time_slots, dead_time_slots};
pub use digitize::{digitize, digitize_sequential, Thresholds, DEFAULT_THRESHOLD_HIGH, DEFAULT_THRESHOLD_LOW};
pub use series::{EventSeries, EVENT_MAGIC};
pub use trace::{parse_trace, write_trace, AnalogTrace, TraceFormat, CSV_MAGIC, RAW_MAGIC};
