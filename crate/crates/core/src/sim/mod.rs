//! Monte Carlo detection chain for coherent and SPDC pair sources.
//!
//! The generator works with classical point processes: photon arrivals and
//! per-mode pair numbers are drawn from prescribed counting distributions,
//! thinned by detector efficiency, collapsed onto slots (detectors are not
//! number resolving), and passed through non-paralyzable dead time.

mod config;
mod generate;
mod rng;
mod synth;

pub use config::{OamScale, SimConfig, SourceKind};
pub use generate::{gen_coherent, gen_spdc, simulate, CoherentRun, SimRun, SpdcRun};
pub use rng::{block_rng, derive_seed, iteration_seed, splitmix64, Stream, RNG_ALGORITHM};
pub use synth::{synthesize_trace, PulseShape};
