//! Prints Mandel Q for the coherent, thermal and heralded regimes.
//!
//! cargo run --release -p photonstat --example regimes

use photonstat::sim::{gen_coherent, gen_spdc, iteration_seed};
use photonstat::stats::{analyze_heralded, analyze_iterations, QReport, WindowMode};
use photonstat::{EventSeries, SimConfig, SourceKind};

const ITERATIONS: u64 = 10;

fn show(label: &str, report: &QReport) {
    println!(
        "{label:>10}: Q = {:+.4} +/- {:.4}  (bin widths {:?})",
        report.q_mean,
        report.q_std.unwrap_or(f64::NAN),
        report.bin_widths
    );
}

fn main() -> photonstat::Result<()> {
    let coherent: Vec<EventSeries> = (0..ITERATIONS)
        .map(|i| {
            let mut cfg = SimConfig::new(SourceKind::Coherent, 20.5e-3);
            cfg.photon_rate_hz = 5e6;
            cfg.dead_time_s = 0.0;
            cfg.rng_seed = iteration_seed(1, i);
            gen_coherent(&cfg).map(|r| r.series)
        })
        .collect::<photonstat::Result<_>>()?;
    show(
        "coherent",
        &QReport::from_iterations(&analyze_iterations(&coherent, 1.0)?)?,
    );

    let mut thermal = SimConfig::new(SourceKind::SpdcPair, 20.5e-3);
    thermal.mean_pairs_per_mode = 1.0;
    thermal.mode_time_s = 200e-9;
    thermal.efficiency_signal = 0.8;
    thermal.efficiency_idler = 0.8;
    let mut arms = Vec::new();
    for i in 0..ITERATIONS {
        thermal.rng_seed = iteration_seed(3, i);
        arms.push(gen_spdc(&thermal)?.signal);
    }
    show("thermal", &QReport::from_iterations(&analyze_iterations(&arms, 1.0)?)?);

    let mut pairs = SimConfig::new(SourceKind::SpdcPair, 20.5e-3);
    pairs.mean_pairs_per_mode = 0.3;
    pairs.efficiency_signal = 0.8;
    pairs.efficiency_idler = 0.8;
    let (mut signals, mut idlers) = (Vec::new(), Vec::new());
    for i in 0..ITERATIONS {
        pairs.rng_seed = iteration_seed(2024, i);
        let run = gen_spdc(&pairs)?;
        signals.push(run.signal);
        idlers.push(run.idler);
    }
    let heralded = analyze_heralded(&signals, &idlers, 1, WindowMode::Symmetric, 1.0)?;
    show("heralded", &QReport::from_iterations(&heralded)?);
    Ok(())
}
