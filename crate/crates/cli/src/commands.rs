use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use photonstat::events::{
    apply_dead_time, digitize as digitize_trace, AnalogTrace, EventSeries, Thresholds, TraceFormat,
};
use photonstat::sim::{iteration_seed, simulate as run_sim, synthesize_trace, PulseShape, SimRun, RNG_ALGORITHM};
use photonstat::stats::{
    analyze_heralded, analyze_iterations, fmt_display, herald as herald_series, IterationStats, QReport,
};
use photonstat::SimConfig;
use rayon::prelude::*;

use crate::manifest::RunManifest;
use crate::{with_suffix, Cli, CliError, DigitizeArgs, HeraldArgs, PlotFormat, ReportArgs, SimulateArgs, StatsArgs};

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn finish(mut out: BufWriter<File>, path: &Path) -> Result<(), CliError> {
    out.flush().map_err(|e| CliError::io(path, e))
}

fn load_events(path: &Path) -> Result<EventSeries, CliError> {
    Ok(EventSeries::load(path)?)
}

pub fn simulate(cli: &Cli, args: &SimulateArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let mut cfg = SimConfig::load(&args.config)?;
    if let Some(seed) = cli.seed {
        cfg.rng_seed = seed;
    }
    cfg.validate()?;
    let shape = PulseShape {
        width_samples: args.pulse_width,
        amplitude: args.pulse_amplitude,
        ..PulseShape::default()
    };

    let mut manifest = RunManifest::new();
    manifest.add_input(&args.config)?;
    manifest.config = Some(cfg.to_text());
    manifest.rng = Some(RNG_ALGORITHM.to_string());

    let seeds: Vec<u64> = (0..args.iterations as u64)
        .map(|i| iteration_seed(cfg.rng_seed, i))
        .collect();
    // Iterations are generated a pool-width at a time so memory stays bounded
    // by the worker count; files are written in iteration order.
    let batch = rayon::current_num_threads().max(1);
    for (b, chunk) in seeds.chunks(batch).enumerate() {
        let runs = chunk
            .par_iter()
            .map(|&seed| {
                let mut c = cfg.clone();
                c.rng_seed = seed;
                run_sim(&c)
            })
            .collect::<photonstat::Result<Vec<_>>>()?;
        for (j, run) in runs.iter().enumerate() {
            let i = b * batch + j;
            for w in run.warnings() {
                warn!("iteration {i}: {w}");
                manifest.warnings.push(format!("iteration {i}: {w}"));
            }
            let arms: Vec<(&str, &EventSeries)> = match run {
                SimRun::Coherent(r) => vec![("", &r.series)],
                SimRun::Spdc(r) => vec![(".signal", &r.signal), (".idler", &r.idler)],
            };
            for (arm, series) in arms {
                let stem = format!(".iter{i:02}{arm}");
                let path = with_suffix(&args.out, &format!("{stem}.ev"));
                series.save(&path)?;
                manifest.add_output(&path)?;
                if args.emit_trace {
                    let label = arm.trim_start_matches('.');
                    let trace = synthesize_trace(series, shape, if label.is_empty() { "detector" } else { label })?;
                    let path = with_suffix(&args.out, &format!("{stem}.rawf32"));
                    trace.save(&path, TraceFormat::RawF32)?;
                    manifest.add_output(&path)?;
                }
                info!(
                    "iteration {i}{arm}: {} events in {} slots",
                    series.count_ones(),
                    series.len()
                );
            }
        }
    }
    manifest.iteration_seeds = seeds;
    let manifest_path = with_suffix(&args.out, ".manifest.json");
    manifest.save(&manifest_path, start.elapsed())?;
    println!(
        "wrote {} files for {} iteration(s); manifest {}",
        manifest.outputs.len(),
        args.iterations,
        manifest_path.display()
    );
    Ok(())
}

pub fn digitize(args: &DigitizeArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let thresholds = match args.single_threshold {
        Some(level) => Thresholds::single(level)?,
        None => Thresholds::hysteresis(args.threshold_high, args.threshold_low)?,
    };
    let trace = AnalogTrace::load(&args.trace, args.trace_format)?;
    let mut series = digitize_trace(&trace, &thresholds)?;
    drop(trace);
    if let Some(dead) = args.dead_time {
        series = apply_dead_time(&series, dead)?;
    }
    series.save(&args.out)?;

    let mut manifest = RunManifest::new();
    manifest.add_input(&args.trace)?;
    manifest.add_output(&args.out)?;
    manifest.save(&with_suffix(&args.out, ".manifest.json"), start.elapsed())?;
    println!(
        "{} events in {} slots -> {}",
        series.count_ones(),
        series.len(),
        args.out.display()
    );
    Ok(())
}

pub fn herald(args: &HeraldArgs) -> Result<(), CliError> {
    let start = Instant::now();
    let signal = load_events(&args.signal)?;
    let idler = load_events(&args.idler)?;
    let out = herald_series(&signal, &idler, args.window, args.window_mode)?;
    out.save(&args.out)?;

    let mut manifest = RunManifest::new();
    manifest.add_input(&args.signal)?;
    manifest.add_input(&args.idler)?;
    manifest.add_output(&args.out)?;
    manifest.save(&with_suffix(&args.out, ".manifest.json"), start.elapsed())?;
    println!(
        "{} of {} signal events heralded -> {}",
        out.count_ones(),
        signal.count_ones(),
        args.out.display()
    );
    Ok(())
}

/// Library pipeline behind `stats`.
fn stats_iterations(
    signals: &[EventSeries],
    idlers: Option<&[EventSeries]>,
    args: &StatsArgs,
) -> Result<Vec<IterationStats>, CliError> {
    Ok(match idlers {
        Some(idlers) => analyze_heralded(signals, idlers, args.window, args.window_mode, args.target_mean)?,
        None => analyze_iterations(signals, args.target_mean)?,
    })
}

fn load_all(paths: &[PathBuf]) -> Result<Vec<EventSeries>, CliError> {
    paths.par_iter().map(|p| load_events(p)).collect()
}

pub fn stats(cli: &Cli, args: &StatsArgs) -> Result<(), CliError> {
    let start = Instant::now();
    if !args.herald.is_empty() && args.herald.len() != args.events.len() {
        return Err(CliError::argument(format!(
            "--herald needs one idler file per event file ({} event files, {} idler files)",
            args.events.len(),
            args.herald.len()
        )));
    }
    let signals = load_all(&args.events)?;
    let idlers = if args.herald.is_empty() {
        None
    } else {
        Some(load_all(&args.herald)?)
    };
    let iterations = stats_iterations(&signals, idlers.as_deref(), args)?;

    let mut manifest = RunManifest::new();
    for p in args.events.iter().chain(&args.herald) {
        manifest.add_input(p)?;
    }
    for (i, it) in iterations.iter().enumerate() {
        let csv = with_suffix(&args.out, &format!(".iter{i:02}.hist.csv"));
        let mut out = create(&csv)?;
        it.histogram.write_csv(&mut out)?;
        finish(out, &csv)?;
        manifest.add_output(&csv)?;
        if cli.format == PlotFormat::Svg {
            let svg = with_suffix(&args.out, &format!(".iter{i:02}.hist.svg"));
            let mut out = create(&svg)?;
            let title = format!(
                "{} (w = {} slots, Q = {})",
                args.events[i].display(),
                it.bin_width_slots,
                fmt_display(it.q)
            );
            it.histogram.write_svg(&mut out, &title)?;
            finish(out, &svg)?;
            manifest.add_output(&svg)?;
        }
    }

    let mut report = QReport::from_iterations(&iterations)?;
    report.notes.push(format!("target_mean={}", args.target_mean));
    match &idlers {
        Some(_) => report
            .notes
            .push(format!("heralded window={} mode={}", args.window, args.window_mode)),
        None => report.notes.push("heralded=no".to_string()),
    }
    for (i, p) in args.events.iter().enumerate() {
        let note = match args.herald.get(i) {
            Some(h) => format!("iter{i:02} signal={} idler={}", p.display(), h.display()),
            None => format!("iter{i:02} events={}", p.display()),
        };
        report.notes.push(note);
    }
    let report_path = with_suffix(&args.out, ".qreport.txt");
    let mut out = create(&report_path)?;
    report.write_to(&mut out)?;
    finish(out, &report_path)?;
    manifest.add_output(&report_path)?;
    manifest.save(&with_suffix(&args.out, ".manifest.json"), start.elapsed())?;

    print_summary(&report_path, &report);
    Ok(())
}

fn print_summary(path: &Path, report: &QReport) {
    let spread = match report.q_std {
        Some(s) => format!("{} +/- {}", fmt_display(report.q_mean), fmt_display(s)),
        None => format!("{} (single iteration)", fmt_display(report.q_mean)),
    };
    println!(
        "{}: {} iteration(s), Q = {spread}, pooled mean {} variance {} Q {}, bin widths {:?}",
        path.display(),
        report.iterations(),
        fmt_display(report.mean),
        fmt_display(report.variance),
        fmt_display(report.q),
        report.bin_widths
    );
}

pub fn report(args: &ReportArgs) -> Result<(), CliError> {
    for path in &args.reports {
        let file = File::open(path).map_err(|e| CliError::io(path, e))?;
        let report = QReport::read_from(std::io::BufReader::new(file)).map_err(|e| e.with_path(path))?;
        print_summary(path, &report);
    }
    let mut failures = 0usize;
    for path in &args.verify {
        let manifest = RunManifest::load(path)?;
        let problems = manifest.verify();
        if problems.is_empty() {
            println!(
                "{}: OK ({} inputs, {} outputs)",
                path.display(),
                manifest.inputs.len(),
                manifest.outputs.len()
            );
        } else {
            for p in &problems {
                println!("{}: MISMATCH {p}", path.display());
            }
            failures += problems.len();
        }
    }
    if failures > 0 {
        return Err(CliError::data(format!(
            "{failures} file(s) failed manifest verification"
        )));
    }
    Ok(())
}
