use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::events::{apply_dead_time, EventSeries};
use crate::sim::rng::{block_rng, Stream};
use crate::sim::{SimConfig, SourceKind};

/// Slots per work block for Poisson streams.
const POISSON_BLOCK_SLOTS: usize = 1 << 20;
/// Coherence modes per work block for pair generation.
const PAIR_BLOCK_MODES: usize = 1 << 16;

#[derive(Debug, Clone)]
pub struct CoherentRun {
    pub series: EventSeries,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct SpdcRun {
    pub signal: EventSeries,
    pub idler: EventSeries,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub enum SimRun {
    Coherent(CoherentRun),
    Spdc(SpdcRun),
}

impl SimRun {
    pub fn warnings(&self) -> &[String] {
        match self {
            SimRun::Coherent(r) => &r.warnings,
            SimRun::Spdc(r) => &r.warnings,
        }
    }
}

/// Dispatches on the configured source kind.
pub fn simulate(cfg: &SimConfig) -> Result<SimRun> {
    match cfg.kind {
        SourceKind::Coherent => gen_coherent(cfg).map(SimRun::Coherent),
        SourceKind::SpdcPair => gen_spdc(cfg).map(SimRun::Spdc),
    }
}

#[inline]
fn exp1(rng: &mut ChaCha8Rng) -> f64 {
    -(1.0 - rng.random::<f64>()).ln()
}

/// Poisson arrivals at `rate_per_slot` inside `[start, end)`, each kept if its
/// detection draw falls below `efficiency`. Two uniforms are consumed per
/// arrival whatever the efficiency, so runs that differ only in efficiency
/// see the same arrivals.
fn poisson_block(
    rng: &mut ChaCha8Rng,
    rate_per_slot: f64,
    efficiency: f64,
    start: usize,
    end: usize,
    out: &mut Vec<usize>,
) {
    if rate_per_slot <= 0.0 {
        return;
    }
    let mut t = start as f64;
    loop {
        t += exp1(rng) / rate_per_slot;
        if t >= end as f64 {
            break;
        }
        let detected = rng.random::<f64>() < efficiency;
        if detected {
            out.push((t as usize).min(end - 1));
        }
    }
}

fn poisson_stream(seed: u64, stream: Stream, n_slots: usize, rate_per_slot: f64, efficiency: f64) -> Vec<Vec<usize>> {
    let n_blocks = n_slots.div_ceil(POISSON_BLOCK_SLOTS);
    (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = block_rng(seed, stream, b as u64);
            let start = b * POISSON_BLOCK_SLOTS;
            let end = (start + POISSON_BLOCK_SLOTS).min(n_slots);
            let mut out = Vec::new();
            poisson_block(&mut rng, rate_per_slot, efficiency, start, end, &mut out);
            out
        })
        .collect()
}

fn collect_series(cfg: &SimConfig, blocks: &[Vec<Vec<usize>>]) -> Result<EventSeries> {
    let n_slots = cfg.n_slots();
    let mut raw = EventSeries::zeros(n_slots, cfg.resolution_s)?;
    for k in blocks.iter().flatten().flatten() {
        raw.set(*k);
    }
    apply_dead_time(&raw, cfg.dead_time_s)
}

fn saturation_warning(arm: &str, expected_per_slot: f64) -> Option<String> {
    (expected_per_slot > 1.0)
        .then(|| format!("{arm}: {expected_per_slot:.3} expected detections per slot; the detector model saturates"))
}

/// Coherent light: homogeneous Poisson arrivals thinned by the signal-arm
/// efficiency, plus Poisson dark counts, collapsed onto slots and passed
/// through dead time.
pub fn gen_coherent(cfg: &SimConfig) -> Result<CoherentRun> {
    cfg.validate()?;
    if cfg.kind != SourceKind::Coherent {
        return Err(Error::Argument(format!(
            "gen_coherent needs kind = coherent, got {}",
            cfg.kind
        )));
    }
    let n_slots = cfg.n_slots();
    let photon_rate = cfg.photon_rate_hz * cfg.resolution_s;
    let dark_rate = cfg.dark_rate_hz * cfg.resolution_s;
    let photons = poisson_stream(
        cfg.rng_seed,
        Stream::CoherentPhotons,
        n_slots,
        photon_rate,
        cfg.efficiency_signal,
    );
    let dark = poisson_stream(cfg.rng_seed, Stream::SignalDark, n_slots, dark_rate, 1.0);
    let series = collect_series(cfg, &[photons, dark])?;
    let warnings = saturation_warning("signal", photon_rate * cfg.efficiency_signal + dark_rate)
        .into_iter()
        .collect();
    Ok(CoherentRun { series, warnings })
}

/// Detected photon slots from one block of coherence modes, per arm, in
/// generation order (not sorted, duplicates possible).
struct PairBlock {
    signal: Vec<usize>,
    idler: Vec<usize>,
    /// Detected photons per mode, `(signal, idler)`; only kept for tests.
    #[cfg(test)]
    per_mode: Vec<(u32, u32)>,
}

struct PairParams {
    seed: u64,
    n_slots: usize,
    n_modes: usize,
    mode_slots: f64,
    /// Ratio of the geometric distribution, `mu / (1 + mu)`.
    ratio: f64,
    eta_signal: f64,
    eta_idler: f64,
}

fn pair_block(p: &PairParams, block: usize) -> PairBlock {
    let mut rng = block_rng(p.seed, Stream::Pairs, block as u64);
    let first = block * PAIR_BLOCK_MODES;
    let last = (first + PAIR_BLOCK_MODES).min(p.n_modes);
    let mut out = PairBlock {
        signal: Vec::new(),
        idler: Vec::new(),
        #[cfg(test)]
        per_mode: Vec::new(),
    };
    let ln_ratio = p.ratio.ln();
    for mode in first..last {
        // Inverse transform of the geometric law: P(N >= k) = ratio^k.
        let u = 1.0 - rng.random::<f64>();
        let pairs = if p.ratio > 0.0 {
            (u.ln() / ln_ratio).floor() as u64
        } else {
            0
        };
        #[cfg(test)]
        let mut detected = (0u32, 0u32);
        for _ in 0..pairs {
            let (ds, ps, di, pi): (f64, f64, f64, f64) = (rng.random(), rng.random(), rng.random(), rng.random());
            if ds < p.eta_signal {
                let slot = ((mode as f64 + ps) * p.mode_slots) as usize;
                if slot < p.n_slots {
                    out.signal.push(slot);
                    #[cfg(test)]
                    {
                        detected.0 += 1;
                    }
                }
            }
            if di < p.eta_idler {
                let slot = ((mode as f64 + pi) * p.mode_slots) as usize;
                if slot < p.n_slots {
                    out.idler.push(slot);
                    #[cfg(test)]
                    {
                        detected.1 += 1;
                    }
                }
            }
        }
        #[cfg(test)]
        out.per_mode.push(detected);
    }
    out
}

fn pair_params(cfg: &SimConfig) -> Result<PairParams> {
    let n_slots = cfg.n_slots();
    let mode_slots = cfg.mode_time_s / cfg.resolution_s;
    let mu = cfg.mean_pairs_per_mode;
    Ok(PairParams {
        seed: cfg.rng_seed,
        n_slots,
        n_modes: (n_slots as f64 / mode_slots).ceil() as usize,
        mode_slots,
        ratio: mu / (1.0 + mu),
        eta_signal: cfg.efficiency_signal,
        eta_idler: cfg.idler_detection_probability()?,
    })
}

/// SPDC pairs: each coherence mode holds a Bose-Einstein (geometric) number
/// of pairs; each pair sends one photon per arm, detected independently with
/// the arm efficiency (the idler's scaled by the OAM factor) and placed
/// uniformly within its mode. Dark counts, slot collapse and dead time are
/// then applied per arm.
pub fn gen_spdc(cfg: &SimConfig) -> Result<SpdcRun> {
    cfg.validate()?;
    if cfg.kind != SourceKind::SpdcPair {
        return Err(Error::Argument(format!(
            "gen_spdc needs kind = spdc_pair, got {}",
            cfg.kind
        )));
    }
    let p = pair_params(cfg)?;
    let blocks: Vec<PairBlock> = (0..p.n_modes.div_ceil(PAIR_BLOCK_MODES))
        .into_par_iter()
        .map(|b| pair_block(&p, b))
        .collect();
    let (signal_pairs, idler_pairs): (Vec<Vec<usize>>, Vec<Vec<usize>>) =
        blocks.into_iter().map(|b| (b.signal, b.idler)).unzip();

    let dark_rate = cfg.dark_rate_hz * cfg.resolution_s;
    let signal_dark = poisson_stream(cfg.rng_seed, Stream::SignalDark, p.n_slots, dark_rate, 1.0);
    let idler_dark = poisson_stream(cfg.rng_seed, Stream::IdlerDark, p.n_slots, dark_rate, 1.0);
    let signal = collect_series(cfg, &[signal_pairs, signal_dark])?;
    let idler = collect_series(cfg, &[idler_pairs, idler_dark])?;

    let pairs_per_slot = cfg.mean_pairs_per_mode / p.mode_slots;
    let warnings = [
        saturation_warning("signal", pairs_per_slot * p.eta_signal + dark_rate),
        saturation_warning("idler", pairs_per_slot * p.eta_idler + dark_rate),
    ]
    .into_iter()
    .flatten()
    .collect();
    Ok(SpdcRun {
        signal,
        idler,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spdc(mu: f64) -> SimConfig {
        let mut cfg = SimConfig::new(SourceKind::SpdcPair, 2e-4);
        cfg.mean_pairs_per_mode = mu;
        cfg.dead_time_s = 0.0;
        cfg.rng_seed = 11;
        cfg
    }

    #[test]
    fn pairs_are_detected_together_at_unit_efficiency() {
        let p = pair_params(&spdc(0.5)).unwrap();
        let block = pair_block(&p, 0);
        assert!(block.per_mode.iter().any(|&(s, _)| s > 1));
        assert!(block.per_mode.iter().all(|&(s, i)| s == i));
    }

    #[test]
    fn idler_thinning_breaks_symmetry() {
        let mut cfg = spdc(0.5);
        cfg.efficiency_idler = 0.5;
        let block = pair_block(&pair_params(&cfg).unwrap(), 0);
        let (s, i) = block
            .per_mode
            .iter()
            .fold((0, 0), |acc, &(s, i)| (acc.0 + s, acc.1 + i));
        assert!(i < s);
        assert!(block.per_mode.iter().all(|&(s, i)| i <= s));
    }

    #[test]
    fn geometric_pair_numbers_have_thermal_moments() {
        // Detected pairs per mode at unit efficiency follow the geometric law:
        // mean mu and variance mu (1 + mu).
        let mu = 0.4;
        let mut cfg = spdc(mu);
        cfg.duration_s = 0.05;
        let p = pair_params(&cfg).unwrap();
        let counts: Vec<f64> = (0..p.n_modes.div_ceil(PAIR_BLOCK_MODES))
            .flat_map(|b| pair_block(&p, b).per_mode)
            .map(|(s, _)| f64::from(s))
            .collect();
        let n = counts.len() as f64;
        let mean = counts.iter().sum::<f64>() / n;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / n;
        assert!((mean - mu).abs() < 0.01, "mean {mean}");
        assert!((var - mu * (1.0 + mu)).abs() < 0.02, "variance {var}");
    }

    #[test]
    fn wrong_kind_rejected() {
        let cfg = SimConfig::new(SourceKind::Coherent, 1e-6);
        assert!(gen_spdc(&cfg).is_err());
        assert!(gen_coherent(&spdc(0.1)).is_err());
    }

    #[test]
    fn saturating_rate_warns() {
        let mut cfg = SimConfig::new(SourceKind::Coherent, 1e-6);
        cfg.photon_rate_hz = 2e9;
        let run = gen_coherent(&cfg).unwrap();
        assert_eq!(run.warnings.len(), 1);
        cfg.photon_rate_hz = 1e6;
        assert!(gen_coherent(&cfg).unwrap().warnings.is_empty());
    }
}
