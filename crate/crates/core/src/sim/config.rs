use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    Coherent,
    SpdcPair,
}

impl FromStr for SourceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coherent" => Ok(SourceKind::Coherent),
            "spdc_pair" => Ok(SourceKind::SpdcPair),
            other => Err(Error::Argument(format!("unknown source kind '{other}'"))),
        }
    }
}

impl std::fmt::Display for SourceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SourceKind::Coherent => "coherent",
            SourceKind::SpdcPair => "spdc_pair",
        })
    }
}

/// Factor `p_l` multiplying the idler detection probability for pump OAM
/// order `l`. Every variant has `p_0 = 1` and is non-increasing in `l`.
#[derive(Debug, Clone, PartialEq)]
pub enum OamScale {
    /// `1 / (l + 1)`.
    InverseLinear,
    /// `r^l` with `0 < r <= 1`.
    Geometric(f64),
    /// Explicit values for `l = 0, 1, ...`.
    Table(Vec<f64>),
}

impl OamScale {
    pub fn factor(&self, order: u32) -> Result<f64> {
        match self {
            OamScale::InverseLinear => Ok(1.0 / (f64::from(order) + 1.0)),
            OamScale::Geometric(r) => Ok(r.powi(order as i32)),
            OamScale::Table(t) => t
                .get(order as usize)
                .copied()
                .ok_or_else(|| Error::Argument(format!("OAM scale table has no entry for l = {order}"))),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            OamScale::InverseLinear => Ok(()),
            OamScale::Geometric(r) if *r > 0.0 && *r <= 1.0 => Ok(()),
            OamScale::Geometric(r) => Err(Error::Argument(format!(
                "geometric OAM ratio must lie in (0, 1], got {r}"
            ))),
            OamScale::Table(t) => {
                if t.first() != Some(&1.0) {
                    return Err(Error::Argument("OAM scale table must start with 1".into()));
                }
                if t.iter().any(|p| !(*p > 0.0 && *p <= 1.0)) {
                    return Err(Error::Argument("OAM scale entries must lie in (0, 1]".into()));
                }
                if t.windows(2).any(|w| w[1] > w[0]) {
                    return Err(Error::Argument("OAM scale must be non-increasing in l".into()));
                }
                Ok(())
            }
        }
    }
}

impl FromStr for OamScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Argument(format!("bad OAM scale '{s}'"));
        let scale = if s == "inverse_linear" {
            OamScale::InverseLinear
        } else if let Some(r) = s.strip_prefix("geometric:") {
            OamScale::Geometric(r.trim().parse().map_err(|_| bad())?)
        } else if let Some(t) = s.strip_prefix("table:") {
            OamScale::Table(
                t.split(',')
                    .map(|v| v.trim().parse().map_err(|_| bad()))
                    .collect::<Result<_>>()?,
            )
        } else {
            return Err(bad());
        };
        scale.validate()?;
        Ok(scale)
    }
}

impl std::fmt::Display for OamScale {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OamScale::InverseLinear => f.write_str("inverse_linear"),
            OamScale::Geometric(r) => write!(f, "geometric:{r}"),
            OamScale::Table(t) => {
                let parts: Vec<String> = t.iter().map(|p| p.to_string()).collect();
                write!(f, "table:{}", parts.join(","))
            }
        }
    }
}

/// Source and detector-chain parameters for one simulated acquisition.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub kind: SourceKind,
    pub duration_s: f64,
    pub resolution_s: f64,
    /// Coherent source: photon arrivals per second before detection.
    pub photon_rate_hz: f64,
    /// SPDC: mean pair number per coherence mode (thermal occupancy).
    pub mean_pairs_per_mode: f64,
    pub mode_time_s: f64,
    pub efficiency_signal: f64,
    pub efficiency_idler: f64,
    /// Dark counts per second, per arm.
    pub dark_rate_hz: f64,
    pub dead_time_s: f64,
    pub pump_oam_order: u32,
    pub oam_heralding_scale: OamScale,
    pub rng_seed: u64,
}

impl SimConfig {
    /// Defaults for everything except the source kind and duration.
    pub fn new(kind: SourceKind, duration_s: f64) -> Self {
        Self {
            kind,
            duration_s,
            resolution_s: 1e-9,
            photon_rate_hz: 0.0,
            mean_pairs_per_mode: 0.0,
            mode_time_s: 10e-9,
            efficiency_signal: 1.0,
            efficiency_idler: 1.0,
            dark_rate_hz: 0.0,
            dead_time_s: 22e-9,
            pump_oam_order: 0,
            oam_heralding_scale: OamScale::InverseLinear,
            rng_seed: 0,
        }
    }

    /// Mean pair generation rate implied by the mode occupancy.
    pub fn pair_rate_hz(&self) -> f64 {
        self.mean_pairs_per_mode / self.mode_time_s
    }

    /// Number of slots, `duration / resolution` rounded to nearest.
    pub fn n_slots(&self) -> usize {
        (self.duration_s / self.resolution_s).round() as usize
    }

    /// Idler detection probability including the OAM heralding factor.
    pub fn idler_detection_probability(&self) -> Result<f64> {
        Ok(self.efficiency_idler * self.oam_heralding_scale.factor(self.pump_oam_order)?)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Argument(format!("{name} must be positive, got {v}")))
            }
        };
        let non_negative = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::Argument(format!("{name} must be non-negative, got {v}")))
            }
        };
        let probability = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Argument(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        positive("duration_s", self.duration_s)?;
        positive("resolution_s", self.resolution_s)?;
        positive("mode_time_s", self.mode_time_s)?;
        non_negative("photon_rate_hz", self.photon_rate_hz)?;
        non_negative("mean_pairs_per_mode", self.mean_pairs_per_mode)?;
        non_negative("dark_rate_hz", self.dark_rate_hz)?;
        non_negative("dead_time_s", self.dead_time_s)?;
        probability("efficiency_signal", self.efficiency_signal)?;
        probability("efficiency_idler", self.efficiency_idler)?;
        self.oam_heralding_scale.validate()?;
        self.oam_heralding_scale.factor(self.pump_oam_order)?;
        if self.n_slots() == 0 {
            return Err(Error::Argument("duration_s is shorter than one slot".into()));
        }
        if self.kind == SourceKind::SpdcPair && self.mode_time_s < self.resolution_s {
            return Err(Error::Argument(format!(
                "mode_time_s ({}) must not be shorter than resolution_s ({})",
                self.mode_time_s, self.resolution_s
            )));
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment. `kind` and
    /// `duration_s` are required. `pair_rate_hz` may stand in for
    /// `mean_pairs_per_mode` (converted with `mode_time_s`).
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(usize, String, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::format_at_line(i + 1, "expected 'key = value'"))?;
            let key = key.trim().to_owned();
            if entries.iter().any(|(_, k, _)| *k == key) {
                return Err(Error::format_at_line(i + 1, format!("duplicate key '{key}'")));
            }
            entries.push((i + 1, key, value.trim().to_owned()));
        }
        let find = |key: &str| entries.iter().find(|(_, k, _)| k == key);
        let required =
            |key: &str| find(key).ok_or_else(|| Error::Argument(format!("config is missing required key '{key}'")));

        let (n, _, v) = required("kind")?;
        let kind: SourceKind = v.parse().map_err(|e: Error| Error::format_at_line(*n, e.to_string()))?;
        let (n, _, v) = required("duration_s")?;
        let duration_s = parse_value(*n, "duration_s", v)?;
        let mut cfg = SimConfig::new(kind, duration_s);
        let mut pair_rate = None;

        for (n, key, value) in &entries {
            let n = *n;
            match key.as_str() {
                "kind" | "duration_s" => {}
                "resolution_s" => cfg.resolution_s = parse_value(n, key, value)?,
                "photon_rate_hz" => cfg.photon_rate_hz = parse_value(n, key, value)?,
                "pair_rate_hz" => pair_rate = Some((n, parse_value::<f64>(n, key, value)?)),
                "mean_pairs_per_mode" => cfg.mean_pairs_per_mode = parse_value(n, key, value)?,
                "mode_time_s" => cfg.mode_time_s = parse_value(n, key, value)?,
                "efficiency_signal" => cfg.efficiency_signal = parse_value(n, key, value)?,
                "efficiency_idler" => cfg.efficiency_idler = parse_value(n, key, value)?,
                "dark_rate_hz" => cfg.dark_rate_hz = parse_value(n, key, value)?,
                "dead_time_s" => cfg.dead_time_s = parse_value(n, key, value)?,
                "pump_oam_order" => cfg.pump_oam_order = parse_value(n, key, value)?,
                "oam_heralding_scale" => cfg.oam_heralding_scale = parse_value(n, key, value)?,
                "rng_seed" => cfg.rng_seed = parse_value(n, key, value)?,
                other => return Err(Error::format_at_line(n, format!("unknown key '{other}'"))),
            }
        }
        if let Some((n, rate)) = pair_rate {
            let implied = rate * cfg.mode_time_s;
            if find("mean_pairs_per_mode").is_some() {
                let mu = cfg.mean_pairs_per_mode;
                if (implied - mu).abs() > 1e-9 * mu.abs().max(implied.abs()) {
                    return Err(Error::format_at_line(
                        n,
                        format!("pair_rate_hz implies {implied} pairs per mode but mean_pairs_per_mode = {mu}"),
                    ));
                }
            }
            cfg.mean_pairs_per_mode = implied;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| e.with_path(path))
    }

    /// Canonical key-value text that [`SimConfig::parse`] reads back exactly.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
        kv("kind", self.kind.to_string());
        kv("duration_s", format!("{:e}", self.duration_s));
        kv("resolution_s", format!("{:e}", self.resolution_s));
        kv("photon_rate_hz", format!("{:e}", self.photon_rate_hz));
        kv("mean_pairs_per_mode", format!("{:e}", self.mean_pairs_per_mode));
        kv("mode_time_s", format!("{:e}", self.mode_time_s));
        kv("efficiency_signal", self.efficiency_signal.to_string());
        kv("efficiency_idler", self.efficiency_idler.to_string());
        kv("dark_rate_hz", format!("{:e}", self.dark_rate_hz));
        kv("dead_time_s", format!("{:e}", self.dead_time_s));
        kv("pump_oam_order", self.pump_oam_order.to_string());
        kv("oam_heralding_scale", self.oam_heralding_scale.to_string());
        kv("rng_seed", self.rng_seed.to_string());
        s
    }
}

impl FromStr for SimConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

fn parse_value<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::format_at_line(line, format!("bad value '{value}' for {key}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = SimConfig::parse("kind = coherent\nduration_s = 20.5e-3\n").unwrap();
        assert_eq!(cfg.resolution_s, 1e-9);
        assert_eq!(cfg.dead_time_s, 22e-9);
        assert_eq!(cfg.mode_time_s, 10e-9);
        assert_eq!(cfg.n_slots(), 20_500_000);
        assert_eq!(cfg.oam_heralding_scale, OamScale::InverseLinear);
    }

    #[test]
    fn comments_and_pair_rate() {
        let cfg = SimConfig::parse(
            "# SPDC\nkind = spdc_pair  # pairs\nduration_s=1e-3\npair_rate_hz = 2e7\nmode_time_s = 1e-8\n",
        )
        .unwrap();
        assert!((cfg.mean_pairs_per_mode - 0.2).abs() < 1e-15);
        assert!((cfg.pair_rate_hz() - 2e7).abs() < 1e-3);
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = SimConfig::new(SourceKind::SpdcPair, 20.5e-3);
        cfg.mean_pairs_per_mode = 0.3;
        cfg.efficiency_idler = 0.45;
        cfg.oam_heralding_scale = OamScale::Table(vec![1.0, 0.5, 0.25]);
        cfg.pump_oam_order = 2;
        cfg.rng_seed = u64::MAX;
        assert_eq!(SimConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn errors() {
        assert!(SimConfig::parse("duration_s = 1\n").is_err());
        assert!(SimConfig::parse("kind = laser\nduration_s = 1\n").is_err());
        let err = SimConfig::parse("kind = coherent\nduration_s = 1\nbogus = 2\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        assert!(SimConfig::parse("kind = coherent\nduration_s = 1\nefficiency_signal = 1.5\n").is_err());
        assert!(SimConfig::parse("kind = spdc_pair\nduration_s = 1e-6\nmode_time_s = 1e-10\n").is_err());
        assert!(SimConfig::parse("kind = coherent\nduration_s = 1\nduration_s = 2\n").is_err());
        assert!(SimConfig::parse(
            "kind = spdc_pair\nduration_s = 1e-3\npair_rate_hz = 1e7\nmean_pairs_per_mode = 0.5\n"
        )
        .is_err());
    }

    #[test]
    fn oam_scales() {
        assert_eq!(OamScale::InverseLinear.factor(0).unwrap(), 1.0);
        assert_eq!(OamScale::InverseLinear.factor(3).unwrap(), 0.25);
        assert_eq!("geometric:0.5".parse::<OamScale>().unwrap().factor(2).unwrap(), 0.25);
        assert!("table:1,0.5,0.7".parse::<OamScale>().is_err());
        assert!("table:0.9,0.5".parse::<OamScale>().is_err());
        assert!("geometric:1.5".parse::<OamScale>().is_err());
        assert!(OamScale::Table(vec![1.0]).factor(1).is_err());
    }
}
