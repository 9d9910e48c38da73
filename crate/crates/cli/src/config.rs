//! Flat `key=value` configuration with dotted keys.
//!
//! Every key has a default; a file or command-line flags override single
//! keys. The resolved set is written back as the run manifest, which can be
//! fed to `--config` to reproduce the run.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use fdmimo_core::channel::{LayoutSpec, Resolution};
use fdmimo_core::netgeom::{hex_matched_intensity, DropConfig};
use fdmimo_core::units::{db_to_linear, noise_power_w};
use fdmimo_core::{LayoutKind, Link, Region, SystemParams};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    OutageCdf,
    SeVsBits,
    SeVsAntennas,
    LemmaCheck,
    PowerSweep,
    OracleCheck,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::OutageCdf,
        Experiment::SeVsBits,
        Experiment::SeVsAntennas,
        Experiment::LemmaCheck,
        Experiment::PowerSweep,
        Experiment::OracleCheck,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::OutageCdf => "outage_cdf",
            Experiment::SeVsBits => "se_vs_bits",
            Experiment::SeVsAntennas => "se_vs_antennas",
            Experiment::LemmaCheck => "lemma_check",
            Experiment::PowerSweep => "power_sweep",
            Experiment::OracleCheck => "oracle_check",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| CliError::invalid("experiment", format!("unknown experiment `{s}`")))
    }
}

const DEFAULTS: &[(&str, &str)] = &[
    ("seed", "1"),
    ("system.bandwidth_hz", "20000000"),
    ("system.pathloss_exponent", "3.5"),
    ("system.l_ref", "1"),
    ("system.shadowing_db", "5"),
    ("system.antennas", "100"),
    ("system.noise_dbm_per_hz", "-174"),
    ("system.p_ul_w", "0.25"),
    ("system.p_dl_w", "40"),
    ("system.p_si_w", "40"),
    ("system.mu_si2_db", "10"),
    ("system.sigma_iui2", "1"),
    ("system.si_estimation_error", "0"),
    ("system.res_ul", "full"),
    ("system.res_dl", "full"),
    ("layout.kind", "hex"),
    ("layout.tiers", "2"),
    ("layout.cell_radius_m", "500"),
    ("layout.ppp_intensity", "matched"),
    ("layout.k_ul", "4"),
    ("layout.k_dl", "4"),
    ("layout.d_min_m", "10"),
    ("sim.scenarios", "500"),
    ("sim.trials", "100000"),
    ("sim.csi", "hardening"),
    ("outage.link", "dl"),
    ("outage.alpha_low", "0.6"),
    ("outage.points", "101"),
    ("sweep.bits", "1..12"),
    ("sweep.p_si_w", "0,10,40"),
    ("sweep.antennas", "64,128,256,512,1024,2048,4096"),
    ("sweep.power_scaling", "true"),
    ("sweep.e_ul", "25"),
    ("sweep.e_dl", "4000"),
    ("sweep.e_si", "4000"),
    ("lemma.bits", "14"),
    ("lemma.power_factor", "1000000"),
    ("lemma.antennas", "4096"),
    ("power.bits", "1..12"),
    ("power.antennas", "100"),
    ("oracle.scenario", "0"),
];

/// Raw key-value pairs after merging defaults, file and flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl Default for RawConfig {
    fn default() -> Self {
        RawConfig {
            entries: DEFAULTS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        }
    }
}

impl RawConfig {
    /// Sets one key. `experiment` is the only key without a default.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if key != "experiment" && !self.entries.contains_key(key) {
            return Err(CliError::UnknownKey(key.to_string()));
        }
        self.entries.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Applies `key=value` lines. Blank lines and `#` comments are skipped.
    pub fn merge_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| CliError::Syntax {
                line: i + 1,
                text: line.to_string(),
            })?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        self.merge_text(&text)
    }

    /// Sorted `key=value` lines.
    pub fn to_manifest(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    fn parse<T: FromStr>(&self, key: &'static str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        let raw = self.get(key).unwrap_or_default();
        raw.parse()
            .map_err(|e: T::Err| CliError::invalid(key, format!("cannot parse `{raw}`: {e}")))
    }

    fn list<T: FromStr>(&self, key: &'static str) -> Result<Vec<T>>
    where
        T::Err: fmt::Display,
    {
        let raw = self.get(key).unwrap_or_default();
        let bad = |e: String| CliError::invalid(key, format!("cannot parse `{raw}`: {e}"));
        if let Some((a, b)) = raw.split_once("..") {
            let a: i64 = a
                .trim()
                .parse()
                .map_err(|e: std::num::ParseIntError| bad(e.to_string()))?;
            let b: i64 = b
                .trim()
                .parse()
                .map_err(|e: std::num::ParseIntError| bad(e.to_string()))?;
            if a > b {
                return Err(bad("empty range".into()));
            }
            return (a..=b)
                .map(|x| x.to_string().parse().map_err(|e: T::Err| bad(e.to_string())))
                .collect();
        }
        let out = raw
            .split(',')
            .map(|s| s.trim().parse().map_err(|e: T::Err| bad(e.to_string())))
            .collect::<Result<Vec<T>>>()?;
        if out.is_empty() {
            return Err(bad("empty list".into()));
        }
        Ok(out)
    }
}

fn parse_resolution(raw: &RawConfig, key: &'static str) -> Result<Resolution> {
    let v = raw.get(key).unwrap_or_default();
    let bad = || CliError::invalid(key, format!("expected `full`, `bits:<b>` or `alpha:<a>`, got `{v}`"));
    if v == "full" {
        return Ok(Resolution::Full);
    }
    match v.split_once(':') {
        Some(("bits", b)) => {
            let b = b.parse().map_err(|_| bad())?;
            fdmimo_core::rho_from_bits(b).map_err(|e| CliError::invalid(key, e.to_string()))?;
            Ok(Resolution::Bits(b))
        }
        Some(("alpha", a)) => Ok(Resolution::Gain(a.parse().map_err(|_| bad())?)),
        _ => Err(bad()),
    }
}

/// Layout and user-drop settings.
#[derive(Debug, Clone, PartialEq)]
pub struct LayoutSettings {
    pub kind: LayoutKind,
    pub tiers: usize,
    pub cell_radius_m: f64,
    /// `None` matches the hexagonal site density.
    pub ppp_intensity: Option<f64>,
    pub drop: DropConfig,
}

impl LayoutSettings {
    /// Radius of the disk covering the hexagonal layout; the PPP uses the
    /// same disk.
    pub fn region(&self) -> Region {
        Region::Disk {
            radius: self.tiers as f64 * 3f64.sqrt() * self.cell_radius_m + self.cell_radius_m,
        }
    }

    pub fn spec(&self, kind: LayoutKind) -> LayoutSpec {
        match kind {
            LayoutKind::HexLattice => LayoutSpec::Hex {
                tiers: self.tiers,
                cell_radius: self.cell_radius_m,
            },
            LayoutKind::Ppp => LayoutSpec::Ppp {
                intensity: self
                    .ppp_intensity
                    .unwrap_or_else(|| hex_matched_intensity(self.cell_radius_m)),
                region: self.region(),
            },
        }
    }
}

/// Sweep settings shared by several experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    pub bits: Vec<u32>,
    pub p_si_w: Vec<f64>,
    pub antennas: Vec<usize>,
    pub power_scaling: bool,
    pub e_ul: f64,
    pub e_dl: f64,
    pub e_si: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub params: SystemParams,
    pub layout: LayoutSettings,
    pub scenarios: usize,
    pub trials: u64,
    pub perfect_csi: bool,
    pub outage_link: Link,
    pub outage_alpha_low: f64,
    pub outage_points: usize,
    pub sweep: SweepSettings,
    pub lemma_bits: u32,
    pub lemma_power_factor: f64,
    pub lemma_antennas: usize,
    pub power_bits: Vec<u32>,
    pub power_antennas: Vec<usize>,
    pub oracle_scenario: u64,
}

impl ExperimentConfig {
    pub fn resolve(raw: &RawConfig) -> Result<Self> {
        let experiment: Experiment = match raw.get("experiment") {
            Some(e) => e.parse()?,
            None => return Err(CliError::invalid("experiment", "no experiment given")),
        };
        let bandwidth_hz: f64 = raw.parse("system.bandwidth_hz")?;
        let k_ul: usize = raw.parse("layout.k_ul")?;
        let k_dl: usize = raw.parse("layout.k_dl")?;
        let params = SystemParams {
            pathloss_exponent: raw.parse("system.pathloss_exponent")?,
            l_ref: raw.parse("system.l_ref")?,
            shadowing_db: raw.parse("system.shadowing_db")?,
            antennas: raw.parse("system.antennas")?,
            bandwidth_hz,
            noise_w: noise_power_w(raw.parse("system.noise_dbm_per_hz")?, bandwidth_hz),
            p_ul_w: raw.parse("system.p_ul_w")?,
            p_dl_w: raw.parse("system.p_dl_w")?,
            p_si_w: raw.parse("system.p_si_w")?,
            mu_si2: db_to_linear(raw.parse("system.mu_si2_db")?),
            sigma_iui2: raw.parse("system.sigma_iui2")?,
            res_ul: parse_resolution(raw, "system.res_ul")?,
            res_dl: parse_resolution(raw, "system.res_dl")?,
            k_ul,
            k_dl,
            si_estimation_error: raw.parse("system.si_estimation_error")?,
        };
        params.validate().map_err(|e| match e {
            fdmimo_core::Error::InvalidParameter { name, reason } => {
                let key = match name {
                    "mu_si2" => "mu_si2_db",
                    "noise_w" => "noise_dbm_per_hz",
                    n => n,
                };
                CliError::invalid_owned(format!("system.{key}"), reason)
            }
            other => other.into(),
        })?;

        let kind = match raw.get("layout.kind").unwrap_or_default() {
            "hex" => LayoutKind::HexLattice,
            "ppp" => LayoutKind::Ppp,
            other => {
                return Err(CliError::invalid(
                    "layout.kind",
                    format!("expected `hex` or `ppp`, got `{other}`"),
                ))
            }
        };
        let ppp_intensity = match raw.get("layout.ppp_intensity").unwrap_or_default() {
            "matched" => None,
            _ => Some(positive(raw.parse("layout.ppp_intensity")?, "layout.ppp_intensity")?),
        };
        let layout = LayoutSettings {
            kind,
            tiers: raw.parse("layout.tiers")?,
            cell_radius_m: positive(raw.parse("layout.cell_radius_m")?, "layout.cell_radius_m")?,
            ppp_intensity,
            drop: DropConfig {
                k_ul,
                k_dl,
                d_min: nonneg(raw.parse("layout.d_min_m")?, "layout.d_min_m")?,
            },
        };

        let perfect_csi = match raw.get("sim.csi").unwrap_or_default() {
            "hardening" => false,
            "perfect" => true,
            other => {
                return Err(CliError::invalid(
                    "sim.csi",
                    format!("expected `hardening` or `perfect`, got `{other}`"),
                ))
            }
        };
        let outage_link = match raw.get("outage.link").unwrap_or_default() {
            "ul" => Link::Uplink,
            "dl" => Link::Downlink,
            other => {
                return Err(CliError::invalid(
                    "outage.link",
                    format!("expected `ul` or `dl`, got `{other}`"),
                ))
            }
        };
        let outage_alpha_low: f64 = raw.parse("outage.alpha_low")?;
        if !(outage_alpha_low > 0.0 && outage_alpha_low <= 1.0) {
            return Err(CliError::invalid("outage.alpha_low", "must be in (0, 1]"));
        }
        let outage_points: usize = raw.parse("outage.points")?;
        if outage_points < 2 {
            return Err(CliError::invalid("outage.points", "must be >= 2"));
        }

        let sweep = SweepSettings {
            bits: bits_list(raw, "sweep.bits")?,
            p_si_w: raw
                .list::<f64>("sweep.p_si_w")?
                .into_iter()
                .map(|p| nonneg(p, "sweep.p_si_w"))
                .collect::<Result<_>>()?,
            antennas: antenna_list(raw, "sweep.antennas")?,
            power_scaling: raw.parse("sweep.power_scaling")?,
            e_ul: nonneg(raw.parse("sweep.e_ul")?, "sweep.e_ul")?,
            e_dl: nonneg(raw.parse("sweep.e_dl")?, "sweep.e_dl")?,
            e_si: nonneg(raw.parse("sweep.e_si")?, "sweep.e_si")?,
        };
        let lemma_bits = raw.parse("lemma.bits")?;
        fdmimo_core::rho_from_bits(lemma_bits).map_err(|e| CliError::invalid("lemma.bits", e.to_string()))?;

        let cfg = ExperimentConfig {
            experiment,
            seed: raw.parse("seed")?,
            params,
            layout,
            scenarios: at_least_one(raw.parse("sim.scenarios")?, "sim.scenarios")?,
            trials: raw.parse("sim.trials")?,
            perfect_csi,
            outage_link,
            outage_alpha_low,
            outage_points,
            sweep,
            lemma_bits,
            lemma_power_factor: positive(raw.parse("lemma.power_factor")?, "lemma.power_factor")?,
            lemma_antennas: at_least_one(raw.parse("lemma.antennas")?, "lemma.antennas")?,
            power_bits: bits_list(raw, "power.bits")?,
            power_antennas: antenna_list(raw, "power.antennas")?,
            oracle_scenario: raw.parse("oracle.scenario")?,
        };
        if cfg.trials < 2 {
            return Err(CliError::invalid("sim.trials", "must be >= 2"));
        }
        Ok(cfg)
    }
}

fn positive(v: f64, key: &'static str) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::invalid(key, format!("must be > 0, got {v}")))
    }
}

fn nonneg(v: f64, key: &'static str) -> Result<f64> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::invalid(key, format!("must be >= 0, got {v}")))
    }
}

fn at_least_one(v: usize, key: &'static str) -> Result<usize> {
    if v >= 1 {
        Ok(v)
    } else {
        Err(CliError::invalid(key, "must be >= 1"))
    }
}

fn bits_list(raw: &RawConfig, key: &'static str) -> Result<Vec<u32>> {
    let bits: Vec<u32> = raw.list(key)?;
    for &b in &bits {
        fdmimo_core::rho_from_bits(b).map_err(|e| CliError::invalid(key, e.to_string()))?;
    }
    Ok(bits)
}

fn antenna_list(raw: &RawConfig, key: &'static str) -> Result<Vec<usize>> {
    let n: Vec<usize> = raw.list(key)?;
    if n.contains(&0) {
        return Err(CliError::invalid(key, "antenna counts must be >= 1"));
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with(pairs: &[(&str, &str)]) -> Result<ExperimentConfig> {
        let mut raw = RawConfig::default();
        raw.set("experiment", "se_vs_bits")?;
        for (k, v) in pairs {
            raw.set(k, v)?;
        }
        ExperimentConfig::resolve(&raw)
    }

    #[test]
    fn defaults_resolve_to_reference_parameters() {
        let c = with(&[]).unwrap();
        assert_eq!(c.params, SystemParams::reference_defaults());
        assert_eq!(c.layout.tiers, 2);
        assert_eq!(c.layout.cell_radius_m, 500.0);
        assert_eq!(c.sweep.bits, (1..=12).collect::<Vec<_>>());
        assert_eq!(c.sweep.p_si_w, vec![0.0, 10.0, 40.0]);
    }

    #[test]
    fn manifest_round_trips() {
        let mut raw = RawConfig::default();
        raw.set("experiment", "lemma_check").unwrap();
        raw.set("system.p_si_w", "12.5").unwrap();
        let mut back = RawConfig::default();
        back.merge_text(&raw.to_manifest()).unwrap();
        assert_eq!(raw, back);
    }

    #[test]
    fn errors_name_the_key() {
        let msg = |e: CliError| e.to_string();
        assert!(msg(with(&[("system.antennas", "zero")]).unwrap_err()).contains("system.antennas"));
        assert!(msg(with(&[("system.pathloss_exponent", "1.5")]).unwrap_err()).contains("system.pathloss_exponent"));
        assert!(msg(with(&[("system.res_dl", "bits:0")]).unwrap_err()).contains("system.res_dl"));
        assert!(msg(with(&[("layout.kind", "square")]).unwrap_err()).contains("layout.kind"));
        assert!(msg(with(&[("sweep.bits", "3..1")]).unwrap_err()).contains("sweep.bits"));
        assert!(msg(with(&[("no.such", "1")]).unwrap_err()).contains("no.such"));
        let mut raw = RawConfig::default();
        raw.set("experiment", "plot_everything").unwrap();
        assert!(msg(ExperimentConfig::resolve(&raw).unwrap_err()).contains("experiment"));
    }

    #[test]
    fn resolution_syntax() {
        let c = with(&[("system.res_ul", "bits:3"), ("system.res_dl", "alpha:0.6")]).unwrap();
        assert_eq!(c.params.res_ul, Resolution::Bits(3));
        assert_eq!(c.params.res_dl, Resolution::Gain(0.6));
    }

    #[test]
    fn comments_and_syntax_errors() {
        let mut raw = RawConfig::default();
        raw.merge_text("# note\n\nseed = 7\n").unwrap();
        assert_eq!(raw.get("seed"), Some("7"));
        assert!(matches!(
            raw.merge_text("seed 7"),
            Err(CliError::Syntax { line: 1, .. })
        ));
    }
}
