//! Experiment runner for the fdmimo simulator.
//!
//! `fdmimo <experiment> [--key=value ...] --out <dir> [--seed <n>] [--config <file>]`
//!
//! Settings come from built-in defaults, then the config file, then flags.
//! Each run writes `<experiment>.csv` and `<experiment>.manifest` into the
//! output directory; the manifest lists every resolved key and can be passed
//! back with `--config` to reproduce the CSV byte for byte.

pub mod config;
pub mod error;
pub mod experiments;

use std::path::{Path, PathBuf};

pub use config::{Experiment, ExperimentConfig, RawConfig};
pub use error::{CliError, Result};

pub const USAGE: &str = "\
usage: fdmimo <experiment> --out <dir> [--seed <n>] [--config <file>] [--key=value ...]

experiments: outage_cdf, se_vs_bits, se_vs_antennas, lemma_check, power_sweep, oracle_check
keys: see the manifest written by any run, e.g. --system.antennas=64 --layout.kind=ppp";

#[derive(Debug, Clone, PartialEq)]
pub struct Invocation {
    pub config: RawConfig,
    pub out: PathBuf,
}

/// Parses command-line arguments (without the program name). Returns
/// `None` when help was requested.
pub fn parse_args<I, S>(args: I) -> Result<Option<Invocation>>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let mut args = args.into_iter().map(Into::into);
    let mut overrides: Vec<(String, String)> = Vec::new();
    let mut file = None;
    let mut out = None;
    while let Some(arg) = args.next() {
        if arg == "-h" || arg == "--help" {
            return Ok(None);
        }
        let Some(flag) = arg.strip_prefix("--") else {
            if overrides.iter().any(|(k, _)| k == "experiment") {
                return Err(CliError::Usage(format!("unexpected argument `{arg}`")));
            }
            overrides.push(("experiment".into(), arg));
            continue;
        };
        let (key, value) = match flag.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = args
                    .next()
                    .ok_or_else(|| CliError::Usage(format!("--{flag} needs a value")))?;
                (flag.to_string(), v)
            }
        };
        match key.as_str() {
            "out" => out = Some(PathBuf::from(value)),
            "config" => file = Some(PathBuf::from(value)),
            _ => overrides.push((key, value)),
        }
    }
    let mut config = RawConfig::default();
    if let Some(f) = file {
        config.merge_file(&f)?;
    }
    for (k, v) in &overrides {
        config.set(k, v)?;
    }
    let out = out.ok_or_else(|| CliError::Usage("missing --out <dir>".into()))?;
    Ok(Some(Invocation { config, out }))
}

/// Paths written by one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub csv: PathBuf,
    pub manifest: PathBuf,
}

/// Resolves the configuration, runs the experiment and writes its CSV and
/// manifest into `out`.
pub fn run(config: &RawConfig, out: &Path) -> Result<RunOutput> {
    let cfg = ExperimentConfig::resolve(config)?;
    let csv = experiments::run_experiment(&cfg)?;
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Io { path, source }
    };
    std::fs::create_dir_all(out).map_err(io(out))?;
    let csv_path = out.join(format!("{}.csv", cfg.experiment));
    let manifest_path = out.join(format!("{}.manifest", cfg.experiment));
    std::fs::write(&csv_path, csv).map_err(io(&csv_path))?;
    std::fs::write(&manifest_path, config.to_manifest()).map_err(io(&manifest_path))?;
    Ok(RunOutput {
        csv: csv_path,
        manifest: manifest_path,
    })
}
