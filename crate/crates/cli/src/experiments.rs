//! The six experiments. Each returns its CSV as a string; scenario draws
//! and per-scenario evaluation run in parallel, results are gathered in
//! index order before anything is summed or written.

use std::fmt::Write;

use fdmimo_core::channel::{LayoutSpec, NetworkDraw, Resolution};
use fdmimo_core::linkperf::{
    center_breakdowns, lemma1_downlink, lemma1_uplink, lemma2_downlink, lemma2_uplink, lemma3_downlink, lemma3_uplink,
};
use fdmimo_core::powermodel::{energy_efficiency, rx_power, write_power_csv, PowerSweepRow};
use fdmimo_core::simkernel::{estimate_cdf, run_oracle, write_comparison_csv};
use fdmimo_core::units::linear_to_db;
use fdmimo_core::{
    AdcScenario, CsiMode, DevicePowerTable, Error, LargeScaleScenario, LayoutKind, Link, SqinrBreakdown, SystemParams,
};
use rayon::prelude::*;

use crate::config::{Experiment, ExperimentConfig, SweepSettings};
use crate::error::{CliError, Result};

const DRAW_ATTEMPTS: u64 = 8;

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<String> {
    match cfg.experiment {
        Experiment::OutageCdf => outage_cdf(cfg),
        Experiment::SeVsBits => se_vs_bits(cfg),
        Experiment::SeVsAntennas => se_vs_antennas(cfg),
        Experiment::LemmaCheck => lemma_check(cfg),
        Experiment::PowerSweep => power_sweep(cfg),
        Experiment::OracleCheck => oracle_check(cfg),
    }
}

fn csi(cfg: &ExperimentConfig) -> CsiMode {
    if cfg.perfect_csi {
        CsiMode::Perfect
    } else {
        CsiMode::Hardening
    }
}

/// Large-scale draw `index` for the given layout kind. A draw whose users
/// cannot fill every cell (a PPP cell with a sliver of area) is redrawn
/// from a further sub-stream.
pub fn draw_scenario(cfg: &ExperimentConfig, kind: LayoutKind, index: u64) -> Result<LargeScaleScenario> {
    let spec = cfg.layout.spec(kind);
    let base = match spec {
        LayoutSpec::Hex { .. } => 0,
        LayoutSpec::Ppp { .. } => 1 << 62,
    };
    let mut last = None;
    for attempt in 0..DRAW_ATTEMPTS {
        let stream = base + (attempt << 40) + index;
        match NetworkDraw::sample(&spec, &cfg.layout.drop, &cfg.params, cfg.seed, stream) {
            Ok(d) => return Ok(d.scenario),
            Err(e @ (Error::PlacementFailed { .. } | Error::EmptyLayout)) => last = Some(e),
            Err(e) => return Err(e.into()),
        }
    }
    Err(last.expect("at least one attempt").into())
}

pub fn draw_scenarios(cfg: &ExperimentConfig, kind: LayoutKind) -> Result<Vec<LargeScaleScenario>> {
    (0..cfg.scenarios as u64)
        .into_par_iter()
        .map(|i| draw_scenario(cfg, kind, i))
        .collect()
}

fn breakdowns(
    scns: &[LargeScaleScenario],
    params: &SystemParams,
    link: Link,
    csi: CsiMode,
) -> Result<Vec<Vec<SqinrBreakdown>>> {
    scns.par_iter()
        .map(|s| center_breakdowns(s, params, link, csi).map_err(CliError::from))
        .collect()
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

/// Mean SE over every measured user of every scenario.
fn mean_se(scns: &[LargeScaleScenario], params: &SystemParams, link: Link, csi: CsiMode) -> Result<f64> {
    Ok(mean(
        breakdowns(scns, params, link, csi)?.iter().flatten().map(|b| b.se),
    ))
}

/// Mean of `f(scenario, user)` over measured users, evaluated in parallel.
fn mean_limit<F>(scns: &[LargeScaleScenario], link: Link, f: F) -> Result<f64>
where
    F: Fn(&LargeScaleScenario, usize) -> fdmimo_core::Result<f64> + Sync,
{
    let per: Vec<Vec<f64>> = scns
        .par_iter()
        .map(|s| {
            let users: Vec<usize> = match link {
                Link::Uplink => s.uplink_in(0).collect(),
                Link::Downlink => s.downlink_in(0).collect(),
            };
            users
                .into_iter()
                .map(|k| f(s, k))
                .collect::<fdmimo_core::Result<Vec<_>>>()
        })
        .collect::<fdmimo_core::Result<_>>()?;
    Ok(mean(per.into_iter().flatten()))
}

fn with_resolution(params: &SystemParams, res: Resolution) -> SystemParams {
    SystemParams {
        res_ul: res,
        res_dl: res,
        ..params.clone()
    }
}

/// Quantiles of the SQINR (dB) distribution for hex and PPP layouts at low
/// and full converter resolution.
fn outage_cdf(cfg: &ExperimentConfig) -> Result<String> {
    let mut columns = Vec::new();
    for kind in [LayoutKind::HexLattice, LayoutKind::Ppp] {
        let scns = draw_scenarios(cfg, kind)?;
        for res in [Resolution::Gain(cfg.outage_alpha_low), Resolution::Full] {
            let p = with_resolution(&cfg.params, res);
            let samples: Vec<f64> = breakdowns(&scns, &p, cfg.outage_link, csi(cfg))?
                .iter()
                .flatten()
                .map(|b| linear_to_db(b.sqinr))
                .collect();
            columns.push(estimate_cdf(&samples)?);
        }
    }
    let mut out = String::from("prob,hex_low,hex_full,ppp_low,ppp_full\n");
    for j in 0..cfg.outage_points {
        let p = j as f64 / (cfg.outage_points - 1) as f64;
        write!(out, "{p}").unwrap();
        for c in &columns {
            write!(out, ",{}", c.quantile(p)).unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

/// Mean SE against converter bits on both links, with the full-resolution
/// ceilings, for each SI power.
fn se_vs_bits(cfg: &ExperimentConfig) -> Result<String> {
    let scns = draw_scenarios(cfg, cfg.layout.kind)?;
    let mut out = String::from("b,p_si_w,ul_se,dl_se,ul_ceiling,dl_ceiling\n");
    for &p_si in &cfg.sweep.p_si_w {
        let base = SystemParams {
            p_si_w: p_si,
            ..cfg.params.clone()
        };
        let ul_ceiling = mean_limit(&scns, Link::Uplink, |s, k| lemma1_uplink(s, &base, k))?;
        let dl_ceiling = mean_limit(&scns, Link::Downlink, |s, k| lemma1_downlink(s, &base, k))?;
        for &b in &cfg.sweep.bits {
            let p = with_resolution(&base, Resolution::Bits(b));
            let ul = mean_se(&scns, &p, Link::Uplink, csi(cfg))?;
            let dl = mean_se(&scns, &p, Link::Downlink, csi(cfg))?;
            writeln!(out, "{b},{p_si},{ul},{dl},{ul_ceiling},{dl_ceiling}").unwrap();
        }
    }
    Ok(out)
}

/// Scenario and parameters at `n` antennas, with powers scaled as `E / n`
/// when power scaling is on.
fn at_antennas(
    cfg: &ExperimentConfig,
    scn: &LargeScaleScenario,
    n: usize,
) -> Result<(LargeScaleScenario, SystemParams)> {
    let mut p = SystemParams {
        antennas: n,
        ..cfg.params.clone()
    };
    if !cfg.sweep.power_scaling {
        return Ok((scn.clone(), p));
    }
    if cfg.params.p_ul_w == 0.0 || cfg.params.p_dl_w == 0.0 {
        return Err(CliError::invalid(
            "sweep.power_scaling",
            "needs non-zero system.p_ul_w and system.p_dl_w",
        ));
    }
    let nf = n as f64;
    p.p_si_w = cfg.sweep.e_si / nf;
    let s = scn.scaled_powers(
        cfg.sweep.e_ul / (nf * cfg.params.p_ul_w),
        cfg.sweep.e_dl / (nf * cfg.params.p_dl_w),
    );
    Ok((s, p))
}

fn limit_ul(cfg: &ExperimentConfig, s: &LargeScaleScenario, p: &SystemParams, k: usize) -> fdmimo_core::Result<f64> {
    if cfg.sweep.power_scaling {
        let e = s.uplink[k].power_w * p.antennas as f64;
        lemma3_uplink(s, p, k, e, cfg.sweep.e_si)
    } else {
        lemma1_uplink(s, p, k)
    }
}

fn limit_dl(cfg: &ExperimentConfig, s: &LargeScaleScenario, p: &SystemParams, k: usize) -> fdmimo_core::Result<f64> {
    if cfg.sweep.power_scaling {
        let e = s.downlink[k].power_w * p.antennas as f64;
        lemma3_downlink(s, p, k, e)
    } else {
        lemma1_downlink(s, p, k)
    }
}

/// Mean SE against array size. With power scaling the limit columns are the
/// large-array limits, otherwise the full-resolution ceilings.
fn se_vs_antennas(cfg: &ExperimentConfig) -> Result<String> {
    let scns = draw_scenarios(cfg, cfg.layout.kind)?;
    let mut out = String::from("N_a,ul_se,dl_se,ul_limit,dl_limit\n");
    for &n in &cfg.sweep.antennas {
        let scaled: Vec<(LargeScaleScenario, SystemParams)> =
            scns.iter().map(|s| at_antennas(cfg, s, n)).collect::<Result<_>>()?;
        let p = scaled[0].1.clone();
        let p = &p;
        let ss: Vec<LargeScaleScenario> = scaled.into_iter().map(|(s, _)| s).collect();
        let ul = mean_se(&ss, p, Link::Uplink, csi(cfg))?;
        let dl = mean_se(&ss, p, Link::Downlink, csi(cfg))?;
        let ul_lim = mean_limit(&ss, Link::Uplink, |s, k| limit_ul(cfg, s, p, k))?;
        let dl_lim = mean_limit(&ss, Link::Downlink, |s, k| limit_dl(cfg, s, p, k))?;
        writeln!(out, "{n},{ul},{dl},{ul_lim},{dl_lim}").unwrap();
    }
    Ok(out)
}

fn sqinr_of(se: f64) -> f64 {
    (se * std::f64::consts::LN_2).exp_m1()
}

/// Closed-form SE next to each limit, per scenario and user.
///
/// `lemma1`: converters at `lemma.bits`. `lemma2`: every user and the SI
/// path at `lemma.power_factor` watts. `lemma3`: `lemma.antennas` with
/// powers `E / N`.
fn lemma_check(cfg: &ExperimentConfig) -> Result<String> {
    type Row = (usize, Link, usize, &'static str, f64, f64);
    let scns = draw_scenarios(cfg, cfg.layout.kind)?;
    let p1 = with_resolution(&cfg.params, Resolution::Bits(cfg.lemma_bits));
    let big = cfg.lemma_power_factor;
    let p2 = SystemParams {
        p_si_w: big,
        ..cfg.params.clone()
    };

    let scaled = ExperimentConfig {
        sweep: SweepSettings {
            power_scaling: true,
            ..cfg.sweep.clone()
        },
        ..cfg.clone()
    };

    let rows: Vec<Vec<Row>> = scns
        .par_iter()
        .enumerate()
        .map(|(i, s)| -> Result<Vec<Row>> {
            let mut rows = Vec::new();
            let mut equal = s.clone();
            equal.uplink.iter_mut().for_each(|u| u.power_w = big);
            equal.downlink.iter_mut().for_each(|u| u.power_w = big);
            let (s3, p3) = at_antennas(&scaled, s, cfg.lemma_antennas)?;
            for link in [Link::Uplink, Link::Downlink] {
                let b1 = center_breakdowns(s, &p1, link, CsiMode::Hardening)?;
                let b2 = center_breakdowns(&equal, &p2, link, CsiMode::Hardening)?;
                let b3 = center_breakdowns(&s3, &p3, link, CsiMode::Hardening)?;
                for ((x1, x2), x3) in b1.iter().zip(&b2).zip(&b3) {
                    let k = x1.user;
                    let (l1, l2, l3) = match link {
                        Link::Uplink => (
                            lemma1_uplink(s, &p1, k)?,
                            lemma2_uplink(s, &p2, k)?,
                            limit_ul(&scaled, &s3, &p3, k)?,
                        ),
                        Link::Downlink => (
                            lemma1_downlink(s, &p1, k)?,
                            lemma2_downlink(s, &p2, k)?,
                            limit_dl(&scaled, &s3, &p3, k)?,
                        ),
                    };
                    rows.push((i, link, k, "lemma1", x1.se, l1));
                    rows.push((i, link, k, "lemma2", x2.se, l2));
                    rows.push((i, link, k, "lemma3", x3.se, l3));
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;

    let mut out = String::from("scenario,link,user,lemma,closed_form_se,limit_se,rel_sqinr_gap\n");
    for (i, link, k, lemma, se, lim) in rows.into_iter().flatten() {
        let gap = (sqinr_of(se) - sqinr_of(lim)).abs() / sqinr_of(lim);
        writeln!(out, "{i},{},{k},{lemma},{se},{lim},{gap}", link.as_str()).unwrap();
    }
    Ok(out)
}

/// Receive-chain power and uplink energy efficiency per ADC scenario, bit
/// width and array size.
fn power_sweep(cfg: &ExperimentConfig) -> Result<String> {
    let scns = draw_scenarios(cfg, cfg.layout.kind)?;
    let bw = cfg.params.bandwidth_hz;
    let mut sum_se = Vec::new();
    for &n in &cfg.power_antennas {
        for &b in &cfg.power_bits {
            let p = SystemParams {
                antennas: n,
                res_ul: Resolution::Bits(b),
                ..cfg.params.clone()
            };
            let per = breakdowns(&scns, &p, Link::Uplink, csi(cfg))?;
            sum_se.push(mean(per.iter().map(|v| v.iter().map(|b| b.se).sum::<f64>())));
        }
    }
    let mut rows = Vec::new();
    for scenario in AdcScenario::ALL {
        let table = DevicePowerTable::published(scenario);
        let mut se = sum_se.iter();
        for &n in &cfg.power_antennas {
            for &b in &cfg.power_bits {
                let power_w = rx_power(n, b, &table, bw);
                let rate = bw * se.next().expect("one entry per (n, b)");
                rows.push(PowerSweepRow {
                    scenario,
                    bits: b,
                    antennas: n,
                    power_w,
                    ee_bits_per_j: energy_efficiency(rate, power_w)?,
                });
            }
        }
    }
    let mut buf = Vec::new();
    write_power_csv(&mut buf, &rows)?;
    Ok(String::from_utf8(buf).expect("ascii"))
}

/// Monte Carlo oracle against the closed form on one large-scale draw.
fn oracle_check(cfg: &ExperimentConfig) -> Result<String> {
    let scn = draw_scenario(cfg, cfg.layout.kind, cfg.oracle_scenario)?;
    let mut buf = Vec::new();
    let mut header = true;
    for link in [Link::Uplink, Link::Downlink] {
        let closed = center_breakdowns(&scn, &cfg.params, link, CsiMode::Hardening)?;
        let rep = run_oracle(&scn, &cfg.params, link, cfg.trials, cfg.seed)?;
        let mut part = Vec::new();
        write_comparison_csv(&mut part, link, &rep.compare(&closed))?;
        let text = String::from_utf8(part).expect("ascii");
        let body = if header {
            &text[..]
        } else {
            text.split_once('\n').map_or("", |x| x.1)
        };
        buf.extend_from_slice(body.as_bytes());
        header = false;
    }
    Ok(String::from_utf8(buf).expect("ascii"))
}
