//! Monte Carlo oracle for the closed-form SQINR.
//!
//! Each trial draws every small-scale quantity (user channels, matched-filter
//! precoders, SI channel, data symbols, receiver noise, ADC/DAC noise from the
//! AQNM covariances, user-to-user channels) for a fixed large-scale scenario,
//! builds each labelled component of the filtered signal separately and
//! records its instantaneous power. Averages over trials estimate the terms
//! of the closed-form breakdown.
//!
//! Trial `i` always draws from stream `(seed, i)`, and trials are reduced in
//! fixed-size chunks in index order, so results do not depend on how rayon
//! schedules the work.
//!
//! The base station of interest hears no loopback from other full-duplex
//! sites; only its own transmit array leaks into its receiver.

use std::io::Write;

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::aqnm::{self, UplinkCovInputs};
use crate::channel::{sample_iui_channel, sample_si_channel, sample_small_scale, LargeScaleScenario, SystemParams};
use crate::error::{Error, Result};
use crate::linkperf::{mf_combiner, mf_precoder, Link, SqinrBreakdown, Term};
use crate::rng::{self, complex_normal, Domain};

const CHUNK: u64 = 512;
const SLOTS: usize = 8; // desired + 7 terms

type C64 = Complex64;

#[inline]
fn inner(w: &Array1<C64>, y: &Array1<C64>) -> C64 {
    w.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

fn noise_vector<R: Rng + ?Sized>(vars: &[f64], rng: &mut R) -> Array1<C64> {
    Array1::from_iter(vars.iter().map(|&v| complex_normal(rng, v)))
}

/// Instantaneous powers of one user in one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct UserTrial {
    pub user: usize,
    pub desired: f64,
    pub terms: Vec<(Term, f64)>,
    /// Ratio of the instantaneous desired power to the sum of the terms.
    pub sqinr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub link: Link,
    pub seed: u64,
    pub trial: u64,
    pub users: Vec<UserTrial>,
}

trait Kernel: Sync {
    fn link(&self) -> Link;
    /// Scenario indices of the measured users.
    fn users(&self) -> &[usize];
    /// Writes `SLOTS` powers per measured user into `out`.
    fn run(&self, rng: &mut rng::StreamRng, out: &mut [f64]);

    fn domain(&self) -> Domain {
        match self.link() {
            Link::Uplink => Domain::UplinkTrial,
            Link::Downlink => Domain::DownlinkTrial,
        }
    }
}

struct UplinkKernel {
    n: usize,
    au: f64,
    ad: f64,
    p_si: f64,
    mu2: f64,
    noise: f64,
    /// sqrt(G_0 P) for every uplink user
    amp: Vec<f64>,
    in_center: Vec<bool>,
    center: Vec<usize>,
    k_dl: usize,
}

impl UplinkKernel {
    fn new(scn: &LargeScaleScenario, params: &SystemParams) -> Result<Self> {
        params.validate()?;
        scn.validate()?;
        let center: Vec<usize> = scn.uplink_in(0).collect();
        if center.is_empty() {
            return Err(Error::EmptyScenario("no uplink users at the base station of interest"));
        }
        Ok(UplinkKernel {
            n: params.antennas,
            au: params.alpha_ul(),
            ad: params.alpha_dl(),
            p_si: params.p_si_w,
            mu2: params.effective_mu_si2(),
            noise: params.noise_w,
            amp: scn.uplink.iter().map(|u| (u.gains[0] * u.power_w).sqrt()).collect(),
            in_center: scn.uplink.iter().map(|u| u.cell == 0).collect(),
            center,
            k_dl: scn.dl_count(0),
        })
    }
}

impl Kernel for UplinkKernel {
    fn link(&self) -> Link {
        Link::Uplink
    }

    fn users(&self) -> &[usize] {
        &self.center
    }

    fn run(&self, rng: &mut rng::StreamRng, out: &mut [f64]) {
        let n = self.n;
        let nf = n as f64;
        let h: Vec<Array1<C64>> = (0..self.amp.len()).map(|_| sample_small_scale(n, rng)).collect();
        let s: Vec<C64> = (0..self.amp.len()).map(|_| complex_normal(rng, 1.0)).collect();
        let f: Vec<Array1<C64>> = (0..self.k_dl)
            .map(|_| mf_precoder(&sample_small_scale(n, rng)).expect("non-zero channel"))
            .collect();
        let s_dl: Vec<C64> = (0..self.k_dl).map(|_| complex_normal(rng, 1.0)).collect();
        let si: Array2<C64> = sample_si_channel(n, self.mu2, rng);
        let r_qd = aqnm::downlink_noise_cov(&f, self.ad);
        let q_d = if f.is_empty() {
            Array1::zeros(n)
        } else {
            noise_vector(&r_qd, rng)
        };
        let v = noise_vector(&vec![self.noise; n], rng);

        let received: Vec<(f64, &Array1<C64>)> = self.amp.iter().map(|a| a * a).zip(h.iter()).collect();
        let r_qu = aqnm::uplink_noise_cov(&UplinkCovInputs {
            received: &received,
            si_channel: &si,
            precoders: &f,
            p_si: self.p_si,
            noise_w: self.noise,
            alpha_u: self.au,
            alpha_d: self.ad,
        });
        let q_u = noise_vector(&r_qu, rng);

        let mut x = Array1::<C64>::zeros(n);
        for (fj, sj) in f.iter().zip(&s_dl) {
            x.scaled_add(*sj, fj);
        }
        let si_x = si.dot(&x);
        let si_qd = si.dot(&q_d);
        let sqrt_psi = self.p_si.sqrt();

        for (slot, &k) in self.center.iter().enumerate() {
            let w = mf_combiner(&h[k]).expect("non-zero channel");
            let (mut intra, mut inter) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
            for (j, hj) in h.iter().enumerate() {
                if j == k {
                    continue;
                }
                let c = self.amp[j] * inner(&w, hj) * s[j];
                if self.in_center[j] {
                    intra += c;
                } else {
                    inter += c;
                }
            }
            let a = self.au * self.amp[k];
            let o = &mut out[slot * SLOTS..(slot + 1) * SLOTS];
            o[0] = (a * nf * s[k]).norm_sqr();
            o[1] = (a * (inner(&w, &h[k]) - nf) * s[k]).norm_sqr();
            o[2] = (self.au * intra).norm_sqr();
            o[3] = (self.au * inter).norm_sqr();
            o[4] = (self.au * inner(&w, &v)).norm_sqr();
            o[5] = (self.au * self.ad * sqrt_psi * inner(&w, &si_x)).norm_sqr();
            o[6] = (self.au * sqrt_psi * inner(&w, &si_qd)).norm_sqr();
            o[7] = inner(&w, &q_u).norm_sqr();
        }
    }
}

struct DownlinkKernel {
    n: usize,
    ad: f64,
    noise: f64,
    sigma_iui2: f64,
    /// downlink powers per cell, in scenario order
    cell_powers: Vec<Vec<f64>>,
    center: Vec<usize>,
    /// position of each center user within cell 0
    center_slot: Vec<usize>,
    /// G_{l,k} per center user
    gains: Vec<Vec<f64>>,
    /// sqrt(T P^u) per center user and uplink user
    iui_amp: Vec<Vec<f64>>,
    ul_in_center: Vec<bool>,
}

impl DownlinkKernel {
    fn new(scn: &LargeScaleScenario, params: &SystemParams) -> Result<Self> {
        params.validate()?;
        scn.validate()?;
        let center: Vec<usize> = scn.downlink_in(0).collect();
        if center.is_empty() {
            return Err(Error::EmptyScenario(
                "no downlink users at the base station of interest",
            ));
        }
        let cell_powers = (0..scn.num_cells)
            .map(|c| scn.downlink_in(c).map(|i| scn.downlink[i].power_w).collect())
            .collect();
        Ok(DownlinkKernel {
            n: params.antennas,
            ad: params.alpha_dl(),
            noise: params.noise_w,
            sigma_iui2: params.sigma_iui2,
            cell_powers,
            center_slot: (0..center.len()).collect(),
            gains: center.iter().map(|&k| scn.downlink[k].gains.clone()).collect(),
            iui_amp: center
                .iter()
                .map(|&k| {
                    scn.uplink
                        .iter()
                        .zip(&scn.iui[k])
                        .map(|(u, t)| (t * u.power_w).sqrt())
                        .collect()
                })
                .collect(),
            ul_in_center: scn.uplink.iter().map(|u| u.cell == 0).collect(),
            center,
        })
    }
}

impl Kernel for DownlinkKernel {
    fn link(&self) -> Link {
        Link::Downlink
    }

    fn users(&self) -> &[usize] {
        &self.center
    }

    fn run(&self, rng: &mut rng::StreamRng, out: &mut [f64]) {
        let n = self.n;
        let nf = n as f64;
        let zero = C64::new(0.0, 0.0);

        // every cell: precoders, symbols and DAC noise of its transmit signal
        let mut f: Vec<Vec<Array1<C64>>> = Vec::with_capacity(self.cell_powers.len());
        let mut s: Vec<Vec<C64>> = Vec::with_capacity(self.cell_powers.len());
        let mut q: Vec<Array1<C64>> = Vec::with_capacity(self.cell_powers.len());
        for powers in &self.cell_powers {
            let fl: Vec<Array1<C64>> = powers
                .iter()
                .map(|_| mf_precoder(&sample_small_scale(n, rng)).expect("non-zero channel"))
                .collect();
            let sl: Vec<C64> = powers.iter().map(|_| complex_normal(rng, 1.0)).collect();
            let ql = if fl.is_empty() {
                Array1::zeros(n)
            } else {
                let w: Vec<f64> = powers.iter().map(|p| p / nf).collect();
                noise_vector(&aqnm::transmit_noise_cov(&fl, Some(&w), self.ad), rng)
            };
            f.push(fl);
            s.push(sl);
            q.push(ql);
        }
        // reverse-link channels from every site to each measured user
        let h: Vec<Vec<Option<Array1<C64>>>> = self
            .center_slot
            .iter()
            .map(|_| {
                (0..self.cell_powers.len())
                    .map(|l| (l != 0).then(|| sample_small_scale(n, rng)))
                    .collect()
            })
            .collect();
        let n_ul = self.ul_in_center.len();
        let s_ul: Vec<C64> = (0..n_ul).map(|_| complex_normal(rng, 1.0)).collect();

        for (slot, &local) in self.center_slot.iter().enumerate() {
            let g: Vec<C64> = (0..n_ul).map(|_| sample_iui_channel(self.sigma_iui2, rng)).collect();
            let v = complex_normal(rng, self.noise);
            let gains = &self.gains[slot];
            let p0 = &self.cell_powers[0];
            let h0 = &f[0][local];
            let a0 = |p: f64| self.ad * (gains[0] * p / nf).sqrt();

            let mut intra = zero;
            for (j, fj) in f[0].iter().enumerate() {
                if j != local {
                    intra += a0(p0[j]) * inner(h0, fj) * s[0][j];
                }
            }
            let mut inter = zero;
            let mut aqnm_sig = gains[0].sqrt() * inner(h0, &q[0]);
            for l in 1..self.cell_powers.len() {
                let hl = h[slot][l].as_ref().expect("drawn for l != 0");
                for (j, fj) in f[l].iter().enumerate() {
                    inter += self.ad * (gains[l] * self.cell_powers[l][j] / nf).sqrt() * inner(hl, fj) * s[l][j];
                }
                aqnm_sig += gains[l].sqrt() * inner(hl, &q[l]);
            }
            let (mut iui_same, mut iui_other) = (zero, zero);
            for m in 0..n_ul {
                let c = self.iui_amp[slot][m] * g[m] * s_ul[m];
                if self.ul_in_center[m] {
                    iui_same += c;
                } else {
                    iui_other += c;
                }
            }

            let o = &mut out[slot * SLOTS..(slot + 1) * SLOTS];
            o[0] = (a0(p0[local]) * nf * s[0][local]).norm_sqr();
            o[1] = (a0(p0[local]) * (inner(h0, h0) - nf) * s[0][local]).norm_sqr();
            o[2] = intra.norm_sqr();
            o[3] = inter.norm_sqr();
            o[4] = iui_same.norm_sqr();
            o[5] = iui_other.norm_sqr();
            o[6] = aqnm_sig.norm_sqr();
            o[7] = v.norm_sqr();
        }
    }
}

fn kernel(scn: &LargeScaleScenario, params: &SystemParams, link: Link) -> Result<Box<dyn Kernel>> {
    Ok(match link {
        Link::Uplink => Box::new(UplinkKernel::new(scn, params)?),
        Link::Downlink => Box::new(DownlinkKernel::new(scn, params)?),
    })
}

fn single_trial(k: &dyn Kernel, seed: u64, trial: u64) -> TrialResult {
    let mut out = vec![0.0; k.users().len() * SLOTS];
    k.run(&mut rng::stream(seed, k.domain(), trial), &mut out);
    let terms = Term::for_link(k.link());
    let users = k
        .users()
        .iter()
        .zip(out.chunks(SLOTS))
        .map(|(&user, o)| {
            let den: f64 = o[1..].iter().sum();
            UserTrial {
                user,
                desired: o[0],
                terms: terms.iter().cloned().zip(o[1..].iter().cloned()).collect(),
                sqinr: o[0] / den,
            }
        })
        .collect();
    TrialResult {
        link: k.link(),
        seed,
        trial,
        users,
    }
}

/// One uplink trial at the base station of interest.
pub fn simulate_uplink_trial(
    scn: &LargeScaleScenario,
    params: &SystemParams,
    seed: u64,
    trial: u64,
) -> Result<TrialResult> {
    Ok(single_trial(&UplinkKernel::new(scn, params)?, seed, trial))
}

/// One downlink trial at the base station of interest.
pub fn simulate_downlink_trial(
    scn: &LargeScaleScenario,
    params: &SystemParams,
    seed: u64,
    trial: u64,
) -> Result<TrialResult> {
    Ok(single_trial(&DownlinkKernel::new(scn, params)?, seed, trial))
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub count: u64,
}

impl Estimate {
    fn from_sums(sum: f64, sum_sq: f64, count: u64) -> Self {
        let n = count as f64;
        let mean = sum / n;
        let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        Estimate {
            mean,
            std_err: (var / n).sqrt(),
            count,
        }
    }

    /// Deviation from `expected` in standard errors.
    pub fn z(&self, expected: f64) -> f64 {
        let d = self.mean - expected;
        if self.std_err == 0.0 {
            if d == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            d / self.std_err
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserEstimate {
    pub user: usize,
    pub desired: Estimate,
    pub terms: Vec<(Term, Estimate)>,
}

impl UserEstimate {
    pub fn term(&self, t: Term) -> Option<&Estimate> {
        self.terms.iter().find(|(k, _)| *k == t).map(|(_, e)| e)
    }

    /// Ratio of mean desired power to the summed mean term powers.
    pub fn empirical_sqinr(&self) -> f64 {
        self.desired.mean / self.terms.iter().map(|(_, e)| e.mean).sum::<f64>()
    }
}

/// Oracle averages for every user of the base station of interest.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub link: Link,
    pub trials: u64,
    pub seed: u64,
    pub users: Vec<UserEstimate>,
}

/// One row of a closed-form vs oracle comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct TermComparison {
    pub user: usize,
    pub term: &'static str,
    pub closed_form: f64,
    pub empirical: Estimate,
}

impl TermComparison {
    pub fn z(&self) -> f64 {
        self.empirical.z(self.closed_form)
    }
}

impl OracleReport {
    pub fn user(&self, user: usize) -> Option<&UserEstimate> {
        self.users.iter().find(|u| u.user == user)
    }

    /// Pairs every closed-form term (and the numerator, as `desired`) with
    /// its empirical estimate.
    pub fn compare(&self, closed: &[SqinrBreakdown]) -> Vec<TermComparison> {
        let mut rows = Vec::new();
        for b in closed {
            let Some(u) = self.user(b.user) else { continue };
            rows.push(TermComparison {
                user: b.user,
                term: "desired",
                closed_form: b.numerator,
                empirical: u.desired,
            });
            for (t, v) in &b.terms {
                if let Some(e) = u.term(*t) {
                    rows.push(TermComparison {
                        user: b.user,
                        term: t.name(),
                        closed_form: *v,
                        empirical: *e,
                    });
                }
            }
        }
        rows
    }
}

/// `user,link,term,closed_form,empirical,std_err,z`
pub fn write_comparison_csv<W: Write>(mut w: W, link: Link, rows: &[TermComparison]) -> Result<()> {
    writeln!(w, "user,link,term,closed_form,empirical,std_err,z")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.user,
            link.as_str(),
            r.term,
            r.closed_form,
            r.empirical.mean,
            r.empirical.std_err,
            r.z()
        )?;
    }
    Ok(())
}

/// Runs `trials` trials and averages every term power.
pub fn run_oracle(
    scn: &LargeScaleScenario,
    params: &SystemParams,
    link: Link,
    trials: u64,
    seed: u64,
) -> Result<OracleReport> {
    if trials < 2 {
        return Err(crate::error::invalid("trials", "need at least 2 trials"));
    }
    let k = kernel(scn, params, link)?;
    let width = k.users().len() * SLOTS;
    let chunks = trials.div_ceil(CHUNK);
    let partial: Vec<Vec<(f64, f64)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![(0.0, 0.0); width];
            let mut out = vec![0.0; width];
            for t in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                k.run(&mut rng::stream(seed, k.domain(), t), &mut out);
                for (a, &x) in acc.iter_mut().zip(&out) {
                    a.0 += x;
                    a.1 += x * x;
                }
            }
            acc
        })
        .collect();
    let mut total = vec![(0.0, 0.0); width];
    for acc in &partial {
        for (t, a) in total.iter_mut().zip(acc) {
            t.0 += a.0;
            t.1 += a.1;
        }
    }
    let terms = Term::for_link(link);
    let users = k
        .users()
        .iter()
        .zip(total.chunks(SLOTS))
        .map(|(&user, sums)| {
            let est = |i: usize| Estimate::from_sums(sums[i].0, sums[i].1, trials);
            UserEstimate {
                user,
                desired: est(0),
                terms: terms.iter().enumerate().map(|(i, &t)| (t, est(i + 1))).collect(),
            }
        })
        .collect();
    Ok(OracleReport {
        link,
        trials,
        seed,
        users,
    })
}

/// Empirical matched-filter moments.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub antennas: usize,
    pub trials: u64,
    /// `E||w||^2`, `E||w||^4`, `E|w^H h'|^2` for the combiner.
    pub combiner: [Estimate; 3],
    /// `E||f||^2`, `E||f||^4`, `E|h'^H f|^2` for the precoder.
    pub precoder: [Estimate; 3],
}

/// Estimates the matched-filter moments for `antennas` elements.
pub fn verify_corollary1(antennas: usize, trials: u64, seed: u64) -> Result<MomentReport> {
    if antennas == 0 {
        return Err(crate::error::invalid("antennas", "must be >= 1"));
    }
    if trials < 2 {
        return Err(crate::error::invalid("trials", "need at least 2 trials"));
    }
    let chunks = trials.div_ceil(CHUNK);
    let partial: Vec<[(f64, f64); 6]> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = [(0.0, 0.0); 6];
            for t in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                let mut rng = rng::stream(seed, Domain::Moments, t);
                let w = mf_combiner(&sample_small_scale(antennas, &mut rng)).expect("non-zero");
                let f = mf_precoder(&sample_small_scale(antennas, &mut rng)).expect("non-zero");
                let other = sample_small_scale(antennas, &mut rng);
                let wn = inner(&w, &w).re;
                let fnn = inner(&f, &f).re;
                let x = [
                    wn,
                    wn * wn,
                    inner(&w, &other).norm_sqr(),
                    fnn,
                    fnn * fnn,
                    inner(&other, &f).norm_sqr(),
                ];
                for (a, v) in acc.iter_mut().zip(x) {
                    a.0 += v;
                    a.1 += v * v;
                }
            }
            acc
        })
        .collect();
    let mut total = [(0.0, 0.0); 6];
    for acc in &partial {
        for (t, a) in total.iter_mut().zip(acc) {
            t.0 += a.0;
            t.1 += a.1;
        }
    }
    let e = |i: usize| Estimate::from_sums(total[i].0, total[i].1, trials);
    Ok(MomentReport {
        antennas,
        trials,
        combiner: [e(0), e(1), e(2)],
        precoder: [e(3), e(4), e(5)],
    })
}

/// Empirical CDF over a set of samples.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfEstimate {
    /// Sorted sample values.
    pub values: Vec<f64>,
    /// `probs[i] = (i + 1) / n`.
    pub probs: Vec<f64>,
}

pub fn estimate_cdf(samples: &[f64]) -> Result<CdfEstimate> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if let Some(i) = samples.iter().position(|x| x.is_nan()) {
        return Err(crate::error::invalid("samples", format!("NaN at index {i}")));
    }
    let mut values = samples.to_vec();
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let probs = (1..=values.len()).map(|i| i as f64 / n).collect();
    Ok(CdfEstimate { values, probs })
}

impl CdfEstimate {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Fraction of samples `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.values.partition_point(|&v| v <= x) as f64 / self.values.len() as f64
    }

    /// Smallest sample `x` with `F(x) >= p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.values.len();
        let idx = ((p * n as f64).ceil() as usize).clamp(1, n) - 1;
        self.values[idx]
    }

    /// Kolmogorov-Smirnov distance to a continuous reference CDF.
    pub fn ks_distance(&self, reference: impl Fn(f64) -> f64) -> f64 {
        let n = self.values.len() as f64;
        self.values
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = reference(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    /// `sample_db,prob`
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "sample_db,prob")?;
        for (x, p) in self.values.iter().zip(&self.probs) {
            writeln!(w, "{x},{p}")?;
        }
        Ok(())
    }
}
