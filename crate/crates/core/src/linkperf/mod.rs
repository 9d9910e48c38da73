//! Closed-form SQINR for matched-filter combining (uplink) and precoding
//! (downlink) at the base station of interest.
//!
//! Receivers rely on channel hardening: the decoder uses `E[w^H h]` as the
//! effective channel and the fluctuation around it is charged to the
//! denominator as `est_error`. Channel estimates equal the true channels.
//! With the perfect-CSI variant the numerator uses `E[|w^H h|^2]` and that
//! fluctuation term disappears.
//!
//! All expectations use the matched-filter moments for `h ~ CN(0, I)`:
//! `E||w||^2 = N`, `E||w||^4 = N^2 + N`, `E|w^H h'|^2 = N` for independent `h'`.
//!
//! The self-interference terms are exact for `K^d` downlink streams at the
//! base station of interest, i.e. the loopback DAC noise and its share of
//! the ADC input both scale with `K^d`. For a single stream they reduce to
//! the familiar single-user expressions.

mod limits;

use std::fmt;
use std::io::Write;

use ndarray::Array1;
use num_complex::Complex64;

use crate::channel::{LargeScaleScenario, SystemParams};
use crate::error::{Error, Result};
use crate::units::spectral_efficiency;

pub use limits::{
    lemma1_downlink, lemma1_downlink_no_array_gain, lemma1_uplink, lemma2_downlink, lemma2_uplink, lemma3_downlink,
    lemma3_uplink,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Link {
    Uplink,
    Downlink,
}

impl Link {
    pub fn as_str(&self) -> &'static str {
        match self {
            Link::Uplink => "ul",
            Link::Downlink => "dl",
        }
    }
}

/// Power terms of the SQINR denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    EstError,
    IntraCell,
    InterCell,
    Noise,
    FdSelfInterference,
    SiTimesDacNoise,
    AdcNoise,
    IuiSameCell,
    IuiOtherCells,
    Aqnm,
}

impl Term {
    pub const UPLINK: [Term; 7] = [
        Term::EstError,
        Term::IntraCell,
        Term::InterCell,
        Term::Noise,
        Term::FdSelfInterference,
        Term::SiTimesDacNoise,
        Term::AdcNoise,
    ];

    pub const DOWNLINK: [Term; 7] = [
        Term::EstError,
        Term::IntraCell,
        Term::InterCell,
        Term::IuiSameCell,
        Term::IuiOtherCells,
        Term::Aqnm,
        Term::Noise,
    ];

    pub fn for_link(link: Link) -> &'static [Term; 7] {
        match link {
            Link::Uplink => &Self::UPLINK,
            Link::Downlink => &Self::DOWNLINK,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Term::EstError => "est_error",
            Term::IntraCell => "intra_cell",
            Term::InterCell => "inter_cell",
            Term::Noise => "noise",
            Term::FdSelfInterference => "fd_self_interference",
            Term::SiTimesDacNoise => "si_times_dac_noise",
            Term::AdcNoise => "adc_noise",
            Term::IuiSameCell => "iui_same_cell",
            Term::IuiOtherCells => "iui_other_cells",
            Term::Aqnm => "aqnm",
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsiMode {
    /// Decoder uses the mean filtered channel.
    Hardening,
    /// Decoder knows the instantaneous filtered channel.
    Perfect,
}

/// Per-term power decomposition of one user's SQINR.
#[derive(Debug, Clone, PartialEq)]
pub struct SqinrBreakdown {
    pub link: Link,
    pub user: usize,
    pub numerator: f64,
    pub terms: Vec<(Term, f64)>,
    pub sqinr: f64,
    /// `log2(1 + sqinr)` in bits/s/Hz.
    pub se: f64,
}

impl SqinrBreakdown {
    fn new(link: Link, user: usize, numerator: f64, terms: Vec<(Term, f64)>) -> Self {
        let den: f64 = terms.iter().map(|(_, v)| v).sum();
        let sqinr = numerator / den;
        SqinrBreakdown {
            link,
            user,
            numerator,
            terms,
            sqinr,
            se: spectral_efficiency(sqinr),
        }
    }

    pub fn term(&self, t: Term) -> f64 {
        self.terms.iter().find(|(k, _)| *k == t).map_or(0.0, |(_, v)| *v)
    }

    pub fn denominator(&self) -> f64 {
        self.terms.iter().map(|(_, v)| v).sum()
    }
}

/// Writes `user,link,term,value_W,sqinr,se_bps_hz`, one row per term plus a
/// `desired` row for the numerator.
pub fn write_breakdown_csv<W: Write>(mut w: W, rows: &[SqinrBreakdown]) -> Result<()> {
    writeln!(w, "user,link,term,value_W,sqinr,se_bps_hz")?;
    for b in rows {
        let link = b.link.as_str();
        writeln!(w, "{},{link},desired,{},{},{}", b.user, b.numerator, b.sqinr, b.se)?;
        for (t, v) in &b.terms {
            writeln!(w, "{},{link},{t},{v},{},{}", b.user, b.sqinr, b.se)?;
        }
    }
    Ok(())
}

/// Matched-filter combiner `w = h_hat`.
pub fn mf_combiner(h_hat: &Array1<Complex64>) -> Result<Array1<Complex64>> {
    if h_hat.iter().all(|z| z.norm_sqr() == 0.0) {
        return Err(Error::ZeroChannel);
    }
    Ok(h_hat.clone())
}

/// Matched-filter precoder `f = sqrt(N) h_hat / sqrt(E||h_hat||^2)`, with
/// `E||h_hat||^2 = N` for a normalized Rayleigh estimate.
pub fn mf_precoder(h_hat: &Array1<Complex64>) -> Result<Array1<Complex64>> {
    let w = mf_combiner(h_hat)?;
    let n = h_hat.len() as f64;
    let expected_norm2 = n;
    Ok(w * (n.sqrt() / expected_norm2.sqrt()))
}

/// Sums the scenario needs for the uplink of user `user` at BS 0.
struct UplinkSums {
    gp: f64,
    intra: f64,
    inter: f64,
    k_dl: f64,
}

fn uplink_sums(scn: &LargeScaleScenario, user: usize) -> Result<UplinkSums> {
    scn.validate()?;
    let u = scn
        .uplink
        .get(user)
        .ok_or(Error::UserOutOfRange { link: "uplink", user })?;
    if u.cell != 0 {
        return Err(Error::NotServedByCenter { link: "uplink", user });
    }
    let (mut intra, mut inter) = (0.0, 0.0);
    for (j, v) in scn.uplink.iter().enumerate() {
        let gp = v.gains[0] * v.power_w;
        match (v.cell == 0, j == user) {
            (true, true) => {}
            (true, false) => intra += gp,
            (false, _) => inter += gp,
        }
    }
    Ok(UplinkSums {
        gp: u.gains[0] * u.power_w,
        intra,
        inter,
        k_dl: scn.dl_count(0) as f64,
    })
}

pub fn uplink_breakdown(
    scn: &LargeScaleScenario,
    params: &SystemParams,
    user: usize,
    csi: CsiMode,
) -> Result<SqinrBreakdown> {
    params.validate()?;
    let s = uplink_sums(scn, user)?;
    let n = params.antennas as f64;
    let (au, ad) = (params.alpha_ul(), params.alpha_dl());
    let au2 = au * au;
    let mu2 = params.effective_mu_si2();
    let psi = params.p_si_w;
    let s2 = params.noise_w;

    let (numerator, est) = match csi {
        CsiMode::Hardening => (au2 * s.gp * n * n, au2 * s.gp * n),
        CsiMode::Perfect => (au2 * s.gp * (n * n + n), 0.0),
    };
    let terms = vec![
        (Term::EstError, est),
        (Term::IntraCell, au2 * s.intra * n),
        (Term::InterCell, au2 * s.inter * n),
        (Term::Noise, au2 * s2 * n),
        (Term::FdSelfInterference, au2 * ad * ad * psi * mu2 * s.k_dl * n * n),
        (
            Term::SiTimesDacNoise,
            au2 * psi * ad * (1.0 - ad) * mu2 * s.k_dl * n * n,
        ),
        (
            Term::AdcNoise,
            n * au * (1.0 - au) * (2.0 * s.gp + s.intra + s.inter + ad * psi * mu2 * s.k_dl * n + s2),
        ),
    ];
    Ok(SqinrBreakdown::new(Link::Uplink, user, numerator, terms))
}

struct DownlinkSums {
    g0: f64,
    p: f64,
    /// sum of other same-cell downlink powers
    intra_p: f64,
    /// sum over l != 0 of G_{l,k} * P_l
    inter: f64,
    /// total power of cell 0
    p0: f64,
    iui_same: f64,
    iui_other: f64,
}

fn downlink_sums(scn: &LargeScaleScenario, params: &SystemParams, user: usize) -> Result<DownlinkSums> {
    scn.validate()?;
    let d = scn
        .downlink
        .get(user)
        .ok_or(Error::UserOutOfRange { link: "downlink", user })?;
    if d.cell != 0 {
        return Err(Error::NotServedByCenter { link: "downlink", user });
    }
    let mut cell_power = vec![0.0; scn.num_cells];
    for v in &scn.downlink {
        cell_power[v.cell] += v.power_w;
    }
    let inter = (1..scn.num_cells).map(|l| d.gains[l] * cell_power[l]).sum();
    let (mut iui_same, mut iui_other) = (0.0, 0.0);
    for (m, u) in scn.uplink.iter().enumerate() {
        let v = scn.iui[user][m] * u.power_w * params.sigma_iui2;
        if u.cell == 0 {
            iui_same += v;
        } else {
            iui_other += v;
        }
    }
    Ok(DownlinkSums {
        g0: d.gains[0],
        p: d.power_w,
        intra_p: cell_power[0] - d.power_w,
        inter,
        p0: cell_power[0],
        iui_same,
        iui_other,
    })
}

pub fn downlink_breakdown(
    scn: &LargeScaleScenario,
    params: &SystemParams,
    user: usize,
    csi: CsiMode,
) -> Result<SqinrBreakdown> {
    params.validate()?;
    let s = downlink_sums(scn, params, user)?;
    let n = params.antennas as f64;
    let ad = params.alpha_dl();
    let ad2 = ad * ad;

    let (numerator, est) = match csi {
        CsiMode::Hardening => (ad2 * s.g0 * s.p * n, ad2 * s.g0 * s.p),
        CsiMode::Perfect => (ad2 * s.g0 * s.p * (n + 1.0), 0.0),
    };
    // DAC noise of every cell reaches the user through its own channel; only
    // in the serving cell is that channel also one of the precoder columns.
    let aqnm = ad * (1.0 - ad) * (s.g0 * (s.p0 + s.p) + s.inter);
    let terms = vec![
        (Term::EstError, est),
        (Term::IntraCell, ad2 * s.g0 * s.intra_p),
        (Term::InterCell, ad2 * s.inter),
        (Term::IuiSameCell, s.iui_same),
        (Term::IuiOtherCells, s.iui_other),
        (Term::Aqnm, aqnm),
        (Term::Noise, params.noise_w),
    ];
    Ok(SqinrBreakdown::new(Link::Downlink, user, numerator, terms))
}

/// Uplink SQINR of `scn.uplink[user]` under channel hardening.
pub fn uplink_sqinr(scn: &LargeScaleScenario, params: &SystemParams, user: usize) -> Result<SqinrBreakdown> {
    uplink_breakdown(scn, params, user, CsiMode::Hardening)
}

/// Downlink SQINR of `scn.downlink[user]` under channel hardening.
pub fn downlink_sqinr(scn: &LargeScaleScenario, params: &SystemParams, user: usize) -> Result<SqinrBreakdown> {
    downlink_breakdown(scn, params, user, CsiMode::Hardening)
}

pub fn perfect_csi_uplink_sqinr(
    scn: &LargeScaleScenario,
    params: &SystemParams,
    user: usize,
) -> Result<SqinrBreakdown> {
    uplink_breakdown(scn, params, user, CsiMode::Perfect)
}

pub fn perfect_csi_downlink_sqinr(
    scn: &LargeScaleScenario,
    params: &SystemParams,
    user: usize,
) -> Result<SqinrBreakdown> {
    downlink_breakdown(scn, params, user, CsiMode::Perfect)
}

/// Breakdowns for every user of the base station of interest.
pub fn center_breakdowns(
    scn: &LargeScaleScenario,
    params: &SystemParams,
    link: Link,
    csi: CsiMode,
) -> Result<Vec<SqinrBreakdown>> {
    match link {
        Link::Uplink => scn
            .uplink_in(0)
            .map(|k| uplink_breakdown(scn, params, k, csi))
            .collect(),
        Link::Downlink => scn
            .downlink_in(0)
            .map(|k| downlink_breakdown(scn, params, k, csi))
            .collect(),
    }
}
