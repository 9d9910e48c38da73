//! Spectral-efficiency limits: full resolution, unbounded transmit power, and
//! transmit power scaled down as `E / N` while the array grows.
//!
//! Each function returns bits/s/Hz for one user of the base station of
//! interest and is the limit of the matching closed form in the parent
//! module. Sums written `sum_l sum_k` include the user's own term.

use super::{downlink_sums, uplink_sums};
use crate::channel::{LargeScaleScenario, SystemParams};
use crate::error::Result;
use crate::units::spectral_efficiency;

/// Uplink SE at full resolution (alpha_u = alpha_d = 1):
/// `G P N / (sum G P + P_SI mu^2 K^d N + sigma^2)`.
pub fn lemma1_uplink(scn: &LargeScaleScenario, params: &SystemParams, user: usize) -> Result<f64> {
    let s = uplink_sums(scn, user)?;
    let n = params.antennas as f64;
    let den = s.gp + s.intra + s.inter + params.p_si_w * params.effective_mu_si2() * s.k_dl * n + params.noise_w;
    Ok(spectral_efficiency(s.gp * n / den))
}

/// Downlink SE at full resolution:
/// `G_k P_k N / (sum_l G_{l,k} P_l + sum T P^u sigma_iui^2 + sigma^2)`.
pub fn lemma1_downlink(scn: &LargeScaleScenario, params: &SystemParams, user: usize) -> Result<f64> {
    let s = downlink_sums(scn, params, user)?;
    let n = params.antennas as f64;
    Ok(spectral_efficiency(s.g0 * s.p * n / lemma1_downlink_den(&s, params)))
}

/// Same as [`lemma1_downlink`] without the array gain in the numerator.
/// Only useful as a diagnostic: it sits a factor `N` below the closed form.
pub fn lemma1_downlink_no_array_gain(scn: &LargeScaleScenario, params: &SystemParams, user: usize) -> Result<f64> {
    let s = downlink_sums(scn, params, user)?;
    Ok(spectral_efficiency(s.g0 * s.p / lemma1_downlink_den(&s, params)))
}

fn lemma1_downlink_den(s: &super::DownlinkSums, params: &SystemParams) -> f64 {
    s.g0 * s.p0 + s.inter + s.iui_same + s.iui_other + params.noise_w
}

/// Uplink SE as `P_SI = P^d = P^u -> inf` with every user at the same power:
/// `alpha_u G N / (sum G + (1 - alpha_u) G + alpha_d K^d N mu^2)`.
pub fn lemma2_uplink(scn: &LargeScaleScenario, params: &SystemParams, user: usize) -> Result<f64> {
    uplink_sums(scn, user)?;
    let n = params.antennas as f64;
    let (au, ad) = (params.alpha_ul(), params.alpha_dl());
    let g = scn.uplink[user].gains[0];
    let sum_g: f64 = scn.uplink.iter().map(|u| u.gains[0]).sum();
    let k_dl = scn.dl_count(0) as f64;
    let den = sum_g + (1.0 - au) * g + ad * k_dl * n * params.effective_mu_si2();
    Ok(spectral_efficiency(au * g * n / den))
}

/// Downlink SE as all powers grow together:
/// `alpha_d^2 G N / (alpha_d^2 sum_l K_l G_l + sum T sigma_iui^2
///  + alpha_d (1 - alpha_d) [G (K_0 + 1) + sum_{l != 0} G_l K_l])`.
pub fn lemma2_downlink(scn: &LargeScaleScenario, params: &SystemParams, user: usize) -> Result<f64> {
    downlink_sums(scn, params, user)?;
    let n = params.antennas as f64;
    let ad = params.alpha_dl();
    let d = &scn.downlink[user];
    let mut k = vec![0.0; scn.num_cells];
    for v in &scn.downlink {
        k[v.cell] += 1.0;
    }
    let weighted: f64 = d.gains.iter().zip(&k).map(|(g, kl)| g * kl).sum();
    let iui: f64 = scn.iui[user].iter().sum::<f64>() * params.sigma_iui2;
    let aqnm = ad * (1.0 - ad) * (weighted + d.gains[0]);
    let den = ad * ad * weighted + iui + aqnm;
    Ok(spectral_efficiency(ad * ad * d.gains[0] * n / den))
}

/// Uplink SE when user and SI powers are `E_k / N` and `E_SI / N`, `N -> inf`:
/// `alpha_u G E_k / (alpha_d mu^2 E_SI K^d + sigma^2)`.
pub fn lemma3_uplink(
    scn: &LargeScaleScenario,
    params: &SystemParams,
    user: usize,
    e_user: f64,
    e_si: f64,
) -> Result<f64> {
    let s = uplink_sums(scn, user)?;
    let g = scn.uplink[user].gains[0];
    let den = params.alpha_dl() * params.effective_mu_si2() * e_si * s.k_dl + params.noise_w;
    Ok(spectral_efficiency(params.alpha_ul() * g * e_user / den))
}

/// Downlink SE under power scaling: `alpha_d^2 G E_k / sigma^2`.
pub fn lemma3_downlink(scn: &LargeScaleScenario, params: &SystemParams, user: usize, e_user: f64) -> Result<f64> {
    let s = downlink_sums(scn, params, user)?;
    let ad = params.alpha_dl();
    Ok(spectral_efficiency(ad * ad * s.g0 * e_user / params.noise_w))
}
