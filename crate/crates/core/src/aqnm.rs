//! Additive quantization noise model.
//!
//! A `b`-bit converter is linearised as `y_q = alpha * y + q` where
//! `alpha = 1 - rho(b)` and `q` is Gaussian, independent of `y`, with a
//! diagonal covariance `alpha (1 - alpha) diag(E[y y^H])`.
//!
//! `rho` uses the Lloyd-Max distortion table for b <= 5. Beyond that the
//! asymptotic `(pi sqrt(3) / 2) 2^(-2b)` law is used. Note the two do not
//! agree at small b: the asymptotic law gives 0.680 at b = 1 against the
//! tabulated 0.3634.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::rng::complex_normal;

const RHO_TABLE: [f64; 5] = [0.3634, 0.1175, 0.03454, 0.009497, 0.002499];

/// Inverse SQNR of a `bits`-bit quantizer.
pub fn rho_from_bits(bits: u32) -> Result<f64> {
    match bits {
        0 => Err(invalid("bits", "must be >= 1")),
        1..=5 => Ok(RHO_TABLE[bits as usize - 1]),
        // 2^(-2b) underflows past b = 537; saturate at alpha = 1
        b => Ok(std::f64::consts::PI * 3f64.sqrt() / 2.0 * 2f64.powi(-2 * b.min(600) as i32)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerModel {
    pub bits: u32,
    pub rho: f64,
    pub alpha: f64,
}

impl QuantizerModel {
    pub fn from_bits(bits: u32) -> Result<Self> {
        let rho = rho_from_bits(bits)?;
        Ok(QuantizerModel {
            bits,
            rho,
            alpha: 1.0 - rho,
        })
    }

    /// `alpha (1 - alpha)`, the scale applied to the input covariance diagonal.
    pub fn noise_scale(&self) -> f64 {
        self.alpha * (1.0 - self.alpha)
    }
}

/// `alpha * y + q` with `q ~ CN(0, diag(r_q))`.
pub fn quantize<R: Rng + ?Sized>(
    y: &Array1<Complex64>,
    alpha: f64,
    r_q: &[f64],
    rng: &mut R,
) -> Result<Array1<Complex64>> {
    if r_q.len() != y.len() {
        return Err(invalid("r_q", format!("length {} for a {}-vector", r_q.len(), y.len())));
    }
    check_psd(r_q)?;
    Ok(Array1::from_iter(
        y.iter().zip(r_q).map(|(&yi, &v)| alpha * yi + complex_normal(rng, v)),
    ))
}

fn check_psd(diag: &[f64]) -> Result<()> {
    match diag.iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
        Some(index) => Err(Error::NotPositiveSemidefinite {
            index,
            value: diag[index],
        }),
        None => Ok(()),
    }
}

/// DAC noise covariance diagonal `alpha_d (1 - alpha_d) diag(F F^H)` for
/// precoder columns `precoders`.
pub fn downlink_noise_cov(precoders: &[Array1<Complex64>], alpha_d: f64) -> Vec<f64> {
    transmit_noise_cov(precoders, None, alpha_d)
}

/// Like [`downlink_noise_cov`] with per-column power weights, i.e. the DAC
/// noise of `sum_j sqrt(w_j) f_j s_j`.
pub fn transmit_noise_cov(precoders: &[Array1<Complex64>], weights: Option<&[f64]>, alpha_d: f64) -> Vec<f64> {
    let n = precoders.first().map_or(0, |f| f.len());
    let scale = alpha_d * (1.0 - alpha_d);
    let mut d = vec![0.0; n];
    for (j, f) in precoders.iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[j]);
        for (di, z) in d.iter_mut().zip(f) {
            *di += w * z.norm_sqr();
        }
    }
    d.iter_mut().for_each(|v| *v *= scale);
    d
}

/// Inputs to the ADC noise covariance at the base station of interest.
pub struct UplinkCovInputs<'a> {
    /// `(G * P, h)` for every uplink user heard by the receiver.
    pub received: &'a [(f64, &'a Array1<Complex64>)],
    pub si_channel: &'a Array2<Complex64>,
    /// Columns of the downlink precoder `F`.
    pub precoders: &'a [Array1<Complex64>],
    pub p_si: f64,
    pub noise_w: f64,
    pub alpha_u: f64,
    pub alpha_d: f64,
}

/// ADC noise covariance diagonal
/// `alpha_u (1 - alpha_u) diag(sum G P h h^H + Q + sigma^2 I)`
/// with `Q = P_SI H_SI (alpha_d^2 F F^H + R_qd) H_SI^H`.
pub fn uplink_noise_cov(inp: &UplinkCovInputs<'_>) -> Vec<f64> {
    let n = inp.si_channel.nrows();
    let r_qd = downlink_noise_cov(inp.precoders, inp.alpha_d);
    let mut c = vec![inp.noise_w; n];

    for (gp, h) in inp.received {
        for (ci, z) in c.iter_mut().zip(h.iter()) {
            *ci += gp * z.norm_sqr();
        }
    }
    if inp.p_si > 0.0 {
        let a2 = inp.alpha_d * inp.alpha_d;
        for f in inp.precoders {
            let hf = inp.si_channel.dot(f);
            for (ci, z) in c.iter_mut().zip(&hf) {
                *ci += inp.p_si * a2 * z.norm_sqr();
            }
        }
        for (ci, row) in c.iter_mut().zip(inp.si_channel.rows()) {
            let s: f64 = row.iter().zip(&r_qd).map(|(h, q)| h.norm_sqr() * q).sum();
            *ci += inp.p_si * s;
        }
    }
    let scale = inp.alpha_u * (1.0 - inp.alpha_u);
    c.iter_mut().for_each(|v| *v *= scale);
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_si_channel, sample_small_scale};
    use crate::rng::{stream, Domain};
    use ndarray::Axis;
    use proptest::prelude::*;

    #[test]
    fn rho_table_values() {
        assert_eq!(rho_from_bits(1).unwrap(), 0.3634);
        assert_eq!(rho_from_bits(5).unwrap(), 0.002499);
        let r6 = rho_from_bits(6).unwrap();
        assert!((r6 - 2.720_699_046_351_326 * 2f64.powi(-12)).abs() < 1e-15);
        assert!((r6 - 6.642e-4).abs() < 1e-7);
        assert!(rho_from_bits(0).is_err());
        let q = QuantizerModel::from_bits(3).unwrap();
        assert_eq!(q.alpha + q.rho, 1.0);
    }

    #[test]
    fn rho_strictly_decreasing() {
        for b in 1..40 {
            assert!(rho_from_bits(b + 1).unwrap() < rho_from_bits(b).unwrap(), "b = {b}");
        }
    }

    #[test]
    fn full_resolution_is_identity() {
        let mut rng = stream(1, Domain::Generic, 0);
        let y = sample_small_scale(6, &mut rng);
        let yq = quantize(&y, 1.0, &[0.0; 6], &mut rng).unwrap();
        assert_eq!(y, yq);
    }

    #[test]
    fn quantize_rejects_negative_covariance() {
        let mut rng = stream(1, Domain::Generic, 0);
        let y = sample_small_scale(3, &mut rng);
        let r = quantize(&y, 0.9, &[0.1, -0.2, 0.1], &mut rng);
        assert!(matches!(r, Err(Error::NotPositiveSemidefinite { index: 1, .. })));
        assert!(quantize(&y, 0.9, &[0.1], &mut rng).is_err());
    }

    #[test]
    fn quantization_noise_covariance_matches() {
        let mut rng = stream(2, Domain::Generic, 0);
        let r_q = [0.5, 1.0, 2.0, 0.1];
        let alpha = 0.7;
        let n = 100_000;
        let mut acc = [0.0; 4];
        let mut mean = [Complex64::new(0.0, 0.0); 4];
        let y = Array1::from_vec(vec![Complex64::new(1.0, -2.0); 4]);
        for _ in 0..n {
            let yq = quantize(&y, alpha, &r_q, &mut rng).unwrap();
            for i in 0..4 {
                let q = yq[i] - alpha * y[i];
                acc[i] += q.norm_sqr();
                mean[i] += yq[i];
            }
        }
        for i in 0..4 {
            let est = acc[i] / n as f64;
            assert!((est - r_q[i]).abs() / r_q[i] < 0.02, "entry {i}: {est}");
            let m = mean[i] / n as f64;
            assert!((m - alpha * y[i]).norm() < 0.02);
        }
    }

    fn precoders(n: usize, k: usize, seed: u64) -> Vec<Array1<Complex64>> {
        let mut rng = stream(seed, Domain::Generic, 1);
        (0..k).map(|_| sample_small_scale(n, &mut rng)).collect()
    }

    #[test]
    fn downlink_cov_special_cases() {
        let f = precoders(4, 3, 1);
        assert!(downlink_noise_cov(&f, 1.0).iter().all(|&v| v == 0.0));
        let eye: Vec<_> = (0..2)
            .map(|j| Array1::from_shape_fn(2, |i| Complex64::new((i == j) as u8 as f64, 0.0)))
            .collect();
        let d = downlink_noise_cov(&eye, 0.8);
        for v in d {
            assert!((v - 0.8 * 0.2).abs() < 1e-15);
        }
    }

    // Independent evaluation through explicit matrices.
    fn f_matrix(f: &[Array1<Complex64>]) -> Array2<Complex64> {
        let n = f[0].len();
        Array2::from_shape_fn((n, f.len()), |(i, j)| f[j][i])
    }

    fn herm(m: &Array2<Complex64>) -> Array2<Complex64> {
        m.t().mapv(|z| z.conj())
    }

    #[test]
    fn downlink_cov_matches_matrix_form() {
        let f = precoders(4, 3, 7);
        let fm = f_matrix(&f);
        let ff = fm.dot(&herm(&fm));
        let d = downlink_noise_cov(&f, 0.6);
        for i in 0..4 {
            let expect = 0.6 * 0.4 * ff[[i, i]].re;
            assert!((d[i] - expect).abs() < 1e-12 * expect.max(1.0));
        }
    }

    #[test]
    fn uplink_cov_matches_matrix_form() {
        let n = 4;
        let mut rng = stream(3, Domain::Generic, 0);
        let hs: Vec<_> = (0..3).map(|_| sample_small_scale(n, &mut rng)).collect();
        let gp = [0.7, 0.2, 1.3];
        let si = sample_si_channel(n, 2.0, &mut rng);
        let f = precoders(n, 2, 9);
        let (au, ad, p_si, s2) = (0.8, 0.65, 0.4, 0.3);

        let received: Vec<_> = gp.iter().cloned().zip(hs.iter()).collect();
        let got = uplink_noise_cov(&UplinkCovInputs {
            received: &received,
            si_channel: &si,
            precoders: &f,
            p_si,
            noise_w: s2,
            alpha_u: au,
            alpha_d: ad,
        });

        let mut cov = Array2::<Complex64>::eye(n) * Complex64::new(s2, 0.0);
        for (g, h) in gp.iter().zip(&hs) {
            let col = h.clone().insert_axis(Axis(1));
            cov = cov + col.dot(&herm(&col)) * Complex64::new(*g, 0.0);
        }
        let fm = f_matrix(&f);
        let ff = fm.dot(&herm(&fm));
        let mut rqd = Array2::<Complex64>::zeros((n, n));
        for i in 0..n {
            rqd[[i, i]] = ff[[i, i]] * ad * (1.0 - ad);
        }
        let inner = ff * Complex64::new(ad * ad, 0.0) + rqd;
        let q = si.dot(&inner).dot(&herm(&si)) * Complex64::new(p_si, 0.0);
        let total = cov + q;
        for i in 0..n {
            let expect = au * (1.0 - au) * total[[i, i]].re;
            assert!((got[i] - expect).abs() < 1e-10 * expect, "{i}: {} vs {expect}", got[i]);
        }
    }

    #[test]
    fn uplink_cov_special_cases() {
        let n = 3;
        let si = Array2::zeros((n, n));
        let f = precoders(n, 2, 4);
        let mut rng = stream(5, Domain::Generic, 0);
        let h = sample_small_scale(n, &mut rng);
        let received = [(0.0, &h)];
        let inp = |au| UplinkCovInputs {
            received: &received,
            si_channel: &si,
            precoders: &f,
            p_si: 3.0,
            noise_w: 0.5,
            alpha_u: au,
            alpha_d: 0.7,
        };
        assert!(uplink_noise_cov(&inp(1.0)).iter().all(|&v| v == 0.0));
        for v in uplink_noise_cov(&inp(0.6)) {
            assert!((v - 0.6 * 0.4 * 0.5).abs() < 1e-15);
        }
    }

    proptest! {
        #[test]
        fn covariances_nonnegative_and_decreasing_in_bits(seed in 0u64..500, b in 1u32..12) {
            let f = precoders(4, 2, seed);
            let lo = QuantizerModel::from_bits(b).unwrap();
            let hi = QuantizerModel::from_bits(b + 1).unwrap();
            let d_lo = downlink_noise_cov(&f, lo.alpha);
            let d_hi = downlink_noise_cov(&f, hi.alpha);
            for (a, c) in d_lo.iter().zip(&d_hi) {
                prop_assert!(*a >= 0.0 && *c >= 0.0);
                prop_assert!(c <= a);
            }
        }
    }
}
