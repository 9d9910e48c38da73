//! System parameters, large-scale scenarios and channel samplers.

use std::io::Write;

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::aqnm;
use crate::error::{invalid, Error, Result};
use crate::netgeom::{self, DropConfig, NetworkLayout, Region, UserDrop};
use crate::rng::{self, complex_normal, Domain};
use crate::units;

/// Converter resolution for one link direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Resolution {
    /// Infinite resolution, alpha = 1.
    Full,
    /// `b`-bit converter, alpha = 1 - rho(b).
    Bits(u32),
    /// AQNM gain given directly.
    Gain(f64),
}

impl Resolution {
    pub fn alpha(&self) -> f64 {
        match *self {
            Resolution::Full => 1.0,
            Resolution::Bits(b) => 1.0 - aqnm::rho_from_bits(b).unwrap_or(1.0),
            Resolution::Gain(a) => a,
        }
    }

    fn validate(&self, name: &'static str) -> Result<()> {
        match *self {
            Resolution::Full => Ok(()),
            Resolution::Bits(b) => aqnm::rho_from_bits(b).map(|_| ()),
            Resolution::Gain(a) if a > 0.0 && a <= 1.0 => Ok(()),
            Resolution::Gain(a) => Err(invalid(name, format!("AQNM gain must be in (0, 1], got {a}"))),
        }
    }
}

/// Scalar physical parameters of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// Pathloss exponent eta, > 2.
    pub pathloss_exponent: f64,
    /// Linear pathloss intercept at 1 m.
    pub l_ref: f64,
    /// Lognormal shadowing standard deviation in dB.
    pub shadowing_db: f64,
    pub antennas: usize,
    pub bandwidth_hz: f64,
    /// Receiver noise power sigma^2 in watts.
    pub noise_w: f64,
    /// Per-user uplink transmit power.
    pub p_ul_w: f64,
    /// Downlink power per cell, split uniformly across its downlink users.
    pub p_dl_w: f64,
    /// Loopback self-interference power.
    pub p_si_w: f64,
    /// Per-entry variance of the SI channel matrix (linear).
    pub mu_si2: f64,
    /// Variance of the user-to-user small-scale fading.
    pub sigma_iui2: f64,
    pub res_ul: Resolution,
    pub res_dl: Resolution,
    pub k_ul: usize,
    pub k_dl: usize,
    /// Relative SI channel estimation error: the residual SI channel gets an
    /// extra independent CN(0, eps * mu_si2) per entry. Zero means perfect
    /// SI knowledge.
    pub si_estimation_error: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::reference_defaults()
    }
}

impl SystemParams {
    /// 20 MHz, eta = 3.5, 5 dB shadowing, 40 W downlink, 250 mW uplink,
    /// 40 W SI, 10 dB SI channel power, -174 dBm/Hz, 100 antennas,
    /// full resolution, four uplink and four downlink users per cell.
    pub fn reference_defaults() -> Self {
        let bandwidth_hz = 20e6;
        SystemParams {
            pathloss_exponent: 3.5,
            l_ref: 1.0,
            shadowing_db: 5.0,
            antennas: 100,
            bandwidth_hz,
            noise_w: units::noise_power_w(-174.0, bandwidth_hz),
            p_ul_w: 0.25,
            p_dl_w: 40.0,
            p_si_w: 40.0,
            mu_si2: units::db_to_linear(10.0),
            sigma_iui2: 1.0,
            res_ul: Resolution::Full,
            res_dl: Resolution::Full,
            k_ul: 4,
            k_dl: 4,
            si_estimation_error: 0.0,
        }
    }

    pub fn alpha_ul(&self) -> f64 {
        self.res_ul.alpha()
    }

    pub fn alpha_dl(&self) -> f64 {
        self.res_dl.alpha()
    }

    /// Per-entry power of the SI channel seen by the receiver, including
    /// estimation error.
    pub fn effective_mu_si2(&self) -> f64 {
        self.mu_si2 * (1.0 + self.si_estimation_error)
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = |name: &'static str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(invalid(name, format!("must be finite and >= 0, got {v}")))
            }
        };
        if !(self.pathloss_exponent > 2.0 && self.pathloss_exponent.is_finite()) {
            return Err(invalid(
                "pathloss_exponent",
                format!("must be > 2, got {}", self.pathloss_exponent),
            ));
        }
        if !(self.l_ref > 0.0 && self.l_ref.is_finite()) {
            return Err(invalid("l_ref", "must be > 0"));
        }
        if self.antennas == 0 {
            return Err(invalid("antennas", "must be >= 1"));
        }
        if !(self.bandwidth_hz > 0.0 && self.bandwidth_hz.is_finite()) {
            return Err(invalid("bandwidth_hz", "must be > 0"));
        }
        nonneg("shadowing_db", self.shadowing_db)?;
        nonneg("noise_w", self.noise_w)?;
        nonneg("p_ul_w", self.p_ul_w)?;
        nonneg("p_dl_w", self.p_dl_w)?;
        nonneg("p_si_w", self.p_si_w)?;
        nonneg("mu_si2", self.mu_si2)?;
        nonneg("sigma_iui2", self.sigma_iui2)?;
        nonneg("si_estimation_error", self.si_estimation_error)?;
        self.res_ul.validate("res_ul")?;
        self.res_dl.validate("res_dl")
    }
}

/// Large-scale gain `L_ref * chi / r^eta`.
pub fn large_scale_gain(r: f64, chi: f64, params: &SystemParams) -> Result<f64> {
    if r <= 0.0 {
        return Err(Error::SingularDistance);
    }
    Ok(params.l_ref * chi / r.powf(params.pathloss_exponent))
}

/// Lognormal shadowing `10^(X/10)` with `X ~ N(0, sigma_db^2)`.
pub fn sample_shadowing<R: Rng + ?Sized>(sigma_db: f64, rng: &mut R) -> f64 {
    if sigma_db == 0.0 {
        return 1.0;
    }
    let x = Normal::new(0.0, sigma_db).expect("finite sigma").sample(rng);
    units::db_to_linear(x)
}

/// Normalized Rayleigh vector, i.i.d. CN(0, 1) entries.
pub fn sample_small_scale<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Array1<Complex64> {
    Array1::from_shape_simple_fn(n, || complex_normal(rng, 1.0))
}

/// `n x n` SI channel with i.i.d. CN(0, mu_si2) entries.
pub fn sample_si_channel<R: Rng + ?Sized>(n: usize, mu_si2: f64, rng: &mut R) -> Array2<Complex64> {
    if mu_si2 == 0.0 {
        return Array2::zeros((n, n));
    }
    Array2::from_shape_simple_fn((n, n), || complex_normal(rng, mu_si2))
}

/// User-to-user scalar channel, CN(0, sigma_iui2).
pub fn sample_iui_channel<R: Rng + ?Sized>(sigma_iui2: f64, rng: &mut R) -> Complex64 {
    complex_normal(rng, sigma_iui2)
}

/// Forward-link channel for a reverse-link vector under calibrated TDD.
pub fn reciprocal(h: &Array1<Complex64>) -> Array1<Complex64> {
    h.mapv(|z| z.conj())
}

/// One user's view of the network: serving cell, transmit power and its
/// large-scale gain to every base station (`gains[l]`).
#[derive(Debug, Clone, PartialEq)]
pub struct UserLink {
    pub cell: usize,
    pub power_w: f64,
    pub gains: Vec<f64>,
}

/// Large-scale gains conditioned on one network draw.
///
/// `iui[n][m]` is the gain between downlink user `n` and uplink user `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct LargeScaleScenario {
    pub num_cells: usize,
    pub uplink: Vec<UserLink>,
    pub downlink: Vec<UserLink>,
    pub iui: Vec<Vec<f64>>,
}

impl LargeScaleScenario {
    pub fn validate(&self) -> Result<()> {
        if self.num_cells == 0 {
            return Err(Error::EmptyScenario("no cells"));
        }
        for (link, users) in [("uplink", &self.uplink), ("downlink", &self.downlink)] {
            for (i, u) in users.iter().enumerate() {
                if u.cell >= self.num_cells || u.gains.len() != self.num_cells {
                    return Err(Error::InconsistentScenario(format!(
                        "{link} user {i}: cell {} / {} gains for {} cells",
                        u.cell,
                        u.gains.len(),
                        self.num_cells
                    )));
                }
                if u.gains.iter().any(|&g| !(g > 0.0 && g.is_finite())) {
                    return Err(Error::InconsistentScenario(format!(
                        "{link} user {i} has a non-positive gain"
                    )));
                }
                if !(u.power_w >= 0.0 && u.power_w.is_finite()) {
                    return Err(Error::InconsistentScenario(format!(
                        "{link} user {i} has an invalid power"
                    )));
                }
            }
        }
        if self.iui.len() != self.downlink.len() || self.iui.iter().any(|row| row.len() != self.uplink.len()) {
            return Err(Error::InconsistentScenario("iui gain matrix shape".into()));
        }
        Ok(())
    }

    pub fn uplink_in(&self, cell: usize) -> impl Iterator<Item = usize> + '_ {
        self.uplink
            .iter()
            .enumerate()
            .filter(move |(_, u)| u.cell == cell)
            .map(|(i, _)| i)
    }

    pub fn downlink_in(&self, cell: usize) -> impl Iterator<Item = usize> + '_ {
        self.downlink
            .iter()
            .enumerate()
            .filter(move |(_, u)| u.cell == cell)
            .map(|(i, _)| i)
    }

    /// `K_l^d`.
    pub fn dl_count(&self, cell: usize) -> usize {
        self.downlink_in(cell).count()
    }

    /// Total downlink power transmitted by `cell`.
    pub fn dl_power(&self, cell: usize) -> f64 {
        self.downlink_in(cell).map(|i| self.downlink[i].power_w).sum()
    }

    /// Copy with uplink and downlink powers multiplied by the given factors.
    pub fn scaled_powers(&self, ul_factor: f64, dl_factor: f64) -> Self {
        let mut s = self.clone();
        s.uplink.iter_mut().for_each(|u| u.power_w *= ul_factor);
        s.downlink.iter_mut().for_each(|u| u.power_w *= dl_factor);
        s
    }

    /// Normalized-unit scenario with random gains, for tests and benchmarks.
    ///
    /// Serving gains are drawn from [0.5, 1], cross gains from [0.05, 0.3] and
    /// user-to-user gains from [0.01, 0.2]. Every user transmits unit power
    /// (so each cell radiates `k_dl` in total).
    pub fn synthetic(cells: usize, k_ul: usize, k_dl: usize, seed: u64) -> Self {
        let mut rng = rng::stream(seed, Domain::Generic, 0xfeed);
        let mut users = |k: usize| -> Vec<UserLink> {
            (0..cells)
                .flat_map(|c| (0..k).map(move |_| c))
                .map(|c| UserLink {
                    cell: c,
                    power_w: 1.0,
                    gains: (0..cells)
                        .map(|l| {
                            if l == c {
                                rng.random_range(0.5..1.0)
                            } else {
                                rng.random_range(0.05..0.3)
                            }
                        })
                        .collect(),
                })
                .collect()
        };
        let uplink = users(k_ul);
        let downlink = users(k_dl);
        let iui = (0..downlink.len())
            .map(|_| (0..uplink.len()).map(|_| rng.random_range(0.01..0.2)).collect())
            .collect();
        LargeScaleScenario {
            num_cells: cells,
            uplink,
            downlink,
            iui,
        }
    }

    /// Debug snapshot: `link,user,cell,power_w,bs,gain`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "link,user,cell,power_w,bs,gain")?;
        for (link, users) in [("ul", &self.uplink), ("dl", &self.downlink)] {
            for (i, u) in users.iter().enumerate() {
                for (bs, g) in u.gains.iter().enumerate() {
                    writeln!(w, "{link},{i},{},{},{bs},{g}", u.cell, u.power_w)?;
                }
            }
        }
        Ok(())
    }
}

/// How base stations are laid out for each network draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LayoutSpec {
    Hex { tiers: usize, cell_radius: f64 },
    Ppp { intensity: f64, region: Region },
}

/// One full large-scale draw: layout, dropped users, shadowing and gains.
#[derive(Debug, Clone)]
pub struct NetworkDraw {
    pub layout: NetworkLayout,
    pub users: UserDrop,
    /// `[downlink][uplink]` shadowing of the user-to-user links.
    pub iui_shadowing: Vec<Vec<f64>>,
    pub scenario: LargeScaleScenario,
}

impl NetworkDraw {
    /// Draw number `index` under `seed`.
    pub fn sample(spec: &LayoutSpec, drop: &DropConfig, params: &SystemParams, seed: u64, index: u64) -> Result<Self> {
        params.validate()?;
        let mut rng = rng::stream(seed, Domain::Scenario, index);
        let layout = match *spec {
            LayoutSpec::Hex { tiers, cell_radius } => netgeom::build_hex_lattice(tiers, cell_radius)?,
            LayoutSpec::Ppp { intensity, region } => netgeom::build_ppp_layout_with(intensity, region, &mut rng)?,
        };
        let users = netgeom::drop_users(&layout, drop, params, &mut rng)?;
        let n_bs = layout.num_bs();

        let link = |pos: &netgeom::Point2, cell: usize, chi: &[f64], power: f64| -> Result<UserLink> {
            let gains = layout
                .bs_positions
                .iter()
                .zip(chi)
                .map(|(bs, &c)| large_scale_gain(bs.distance(pos), c, params))
                .collect::<Result<Vec<_>>>()?;
            Ok(UserLink {
                cell,
                power_w: power,
                gains,
            })
        };

        let uplink = users
            .uplink
            .iter()
            .zip(&users.ul_assoc.bs)
            .zip(&users.ul_shadowing)
            .map(|((p, &c), chi)| link(p, c, chi, params.p_ul_w))
            .collect::<Result<Vec<_>>>()?;
        let downlink = users
            .downlink
            .iter()
            .zip(&users.dl_assoc.bs)
            .zip(&users.dl_shadowing)
            .map(|((p, &c), chi)| {
                // uniform allocation of the cell power over its downlink users
                link(p, c, chi, params.p_dl_w / users.dl_counts[c] as f64)
            })
            .collect::<Result<Vec<_>>>()?;

        let mut iui_shadowing = Vec::with_capacity(users.downlink.len());
        let mut iui = Vec::with_capacity(users.downlink.len());
        for d in &users.downlink {
            let chi: Vec<f64> = (0..users.uplink.len())
                .map(|_| sample_shadowing(params.shadowing_db, &mut rng))
                .collect();
            let row = users
                .uplink
                .iter()
                .zip(&chi)
                .map(|(u, &c)| large_scale_gain(d.distance(u).max(drop.d_min), c, params))
                .collect::<Result<Vec<_>>>()?;
            iui_shadowing.push(chi);
            iui.push(row);
        }

        let scenario = LargeScaleScenario {
            num_cells: n_bs,
            uplink,
            downlink,
            iui,
        };
        scenario.validate()?;
        Ok(NetworkDraw {
            layout,
            users,
            iui_shadowing,
            scenario,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgeom::Point2;
    use crate::rng::stream;

    #[test]
    fn gain_examples() {
        let p = SystemParams::reference_defaults();
        assert_eq!(large_scale_gain(1.0, 1.0, &p).unwrap(), p.l_ref);
        let g = large_scale_gain(2.0, 1.0, &p).unwrap();
        assert!((g - 0.088_388_347_648_318_44).abs() < 1e-15);
        assert_eq!(
            large_scale_gain(7.0, 2.0, &p).unwrap(),
            2.0 * large_scale_gain(7.0, 1.0, &p).unwrap()
        );
        assert!(matches!(large_scale_gain(0.0, 1.0, &p), Err(Error::SingularDistance)));
    }

    #[test]
    fn zero_shadowing_is_unity() {
        let mut rng = stream(1, Domain::Generic, 0);
        assert!((0..100).all(|_| sample_shadowing(0.0, &mut rng) == 1.0));
    }

    #[test]
    fn zero_si_power_gives_zero_matrix() {
        let mut rng = stream(1, Domain::Generic, 0);
        let h = sample_si_channel(4, 0.0, &mut rng);
        assert!(h.iter().all(|z| z.norm_sqr() == 0.0));
    }

    #[test]
    fn reciprocity_is_conjugation() {
        let mut rng = stream(2, Domain::Generic, 0);
        let h = sample_small_scale(8, &mut rng);
        let f = reciprocal(&h);
        for (a, b) in h.iter().zip(&f) {
            assert_eq!(a.conj(), *b);
        }
        // forward link through h^T_fwd equals h^H x
        let x = sample_small_scale(8, &mut rng);
        let fwd: Complex64 = f.iter().zip(&x).map(|(a, b)| a * b).sum();
        let herm: Complex64 = h.iter().zip(&x).map(|(a, b)| a.conj() * b).sum();
        assert!((fwd - herm).norm() < 1e-12);
    }

    #[test]
    fn params_validation() {
        let mut p = SystemParams::reference_defaults();
        assert!(p.validate().is_ok());
        p.pathloss_exponent = 2.0;
        assert!(p.validate().is_err());
        let mut p = SystemParams::reference_defaults();
        p.res_ul = Resolution::Bits(0);
        assert!(p.validate().is_err());
        let mut p = SystemParams::reference_defaults();
        p.res_dl = Resolution::Gain(1.2);
        assert!(p.validate().is_err());
        let mut p = SystemParams::reference_defaults();
        p.p_si_w = -1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn default_noise_floor() {
        let p = SystemParams::reference_defaults();
        assert!((p.noise_w - 7.962_143e-14).abs() < 1e-18);
        assert!((p.mu_si2 - 10.0).abs() < 1e-12);
    }

    #[test]
    fn draw_gains_follow_pathloss_law() {
        let p = SystemParams::reference_defaults();
        let drop = DropConfig {
            k_ul: 2,
            k_dl: 3,
            d_min: 10.0,
        };
        let spec = LayoutSpec::Hex {
            tiers: 1,
            cell_radius: 500.0,
        };
        let d = NetworkDraw::sample(&spec, &drop, &p, 5, 0).unwrap();
        let s = &d.scenario;
        assert_eq!(s.uplink.len(), 14);
        assert_eq!(s.downlink.len(), 21);
        for (i, u) in s.uplink.iter().enumerate() {
            let pos = d.users.uplink[i];
            for (l, bs) in d.layout.bs_positions.iter().enumerate() {
                let r = bs.distance(&pos);
                let chi = d.users.ul_shadowing[i][l];
                let expect = p.l_ref * chi / r.powf(p.pathloss_exponent);
                assert_eq!(u.gains[l], expect);
            }
            // serving cell has the largest gain
            let best = u.gains.iter().cloned().fold(f64::MIN, f64::max);
            assert_eq!(u.gains[u.cell], best);
        }
        for c in 0..s.num_cells {
            assert!((s.dl_power(c) - p.p_dl_w).abs() < 1e-12);
        }
        let pos_d = d.users.downlink[0];
        let pos_u = d.users.uplink[0];
        let expect = p.l_ref * d.iui_shadowing[0][0] / pos_d.distance(&pos_u).max(10.0).powf(p.pathloss_exponent);
        assert_eq!(s.iui[0][0], expect);
        let _ = Point2::ORIGIN;
    }

    #[test]
    fn draws_are_deterministic() {
        let p = SystemParams::reference_defaults();
        let drop = DropConfig {
            k_ul: 4,
            k_dl: 4,
            d_min: 10.0,
        };
        let spec = LayoutSpec::Ppp {
            intensity: netgeom::hex_matched_intensity(500.0),
            region: Region::Disk { radius: 2232.0 },
        };
        let a = NetworkDraw::sample(&spec, &drop, &p, 9, 3).unwrap();
        let b = NetworkDraw::sample(&spec, &drop, &p, 9, 3).unwrap();
        assert_eq!(a.scenario, b.scenario);
        assert_eq!(a.layout, b.layout);
    }

    #[test]
    fn scenario_validation_catches_shape_errors() {
        let s = LargeScaleScenario {
            num_cells: 2,
            uplink: vec![UserLink {
                cell: 0,
                power_w: 1.0,
                gains: vec![1.0],
            }],
            downlink: vec![],
            iui: vec![],
        };
        assert!(s.validate().is_err());
        let s = LargeScaleScenario {
            num_cells: 0,
            uplink: vec![],
            downlink: vec![],
            iui: vec![],
        };
        assert!(matches!(s.validate(), Err(Error::EmptyScenario(_))));
    }
}
