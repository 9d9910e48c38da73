//! Base-station layouts, user drops and strongest-gain association.
//!
//! Two layout families are supported: a hexagonal lattice with a configurable
//! number of tiers around a center site, and a homogeneous Poisson point
//! process over a bounded region. Users are dropped uniformly over the region
//! and attached to the base station with the highest large-scale gain
//! (pathloss times shadowing), so PPP cells are shadowed Voronoi cells.
//!
//! Base station 0 is the cell of interest. For hexagonal layouts it sits at
//! the origin; for PPP layouts the point nearest the origin is moved to index 0.
//! Outer cells only act as interferers, and there is no wrap-around.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::channel::{large_scale_gain, sample_shadowing, SystemParams};
use crate::error::{invalid, Error, Result};
use crate::rng::{self, Domain};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// Simulation area, centered on the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    Disk { radius: f64 },
    Rect { width: f64, height: f64 },
}

impl Region {
    pub fn area(&self) -> f64 {
        match *self {
            Region::Disk { radius } => std::f64::consts::PI * radius * radius,
            Region::Rect { width, height } => width * height,
        }
    }

    pub fn contains(&self, p: &Point2) -> bool {
        match *self {
            Region::Disk { radius } => p.norm() <= radius,
            Region::Rect { width, height } => p.x.abs() <= width / 2.0 && p.y.abs() <= height / 2.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let a = self.area();
        if a.is_finite() && a > 0.0 {
            Ok(())
        } else {
            Err(Error::DegenerateRegion)
        }
    }

    /// Uniform point in the region.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point2 {
        match *self {
            Region::Disk { radius } => {
                let r = radius * rng.random::<f64>().sqrt();
                let theta = std::f64::consts::TAU * rng.random::<f64>();
                Point2::new(r * theta.cos(), r * theta.sin())
            }
            Region::Rect { width, height } => Point2::new(
                width * (rng.random::<f64>() - 0.5),
                height * (rng.random::<f64>() - 0.5),
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayoutKind {
    HexLattice,
    Ppp,
}

impl LayoutKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            LayoutKind::HexLattice => "hex",
            LayoutKind::Ppp => "ppp",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkLayout {
    pub kind: LayoutKind,
    pub bs_positions: Vec<Point2>,
    pub region: Region,
    /// Ring count around the center site (hex only).
    pub tiers: Option<usize>,
    /// Base stations per square meter (PPP only).
    pub intensity: Option<f64>,
}

impl NetworkLayout {
    pub fn num_bs(&self) -> usize {
        self.bs_positions.len()
    }

    /// `bs_id,x_m,y_m`
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "bs_id,x_m,y_m")?;
        for (i, p) in self.bs_positions.iter().enumerate() {
            writeln!(w, "{i},{},{}", p.x, p.y)?;
        }
        Ok(())
    }
}

/// Number of sites in a hexagonal lattice with `tiers` rings.
pub fn hex_site_count(tiers: usize) -> usize {
    1 + 3 * tiers * (tiers + 1)
}

/// PPP intensity giving the same site density as a hex lattice of the given
/// cell (circum)radius: one site per `3*sqrt(3)/2 * r^2`.
pub fn hex_matched_intensity(cell_radius: f64) -> f64 {
    2.0 / (3.0 * 3f64.sqrt() * cell_radius * cell_radius)
}

/// Hexagonal lattice with the center site at the origin and neighbour spacing
/// `sqrt(3) * cell_radius`. Sites are ordered ring by ring.
pub fn build_hex_lattice(tiers: usize, cell_radius: f64) -> Result<NetworkLayout> {
    if !(cell_radius.is_finite() && cell_radius > 0.0) {
        return Err(invalid("cell_radius", format!("must be > 0, got {cell_radius}")));
    }
    let spacing = 3f64.sqrt() * cell_radius;
    let to_xy = |q: i64, r: i64| {
        Point2::new(
            spacing * (q as f64 + r as f64 / 2.0),
            spacing * (3f64.sqrt() / 2.0) * r as f64,
        )
    };
    const DIRS: [(i64, i64); 6] = [(1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1)];

    let mut sites = vec![Point2::ORIGIN];
    for ring in 1..=tiers as i64 {
        let (mut q, mut r) = (DIRS[4].0 * ring, DIRS[4].1 * ring);
        for dir in DIRS {
            for _ in 0..ring {
                sites.push(to_xy(q, r));
                q += dir.0;
                r += dir.1;
            }
        }
    }
    debug_assert_eq!(sites.len(), hex_site_count(tiers));

    Ok(NetworkLayout {
        kind: LayoutKind::HexLattice,
        bs_positions: sites,
        region: Region::Disk {
            radius: tiers as f64 * spacing + cell_radius,
        },
        tiers: Some(tiers),
        intensity: None,
    })
}

/// Homogeneous PPP over `region`. The site nearest the origin becomes index 0.
pub fn build_ppp_layout(intensity: f64, region: Region, seed: u64) -> Result<NetworkLayout> {
    let mut rng = rng::stream(seed, Domain::Layout, 0);
    build_ppp_layout_with(intensity, region, &mut rng)
}

pub fn build_ppp_layout_with<R: Rng + ?Sized>(intensity: f64, region: Region, rng: &mut R) -> Result<NetworkLayout> {
    region.validate()?;
    if !(intensity.is_finite() && intensity > 0.0) {
        return Err(invalid("intensity", format!("must be > 0, got {intensity}")));
    }
    let mean = intensity * region.area();
    let count = Poisson::new(mean)
        .map_err(|e| invalid("intensity", e.to_string()))?
        .sample(rng) as usize;
    let mut sites: Vec<Point2> = (0..count).map(|_| region.sample(rng)).collect();
    if let Some(nearest) = (0..sites.len()).min_by(|&a, &b| sites[a].norm().total_cmp(&sites[b].norm())) {
        sites.swap(0, nearest);
    }
    Ok(NetworkLayout {
        kind: LayoutKind::Ppp,
        bs_positions: sites,
        region,
        tiers: None,
        intensity: Some(intensity),
    })
}

/// Per-user serving base station and the gain to it.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AssociationMap {
    pub bs: Vec<usize>,
    pub gain: Vec<f64>,
}

/// Strongest-gain association. `shadowing[u][l]` is the linear shadowing
/// between user `u` and site `l`. Ties go to the lowest site index.
pub fn associate(
    layout: &NetworkLayout,
    users: &[Point2],
    params: &SystemParams,
    shadowing: &[Vec<f64>],
) -> Result<AssociationMap> {
    if layout.bs_positions.is_empty() {
        return Err(Error::EmptyLayout);
    }
    if shadowing.len() != users.len() {
        return Err(Error::InconsistentScenario(format!(
            "{} shadowing rows for {} users",
            shadowing.len(),
            users.len()
        )));
    }
    let mut map = AssociationMap::default();
    for (u, chi_row) in users.iter().zip(shadowing) {
        let (bs, gain) = strongest(layout, u, params, chi_row)?;
        map.bs.push(bs);
        map.gain.push(gain);
    }
    Ok(map)
}

fn strongest(layout: &NetworkLayout, user: &Point2, params: &SystemParams, chi_row: &[f64]) -> Result<(usize, f64)> {
    if chi_row.len() != layout.num_bs() {
        return Err(Error::InconsistentScenario(format!(
            "shadowing row has {} entries for {} sites",
            chi_row.len(),
            layout.num_bs()
        )));
    }
    let mut best = (0, f64::NEG_INFINITY);
    for (l, (bs, &chi)) in layout.bs_positions.iter().zip(chi_row).enumerate() {
        let g = large_scale_gain(user.distance(bs), chi, params)?;
        // strict comparison keeps the lowest index on ties
        if g > best.1 {
            best = (l, g);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropConfig {
    /// Uplink users per cell.
    pub k_ul: usize,
    /// Downlink users per cell.
    pub k_dl: usize,
    /// Minimum user to base station distance in meters.
    pub d_min: f64,
}

/// Dropped users with their shadowing rows and association.
#[derive(Debug, Clone, PartialEq)]
pub struct UserDrop {
    pub uplink: Vec<Point2>,
    pub downlink: Vec<Point2>,
    pub ul_counts: Vec<usize>,
    pub dl_counts: Vec<usize>,
    /// `[user][bs]` linear shadowing, shared by association and gains.
    pub ul_shadowing: Vec<Vec<f64>>,
    pub dl_shadowing: Vec<Vec<f64>>,
    pub ul_assoc: AssociationMap,
    pub dl_assoc: AssociationMap,
}

impl UserDrop {
    /// `ue_id,link,x_m,y_m,bs_id`; uplink ids first, then downlink.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "ue_id,link,x_m,y_m,bs_id")?;
        let rows = self
            .uplink
            .iter()
            .zip(&self.ul_assoc.bs)
            .map(|(p, b)| ("ul", p, b))
            .chain(self.downlink.iter().zip(&self.dl_assoc.bs).map(|(p, b)| ("dl", p, b)));
        for (id, (link, p, bs)) in rows.enumerate() {
            writeln!(w, "{id},{link},{},{},{bs}", p.x, p.y)?;
        }
        Ok(())
    }
}

/// Drops users uniformly over the layout region until every cell serves
/// exactly `k_ul` uplink and `k_dl` downlink users.
///
/// Candidates closer than `d_min` to any site, or landing in a cell that is
/// already full, are rejected. Gives up after a bounded number of draws.
pub fn drop_users<R: Rng + ?Sized>(
    layout: &NetworkLayout,
    cfg: &DropConfig,
    params: &SystemParams,
    rng: &mut R,
) -> Result<UserDrop> {
    if layout.bs_positions.is_empty() {
        return Err(Error::EmptyLayout);
    }
    if !(cfg.d_min >= 0.0 && cfg.d_min.is_finite()) {
        return Err(invalid("d_min", format!("must be >= 0, got {}", cfg.d_min)));
    }
    let (uplink, ul_shadowing, ul_assoc, ul_counts) = fill_cells(layout, cfg.k_ul, cfg, params, rng)?;
    let (downlink, dl_shadowing, dl_assoc, dl_counts) = fill_cells(layout, cfg.k_dl, cfg, params, rng)?;
    Ok(UserDrop {
        uplink,
        downlink,
        ul_counts,
        dl_counts,
        ul_shadowing,
        dl_shadowing,
        ul_assoc,
        dl_assoc,
    })
}

type Filled = (Vec<Point2>, Vec<Vec<f64>>, AssociationMap, Vec<usize>);

fn fill_cells<R: Rng + ?Sized>(
    layout: &NetworkLayout,
    per_cell: usize,
    cfg: &DropConfig,
    params: &SystemParams,
    rng: &mut R,
) -> Result<Filled> {
    let n_bs = layout.num_bs();
    let wanted = per_cell * n_bs;
    let max_attempts = 10_000 + 1_000 * wanted;
    let mut counts = vec![0usize; n_bs];
    let mut users = Vec::with_capacity(wanted);
    let mut chi = Vec::with_capacity(wanted);
    let mut assoc = AssociationMap::default();

    let mut attempts = 0;
    while users.len() < wanted {
        if attempts == max_attempts {
            return Err(Error::PlacementFailed { wanted, attempts });
        }
        attempts += 1;
        let p = layout.region.sample(rng);
        if layout.bs_positions.iter().any(|b| b.distance(&p) < cfg.d_min) {
            continue;
        }
        let row: Vec<f64> = (0..n_bs).map(|_| sample_shadowing(params.shadowing_db, rng)).collect();
        let (bs, gain) = strongest(layout, &p, params, &row)?;
        if counts[bs] == per_cell {
            continue;
        }
        counts[bs] += 1;
        users.push(p);
        chi.push(row);
        assoc.bs.push(bs);
        assoc.gain.push(gain);
    }
    Ok((users, chi, assoc, counts))
}
