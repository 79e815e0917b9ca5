//! Sphere maps sampled on a latitude-longitude grid, their energies under the
//! round (Fubini-Study) metric of total area 4π, and the numerical experiments
//! built on them: decay of energy on shrinking discs, energy and image
//! separation of reparametrization orbits, and rotation invariance.

use std::collections::{BTreeMap, VecDeque};
use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::mobius::{moment_height, random_su2, Mobius, SpherePoint, C64};
use crate::moduli::SpecialPointConfig;
use crate::tolerances::{CONSTANT_MAP, NONCONSTANT_ENERGY};
use crate::tree::Vertex;

/// Smallest supported resolution.
pub const MIN_RESOLUTION: usize = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnergyError {
    #[error("resolution {0} must be even and at least 16")]
    InvalidResolution(usize),
    #[error("non-finite value at node {0}")]
    NonFiniteValue(usize),
    #[error("value dimension changes at node {0}")]
    InconsistentDimension(usize),
    #[error("maps live on different grids or targets")]
    Incompatible,
    #[error("map is constant (energy {0:e})")]
    ConstantMap(f64),
    #[error("map is not constant (spread {0:e})")]
    NotConstant(f64),
    #[error("invalid experiment parameter: {0}")]
    InvalidConfig(&'static str),
}

/// Latitude-longitude grid with `N` longitudes and `N/2` cell-centered rings.
///
/// Ring `j` sits at colatitude `θ_j = (j + ½)π/(N/2)`, node `(j, k)` at
/// `φ_k = 2πk/N`, and the point `z = cot(θ/2) e^{iφ}`, so the north pole
/// is `∞` and the south pole is `0`. Node weights are the exact areas of
/// the grid cells and sum to `4π`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SphereGrid {
    n: usize,
}

impl SphereGrid {
    pub fn new(n: usize) -> Result<Self, EnergyError> {
        if n < MIN_RESOLUTION || !n.is_multiple_of(2) {
            return Err(EnergyError::InvalidResolution(n));
        }
        Ok(SphereGrid { n })
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn rings(&self) -> usize {
        self.n / 2
    }

    pub fn node_count(&self) -> usize {
        self.n * self.rings()
    }

    /// Grid spacing in both θ and φ.
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    pub fn theta(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.spacing()
    }

    pub fn phi(&self, k: usize) -> f64 {
        k as f64 * self.spacing()
    }

    pub fn index(&self, j: usize, k: usize) -> usize {
        j * self.n + k
    }

    pub fn ring_of(&self, node: usize) -> usize {
        node / self.n
    }

    /// Area of a cell on ring `j`.
    pub fn ring_weight(&self, j: usize) -> f64 {
        let h = self.spacing();
        ((j as f64 * h).cos() - ((j + 1) as f64 * h).cos()) * h
    }

    pub fn total_weight(&self) -> f64 {
        (0..self.rings()).map(|j| self.ring_weight(j) * self.n as f64).sum()
    }

    pub fn point(&self, j: usize, k: usize) -> SpherePoint {
        let (t, p) = (self.theta(j) / 2.0, self.phi(k));
        SpherePoint::new(C64::from_polar(t.cos(), p), C64::from(t.sin()))
    }

    pub fn points(&self) -> Vec<SpherePoint> {
        (0..self.rings()).flat_map(|j| (0..self.n).map(move |k| (j, k))).map(|(j, k)| self.point(j, k)).collect()
    }
}

/// Colatitude and longitude of a sphere point.
fn angles(p: SpherePoint) -> (f64, f64) {
    let [x, y, z] = p.to_unit_vector();
    let theta = (x.hypot(y)).atan2(z);
    let phi = y.atan2(x).rem_euclid(2.0 * PI);
    (theta, phi)
}

/// A map from the sphere to R^m sampled at the grid nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscretizedSphereMap {
    grid: SphereGrid,
    dim: usize,
    values: Vec<f64>,
}

/// Integration region for [`energy`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Whole,
    /// Coordinate disc `|z| <= R`, of area `4πR²/(1 + R²)`.
    Disc { radius: f64 },
    /// Complement of the coordinate disc `|z| <= R`.
    Complement { radius: f64 },
    /// Geodesic ball of radius `rho` about `center`.
    DiscAround { center: SpherePoint, rho: f64 },
}

impl Region {
    fn contains(&self, p: SpherePoint) -> bool {
        match *self {
            Region::Whole => true,
            Region::Disc { radius } => in_disc(p, radius),
            Region::Complement { radius } => !in_disc(p, radius),
            Region::DiscAround { center, rho } => {
                let (a, b) = (p.to_unit_vector(), center.to_unit_vector());
                let dot = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).clamp(-1.0, 1.0);
                dot.acos() <= rho
            }
        }
    }
}

fn in_disc(p: SpherePoint, radius: f64) -> bool {
    p.z.norm() <= radius * p.w.norm()
}

/// Samples `f` at every node.
pub fn sample_map(f: impl Fn(SpherePoint) -> Vec<f64> + Sync, n: usize) -> Result<DiscretizedSphereMap, EnergyError> {
    let grid = SphereGrid::new(n)?;
    let rows: Vec<Vec<f64>> = grid.points().into_par_iter().map(&f).collect();
    let dim = rows[0].len();
    let mut values = Vec::with_capacity(dim * rows.len());
    for (i, row) in rows.into_iter().enumerate() {
        if row.len() != dim || dim == 0 {
            return Err(EnergyError::InconsistentDimension(i));
        }
        if row.iter().any(|x| !x.is_finite()) {
            return Err(EnergyError::NonFiniteValue(i));
        }
        values.extend(row);
    }
    Ok(DiscretizedSphereMap { grid, dim, values })
}

/// The inclusion of the sphere as the unit sphere in R³.
pub fn inclusion(p: SpherePoint) -> Vec<f64> {
    p.to_unit_vector().to_vec()
}

impl DiscretizedSphereMap {
    pub fn grid(&self) -> &SphereGrid {
        &self.grid
    }

    pub fn resolution(&self) -> usize {
        self.grid.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, node: usize) -> &[f64] {
        &self.values[node * self.dim..(node + 1) * self.dim]
    }

    fn at(&self, j: isize, k: isize) -> &[f64] {
        // Rings past a pole continue on the far side of it.
        let (m, n) = (self.grid.rings() as isize, self.grid.n as isize);
        let (j, k) = if j < 0 {
            (-1 - j, k + n / 2)
        } else if j >= m {
            (2 * m - 1 - j, k + n / 2)
        } else {
            (j, k)
        };
        self.value(self.grid.index(j as usize, k.rem_euclid(n) as usize))
    }

    /// Weighted sum of node values with node-dependent coefficients, used
    /// to pin sampled maps against golden values.
    pub fn checksum(&self) -> f64 {
        self.values.iter().enumerate().map(|(i, v)| v * ((i % 97) as f64 + 1.0)).sum()
    }

    /// Energy density `½|df|²` at every node, by fourth-order central
    /// differences with `|df|² = |∂_θ f|² + |∂_φ f|² / sin²θ`.
    pub fn energy_density(&self) -> Vec<f64> {
        let g = &self.grid;
        let h12 = 12.0 * g.spacing();
        (0..g.node_count())
            .into_par_iter()
            .map(|node| {
                let (j, k) = ((node / g.n) as isize, (node % g.n) as isize);
                let s = g.theta(j as usize).sin();
                let theta = [self.at(j + 2, k), self.at(j + 1, k), self.at(j - 1, k), self.at(j - 2, k)];
                let phi = [self.at(j, k + 2), self.at(j, k + 1), self.at(j, k - 1), self.at(j, k - 2)];
                let diff = |f: &[&[f64]; 4], d: usize| (8.0 * (f[1][d] - f[2][d]) - (f[0][d] - f[3][d])) / h12;
                let mut sum = 0.0;
                for d in 0..self.dim {
                    let (dt, dp) = (diff(&theta, d), diff(&phi, d) / s);
                    sum += dt * dt + dp * dp;
                }
                0.5 * sum
            })
            .collect()
    }

    /// Value at an arbitrary point by bilinear interpolation in `(θ, φ)`.
    pub fn interpolate(&self, p: SpherePoint) -> Vec<f64> {
        let (theta, phi) = angles(p);
        let h = self.grid.spacing();
        let s = theta / h - 0.5;
        let j0 = s.floor();
        let t = s - j0;
        let u = phi / h;
        let k0 = u.floor();
        let r = u - k0;
        let (j0, k0) = (j0 as isize, k0 as isize);
        let (a, b, c, d) = (self.at(j0, k0), self.at(j0, k0 + 1), self.at(j0 + 1, k0), self.at(j0 + 1, k0 + 1));
        (0..self.dim)
            .map(|i| (1.0 - t) * ((1.0 - r) * a[i] + r * b[i]) + t * ((1.0 - r) * c[i] + r * d[i]))
            .collect()
    }

    /// The same map resampled on a grid of resolution `n` by interpolation.
    pub fn resample(&self, n: usize) -> Result<DiscretizedSphereMap, EnergyError> {
        sample_map(|p| self.interpolate(p), n)
    }

    /// Largest spread of the node values from the first node value.
    pub fn spread(&self) -> f64 {
        let first = self.value(0);
        (0..self.grid.node_count()).map(|i| dist(self.value(i), first)).fold(0.0, f64::max)
    }

    pub fn is_constant(&self) -> bool {
        self.spread() <= CONSTANT_MAP
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `E = ½ ∫ |df|²` over `region`.
pub fn energy(f: &DiscretizedSphereMap, region: Region) -> f64 {
    let g = &f.grid;
    let points = g.points();
    f.energy_density()
        .iter()
        .enumerate()
        .filter(|(i, _)| region.contains(points[*i]))
        .map(|(i, e)| e * g.ring_weight(g.ring_of(i)))
        .sum()
}

/// `f ∘ g`, interpolating `f` at the image of every node.
pub fn reparametrize(f: &DiscretizedSphereMap, g: &Mobius) -> DiscretizedSphereMap {
    let values = f.grid.points().into_par_iter().flat_map_iter(|p| f.interpolate(g.apply(p))).collect();
    DiscretizedSphereMap { grid: f.grid.clone(), dim: f.dim, values }
}

/// Area of `g(B(R))`: the boundary circle is pushed forward, the plane of
/// its image recovered, and the cap on the side of `g(0)` measured.
pub fn area_image_disc(g: &Mobius, radius: f64) -> f64 {
    const SAMPLES: usize = 64;
    let boundary: Vec<[f64; 3]> = (0..SAMPLES)
        .map(|i| {
            let z = C64::from_polar(radius, 2.0 * PI * i as f64 / SAMPLES as f64);
            g.apply(SpherePoint::finite(z)).to_unit_vector()
        })
        .collect();
    // Normal of the image circle's plane from the polygon's vector area.
    let mut normal = [0.0; 3];
    for i in 0..SAMPLES {
        let (a, b) = (boundary[i], boundary[(i + 1) % SAMPLES]);
        normal[0] += a[1] * b[2] - a[2] * b[1];
        normal[1] += a[2] * b[0] - a[0] * b[2];
        normal[2] += a[0] * b[1] - a[1] * b[0];
    }
    let len = (normal[0].powi(2) + normal[1].powi(2) + normal[2].powi(2)).sqrt();
    let normal = normal.map(|x| x / len);
    let dot = |a: [f64; 3]| a[0] * normal[0] + a[1] * normal[1] + a[2] * normal[2];
    let offset = boundary.iter().map(|&b| dot(b)).sum::<f64>() / SAMPLES as f64;
    let center = g.apply(SpherePoint::finite(C64::new(0.0, 0.0))).to_unit_vector();
    if dot(center) >= offset {
        2.0 * PI * (1.0 - offset)
    } else {
        2.0 * PI * (1.0 + offset)
    }
}

/// Closed-form area of `D(a)(B(R)) = B(aR)`.
pub fn dilated_disc_area(a: f64, radius: f64) -> f64 {
    let r2 = (a * radius).powi(2);
    4.0 * PI * r2 / (1.0 + r2)
}

/// Parameters of the energy-decay experiment on `g_n = u · D(a_n) · v`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropernessExperimentConfig {
    pub radius: f64,
    pub a_values: Vec<f64>,
    pub u: Mobius,
    pub v: Mobius,
    /// Neighborhood radii of the two limit maps; recorded, not used numerically.
    pub epsilon1: f64,
    pub epsilon2: f64,
    /// Concentration point and radius of the disc carrying the energy lower bound.
    pub x0: SpherePoint,
    pub rho: f64,
    /// Lower bound on the mean energy density over the concentration disc.
    pub gamma: f64,
    /// `δ₂/N₂`; computed as the energy over the concentration disc when absent.
    pub threshold: Option<f64>,
    pub resolution: usize,
}

impl PropernessExperimentConfig {
    /// `R = 1`, `a_n = 2^{-n}` for `n = 1..=steps`, identity frames, `x0 = 1`, `ρ = 0.3`.
    pub fn standard(steps: usize, resolution: usize) -> Self {
        PropernessExperimentConfig {
            radius: 1.0,
            a_values: (1..=steps).map(|n| 0.5f64.powi(n as i32)).collect(),
            u: Mobius::identity(),
            v: Mobius::identity(),
            epsilon1: 0.1,
            epsilon2: 0.1,
            x0: SpherePoint::finite(C64::new(1.0, 0.0)),
            rho: 0.3,
            gamma: 0.5,
            threshold: None,
            resolution,
        }
    }

    fn validate(&self) -> Result<(), EnergyError> {
        if self.radius.is_nan() || self.radius <= 0.0 {
            return Err(EnergyError::InvalidConfig("radius must be positive"));
        }
        if !(self.rho > 0.0 && self.gamma > 0.0) {
            return Err(EnergyError::InvalidConfig("rho and gamma must be positive"));
        }
        if self.a_values.is_empty() || self.a_values[0] > 1.0 || self.a_values.iter().any(|&a| a <= 0.0) {
            return Err(EnergyError::InvalidConfig("a_n must lie in (0, 1]"));
        }
        if self.a_values.windows(2).any(|w| w[1] >= w[0]) {
            return Err(EnergyError::InvalidConfig("a_n must be strictly decreasing"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub a_values: Vec<f64>,
    /// `E_n = E((h ∘ g_n)|_{B(R)})`.
    pub energies: Vec<f64>,
    /// `δ₂/N₂`.
    pub threshold: f64,
    /// Mean energy density of `h` over the concentration disc.
    pub density: f64,
    /// First index from which the energies stay below the threshold and never increase.
    pub asymptotic_start: Option<usize>,
    /// Fitted `p` in `E_n ≈ C a_n^p` over the asymptotic tail.
    pub exponent: Option<f64>,
    pub constant: Option<f64>,
    pub verdict: Verdict,
}

impl ExperimentReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,a,energy\n");
        for (i, (a, e)) in self.a_values.iter().zip(&self.energies).enumerate() {
            s.push_str(&format!("{},{:.17e},{:.17e}\n", i + 1, a, e));
        }
        s
    }
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Energy of `h ∘ g_n` on `B(R)` along `g_n = u · D(a_n) · v`, with the
/// decay exponent fitted over the tail where the energies have dropped below
/// `δ₂/N₂` and decrease monotonically.
pub fn properness_experiment(
    h: &DiscretizedSphereMap,
    cfg: &PropernessExperimentConfig,
) -> Result<ExperimentReport, EnergyError> {
    cfg.validate()?;
    if h.resolution() != cfg.resolution {
        return Err(EnergyError::Incompatible);
    }
    let total = energy(h, Region::Whole);
    if total <= NONCONSTANT_ENERGY {
        return Err(EnergyError::ConstantMap(total));
    }
    let ball = Region::DiscAround { center: cfg.x0, rho: cfg.rho };
    let ball_energy = energy(h, ball);
    let ball_area = 2.0 * PI * (1.0 - cfg.rho.cos());
    let density = ball_energy / ball_area;
    let threshold = cfg.threshold.unwrap_or(ball_energy);

    let energies: Vec<f64> = cfg
        .a_values
        .par_iter()
        .map(|&a| {
            let g = cfg.u * Mobius::dilation(a) * cfg.v;
            energy(&reparametrize(h, &g), Region::Disc { radius: cfg.radius })
        })
        .collect();

    let n = energies.len();
    let mut start = None;
    for i in (0..n).rev() {
        if energies[i] < threshold && (i + 1 == n || energies[i + 1] <= energies[i]) {
            start = Some(i);
        } else {
            break;
        }
    }
    let (mut exponent, mut constant) = (None, None);
    if let Some(s) = start {
        if n - s >= 3 && energies[s..].iter().all(|&e| e > 0.0) {
            let x: Vec<f64> = cfg.a_values[s..].iter().map(|a| a.ln()).collect();
            let y: Vec<f64> = energies[s..].iter().map(|e| e.ln()).collect();
            let (p, c) = linear_fit(&x, &y);
            exponent = Some(p);
            constant = Some(c.exp());
        }
    }
    let pass = density >= cfg.gamma && exponent.is_some_and(|p| (1.8..=2.2).contains(&p));
    Ok(ExperimentReport {
        a_values: cfg.a_values.clone(),
        energies,
        threshold,
        density,
        asymptotic_start: start,
        exponent,
        constant,
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
    })
}

/// Random frames `(u, v)` in SU(2) for which `g_n(B(R))` shrinks: `v` must
/// keep the preimage of `∞` at least `2R` from the origin, so that `v(B(R))`
/// stays in a bounded part of the plane.
pub fn random_admissible_frame<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> (Mobius, Mobius) {
    let u = random_su2(rng);
    loop {
        let v = random_su2(rng);
        let pole = v.inverse().apply(SpherePoint::infinity());
        if pole.affine().is_none_or(|z| z.norm() >= 2.0 * radius) {
            return (u, v);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergySeparation {
    pub energies: [f64; 2],
    /// Combined quadrature error bound of the two energies.
    pub error_bound: f64,
    /// Separating level between the two energies, when they differ by more than the bound.
    pub threshold: Option<f64>,
}

/// Quadrature error estimate: the larger of the change under halving the
/// resolution (scaled as for second-order convergence, which overstates
/// the error of the fourth-order stencil) and 1% of the energy.
fn energy_error(f: &DiscretizedSphereMap, e: f64) -> Result<f64, EnergyError> {
    let coarse = f.resample(f.resolution() / 2)?;
    let richardson = (e - energy(&coarse, Region::Whole)).abs() / 3.0;
    Ok(richardson.max(0.01 * e))
}

pub fn energy_separation(f1: &DiscretizedSphereMap, f2: &DiscretizedSphereMap) -> Result<EnergySeparation, EnergyError> {
    let (e1, e2) = (energy(f1, Region::Whole), energy(f2, Region::Whole));
    let bound = if f1.resolution() / 2 >= MIN_RESOLUTION {
        energy_error(f1, e1)? + energy_error(f2, e2)?
    } else {
        0.01 * (e1 + e2)
    };
    let threshold = ((e1 - e2).abs() > bound).then_some(0.5 * (e1 + e2));
    Ok(EnergySeparation { energies: [e1, e2], error_bound: bound, threshold })
}

/// Largest pointwise distance between two maps on the same grid.
pub fn c0_distance(f1: &DiscretizedSphereMap, f2: &DiscretizedSphereMap) -> Result<f64, EnergyError> {
    if f1.grid != f2.grid || f1.dim != f2.dim {
        return Err(EnergyError::Incompatible);
    }
    Ok((0..f1.grid.node_count()).map(|i| dist(f1.value(i), f2.value(i))).fold(0.0, f64::max))
}

/// Whether two constant maps lie in disjoint reparametrization-invariant
/// neighborhoods: their values must differ by more than `2(ε′₁ + ε′₂)`.
pub fn constant_image_separation(
    f1: &DiscretizedSphereMap,
    f2: &DiscretizedSphereMap,
    eps1: f64,
    eps2: f64,
) -> Result<bool, EnergyError> {
    for f in [f1, f2] {
        if !f.is_constant() {
            return Err(EnergyError::NotConstant(f.spread()));
        }
    }
    if f1.dim != f2.dim {
        return Err(EnergyError::Incompatible);
    }
    Ok(dist(f1.value(0), f2.value(0)) > 2.0 * (eps1 + eps2))
}

/// `f = profile ∘ μ`, invariant under rotation about the poles.
pub fn standard_s1_map(profile: impl Fn(f64) -> Vec<f64> + Sync, n: usize) -> Result<DiscretizedSphereMap, EnergyError> {
    sample_map(|p| profile(moment_height(p)), n)
}

/// The standard map `t ↦ (t, 0, 0)` plus `eps · cos(arg z)` on the first
/// coordinate, which breaks the rotation symmetry.
pub fn moment_perturbed_s1_map(eps: f64, n: usize) -> Result<DiscretizedSphereMap, EnergyError> {
    sample_map(
        |p| {
            let phase = p.z * p.w.conj();
            let c = if phase.norm() > 0.0 { phase.re / phase.norm() } else { 1.0 };
            vec![moment_height(p) + eps * c, 0.0, 0.0]
        },
        n,
    )
}

/// Points of the rotation grid used by [`s1_invariance_defect`].
pub const S1_GRID: usize = 64;

/// Largest sup-distance between `f` and `f ∘ R_θ` over `θ = 2πk/64`.
pub fn s1_invariance_defect(f: &DiscretizedSphereMap) -> f64 {
    (0..S1_GRID)
        .map(|k| {
            let r = Mobius::rotation_z(2.0 * PI * k as f64 / S1_GRID as f64);
            c0_distance(f, &reparametrize(f, &r)).expect("same grid")
        })
        .fold(0.0, f64::max)
}

/// Nodal map whose components are translated copies of the inclusion,
/// glued at the double points of a special-point configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalInclusionMap {
    config: SpecialPointConfig,
    offsets: BTreeMap<Vertex, [f64; 3]>,
}

impl NodalInclusionMap {
    /// Offsets chosen breadth-first from the smallest vertex so that
    /// `f_v(d_{vu}) = f_u(d_{uv})` on every edge.
    pub fn new(config: &SpecialPointConfig) -> Self {
        let t = config.labeled_tree().tree();
        let root = t.vertices()[0];
        let mut offsets = BTreeMap::from([(root, [0.0; 3])]);
        let mut queue = VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &u in t.neighbors(v) {
                if offsets.contains_key(&u) {
                    continue;
                }
                let here = config.double_point(v, u).expect("edge has a double point").to_unit_vector();
                let there = config.double_point(u, v).expect("edge has a double point").to_unit_vector();
                let o = offsets[&v];
                offsets.insert(u, [0, 1, 2].map(|i| here[i] + o[i] - there[i]));
                queue.push_back(u);
            }
        }
        NodalInclusionMap { config: config.clone(), offsets }
    }

    pub fn component_value(&self, v: Vertex, p: SpherePoint) -> Vec<f64> {
        let (x, o) = (p.to_unit_vector(), self.offsets[&v]);
        (0..3).map(|i| x[i] + o[i]).collect()
    }

    /// `f_v(d_{vu})` for every directed edge `(v, u)`.
    pub fn double_point_values(&self) -> BTreeMap<(Vertex, Vertex), Vec<f64>> {
        let t = self.config.labeled_tree().tree();
        let mut out = BTreeMap::new();
        for &(a, b) in t.edges() {
            for (v, u) in [(a, b), (b, a)] {
                out.insert((v, u), self.component_value(v, self.config.double_point(v, u).unwrap()));
            }
        }
        out
    }

    pub fn sample_component(&self, v: Vertex, n: usize) -> Result<DiscretizedSphereMap, EnergyError> {
        sample_map(|p| self.component_value(v, p), n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mobius::random_mobius;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_weights_sum_to_sphere_area() {
        for n in [16, 64, 128, 256] {
            let g = SphereGrid::new(n).unwrap();
            assert!((g.total_weight() - 4.0 * PI).abs() < 1e-12);
        }
        assert_eq!(SphereGrid::new(15), Err(EnergyError::InvalidResolution(15)));
        assert_eq!(SphereGrid::new(8), Err(EnergyError::InvalidResolution(8)));
    }

    #[test]
    fn grid_points_match_angles() {
        let g = SphereGrid::new(32).unwrap();
        for (j, k) in [(0, 0), (3, 7), (15, 31), (8, 16)] {
            let (t, p) = angles(g.point(j, k));
            assert!((t - g.theta(j)).abs() < 1e-12);
            assert!((p - g.phi(k)).abs() < 1e-12 || (p - g.phi(k)).abs() > 2.0 * PI - 1e-12);
        }
    }

    #[test]
    fn constant_map_has_no_energy() {
        let f = sample_map(|_| vec![1.5, -2.0], 64).unwrap();
        assert!((0..f.grid().node_count()).all(|i| f.value(i) == [1.5, -2.0]));
        assert!(energy(&f, Region::Whole) < 1e-10);
        assert!(f.is_constant());
    }

    #[test]
    fn rejects_bad_samples() {
        assert!(matches!(
            sample_map(|p| vec![if p.z.re > 0.5 { f64::INFINITY } else { 0.0 }], 16),
            Err(EnergyError::NonFiniteValue(_))
        ));
        assert!(matches!(
            sample_map(|p| vec![0.0; if p.z.re > 0.5 { 2 } else { 1 }], 16),
            Err(EnergyError::InconsistentDimension(_))
        ));
    }

    #[test]
    fn inclusion_energy_is_area() {
        let f = sample_map(inclusion, 256).unwrap();
        let e = energy(&f, Region::Whole);
        assert!((e - 4.0 * PI).abs() / (4.0 * PI) < 0.005, "{e}");
        let d = energy(&f, Region::Disc { radius: 1.0 });
        let c = energy(&f, Region::Complement { radius: 1.0 });
        assert!((d + c - e).abs() / e < 0.005);
        assert!((d - dilated_disc_area(1.0, 1.0)).abs() / d < 0.005);
    }

    #[test]
    fn rotation_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let f = sample_map(inclusion, 128).unwrap();
        let e = energy(&f, Region::Whole);
        for _ in 0..3 {
            let u = random_su2(&mut rng);
            let r = energy(&reparametrize(&f, &u), Region::Whole);
            assert!((r - e).abs() / e < 0.01, "{r} vs {e}");
        }
    }

    #[test]
    fn identity_reparametrization_keeps_values() {
        let f = sample_map(inclusion, 64).unwrap();
        let g = reparametrize(&f, &Mobius::identity());
        assert!(c0_distance(&f, &g).unwrap() < 1e-12);
    }

    #[test]
    fn area_examples() {
        assert!((area_image_disc(&Mobius::identity(), 1e6) - 4.0 * PI).abs() / (4.0 * PI) < 1e-3);
        let a = area_image_disc(&Mobius::dilation(0.5), 1.0);
        assert!((a - 0.8 * PI).abs() < 1e-9, "{a}");
        for &r in &[0.1, 1.0, 10.0] {
            for &s in &[1e-3, 0.01, 0.3, 1.0] {
                let got = area_image_disc(&Mobius::dilation(s), r);
                assert!((got - dilated_disc_area(s, r)).abs() / dilated_disc_area(s, r) < 0.005);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let u = random_su2(&mut rng);
        assert!((area_image_disc(&(u * Mobius::dilation(0.2)), 1.0) - dilated_disc_area(0.2, 1.0)).abs() < 1e-9);
    }

    #[test]
    fn area_scaling_law() {
        let a: Vec<f64> = (5..12).map(|n| 0.5f64.powi(n)).collect();
        let x: Vec<f64> = a.iter().map(|s| s.ln()).collect();
        let y: Vec<f64> = a.iter().map(|&s| area_image_disc(&Mobius::dilation(s), 1.0).ln()).collect();
        let (slope, intercept) = linear_fit(&x, &y);
        assert!((slope - 2.0).abs() < 0.05);
        assert!((intercept.exp() - 4.0 * PI).abs() / (4.0 * PI) < 0.01);
    }

    #[test]
    fn experiment_defaults_pass() {
        let h = sample_map(inclusion, 128).unwrap();
        let r = properness_experiment(&h, &PropernessExperimentConfig::standard(8, 128)).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
        assert!((r.threshold - 2.0 * PI * (1.0 - 0.3f64.cos())).abs() < 0.01);
    }

    #[test]
    fn experiment_rejects_constant_and_bad_configs() {
        let h = sample_map(|_| vec![0.0; 3], 32).unwrap();
        assert!(matches!(
            properness_experiment(&h, &PropernessExperimentConfig::standard(8, 32)),
            Err(EnergyError::ConstantMap(_))
        ));
        let h = sample_map(inclusion, 32).unwrap();
        let mut cfg = PropernessExperimentConfig::standard(8, 32);
        cfg.a_values.reverse();
        assert!(matches!(properness_experiment(&h, &cfg), Err(EnergyError::InvalidConfig(_))));
    }

    #[test]
    fn inadmissible_frame_does_not_decay() {
        // v swaps 0 and ∞, so v(B(1)) contains ∞ and g_n(B(1)) fills most of the sphere.
        let h = sample_map(inclusion, 64).unwrap();
        let mut cfg = PropernessExperimentConfig::standard(6, 64);
        cfg.v = Mobius::su2_rotation([1.0, 0.0, 0.0], PI);
        let r = properness_experiment(&h, &cfg).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(r.energies.last().unwrap() > &(2.0 * PI));
    }

    #[test]
    fn separation_examples() {
        let c = sample_map(|_| vec![0.0; 3], 64).unwrap();
        let f = sample_map(inclusion, 64).unwrap();
        let s = energy_separation(&c, &f).unwrap();
        assert!((s.threshold.unwrap() - 2.0 * PI).abs() < 0.1);

        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let g = loop {
            let g = random_mobius(&mut rng);
            if crate::mobius::kak_decompose(&g).a >= 0.3 {
                break g;
            }
        };
        let f128 = sample_map(inclusion, 128).unwrap();
        assert_eq!(energy_separation(&f128, &reparametrize(&f128, &g)).unwrap().threshold, None);

        let c2 = sample_map(|_| vec![1.0, 0.0, 0.0], 64).unwrap();
        assert_eq!(energy_separation(&c, &c2).unwrap().threshold, None);
    }

    #[test]
    fn constant_image_examples() {
        let c = sample_map(|_| vec![0.0, 0.0], 32).unwrap();
        assert_eq!(c0_distance(&c, &c).unwrap(), 0.0);
        assert!(!constant_image_separation(&c, &c, 0.1, 0.1).unwrap());
        let d = sample_map(|_| vec![1.0, 0.0], 32).unwrap();
        assert!(constant_image_separation(&c, &d, 0.1, 0.1).unwrap());
        let moved = reparametrize(&d, &Mobius::dilation(0.3));
        assert_eq!(c0_distance(&d, &moved).unwrap(), 0.0);
        let f = sample_map(inclusion, 32).unwrap();
        let f2 = sample_map(|p| inclusion(p)[..2].to_vec(), 32).unwrap();
        assert!(matches!(constant_image_separation(&c, &f2, 0.1, 0.1), Err(EnergyError::NotConstant(_))));
        assert_eq!(c0_distance(&c, &f), Err(EnergyError::Incompatible));
    }

    #[test]
    fn s1_defects() {
        let f = standard_s1_map(|t| vec![t, 0.0, 0.0], 64).unwrap();
        assert!(s1_invariance_defect(&f) <= 1e-12);
        let rotated = reparametrize(&f, &Mobius::rotation_z(0.37));
        assert!(s1_invariance_defect(&rotated) <= 1e-12);
        let p = sample_map(
            |p| {
                let phase = p.z * p.w.conj();
                let c = if phase.norm() > 0.0 { phase.re / phase.norm() } else { 1.0 };
                vec![moment_height(p) + 0.1 * c, 0.0, 0.0]
            },
            64,
        )
        .unwrap();
        assert!(s1_invariance_defect(&p) >= 0.05);
    }
}
