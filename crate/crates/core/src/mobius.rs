//! Numerics on PSL(2, C): normalization, KAK decomposition, the action on
//! the Riemann sphere, cross-ratios, and the finite rotation groups.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::Mul;
use std::sync::OnceLock;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tolerances::{CROSS_RATIO_DEGENERATE, PSL_GROUP_EQ, SINGULAR_DET, SU2_CHECK};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Elements beyond which saturation gives up.
pub const SATURATION_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MobiusError {
    #[error("matrix is singular (|det| = {0:e})")]
    SingularMatrix(f64),
    #[error("the first three points are not pairwise distinct")]
    DegenerateTriple,
    #[error("group closure not reached after {0} elements")]
    SaturationDiverged(usize),
    #[error("invalid group parameter {0}")]
    InvalidParameter(usize),
    #[error("sample is not closed under products and inverses")]
    NotClosed,
    #[error("group of order {0} matches no finite subgroup kind")]
    Unclassifiable(usize),
}

/// Element of PSL(2, C) stored as a determinant-one matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mobius {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
}

impl Mobius {
    /// Scales the matrix to determinant one.
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Result<Self, MobiusError> {
        let det = a * d - b * c;
        if det.norm() <= SINGULAR_DET {
            return Err(MobiusError::SingularMatrix(det.norm()));
        }
        let s = det.sqrt();
        Ok(Mobius { a: a / s, b: b / s, c: c / s, d: d / s })
    }

    pub fn identity() -> Self {
        Mobius { a: ONE, b: ZERO, c: ZERO, d: ONE }
    }

    /// `z -> a z`, as `diag(√a, 1/√a)`.
    pub fn dilation(a: f64) -> Self {
        let r = a.sqrt();
        Mobius { a: C64::from(r), b: ZERO, c: ZERO, d: C64::from(1.0 / r) }
    }

    /// `z -> e^{iθ} z`.
    pub fn rotation_z(theta: f64) -> Self {
        Mobius { a: C64::from_polar(1.0, theta / 2.0), b: ZERO, c: ZERO, d: C64::from_polar(1.0, -theta / 2.0) }
    }

    /// SU(2) lift of the rotation by `angle` about `axis` in R³, under the
    /// identification of the sphere with the unit sphere sending 0 to the south pole.
    pub fn su2_rotation(axis: [f64; 3], angle: f64) -> Self {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        let [x, y, z] = axis.map(|t| t / n);
        let (s, c) = (angle / 2.0).sin_cos();
        Mobius {
            a: C64::new(c, s * z),
            b: C64::new(s * y, s * x),
            c: C64::new(-s * y, s * x),
            d: C64::new(c, -s * z),
        }
    }

    pub fn det(&self) -> C64 {
        self.a * self.d - self.b * self.c
    }

    pub fn entries(&self) -> [C64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn inverse(&self) -> Self {
        Mobius { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Mobius { a: self.a.conj(), b: self.c.conj(), c: self.b.conj(), d: self.d.conj() }
    }

    fn max_diff(&self, other: &Mobius, sign: f64) -> f64 {
        self.entries()
            .iter()
            .zip(other.entries())
            .map(|(x, y)| (x - y * sign).norm())
            .fold(0.0, f64::max)
    }

    /// Distance in PSL: the smaller over `±` of the largest entry difference.
    pub fn psl_distance(&self, other: &Mobius) -> f64 {
        self.max_diff(other, 1.0).min(self.max_diff(other, -1.0))
    }

    pub fn psl_eq(&self, other: &Mobius, tol: f64) -> bool {
        self.psl_distance(other) <= tol
    }

    /// Largest entry of `g g* - I`.
    pub fn su2_defect(&self) -> f64 {
        (*self * self.adjoint()).max_diff(&Mobius::identity(), 1.0)
    }

    pub fn is_su2(&self) -> bool {
        self.su2_defect() <= SU2_CHECK
    }

    pub fn apply(&self, p: SpherePoint) -> SpherePoint {
        SpherePoint::new(self.a * p.z + self.b * p.w, self.c * p.z + self.d * p.w)
    }

    /// Smallest `k <= max` with `g^k = ±I`.
    pub fn order(&self, max: usize, tol: f64) -> Option<usize> {
        let id = Mobius::identity();
        let mut p = *self;
        for k in 1..=max {
            if p.psl_eq(&id, tol) {
                return Some(k);
            }
            p = p * *self;
        }
        None
    }

    /// The map sending `p1, p2, p3` to `0, 1, ∞`.
    pub fn from_triple(p1: SpherePoint, p2: SpherePoint, p3: SpherePoint) -> Result<Self, MobiusError> {
        check_distinct(&[p1, p2, p3])?;
        let k1 = bracket(p2, p3);
        let k2 = bracket(p2, p1);
        Mobius::new(k1 * p1.w, -k1 * p1.z, k2 * p3.w, -k2 * p3.z)
    }
}

impl Mul for Mobius {
    type Output = Mobius;

    fn mul(self, o: Mobius) -> Mobius {
        Mobius {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }
}

/// Point `[z : w]` of the Riemann sphere, `∞ = [1 : 0]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    pub z: C64,
    pub w: C64,
}

impl SpherePoint {
    /// Rescales to unit norm; panics on `[0 : 0]`.
    pub fn new(z: C64, w: C64) -> Self {
        let n = (z.norm_sqr() + w.norm_sqr()).sqrt();
        assert!(n > 0.0 && n.is_finite(), "invalid homogeneous pair");
        SpherePoint { z: z / n, w: w / n }
    }

    pub fn finite(z: C64) -> Self {
        SpherePoint::new(z, ONE)
    }

    pub fn infinity() -> Self {
        SpherePoint { z: ONE, w: ZERO }
    }

    pub fn is_infinity(&self) -> bool {
        self.w == ZERO
    }

    /// Affine coordinate `z / w`, or `None` at infinity.
    pub fn affine(&self) -> Option<C64> {
        (!self.is_infinity()).then(|| self.z / self.w)
    }

    pub fn chordal_distance(&self, other: &SpherePoint) -> f64 {
        let num = (self.z * other.w - self.w * other.z).norm();
        let den = (self.z.norm_sqr() + self.w.norm_sqr()).sqrt() * (other.z.norm_sqr() + other.w.norm_sqr()).sqrt();
        num / den
    }

    /// Unit vector in R³: `(2z / (1 + |z|²), (|z|² - 1) / (|z|² + 1))`, so
    /// infinity is the north pole and 0 the south pole.
    pub fn to_unit_vector(&self) -> [f64; 3] {
        let (zz, ww) = (self.z.norm_sqr(), self.w.norm_sqr());
        let s = zz + ww;
        let q = self.z * self.w.conj() * 2.0 / s;
        [q.re, q.im, (zz - ww) / s]
    }

    pub fn from_unit_vector(v: [f64; 3]) -> Self {
        // z / w = (x + iy) / (1 - t), or equivalently (1 + t) / (x - iy).
        let q = C64::new(v[0], v[1]);
        if v[2] <= 0.0 {
            SpherePoint::new(q, C64::from(1.0 - v[2]))
        } else {
            SpherePoint::new(C64::from(1.0 + v[2]), q.conj())
        }
    }
}

/// `[x, y] = z_x w_y - z_y w_x`.
fn bracket(x: SpherePoint, y: SpherePoint) -> C64 {
    x.z * y.w - y.z * x.w
}

fn check_distinct(ps: &[SpherePoint]) -> Result<(), MobiusError> {
    for i in 0..ps.len() {
        for j in 0..i {
            if ps[i].chordal_distance(&ps[j]) <= CROSS_RATIO_DEGENERATE {
                return Err(MobiusError::DegenerateTriple);
            }
        }
    }
    Ok(())
}

/// Value at `p4` of the Möbius map sending `p1, p2, p3` to `0, 1, ∞`.
pub fn cross_ratio(p1: SpherePoint, p2: SpherePoint, p3: SpherePoint, p4: SpherePoint) -> Result<SpherePoint, MobiusError> {
    check_distinct(&[p1, p2, p3])?;
    Ok(SpherePoint::new(bracket(p4, p1) * bracket(p2, p3), bracket(p4, p3) * bracket(p2, p1)))
}

/// Height `(|z|² - |w|²) / (|z|² + |w|²)`, invariant under rotation about the poles.
pub fn moment_height(p: SpherePoint) -> f64 {
    let (zz, ww) = (p.z.norm_sqr(), p.w.norm_sqr());
    (zz - ww) / (zz + ww)
}

/// `g = u · D(a) · v` with `u, v` in SU(2) and `0 < a <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KakDecomposition {
    pub u: Mobius,
    pub a: f64,
    pub v: Mobius,
}

impl KakDecomposition {
    pub fn reconstruct(&self) -> Mobius {
        self.u * Mobius::dilation(self.a) * self.v
    }

    pub fn residual(&self, g: &Mobius) -> f64 {
        self.reconstruct().psl_distance(g)
    }
}

/// KAK decomposition from the eigendecomposition of `g g*`.
///
/// The small eigenvalue of `g g*` is `a`. Its eigenvector and that of the
/// large eigenvalue form the columns of `u`, and `v = D(a)^{-1} u* g`.
/// The factors are unique only up to the diagonal torus `(u t, t^{-1} v)`.
pub fn kak_decompose(g: &Mobius) -> KakDecomposition {
    if g.is_su2() {
        return KakDecomposition { u: *g, a: 1.0, v: Mobius::identity() };
    }
    let h = *g * g.adjoint();
    let (p, q, s) = (h.a.re, h.b, h.d.re);
    let t = p + s;
    let large = t / 2.0 + ((t / 2.0).powi(2) - 1.0).max(0.0).sqrt();
    let small = 1.0 / large;
    // Two expressions for the eigenvector of `large`; keep the better conditioned one.
    let cand_a = (q, C64::from(s - small));
    let cand_b = (C64::from(p - small), q.conj());
    let norm = |(x, y): (C64, C64)| (x.norm_sqr() + y.norm_sqr()).sqrt();
    let e = if norm(cand_a) >= norm(cand_b) { cand_a } else { cand_b };
    let n = norm(e);
    let (alpha, beta) = (e.0 / n, e.1 / n);
    let u = Mobius { a: beta.conj(), b: alpha, c: -alpha.conj(), d: beta };
    let v = Mobius::dilation(small).inverse() * u.adjoint() * *g;
    KakDecomposition { u, a: small, v }
}

/// Finite subgroup kinds of PSL(2, C) up to isomorphism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FiniteGroupKind {
    Cyclic(usize),
    Dihedral(usize),
    Tetrahedral,
    Octahedral,
    Icosahedral,
}

impl FiniteGroupKind {
    pub fn order(&self) -> usize {
        match *self {
            FiniteGroupKind::Cyclic(l) => l,
            FiniteGroupKind::Dihedral(l) => 2 * l,
            FiniteGroupKind::Tetrahedral => 12,
            FiniteGroupKind::Octahedral => 24,
            FiniteGroupKind::Icosahedral => 60,
        }
    }
}

/// A finite list of Möbius maps closed under products and inverses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteSubgroupSample {
    elements: Vec<Mobius>,
}

fn position(elements: &[Mobius], g: &Mobius) -> Option<usize> {
    elements.iter().position(|h| h.psl_eq(g, PSL_GROUP_EQ))
}

impl FiniteSubgroupSample {
    /// Validates identity, closure, and inverses, and drops PSL duplicates.
    pub fn new(elements: Vec<Mobius>) -> Result<Self, MobiusError> {
        let mut unique: Vec<Mobius> = Vec::new();
        for g in elements {
            if position(&unique, &g).is_none() {
                unique.push(g);
            }
        }
        let closed = position(&unique, &Mobius::identity()).is_some()
            && unique.iter().all(|g| position(&unique, &g.inverse()).is_some())
            && unique.iter().all(|g| unique.iter().all(|h| position(&unique, &(*g * *h)).is_some()));
        if closed {
            Ok(FiniteSubgroupSample { elements: unique })
        } else {
            Err(MobiusError::NotClosed)
        }
    }

    /// Closure of `generators` by a deterministic worklist.
    pub fn saturate(generators: &[Mobius]) -> Result<Self, MobiusError> {
        let mut elements = vec![Mobius::identity()];
        let mut i = 0;
        while i < elements.len() {
            let g = elements[i];
            for s in generators {
                let h = *s * g;
                if position(&elements, &h).is_none() {
                    if elements.len() >= SATURATION_CAP {
                        return Err(MobiusError::SaturationDiverged(elements.len()));
                    }
                    elements.push(h);
                }
            }
            i += 1;
        }
        Ok(FiniteSubgroupSample { elements })
    }

    pub fn elements(&self) -> &[Mobius] {
        &self.elements
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn element_orders(&self) -> Vec<usize> {
        let n = self.elements.len();
        self.elements.iter().map(|g| g.order(n, PSL_GROUP_EQ).unwrap_or(0)).collect()
    }

    pub fn contains(&self, g: &Mobius) -> bool {
        position(&self.elements, g).is_some()
    }
}

/// Generators of the standard copy of each kind in SU(2).
pub fn standard_generators(kind: FiniteGroupKind) -> Result<Vec<Mobius>, MobiusError> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let third = 2.0 * std::f64::consts::PI / 3.0;
    Ok(match kind {
        FiniteGroupKind::Cyclic(0) | FiniteGroupKind::Dihedral(0) => {
            return Err(MobiusError::InvalidParameter(0));
        }
        FiniteGroupKind::Cyclic(l) => vec![Mobius::rotation_z(2.0 * std::f64::consts::PI / l as f64)],
        FiniteGroupKind::Dihedral(l) => vec![
            Mobius::rotation_z(2.0 * std::f64::consts::PI / l as f64),
            // z -> 1/z
            Mobius { a: ZERO, b: I, c: I, d: ZERO },
        ],
        FiniteGroupKind::Tetrahedral => vec![
            Mobius::su2_rotation([0.0, 0.0, 1.0], std::f64::consts::PI),
            Mobius::su2_rotation([1.0, 1.0, 1.0], third),
        ],
        FiniteGroupKind::Octahedral => vec![
            Mobius::su2_rotation([0.0, 0.0, 1.0], std::f64::consts::FRAC_PI_2),
            Mobius::su2_rotation([1.0, 1.0, 1.0], third),
        ],
        FiniteGroupKind::Icosahedral => vec![
            Mobius::su2_rotation([0.0, 0.0, 1.0], std::f64::consts::PI),
            Mobius::su2_rotation([0.0, 1.0, phi], 2.0 * std::f64::consts::PI / 5.0),
        ],
    })
}

pub fn standard_finite_subgroup(kind: FiniteGroupKind) -> Result<FiniteSubgroupSample, MobiusError> {
    FiniteSubgroupSample::saturate(&standard_generators(kind)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub kind: FiniteGroupKind,
    pub order: usize,
    /// Element order -> number of elements of that order.
    pub element_orders: BTreeMap<usize, usize>,
}

fn order_counts(orders: &[usize]) -> BTreeMap<usize, usize> {
    let mut m = BTreeMap::new();
    for &o in orders {
        *m.entry(o).or_insert(0) += 1;
    }
    m
}

/// Classifies a finite subgroup up to isomorphism from its order statistics.
///
/// `D_1` is reported as `Cyclic(2)`; the Klein four-group as `Dihedral(2)`.
pub fn classify_finite_subgroup(s: &FiniteSubgroupSample) -> Result<Classification, MobiusError> {
    let n = s.order();
    let orders = s.element_orders();
    if orders.contains(&0) {
        return Err(MobiusError::Unclassifiable(n));
    }
    let element_orders = order_counts(&orders);
    let done = |kind| Ok(Classification { kind, order: n, element_orders: element_orders.clone() });
    if orders.contains(&n) {
        return done(FiniteGroupKind::Cyclic(n));
    }
    let counts: Vec<(usize, usize)> = element_orders.iter().map(|(&k, &v)| (k, v)).collect();
    match (n, counts.as_slice()) {
        (12, [(1, 1), (2, 3), (3, 8)]) => return done(FiniteGroupKind::Tetrahedral),
        (24, [(1, 1), (2, 9), (3, 8), (4, 6)]) => return done(FiniteGroupKind::Octahedral),
        (60, [(1, 1), (2, 15), (3, 20), (5, 24)]) => return done(FiniteGroupKind::Icosahedral),
        _ => {}
    }
    if n.is_multiple_of(2) {
        let m = n / 2;
        let els = s.elements();
        for (i, x) in els.iter().enumerate() {
            if orders[i] != m {
                continue;
            }
            let mut rotations = vec![Mobius::identity()];
            for _ in 1..m {
                rotations.push(*rotations.last().unwrap() * *x);
            }
            let x_inv = x.inverse();
            let dihedral = els.iter().enumerate().all(|(j, y)| {
                position(&rotations, y).is_some()
                    || (orders[j] == 2 && (*y * *x * y.inverse()).psl_eq(&x_inv, PSL_GROUP_EQ))
            });
            if dihedral {
                return done(FiniteGroupKind::Dihedral(m));
            }
        }
    }
    Err(MobiusError::Unclassifiable(n))
}

/// Element orders realized in each exceptional group, from the standard copies.
pub fn exceptional_element_orders() -> &'static BTreeMap<FiniteGroupKind, BTreeSet<usize>> {
    static ORDERS: OnceLock<BTreeMap<FiniteGroupKind, BTreeSet<usize>>> = OnceLock::new();
    ORDERS.get_or_init(|| {
        [FiniteGroupKind::Tetrahedral, FiniteGroupKind::Octahedral, FiniteGroupKind::Icosahedral]
            .into_iter()
            .map(|k| {
                let g = standard_finite_subgroup(k).expect("standard group saturates");
                (k, g.element_orders().into_iter().collect())
            })
            .collect()
    })
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random element of SU(2), from a uniform unit quaternion.
pub fn random_su2<R: Rng + ?Sized>(rng: &mut R) -> Mobius {
    let (p, q) = (complex_normal(rng), complex_normal(rng));
    let n = (p.norm_sqr() + q.norm_sqr()).sqrt();
    let (p, q) = (p / n, q / n);
    Mobius { a: p, b: -q.conj(), c: q, d: p.conj() }
}

/// Normalized matrix with Gaussian entries, redrawn while nearly singular.
pub fn random_mobius<R: Rng + ?Sized>(rng: &mut R) -> Mobius {
    loop {
        let [a, b, c, d] = [(); 4].map(|_| complex_normal(rng));
        if (a * d - b * c).norm() > 0.05 {
            return Mobius::new(a, b, c, d).expect("nonsingular");
        }
    }
}

/// Uniformly distributed point of the round sphere.
pub fn random_sphere_point<R: Rng + ?Sized>(rng: &mut R) -> SpherePoint {
    loop {
        let v: [f64; 3] = [(); 3].map(|_| rng.sample(StandardNormal));
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-6 {
            return SpherePoint::from_unit_vector(v.map(|t| t / n));
        }
    }
}
