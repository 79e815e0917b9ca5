//! Special-point configurations on nodal curves modeled on a stable labeled
//! tree: the slice of the product action, the multi-cross-ratio chart, and the
//! gluing condition for nodal maps.

use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::mobius::{cross_ratio, random_sphere_point, Mobius, SpherePoint, C64};
use crate::order::{order_from_labeling, OrderError, SpecialPoint};
use crate::tolerances::{DISTINCT, GLUING, SLICE_RIGIDITY};
use crate::tree::{LabeledTree, Vertex};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModuliError {
    #[error(transparent)]
    Order(#[from] OrderError),
    #[error("vertex {0} has the wrong number of special points")]
    WrongPointCount(Vertex),
    #[error("special points on vertex {vertex} are out of order or mislabeled")]
    RoleMismatch { vertex: Vertex },
    #[error("special points {i} and {j} on vertex {vertex} coincide")]
    PointsNotDistinct { vertex: Vertex, i: usize, j: usize },
    #[error("no entry for vertex {0}")]
    MissingVertex(Vertex),
    #[error("degenerate configuration on vertex {0}")]
    DegenerateConfig(Vertex),
    #[error("coordinate {index} on vertex {vertex} is invalid")]
    InvalidCoordinates { vertex: Vertex, index: usize },
    #[error("no value at the double point of {from} toward {to}")]
    MissingDoubleValue { from: Vertex, to: Vertex },
}

/// Special points `p_v = (p_{v1}, ..., p_{vI_v})` on every component, in the
/// order fixed by the labeled tree.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecialPointConfig {
    labeled: LabeledTree,
    roles: BTreeMap<Vertex, Vec<SpecialPoint>>,
    points: BTreeMap<Vertex, Vec<SpherePoint>>,
    slice: bool,
}

fn slice_triple() -> [SpherePoint; 3] {
    [SpherePoint::finite(C64::new(0.0, 0.0)), SpherePoint::finite(C64::new(1.0, 0.0)), SpherePoint::infinity()]
}

impl SpecialPointConfig {
    /// Points listed per vertex in special-point order.
    pub fn new(labeled: LabeledTree, points: BTreeMap<Vertex, Vec<SpherePoint>>) -> Result<Self, ModuliError> {
        let roles = order_from_labeling(&labeled)?.special_points;
        for (&v, r) in &roles {
            let ps = points.get(&v).ok_or(ModuliError::MissingVertex(v))?;
            if ps.len() != r.len() {
                return Err(ModuliError::WrongPointCount(v));
            }
            for i in 0..ps.len() {
                for j in 0..i {
                    if ps[i].chordal_distance(&ps[j]) <= DISTINCT {
                        return Err(ModuliError::PointsNotDistinct { vertex: v, i: j + 1, j: i + 1 });
                    }
                }
            }
        }
        let slice = roles.keys().all(|v| points[v][..3] == slice_triple());
        Ok(SpecialPointConfig { labeled, roles, points, slice })
    }

    /// Like [`SpecialPointConfig::new`], additionally checking caller-supplied role tags.
    pub fn with_roles(
        labeled: LabeledTree,
        tagged: BTreeMap<Vertex, Vec<(SpecialPoint, SpherePoint)>>,
    ) -> Result<Self, ModuliError> {
        let roles = order_from_labeling(&labeled)?.special_points;
        for (&v, r) in &roles {
            let given = tagged.get(&v).ok_or(ModuliError::MissingVertex(v))?;
            if given.len() != r.len() {
                return Err(ModuliError::WrongPointCount(v));
            }
            if given.iter().map(|p| p.0).ne(r.iter().copied()) {
                return Err(ModuliError::RoleMismatch { vertex: v });
            }
        }
        let points = tagged.into_iter().map(|(v, ps)| (v, ps.into_iter().map(|p| p.1).collect())).collect();
        Self::new(labeled, points)
    }

    pub fn labeled_tree(&self) -> &LabeledTree {
        &self.labeled
    }

    pub fn roles(&self, v: Vertex) -> &[SpecialPoint] {
        &self.roles[&v]
    }

    pub fn points(&self, v: Vertex) -> &[SpherePoint] {
        &self.points[&v]
    }

    pub fn all_points(&self) -> &BTreeMap<Vertex, Vec<SpherePoint>> {
        &self.points
    }

    /// Whether `p_{v1}, p_{v2}, p_{v3}` are `0, 1, ∞` on every component.
    pub fn is_slice(&self) -> bool {
        self.slice
    }

    /// Position of the double point of `v` toward `u`.
    pub fn double_point(&self, v: Vertex, u: Vertex) -> Option<SpherePoint> {
        let i = self.roles.get(&v)?.iter().position(|&r| r == SpecialPoint::Double(u))?;
        Some(self.points[&v][i])
    }
}

/// `w_{vi}` for `3 < i <= I_v`, stored from `i = 4`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossRatioCoordinates {
    pub values: BTreeMap<Vertex, Vec<SpherePoint>>,
}

impl CrossRatioCoordinates {
    /// Largest chordal distance between matching coordinates, infinite if the shapes differ.
    pub fn max_deviation(&self, other: &CrossRatioCoordinates) -> f64 {
        if self.values.len() != other.values.len() {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for ((v, a), (u, b)) in self.values.iter().zip(&other.values) {
            if v != u || a.len() != b.len() {
                return f64::INFINITY;
            }
            for (p, q) in a.iter().zip(b) {
                worst = worst.max(p.chordal_distance(q));
            }
        }
        worst
    }
}

/// `w_{vi} = (p_{v1} : p_{v2} : p_{v3} : p_{vi})`.
///
/// On the slice the cross-ratio with `0, 1, ∞` is the identity, so slice
/// configurations read their coordinates off directly.
pub fn chart(config: &SpecialPointConfig) -> Result<CrossRatioCoordinates, ModuliError> {
    let mut values = BTreeMap::new();
    for (&v, ps) in &config.points {
        let w = if config.slice {
            ps[3..].to_vec()
        } else {
            ps[3..]
                .iter()
                .map(|&p| cross_ratio(ps[0], ps[1], ps[2], p).map_err(|_| ModuliError::DegenerateConfig(v)))
                .collect::<Result<_, _>>()?
        };
        values.insert(v, w);
    }
    Ok(CrossRatioCoordinates { values })
}

/// Applies `g_v` to every special point of component `v`.
pub fn h_t_act(config: &SpecialPointConfig, g: &BTreeMap<Vertex, Mobius>) -> Result<SpecialPointConfig, ModuliError> {
    let mut points = BTreeMap::new();
    for (&v, ps) in &config.points {
        let gv = g.get(&v).ok_or(ModuliError::MissingVertex(v))?;
        points.insert(v, ps.iter().map(|&p| gv.apply(p)).collect());
    }
    SpecialPointConfig::new(config.labeled.clone(), points)
}

/// Möbius map sending `p1, p2, p3` to `0, 1, ∞`, solved as the inverse of
/// the map `[λ p3 | μ p1]` with `λ p3 + μ p1 = p2`.
fn triple_map_by_columns(p1: SpherePoint, p2: SpherePoint, p3: SpherePoint) -> Option<Mobius> {
    let det = p3.z * p1.w - p1.z * p3.w;
    let lambda = (p2.z * p1.w - p1.z * p2.w) / det;
    let mu = (p3.z * p2.w - p2.z * p3.w) / det;
    let inv = Mobius::new(lambda * p3.z, mu * p1.z, lambda * p3.w, mu * p1.w).ok()?;
    Some(inv.inverse())
}

/// The unique tuple moving `config` onto the slice, and the moved configuration.
pub fn to_slice(config: &SpecialPointConfig) -> Result<(SpecialPointConfig, BTreeMap<Vertex, Mobius>), ModuliError> {
    let mut tuple = BTreeMap::new();
    let mut points = BTreeMap::new();
    for (&v, ps) in &config.points {
        let g = if config.slice {
            Mobius::identity()
        } else {
            let g = Mobius::from_triple(ps[0], ps[1], ps[2]).map_err(|_| ModuliError::DegenerateConfig(v))?;
            // Three points determine a Möbius map, so an independent solve must agree.
            let h = triple_map_by_columns(ps[0], ps[1], ps[2]).ok_or(ModuliError::DegenerateConfig(v))?;
            let scale = g.entries().iter().map(|e| e.norm()).fold(1.0, f64::max);
            if g.psl_distance(&h) > SLICE_RIGIDITY * scale {
                return Err(ModuliError::DegenerateConfig(v));
            }
            g
        };
        let moved: Vec<SpherePoint> = if config.slice {
            ps.clone()
        } else {
            slice_triple().into_iter().chain(ps[3..].iter().map(|&p| g.apply(p))).collect()
        };
        tuple.insert(v, g);
        points.insert(v, moved);
    }
    Ok((SpecialPointConfig::new(config.labeled.clone(), points)?, tuple))
}

/// The slice configuration with `p_{vi} = w_{vi}` for `i > 3`.
pub fn reconstruct_from_chart(lt: &LabeledTree, coords: &CrossRatioCoordinates) -> Result<SpecialPointConfig, ModuliError> {
    let roles = order_from_labeling(lt)?.special_points;
    let mut points = BTreeMap::new();
    for (&v, r) in &roles {
        let w = coords.values.get(&v).ok_or(ModuliError::MissingVertex(v))?;
        if w.len() + 3 != r.len() {
            return Err(ModuliError::WrongPointCount(v));
        }
        let ps: Vec<SpherePoint> = slice_triple().into_iter().chain(w.iter().copied()).collect();
        for i in 3..ps.len() {
            if ps[..i].iter().any(|q| q.chordal_distance(&ps[i]) <= DISTINCT) {
                return Err(ModuliError::InvalidCoordinates { vertex: v, index: i + 1 });
            }
        }
        points.insert(v, ps);
    }
    SpecialPointConfig::new(lt.clone(), points)
}

/// Random configuration with pairwise distinct points on every component.
pub fn random_config<R: Rng + ?Sized>(lt: &LabeledTree, rng: &mut R) -> Result<SpecialPointConfig, ModuliError> {
    let roles = order_from_labeling(lt)?.special_points;
    let points = roles
        .iter()
        .map(|(&v, r)| (v, (0..r.len()).map(|_| random_sphere_point(rng)).collect()))
        .collect();
    SpecialPointConfig::new(lt.clone(), points)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GluingReport {
    pub glued: bool,
    /// Edges whose two double-point values disagree.
    pub mismatches: Vec<(Vertex, Vertex)>,
}

/// Checks `f_v(d_{vu}) = f_u(d_{uv})` on every edge. `values[(v, u)]` is the
/// value of component `v` at its double point toward `u`.
pub fn check_nodal_gluing(
    lt: &LabeledTree,
    values: &BTreeMap<(Vertex, Vertex), Vec<f64>>,
) -> Result<GluingReport, ModuliError> {
    let mut mismatches = Vec::new();
    for &(a, b) in lt.tree().edges() {
        let x = values.get(&(a, b)).ok_or(ModuliError::MissingDoubleValue { from: a, to: b })?;
        let y = values.get(&(b, a)).ok_or(ModuliError::MissingDoubleValue { from: b, to: a })?;
        let agree = x.len() == y.len() && x.iter().zip(y).all(|(s, t)| (s - t).abs() <= GLUING);
        if !agree {
            mismatches.push((a, b));
        }
    }
    Ok(GluingReport { glued: mismatches.is_empty(), mismatches })
}
