//! Numerical tolerances shared across modules.

use serde::Serialize;

/// PSL(2, C) equality when saturating and classifying finite groups.
pub const PSL_GROUP_EQ: f64 = 1e-9;
/// Reconstruction residual of a KAK decomposition.
pub const RECONSTRUCTION: f64 = 1e-12;
/// Distance from SU(2) below which a matrix is treated as unitary.
pub const SU2_CHECK: f64 = 1e-9;
/// Determinant magnitude below which a matrix is singular.
pub const SINGULAR_DET: f64 = 1e-14;
/// Chordal separation required of the first three cross-ratio arguments.
pub const CROSS_RATIO_DEGENERATE: f64 = 1e-12;
/// Chordal separation required of special points on one component.
pub const DISTINCT: f64 = 1e-10;
/// Mismatch allowed between the two values at a double point.
pub const GLUING: f64 = 1e-9;
/// Agreement of two independent slice solves.
pub const SLICE_RIGIDITY: f64 = 1e-10;
/// Sup-norm spread below which a sampled map counts as constant.
pub const CONSTANT_MAP: f64 = 1e-9;
/// Energy below which a map is rejected as constant by the properness experiment.
pub const NONCONSTANT_ENERGY: f64 = 1e-6;

/// Snapshot of every tolerance, embedded in verification reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub psl_group_eq: f64,
    pub reconstruction: f64,
    pub su2_check: f64,
    pub singular_det: f64,
    pub cross_ratio_degenerate: f64,
    pub distinct: f64,
    pub gluing: f64,
    pub slice_rigidity: f64,
    pub constant_map: f64,
    pub nonconstant_energy: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            psl_group_eq: PSL_GROUP_EQ,
            reconstruction: RECONSTRUCTION,
            su2_check: SU2_CHECK,
            singular_det: SINGULAR_DET,
            cross_ratio_degenerate: CROSS_RATIO_DEGENERATE,
            distinct: DISTINCT,
            gluing: GLUING,
            slice_rigidity: SLICE_RIGIDITY,
            constant_map: CONSTANT_MAP,
            nonconstant_energy: NONCONSTANT_ENERGY,
        }
    }
}
