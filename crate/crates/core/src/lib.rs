//! Combinatorics and numerics of genus-zero nodal curves: trees and their
//! morphisms, automorphism structure, Möbius numerics, cross-ratio charts,
//! and energies of sampled sphere maps.

pub mod aut;
pub mod energy;
pub mod io;
pub mod mobius;
pub mod moduli;
pub mod morphism;
pub mod order;
pub mod tolerances;
pub mod tree;
pub mod verify;
