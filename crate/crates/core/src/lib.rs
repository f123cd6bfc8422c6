//! Geometric phases of driven finite-dimensional quantum systems.
//!
//! States are expanded over a moving orthonormal frame `{v_n(t)}`; the
//! frame's phase freedom `v_n -> e^{i a_n(t)} v_n` is an exact hidden gauge
//! symmetry, and the physical phases are its invariants. The crate computes
//! adiabatic, cyclic non-adiabatic and non-cyclic geometric phases, and
//! checks them against the exactly solvable spin-1/2 in a rotating field.

pub mod error;
pub mod evolution;
pub mod frames;
pub mod hilbert;
pub mod numerics;
pub mod phases;
pub mod spin_model;
pub mod sweep;
pub mod tolerances;
pub mod verify;

pub use error::{Error, Result};
pub use tolerances::Tolerances;
