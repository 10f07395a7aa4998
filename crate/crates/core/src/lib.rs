//! Mean radiative forces on a two-level atom in several commensurate
//! monochromatic plane waves.
//!
//! The optical Bloch equations with a periodic drive are solved in the
//! frequency domain: the Fourier components of the inversion obey a banded
//! linear system ([`floquet`]), or for two frequencies a scalar three-term
//! recurrence ([`contfrac`]). A direct time integrator ([`bloch`]) serves as
//! an oracle.

// `!(x > 0.0)` style checks are kept on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod banded;
pub mod bloch;
pub mod cli;
pub mod contfrac;
pub mod error;
pub mod floquet;
pub mod lattice;
pub mod scenarios;

pub use bloch::{AtomParams, BlochState, FieldConfig, PlaneWave};
pub use error::{Error, Result};
pub use floquet::{ForceResult, FourierSolution, SolveOptions};
pub use lattice::{FrequencyLattice, Rational};
pub use scenarios::{Solver, Tolerances};
