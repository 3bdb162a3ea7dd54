//! Numerical solver and verification suite for the planar Schrödinger–Newton
//! (logarithmic Choquard) equation
//!
//! ```text
//! -Δu + u + (log|·| * |u|^p) |u|^{p-2} u = 0   in R²,  p ≥ 2
//! ```
//!
//! The crate computes least-action solutions, both the ground state and the
//! minimal action solution in the class of fields odd in `x₂`, by
//! Nehari-constrained, H¹-preconditioned gradient descent on a uniform grid,
//! and provides the diagnostics used to check the qualitative properties of
//! the computed solutions (sign, axial symmetry, monotonicity, decay and the
//! far-field behaviour of the logarithmic potential).
//!
//! Module map:
//!
//! * [`grid`]: node-centred grid, fields, norms, odd projection.
//! * [`potential`]: logarithmic kernels and their fast/direct convolutions,
//!   the half-plane potentials `H₁`, `H₂` and the `F − G` split.
//! * [`functional`]: the action, its first variation, Nehari projection.
//! * [`solver`]: the constrained descent.
//! * [`symmetry`]: moving-plane diagnostics and qualitative checks.
//! * [`snf1`]: the on-disk field format.

pub mod error;
pub mod functional;
pub mod grid;
pub mod potential;
pub mod precond;
pub mod snf1;
pub mod solver;
pub mod sum;
pub mod symmetry;

pub use error::{Error, Result};
pub use functional::{EnergyBreakdown, Functional};
pub use grid::{GridSpec, ScalarField, SymmetryClass, UpperHalfField};
pub use solver::{InitialGuess, SolutionRecord, SolverConfig};
pub use symmetry::SymmetryReport;
