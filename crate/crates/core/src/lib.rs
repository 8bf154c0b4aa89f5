#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Axisymmetric equilibria of a rotating, self-gravitating gas surrounding a
//! rigid core.
//!
//! The equilibrium density `ρ` satisfies
//!
//! ```text
//! A′(ρ) − Bρ − J − μΦ_K = λ      where ρ > 0
//! A′(ρ) − Bρ − J − μΦ_K ≥ λ      where ρ = 0
//! ```
//!
//! with total mass `M` fixed and `λ` the Lagrange multiplier of the mass
//! constraint. [`solver`] finds such densities by self-consistent-field
//! iteration; [`energy`] evaluates the variational energy and residual
//! diagnostics; [`scan`] sweeps rotation speed and core strength.

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod energy;
pub mod eos;
pub mod error;
pub mod field;
pub mod lane_emden;
pub mod potential;
pub mod quad;
pub mod scan;
pub mod solver;

pub use error::{Error, Result};
