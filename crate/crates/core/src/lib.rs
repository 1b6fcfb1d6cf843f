//! Spectral solver and analytic oracle for semiclassical Born-Oppenheimer
//! Hamiltonians `H(h) = −h²Δₓ − Δ_y + V(x, y)`.
//!
//! - [`potential`]: quadratic-form and expression potentials, confinement profiles.
//! - [`discretization`]: tensor-product grids and the sparse finite-difference operator.
//! - [`eigensolver`]: thick-restart Lanczos for the lowest eigenpairs, clustering,
//!   convergence studies.
//! - [`analytic`]: exact harmonic-oscillator spectra, Hermite functions, dilations.
//! - [`probe`]: Zhislin vectors, discreteness certificates, commutator decay,
//!   form inequalities.
//! - [`cli`]: configuration parsing and the `bospec` batch commands.

// `!(x > 0.0)` is used on purpose to reject NaN alongside non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod cli;
pub mod discretization;
pub mod eigensolver;
pub mod krylov;
pub mod linalg;
pub mod par;
pub mod potential;
pub mod probe;
