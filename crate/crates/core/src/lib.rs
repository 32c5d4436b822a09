//! Numerical laboratory for the fractional Hartree equation
//!
//!   i u_t = (-Lap + m^2)^s u + V(x) u - (|x|^{-gamma} * |u|^2) u
//!
//! on a periodic box [-L, L)^N standing in for R^N, with a confining
//! potential V. The crate computes constrained energy minimizers (ground
//! states), propagates the flow with a symmetric splitting integrator, and
//! measures orbital stability of the standing waves e^{i omega t} u(x).
//!
//! Layout:
//! - [`grid`], [`field`], [`spectral`]: the discretization. Fields are
//!   complex samples on a uniform grid; derivatives act through the
//!   Fourier multiplier (|k|^2 + m^2)^s.
//! - [`kernel`]: the Riesz-type convolution kernel |x|^{-gamma} with a
//!   quadrature-averaged origin cell, applied by FFT.
//! - [`potential`], [`model`]: configuration of V and of the full model
//!   (exponents, mass constraint, precomputed tables).
//! - [`functionals`]: mass, Sigma^s norms, energy breakdown, L^2 gradient,
//!   and the interpolation/Hardy ratios behind the well-posedness bounds.
//! - [`ground_state`]: normalized gradient flow for d_M = inf E on the
//!   mass sphere, with the Lagrange multiplier omega extracted at the end.
//! - [`dynamics`]: Strang splitting with conservation monitors.
//! - [`stability`]: orbit distance, controlled perturbations, and the
//!   perturb-evolve-track experiment, plus the dilation scaling checks.
//! - [`verify`]: a self-check suite suitable for CI and the CLI.
//! - [`snapshot`]: bit-exact binary serialization of fields.

pub mod dynamics;
pub mod error;
pub mod field;
pub mod functionals;
pub mod grid;
pub mod ground_state;
pub mod kernel;
pub mod model;
pub mod potential;
pub mod snapshot;
pub mod spectral;
pub mod stability;
pub mod verify;

pub use dynamics::{evolve, evolve_backward, strang_step, ConservationTrace, EvolveConfig};
pub use error::{Error, Result};
pub use field::{FieldState, SpectralField};
pub use functionals::{
    energy, energy_gradient, gn_ratio, hardy_ratio, hardy_sup, hs_seminorm_sq, mass, sigma_inner,
    sigma_norm_sq, EnergyBreakdown,
};
pub use grid::GridSpec;
pub use ground_state::{
    el_residual, lagrange_omega, solve_ground_state, GroundStateConfig, GroundStateInit,
    GroundStateResult, TracePoint,
};
pub use kernel::{build_hartree_kernel, hartree_convolve, HartreeKernel};
pub use model::{Model, ModelParams};
pub use potential::{PotentialKind, PotentialSpec};
pub use snapshot::{decode_snapshot, encode_snapshot, read_snapshot, write_snapshot};
pub use spectral::{apply_fractional, forward_transform, inverse_transform};
pub use stability::{
    orbit_distance, perturb, run_stability_experiment, scaling_checks, PerturbationMode,
    PerturbationSpec, ScalingReport, ScalingRow, StabilityReport,
};
pub use verify::{run_verification_suite, CheckOutcome, FaultInjection, VerifyReport};
