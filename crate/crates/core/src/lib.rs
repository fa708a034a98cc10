//! Spectral simulator for the one-dimensional Dirac field driven by a
//! pure-gauge pulse.
//!
//! A pulse with potentials `(∂χ/∂t, -∂xχ)` applied over `[0, t_a)` leaves the
//! state as `e^{-iqχ} e^{-iH0 t_a} ψ(0)`. Its free-field energy then changes by
//! `∫ χ ∂x J dx`, where `J` is the current of the freely evolved state. Picking
//! `χ = -f ∂x J` makes the change `-f ∫ (∂x J)² dx`, which has no lower bound as
//! `f` grows. This crate computes those quantities and checks them against an
//! independent time integrator and a dense-matrix oracle.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the aliases below fix
//! the common `f64` case.

pub mod dirac;
pub mod error;
pub mod evolve;
pub mod grid;
pub mod observables;
pub mod oracle;
pub mod pulse;
pub mod scalar;

pub use num_complex::Complex;

pub use dirac::{
    energy, energy_split, free_propagate, h0_apply, make_gaussian_packet, make_plane_wave, project,
    Branch,
};
pub use error::{Error, Result};
pub use evolve::{convergence_study, ConvergenceRow, ConvergenceStudy, IntegratorConfig, RampSpec, SplitStepper};
pub use observables::{charge_density, continuity_residual, current_density, div_current};
pub use pulse::{
    apply_pulse, chi_from_current, divergence_power, f_for_target, predict_delta_divergence,
    predict_delta_gradient, predict_delta_quadratic, run_extraction, run_with_chi, Warning,
};
pub use scalar::Real;

pub type Grid1D = grid::Grid<f64>;
pub type SpinorField = dirac::Spinor<f64>;
pub type RealScalarField = grid::ScalarField<f64, f64>;
pub type ComplexScalarField = grid::ScalarField<f64, Complex<f64>>;
pub type DiracParams = dirac::DiracParams<f64>;
pub type EnergyReport = dirac::EnergyReport<f64>;
pub type ChiProfile = pulse::ChiProfile<f64>;
pub type ExtractionResult = pulse::ExtractionResult<f64>;
pub type DenseOperator = oracle::DenseOperator<f64>;

pub type Grid1DF32 = grid::Grid<f32>;
pub type SpinorFieldF32 = dirac::Spinor<f32>;
pub type DiracParamsF32 = dirac::DiracParams<f32>;
