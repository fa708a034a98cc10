//! Pure-gauge pulse and the energy it removes.
//!
//! While the pulse is on, the potentials are `A0 = ∂χ/∂t` and `A = -∂x χ`. Its
//! effect on the state at the end of the pulse is the closed form
//! `ψ(t_a) = e^{-iqχ(x, t_a)} e^{-iH0 t_a} ψ(0)`; afterwards evolution is free.
//! Only `χ(x, t_a)` enters that expression, so [`ChiProfile`] stores just the
//! final profile.
//!
//! The energy change can be computed three ways besides measuring it:
//!
//! * gradient form: `Δ = -∫ J ∂x χ dx`
//! * divergence form: `Δ = ∫ χ ∂x J dx`
//! * quadratic form, valid when `χ = -f ∂x J`: `Δ = -f ∫ (∂x J)² dx`
//!
//! where `J` is the current of the freely evolved state at `t_a`. On the
//! periodic grid the first two agree to roundoff.

use std::fmt;
use std::sync::Arc;

use crate::dirac::{energy, energy_split, free_propagate, DiracParams, EnergyReport, Spinor};
use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::observables::{current_density, div_current};
use crate::scalar::Real;

/// Tail fraction above which a pulsed state is reported as under-resolved.
pub const TAIL_WARNING_THRESHOLD: f64 = 1e-8;

/// Relative mismatch between measured and predicted energy change that is
/// reported as a warning: `|Δ_measured − Δ_div| > 1e-8 · max(1, |Δ_div|)`.
pub const MISMATCH_TOLERANCE: f64 = 1e-8;

/// Gauge function `χ(x, t_a)` sampled on the grid, with the pulse duration.
#[derive(Debug, Clone)]
pub struct ChiProfile<T: Real> {
    field: ScalarField<T, T>,
    t_a: T,
}

impl<T: Real> ChiProfile<T> {
    pub fn new(grid: Arc<Grid<T>>, values: Vec<T>, t_a: T) -> Result<Self> {
        if !(t_a.is_finite() && t_a > T::zero()) {
            return Err(Error::InvalidParameter(format!("pulse duration must be positive, got {t_a}")));
        }
        Ok(Self { field: ScalarField::new(grid, values)?, t_a })
    }

    pub fn from_field(field: ScalarField<T, T>, t_a: T) -> Result<Self> {
        let grid = Arc::clone(field.grid());
        Self::new(grid, field.into_values(), t_a)
    }

    pub fn zeros(grid: &Arc<Grid<T>>, t_a: T) -> Result<Self> {
        Self::new(Arc::clone(grid), vec![T::zero(); grid.n_points()], t_a)
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        self.field.grid()
    }

    pub fn values(&self) -> &[T] {
        self.field.values()
    }

    pub fn field(&self) -> &ScalarField<T, T> {
        &self.field
    }

    pub fn t_a(&self) -> T {
        self.t_a
    }

    /// `∂x χ`; the vector potential during the pulse is its negative.
    pub fn gradient(&self) -> ScalarField<T, T> {
        self.field.derivative()
    }

    pub fn is_identically_zero(&self) -> bool {
        self.values().iter().all(|&v| v == T::zero())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Warning {
    /// Spectral power beyond `(2/3) π/a` exceeds [`TAIL_WARNING_THRESHOLD`];
    /// the phase winding is not resolved and `N` should be raised.
    UnderResolved { tail_fraction: f64 },
    /// Measured and predicted energy change disagree beyond [`MISMATCH_TOLERANCE`].
    PredictionMismatch { measured: f64, predicted: f64 },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::UnderResolved { tail_fraction } => write!(
                f,
                "under-resolved: tail fraction {tail_fraction:.3e} exceeds {TAIL_WARNING_THRESHOLD:e}; increase n_points"
            ),
            Warning::PredictionMismatch { measured, predicted } => write!(
                f,
                "prediction mismatch: measured {measured:.6e} vs predicted {predicted:.6e}"
            ),
        }
    }
}

/// State at `t_a` after the pulse, with its resolution diagnostics.
#[derive(Debug, Clone)]
pub struct PulsedState<T: Real> {
    pub state: Spinor<T>,
    pub tail_fraction: T,
    pub warnings: Vec<Warning>,
}

fn check_same_grid<T: Real>(psi: &Spinor<T>, chi: &ChiProfile<T>) -> Result<()> {
    if psi.grid() != chi.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// `χ = -f ∂x J(ψ0(t_a))`. An identically zero result is legal and means the
/// state has no current divergence to exploit.
pub fn chi_from_current<T: Real>(
    psi0_ta: &Spinor<T>,
    f: T,
    t_a: T,
    params: &DiracParams<T>,
) -> Result<ChiProfile<T>> {
    if !f.is_finite() {
        return Err(Error::InvalidParameter(format!("pulse strength must be finite, got {f}")));
    }
    ChiProfile::from_field(div_current(psi0_ta, params).scaled(-f), t_a)
}

/// Closed-form pulse: free evolution to `t_a`, then the pointwise phase
/// `e^{-iqχ(x_j)}` on both components.
pub fn apply_pulse<T: Real>(
    psi_at_0: &Spinor<T>,
    chi: &ChiProfile<T>,
    params: &DiracParams<T>,
) -> Result<PulsedState<T>> {
    check_same_grid(psi_at_0, chi)?;
    let free = free_propagate(psi_at_0, chi.t_a(), params);
    let state = free.with_gauge_phase(chi.values(), params.charge())?;
    let tail_fraction = state.tail_fraction()?;
    let mut warnings = Vec::new();
    if tail_fraction > T::lit(TAIL_WARNING_THRESHOLD) {
        let w = Warning::UnderResolved { tail_fraction: tail_fraction.as_f64() };
        log::warn!("{w}");
        warnings.push(w);
    }
    Ok(PulsedState { state, tail_fraction, warnings })
}

/// Gradient form `-∫ J(ψ0(t_a)) ∂x χ dx`.
pub fn predict_delta_gradient<T: Real>(
    psi0_ta: &Spinor<T>,
    chi: &ChiProfile<T>,
    params: &DiracParams<T>,
) -> Result<T> {
    check_same_grid(psi0_ta, chi)?;
    let j = current_density(psi0_ta, params);
    Ok(-j.integrate_product(&chi.gradient())?)
}

/// Divergence form `∫ χ ∂x J(ψ0(t_a)) dx`.
pub fn predict_delta_divergence<T: Real>(
    psi0_ta: &Spinor<T>,
    chi: &ChiProfile<T>,
    params: &DiracParams<T>,
) -> Result<T> {
    check_same_grid(psi0_ta, chi)?;
    chi.field().integrate_product(&div_current(psi0_ta, params))
}

/// `∫ (∂x J)² dx` of the given state; positive whenever the divergence is
/// nonzero somewhere.
pub fn divergence_power<T: Real>(psi0_ta: &Spinor<T>, params: &DiracParams<T>) -> T {
    let div = div_current(psi0_ta, params);
    div.values().iter().fold(T::zero(), |acc, &v| acc + v * v) * div.grid().spacing()
}

/// Quadratic form `-f ∫ (∂x J)² dx`, the change produced by `χ = -f ∂x J`.
/// Never positive for `f ≥ 0`.
pub fn predict_delta_quadratic<T: Real>(psi0_ta: &Spinor<T>, f: T, params: &DiracParams<T>) -> T {
    -f * divergence_power(psi0_ta, params)
}

/// Pulse strength whose current-divergence pulse removes `-delta_target`
/// of energy: `f = -Δ_target / ∫ (∂x J)² dx`.
pub fn f_for_target<T: Real>(psi0_ta: &Spinor<T>, delta_target: T, params: &DiracParams<T>) -> Result<T> {
    if !delta_target.is_finite() || delta_target > T::zero() {
        return Err(Error::InvalidParameter(format!(
            "target energy change must be finite and non-positive, got {delta_target}"
        )));
    }
    let power = divergence_power(psi0_ta, params);
    // Anything at roundoff level of the current itself counts as zero divergence.
    let j_scale = current_density(psi0_ta, params).max_abs().max(T::min_positive_value());
    let g = psi0_ta.grid();
    let floor_amplitude = T::lit(1e-12) * j_scale * g.max_momentum();
    let floor = floor_amplitude * floor_amplitude * g.length();
    if power <= floor {
        return Err(Error::NoCurrentDivergence);
    }
    Ok(-delta_target / power)
}

/// Everything measured and predicted for one pulse.
#[derive(Debug, Clone)]
pub struct ExtractionResult<T: Real> {
    pub f: Option<T>,
    pub delta_measured: T,
    pub delta_gradient: T,
    pub delta_divergence: T,
    /// Only defined for pulses built from the current divergence.
    pub delta_quadratic: Option<T>,
    pub energy_before: T,
    pub energy_after: T,
    pub report_after: EnergyReport<T>,
    pub tail_fraction_after: T,
    /// Norm change across the pulse.
    pub norm_drift: T,
    pub warnings: Vec<Warning>,
}

impl<T: Real> ExtractionResult<T> {
    /// `|Δ_measured − Δ_div| / max(1, |Δ_div|)`.
    pub fn relative_error_divergence(&self) -> T {
        (self.delta_measured - self.delta_divergence).magnitude()
            / T::one().max(self.delta_divergence.magnitude())
    }

    pub fn has_mismatch(&self) -> bool {
        self.warnings.iter().any(|w| matches!(w, Warning::PredictionMismatch { .. }))
    }
}

fn check_times<T: Real>(t_a: T, t_b: T) -> Result<()> {
    if !(t_a.is_finite() && t_b.is_finite() && t_a > T::zero() && t_b >= t_a) {
        return Err(Error::InvalidParameter(format!("need 0 < t_a <= t_b, got t_a = {t_a}, t_b = {t_b}")));
    }
    Ok(())
}

/// Runs a pulse with an arbitrary gauge profile from `t = 0` to `t_b`.
///
/// `Δ_measured = ξ(t_b) − ξ(0)`; the predictions use the freely evolved state
/// at `t_a = chi.t_a()`.
pub fn run_with_chi<T: Real>(
    psi_at_0: &Spinor<T>,
    chi: &ChiProfile<T>,
    t_b: T,
    params: &DiracParams<T>,
) -> Result<ExtractionResult<T>> {
    check_times(chi.t_a(), t_b)?;
    check_same_grid(psi_at_0, chi)?;
    let psi0_ta = free_propagate(psi_at_0, chi.t_a(), params);
    finish_run(psi_at_0, &psi0_ta, chi, None, t_b, params)
}

fn finish_run<T: Real>(
    psi_at_0: &Spinor<T>,
    psi0_ta: &Spinor<T>,
    chi: &ChiProfile<T>,
    f: Option<T>,
    t_b: T,
    params: &DiracParams<T>,
) -> Result<ExtractionResult<T>> {
    let pulsed = psi0_ta.with_gauge_phase(chi.values(), params.charge())?;
    let after = free_propagate(&pulsed, t_b - chi.t_a(), params);

    let energy_before = energy(psi_at_0, params)?;
    let energy_after = energy(&after, params)?;
    let delta_measured = energy_after - energy_before;
    let delta_gradient = predict_delta_gradient(psi0_ta, chi, params)?;
    let delta_divergence = predict_delta_divergence(psi0_ta, chi, params)?;
    let delta_quadratic = f.map(|f| predict_delta_quadratic(psi0_ta, f, params));
    let tail_fraction_after = after.tail_fraction()?;
    let norm_drift = (after.norm_sqr() - psi_at_0.norm_sqr()).magnitude();

    let mut warnings = Vec::new();
    if tail_fraction_after > T::lit(TAIL_WARNING_THRESHOLD) {
        warnings.push(Warning::UnderResolved { tail_fraction: tail_fraction_after.as_f64() });
    }
    let tolerance = T::lit(MISMATCH_TOLERANCE) * T::one().max(delta_divergence.magnitude());
    if (delta_measured - delta_divergence).magnitude() > tolerance {
        warnings.push(Warning::PredictionMismatch {
            measured: delta_measured.as_f64(),
            predicted: delta_divergence.as_f64(),
        });
    }
    for w in &warnings {
        log::warn!("{w}");
    }

    Ok(ExtractionResult {
        f,
        delta_measured,
        delta_gradient,
        delta_divergence,
        delta_quadratic,
        energy_before,
        energy_after,
        report_after: energy_split(&after, params),
        tail_fraction_after,
        norm_drift,
        warnings,
    })
}

/// End-to-end extraction with `χ = -f ∂x J(ψ0(t_a))`.
pub fn run_extraction<T: Real>(
    psi_at_0: &Spinor<T>,
    f: T,
    t_a: T,
    t_b: T,
    params: &DiracParams<T>,
) -> Result<ExtractionResult<T>> {
    check_times(t_a, t_b)?;
    let psi0_ta = free_propagate(psi_at_0, t_a, params);
    let chi = chi_from_current(&psi0_ta, f, t_a, params)?;
    finish_run(psi_at_0, &psi0_ta, &chi, Some(f), t_b, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirac::{make_gaussian_packet, make_plane_wave, Branch};

    fn params() -> DiracParams<f64> {
        DiracParams::new(1.0, 1.0).unwrap()
    }

    fn packet(n: usize) -> Spinor<f64> {
        let g = Grid::new(n, 64.0).unwrap();
        make_gaussian_packet(&g, 1.0, 4.0, 32.0, Branch::Positive, &params()).unwrap()
    }

    #[test]
    fn zero_strength_gives_zero_chi_and_no_change() {
        let p = params();
        let psi = packet(256);
        let chi = chi_from_current(&psi, 0.0, 1.0, &p).unwrap();
        assert!(chi.is_identically_zero());
        let r = run_extraction(&psi, 0.0, 1.0, 2.0, &p).unwrap();
        assert!(r.delta_measured.abs() < 1e-12);
        assert_eq!(r.delta_quadratic, Some(0.0));
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn chi_is_negative_divergence() {
        let p = params();
        let psi = packet(256);
        let chi = chi_from_current(&psi, 1.0, 1.0, &p).unwrap();
        let div = div_current(&psi, &p);
        for (c, d) in chi.values().iter().zip(div.values()) {
            assert_eq!(*c, -d);
        }
    }

    #[test]
    fn plane_wave_admits_no_extraction() {
        let p = params();
        let g = Grid::new(64, 16.0).unwrap();
        let psi = make_plane_wave(&g, 3, Branch::Positive, &p).unwrap();
        let chi = chi_from_current(&psi, 5.0, 1.0, &p).unwrap();
        assert!(chi.values().iter().all(|v| v.abs() < 1e-12));
        assert_eq!(f_for_target(&psi, -1.0, &p), Err(Error::NoCurrentDivergence));
    }

    #[test]
    fn constant_chi_is_a_global_phase() {
        let p = params();
        let psi = packet(256);
        let g = Arc::clone(psi.grid());
        let chi = ChiProfile::new(Arc::clone(&g), vec![0.8; 256], 1.0).unwrap();
        let pulsed = apply_pulse(&psi, &chi, &p).unwrap();
        let free = free_propagate(&psi, 1.0, &p);
        let phase = num_complex::Complex::from_polar(1.0, -0.8);
        assert!(pulsed.state.max_abs_diff(&free.scaled(phase)).unwrap() < 1e-14);
        let de = energy(&pulsed.state, &p).unwrap() - energy(&psi, &p).unwrap();
        assert!(de.abs() < 1e-13);
        assert!(predict_delta_gradient(&free, &chi, &p).unwrap().abs() < 1e-14);

        let zero = ChiProfile::zeros(&g, 1.0).unwrap();
        let pulsed = apply_pulse(&psi, &zero, &p).unwrap();
        assert!(pulsed.state.max_abs_diff(&free).unwrap() == 0.0);
    }

    #[test]
    fn quadratic_prediction_arithmetic() {
        let p = params();
        let psi = packet(256);
        let power = divergence_power(&psi, &p);
        assert!(power > 0.0);
        assert_eq!(predict_delta_quadratic(&psi, 0.0, &p), 0.0);
        let f = 2.0 * 0.5 / power;
        // f chosen so that f·∫(∂J)² = 1
        assert!((predict_delta_quadratic(&psi, f, &p) + 1.0).abs() < 1e-14);
        assert!(predict_delta_quadratic(&psi, 3.0, &p) < 0.0);
        assert_eq!(f_for_target(&psi, 0.0, &p).unwrap(), 0.0);
        assert!((f_for_target(&psi, -1.0, &p).unwrap() * power - 1.0).abs() < 1e-14);
        assert!(f_for_target(&psi, 1.0, &p).is_err());
    }

    #[test]
    fn predictions_agree_for_current_divergence_pulse() {
        let p = params();
        let psi = packet(512);
        let psi_ta = free_propagate(&psi, 1.0, &p);
        let chi = chi_from_current(&psi_ta, 1.0, 1.0, &p).unwrap();
        let grad = predict_delta_gradient(&psi_ta, &chi, &p).unwrap();
        let div = predict_delta_divergence(&psi_ta, &chi, &p).unwrap();
        let quad = predict_delta_quadratic(&psi_ta, 1.0, &p);
        assert!((grad - quad).abs() < 1e-12 * quad.abs());
        assert!((div - quad).abs() < 1e-12 * quad.abs());
    }

    #[test]
    fn measured_change_matches_prediction_and_is_linear() {
        let p = params();
        let psi = packet(1024);
        let r1 = run_extraction(&psi, 1.0, 1.0, 2.0, &p).unwrap();
        let r2 = run_extraction(&psi, 2.0, 1.0, 2.0, &p).unwrap();
        assert!(r1.relative_error_divergence() < 1e-10);
        assert!(r1.delta_measured < 0.0);
        assert!((r2.delta_measured - 2.0 * r1.delta_measured).abs() < 1e-10 * r2.delta_measured.abs());
        assert!(r1.norm_drift < 1e-12);
        assert!(r1.warnings.is_empty());
        let later = run_extraction(&psi, 1.0, 1.0, 7.5, &p).unwrap();
        assert!((later.delta_measured - r1.delta_measured).abs() < 1e-12);
    }

    #[test]
    fn time_and_grid_preconditions() {
        let p = params();
        let psi = packet(64);
        assert!(run_extraction(&psi, 1.0, 0.0, 1.0, &p).is_err());
        assert!(run_extraction(&psi, 1.0, 2.0, 1.0, &p).is_err());
        let other = Grid::new(32, 64.0).unwrap();
        let chi = ChiProfile::zeros(&other, 1.0).unwrap();
        assert_eq!(apply_pulse(&psi, &chi, &p).err(), Some(Error::GridMismatch));
        assert!(ChiProfile::zeros(&other, 0.0).is_err());
    }

    #[test]
    fn under_resolved_pulse_warns() {
        let p = params();
        let g = Grid::new(64, 16.0).unwrap();
        let psi = make_gaussian_packet(&g, 0.0, 1.0, 8.0, Branch::Positive, &p).unwrap();
        let chi = ChiProfile::from_field(
            ScalarField::from_fn(&g, |x| 40.0 * (-(x - 8.0) * (x - 8.0)).exp()).unwrap(),
            1.0,
        )
        .unwrap();
        let pulsed = apply_pulse(&psi, &chi, &p).unwrap();
        assert!(matches!(pulsed.warnings[..], [Warning::UnderResolved { .. }]));
        assert!((pulsed.state.norm_sqr() - 1.0).abs() < 1e-13);
    }
}
