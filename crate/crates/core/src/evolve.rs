//! Second-order split-operator integration of the pulse-era equation of motion
//!
//! `i ∂t ψ = (H0 + q ∂xχ(x,t) σ1 + q ∂tχ(x,t)) ψ`,
//!
//! with a separable gauge function `χ(x, t) = s(t) χ_a(x)` and the smoothstep
//! ramp `s(τ) = 3τ² − 2τ³`, `τ = t / t_a`. The ramp has `s(0) = s'(0) = 0`, so
//! the potentials vanish at switch-on, and `s(t_a) = 1`.
//!
//! The integrator shares nothing with the closed-form pulse beyond
//! [`free_propagate`] and pointwise phases, so its convergence to
//! [`apply_pulse`](crate::pulse::apply_pulse) is an independent check.

use std::sync::Arc;

use num_complex::Complex;

use crate::dirac::{free_propagate, DiracParams, Spinor};
use crate::error::{Error, Result};
use crate::pulse::{apply_pulse, ChiProfile};
use crate::scalar::Real;

/// Smoothstep temporal ramp over `[0, t_a]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RampSpec<T: Real> {
    t_a: T,
}

impl<T: Real> RampSpec<T> {
    pub fn new(t_a: T) -> Result<Self> {
        if !(t_a.is_finite() && t_a > T::zero()) {
            return Err(Error::InvalidParameter(format!("ramp duration must be positive, got {t_a}")));
        }
        Ok(Self { t_a })
    }

    pub fn t_a(&self) -> T {
        self.t_a
    }

    /// `s(t) = 3τ² − 2τ³`.
    pub fn value(&self, t: T) -> T {
        let tau = t / self.t_a;
        tau * tau * (T::lit(3.0) - T::lit(2.0) * tau)
    }

    /// `s'(t) = 6τ(1 − τ) / t_a`.
    pub fn rate(&self, t: T) -> T {
        let tau = t / self.t_a;
        T::lit(6.0) * tau * (T::one() - tau) / self.t_a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntegratorConfig {
    n_steps: usize,
}

impl IntegratorConfig {
    pub const MIN_STEPS: usize = 4;

    pub fn new(n_steps: usize) -> Result<Self> {
        if n_steps < Self::MIN_STEPS {
            return Err(Error::InvalidParameter(format!(
                "n_steps must be at least {}, got {n_steps}",
                Self::MIN_STEPS
            )));
        }
        Ok(Self { n_steps })
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }
}

/// Strang-split stepper for a fixed gauge profile and ramp.
#[derive(Debug, Clone)]
pub struct SplitStepper<T: Real> {
    chi: Vec<T>,
    chi_gradient: Vec<T>,
    ramp: RampSpec<T>,
    params: DiracParams<T>,
    grid: Arc<crate::grid::Grid<T>>,
}

impl<T: Real> SplitStepper<T> {
    pub fn new(chi_a: &ChiProfile<T>, ramp: RampSpec<T>, params: DiracParams<T>) -> Self {
        Self {
            chi: chi_a.values().to_vec(),
            chi_gradient: chi_a.gradient().into_values(),
            ramp,
            params,
            grid: Arc::clone(chi_a.grid()),
        }
    }

    pub fn ramp(&self) -> &RampSpec<T> {
        &self.ramp
    }

    /// `e^{-i V τ}` with `V = a σ1 + b`, `a = q s ∂xχ_a`, `b = q s' χ_a`,
    /// applied site by site in closed form.
    fn potential_half_step(&self, psi: &Spinor<T>, s: T, s_rate: T, tau: T) -> Spinor<T> {
        let q = self.params.charge();
        let (upper, lower) = psi
            .upper()
            .iter()
            .zip(psi.lower())
            .zip(self.chi.iter().zip(&self.chi_gradient))
            .map(|((&u, &l), (&chi, &dchi))| {
                let a = q * s * dchi;
                let b = q * s_rate * chi;
                let (sin, cos) = (a * tau).sin_cos();
                let phase = Complex::from_polar(T::one(), -b * tau);
                let mix = Complex::new(T::zero(), -sin);
                ((u * cos + l * mix) * phase, (l * cos + u * mix) * phase)
            })
            .unzip();
        Spinor::from_parts(Arc::clone(psi.grid()), upper, lower)
    }

    /// One step from `t` to `t + dt`; `dt` may be negative for reverse runs.
    /// The potential is frozen at the interval midpoint.
    fn advance(&self, psi: &Spinor<T>, t: T, dt: T) -> Spinor<T> {
        let mid = t + dt * T::lit(0.5);
        let (s, s_rate) = (self.ramp.value(mid), self.ramp.rate(mid));
        let half = dt * T::lit(0.5);
        let psi = self.potential_half_step(psi, s, s_rate, half);
        let psi = free_propagate(&psi, dt, &self.params);
        self.potential_half_step(&psi, s, s_rate, half)
    }

    /// One forward step, requiring `0 ≤ t < t + dt ≤ t_a`.
    pub fn step(&self, psi: &Spinor<T>, t: T, dt: T) -> Result<Spinor<T>> {
        if psi.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        // Allow the final step to land on t_a despite accumulated roundoff.
        let slack = T::lit(8.0) * T::epsilon() * self.ramp.t_a();
        if !(t >= T::zero() && dt > T::zero() && t + dt <= self.ramp.t_a() + slack) {
            return Err(Error::InvalidParameter(format!(
                "step must satisfy 0 <= t < t + dt <= t_a; got t = {t}, dt = {dt}"
            )));
        }
        Ok(self.advance(psi, t, dt))
    }

    /// Integrates from `t = 0` to `t_a`, calling `observe(t, ψ)` after every step.
    pub fn run_observed(
        &self,
        psi_at_0: &Spinor<T>,
        config: IntegratorConfig,
        mut observe: impl FnMut(T, &Spinor<T>),
    ) -> Result<Spinor<T>> {
        if psi_at_0.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let dt = self.ramp.t_a() / T::from_usize_lossy(config.n_steps());
        let mut psi = psi_at_0.clone();
        for i in 0..config.n_steps() {
            let t = T::from_usize_lossy(i) * dt;
            psi = self.advance(&psi, t, dt);
            observe(t + dt, &psi);
        }
        Ok(psi)
    }

    /// Integrates from `t = 0` to `t_a`.
    pub fn run(&self, psi_at_0: &Spinor<T>, config: IntegratorConfig) -> Result<Spinor<T>> {
        self.run_observed(psi_at_0, config, |_, _| {})
    }

    /// Integrates backwards from `t_a` to `0`, undoing [`run`](Self::run).
    pub fn run_reverse(&self, psi_at_ta: &Spinor<T>, config: IntegratorConfig) -> Result<Spinor<T>> {
        if psi_at_ta.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let n = config.n_steps();
        let dt = self.ramp.t_a() / T::from_usize_lossy(n);
        let mut psi = psi_at_ta.clone();
        for i in (0..n).rev() {
            let t_end = T::from_usize_lossy(i + 1) * dt;
            psi = self.advance(&psi, t_end, -dt);
        }
        Ok(psi)
    }
}

/// Single step with an explicit profile and ramp.
pub fn step<T: Real>(
    psi: &Spinor<T>,
    t: T,
    dt: T,
    chi_a: &ChiProfile<T>,
    ramp: &RampSpec<T>,
    params: &DiracParams<T>,
) -> Result<Spinor<T>> {
    SplitStepper::new(chi_a, *ramp, *params).step(psi, t, dt)
}

/// Integrates the pulse era and returns the state at `t_a`.
pub fn run<T: Real>(
    psi_at_0: &Spinor<T>,
    chi_a: &ChiProfile<T>,
    ramp: &RampSpec<T>,
    config: IntegratorConfig,
    params: &DiracParams<T>,
) -> Result<Spinor<T>> {
    SplitStepper::new(chi_a, *ramp, *params).run(psi_at_0, config)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow<T: Real> {
    pub n_steps: usize,
    pub dt: T,
    pub l2_error: T,
    /// `log(e_prev / e) / log(dt_prev / dt)`; absent for the first row or when
    /// either error is at roundoff.
    pub order: Option<T>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceStudy<T: Real> {
    pub rows: Vec<ConvergenceRow<T>>,
    /// Least-squares slope of `log e` against `log dt`; absent when degenerate.
    pub fitted_order: Option<T>,
    /// All errors at roundoff level, so no order can be measured.
    pub degenerate: bool,
    /// Errors decrease strictly as `dt` shrinks.
    pub monotone: bool,
}

/// Errors below this are treated as roundoff in a convergence study.
pub const ROUNDOFF_ERROR: f64 = 1e-12;

/// Runs the integrator at each step count and compares against the closed-form
/// pulse `e^{-iqχ_a} e^{-iH0 t_a} ψ(0)`.
pub fn convergence_study<T: Real>(
    psi_at_0: &Spinor<T>,
    chi_a: &ChiProfile<T>,
    ramp: &RampSpec<T>,
    step_counts: &[usize],
    params: &DiracParams<T>,
) -> Result<ConvergenceStudy<T>> {
    if step_counts.is_empty() {
        return Err(Error::InvalidParameter("step_counts must not be empty".into()));
    }
    if step_counts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("step_counts must be strictly increasing".into()));
    }
    if (chi_a.t_a() - ramp.t_a()).magnitude() > T::epsilon() * ramp.t_a() {
        return Err(Error::InvalidParameter("gauge profile and ramp disagree on t_a".into()));
    }
    let reference = apply_pulse(psi_at_0, chi_a, params)?.state;
    let stepper = SplitStepper::new(chi_a, *ramp, *params);

    let mut rows: Vec<ConvergenceRow<T>> = Vec::with_capacity(step_counts.len());
    for &n in step_counts {
        let config = IntegratorConfig::new(n)?;
        let l2_error = stepper.run(psi_at_0, config)?.distance(&reference)?;
        let dt = ramp.t_a() / T::from_usize_lossy(n);
        let floor = T::lit(ROUNDOFF_ERROR);
        let order = rows.last().and_then(|prev| {
            (prev.l2_error > floor && l2_error > floor)
                .then(|| (prev.l2_error / l2_error).ln() / (prev.dt / dt).ln())
        });
        rows.push(ConvergenceRow { n_steps: n, dt, l2_error, order });
    }

    let floor = T::lit(ROUNDOFF_ERROR);
    let degenerate = rows.iter().all(|r| r.l2_error < floor);
    let monotone = rows.windows(2).all(|w| w[1].l2_error < w[0].l2_error);
    let fitted_order = if degenerate || rows.len() < 2 {
        None
    } else {
        let pts: Vec<(T, T)> = rows.iter().map(|r| (r.dt.ln(), r.l2_error.ln())).collect();
        Some(least_squares(&pts).0)
    };
    Ok(ConvergenceStudy { rows, fitted_order, degenerate, monotone })
}

/// Ordinary least-squares line `y = slope·x + intercept`.
pub fn least_squares<T: Real>(points: &[(T, T)]) -> (T, T) {
    let n = T::from_usize_lossy(points.len());
    let (sx, sy) = points.iter().fold((T::zero(), T::zero()), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (sxy, sxx) = points.iter().fold((T::zero(), T::zero()), |(a, b), &(x, y)| {
        (a + (x - mx) * (y - my), b + (x - mx) * (x - mx))
    });
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirac::{make_gaussian_packet, Branch};
    use crate::grid::{Grid, ScalarField};
    use crate::observables::{charge_density, current_density};

    fn params() -> DiracParams<f64> {
        DiracParams::new(1.0, 1.0).unwrap()
    }

    fn setup(n: usize) -> (Spinor<f64>, ChiProfile<f64>) {
        let g = Grid::new(n, 32.0).unwrap();
        let psi = make_gaussian_packet(&g, 1.0, 2.0, 16.0, Branch::Positive, &params()).unwrap();
        let chi = ScalarField::from_fn(&g, |x| 0.5 * (-(x - 15.0) * (x - 15.0) / 8.0).exp()).unwrap();
        (psi, ChiProfile::from_field(chi, 1.0).unwrap())
    }

    #[test]
    fn ramp_meets_switch_on_conditions() {
        let r = RampSpec::<f64>::new(2.0).unwrap();
        assert_eq!(r.value(0.0), 0.0);
        assert_eq!(r.rate(0.0), 0.0);
        assert!((r.value(2.0) - 1.0).abs() < 1e-15);
        assert!(r.rate(2.0).abs() < 1e-15);
        // s' matches a centred difference of s
        let h = 1e-6;
        let fd = (r.value(0.7 + h) - r.value(0.7 - h)) / (2.0 * h);
        assert!((fd - r.rate(0.7)).abs() < 1e-9);
        assert!(RampSpec::new(0.0).is_err());
    }

    #[test]
    fn config_guard() {
        assert!(IntegratorConfig::new(3).is_err());
        assert_eq!(IntegratorConfig::new(4).unwrap().n_steps(), 4);
    }

    #[test]
    fn zero_profile_reduces_to_free_evolution() {
        let (psi, chi) = setup(128);
        let zero = ChiProfile::zeros(psi.grid(), 1.0).unwrap();
        let p = params();
        let ramp = RampSpec::new(1.0).unwrap();
        let one = step(&psi, 0.25, 0.125, &zero, &ramp, &p).unwrap();
        assert!(one.distance(&free_propagate(&psi, 0.125, &p)).unwrap() < 1e-13);
        let out = run(&psi, &zero, &ramp, IntegratorConfig::new(16).unwrap(), &p).unwrap();
        assert!(out.distance(&free_propagate(&psi, 1.0, &p)).unwrap() < 1e-12);
        let study = convergence_study(&psi, &zero, &ramp, &[8, 16], &p).unwrap();
        assert!(study.degenerate);
        assert!(study.fitted_order.is_none());
        drop(chi);
    }

    #[test]
    fn step_preserves_norm_and_validates_interval() {
        let (psi, chi) = setup(128);
        let p = params();
        let ramp = RampSpec::new(1.0).unwrap();
        let next = step(&psi, 0.3, 0.1, &chi, &ramp, &p).unwrap();
        assert!((next.norm_sqr() - psi.norm_sqr()).abs() < 1e-14);
        assert!(step(&psi, 0.95, 0.1, &chi, &ramp, &p).is_err());
        assert!(step(&psi, -0.1, 0.1, &chi, &ramp, &p).is_err());
        assert!(step(&psi, 0.1, -0.05, &chi, &ramp, &p).is_err());
    }

    #[test]
    fn reverse_run_recovers_initial_state() {
        let (psi, chi) = setup(128);
        let p = params();
        let stepper = SplitStepper::new(&chi, RampSpec::new(1.0).unwrap(), p);
        let cfg = IntegratorConfig::new(64).unwrap();
        let forward = stepper.run(&psi, cfg).unwrap();
        let back = stepper.run_reverse(&forward, cfg).unwrap();
        assert!(back.distance(&psi).unwrap() < 1e-12);
    }

    #[test]
    fn integrator_converges_at_second_order() {
        let (psi, chi) = setup(128);
        let p = params();
        let ramp = RampSpec::new(1.0).unwrap();
        let study = convergence_study(&psi, &chi, &ramp, &[32, 64, 128, 256], &p).unwrap();
        assert!(study.monotone);
        let order = study.fitted_order.unwrap();
        assert!((order - 2.0).abs() < 0.2, "order {order}");
        for w in study.rows.windows(2) {
            let ratio = w[0].l2_error / w[1].l2_error;
            assert!((ratio / 4.0 - 1.0).abs() < 0.15, "ratio {ratio}");
        }
        assert!(convergence_study(&psi, &chi, &ramp, &[64, 32], &p).is_err());
    }

    #[test]
    fn densities_follow_free_evolution_mid_run() {
        let (psi, chi) = setup(128);
        let p = params();
        let ramp = RampSpec::new(1.0).unwrap();
        let stepper = SplitStepper::new(&chi, ramp, p);
        let mut worst: f64 = 0.0;
        stepper
            .run_observed(&psi, IntegratorConfig::new(256).unwrap(), |t, state| {
                let s = ramp.value(t);
                let shifted: Vec<f64> = chi.values().iter().map(|c| s * c).collect();
                let exact = free_propagate(&psi, t, &p).with_gauge_phase(&shifted, 1.0).unwrap();
                for (a, b) in [
                    (charge_density(state, &p), charge_density(&exact, &p)),
                    (current_density(state, &p), current_density(&exact, &p)),
                ] {
                    let d = a.values().iter().zip(b.values()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
                    worst = worst.max(d);
                }
            })
            .unwrap();
        assert!(worst < 1e-5, "density deviation {worst:e}");
    }

    #[test]
    fn least_squares_recovers_line() {
        let pts: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, 3.0 * i as f64 - 2.0)).collect();
        let (m, b) = least_squares(&pts);
        assert!((m - 3.0).abs() < 1e-14 && (b + 2.0).abs() < 1e-14);
    }
}
