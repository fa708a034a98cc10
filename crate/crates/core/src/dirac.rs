//! Free Dirac Hamiltonian on the periodic grid.
//!
//! The one-dimensional reduction uses two-component spinors with `α = σ1` and
//! `β = σ3`, so `H0 = -i σ1 ∂x + m σ3`. In momentum space every mode carries the
//! 2×2 block `H(k) = k σ1 + m σ3` with eigenvalues `±E(k)`, `E(k) = √(k² + m²)`.
//! The `k` used here is the derivative wavenumber, which is zero at Nyquist.
//!
//! The free-field energy is `∫ ψ† H0 ψ dx` with no renormalization offset: only
//! energy differences are ever compared, and a constant drops out of those.

use std::sync::Arc;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::{Grid, Sample, TAIL_CUTOFF};
use crate::scalar::Real;

/// Physical parameters of the free Dirac field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiracParams<T: Real> {
    mass: T,
    charge: T,
}

impl<T: Real> DiracParams<T> {
    /// `mass` must be strictly positive so the branch projectors are regular
    /// at every mode; `charge` must be nonzero.
    pub fn new(mass: T, charge: T) -> Result<Self> {
        if !(mass.is_finite() && mass > T::zero()) {
            return Err(Error::InvalidParameter(format!("mass must be positive, got {mass}")));
        }
        if !charge.is_finite() || charge == T::zero() {
            return Err(Error::InvalidParameter(format!(
                "charge must be nonzero and finite, got {charge}"
            )));
        }
        Ok(Self { mass, charge })
    }

    pub fn mass(&self) -> T {
        self.mass
    }

    pub fn charge(&self) -> T {
        self.charge
    }

    /// Dispersion `E(k) = √(k² + m²)`.
    pub fn dispersion(&self, k: T) -> T {
        (k * k + self.mass * self.mass).sqrt()
    }

    /// Normalized eigenvector of `H(k)` on the requested branch.
    pub fn eigenvector(&self, k: T, branch: Branch) -> [Complex<T>; 2] {
        let e = self.dispersion(k);
        let norm = (T::lit(2.0) * e * (e + self.mass)).sqrt();
        let (a, b) = match branch {
            Branch::Positive => (e + self.mass, k),
            Branch::Negative => (-k, e + self.mass),
        };
        [Complex::new(a / norm, T::zero()), Complex::new(b / norm, T::zero())]
    }
}

/// Energy branch: eigenspace of `H(k)` with eigenvalue `+E(k)` or `-E(k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Positive,
    Negative,
}

impl Branch {
    pub fn sign<T: Real>(self) -> T {
        match self {
            Branch::Positive => T::one(),
            Branch::Negative => -T::one(),
        }
    }
}

/// Two complex components per lattice site.
#[derive(Debug, Clone)]
pub struct Spinor<T: Real> {
    grid: Arc<Grid<T>>,
    upper: Vec<Complex<T>>,
    lower: Vec<Complex<T>>,
}

impl<T: Real> Spinor<T> {
    pub fn new(grid: Arc<Grid<T>>, upper: Vec<Complex<T>>, lower: Vec<Complex<T>>) -> Result<Self> {
        let n = grid.n_points();
        for len in [upper.len(), lower.len()] {
            if len != n {
                return Err(Error::SizeMismatch { expected: n, got: len });
            }
        }
        for component in [&upper, &lower] {
            if let Some(bad) = component.iter().position(|v| !v.is_finite_sample()) {
                return Err(Error::NonFinite(bad));
            }
        }
        Ok(Self { grid, upper, lower })
    }

    pub(crate) fn from_parts(grid: Arc<Grid<T>>, upper: Vec<Complex<T>>, lower: Vec<Complex<T>>) -> Self {
        debug_assert_eq!(upper.len(), grid.n_points());
        debug_assert_eq!(lower.len(), grid.n_points());
        Self { grid, upper, lower }
    }

    pub fn zeros(grid: &Arc<Grid<T>>) -> Self {
        let z = vec![Complex::new(T::zero(), T::zero()); grid.n_points()];
        Self::from_parts(Arc::clone(grid), z.clone(), z)
    }

    /// Spinor `(u(x_j), l(x_j))` sampled from a function of position.
    pub fn from_fn(grid: &Arc<Grid<T>>, f: impl Fn(T) -> [Complex<T>; 2]) -> Result<Self> {
        let (upper, lower) = (0..grid.n_points()).map(|j| f(grid.x(j))).map(|[u, l]| (u, l)).unzip();
        Self::new(Arc::clone(grid), upper, lower)
    }

    /// Builds a spinor from per-mode spectral coefficients `(ũ_n, l̃_n)` in
    /// transform layout.
    pub fn from_spectrum(
        grid: &Arc<Grid<T>>,
        mut upper: Vec<Complex<T>>,
        mut lower: Vec<Complex<T>>,
    ) -> Result<Self> {
        let n = grid.n_points();
        for len in [upper.len(), lower.len()] {
            if len != n {
                return Err(Error::SizeMismatch { expected: n, got: len });
            }
        }
        grid.inverse_in_place(&mut upper);
        grid.inverse_in_place(&mut lower);
        Self::new(Arc::clone(grid), upper, lower)
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn upper(&self) -> &[Complex<T>] {
        &self.upper
    }

    pub fn lower(&self) -> &[Complex<T>] {
        &self.lower
    }

    pub fn spectrum(&self) -> (Vec<Complex<T>>, Vec<Complex<T>>) {
        let mut u = self.upper.clone();
        let mut l = self.lower.clone();
        self.grid.forward_in_place(&mut u);
        self.grid.forward_in_place(&mut l);
        (u, l)
    }

    fn same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// `∫ self† other dx`.
    pub fn inner(&self, other: &Self) -> Result<Complex<T>> {
        self.same_grid(other)?;
        let sum = self
            .upper
            .iter()
            .zip(&other.upper)
            .chain(self.lower.iter().zip(&other.lower))
            .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a.conj() * b);
        Ok(sum * self.grid.spacing())
    }

    /// `∫ ψ† ψ dx`.
    pub fn norm_sqr(&self) -> T {
        let sum = self
            .upper
            .iter()
            .chain(&self.lower)
            .fold(T::zero(), |acc, z| acc + z.norm_sqr());
        sum * self.grid.spacing()
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    /// L² distance `‖self − other‖`.
    pub fn distance(&self, other: &Self) -> Result<T> {
        self.same_grid(other)?;
        let sum = self
            .upper
            .iter()
            .zip(&other.upper)
            .chain(self.lower.iter().zip(&other.lower))
            .fold(T::zero(), |acc, (a, b)| acc + (a - b).norm_sqr());
        Ok((sum * self.grid.spacing()).sqrt())
    }

    /// Largest pointwise component difference.
    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        self.same_grid(other)?;
        Ok(self
            .upper
            .iter()
            .zip(&other.upper)
            .chain(self.lower.iter().zip(&other.lower))
            .fold(T::zero(), |m, (a, b)| m.max((a - b).norm())))
    }

    pub fn scaled(&self, factor: Complex<T>) -> Self {
        Self::from_parts(
            Arc::clone(&self.grid),
            self.upper.iter().map(|z| z * factor).collect(),
            self.lower.iter().map(|z| z * factor).collect(),
        )
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: Complex<T>, other: &Self, b: Complex<T>) -> Result<Self> {
        self.same_grid(other)?;
        let mix = |x: &[Complex<T>], y: &[Complex<T>]| -> Vec<Complex<T>> {
            x.iter().zip(y).map(|(p, q)| p * a + q * b).collect()
        };
        Ok(Self::from_parts(
            Arc::clone(&self.grid),
            mix(&self.upper, &other.upper),
            mix(&self.lower, &other.lower),
        ))
    }

    /// Multiplies both components at site `j` by `e^{-i q χ_j}`.
    pub fn with_gauge_phase(&self, chi: &[T], charge: T) -> Result<Self> {
        if chi.len() != self.grid.n_points() {
            return Err(Error::SizeMismatch { expected: self.grid.n_points(), got: chi.len() });
        }
        let phases: Vec<Complex<T>> =
            chi.iter().map(|&c| Complex::from_polar(T::one(), -charge * c)).collect();
        let apply = |v: &[Complex<T>]| -> Vec<Complex<T>> {
            v.iter().zip(&phases).map(|(z, p)| z * p).collect()
        };
        Ok(Self::from_parts(Arc::clone(&self.grid), apply(&self.upper), apply(&self.lower)))
    }

    /// Fraction of spectral power at `|k| ≥ (2/3) π/a`, both components together.
    pub fn tail_fraction(&self) -> Result<T> {
        self.grid.tail_fraction_of(&[&self.upper, &self.lower])
    }

    /// Applies `op(k, [ũ, l̃])` to every spectral mode and transforms back.
    pub(crate) fn map_modes(&self, op: impl Fn(T, [Complex<T>; 2]) -> [Complex<T>; 2]) -> Self {
        let (mut u, mut l) = self.spectrum();
        for ((a, b), &k) in u.iter_mut().zip(l.iter_mut()).zip(self.grid.derivative_wavenumbers()) {
            let [na, nb] = op(k, [*a, *b]);
            *a = na;
            *b = nb;
        }
        self.grid.inverse_in_place(&mut u);
        self.grid.inverse_in_place(&mut l);
        Self::from_parts(Arc::clone(&self.grid), u, l)
    }
}

/// Total free-field energy and its split over the two energy branches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport<T: Real> {
    pub total: T,
    pub positive_branch: T,
    pub negative_branch: T,
}

#[inline]
fn h_block<T: Real>(k: T, m: T, [a, b]: [Complex<T>; 2]) -> [Complex<T>; 2] {
    [a * m + b * k, a * k - b * m]
}

/// `H0 ψ`, evaluated mode by mode with `H(k) = k σ1 + m σ3`.
pub fn h0_apply<T: Real>(psi: &Spinor<T>, params: &DiracParams<T>) -> Spinor<T> {
    let m = params.mass();
    psi.map_modes(|k, ab| h_block(k, m, ab))
}

/// Exact free evolution `e^{-i H0 t} ψ`; any real `t`, including negative.
///
/// Per mode, `e^{-iH(k)t} = cos(Et) I − i sin(Et) H(k)/E`.
pub fn free_propagate<T: Real>(psi: &Spinor<T>, t: T, params: &DiracParams<T>) -> Spinor<T> {
    let m = params.mass();
    psi.map_modes(|k, ab| {
        let e = params.dispersion(k);
        let (s, c) = (e * t).sin_cos();
        let [ha, hb] = h_block(k, m, ab);
        let f = Complex::new(T::zero(), -s / e);
        [ab[0] * c + ha * f, ab[1] * c + hb * f]
    })
}

/// Relative tolerance on the imaginary part of `∫ψ†H0ψ`.
fn hermitian_tolerance<T: Real>() -> T {
    T::epsilon() * T::lit(1e4)
}

/// Free-field energy `Re ∫ ψ† (H0 ψ) dx`.
///
/// The imaginary part must stay below `~1e-12` (for `f64`) of the integrand's
/// absolute mass; anything larger means the `H0` action is corrupted.
pub fn energy<T: Real>(psi: &Spinor<T>, params: &DiracParams<T>) -> Result<T> {
    quadratic_form(psi, &h0_apply(psi, params))
}

/// `Re ∫ ψ† h dx` where `h` is the (supposedly Hermitian) action on `ψ`.
fn quadratic_form<T: Real>(psi: &Spinor<T>, h: &Spinor<T>) -> Result<T> {
    let mut sum = Complex::new(T::zero(), T::zero());
    let mut scale = T::zero();
    for (a, b) in psi.upper.iter().zip(&h.upper).chain(psi.lower.iter().zip(&h.lower)) {
        let z = a.conj() * b;
        sum = sum + z;
        scale = scale + z.norm();
    }
    let a = psi.grid.spacing();
    let (re, im, scale) = (sum.re * a, sum.im * a, scale * a);
    let tolerance = hermitian_tolerance::<T>() * scale.max(re.magnitude());
    if im.magnitude() > tolerance {
        return Err(Error::NonHermitian { imag: im.as_f64(), tolerance: tolerance.as_f64() });
    }
    Ok(re)
}

/// Branch projectors `P±(k) = ½ (I ± H(k)/E(k))` applied to one mode.
#[inline]
fn project_mode<T: Real>(k: T, params: &DiracParams<T>, ab: [Complex<T>; 2], branch: Branch) -> [Complex<T>; 2] {
    let e = params.dispersion(k);
    let half = T::lit(0.5);
    let s = branch.sign::<T>() / e;
    let [ha, hb] = h_block(k, params.mass(), ab);
    [(ab[0] + ha * s) * half, (ab[1] + hb * s) * half]
}

/// Projects `ψ` onto one energy branch.
pub fn project<T: Real>(psi: &Spinor<T>, branch: Branch, params: &DiracParams<T>) -> Spinor<T> {
    psi.map_modes(|k, ab| project_mode(k, params, ab, branch))
}

/// Splits the free-field energy into branch contributions. The cross terms
/// vanish because `P±` commute with `H0` and are mutually orthogonal.
pub fn energy_split<T: Real>(psi: &Spinor<T>, params: &DiracParams<T>) -> EnergyReport<T> {
    let (u, l) = psi.spectrum();
    let mut pos = T::zero();
    let mut neg = T::zero();
    for ((a, b), &k) in u.iter().zip(&l).zip(psi.grid.derivative_wavenumbers()) {
        let e = params.dispersion(k);
        let [pa, pb] = project_mode(k, params, [*a, *b], Branch::Positive);
        let [na, nb] = project_mode(k, params, [*a, *b], Branch::Negative);
        pos = pos + e * (pa.norm_sqr() + pb.norm_sqr());
        neg = neg - e * (na.norm_sqr() + nb.norm_sqr());
    }
    let a = psi.grid.spacing();
    let (positive_branch, negative_branch) = (pos * a, neg * a);
    EnergyReport { total: positive_branch + negative_branch, positive_branch, negative_branch }
}

/// Normalized single-mode eigenstate `u±(k_n) e^{i k_n x} / √L`.
///
/// `mode` is the integer mode number in `[-N/2, N/2)`.
pub fn make_plane_wave<T: Real>(
    grid: &Arc<Grid<T>>,
    mode: i64,
    branch: Branch,
    params: &DiracParams<T>,
) -> Result<Spinor<T>> {
    let slot = grid.slot_of_mode(mode).ok_or_else(|| {
        Error::InvalidParameter(format!(
            "mode {mode} outside [-{n}, {n})",
            n = grid.n_points() / 2
        ))
    })?;
    let k = grid.derivative_wavenumbers()[slot];
    let [eu, el] = params.eigenvector(k, branch);
    // Unit L² norm: one spectral coefficient of magnitude 1/√a.
    let amp = Complex::new(T::one() / grid.spacing().sqrt(), T::zero());
    let zero = Complex::new(T::zero(), T::zero());
    let mut u = vec![zero; grid.n_points()];
    let mut l = vec![zero; grid.n_points()];
    u[slot] = eu * amp;
    l[slot] = el * amp;
    Spinor::from_spectrum(grid, u, l)
}

/// Branch-projected Gaussian wavepacket with unit norm.
///
/// The spectral envelope is `exp(-σ_x² (k − k0)²) e^{-i k x0}` times the branch
/// eigenvector, so `|ψ|²` has position width `σ_x` around `x0`. Requires
/// `σ_x ≥ 4a` and `|k0| ≤ (2/3) π/a`.
pub fn make_gaussian_packet<T: Real>(
    grid: &Arc<Grid<T>>,
    k0: T,
    sigma_x: T,
    x0: T,
    branch: Branch,
    params: &DiracParams<T>,
) -> Result<Spinor<T>> {
    if !(sigma_x.is_finite() && sigma_x >= T::lit(4.0) * grid.spacing()) {
        return Err(Error::UnderResolved(format!(
            "sigma_x = {sigma_x} is below 4 grid spacings ({})",
            T::lit(4.0) * grid.spacing()
        )));
    }
    let k_limit = T::lit(TAIL_CUTOFF) * grid.max_momentum();
    if !(k0.is_finite() && k0.magnitude() <= k_limit) {
        return Err(Error::UnderResolved(format!("|k0| = {k0} exceeds (2/3)π/a = {k_limit}")));
    }
    if !x0.is_finite() {
        return Err(Error::InvalidParameter(format!("x0 must be finite, got {x0}")));
    }

    let (u, l): (Vec<_>, Vec<_>) = grid
        .momenta()
        .iter()
        .zip(grid.derivative_wavenumbers())
        .map(|(&k, &k_eff)| {
            let dk = k - k0;
            let envelope = Complex::from_polar((-sigma_x * sigma_x * dk * dk).exp(), -k * x0);
            let [eu, el] = params.eigenvector(k_eff, branch);
            (eu * envelope, el * envelope)
        })
        .unzip();
    let psi = Spinor::from_spectrum(grid, u, l)?;
    let norm = psi.norm();
    if norm <= T::zero() {
        return Err(Error::ZeroField);
    }
    Ok(psi.scaled(Complex::new(T::one() / norm, T::zero())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> DiracParams<f64> {
        DiracParams::new(1.0, 1.0).unwrap()
    }

    fn c(re: f64) -> Complex<f64> {
        Complex::new(re, 0.0)
    }

    #[test]
    fn params_are_validated() {
        assert!(DiracParams::new(0.0, 1.0).is_err());
        assert!(DiracParams::new(-1.0, 1.0).is_err());
        assert!(DiracParams::new(1.0, 0.0).is_err());
        assert!(DiracParams::new(1.0, f64::NAN).is_err());
        assert!(DiracParams::new(2.0, -0.5).is_ok());
    }

    #[test]
    fn mass_term_at_rest() {
        let g = Grid::new(16, 4.0).unwrap();
        let psi = Spinor::from_fn(&g, |_| [c(1.0), c(0.0)]).unwrap();
        let h = h0_apply(&psi, &params());
        assert!(psi.max_abs_diff(&h).unwrap() < 1e-14);
    }

    #[test]
    fn plane_wave_energies_at_rest() {
        let g = Grid::new(32, 8.0).unwrap();
        let p = params();
        let up = make_plane_wave(&g, 0, Branch::Positive, &p).unwrap();
        let down = make_plane_wave(&g, 0, Branch::Negative, &p).unwrap();
        assert!((up.norm_sqr() - 1.0).abs() < 1e-14);
        assert!((energy(&up, &p).unwrap() - 1.0).abs() < 1e-14);
        assert!((energy(&down, &p).unwrap() + 1.0).abs() < 1e-14);
        assert_eq!(up.tail_fraction().unwrap(), 0.0);
    }

    #[test]
    fn plane_wave_is_eigenstate() {
        let g = Grid::new(32, 8.0).unwrap();
        let p = params();
        for mode in [-5, -1, 3, 7] {
            for branch in [Branch::Positive, Branch::Negative] {
                let psi = make_plane_wave(&g, mode, branch, &p).unwrap();
                let k = g.momenta()[g.slot_of_mode(mode).unwrap()];
                let e = branch.sign::<f64>() * p.dispersion(k);
                let h = h0_apply(&psi, &p);
                assert!(h.max_abs_diff(&psi.scaled(c(e))).unwrap() < 1e-13);
                let t = 0.37;
                let evolved = free_propagate(&psi, t, &p);
                let phase = Complex::from_polar(1.0, -e * t);
                assert!(evolved.max_abs_diff(&psi.scaled(phase)).unwrap() < 1e-13);
            }
        }
        assert!(make_plane_wave(&g, 16, Branch::Positive, &p).is_err());
    }

    #[test]
    fn propagation_identity_and_reversal() {
        let g = Grid::new(64, 16.0).unwrap();
        let p = params();
        let psi = make_gaussian_packet(&g, 1.0, 1.0, 8.0, Branch::Positive, &p).unwrap();
        assert!(free_propagate(&psi, 0.0, &p).max_abs_diff(&psi).unwrap() < 1e-15);
        let back = free_propagate(&free_propagate(&psi, 2.3, &p), -2.3, &p);
        assert!(back.distance(&psi).unwrap() < 1e-12);
    }

    #[test]
    fn equal_superposition_splits_evenly() {
        let g = Grid::new(16, 4.0).unwrap();
        let p = params();
        let up = make_plane_wave(&g, 0, Branch::Positive, &p).unwrap();
        let down = make_plane_wave(&g, 0, Branch::Negative, &p).unwrap();
        let s = 0.5f64.sqrt();
        let mix = up.combine(c(s), &down, c(s)).unwrap();
        let r = energy_split(&mix, &p);
        assert!((r.positive_branch - 0.5).abs() < 1e-14);
        assert!((r.negative_branch + 0.5).abs() < 1e-14);
        assert!(r.total.abs() < 1e-14);
    }

    #[test]
    fn gaussian_packet_is_normalized_and_single_branch() {
        let g = Grid::new(256, 32.0).unwrap();
        let p = params();
        let psi = make_gaussian_packet(&g, 1.0, 2.0, 16.0, Branch::Positive, &p).unwrap();
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
        let r = energy_split(&psi, &p);
        assert!(r.negative_branch.abs() < 1e-12);
        assert!((r.total - energy(&psi, &p).unwrap()).abs() < 1e-11 * r.total.abs());
        assert!(psi.tail_fraction().unwrap() < 1e-10);
    }

    #[test]
    fn packet_guards() {
        let g = Grid::new(64, 16.0).unwrap();
        let p = params();
        assert!(matches!(
            make_gaussian_packet(&g, 0.0, 0.9, 8.0, Branch::Positive, &p),
            Err(Error::UnderResolved(_))
        ));
        let k_too_big = 0.7 * g.max_momentum();
        assert!(matches!(
            make_gaussian_packet(&g, k_too_big, 2.0, 8.0, Branch::Positive, &p),
            Err(Error::UnderResolved(_))
        ));
    }

    #[test]
    fn energy_flags_non_hermitian_action() {
        let g = Grid::new(16, 4.0).unwrap();
        let psi = make_plane_wave(&g, 1, Branch::Positive, &params()).unwrap();
        let corrupted = psi.scaled(Complex::new(1.0, 1e-6));
        assert!(matches!(quadratic_form(&psi, &corrupted), Err(Error::NonHermitian { .. })));
        assert!(quadratic_form(&psi, &psi).is_ok());
    }
}
