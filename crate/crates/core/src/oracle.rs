//! Brute-force dense-matrix oracle for small grids.
//!
//! `H0` is assembled as an explicit `2N × 2N` Hermitian matrix indexed by
//! `2·site + component`. The derivative matrix is built by direct summation of
//! `i k_n e^{i k_n (x_j − x_l)} / N` over modes (Nyquist excluded), the same
//! convention the FFT path uses but with no FFT involved. Propagators come from
//! a full Hermitian eigendecomposition.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, RealField};
use num_complex::Complex;
use num_traits::Float;

use crate::dirac::{h0_apply, DiracParams, Spinor};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::observables::current_density;
use crate::pulse::ChiProfile;
use crate::scalar::Real;

/// Largest grid the dense oracle accepts.
pub const MAX_DENSE_POINTS: usize = 64;

/// Scalars usable by the dense oracle.
pub trait OracleReal: Real + RealField {}
impl<T: Real + RealField> OracleReal for T {}

#[derive(Debug, Clone)]
pub struct DenseOperator<T: OracleReal> {
    grid: Arc<Grid<T>>,
    matrix: DMatrix<Complex<T>>,
}

fn czero<T: OracleReal>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

fn check_size<T: OracleReal>(grid: &Grid<T>) -> Result<()> {
    if grid.n_points() > MAX_DENSE_POINTS {
        return Err(Error::GridTooLarge { max: MAX_DENSE_POINTS, got: grid.n_points() });
    }
    Ok(())
}

/// Flattens a spinor as `[u_0, l_0, u_1, l_1, ..]`.
pub fn flatten<T: OracleReal>(psi: &Spinor<T>) -> DVector<Complex<T>> {
    let n = psi.grid().n_points();
    DVector::from_fn(2 * n, |i, _| if i % 2 == 0 { psi.upper()[i / 2] } else { psi.lower()[i / 2] })
}

pub fn unflatten<T: OracleReal>(grid: &Arc<Grid<T>>, v: &DVector<Complex<T>>) -> Result<Spinor<T>> {
    let n = grid.n_points();
    if v.len() != 2 * n {
        return Err(Error::SizeMismatch { expected: 2 * n, got: v.len() });
    }
    let upper = (0..n).map(|j| v[2 * j]).collect();
    let lower = (0..n).map(|j| v[2 * j + 1]).collect();
    Spinor::new(Arc::clone(grid), upper, lower)
}

/// `N × N` spectral derivative matrix by direct mode summation.
pub fn dense_derivative<T: OracleReal>(grid: &Grid<T>) -> Result<DMatrix<Complex<T>>> {
    check_size(grid)?;
    let n = grid.n_points();
    let inv_n = T::one() / T::from_usize_lossy(n);
    let ks = grid.derivative_wavenumbers();
    Ok(DMatrix::from_fn(n, n, |j, l| {
        let dx = grid.x(j) - grid.x(l);
        ks.iter().fold(czero(), |acc, &k| {
            acc + Complex::new(T::zero(), k * inv_n) * Complex::from_polar(T::one(), k * dx)
        })
    }))
}

/// Dense `H0 = -i σ1 ⊗ D + m σ3 ⊗ I`.
pub fn dense_h0<T: OracleReal>(grid: &Arc<Grid<T>>, params: &DiracParams<T>) -> Result<DenseOperator<T>> {
    let d = dense_derivative(grid)?;
    let n = grid.n_points();
    let minus_i = Complex::new(T::zero(), -T::one());
    let m = params.mass();
    let mut h = DMatrix::from_element(2 * n, 2 * n, czero());
    for j in 0..n {
        for l in 0..n {
            let off = minus_i * d[(j, l)];
            h[(2 * j, 2 * l + 1)] = off;
            h[(2 * j + 1, 2 * l)] = off;
        }
        h[(2 * j, 2 * j)] = Complex::new(m, T::zero());
        h[(2 * j + 1, 2 * j + 1)] = Complex::new(-m, T::zero());
    }
    Ok(DenseOperator { grid: Arc::clone(grid), matrix: h })
}

impl<T: OracleReal> DenseOperator<T> {
    pub fn from_matrix(grid: &Arc<Grid<T>>, matrix: DMatrix<Complex<T>>) -> Result<Self> {
        check_size(grid)?;
        let dim = 2 * grid.n_points();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::SizeMismatch { expected: dim, got: matrix.nrows() });
        }
        Ok(Self { grid: Arc::clone(grid), matrix })
    }

    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.matrix
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    /// Largest entry of `|M − M†|`.
    pub fn hermiticity_residual(&self) -> T {
        let m = &self.matrix;
        let mut worst = T::zero();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                worst = Float::max(worst, (m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Largest entry of `|U† U − I|`.
    pub fn unitarity_residual(&self) -> T {
        let prod = self.matrix.adjoint() * &self.matrix;
        max_deviation_from_identity(&prod)
    }

    pub fn apply(&self, psi: &Spinor<T>) -> Result<Spinor<T>> {
        if psi.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        unflatten(&self.grid, &(&self.matrix * flatten(psi)))
    }

    /// `⟨ψ| M |ψ⟩ · a`, the quadrature-weighted quadratic form.
    pub fn expectation(&self, psi: &Spinor<T>) -> Result<Complex<T>> {
        if psi.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let v = flatten(psi);
        let mv = &self.matrix * &v;
        let sum = v.iter().zip(mv.iter()).fold(czero(), |acc, (a, b)| acc + a.conj() * b);
        Ok(sum * self.grid.spacing())
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self { grid: Arc::clone(&self.grid), matrix: &self.matrix * &other.matrix }
    }

    pub fn adjoint(&self) -> Self {
        Self { grid: Arc::clone(&self.grid), matrix: self.matrix.adjoint() }
    }

    /// Diagonal operator multiplying both components at site `j` by `phase_j`.
    pub fn site_diagonal(grid: &Arc<Grid<T>>, phases: &[Complex<T>]) -> Result<Self> {
        check_size(grid)?;
        let n = grid.n_points();
        if phases.len() != n {
            return Err(Error::SizeMismatch { expected: n, got: phases.len() });
        }
        let mut m = DMatrix::from_element(2 * n, 2 * n, czero());
        for (j, &p) in phases.iter().enumerate() {
            m[(2 * j, 2 * j)] = p;
            m[(2 * j + 1, 2 * j + 1)] = p;
        }
        Ok(Self { grid: Arc::clone(grid), matrix: m })
    }

    /// Eigenvalues of a Hermitian operator, ascending.
    pub fn eigenvalues(&self) -> Vec<T> {
        let mut ev: Vec<T> = self.matrix.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
        ev
    }
}

fn max_deviation_from_identity<T: OracleReal>(m: &DMatrix<Complex<T>>) -> T {
    let mut worst = T::zero();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let target = if i == j { Complex::new(T::one(), T::zero()) } else { czero() };
            worst = Float::max(worst, (m[(i, j)] - target).norm());
        }
    }
    worst
}

/// `e^{-iHt}` by Hermitian eigendecomposition `H = V Λ V†`.
pub fn dense_propagator<T: OracleReal>(h0: &DenseOperator<T>, t: T) -> DenseOperator<T> {
    let eig = h0.matrix.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let phases = DMatrix::from_diagonal(&DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&lambda| Complex::from_polar(T::one(), -lambda * t)),
    ));
    DenseOperator { grid: Arc::clone(&h0.grid), matrix: v * phases * v.adjoint() }
}

/// Dense free-field energy `Re a ψ† H ψ`.
pub fn dense_energy<T: OracleReal>(h0: &DenseOperator<T>, psi: &Spinor<T>) -> Result<T> {
    Ok(h0.expectation(psi)?.re)
}

fn gauge_phases<T: OracleReal>(chi: &[T], charge: T) -> Vec<Complex<T>> {
    chi.iter().map(|&c| Complex::from_polar(T::one(), -charge * c)).collect()
}

/// Residual of the gauge commutation identity
/// `H0(e^{-iqχ} ψ) = e^{-iqχ} (H0 − q ∂xχ σ1) ψ`, relative to `‖ψ‖`.
///
/// Exact in the continuum; on the grid it measures the aliasing of the
/// pointwise phase product. Uses the spectral `H0` so grids above
/// [`MAX_DENSE_POINTS`] can be refined.
pub fn gauge_commutation_residual<T: Real>(
    chi: &ChiProfile<T>,
    psi: &Spinor<T>,
    params: &DiracParams<T>,
) -> Result<T> {
    if psi.grid() != chi.grid() {
        return Err(Error::GridMismatch);
    }
    let q = params.charge();
    let phased = psi.with_gauge_phase(chi.values(), q)?;
    let lhs = h0_apply(&phased, params);

    let h = h0_apply(psi, params);
    let grad = chi.gradient();
    let (upper, lower): (Vec<_>, Vec<_>) = h
        .upper()
        .iter()
        .zip(h.lower())
        .zip(psi.upper().iter().zip(psi.lower()))
        .zip(grad.values())
        .map(|(((hu, hl), (u, l)), &g)| (hu - l * (q * g), hl - u * (q * g)))
        .unzip();
    let inner = Spinor::new(Arc::clone(psi.grid()), upper, lower)?;
    let rhs = inner.with_gauge_phase(chi.values(), q)?;
    Ok(lhs.distance(&rhs)? / psi.norm())
}

/// Energies of a pulsed state computed three ways.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyChain<T> {
    /// Quadratic form of the state at `t_b`, after post-pulse free evolution.
    pub direct: T,
    /// Conjugated operator `U(t_a)† Φ† H Φ U(t_a)` sandwiched on `ψ(0)`.
    pub conjugated: T,
    /// Initial energy minus `∫ J(ψ0(t_a)) ∂xχ dx`.
    pub current_form: T,
}

impl<T: Real> EnergyChain<T> {
    /// Largest pairwise discrepancy over `max(1, |values|)`.
    pub fn residual(&self) -> T {
        let v = [self.direct, self.conjugated, self.current_form];
        let mut spread = T::zero();
        let mut scale = T::one();
        for (i, a) in v.iter().enumerate() {
            scale = scale.max(a.magnitude());
            for b in &v[i + 1..] {
                spread = spread.max((*a - *b).magnitude());
            }
        }
        spread / scale
    }
}

/// Computes [`EnergyChain`] densely for a pulse of profile `chi` ending at
/// `chi.t_a()`, observed at `t_b`.
pub fn energy_chain<T: OracleReal>(
    psi_at_0: &Spinor<T>,
    chi: &ChiProfile<T>,
    t_b: T,
    params: &DiracParams<T>,
) -> Result<EnergyChain<T>> {
    let grid = psi_at_0.grid();
    if grid != chi.grid() {
        return Err(Error::GridMismatch);
    }
    let h = dense_h0(grid, params)?;
    let t_a = chi.t_a();
    let u_a = dense_propagator(&h, t_a);
    let u_rest = dense_propagator(&h, t_b - t_a);
    let phase = DenseOperator::site_diagonal(grid, &gauge_phases(chi.values(), params.charge()))?;

    let after = u_rest.apply(&phase.apply(&u_a.apply(psi_at_0)?)?)?;
    let direct = dense_energy(&h, &after)?;

    let sandwich = u_a.adjoint().compose(&phase.adjoint()).compose(&h).compose(&phase).compose(&u_a);
    let conjugated = sandwich.expectation(psi_at_0)?.re;

    let d = dense_derivative(grid)?;
    let chi_vec = DVector::from_iterator(chi.values().len(), chi.values().iter().map(|&c| Complex::new(c, T::zero())));
    let grad = &d * chi_vec;
    let psi0_ta = u_a.apply(psi_at_0)?;
    let j = current_density(&psi0_ta, params);
    let flux = j.values().iter().zip(grad.iter()).fold(T::zero(), |acc, (&jv, g)| acc + jv * g.re);
    let current_form = dense_energy(&h, psi_at_0)? - flux * grid.spacing();

    Ok(EnergyChain { direct, conjugated, current_form })
}

/// `energy_chain(..).residual()`.
pub fn energy_chain_residual<T: OracleReal>(
    psi_at_0: &Spinor<T>,
    chi: &ChiProfile<T>,
    t_b: T,
    params: &DiracParams<T>,
) -> Result<T> {
    Ok(energy_chain(psi_at_0, chi, t_b, params)?.residual())
}

/// Dense recomputation of a current-divergence extraction run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseExtraction<T> {
    pub energy_before: T,
    pub energy_after: T,
    pub delta_measured: T,
    pub delta_divergence: T,
    pub delta_quadratic: T,
}

/// Recomputes the extraction pipeline with dense matrices only: dense
/// propagators, dense derivative for `∂x J` and `χ`, dense energies.
pub fn dense_extraction<T: OracleReal>(
    psi_at_0: &Spinor<T>,
    f: T,
    t_a: T,
    t_b: T,
    params: &DiracParams<T>,
) -> Result<DenseExtraction<T>> {
    let grid = psi_at_0.grid();
    let h = dense_h0(grid, params)?;
    let d = dense_derivative(grid)?;
    let psi0_ta = dense_propagator(&h, t_a).apply(psi_at_0)?;
    let j = current_density(&psi0_ta, params);
    let jv = DVector::from_iterator(j.values().len(), j.values().iter().map(|&v| Complex::new(v, T::zero())));
    let div: Vec<T> = (&d * jv).iter().map(|z| z.re).collect();
    let chi: Vec<T> = div.iter().map(|&v| -f * v).collect();

    let pulsed = psi0_ta.with_gauge_phase(&chi, params.charge())?;
    let after = dense_propagator(&h, t_b - t_a).apply(&pulsed)?;
    let energy_before = dense_energy(&h, psi_at_0)?;
    let energy_after = dense_energy(&h, &after)?;
    let a = grid.spacing();
    let delta_divergence = chi.iter().zip(&div).fold(T::zero(), |acc, (&c, &v)| acc + c * v) * a;
    let delta_quadratic = -f * div.iter().fold(T::zero(), |acc, &v| acc + v * v) * a;
    Ok(DenseExtraction {
        energy_before,
        energy_after,
        delta_measured: energy_after - energy_before,
        delta_divergence,
        delta_quadratic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirac::{free_propagate, make_gaussian_packet, make_plane_wave, Branch};
    use crate::grid::ScalarField;

    fn params() -> DiracParams<f64> {
        DiracParams::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn eigenvalues_follow_dispersion() {
        let g = Grid::new(8, 8.0).unwrap();
        let p = params();
        let h = dense_h0(&g, &p).unwrap();
        assert!(h.hermiticity_residual() < 1e-13);
        let mut expected: Vec<f64> = g
            .derivative_wavenumbers()
            .iter()
            .flat_map(|&k| [p.dispersion(k), -p.dispersion(k)])
            .collect();
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in h.eigenvalues().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn dense_action_matches_spectral() {
        let g = Grid::new(16, 6.0).unwrap();
        let p = params();
        let h = dense_h0(&g, &p).unwrap();
        let psi = make_plane_wave(&g, 3, Branch::Positive, &p).unwrap();
        let e = p.dispersion(g.momenta()[3]);
        assert!(h.apply(&psi).unwrap().max_abs_diff(&psi.scaled(Complex::new(e, 0.0))).unwrap() < 1e-11);
        let packet = make_gaussian_packet(&g, 0.5, 1.5, 3.0, Branch::Negative, &p).unwrap();
        assert!(h.apply(&packet).unwrap().max_abs_diff(&h0_apply(&packet, &p)).unwrap() < 1e-12);
    }

    #[test]
    fn propagator_properties() {
        let g = Grid::new(16, 6.0).unwrap();
        let p = params();
        let h = dense_h0(&g, &p).unwrap();
        assert!(max_deviation_from_identity(dense_propagator(&h, 0.0).matrix()) < 1e-13);
        let u = dense_propagator(&h, 1.7);
        assert!(u.unitarity_residual() < 1e-11);
        let back = u.compose(&dense_propagator(&h, -1.7));
        assert!(max_deviation_from_identity(back.matrix()) < 1e-11);
        let psi = make_gaussian_packet(&g, 0.5, 1.5, 3.0, Branch::Positive, &p).unwrap();
        let diff = u.apply(&psi).unwrap().max_abs_diff(&free_propagate(&psi, 1.7, &p)).unwrap();
        assert!(diff < 1e-10);
    }

    #[test]
    fn guard_against_large_grids() {
        let g = Grid::new(128, 6.0).unwrap();
        assert_eq!(
            dense_h0(&g, &params()).err(),
            Some(Error::GridTooLarge { max: MAX_DENSE_POINTS, got: 128 })
        );
    }

    #[test]
    fn constant_chi_commutes_exactly() {
        let g = Grid::new(32, 8.0).unwrap();
        let p = params();
        let psi = make_gaussian_packet(&g, 0.5, 1.0, 4.0, Branch::Positive, &p).unwrap();
        let chi = ChiProfile::new(Arc::clone(&g), vec![1.3; 32], 1.0).unwrap();
        assert!(gauge_commutation_residual(&chi, &psi, &p).unwrap() < 1e-13);
    }

    #[test]
    fn energy_chain_with_zero_chi() {
        let g = Grid::new(16, 6.0).unwrap();
        let p = params();
        let psi = make_gaussian_packet(&g, 0.5, 1.5, 3.0, Branch::Positive, &p).unwrap();
        let chi = ChiProfile::zeros(&g, 0.5).unwrap();
        let chain = energy_chain(&psi, &chi, 1.0, &p).unwrap();
        let e0 = crate::dirac::energy(&psi, &p).unwrap();
        for v in [chain.direct, chain.conjugated, chain.current_form] {
            assert!((v - e0).abs() < 1e-12);
        }
    }

    #[test]
    fn energy_chain_smooth_chi() {
        let g = Grid::new(32, 8.0).unwrap();
        let p = params();
        let psi = make_gaussian_packet(&g, 0.5, 1.0, 4.0, Branch::Positive, &p).unwrap();
        let w = 2.0 * std::f64::consts::PI / 8.0;
        let chi = ChiProfile::from_field(
            ScalarField::from_fn(&g, |x| 0.3 * (w * x).sin() - 0.2 * (2.0 * w * x + 0.4).cos()).unwrap(),
            0.6,
        )
        .unwrap();
        assert!(energy_chain_residual(&psi, &chi, 1.4, &p).unwrap() < 1e-9);
    }
}
