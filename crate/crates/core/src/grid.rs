//! Periodic 1D grid with unitary Fourier transforms, spectral derivatives and
//! rectangle-rule quadrature.
//!
//! Sample `j` sits at `x_j = j * a` with `a = L / N`. Spectral coefficients use
//! the standard FFT layout: slot `j` holds mode `n = j` for `j < N/2` and
//! `n = j - N` otherwise, so the momentum table reads
//! `[0, 1, .., N/2 - 1, -N/2, .., -1] * 2π/L`.
//!
//! The transform is unitary, `ψ̃_n = N^{-1/2} Σ_j ψ_j e^{-i k_n x_j}`, so
//! Parseval holds without extra factors. The boundary is periodic, which makes
//! the integral of any spectral derivative vanish to roundoff.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Smallest grid accepted by [`Grid::new`].
pub const MIN_POINTS: usize = 8;

/// Fraction of the Nyquist wavenumber above which spectral power counts as tail.
pub const TAIL_CUTOFF: f64 = 2.0 / 3.0;

pub struct Grid<T: Real> {
    n_points: usize,
    length: T,
    spacing: T,
    momenta: Vec<T>,
    // Same as `momenta` except the Nyquist slot, which is zero.
    derivative_wavenumbers: Vec<T>,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> fmt::Debug for Grid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n_points", &self.n_points)
            .field("length", &self.length)
            .field("spacing", &self.spacing)
            .finish()
    }
}

impl<T: Real> PartialEq for Grid<T> {
    fn eq(&self, other: &Self) -> bool {
        self.n_points == other.n_points && self.length == other.length
    }
}

impl<T: Real> Grid<T> {
    /// Builds a periodic grid of `n_points` samples over a box of length `length`.
    ///
    /// `n_points` must be even and at least [`MIN_POINTS`]; `length` must be
    /// positive and finite.
    pub fn new(n_points: usize, length: T) -> Result<Arc<Self>> {
        if !n_points.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("n_points must be even, got {n_points}")));
        }
        if n_points < MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "n_points must be at least {MIN_POINTS}, got {n_points}"
            )));
        }
        if !(length.is_finite() && length > T::zero()) {
            return Err(Error::InvalidGrid(format!(
                "length must be positive and finite, got {length}"
            )));
        }

        let n = T::from_usize_lossy(n_points);
        let spacing = length / n;
        let dk = T::lit(2.0) * T::PI() / length;
        let half = n_points / 2;
        let momenta: Vec<T> = (0..n_points)
            .map(|j| {
                let mode = if j < half { j as f64 } else { j as f64 - n_points as f64 };
                T::lit(mode) * dk
            })
            .collect();
        let mut derivative_wavenumbers = momenta.clone();
        derivative_wavenumbers[half] = T::zero();

        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n_points);
        let inverse = planner.plan_fft_inverse(n_points);

        Ok(Arc::new(Self {
            n_points,
            length,
            spacing,
            momenta,
            derivative_wavenumbers,
            forward,
            inverse,
        }))
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn length(&self) -> T {
        self.length
    }

    /// Lattice spacing `a = L / N`; also the quadrature weight.
    pub fn spacing(&self) -> T {
        self.spacing
    }

    /// Momentum table in transform layout.
    pub fn momenta(&self) -> &[T] {
        &self.momenta
    }

    /// Wavenumbers used for differentiation: the momentum table with the
    /// Nyquist mode set to zero.
    pub fn derivative_wavenumbers(&self) -> &[T] {
        &self.derivative_wavenumbers
    }

    /// Largest representable `|k|`, equal to `π / a`.
    pub fn max_momentum(&self) -> T {
        T::PI() / self.spacing
    }

    /// Integer mode number held in spectral slot `slot`.
    pub fn mode_of_slot(&self, slot: usize) -> i64 {
        let half = self.n_points / 2;
        if slot < half {
            slot as i64
        } else {
            slot as i64 - self.n_points as i64
        }
    }

    /// Spectral slot holding mode `mode`, if it lies in `[-N/2, N/2)`.
    pub fn slot_of_mode(&self, mode: i64) -> Option<usize> {
        let half = (self.n_points / 2) as i64;
        if mode < -half || mode >= half {
            return None;
        }
        Some(if mode >= 0 { mode as usize } else { (mode + self.n_points as i64) as usize })
    }

    pub fn nyquist_slot(&self) -> usize {
        self.n_points / 2
    }

    pub fn x(&self, j: usize) -> T {
        T::from_usize_lossy(j) * self.spacing
    }

    pub fn positions(&self) -> Vec<T> {
        (0..self.n_points).map(|j| self.x(j)).collect()
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.n_points {
            return Err(Error::SizeMismatch { expected: self.n_points, got });
        }
        Ok(())
    }

    fn unitary_scale(&self) -> T {
        T::one() / T::from_usize_lossy(self.n_points).sqrt()
    }

    /// Forward unitary transform, in place. Panics on a size mismatch.
    pub(crate) fn forward_in_place(&self, buf: &mut [Complex<T>]) {
        assert_eq!(buf.len(), self.n_points, "buffer length must match grid");
        self.forward.process(buf);
        let s = self.unitary_scale();
        buf.iter_mut().for_each(|c| *c = *c * s);
    }

    /// Inverse unitary transform, in place. Panics on a size mismatch.
    pub(crate) fn inverse_in_place(&self, buf: &mut [Complex<T>]) {
        assert_eq!(buf.len(), self.n_points, "buffer length must match grid");
        self.inverse.process(buf);
        let s = self.unitary_scale();
        buf.iter_mut().for_each(|c| *c = *c * s);
    }

    pub fn to_momentum(&self, field: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        self.check_len(field.len())?;
        let mut buf = field.to_vec();
        self.forward_in_place(&mut buf);
        Ok(buf)
    }

    pub fn to_position(&self, coefficients: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        self.check_len(coefficients.len())?;
        let mut buf = coefficients.to_vec();
        self.inverse_in_place(&mut buf);
        Ok(buf)
    }

    /// Multiplies each spectral coefficient by `i k_n` (zero at Nyquist), in place.
    pub(crate) fn differentiate_spectrum(&self, coefficients: &mut [Complex<T>]) {
        for (c, &k) in coefficients.iter_mut().zip(&self.derivative_wavenumbers) {
            *c = Complex::new(-c.im * k, c.re * k);
        }
    }

    pub fn spectral_derivative(&self, field: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        let mut buf = self.to_momentum(field)?;
        self.differentiate_spectrum(&mut buf);
        self.inverse_in_place(&mut buf);
        Ok(buf)
    }

    /// Spectral derivative of a real field. With the Nyquist mode dropped the
    /// result is real; the roundoff imaginary part is discarded.
    pub fn spectral_derivative_real(&self, field: &[T]) -> Result<Vec<T>> {
        self.check_len(field.len())?;
        let mut buf: Vec<Complex<T>> = field.iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.forward_in_place(&mut buf);
        self.differentiate_spectrum(&mut buf);
        self.inverse_in_place(&mut buf);
        Ok(buf.into_iter().map(|c| c.re).collect())
    }

    /// Rectangle rule `a Σ_j f_j`; spectrally accurate on the periodic box.
    pub fn integrate(&self, field: &[T]) -> Result<T> {
        self.check_len(field.len())?;
        Ok(self.spacing * field.iter().fold(T::zero(), |acc, &v| acc + v))
    }

    pub fn integrate_complex(&self, field: &[Complex<T>]) -> Result<Complex<T>> {
        self.check_len(field.len())?;
        let sum = field.iter().fold(Complex::new(T::zero(), T::zero()), |acc, &v| acc + v);
        Ok(sum * self.spacing)
    }

    /// Whether spectral slot `slot` is beyond the tail cutoff `|k| ≥ (2/3) π/a`.
    pub fn is_tail_slot(&self, slot: usize) -> bool {
        // Compare mode numbers to avoid roundoff at the boundary.
        let cutoff = TAIL_CUTOFF * (self.n_points / 2) as f64;
        (self.mode_of_slot(slot).unsigned_abs() as f64) >= cutoff
    }

    /// Fraction of spectral power, summed over all given components, carried by
    /// modes with `|k| ≥ (2/3) π/a`.
    pub fn tail_fraction_of(&self, components: &[&[Complex<T>]]) -> Result<T> {
        let mut total = T::zero();
        let mut tail = T::zero();
        for component in components {
            let spectrum = self.to_momentum(component)?;
            for (slot, c) in spectrum.iter().enumerate() {
                let p = c.norm_sqr();
                total = total + p;
                if self.is_tail_slot(slot) {
                    tail = tail + p;
                }
            }
        }
        if total <= T::zero() {
            return Err(Error::ZeroField);
        }
        Ok(tail / total)
    }

    pub fn tail_fraction(&self, field: &[Complex<T>]) -> Result<T> {
        self.tail_fraction_of(&[field])
    }
}

/// Samples on a grid. `S` is `T` for real fields and `Complex<T>` for complex ones.
#[derive(Debug, Clone)]
pub struct ScalarField<T: Real, S> {
    grid: Arc<Grid<T>>,
    values: Vec<S>,
}

pub type GenericRealField<T> = ScalarField<T, T>;
pub type GenericComplexField<T> = ScalarField<T, Complex<T>>;

/// Finiteness test for the two sample kinds a field can hold.
pub trait Sample: Copy {
    fn is_finite_sample(&self) -> bool;
}

impl<T: Real> Sample for T {
    fn is_finite_sample(&self) -> bool {
        self.is_finite()
    }
}

impl<T: Real> Sample for Complex<T> {
    fn is_finite_sample(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl<T: Real, S: Sample> ScalarField<T, S> {
    pub fn new(grid: Arc<Grid<T>>, values: Vec<S>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::SizeMismatch { expected: grid.n_points(), got: values.len() });
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite_sample()) {
            return Err(Error::NonFinite(bad));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(x_j)` at every grid point.
    pub fn from_fn(grid: &Arc<Grid<T>>, f: impl Fn(T) -> S) -> Result<Self> {
        let values = (0..grid.n_points()).map(|j| f(grid.x(j))).collect();
        Self::new(Arc::clone(grid), values)
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn into_values(self) -> Vec<S> {
        self.values
    }

    pub(crate) fn from_parts_unchecked(grid: Arc<Grid<T>>, values: Vec<S>) -> Self {
        debug_assert_eq!(values.len(), grid.n_points());
        Self { grid, values }
    }
}

impl<T: Real> ScalarField<T, T> {
    pub fn zeros(grid: &Arc<Grid<T>>) -> Self {
        Self::from_parts_unchecked(Arc::clone(grid), vec![T::zero(); grid.n_points()])
    }

    pub fn integrate(&self) -> T {
        self.grid.spacing() * self.values.iter().fold(T::zero(), |acc, &v| acc + v)
    }

    pub fn derivative(&self) -> Self {
        let values = self
            .grid
            .spectral_derivative_real(&self.values)
            .expect("field length matches its grid");
        Self::from_parts_unchecked(Arc::clone(&self.grid), values)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self::from_parts_unchecked(
            Arc::clone(&self.grid),
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn scaled(&self, factor: T) -> Self {
        self.map(|v| v * factor)
    }

    /// Pointwise product; fails if the fields live on different grids.
    pub fn product(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| a * b).collect();
        Ok(Self::from_parts_unchecked(Arc::clone(&self.grid), values))
    }

    /// `∫ self · other dx` on the shared grid.
    pub fn integrate_product(&self, other: &Self) -> Result<T> {
        Ok(self.product(other)?.integrate())
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, &v| m.max(v.magnitude()))
    }
}

impl<T: Real> ScalarField<T, Complex<T>> {
    pub fn to_momentum(&self) -> Vec<Complex<T>> {
        self.grid.to_momentum(&self.values).expect("field length matches its grid")
    }

    pub fn derivative(&self) -> Self {
        let values = self
            .grid
            .spectral_derivative(&self.values)
            .expect("field length matches its grid");
        Self::from_parts_unchecked(Arc::clone(&self.grid), values)
    }

    pub fn integrate(&self) -> Complex<T> {
        self.grid.integrate_complex(&self.values).expect("field length matches its grid")
    }

    pub fn tail_fraction(&self) -> Result<T> {
        self.grid.tail_fraction(&self.values)
    }
}
