//! Periodic-grid Fourier machinery on `[0, 2π)` and `[0, 2π)²`.
//!
//! # Layout
//!
//! A [`Field2D`] stores `n * n` values row-major with the row index running
//! along `x₂` and the column index along `x₁`: `values[j * n + i]` is the value
//! at `(x₁, x₂) = (i·dx, j·dx)`. Spectra use the same layout, with column `i`
//! carrying wavenumber `k₁ = wavenumber(i, n)` and row `j` carrying `k₂`.
//!
//! # Normalization
//!
//! The forward transform is unscaled, `X_k = Σ_x f(x) e^{-i k·x}`, and the
//! inverse divides by the point count `N` (`n²` in 2D, `n` in 1D). With that
//! convention the normalized coefficients `c_k = X_k / N` satisfy Parseval in
//! the form `mean(|f|²) = Σ_k |c_k|²`, see [`Spectrum2D::parseval_sum`].

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

pub const TWO_PI: f64 = 2.0 * PI;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("grid size {0} is invalid: need an even number of points, at least 8")]
    GridSize(usize),
    #[error("dimension mismatch: expected {expected} values, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("field lives on an n={found} grid but the transform was planned for n={expected}")]
    GridMismatch { expected: usize, found: usize },
    #[error("symbol {0:?} is not defined in this dimension")]
    SymbolDimension(Symbol),
}

/// Periodic square grid with spacing `2π / n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid2D {
    n: usize,
}

impl Grid2D {
    pub fn new(n: usize) -> Result<Self, SpectralError> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(SpectralError::GridSize(n));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn length(&self) -> f64 {
        TWO_PI
    }

    pub fn dx(&self) -> f64 {
        TWO_PI / self.n as f64
    }

    /// Area element of one grid cell.
    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dx()
    }

    pub fn coord(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }
}

/// Signed integer wavenumber carried by FFT index `m` on an `n`-point axis.
/// The Nyquist index `n/2` is reported as `+n/2`.
pub fn wavenumber(m: usize, n: usize) -> i64 {
    if m <= n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

fn is_nyquist(m: usize, n: usize) -> bool {
    m == n / 2
}

/// Real scalar field on a [`Grid2D`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    grid: Grid2D,
    values: Vec<f64>,
}

impl Field2D {
    pub fn new(grid: Grid2D, values: Vec<f64>) -> Result<Self, SpectralError> {
        if values.len() != grid.len() {
            return Err(SpectralError::DimensionMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: Grid2D, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    /// Samples `f(x₁, x₂)` at every grid point.
    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n();
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..n {
            let x2 = grid.coord(j);
            for i in 0..n {
                values.push(f(grid.coord(i), x2));
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> Grid2D {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// `self + a * other`
    pub fn axpy(&self, a: f64, other: &Self) -> Self {
        self.zip_map(other, |x, y| x + a * y)
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|v| a * v)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Discrete `∫ f g dx` over the periodic box.
    pub fn inner(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.grid.cell_area()
    }

    /// Discrete `L²` norm over the periodic box.
    pub fn l2_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Real scalar field on `n` points of `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field1D {
    values: Vec<f64>,
}

impl Field1D {
    pub fn new(values: Vec<f64>) -> Result<Self, SpectralError> {
        let n = values.len();
        if n < 8 || !n.is_multiple_of(2) {
            return Err(SpectralError::GridSize(n));
        }
        Ok(Self { values })
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self, SpectralError> {
        let dx = TWO_PI / n as f64;
        Self::new((0..n).map(|i| f(i as f64 * dx)).collect())
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn dx(&self) -> f64 {
        TWO_PI / self.n() as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn axpy(&self, a: f64, other: &Self) -> Self {
        self.zip_map(other, |x, y| x + a * y)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.n() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Unscaled forward coefficients of a [`Field2D`].
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum2D {
    grid: Grid2D,
    coeffs: Vec<Complex64>,
}

impl Spectrum2D {
    pub fn new(grid: Grid2D, coeffs: Vec<Complex64>) -> Result<Self, SpectralError> {
        if coeffs.len() != grid.len() {
            return Err(SpectralError::DimensionMismatch {
                expected: grid.len(),
                found: coeffs.len(),
            });
        }
        Ok(Self { grid, coeffs })
    }

    pub fn grid(&self) -> Grid2D {
        self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// `Σ |X_k / N|²`, equal to the mean of `|f|²` over the grid.
    pub fn parseval_sum(&self) -> f64 {
        let norm = self.grid.len() as f64;
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() / (norm * norm)
    }

    /// Multiplies every mode by `m(k₁, k₂)`; the closure also learns whether
    /// each index is a Nyquist index.
    pub fn multiply(&mut self, m: impl Fn(Mode) -> Complex64) {
        let n = self.grid.n();
        for j in 0..n {
            for i in 0..n {
                let mode = Mode {
                    k1: wavenumber(i, n),
                    k2: wavenumber(j, n),
                    nyquist1: is_nyquist(i, n),
                    nyquist2: is_nyquist(j, n),
                };
                self.coeffs[j * n + i] *= m(mode);
            }
        }
    }
}

/// Unscaled forward coefficients of a [`Field1D`].
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum1D {
    coeffs: Vec<Complex64>,
}

impl Spectrum1D {
    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Self {
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn parseval_sum(&self) -> f64 {
        let n = self.coeffs.len() as f64;
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() / (n * n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub k1: i64,
    pub k2: i64,
    pub nyquist1: bool,
    pub nyquist2: bool,
}

impl Mode {
    pub fn norm(&self) -> f64 {
        ((self.k1 * self.k1 + self.k2 * self.k2) as f64).sqrt()
    }
}

/// Fourier multipliers used by the solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Symbol {
    /// `|k|^s`, i.e. `(−Δ)^{s/2}`.
    FracLaplacian(f64),
    /// `|k|^{−s}` with the mean mode sent to zero.
    InvFracLaplacian(f64),
    Ddx1,
    Ddx2,
    /// Zeroes every mode with `|k₁| > n/3` or `|k₂| > n/3`.
    DealiasTwoThirds,
    /// `−i·sign(k)`, 1D only.
    Hilbert1D,
}

const I: Complex64 = Complex64::new(0.0, 1.0);

fn radial_power(norm: f64, s: f64) -> f64 {
    if norm == 0.0 {
        if s > 0.0 {
            0.0
        } else if s == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        norm.powf(s)
    }
}

fn outside_two_thirds(k: i64, n: usize) -> bool {
    3 * k.unsigned_abs() as usize > n
}

impl Symbol {
    fn multiplier_2d(&self, m: Mode, n: usize) -> Result<Complex64, SpectralError> {
        let value = match *self {
            Symbol::FracLaplacian(s) => Complex64::from(radial_power(m.norm(), s)),
            Symbol::InvFracLaplacian(s) => Complex64::from(radial_power(m.norm(), -s)),
            Symbol::Ddx1 => {
                if m.nyquist1 {
                    Complex64::from(0.0)
                } else {
                    I * m.k1 as f64
                }
            }
            Symbol::Ddx2 => {
                if m.nyquist2 {
                    Complex64::from(0.0)
                } else {
                    I * m.k2 as f64
                }
            }
            Symbol::DealiasTwoThirds => {
                if outside_two_thirds(m.k1, n) || outside_two_thirds(m.k2, n) {
                    Complex64::from(0.0)
                } else {
                    Complex64::from(1.0)
                }
            }
            Symbol::Hilbert1D => return Err(SpectralError::SymbolDimension(*self)),
        };
        Ok(value)
    }

    fn multiplier_1d(&self, k: i64, nyquist: bool, n: usize) -> Result<Complex64, SpectralError> {
        let norm = k.unsigned_abs() as f64;
        let value = match *self {
            Symbol::FracLaplacian(s) => Complex64::from(radial_power(norm, s)),
            Symbol::InvFracLaplacian(s) => Complex64::from(radial_power(norm, -s)),
            Symbol::Ddx1 => {
                if nyquist {
                    Complex64::from(0.0)
                } else {
                    I * k as f64
                }
            }
            Symbol::DealiasTwoThirds => {
                if outside_two_thirds(k, n) {
                    Complex64::from(0.0)
                } else {
                    Complex64::from(1.0)
                }
            }
            Symbol::Hilbert1D => {
                if nyquist || k == 0 {
                    Complex64::from(0.0)
                } else {
                    -I * (k.signum() as f64)
                }
            }
            Symbol::Ddx2 => return Err(SpectralError::SymbolDimension(*self)),
        };
        Ok(value)
    }
}

/// Planned 2D transforms for one grid size.
#[derive(Clone)]
pub struct Spectral2D {
    grid: Grid2D,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Spectral2D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral2D").field("grid", &self.grid).finish()
    }
}

fn transpose_in_place(data: &mut [Complex64], n: usize) {
    for j in 0..n {
        for i in (j + 1)..n {
            data.swap(j * n + i, i * n + j);
        }
    }
}

impl Spectral2D {
    pub fn new(grid: Grid2D) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid,
            forward: planner.plan_fft_forward(grid.n()),
            inverse: planner.plan_fft_inverse(grid.n()),
        }
    }

    pub fn grid(&self) -> Grid2D {
        self.grid
    }

    fn check(&self, grid: Grid2D) -> Result<(), SpectralError> {
        if grid != self.grid {
            return Err(SpectralError::GridMismatch {
                expected: self.grid.n(),
                found: grid.n(),
            });
        }
        Ok(())
    }

    fn run_2d(&self, fft: &Arc<dyn Fft<f64>>, data: &mut [Complex64]) {
        let n = self.grid.n();
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(data, &mut scratch);
        transpose_in_place(data, n);
        fft.process_with_scratch(data, &mut scratch);
        transpose_in_place(data, n);
    }

    pub fn forward(&self, field: &Field2D) -> Result<Spectrum2D, SpectralError> {
        self.check(field.grid)?;
        let mut data: Vec<Complex64> = field.values.iter().map(|&v| Complex64::from(v)).collect();
        self.run_2d(&self.forward, &mut data);
        Ok(Spectrum2D {
            grid: self.grid,
            coeffs: data,
        })
    }

    /// Inverse transform; the imaginary residue of round-off is discarded.
    pub fn inverse(&self, spectrum: &Spectrum2D) -> Result<Field2D, SpectralError> {
        self.check(spectrum.grid)?;
        let mut data = spectrum.coeffs.clone();
        self.run_2d(&self.inverse, &mut data);
        let scale = 1.0 / self.grid.len() as f64;
        Ok(Field2D {
            grid: self.grid,
            values: data.iter().map(|c| c.re * scale).collect(),
        })
    }

    pub fn apply_symbol_spectral(
        &self,
        spectrum: &Spectrum2D,
        symbol: Symbol,
    ) -> Result<Spectrum2D, SpectralError> {
        self.check(spectrum.grid)?;
        let n = self.grid.n();
        // validate once so the per-mode closure cannot fail
        symbol.multiplier_2d(
            Mode {
                k1: 0,
                k2: 0,
                nyquist1: false,
                nyquist2: false,
            },
            n,
        )?;
        let mut out = spectrum.clone();
        out.multiply(|m| symbol.multiplier_2d(m, n).unwrap_or_default());
        Ok(out)
    }

    pub fn apply_symbol(&self, field: &Field2D, symbol: Symbol) -> Result<Field2D, SpectralError> {
        let spectrum = self.forward(field)?;
        self.inverse(&self.apply_symbol_spectral(&spectrum, symbol)?)
    }

    /// Applies `symbol` to an already transformed field and returns physical values.
    pub fn physical_with(&self, spectrum: &Spectrum2D, symbol: Symbol) -> Result<Field2D, SpectralError> {
        self.inverse(&self.apply_symbol_spectral(spectrum, symbol)?)
    }

    /// `∇⊥θ = (−∂θ/∂x₂, ∂θ/∂x₁)`.
    pub fn perp_grad(&self, theta: &Field2D) -> Result<(Field2D, Field2D), SpectralError> {
        let spectrum = self.forward(theta)?;
        self.perp_grad_spectral(&spectrum)
    }

    pub fn perp_grad_spectral(&self, spectrum: &Spectrum2D) -> Result<(Field2D, Field2D), SpectralError> {
        let d2 = self.physical_with(spectrum, Symbol::Ddx2)?;
        let d1 = self.physical_with(spectrum, Symbol::Ddx1)?;
        Ok((d2.scale(-1.0), d1))
    }

    /// Spectral divergence `∂₁a + ∂₂b`.
    pub fn divergence(&self, a: &Field2D, b: &Field2D) -> Result<Field2D, SpectralError> {
        let da = self.apply_symbol(a, Symbol::Ddx1)?;
        let db = self.apply_symbol(b, Symbol::Ddx2)?;
        Ok(da.zip_map(&db, |x, y| x + y))
    }
}

/// Planned 1D transforms.
#[derive(Clone)]
pub struct Spectral1D {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Spectral1D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral1D").field("n", &self.n).finish()
    }
}

impl Spectral1D {
    pub fn new(n: usize) -> Result<Self, SpectralError> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(SpectralError::GridSize(n));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn check(&self, found: usize) -> Result<(), SpectralError> {
        if found != self.n {
            return Err(SpectralError::GridMismatch {
                expected: self.n,
                found,
            });
        }
        Ok(())
    }

    pub fn forward(&self, field: &Field1D) -> Result<Spectrum1D, SpectralError> {
        self.check(field.n())?;
        let mut data: Vec<Complex64> = field.values.iter().map(|&v| Complex64::from(v)).collect();
        self.forward.process(&mut data);
        Ok(Spectrum1D { coeffs: data })
    }

    pub fn inverse(&self, spectrum: &Spectrum1D) -> Result<Field1D, SpectralError> {
        self.check(spectrum.coeffs.len())?;
        let mut data = spectrum.coeffs.clone();
        self.inverse.process(&mut data);
        let scale = 1.0 / self.n as f64;
        Ok(Field1D {
            values: data.iter().map(|c| c.re * scale).collect(),
        })
    }

    pub fn apply_symbol_spectral(
        &self,
        spectrum: &Spectrum1D,
        symbol: Symbol,
    ) -> Result<Spectrum1D, SpectralError> {
        self.check(spectrum.coeffs.len())?;
        let n = self.n;
        let mut coeffs = spectrum.coeffs.clone();
        for (m, c) in coeffs.iter_mut().enumerate() {
            *c *= symbol.multiplier_1d(wavenumber(m, n), is_nyquist(m, n), n)?;
        }
        Ok(Spectrum1D { coeffs })
    }

    pub fn apply_symbol(&self, field: &Field1D, symbol: Symbol) -> Result<Field1D, SpectralError> {
        let spectrum = self.forward(field)?;
        self.inverse(&self.apply_symbol_spectral(&spectrum, symbol)?)
    }
}

/// Pointwise value and derivatives up to second order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Jet2 {
    pub f: f64,
    pub f1: f64,
    pub f2: f64,
    pub f11: f64,
    pub f12: f64,
    pub f22: f64,
}

impl Jet2 {
    pub fn grad(&self) -> [f64; 2] {
        [self.f1, self.f2]
    }

    pub fn hessian(&self) -> [[f64; 2]; 2] {
        [[self.f11, self.f12], [self.f12, self.f22]]
    }
}

/// Trigonometric interpolant of a grid field, evaluable at arbitrary points.
///
/// Only modes whose normalized amplitude exceeds `rel_tol · max amplitude`
/// are retained, so smooth or band-limited fields evaluate quickly.
#[derive(Debug, Clone)]
pub struct TrigInterpolant {
    modes: Vec<(f64, f64, Complex64)>,
}

impl TrigInterpolant {
    pub fn new(spectral: &Spectral2D, field: &Field2D, rel_tol: f64) -> Result<Self, SpectralError> {
        let spectrum = spectral.forward(field)?;
        Ok(Self::from_spectrum(&spectrum, rel_tol))
    }

    pub fn from_spectrum(spectrum: &Spectrum2D, rel_tol: f64) -> Self {
        let grid = spectrum.grid();
        let n = grid.n();
        let norm = grid.len() as f64;
        let max = spectrum.coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm())) / norm;
        let cut = rel_tol * max;
        let mut modes = Vec::new();
        let half = n as f64 / 2.0;
        for j in 0..n {
            for i in 0..n {
                let c = spectrum.coeffs[j * n + i] / norm;
                if c.norm() <= cut {
                    continue;
                }
                // Nyquist energy is split evenly between ±n/2 so the interpolant stays real.
                let k1s: &[(f64, f64)] = if is_nyquist(i, n) {
                    &[(half, 0.5), (-half, 0.5)]
                } else {
                    &[(0.0, 1.0)]
                };
                let k2s: &[(f64, f64)] = if is_nyquist(j, n) {
                    &[(half, 0.5), (-half, 0.5)]
                } else {
                    &[(0.0, 1.0)]
                };
                for &(k1n, w1) in k1s {
                    for &(k2n, w2) in k2s {
                        let k1 = if is_nyquist(i, n) { k1n } else { wavenumber(i, n) as f64 };
                        let k2 = if is_nyquist(j, n) { k2n } else { wavenumber(j, n) as f64 };
                        modes.push((k1, k2, c * (w1 * w2)));
                    }
                }
            }
        }
        Self { modes }
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    pub fn max_wavenumber(&self) -> f64 {
        self.modes.iter().fold(0.0f64, |m, &(k1, k2, _)| m.max(k1.hypot(k2)))
    }

    pub fn value(&self, x1: f64, x2: f64) -> f64 {
        self.modes
            .iter()
            .map(|&(k1, k2, c)| (c * Complex64::from_polar(1.0, k1 * x1 + k2 * x2)).re)
            .sum()
    }

    pub fn gradient(&self, x1: f64, x2: f64) -> [f64; 2] {
        let mut g = [0.0; 2];
        for &(k1, k2, c) in &self.modes {
            let z = c * Complex64::from_polar(1.0, k1 * x1 + k2 * x2);
            // d/dx of Re(z) with z ∝ e^{ik·x} is Re(i k z) = −k Im(z)
            g[0] -= k1 * z.im;
            g[1] -= k2 * z.im;
        }
        g
    }

    pub fn jet(&self, x1: f64, x2: f64) -> Jet2 {
        let mut jet = Jet2::default();
        for &(k1, k2, c) in &self.modes {
            let z = c * Complex64::from_polar(1.0, k1 * x1 + k2 * x2);
            jet.f += z.re;
            jet.f1 -= k1 * z.im;
            jet.f2 -= k2 * z.im;
            jet.f11 -= k1 * k1 * z.re;
            jet.f12 -= k1 * k2 * z.re;
            jet.f22 -= k2 * k2 * z.re;
        }
        jet
    }
}
