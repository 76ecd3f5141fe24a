//! Periodic grids, discrete Fourier machinery, the discrete Hilbert transform
//! on even and odd grids, and the symmetric nonlocal operator `L = H ∂x`.
//!
//! Transforms follow the unnormalized forward convention
//! `(F u)_k = Σ_n u_n e^{-2πi nk/N}` with the `1/N` factor on the inverse.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Parity of the grid-point count.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(n: usize) -> Parity {
        if n % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Parity::Even => f.write_str("even"),
            Parity::Odd => f.write_str("odd"),
        }
    }
}

/// Uniform periodic mesh on `[0, l)` with nodes `x_n = n·dx`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    length: f64,
    points: usize,
    spacing: f64,
}

impl Grid {
    pub fn new(length: f64, points: usize) -> Result<Grid> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "domain length must be positive, got {length}"
            )));
        }
        if points < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 grid points, got {points}"
            )));
        }
        Ok(Grid {
            length,
            points,
            spacing: length / points as f64,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn dx(&self) -> f64 {
        self.spacing
    }

    pub fn parity(&self) -> Parity {
        Parity::of(self.points)
    }

    /// `x_n = n·l/N`
    pub fn node(&self, n: usize) -> f64 {
        n as f64 * self.length / self.points as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.points).map(move |n| self.node(n))
    }

    /// Same grid with the spacing halved (`2N` points).
    pub fn refined(&self) -> Grid {
        Grid {
            length: self.length,
            points: 2 * self.points,
            spacing: self.length / (2 * self.points) as f64,
        }
    }

    pub(crate) fn require(&self, parity: Parity, operation: &'static str) -> Result<()> {
        if self.parity() == parity {
            Ok(())
        } else {
            Err(Error::Parity {
                operation,
                required: match parity {
                    Parity::Even => "even",
                    Parity::Odd => "odd",
                },
                n: self.points,
            })
        }
    }
}

/// One period of a periodic grid function.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Field> {
        if values.len() != grid.points() {
            return Err(Error::Dimension {
                expected: grid.points(),
                got: values.len(),
            });
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "field value at index {bad} is not finite"
            )));
        }
        Ok(Field { grid, values })
    }

    /// Builds a field without the finiteness check. Used for intermediate
    /// results of arithmetic that may legitimately overflow (unstable runs).
    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Field {
        debug_assert_eq!(values.len(), grid.points());
        Field { grid, values }
    }

    pub fn zeros(grid: Grid) -> Field {
        Field::from_raw(grid, vec![0.0; grid.points()])
    }

    pub fn constant(grid: Grid, value: f64) -> Field {
        Field::from_raw(grid, vec![value; grid.points()])
    }

    /// Samples `f` at the grid nodes.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Field {
        Field::from_raw(grid, grid.nodes().map(f).collect())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Periodic indexing, `u[n + N] = u[n]`.
    pub fn at(&self, n: isize) -> f64 {
        let len = self.values.len() as isize;
        self.values[n.rem_euclid(len) as usize]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn dot(&self, other: &Field) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        debug_assert_eq!(self.len(), other.len());
        Field::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    /// `self + a·other`
    pub fn axpy(&self, a: f64, other: &Field) -> Field {
        self.zip_map(other, |x, y| x + a * y)
    }

    pub fn scale(&self, a: f64) -> Field {
        self.map(|v| a * v)
    }

    pub fn add(&self, other: &Field) -> Field {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.zip_map(other, |a, b| a - b)
    }

    pub(crate) fn same_grid(&self, other: &Field) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Convolution kernel of the discrete Hilbert transform, `(H u)_n = Σ_j k_{n-j} u_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct HilbertKernel {
    pub coeffs: Vec<f64>,
    pub parity: Parity,
}

/// Kernel coefficients for indices `0..N`.
///
/// Even `N`: `c_n = (2/N) cot(πn/N)` for odd `n`, zero for even `n`.
/// Odd `N`: `d_n = (1/N) cot(πn/2N)` for odd `n`, `-(1/N) tan(πn/2N)` for even `n`.
pub fn hilbert_kernel(n: usize) -> Result<HilbertKernel> {
    if n < 3 {
        return Err(Error::InvalidGrid(format!(
            "need at least 3 grid points, got {n}"
        )));
    }
    let nf = n as f64;
    let parity = Parity::of(n);
    let coeffs = (0..n)
        .map(|j| {
            let jf = j as f64;
            match (parity, j % 2 == 1) {
                (_, false) if j == 0 => 0.0,
                (Parity::Even, true) => 2.0 / nf / (PI * jf / nf).tan(),
                (Parity::Even, false) => 0.0,
                (Parity::Odd, true) => 1.0 / nf / (PI * jf / (2.0 * nf)).tan(),
                (Parity::Odd, false) => -(PI * jf / (2.0 * nf)).tan() / nf,
            }
        })
        .collect();
    Ok(HilbertKernel { coeffs, parity })
}

/// Diagonal Fourier symbols: the discrete sign function `S` and the wavenumbers `K̃`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralSymbols {
    pub sgn_diag: Vec<i8>,
    pub wave_diag: Vec<i64>,
}

pub fn spectral_symbols(n: usize) -> Result<SpectralSymbols> {
    if n < 3 {
        return Err(Error::InvalidGrid(format!(
            "need at least 3 grid points, got {n}"
        )));
    }
    let half = n / 2;
    let (sgn_diag, wave_diag) = (0..n)
        .map(|k| {
            if k == 0 || (n % 2 == 0 && k == half) {
                (0, 0)
            } else if k <= (n - 1) / 2 {
                (1, k as i64)
            } else {
                (-1, k as i64 - n as i64)
            }
        })
        .unzip();
    Ok(SpectralSymbols {
        sgn_diag,
        wave_diag,
    })
}

/// Discrete Hilbert transform as an `O(N²)` cyclic convolution with the kernel.
pub fn hilbert_direct(u: &Field) -> Field {
    let n = u.len();
    let kernel = hilbert_kernel(n).expect("grid invariant guarantees N >= 3");
    let c = &kernel.coeffs;
    let out = (0..n)
        .map(|i| {
            u.values()
                .iter()
                .enumerate()
                .map(|(j, &uj)| c[(i + n - j) % n] * uj)
                .sum()
        })
        .collect();
    Field::from_raw(*u.grid(), out)
}

/// Finite-difference variants on the periodic grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Difference {
    /// `(u_{n+1} - u_n)/dx`
    Forward,
    /// `(u_n - u_{n-1})/dx`
    Backward,
    /// `(u_{n+1} - u_{n-1})/(2dx)`
    Centered,
}

pub fn central_diff(u: &Field, variant: Difference) -> Field {
    let n = u.len();
    let dx = u.grid().dx();
    let v = u.values();
    let out = (0..n)
        .map(|i| {
            let next = v[(i + 1) % n];
            let prev = v[(i + n - 1) % n];
            match variant {
                Difference::Forward => (next - v[i]) / dx,
                Difference::Backward => (v[i] - prev) / dx,
                Difference::Centered => (next - prev) / (2.0 * dx),
            }
        })
        .collect();
    Field::from_raw(*u.grid(), out)
}

/// Cyclic forward average `(u_n + u_{n+1})/2`.
pub fn forward_average(u: &Field) -> Field {
    let n = u.len();
    let v = u.values();
    Field::from_raw(
        *u.grid(),
        (0..n).map(|i| 0.5 * (v[i] + v[(i + 1) % n])).collect(),
    )
}

// Output imaginary parts must stay below this fraction of the input scale.
const IMAG_RESIDUE_TOL: f64 = 1e-10;

/// FFT-backed operators for one grid. Plans are immutable and shared, so a
/// `Spectral` can be cloned and sent across threads freely.
#[derive(Clone)]
pub struct Spectral {
    grid: Grid,
    symbols: SpectralSymbols,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    hilbert_symbol: Vec<Complex<f64>>,
    derivative_symbol: Vec<Complex<f64>>,
    l_symbol: Vec<Complex<f64>>,
}

impl fmt::Debug for Spectral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: Grid) -> Spectral {
        let n = grid.points();
        let symbols = spectral_symbols(n).expect("grid invariant guarantees N >= 3");
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let base = 2.0 * PI / grid.length();

        let hilbert_symbol = symbols
            .sgn_diag
            .iter()
            .map(|&s| Complex::new(0.0, -f64::from(s)))
            .collect();
        let derivative_symbol = symbols
            .wave_diag
            .iter()
            .map(|&k| Complex::new(0.0, base * k as f64))
            .collect();
        let l_symbol = symbols
            .wave_diag
            .iter()
            .zip(&symbols.sgn_diag)
            .map(|(&k, &s)| Complex::new(base * k as f64 * f64::from(s), 0.0))
            .collect();

        Spectral {
            grid,
            symbols,
            forward,
            inverse,
            hilbert_symbol,
            derivative_symbol,
            l_symbol,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn symbols(&self) -> &SpectralSymbols {
        &self.symbols
    }

    /// Forward DFT of a real field (unnormalized).
    pub fn dft(&self, u: &Field) -> Vec<Complex<f64>> {
        let mut buf: Vec<Complex<f64>> =
            u.values().iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    /// Inverse DFT (with the `1/N` factor), returning the real part after
    /// checking that the imaginary residue is negligible relative to `scale`.
    pub fn idft_real(&self, mut spectrum: Vec<Complex<f64>>, scale: f64) -> Field {
        let n = self.grid.points();
        self.inverse.process(&mut spectrum);
        let inv_n = 1.0 / n as f64;
        let residue = spectrum.iter().fold(0.0_f64, |m, c| m.max(c.im.abs())) * inv_n;
        assert!(
            !(residue > IMAG_RESIDUE_TOL * scale),
            "inverse transform left an imaginary residue of {residue:e} (scale {scale:e}); \
             the Fourier symbol is not conjugate-symmetric"
        );
        Field::from_raw(self.grid, spectrum.iter().map(|c| c.re * inv_n).collect())
    }

    /// Applies a diagonal Fourier multiplier to a real field.
    pub fn apply_symbol(&self, u: &Field, symbol: &[Complex<f64>]) -> Field {
        debug_assert_eq!(u.grid(), &self.grid);
        let mut spec = self.dft(u);
        let mut peak = 0.0_f64;
        for (c, s) in spec.iter_mut().zip(symbol) {
            *c *= s;
            peak = peak.max(s.norm());
        }
        self.idft_real(spec, u.max_abs() * peak.max(1.0))
    }

    /// `F⁻¹ (-i S) F u`
    pub fn hilbert(&self, u: &Field) -> Field {
        self.apply_symbol(u, &self.hilbert_symbol)
    }

    /// Spectral derivative `F⁻¹ (i 2π/l K̃) F u`; the Nyquist mode is dropped for even `N`.
    pub fn derivative(&self, u: &Field) -> Field {
        self.apply_symbol(u, &self.derivative_symbol)
    }

    /// Symmetric discrete `L = H∂x`: multiplier `(2π/l)|k̃|`.
    pub fn apply_l(&self, u: &Field) -> Field {
        self.apply_symbol(u, &self.l_symbol)
    }

    /// Dense matrix of `apply_l`, stored row-major. `L` is circulant, so its
    /// columns are cyclic shifts of `L e_0`.
    pub fn l_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.grid.points();
        let mut e0 = Field::zeros(self.grid);
        e0.values[0] = 1.0;
        let col = self.apply_l(&e0);
        (0..n)
            .map(|i| (0..n).map(|j| col.values[(i + n - j) % n]).collect())
            .collect()
    }

    /// Solves `A x = b` for a circulant `A` given by its Fourier symbol. Modes
    /// listed in `skip` (and any mode whose symbol is exactly zero) are set to zero
    /// in the solution; every other mode must have `|symbol| > tiny`.
    pub fn solve_symbol(&self, b: &Field, symbol: &[Complex<f64>], skip: &[usize]) -> Result<Field> {
        let mut spec = self.dft(b);
        let scale = symbol.iter().fold(0.0_f64, |m, s| m.max(s.norm()));
        let mut peak = 0.0_f64;
        for (k, (c, s)) in spec.iter_mut().zip(symbol).enumerate() {
            if skip.contains(&k) {
                *c = Complex::new(0.0, 0.0);
                continue;
            }
            if s.norm() <= 1e-13 * scale {
                return Err(Error::Singular {
                    row: k,
                    pivot: s.norm(),
                    scale,
                });
            }
            *c /= s;
            peak = peak.max(1.0 / s.norm());
        }
        Ok(self.idft_real(spec, b.max_abs() * peak.max(1.0)))
    }

    /// Symbol of a finite-difference operator on this grid.
    pub fn difference_symbol(&self, variant: Difference) -> Vec<Complex<f64>> {
        let n = self.grid.points();
        let dx = self.grid.dx();
        (0..n)
            .map(|k| {
                let theta = 2.0 * PI * k as f64 / n as f64;
                let e = Complex::from_polar(1.0, theta);
                match variant {
                    Difference::Forward => (e - 1.0) / dx,
                    Difference::Backward => (1.0 - e.conj()) / dx,
                    Difference::Centered => Complex::new(0.0, theta.sin() / dx),
                }
            })
            .collect()
    }

    /// Symbol of the forward average `(u_n + u_{n+1})/2`.
    pub fn average_symbol(&self) -> Vec<Complex<f64>> {
        let n = self.grid.points();
        (0..n)
            .map(|k| (Complex::from_polar(1.0, 2.0 * PI * k as f64 / n as f64) + 1.0) * 0.5)
            .collect()
    }

    /// Inverts the centered difference on mean-free fields (odd `N` only, where
    /// its kernel is just the constants). The result has zero mean.
    pub fn invert_centered(&self, u: &Field) -> Result<Field> {
        self.grid.require(Parity::Odd, "inverting the centered difference")?;
        let symbol = self.difference_symbol(Difference::Centered);
        self.solve_symbol(u, &symbol, &[0])
    }
}

/// Hilbert transform of a smooth periodic function computed from a truncated
/// Fourier series with `modes` samples, evaluated at arbitrary points.
pub fn fourier_series_hilbert(
    f: impl Fn(f64) -> f64,
    length: f64,
    modes: usize,
    points: &[f64],
) -> Vec<f64> {
    let grid = Grid::new(length, modes).expect("modes >= 3");
    let ops = Spectral::new(grid);
    let coeffs = ops.dft(&Field::from_fn(grid, f));
    let keep: Vec<(i64, Complex<f64>)> = coeffs
        .iter()
        .enumerate()
        .filter_map(|(k, c)| {
            let s = ops.symbols.wave_diag[k];
            let c = c / modes as f64;
            (s != 0 && c.norm() > 1e-300).then_some((s, c))
        })
        .collect();
    points
        .iter()
        .map(|&x| {
            keep.iter()
                .map(|&(k, c)| {
                    let h = Complex::new(0.0, -(k.signum() as f64)) * c;
                    (h * Complex::from_polar(1.0, 2.0 * PI * k as f64 * x / length)).re
                })
                .sum()
        })
        .collect()
}
