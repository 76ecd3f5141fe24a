//! Dense linear solves and Newton iteration for the implicit schemes.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the Newton correction is computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JacobianMode {
    /// Exact Jacobian assembled from the scheme's structure, refreshed every iteration.
    Analytic,
    /// Symmetric finite differences of the residual.
    FiniteDifference,
    /// Chord iteration: one Jacobian approximation reused for the whole step.
    /// The Preissmann scheme factors its analytic Jacobian once at the initial
    /// guess; the Thomée–Vasudeva Murthy scheme uses its circulant linear part,
    /// inverted with the FFT.
    Chord,
}

impl std::str::FromStr for JacobianMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(JacobianMode::Analytic),
            "finite-difference" => Ok(JacobianMode::FiniteDifference),
            "chord" => Ok(JacobianMode::Chord),
            other => Err(Error::Config(format!("unknown jacobian mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for JacobianMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            JacobianMode::Analytic => "analytic",
            JacobianMode::FiniteDifference => "finite-difference",
            JacobianMode::Chord => "chord",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonSettings {
    /// Tolerance on the max norm of the residual.
    pub tol: f64,
    pub max_iter: usize,
    pub jacobian_mode: JacobianMode,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        NewtonSettings {
            tol: 1e-12,
            max_iter: 25,
            jacobian_mode: JacobianMode::Analytic,
        }
    }
}

impl NewtonSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Newton tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter(
                "Newton needs at least one iteration".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NewtonReport {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

pub(crate) fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// LU factorization with partial pivoting that reports numerically singular
/// matrices instead of producing garbage.
pub struct Factorization {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl Factorization {
    pub fn new(a: DMatrix<f64>) -> Result<Factorization> {
        if !a.is_square() {
            return Err(Error::Dimension {
                expected: a.nrows(),
                got: a.ncols(),
            });
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("matrix has non-finite entries".into()));
        }
        // infinity norm (max absolute row sum)
        let scale = a
            .row_iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0_f64, f64::max);
        let lu = a.lu();
        let u = lu.u();
        for (row, pivot) in u.diagonal().iter().enumerate() {
            if pivot.abs() <= 1e-14 * scale {
                return Err(Error::Singular {
                    row,
                    pivot: pivot.abs(),
                    scale,
                });
            }
        }
        Ok(Factorization { lu })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let rhs = DVector::from_column_slice(b);
        self.lu
            .solve(&rhs)
            .map(|x| x.as_slice().to_vec())
            .ok_or(Error::Singular {
                row: 0,
                pivot: 0.0,
                scale: 0.0,
            })
    }
}

/// Solves `A x = b` by LU with partial pivoting. A pivot below `1e-14·‖A‖∞`
/// is reported as [`Error::Singular`].
pub fn lu_solve(a: &DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.nrows() {
        return Err(Error::Dimension {
            expected: a.nrows(),
            got: b.len(),
        });
    }
    Factorization::new(a.clone())?.solve(b)
}

/// Jacobian of `residual` at `x` by symmetric differences with step
/// `1e-6·(1 + |x_j|)`.
pub fn finite_difference_jacobian(
    mut residual: impl FnMut(&[f64]) -> Result<Vec<f64>>,
    x: &[f64],
) -> Result<DMatrix<f64>> {
    let n = x.len();
    let mut jac = DMatrix::zeros(n, n);
    let mut probe = x.to_vec();
    for j in 0..n {
        let h = 1e-6 * (1.0 + x[j].abs());
        probe[j] = x[j] + h;
        let plus = residual(&probe)?;
        probe[j] = x[j] - h;
        let minus = residual(&probe)?;
        probe[j] = x[j];
        if plus.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: plus.len(),
            });
        }
        for i in 0..n {
            jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Generic Newton-type loop. `correction(x, r)` returns `δ` with `J δ ≈ r`;
/// the update is `x ← x − δ`. Stops at the first iterate whose residual max
/// norm is at most `settings.tol`.
pub fn newton_iterate(
    mut residual: impl FnMut(&[f64]) -> Result<Vec<f64>>,
    mut correction: impl FnMut(&[f64], &[f64]) -> Result<Vec<f64>>,
    guess: Vec<f64>,
    settings: &NewtonSettings,
) -> Result<NewtonReport> {
    settings.validate()?;
    let mut x = guess;
    let mut r = residual(&x)?;
    let mut norm = max_norm(&r);
    for iteration in 0..=settings.max_iter {
        if norm <= settings.tol {
            return Ok(NewtonReport {
                x,
                iterations: iteration,
                residual: norm,
            });
        }
        if iteration == settings.max_iter || !norm.is_finite() {
            break;
        }
        let delta = correction(&x, &r)?;
        for (xi, di) in x.iter_mut().zip(&delta) {
            *xi -= di;
        }
        r = residual(&x)?;
        norm = max_norm(&r);
    }
    Err(Error::NonConvergence {
        iterations: settings.max_iter,
        residual: norm,
    })
}

/// Newton's method with a dense Jacobian. In finite-difference mode the
/// supplied `jacobian` is ignored; in chord mode it is evaluated once at the
/// initial guess and its factorization reused.
pub fn newton_solve(
    residual: impl Fn(&[f64]) -> Result<Vec<f64>>,
    jacobian: impl Fn(&[f64]) -> Result<DMatrix<f64>>,
    guess: Vec<f64>,
    settings: &NewtonSettings,
) -> Result<NewtonReport> {
    match settings.jacobian_mode {
        JacobianMode::Analytic => newton_iterate(
            &residual,
            |x, r| Factorization::new(jacobian(x)?)?.solve(r),
            guess,
            settings,
        ),
        JacobianMode::FiniteDifference => newton_iterate(
            &residual,
            |x, r| Factorization::new(finite_difference_jacobian(&residual, x)?)?.solve(r),
            guess,
            settings,
        ),
        JacobianMode::Chord => {
            let mut frozen: Option<Factorization> = None;
            newton_iterate(
                &residual,
                |x, r| {
                    if frozen.is_none() {
                        frozen = Some(Factorization::new(jacobian(x)?)?);
                    }
                    frozen.as_ref().expect("set above").solve(r)
                },
                guess,
                settings,
            )
        }
    }
}

/// Dense matrix of the cyclic forward average `(u_n + u_{n+1})/2`.
pub fn averaging_matrix(n: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = 0.5;
        a[(i, (i + 1) % n)] += 0.5;
    }
    a
}
