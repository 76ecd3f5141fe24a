//! Time integrators: the reduced Euler box (leapfrog) and Preissmann box
//! schemes, the Thomée–Vasudeva Murthy scheme, and the Heun and classical RK4
//! comparison methods.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Model, Params, StateZ};
use crate::error::{Error, Result};
use crate::solvers::{newton_iterate, newton_solve, JacobianMode, NewtonSettings};
use crate::spectral::{central_diff, forward_average, Difference, Field, Grid, Parity};

/// One Heun (explicit trapezoidal) step of `u_t = g(u)`.
pub fn heun_step(model: &Model, u: &Field, dt: f64) -> Field {
    let g0 = model.reduced_rhs(u);
    let predictor = u.axpy(dt, &g0);
    let g1 = model.reduced_rhs(&predictor);
    u.add(&g0.add(&g1).scale(0.5 * dt))
}

/// One classical fourth-order Runge–Kutta step of `u_t = g(u)`.
pub fn rk4_step(model: &Model, u: &Field, dt: f64) -> Field {
    let k1 = model.reduced_rhs(u);
    let k2 = model.reduced_rhs(&u.axpy(0.5 * dt, &k1));
    let k3 = model.reduced_rhs(&u.axpy(0.5 * dt, &k2));
    let k4 = model.reduced_rhs(&u.axpy(dt, &k3));
    let incr = k1.add(&k2.scale(2.0)).add(&k3.scale(2.0)).add(&k4);
    u.axpy(dt / 6.0, &incr)
}

/// Second time level for the leapfrog recursion: `(u0, heun_step(u0))`.
pub fn euler_box_start(model: &Model, u0: &Field, dt: f64) -> (Field, Field) {
    (u0.clone(), heun_step(model, u0, dt))
}

/// Reduced Euler box step `u^{i+1} = u^{i−1} + 2Δt g(u^i)`, with `g` built
/// from the centered difference (its cube standing in for `∂x³`).
pub fn euler_box_step(model: &Model, u_prev: &Field, u_curr: &Field, dt: f64) -> Field {
    u_prev.axpy(2.0 * dt, &model.reduced_rhs(u_curr))
}

/// Preissmann box scheme on the full `4N` unknowns `z = [u, φ, w, v]`.
///
/// The potential `φ` satisfies `φ_x = u`, so for fields with nonzero mean `m` it
/// is stored as its periodic part: `φ = m·x + φ̃`, and the constraint row reads
/// `−(m + δx⁺φ̃) + u_{n+1/2}`. The `(φ, w)` pair carries a gauge freedom
/// (`φ += c`, `w −= c/Δt`); the Newton system fixes it by replacing the first
/// constraint row, which is implied by the others, with `mean φ^{i+1} = mean φ^i`.
/// The `v` row is stored divided by `β` so that `β = 0` stays nonsingular.
#[derive(Clone, Debug)]
pub struct Preissmann {
    model: Model,
    settings: NewtonSettings,
    /// `L · μ`, dense and constant.
    l_avg: DMatrix<f64>,
}

impl Preissmann {
    pub fn new(model: Model, settings: NewtonSettings) -> Result<Preissmann> {
        model
            .grid()
            .require(Parity::Odd, "the Preissmann box scheme")?;
        settings.validate()?;
        let n = model.grid().points();
        let l = model.spectral().l_matrix();
        let l_avg = DMatrix::from_fn(n, n, |i, j| 0.5 * (l[i][j] + l[i][(j + n - 1) % n]));
        Ok(Preissmann {
            model,
            settings,
            l_avg,
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn settings(&self) -> &NewtonSettings {
        &self.settings
    }

    /// Box-consistent state from `u`: `δx⁺φ̃ = μu − m`, `μv = δx⁺u`,
    /// `δx⁺w = ½ μ g(u)`, with `φ̃` and `w` mean-free.
    pub fn lift(&self, u: &Field) -> Result<StateZ> {
        let ops = self.model.spectral();
        let dp = ops.difference_symbol(Difference::Forward);
        let avg = ops.average_symbol();
        let m = u.mean();
        let phi = ops.solve_symbol(&forward_average(u).map(|x| x - m), &dp, &[0])?;
        let v = ops.solve_symbol(&central_diff(u, Difference::Forward), &avg, &[])?;
        let ut = forward_average(&self.model.reduced_rhs(u)).scale(0.5);
        let w = ops.solve_symbol(&ut, &dp, &[0])?;
        Ok(StateZ {
            u: u.clone(),
            phi,
            w,
            v,
        })
    }

    /// Nodewise residual `[R0, R1, R2, R3]` (each of length `N`) of
    /// `M δt⁺z_{n+1/2} + K δx⁺z_n^{i+1/2} − δS/δz(z_{n+1/2}^{i+1/2})`.
    pub fn residual(&self, z_next: &StateZ, z_curr: &StateZ, dt: f64) -> Result<Vec<f64>> {
        z_next.u.same_grid(&z_curr.u)?;
        let Params {
            alpha,
            beta,
            gamma,
            lambda,
        } = *self.model.params();
        let n = z_curr.grid().points();
        let dx = z_curr.grid().dx();
        let m = z_curr.u.mean();
        let mid = |a: &Field, b: &Field| a.add(b).scale(0.5);
        let hu = mid(&z_curr.u, &z_next.u);
        let hphi = mid(&z_curr.phi, &z_next.phi);
        let hw = mid(&z_curr.w, &z_next.w);
        let hv = mid(&z_curr.v, &z_next.v);
        let big_u = forward_average(&hu);
        let big_w = forward_average(&hw);
        let big_v = forward_average(&hv);
        let l_u = self.model.spectral().apply_l(&big_u);
        let dphi_t = forward_average(&z_next.phi.sub(&z_curr.phi)).scale(1.0 / dt);
        let du_t = forward_average(&z_next.u.sub(&z_curr.u)).scale(1.0 / dt);

        let fwd = |f: &Field, i: usize| (f.values()[(i + 1) % n] - f.values()[i]) / dx;
        let mut r = vec![0.0; 4 * n];
        for i in 0..n {
            let uu = big_u.values()[i];
            r[i] = 0.5 * dphi_t.values()[i] - beta * fwd(&hv, i)
                + big_w.values()[i]
                + gamma * uu
                + 0.5 * lambda * uu * uu
                - alpha * l_u.values()[i];
            r[n + i] = -0.5 * du_t.values()[i] + fwd(&hw, i);
            r[2 * n + i] = -(m + fwd(&hphi, i)) + uu;
            r[3 * n + i] = fwd(&hu, i) - big_v.values()[i];
        }
        Ok(r)
    }

    fn gauged_residual(&self, z_next: &StateZ, z_curr: &StateZ, dt: f64) -> Result<Vec<f64>> {
        let n = z_curr.grid().points();
        let mut r = self.residual(z_next, z_curr, dt)?;
        r[2 * n] = z_next.phi.mean() - z_curr.phi.mean();
        Ok(r)
    }

    /// Jacobian of the gauge-fixed residual with respect to `z_next`.
    fn jacobian(&self, z_next: &StateZ, z_curr: &StateZ, dt: f64) -> DMatrix<f64> {
        let Params {
            alpha,
            beta,
            gamma,
            lambda,
        } = *self.model.params();
        let n = z_curr.grid().points();
        let dx = z_curr.grid().dx();
        let big_u = forward_average(&z_curr.u.add(&z_next.u).scale(0.5));
        let mut jac = DMatrix::zeros(4 * n, 4 * n);
        let (u, phi, w, v) = (0, n, 2 * n, 3 * n);
        for i in 0..n {
            let ip = (i + 1) % n;
            let coef = gamma + lambda * big_u.values()[i];
            // R0
            jac[(i, phi + i)] += 0.25 / dt;
            jac[(i, phi + ip)] += 0.25 / dt;
            jac[(i, v + i)] += 0.5 * beta / dx;
            jac[(i, v + ip)] -= 0.5 * beta / dx;
            jac[(i, w + i)] += 0.25;
            jac[(i, w + ip)] += 0.25;
            for j in 0..n {
                jac[(i, u + j)] -= 0.5 * alpha * self.l_avg[(i, j)];
            }
            jac[(i, u + i)] += 0.25 * coef;
            jac[(i, u + ip)] += 0.25 * coef;
            // R1
            jac[(n + i, u + i)] -= 0.25 / dt;
            jac[(n + i, u + ip)] -= 0.25 / dt;
            jac[(n + i, w + i)] -= 0.5 / dx;
            jac[(n + i, w + ip)] += 0.5 / dx;
            // R2
            if i == 0 {
                for j in 0..n {
                    jac[(2 * n, phi + j)] = 1.0 / n as f64;
                }
            } else {
                jac[(2 * n + i, phi + i)] += 0.5 / dx;
                jac[(2 * n + i, phi + ip)] -= 0.5 / dx;
                jac[(2 * n + i, u + i)] += 0.25;
                jac[(2 * n + i, u + ip)] += 0.25;
            }
            // R3
            jac[(3 * n + i, u + i)] -= 0.5 / dx;
            jac[(3 * n + i, u + ip)] += 0.5 / dx;
            jac[(3 * n + i, v + i)] -= 0.25;
            jac[(3 * n + i, v + ip)] -= 0.25;
        }
        jac
    }

    /// Analytic Jacobian of the gauge-fixed system (exposed for cross-checks).
    pub fn gauged_jacobian(&self, z_next: &StateZ, z_curr: &StateZ, dt: f64) -> DMatrix<f64> {
        self.jacobian(z_next, z_curr, dt)
    }

    /// Gauge-fixed residual (the system Newton actually solves).
    pub fn gauged(&self, z_next: &StateZ, z_curr: &StateZ, dt: f64) -> Result<Vec<f64>> {
        self.gauged_residual(z_next, z_curr, dt)
    }

    /// Advances one step by Newton iteration from `z_next = z_curr`.
    pub fn step(&self, z_curr: &StateZ, dt: f64) -> Result<(StateZ, usize)> {
        let grid = *z_curr.grid();
        let report = newton_solve(
            |x| self.gauged_residual(&StateZ::from_slice(grid, x)?, z_curr, dt),
            |x| Ok(self.jacobian(&StateZ::from_slice(grid, x)?, z_curr, dt)),
            z_curr.to_vec(),
            &self.settings,
        )?;
        Ok((StateZ::from_slice(grid, &report.x)?, report.iterations))
    }
}

/// Thomée–Vasudeva Murthy scheme for the Benjamin–Ono form
/// `δt⁺u + λ f(u^{i+1/2}) − α H δx⁺δx⁻ u^{i+1/2} = 0`,
/// `f(u)_n = (u_{n+1} + u_n + u_{n−1})(u_{n+1} − u_{n−1}) / (6Δx)`.
/// Even grids only; `β` and `γ` must vanish.
#[derive(Clone, Debug)]
pub struct Tvm {
    model: Model,
    settings: NewtonSettings,
}

impl Tvm {
    pub fn new(model: Model, settings: NewtonSettings) -> Result<Tvm> {
        model
            .grid()
            .require(Parity::Even, "the Thomée–Vasudeva Murthy scheme")?;
        settings.validate()?;
        let p = model.params();
        if p.beta != 0.0 || p.gamma != 0.0 {
            return Err(Error::InvalidParameter(
                "the Thomée–Vasudeva Murthy scheme is defined for beta = gamma = 0".into(),
            ));
        }
        Ok(Tvm { model, settings })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    fn flux(u: &Field) -> Field {
        let n = u.len();
        let dx = u.grid().dx();
        let v = u.values();
        Field::from_raw(
            *u.grid(),
            (0..n)
                .map(|i| {
                    let (a, b, c) = (v[(i + 1) % n], v[i], v[(i + n - 1) % n]);
                    (a + b + c) * (a - c) / (6.0 * dx)
                })
                .collect(),
        )
    }

    fn second_difference(u: &Field) -> Field {
        let n = u.len();
        let dx2 = u.grid().dx().powi(2);
        let v = u.values();
        Field::from_raw(
            *u.grid(),
            (0..n)
                .map(|i| (v[(i + 1) % n] - 2.0 * v[i] + v[(i + n - 1) % n]) / dx2)
                .collect(),
        )
    }

    pub fn residual(&self, u_next: &Field, u_curr: &Field, dt: f64) -> Field {
        let Params { alpha, lambda, .. } = *self.model.params();
        let mid = u_curr.add(u_next).scale(0.5);
        let disp = self.model.spectral().hilbert(&Self::second_difference(&mid));
        u_next
            .sub(u_curr)
            .scale(1.0 / dt)
            .axpy(lambda, &Self::flux(&mid))
            .axpy(-alpha, &disp)
    }

    /// Dense Jacobian with respect to `u_next`.
    pub fn jacobian(&self, u_next: &Field, u_curr: &Field, dt: f64) -> DMatrix<f64> {
        let Params { alpha, lambda, .. } = *self.model.params();
        let grid = *u_curr.grid();
        let n = grid.points();
        let dx = grid.dx();
        let mid = u_curr.add(u_next).scale(0.5);
        let v = mid.values();
        // circulant H δx⁺δx⁻ from its first column
        let mut e0 = vec![0.0; n];
        e0[0] = 1.0;
        let col = self
            .model
            .spectral()
            .hilbert(&Self::second_difference(&Field::from_raw(grid, e0)));
        let mut jac = DMatrix::from_fn(n, n, |i, j| -0.5 * alpha * col.values()[(i + n - j) % n]);
        for i in 0..n {
            jac[(i, i)] += 1.0 / dt;
            let (ip, im) = ((i + 1) % n, (i + n - 1) % n);
            let (a, b, c) = (v[ip], v[i], v[im]);
            let s = 0.5 * lambda / (6.0 * dx);
            jac[(i, ip)] += s * ((a - c) + (a + b + c));
            jac[(i, i)] += s * (a - c);
            jac[(i, im)] += s * ((a - c) - (a + b + c));
        }
        jac
    }

    /// Fourier symbol of the linear part `I/Δt − (α/2) H δx⁺δx⁻`.
    fn linear_symbol(&self, dt: f64) -> Vec<Complex<f64>> {
        let ops = self.model.spectral();
        let grid = ops.grid();
        let n = grid.points();
        let dx2 = grid.dx().powi(2);
        let alpha = self.model.params().alpha;
        ops.symbols()
            .sgn_diag
            .iter()
            .enumerate()
            .map(|(k, &s)| {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                let lap = (2.0 * theta.cos() - 2.0) / dx2;
                Complex::new(1.0 / dt, 0.0) - Complex::new(0.0, -f64::from(s)) * (0.5 * alpha * lap)
            })
            .collect()
    }

    pub fn step(&self, u_curr: &Field, dt: f64) -> Result<(Field, usize)> {
        let grid = *u_curr.grid();
        let residual = |x: &[f64]| -> Result<Vec<f64>> {
            Ok(self
                .residual(&Field::from_raw(grid, x.to_vec()), u_curr, dt)
                .into_values())
        };
        let report = match self.settings.jacobian_mode {
            JacobianMode::Chord => {
                let symbol = self.linear_symbol(dt);
                let ops = self.model.spectral();
                newton_iterate(
                    residual,
                    |_, r| Ok(ops.solve_symbol(&Field::from_raw(grid, r.to_vec()), &symbol, &[])?.into_values()),
                    u_curr.values().to_vec(),
                    &self.settings,
                )?
            }
            _ => newton_solve(
                residual,
                |x| Ok(self.jacobian(&Field::from_raw(grid, x.to_vec()), u_curr, dt)),
                u_curr.values().to_vec(),
                &self.settings,
            )?,
        };
        Ok((Field::from_raw(grid, report.x), report.iterations))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    EulerBox,
    Preissmann,
    Tvm,
    Heun,
    Rk4,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::EulerBox,
        Scheme::Preissmann,
        Scheme::Tvm,
        Scheme::Heun,
        Scheme::Rk4,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::EulerBox => "euler-box",
            Scheme::Preissmann => "preissmann",
            Scheme::Tvm => "tvm",
            Scheme::Heun => "heun",
            Scheme::Rk4 => "rk4",
        }
    }

    /// Grid parity the scheme insists on, if any.
    pub fn required_parity(&self) -> Option<Parity> {
        match self {
            Scheme::Preissmann => Some(Parity::Odd),
            Scheme::Tvm => Some(Parity::Even),
            _ => None,
        }
    }

    pub fn is_implicit(&self) -> bool {
        matches!(self, Scheme::Preissmann | Scheme::Tvm)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Scheme> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme `{s}`")))
    }
}

#[derive(Clone, Debug)]
enum Level {
    Single(Field),
    Leapfrog { prev: Option<Field>, curr: Field },
    Boxed(StateZ),
}

#[derive(Clone, Debug)]
enum Implicit {
    None,
    Preissmann(Preissmann),
    Tvm(Tvm),
}

/// A running simulation: scheme, current level(s), and the step counter.
#[derive(Clone, Debug)]
pub struct Simulation {
    scheme: Scheme,
    model: Model,
    dt: f64,
    t0: f64,
    steps: u64,
    level: Level,
    implicit: Implicit,
    last_iterations: usize,
}

impl Simulation {
    pub fn new(
        scheme: Scheme,
        model: Model,
        u0: Field,
        dt: f64,
        settings: NewtonSettings,
    ) -> Result<Simulation> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        if u0.grid() != model.grid() {
            return Err(Error::GridMismatch);
        }
        let (level, implicit) = match scheme {
            Scheme::EulerBox => (
                Level::Leapfrog {
                    prev: None,
                    curr: u0,
                },
                Implicit::None,
            ),
            Scheme::Heun | Scheme::Rk4 => (Level::Single(u0), Implicit::None),
            Scheme::Preissmann => {
                let p = Preissmann::new(model.clone(), settings)?;
                (Level::Boxed(p.lift(&u0)?), Implicit::Preissmann(p))
            }
            Scheme::Tvm => (
                Level::Single(u0),
                Implicit::Tvm(Tvm::new(model.clone(), settings)?),
            ),
        };
        Ok(Simulation {
            scheme,
            model,
            dt,
            t0: 0.0,
            steps: 0,
            level,
            implicit,
            last_iterations: 0,
        })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn grid(&self) -> &Grid {
        self.model.grid()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn time(&self) -> f64 {
        self.t0 + self.steps as f64 * self.dt
    }

    /// Newton iterations used by the last implicit step (0 for explicit schemes).
    pub fn last_iterations(&self) -> usize {
        self.last_iterations
    }

    pub fn u(&self) -> &Field {
        match &self.level {
            Level::Single(u) => u,
            Level::Leapfrog { curr, .. } => curr,
            Level::Boxed(z) => &z.u,
        }
    }

    /// Full four-component state (Preissmann only).
    pub fn state_z(&self) -> Option<&StateZ> {
        match &self.level {
            Level::Boxed(z) => Some(z),
            _ => None,
        }
    }

    /// Previous time level of the leapfrog recursion, once it exists.
    pub fn previous(&self) -> Option<&Field> {
        match &self.level {
            Level::Leapfrog { prev, .. } => prev.as_ref(),
            _ => None,
        }
    }

    pub fn step(&mut self) -> Result<()> {
        let dt = self.dt;
        self.last_iterations = 0;
        match (&mut self.level, &self.implicit) {
            (Level::Leapfrog { prev, curr }, _) => {
                let next = match prev {
                    None => heun_step(&self.model, curr, dt),
                    Some(p) => euler_box_step(&self.model, p, curr, dt),
                };
                *prev = Some(std::mem::replace(curr, next));
            }
            (Level::Single(u), Implicit::Tvm(tvm)) => {
                let (next, its) = tvm.step(u, dt)?;
                self.last_iterations = its;
                *u = next;
            }
            (Level::Single(u), _) => {
                *u = match self.scheme {
                    Scheme::Rk4 => rk4_step(&self.model, u, dt),
                    _ => heun_step(&self.model, u, dt),
                };
            }
            (Level::Boxed(z), Implicit::Preissmann(p)) => {
                let (next, its) = p.step(z, dt)?;
                self.last_iterations = its;
                *z = next;
            }
            (Level::Boxed(_), _) => unreachable!("boxed state always carries a Preissmann solver"),
        }
        self.steps += 1;
        Ok(())
    }

    /// Steps until `time() >= t_end - dt/2`.
    pub fn run_until(&mut self, t_end: f64) -> Result<()> {
        while self.time() < t_end - 0.5 * self.dt {
            self.step()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::finite_difference_jacobian;
    use std::f64::consts::PI;

    fn smooth(grid: Grid) -> Field {
        let l = grid.length();
        Field::from_fn(grid, |x| 0.5 * (2.0 * PI * x / l).sin() + 0.2 * (4.0 * PI * x / l).cos() + 0.3)
    }

    fn benjamin() -> Params {
        Params::new(0.5, 0.05, 0.2, 1.0).unwrap()
    }

    #[test]
    fn explicit_steps_fix_zero_and_mass() {
        let g = Grid::new(10.0, 32).unwrap();
        let model = Model::new(g, benjamin());
        let z = Field::zeros(g);
        assert_eq!(heun_step(&model, &z, 0.01).max_abs(), 0.0);
        assert_eq!(rk4_step(&model, &z, 0.01).max_abs(), 0.0);
        assert_eq!(euler_box_step(&model, &z, &z, 0.01).max_abs(), 0.0);
        let (a, b) = euler_box_start(&model, &z, 0.01);
        assert_eq!(a.max_abs() + b.max_abs(), 0.0);

        let u = smooth(g);
        let s = u.sum();
        for next in [heun_step(&model, &u, 0.01), rk4_step(&model, &u, 0.01)] {
            assert!((next.sum() - s).abs() < 1e-12 * s.abs());
        }
        let (_, u1) = euler_box_start(&model, &u, 0.01);
        let u2 = euler_box_step(&model, &u, &u1, 0.01);
        assert!((u2.sum() - s).abs() < 1e-12 * s.abs());
    }

    #[test]
    fn bootstrap_is_first_order_consistent() {
        let g = Grid::new(10.0, 32).unwrap();
        let model = Model::new(g, benjamin());
        let u = smooth(g);
        let g0 = model.reduced_rhs(&u);
        let mut prev = f64::NAN;
        for dt in [1e-2, 5e-3, 2.5e-3] {
            let (_, u1) = euler_box_start(&model, &u, dt);
            let defect = u1.sub(&u.axpy(dt, &g0)).max_abs();
            if prev.is_finite() {
                let ratio = prev / defect;
                assert!(ratio > 3.5 && ratio < 4.5, "{ratio}");
            }
            prev = defect;
        }
    }

    #[test]
    fn rk4_local_error_is_fifth_order() {
        let g = Grid::new(10.0, 32).unwrap();
        let model = Model::new(g, benjamin());
        let u = smooth(g);
        let mut prev = f64::NAN;
        for dt in [0.2, 0.1, 0.05] {
            let one = rk4_step(&model, &u, dt);
            let two = rk4_step(&model, &rk4_step(&model, &u, dt / 2.0), dt / 2.0);
            let diff = one.sub(&two).max_abs();
            if prev.is_finite() {
                let ratio = prev / diff;
                assert!(ratio > 25.0 && ratio < 40.0, "{ratio} {diff:e}");
            }
            prev = diff;
        }
    }

    #[test]
    fn preissmann_rejects_even_grids() {
        let model = Model::new(Grid::new(10.0, 64).unwrap(), benjamin());
        assert!(matches!(
            Preissmann::new(model.clone(), NewtonSettings::default()),
            Err(Error::Parity { .. })
        ));
        assert!(Simulation::new(
            Scheme::Preissmann,
            model,
            Field::zeros(Grid::new(10.0, 64).unwrap()),
            0.1,
            NewtonSettings::default()
        )
        .is_err());
    }

    #[test]
    fn preissmann_zero_state_is_fixed_point() {
        let g = Grid::new(10.0, 15).unwrap();
        let p = Preissmann::new(Model::new(g, benjamin()), NewtonSettings::default()).unwrap();
        let z = StateZ::zeros(g);
        assert!(p.residual(&z, &z, 0.1).unwrap().iter().all(|&r| r == 0.0));
        let (next, its) = p.step(&z, 0.1).unwrap();
        assert_eq!(its, 0);
        assert_eq!(next, z);
    }

    #[test]
    fn preissmann_jacobian_matches_finite_differences() {
        let g = Grid::new(10.0, 11).unwrap();
        for params in [benjamin(), Params::benjamin_ono(1.0, 1.0)] {
            let p = Preissmann::new(Model::new(g, params), NewtonSettings::default()).unwrap();
            let z0 = p.lift(&smooth(g)).unwrap();
            let z1 = p.lift(&smooth(g).map(|v| v * 1.1 - 0.03)).unwrap();
            let fd = finite_difference_jacobian(
                |x| p.gauged(&StateZ::from_slice(g, x)?, &z0, 0.05),
                &z1.to_vec(),
            )
            .unwrap();
            let an = p.gauged_jacobian(&z1, &z0, 0.05);
            let err = (&fd - &an).abs().max();
            assert!(err < 1e-6 * an.abs().max(), "{err}");
        }
    }

    #[test]
    fn preissmann_step_converges_and_conserves_mass() {
        let g = Grid::new(10.0, 21).unwrap();
        let settings = NewtonSettings::default();
        let p = Preissmann::new(Model::new(g, benjamin()), settings).unwrap();
        let mut z = p.lift(&smooth(g)).unwrap();
        let s0 = z.u.sum();
        for _ in 0..5 {
            let (next, its) = p.step(&z, 0.02).unwrap();
            assert!(its > 0 && its < 10);
            let full = p.residual(&next, &z, 0.02).unwrap();
            assert!(full.iter().all(|r| r.abs() < 1e-10));
            assert!((next.u.sum() - s0).abs() <= 10.0 * settings.tol);
            z = next;
        }
    }

    #[test]
    fn preissmann_lift_is_box_consistent() {
        let g = Grid::new(10.0, 21).unwrap();
        let p = Preissmann::new(Model::new(g, benjamin()), NewtonSettings::default()).unwrap();
        let z = p.lift(&smooth(g)).unwrap();
        // with z_next = z_curr the constraint rows must vanish
        let r = p.residual(&z, &z, 0.1).unwrap();
        let n = 21;
        assert!(r[2 * n..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn analytic_and_fd_newton_agree_on_preissmann() {
        let g = Grid::new(10.0, 9).unwrap();
        let model = Model::new(g, benjamin());
        let a = Preissmann::new(model.clone(), NewtonSettings::default()).unwrap();
        let f = Preissmann::new(
            model,
            NewtonSettings {
                jacobian_mode: JacobianMode::FiniteDifference,
                ..NewtonSettings::default()
            },
        )
        .unwrap();
        let z = a.lift(&smooth(g)).unwrap();
        let (za, _) = a.step(&z, 0.05).unwrap();
        let (zf, _) = f.step(&z, 0.05).unwrap();
        let diff = za
            .to_vec()
            .iter()
            .zip(zf.to_vec())
            .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(diff < 1e-9, "{diff}");
    }

    #[test]
    fn tvm_requirements() {
        let odd = Model::new(Grid::new(30.0, 63).unwrap(), Params::benjamin_ono(1.0, 1.0));
        assert!(Tvm::new(odd, NewtonSettings::default()).is_err());
        let even = Model::new(Grid::new(30.0, 64).unwrap(), benjamin());
        assert!(Tvm::new(even, NewtonSettings::default()).is_err());
    }

    #[test]
    fn tvm_jacobian_and_modes() {
        let g = Grid::new(30.0, 16).unwrap();
        let model = Model::new(g, Params::benjamin_ono(1.0, 1.0));
        let tvm = Tvm::new(model.clone(), NewtonSettings::default()).unwrap();
        let u = smooth(g);
        let x = u.map(|v| v + 0.01);
        let fd = finite_difference_jacobian(
            |y| Ok(tvm.residual(&Field::from_raw(g, y.to_vec()), &u, 0.01).into_values()),
            x.values(),
        )
        .unwrap();
        let an = tvm.jacobian(&x, &u, 0.01);
        assert!((&fd - &an).abs().max() < 1e-6 * an.abs().max());

        let chord = Tvm::new(
            model,
            NewtonSettings {
                jacobian_mode: JacobianMode::Chord,
                ..NewtonSettings::default()
            },
        )
        .unwrap();
        let (a, _) = tvm.step(&u, 0.01).unwrap();
        let (b, _) = chord.step(&u, 0.01).unwrap();
        assert!(a.sub(&b).max_abs() < 1e-12);
        let (z, its) = tvm.step(&Field::zeros(g), 0.01).unwrap();
        assert_eq!((z.max_abs(), its), (0.0, 0));
    }

    #[test]
    fn tvm_conserves_mass_and_momentum() {
        let g = Grid::new(30.0, 32).unwrap();
        let settings = NewtonSettings::default();
        let tvm = Tvm::new(Model::new(g, Params::benjamin_ono(1.0, 1.0)), settings).unwrap();
        let u0 = smooth(g);
        let (u1, _) = tvm.step(&u0, 0.01).unwrap();
        assert!((u1.sum() - u0.sum()).abs() < 10.0 * settings.tol);
        assert!((u1.dot(&u1) - u0.dot(&u0)).abs() < 10.0 * settings.tol);
    }

    #[test]
    fn simulation_tracks_time() {
        let g = Grid::new(10.0, 15).unwrap();
        for scheme in Scheme::ALL {
            let params = if scheme == Scheme::Tvm {
                Params::benjamin_ono(1.0, 1.0)
            } else {
                benjamin()
            };
            let grid = if scheme == Scheme::Tvm { Grid::new(10.0, 16).unwrap() } else { g };
            let mut sim = Simulation::new(
                scheme,
                Model::new(grid, params),
                smooth(grid),
                0.01,
                NewtonSettings::default(),
            )
            .unwrap();
            sim.run_until(0.05).unwrap();
            assert_eq!(sim.steps(), 5, "{scheme}");
            assert!((sim.time() - 0.05).abs() < 1e-15);
            assert_eq!(scheme.name().parse::<Scheme>().unwrap(), scheme);
        }
        assert!("leapfrog".parse::<Scheme>().is_err());
    }
}
