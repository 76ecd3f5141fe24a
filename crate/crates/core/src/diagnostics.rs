//! Invariants, the discrete symplectic two-form along tangent trajectories,
//! error norms and convergence fits.

use serde::{Deserialize, Serialize};

use crate::dynamics::{Model, Params, StateZ};
use crate::error::{Error, Result};
use crate::spectral::{central_diff, Difference, Field, Grid, Parity};

/// Mass, momentum and energy of one sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantRecord {
    pub t: f64,
    /// `Δx Σ u_n`
    pub mass: f64,
    /// `−Δx Σ u_n²/2`
    pub momentum: f64,
    /// `Δx Σ (−(γ/2)u² − (λ/6)u³ + (α/2)u Lu − (β/2)(δx u)²)`
    pub energy: f64,
}

pub fn invariants(u: &Field, model: &Model, t: f64) -> InvariantRecord {
    let Params {
        alpha,
        beta,
        gamma,
        lambda,
    } = *model.params();
    let dx = u.grid().dx();
    let lu = model.spectral().apply_l(u);
    let ux = central_diff(u, Difference::Centered);
    let energy = u
        .values()
        .iter()
        .zip(lu.values())
        .zip(ux.values())
        .map(|((&u, &l), &d)| {
            -0.5 * gamma * u * u - lambda / 6.0 * u * u * u + 0.5 * alpha * u * l
                - 0.5 * beta * d * d
        })
        .sum::<f64>()
        * dx;
    InvariantRecord {
        t,
        mass: dx * u.sum(),
        momentum: -0.5 * dx * u.dot(u),
        energy,
    }
}

/// Max norm and discrete L2 norm `sqrt(Δx Σ (u − ref)²)` of the difference.
pub fn error_norms(u: &Field, reference: &Field) -> Result<(f64, f64)> {
    u.same_grid(reference)?;
    let diff = u.sub(reference);
    Ok((diff.max_abs(), (u.grid().dx() * diff.dot(&diff)).sqrt()))
}

/// Two tangent trajectories, each given at consecutive levels `i−1` and `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentPair {
    pub xi: [StateZ; 2],
    pub eta: [StateZ; 2],
}

impl TangentPair {
    /// Lifts reduced tangents `(du^{i−1}, du^i)` to full four-component states.
    pub fn lift(
        model: &Model,
        xi: (&Field, &Field),
        eta: (&Field, &Field),
        dt: f64,
    ) -> Result<TangentPair> {
        let lift = |a: &Field, b: &Field| -> Result<[StateZ; 2]> {
            Ok([
                model.lift_state(a, None, Some(b), dt)?,
                model.lift_state(b, Some(a), None, dt)?,
            ])
        };
        Ok(TangentPair {
            xi: lift(xi.0, xi.1)?,
            eta: lift(eta.0, eta.1)?,
        })
    }
}

/// `Σ_n ½ (ξ_n^{i−1}ᵀ M η_n^i − η_n^{i−1}ᵀ M ξ_n^i)`.
pub fn two_form_sum(pair: &TangentPair, model: &Model) -> f64 {
    let s = model.structure();
    let n = pair.xi[0].grid().points();
    (0..n)
        .map(|k| {
            let (x0, x1) = (pair.xi[0].node(k), pair.xi[1].node(k));
            let (e0, e1) = (pair.eta[0].node(k), pair.eta[1].node(k));
            0.5 * (s.m_form(&x0, &e1) - s.m_form(&e0, &x1))
        })
        .sum()
}

/// Linearized leapfrog `du^{i+1} = du^{i−1} + 2Δt J(u^i) du^i`.
pub fn tangent_step(
    model: &Model,
    du_prev: &Field,
    du_curr: &Field,
    u_curr: &Field,
    dt: f64,
) -> Result<Field> {
    model.grid().require(Parity::Odd, "tangent propagation")?;
    du_prev.same_grid(du_curr)?;
    du_prev.same_grid(u_curr)?;
    Ok(du_prev.axpy(2.0 * dt, &model.linearize(u_curr).apply(du_curr)))
}

/// Per-level errors and the least-squares slope of `log error` against `log Δx`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub points: Vec<usize>,
    pub dx: Vec<f64>,
    pub errors: Vec<f64>,
    /// `None` when some error is already at round-off and a slope is meaningless.
    pub order: Option<f64>,
}

/// Errors at or below this level are treated as exact reproduction.
pub const ROUNDOFF_FLOOR: f64 = 1e-13;

pub fn fit_order(dx: &[f64], errors: &[f64]) -> Option<f64> {
    if dx.len() < 2 || errors.iter().any(|&e| !(e > ROUNDOFF_FLOOR) || !e.is_finite()) {
        return None;
    }
    let xs: Vec<f64> = dx.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Runs `error_at` on each grid of the (strictly increasing) sequence and fits the order.
pub fn convergence_study(
    length: f64,
    points: &[usize],
    mut error_at: impl FnMut(Grid) -> Result<f64>,
) -> Result<ConvergenceReport> {
    if points.len() < 2 {
        return Err(Error::InvalidParameter(
            "a convergence study needs at least two grids".into(),
        ));
    }
    if points.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "grid sequence must be strictly increasing".into(),
        ));
    }
    let mut dx = Vec::with_capacity(points.len());
    let mut errors = Vec::with_capacity(points.len());
    for &n in points {
        let grid = Grid::new(length, n)?;
        dx.push(grid.dx());
        errors.push(error_at(grid)?);
    }
    let order = fit_order(&dx, &errors);
    Ok(ConvergenceReport {
        points: points.to_vec(),
        dx,
        errors,
        order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn random_z(grid: Grid, rng: &mut StdRng) -> StateZ {
        let mut f = || Field::from_raw(grid, (0..grid.points()).map(|_| rng.gen_range(-1.0..1.0)).collect());
        StateZ::new(f(), f(), f(), f()).unwrap()
    }

    #[test]
    fn invariants_of_simple_fields() {
        let l = 30.0;
        let g = Grid::new(l, 64).unwrap();
        let model = Model::new(g, Params::new(1.0, 0.5, 0.3, 1.0).unwrap());
        let c = invariants(&Field::from_fn(g, |x| (2.0 * PI * x / l).cos()), &model, 0.0);
        assert!(c.mass.abs() < 1e-13);
        let k = invariants(&Field::constant(g, 2.0), &model, 1.5);
        assert!((k.momentum + l * 4.0 / 2.0).abs() < 1e-12);
        assert_eq!(k.t, 1.5);
        assert!(k.momentum <= 0.0);
    }

    #[test]
    fn error_norm_examples() {
        let g = Grid::new(7.0, 10).unwrap();
        let a = Field::from_fn(g, |x| x.sin());
        assert_eq!(error_norms(&a, &a).unwrap(), (0.0, 0.0));
        let b = a.map(|v| v + 1.0);
        let (m, l2) = error_norms(&b, &a).unwrap();
        assert!((m - 1.0).abs() < 1e-15 && (l2 - 7f64.sqrt()).abs() < 1e-14);
        assert_eq!(error_norms(&a, &b).unwrap(), error_norms(&b, &a).unwrap());
        let other = Field::zeros(Grid::new(7.0, 11).unwrap());
        assert!(error_norms(&a, &other).is_err());
    }

    #[test]
    fn two_form_trivial_cases() {
        let g = Grid::new(10.0, 9).unwrap();
        let model = Model::new(g, Params::benjamin_ono(1.0, 1.0));
        let mut rng = StdRng::seed_from_u64(1);
        let z = [random_z(g, &mut rng), random_z(g, &mut rng)];
        let same = TangentPair {
            xi: z.clone(),
            eta: z.clone(),
        };
        assert!(two_form_sum(&same, &model).abs() < 1e-14);

        let only_wv = |z: &StateZ| StateZ {
            u: Field::zeros(g),
            phi: Field::zeros(g),
            ..z.clone()
        };
        let a = [random_z(g, &mut rng), random_z(g, &mut rng)];
        let b = [random_z(g, &mut rng), random_z(g, &mut rng)];
        let pair = TangentPair {
            xi: [only_wv(&a[0]), only_wv(&a[1])],
            eta: [only_wv(&b[0]), only_wv(&b[1])],
        };
        assert_eq!(two_form_sum(&pair, &model), 0.0);
    }

    #[test]
    fn two_form_matches_component_double_sum() {
        let g = Grid::new(10.0, 9).unwrap();
        let model = Model::new(g, Params::new(0.4, 0.3, 0.0, 1.0).unwrap());
        let mut rng = StdRng::seed_from_u64(2);
        let pair = TangentPair {
            xi: [random_z(g, &mut rng), random_z(g, &mut rng)],
            eta: [random_z(g, &mut rng), random_z(g, &mut rng)],
        };
        let m = [[0.0, 0.5, 0.0, 0.0], [-0.5, 0.0, 0.0, 0.0], [0.0; 4], [0.0; 4]];
        let mut want = 0.0;
        for n in 0..9 {
            for a in 0..4 {
                for b in 0..4 {
                    want += 0.5
                        * m[a][b]
                        * (pair.xi[0].components()[a].values()[n] * pair.eta[1].components()[b].values()[n]
                            - pair.eta[0].components()[a].values()[n] * pair.xi[1].components()[b].values()[n]);
                }
            }
        }
        assert!((two_form_sum(&pair, &model) - want).abs() < 1e-14);
    }

    #[test]
    fn tangent_step_basics() {
        let g = Grid::new(10.0, 15).unwrap();
        let p = Params::new(0.5, 0.1, 0.2, 0.0).unwrap();
        let model = Model::new(g, p);
        let zero = Field::zeros(g);
        let mut rng = StdRng::seed_from_u64(3);
        let u = Field::from_raw(g, (0..15).map(|_| rng.gen_range(-1.0..1.0)).collect());
        assert_eq!(tangent_step(&model, &zero, &zero, &u, 0.01).unwrap().max_abs(), 0.0);
        // with λ = 0 the scheme is linear, so tangents follow the scheme itself
        let a = Field::from_raw(g, (0..15).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let b = Field::from_raw(g, (0..15).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let t = tangent_step(&model, &a, &b, &zero, 0.01).unwrap();
        let s = crate::integrators::euler_box_step(&model, &a, &b, 0.01);
        assert!(t.sub(&s).max_abs() < 1e-14);
        let even = Model::new(Grid::new(10.0, 16).unwrap(), p);
        let z = Field::zeros(*even.grid());
        assert!(tangent_step(&even, &z, &z, &z, 0.01).is_err());
    }

    #[test]
    fn convergence_study_fits_known_orders() {
        let report = convergence_study(1.0, &[10, 20, 40], |g| Ok(3.0 * g.dx().powi(2))).unwrap();
        assert!((report.order.unwrap() - 2.0).abs() < 1e-12);
        let exact = convergence_study(1.0, &[10, 20], |_| Ok(1e-16)).unwrap();
        assert_eq!(exact.order, None);
        assert!(convergence_study(1.0, &[10], |_| Ok(1.0)).is_err());
        assert!(convergence_study(1.0, &[20, 10], |_| Ok(1.0)).is_err());
    }
}
