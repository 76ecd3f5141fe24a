//! The Benjamin equation `u_t + γu_x + λuu_x − αLu_x − βu_xxx = 0` in its
//! four-component first-order form `M z_t + K z_x = δS/δz`, `z = [u, φ, w, v]`,
//! and the reduced single-field vector field used by the explicit schemes.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{central_diff, Difference, Field, Grid, Spectral};

/// PDE coefficients. Both signs occur in practice.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Nonlocal dispersion (coefficient of `L u_x`).
    pub alpha: f64,
    /// Third-derivative dispersion.
    pub beta: f64,
    /// Linear advection.
    pub gamma: f64,
    /// Quadratic nonlinearity.
    pub lambda: f64,
}

impl Params {
    pub fn new(alpha: f64, beta: f64, gamma: f64, lambda: f64) -> Result<Params> {
        let p = Params {
            alpha,
            beta,
            gamma,
            lambda,
        };
        p.validate()?;
        Ok(p)
    }

    /// Benjamin–Ono: `u_t + λuu_x − αLu_x = 0`.
    pub fn benjamin_ono(alpha: f64, lambda: f64) -> Params {
        Params {
            alpha,
            beta: 0.0,
            gamma: 0.0,
            lambda,
        }
    }

    /// KdV: `u_t + λuu_x − βu_xxx = 0`.
    pub fn kdv(beta: f64, lambda: f64) -> Params {
        Params {
            alpha: 0.0,
            beta,
            gamma: 0.0,
            lambda,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("lambda", self.lambda),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite")));
            }
        }
        Ok(())
    }
}

/// `z = [u, φ, w, v]` on a common grid.
#[derive(Clone, Debug, PartialEq)]
pub struct StateZ {
    pub u: Field,
    pub phi: Field,
    pub w: Field,
    pub v: Field,
}

impl StateZ {
    pub fn new(u: Field, phi: Field, w: Field, v: Field) -> Result<StateZ> {
        u.same_grid(&phi)?;
        u.same_grid(&w)?;
        u.same_grid(&v)?;
        Ok(StateZ { u, phi, w, v })
    }

    pub fn zeros(grid: Grid) -> StateZ {
        StateZ {
            u: Field::zeros(grid),
            phi: Field::zeros(grid),
            w: Field::zeros(grid),
            v: Field::zeros(grid),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    pub fn components(&self) -> [&Field; 4] {
        [&self.u, &self.phi, &self.w, &self.v]
    }

    /// Components stacked as `[u, φ, w, v]`, length `4N`.
    pub fn to_vec(&self) -> Vec<f64> {
        self.components()
            .iter()
            .flat_map(|f| f.values().iter().copied())
            .collect()
    }

    pub fn from_slice(grid: Grid, x: &[f64]) -> Result<StateZ> {
        let n = grid.points();
        if x.len() != 4 * n {
            return Err(Error::Dimension {
                expected: 4 * n,
                got: x.len(),
            });
        }
        let part = |i: usize| Field::from_raw(grid, x[i * n..(i + 1) * n].to_vec());
        Ok(StateZ {
            u: part(0),
            phi: part(1),
            w: part(2),
            v: part(3),
        })
    }

    /// Value of the four components at node `n`.
    pub fn node(&self, n: usize) -> [f64; 4] {
        [
            self.u.values()[n],
            self.phi.values()[n],
            self.w.values()[n],
            self.v.values()[n],
        ]
    }
}

/// The skew-symmetric structure matrices of the first-order form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StructureMatrices {
    pub m: [[f64; 4]; 4],
    pub k: [[f64; 4]; 4],
}

impl StructureMatrices {
    pub fn new(beta: f64) -> StructureMatrices {
        let mut m = [[0.0; 4]; 4];
        m[0][1] = 0.5;
        m[1][0] = -0.5;
        let mut k = [[0.0; 4]; 4];
        k[0][3] = -beta;
        k[3][0] = beta;
        k[1][2] = 1.0;
        k[2][1] = -1.0;
        StructureMatrices { m, k }
    }

    /// `aᵀ M b`
    pub fn m_form(&self, a: &[f64; 4], b: &[f64; 4]) -> f64 {
        bilinear(&self.m, a, b)
    }

    /// `aᵀ K b`
    pub fn k_form(&self, a: &[f64; 4], b: &[f64; 4]) -> f64 {
        bilinear(&self.k, a, b)
    }
}

fn bilinear(mat: &[[f64; 4]; 4], a: &[f64; 4], b: &[f64; 4]) -> f64 {
    (0..4)
        .map(|i| (0..4).map(|j| a[i] * mat[i][j] * b[j]).sum::<f64>())
        .sum()
}

/// Spatial difference operator used inside the reduced vector field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Derivative {
    #[default]
    Centered,
    Spectral,
}

/// A parameter set bound to a grid, with the spectral operators it needs.
#[derive(Clone, Debug)]
pub struct Model {
    params: Params,
    ops: Spectral,
    derivative: Derivative,
}

impl Model {
    pub fn new(grid: Grid, params: Params) -> Model {
        Model::with_derivative(grid, params, Derivative::Centered)
    }

    pub fn with_derivative(grid: Grid, params: Params, derivative: Derivative) -> Model {
        Model {
            params,
            ops: Spectral::new(grid),
            derivative,
        }
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn grid(&self) -> &Grid {
        self.ops.grid()
    }

    pub fn spectral(&self) -> &Spectral {
        &self.ops
    }

    pub fn structure(&self) -> StructureMatrices {
        StructureMatrices::new(self.params.beta)
    }

    /// The difference operator `D` of the reduced vector field.
    pub fn d(&self, u: &Field) -> Field {
        match self.derivative {
            Derivative::Centered => central_diff(u, Difference::Centered),
            Derivative::Spectral => self.ops.derivative(u),
        }
    }

    /// Variational derivative of `S` evaluated nodewise, with `L` applied to the
    /// whole `u` vector: `[−w − γu − (λ/2)u² + αLu, 0, −u, βv]`.
    pub fn grad_s(&self, z: &StateZ) -> [Field; 4] {
        let Params {
            alpha,
            beta,
            gamma,
            lambda,
        } = self.params;
        let lu = self.ops.apply_l(&z.u);
        let first = Field::from_raw(
            *z.grid(),
            z.u.values()
                .iter()
                .zip(z.w.values())
                .zip(lu.values())
                .map(|((&u, &w), &l)| -w - gamma * u - 0.5 * lambda * u * u + alpha * l)
                .collect(),
        );
        [first, Field::zeros(*z.grid()), z.u.scale(-1.0), z.v.scale(beta)]
    }

    /// `g(u) = −D(γu + (λ/2)u² − αLu) + βD³u`, the right-hand side of `u_t = g(u)`
    /// after eliminating `φ`, `w`, `v`. Its grid sum vanishes exactly.
    pub fn reduced_rhs(&self, u: &Field) -> Field {
        let Params {
            alpha,
            beta,
            gamma,
            lambda,
        } = self.params;
        let lu = self.ops.apply_l(u);
        let flux = Field::from_raw(
            *u.grid(),
            u.values()
                .iter()
                .zip(lu.values())
                .map(|(&u, &l)| gamma * u + 0.5 * lambda * u * u - alpha * l)
                .collect(),
        );
        let mut g = self.d(&flux).scale(-1.0);
        if beta != 0.0 {
            let third = self.d(&self.d(&self.d(u)));
            g = g.axpy(beta, &third);
        }
        g
    }

    /// Fréchet derivative of [`Model::reduced_rhs`] at `u`.
    pub fn linearize(&self, u: &Field) -> Linearization<'_> {
        Linearization {
            model: self,
            u: u.clone(),
        }
    }

    /// Reconstructs `z = [u, φ, w, v]` from `u` through `v = δx u`, `δx φ = u − ū`
    /// and `δx w = ½ δt u`, with `φ`, `w` normalized to zero mean. The time
    /// difference is centered when both neighbours are given, one-sided when
    /// only one is, and zero otherwise. Odd grids only.
    pub fn lift_state(
        &self,
        u: &Field,
        u_prev: Option<&Field>,
        u_next: Option<&Field>,
        dt: f64,
    ) -> Result<StateZ> {
        let grid = *u.grid();
        for other in [u_prev, u_next].into_iter().flatten() {
            u.same_grid(other)?;
        }
        let v = central_diff(u, Difference::Centered);
        let phi = self.ops.invert_centered(u)?;
        let u_t = match (u_prev, u_next) {
            (Some(p), Some(n)) => n.sub(p).scale(0.5 / dt),
            (Some(p), None) => u.sub(p).scale(1.0 / dt),
            (None, Some(n)) => n.sub(u).scale(1.0 / dt),
            (None, None) => Field::zeros(grid),
        };
        let w = self.ops.invert_centered(&u_t.scale(0.5))?;
        Ok(StateZ { u: u.clone(), phi, w, v })
    }
}

/// Linear operator `du ↦ −D(γ du + λ u du − αL du) + βD³du`.
pub struct Linearization<'a> {
    model: &'a Model,
    u: Field,
}

impl Linearization<'_> {
    pub fn apply(&self, du: &Field) -> Field {
        let Params {
            alpha,
            beta,
            gamma,
            lambda,
        } = self.model.params;
        let ldu = self.model.ops.apply_l(du);
        let inner = Field::from_raw(
            *du.grid(),
            du.values()
                .iter()
                .zip(self.u.values())
                .zip(ldu.values())
                .map(|((&d, &u), &l)| gamma * d + lambda * u * d - alpha * l)
                .collect(),
        );
        let mut out = self.model.d(&inner).scale(-1.0);
        if beta != 0.0 {
            let m = self.model;
            out = out.axpy(beta, &m.d(&m.d(&m.d(du))));
        }
        out
    }

    /// Dense `N×N` matrix, assembled column by column.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        let grid = *self.u.grid();
        let n = grid.points();
        let mut mat = DMatrix::zeros(n, n);
        let mut e = Field::zeros(grid);
        for j in 0..n {
            let mut vals = e.into_values();
            vals[j] = 1.0;
            if j > 0 {
                vals[j - 1] = 0.0;
            }
            e = Field::from_raw(grid, vals);
            let col = self.apply(&e);
            for (i, v) in col.values().iter().enumerate() {
                mat[(i, j)] = *v;
            }
        }
        mat
    }
}
