//! Block Jacobian `M = [[A, B], [C, D]]` with `B = E - u u^t`, `C = -E + v v^t`,
//! `A = a1 a2^t`, `D = d1 d2^t`, and its factored characteristic polynomial.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::det::{ipr2_bracket, Factored};
use super::grid::Grid;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct RankStructuredJacobian {
    e: DMatrix<f64>,
    u: DVector<f64>,
    v: DVector<f64>,
    a1: DVector<f64>,
    a2: DVector<f64>,
    d1: DVector<f64>,
    d2: DVector<f64>,
    b_inv: DMatrix<f64>,
    det_b: f64,
    grid: Option<Grid>,
    /// Dyads came from the built-in assembly rule rather than caller input.
    pub default_vectors: bool,
}

/// Both factors of `det(M - lambda I) = F(lambda) G(lambda)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharPolyValue {
    pub lambda: f64,
    /// `(-1)^n det B det R(lambda)`.
    pub f: f64,
    /// Rank-two bracket.
    pub g: f64,
}

impl CharPolyValue {
    pub fn product(&self) -> f64 {
        self.f * self.g
    }
}

/// Operator whose inverse is probed by [`RankStructuredJacobian::resolvent_form`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ProbeOperator {
    Identity,
    E,
    B,
    /// `R(lambda) = C - lambda^2 B^-1`.
    R(f64),
}

impl RankStructuredJacobian {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        e: DMatrix<f64>,
        u: DVector<f64>,
        v: DVector<f64>,
        a1: DVector<f64>,
        a2: DVector<f64>,
        d1: DVector<f64>,
        d2: DVector<f64>,
    ) -> Result<Self> {
        let n = e.nrows();
        if !e.is_square() || n == 0 {
            return Err(Error::Shape(format!("E is {}x{}", e.nrows(), e.ncols())));
        }
        for (name, x) in [("u", &u), ("v", &v), ("a1", &a1), ("a2", &a2), ("d1", &d1), ("d2", &d2)] {
            if x.len() != n {
                return Err(Error::Shape(format!("{name} has length {}, expected {n}", x.len())));
            }
        }
        let scale = e.amax().max(1e-300);
        let asym = (&e - e.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(Error::Parameter(format!("E is not symmetric (max asymmetry {asym:e})")));
        }
        let chol = e.clone().cholesky().ok_or_else(|| {
            let min_diag = e.diagonal().min();
            Error::NotPositiveDefinite(format!(
                "Cholesky of E failed (dimension {n}, smallest diagonal {min_diag:e})"
            ))
        })?;
        let det_e: f64 = chol.l().diagonal().iter().map(|x| x * x).product();
        let e_inv = chol.inverse();
        let einv_u = &e_inv * &u;
        let schur = 1.0 - u.dot(&einv_u);
        let det_b = det_e * schur;
        if schur.abs() <= 1e-13 || det_b == 0.0 {
            return Err(Error::Degenerate(format!("B = E - u u^t is singular (1 - u^t E^-1 u = {schur:e})")));
        }
        let b_inv = &e_inv + &einv_u * einv_u.transpose() / schur;
        Ok(RankStructuredJacobian { e, u, v, a1, a2, d1, d2, b_inv, det_b, grid: None, default_vectors: false })
    }

    pub(crate) fn with_grid(mut self, grid: Grid, default_vectors: bool) -> Self {
        self.grid = Some(grid);
        self.default_vectors = default_vectors;
        self
    }

    pub fn grid(&self) -> Option<&Grid> {
        self.grid.as_ref()
    }

    /// Block size `n`; `M` is `2n x 2n`.
    pub fn dim(&self) -> usize {
        self.e.nrows()
    }

    pub fn e(&self) -> &DMatrix<f64> {
        &self.e
    }

    /// Overflows to infinity on large lattices; the sign stays meaningful.
    pub fn det_b(&self) -> f64 {
        self.det_b
    }

    pub fn b(&self) -> DMatrix<f64> {
        &self.e - &self.u * self.u.transpose()
    }

    pub fn c(&self) -> DMatrix<f64> {
        -&self.e + &self.v * self.v.transpose()
    }

    /// `R(lambda) = C - lambda^2 B^-1`.
    pub fn r(&self, lambda: f64) -> DMatrix<f64> {
        self.c() - &self.b_inv * (lambda * lambda)
    }

    /// Dense `M - lambda I`, for oracle checks at small dimension.
    pub fn dense_shifted(&self, lambda: f64) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        let a = &self.a1 * self.a2.transpose() - DMatrix::identity(n, n) * lambda;
        let d = &self.d1 * self.d2.transpose() - DMatrix::identity(n, n) * lambda;
        m.view_mut((0, 0), (n, n)).copy_from(&a);
        m.view_mut((0, n), (n, n)).copy_from(&self.b());
        m.view_mut((n, 0), (n, n)).copy_from(&self.c());
        m.view_mut((n, n), (n, n)).copy_from(&d);
        m
    }

    /// `F(lambda)` and `G(lambda)`; the rank-two update is applied through
    /// matrix-vector products with `B^-1` and a factorisation of `R(lambda)`.
    pub fn char_poly_eval(&self, lambda: f64) -> Result<CharPolyValue> {
        let n = self.dim();
        let r = Factored::new(&self.r(lambda))
            .map_err(|_| Error::Singular(format!("R({lambda}) is singular")))?;
        let binv_a1 = &self.b_inv * &self.a1;
        let binv_d2 = &self.b_inv * &self.d2;
        let coupling = self.d2.dot(&binv_a1);
        let eta1 = binv_d2 * lambda - &self.a2 * coupling;
        let xi2 = binv_a1 * lambda;
        let g = ipr2_bracket(&r, &self.d1, &eta1, &xi2, &self.a2);
        let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
        Ok(CharPolyValue { lambda, f: sign * self.det_b * r.det, g })
    }

    /// `v^t O^-1 u` for the operator `O`.
    pub fn resolvent_form(&self, op: ProbeOperator, u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
        let n = self.dim();
        if u.len() != n || v.len() != n {
            return Err(Error::Shape(format!("probe vectors must have length {n}")));
        }
        let z = match op {
            ProbeOperator::Identity => u.clone(),
            ProbeOperator::E => Factored::new(&self.e)?.solve(u),
            ProbeOperator::B => &self.b_inv * u,
            ProbeOperator::R(lambda) => Factored::new(&self.r(lambda))?.solve(u),
        };
        Ok(v.dot(&z))
    }
}
