//! Determinants of low-rank updates.

use nalgebra::{DMatrix, DVector};

use crate::error::{require, Error, Result};

/// `(det(I_N + P Q), det(I_n + Q P))` for `P: N x n`, `Q: n x N`.
pub fn sylvester_det(p: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<(f64, f64)> {
    if p.nrows() != q.ncols() || p.ncols() != q.nrows() {
        return Err(Error::Shape(format!(
            "P is {}x{} but Q is {}x{}",
            p.nrows(),
            p.ncols(),
            q.nrows(),
            q.ncols()
        )));
    }
    let lhs = (DMatrix::identity(p.nrows(), p.nrows()) + p * q).determinant();
    let rhs = (DMatrix::identity(q.nrows(), q.nrows()) + q * p).determinant();
    Ok((lhs, rhs))
}

/// LU factorisation of an invertible matrix with its determinant.
pub(crate) struct Factored {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    pub det: f64,
}

impl Factored {
    pub fn new(r: &DMatrix<f64>) -> Result<Self> {
        require(r.is_square(), || format!("matrix is {}x{}, not square", r.nrows(), r.ncols()))?;
        let lu = r.clone().lu();
        let det = lu.determinant();
        if det == 0.0 || det.is_nan() {
            return Err(Error::Singular(format!("determinant is {det}")));
        }
        Ok(Factored { lu, det })
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.lu.solve(b).expect("nonsingular factorisation")
    }
}

fn check_len(n: usize, vs: &[&DVector<f64>]) -> Result<()> {
    match vs.iter().find(|v| v.len() != n) {
        Some(v) => Err(Error::Shape(format!("vector of length {} for a {n}x{n} matrix", v.len()))),
        None => Ok(()),
    }
}

/// `det(R + xi eta^t) = det R (1 + eta^t R^-1 xi)`.
pub fn det_ipr1(r: &DMatrix<f64>, xi: &DVector<f64>, eta: &DVector<f64>) -> Result<f64> {
    let f = Factored::new(r)?;
    check_len(r.nrows(), &[xi, eta])?;
    Ok(f.det * (1.0 + eta.dot(&f.solve(xi))))
}

/// The 2x2 bracket of `det(R + xi1 eta1^t + xi2 eta2^t) / det R`.
pub(crate) fn ipr2_bracket(
    f: &Factored,
    xi1: &DVector<f64>,
    eta1: &DVector<f64>,
    xi2: &DVector<f64>,
    eta2: &DVector<f64>,
) -> f64 {
    let z1 = f.solve(xi1);
    let z2 = f.solve(xi2);
    (1.0 + eta1.dot(&z1)) * (1.0 + eta2.dot(&z2)) - eta1.dot(&z2) * eta2.dot(&z1)
}

/// `det(R + xi1 eta1^t + xi2 eta2^t)` through one factorisation of `R`.
pub fn det_ipr2(
    r: &DMatrix<f64>,
    xi1: &DVector<f64>,
    eta1: &DVector<f64>,
    xi2: &DVector<f64>,
    eta2: &DVector<f64>,
) -> Result<f64> {
    let f = Factored::new(r)?;
    check_len(r.nrows(), &[xi1, eta1, xi2, eta2])?;
    Ok(f.det * ipr2_bracket(&f, xi1, eta1, xi2, eta2))
}
