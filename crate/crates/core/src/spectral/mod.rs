//! Determinant identities for low-rank updates, the factored characteristic
//! polynomial of the block Jacobian, and its lattice discretisation.

mod det;
mod grid;
mod jacobian;
mod scan;

pub use det::{det_ipr1, det_ipr2, sylvester_det};
pub use grid::{discretize, DiscretizationSpec, DyadProfile, DyadSpec, Grid, MAX_DENSE_DIM};
pub use jacobian::{CharPolyValue, ProbeOperator, RankStructuredJacobian};
pub use scan::{first_zero_scan, lambda_eps_sequence, resolvent_probe, LambdaEpsRow, ScanOptions, ScanResult};

/// `(F(lambda), G(lambda))` of `det(M - lambda I)`.
pub fn char_poly_eval(j: &RankStructuredJacobian, lambda: f64) -> crate::Result<(f64, f64)> {
    let c = j.char_poly_eval(lambda)?;
    Ok((c.f, c.g))
}
