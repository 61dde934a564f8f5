//! First positive zero of `G`, its behaviour under grid refinement, and
//! resolvent probes across lattices.

use nalgebra::{DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{discretize, DiscretizationSpec, DyadSpec};
use super::jacobian::{CharPolyValue, ProbeOperator, RankStructuredJacobian};
use crate::criteria::ModelParams;
use crate::error::{require, Error, Result};
use crate::states::StateMoments;

/// Scan controls; unset fields fall back to `lambda* = 10 ||E||_2`,
/// `step = lambda*/1000`, `tol = 1e-8 lambda*`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanOptions {
    pub lambda_star: Option<f64>,
    pub step: Option<f64>,
    pub tol: Option<f64>,
}

impl ScanOptions {
    pub fn resolve(&self, j: &RankStructuredJacobian) -> (f64, f64, f64) {
        let lambda_star = self.lambda_star.unwrap_or_else(|| 10.0 * spectral_norm(j));
        let step = self.step.unwrap_or(lambda_star / 1000.0);
        let tol = self.tol.unwrap_or(1e-8 * lambda_star);
        (lambda_star, step, tol)
    }
}

fn spectral_norm(j: &RankStructuredJacobian) -> f64 {
    SymmetricEigen::new(j.e().clone()).eigenvalues.amax()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanResult {
    /// First zero of `G` in `(0, lambda*)`; `None` without a sign change or
    /// when `F` is not certified nonvanishing.
    pub lambda: Option<f64>,
    pub lambda_star: f64,
    pub step: f64,
    pub tol: f64,
    /// `F` kept one sign at every sampled point of `[0, lambda*]`.
    pub f_nonvanishing: bool,
    /// `G` changed sign somewhere on the grid.
    pub sign_change: bool,
    pub profile: Vec<CharPolyValue>,
}

fn eval_or_vanishing(j: &RankStructuredJacobian, lambda: f64) -> CharPolyValue {
    j.char_poly_eval(lambda).unwrap_or(CharPolyValue { lambda, f: 0.0, g: f64::NAN })
}

/// Grid scan of `G` on `[0, lambda*]`, then bisection of the first bracket.
pub fn first_zero_scan(
    j: &RankStructuredJacobian,
    lambda_star: f64,
    step: f64,
    tol: f64,
) -> Result<ScanResult> {
    require(lambda_star > 0.0 && lambda_star.is_finite(), || {
        format!("lambda* must be positive, got {lambda_star}")
    })?;
    require(step > 0.0 && step.is_finite(), || format!("step must be positive, got {step}"))?;
    require(tol > 0.0, || format!("tolerance must be positive, got {tol}"))?;
    let count = (lambda_star / step).ceil() as usize;
    require(count <= 10_000_000, || format!("{count} scan points is too many"))?;
    let profile: Vec<CharPolyValue> = (0..=count)
        .into_par_iter()
        .map(|k| eval_or_vanishing(j, (k as f64 * step).min(lambda_star)))
        .collect();
    let f_sign = profile[0].f.signum();
    let f_nonvanishing = profile.iter().all(|c| c.f != 0.0 && !c.f.is_nan() && c.f.signum() == f_sign);

    let mut found = None;
    let mut last: Option<&CharPolyValue> = None;
    for c in &profile {
        if !c.g.is_finite() {
            last = None;
            continue;
        }
        if c.g == 0.0 && c.lambda > 0.0 {
            found = Some((c.lambda, c.lambda));
            break;
        }
        if let Some(prev) = last {
            if prev.g * c.g < 0.0 {
                found = Some((prev.lambda, c.lambda));
                break;
            }
        }
        if c.g != 0.0 {
            last = Some(c);
        }
    }
    let sign_change = found.is_some();
    let lambda = match found {
        Some((lo, hi)) if f_nonvanishing => Some(bisect(j, lo, hi, tol)?),
        _ => None,
    };
    Ok(ScanResult { lambda, lambda_star, step, tol, f_nonvanishing, sign_change, profile })
}

fn bisect(j: &RankStructuredJacobian, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut g_lo = j.char_poly_eval(lo)?.g;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let g_mid = j.char_poly_eval(mid)?.g;
        if g_mid == 0.0 {
            return Ok(mid);
        }
        if g_lo * g_mid < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            g_lo = g_mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One refinement level of a `lambda_eps` study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaEpsRow {
    pub n: usize,
    pub eps: f64,
    pub lambda: Option<f64>,
    /// `|lambda_k - lambda_{k-1}| / lambda_k` against the previous level.
    pub rel_change: Option<f64>,
    pub f_nonvanishing: bool,
    pub sign_change: bool,
    pub default_vectors: bool,
    /// Signs of `G` along the scan grid, one character per point.
    pub g_signs: String,
}

/// `lambda_eps` for each grid size on a fixed physical box.
pub fn lambda_eps_sequence(
    model: &ModelParams,
    ns: &[usize],
    base: &DiscretizationSpec,
    s: &StateMoments,
    dyads: Option<&DyadSpec>,
    opts: &ScanOptions,
) -> Result<Vec<LambdaEpsRow>> {
    let mut rows: Vec<LambdaEpsRow> = Vec::with_capacity(ns.len());
    for &n in ns {
        let spec = DiscretizationSpec { n, ..*base };
        let j = discretize(model, &spec, s, dyads)?;
        let (lambda_star, step, tol) = opts.resolve(&j);
        let scan = first_zero_scan(&j, lambda_star, step, tol)?;
        let rel_change = match (rows.last().and_then(|r| r.lambda), scan.lambda) {
            (Some(prev), Some(cur)) => Some((cur - prev).abs() / cur.abs()),
            _ => None,
        };
        let g_signs = scan
            .profile
            .iter()
            .map(|c| match c.g {
                g if g > 0.0 => '+',
                g if g < 0.0 => '-',
                g if g.is_nan() => '?',
                _ => '0',
            })
            .collect();
        rows.push(LambdaEpsRow {
            n,
            eps: spec.spacing(),
            lambda: scan.lambda,
            rel_change,
            f_nonvanishing: scan.f_nonvanishing,
            sign_change: scan.sign_change,
            default_vectors: j.default_vectors,
            g_signs,
        });
    }
    Ok(rows)
}

/// `eps^D v^t O^-1 u` with `u`, `v` sampled on each lattice.
pub fn resolvent_probe(
    js: &[RankStructuredJacobian],
    u_fn: &dyn Fn(&[f64]) -> f64,
    v_fn: &dyn Fn(&[f64]) -> f64,
    op: ProbeOperator,
) -> Result<Vec<f64>> {
    js.iter()
        .map(|j| {
            let grid = j
                .grid()
                .ok_or_else(|| Error::Parameter("resolvent probe needs a lattice-built Jacobian".into()))?;
            let u: DVector<f64> = grid.sample(u_fn);
            let v: DVector<f64> = grid.sample(v_fn);
            Ok(grid.cell_volume() * j.resolvent_form(op, &u, &v)?)
        })
        .collect()
}
