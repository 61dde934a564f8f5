//! Variational lower bound on the top eigenvalue of `Omega_mu = xbar_mu Lambda^-1 xbar_mu`.
//!
//! For a test function `theta`,
//!
//! ```text
//! lambda_max >= den / num,
//! num = (1/2m) sum_k int xbar_mu^2 |grad_k theta|^2 + <theta| xbar_mu^2 V theta>,
//! den = int xbar_mu^4 |theta|^2,
//! ```
//!
//! with `V = B + U`. For Gaussian states the kinetic, trap and denominator
//! integrals are closed-form polynomial moments; the pair-interaction part is
//! sampled from `|theta|^2` (or integrated on a Gauss-Hermite tensor grid for
//! small body counts).

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::ModelParams;
use crate::error::{require, Error, Result};
use crate::potentials::{total_u_unchecked, Vec3};
use crate::quadrature::tensor_expectation;
use crate::rng;
use crate::states::{DensityTerm, TestState};

/// How the integrals are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case", deny_unknown_fields)]
pub enum QuadratureSpec {
    /// Closed forms only; the pair potential must vanish identically.
    Analytic,
    /// Every part on a Gauss-Hermite grid with `nodes` points per axis (`3N <= 12`).
    TensorQuadrature { nodes: usize },
    /// Closed forms plus a seeded sample of `xbar^2 U` drawn from `|theta|^2`.
    MonteCarlo { samples: usize, seed: u64 },
}

impl QuadratureSpec {
    pub fn validate(&self, n_bodies: usize) -> Result<()> {
        match *self {
            QuadratureSpec::Analytic => Ok(()),
            QuadratureSpec::TensorQuadrature { nodes } => {
                require(nodes >= 1, || "tensor quadrature needs nodes >= 1".into())?;
                require(3 * n_bodies <= 12, || {
                    format!("tensor quadrature limited to 12 dimensions, got {}", 3 * n_bodies)
                })
            }
            QuadratureSpec::MonteCarlo { samples, .. } => {
                require(samples >= 2, || "monte-carlo needs at least 2 samples".into())
            }
        }
    }
}

/// Bound ingredients along one direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirectionBound {
    /// 1-based axis.
    pub direction: usize,
    pub kinetic: f64,
    pub trap: f64,
    pub pair: f64,
    pub denominator: f64,
    /// `den / num`; `None` when the numerator is not positive.
    pub lambda_lb: Option<f64>,
    /// Standard error of `pair` (monte-carlo only).
    pub pair_std_error: Option<f64>,
}

impl DirectionBound {
    /// `<theta| xbar^2 (B + U) theta>`.
    pub fn potential(&self) -> f64 {
        self.trap + self.pair
    }

    pub fn numerator(&self) -> f64 {
        self.kinetic + self.trap + self.pair
    }
}

/// Best bound over the three directions, plus the per-direction breakdown.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundResult {
    /// 1-based direction achieving the bound.
    pub mu: usize,
    pub numerator_kinetic: f64,
    pub numerator_potential: f64,
    pub denominator: f64,
    pub lambda_lb: Option<f64>,
    pub unbounded: bool,
    pub error_bars: Option<f64>,
    /// Overlap of a superposition cross term dropped as negligible.
    pub dropped_overlap: f64,
    pub directions: Vec<DirectionBound>,
}

impl BoundResult {
    pub fn best(&self) -> &DirectionBound {
        &self.directions[self.mu - 1]
    }
}

fn kinetic_closed_form(t: &DensityTerm, axis: usize, mass: f64) -> f64 {
    let n = t.centers.len() as f64;
    let s2 = t.sigma * t.sigma;
    let y = t.center_sum()[axis];
    let xbar2 = y * y + n * s2;
    n * (3.0 * s2 * y * y + (3.0 * n + 2.0) * s2 * s2 - t.half_sep_sq * xbar2) / (8.0 * mass * s2 * s2)
}

fn trap_closed_form(t: &DensityTerm, axis: usize, trap: f64) -> f64 {
    let n = t.centers.len() as f64;
    let s2 = t.sigma * t.sigma;
    let y = t.center_sum()[axis];
    let c2 = t.center_norm_sq_sum();
    0.5 * trap
        * (c2 * (y * y + n * s2)
            + 4.0 * s2 * y * y
            + 3.0 * n * s2 * y * y
            + n * (3.0 * n + 2.0) * s2 * s2)
}

fn fourth_moment_closed_form(t: &DensityTerm, axis: usize) -> f64 {
    let n = t.centers.len() as f64;
    let s2 = t.sigma * t.sigma;
    let y = t.center_sum()[axis];
    y.powi(4) + 6.0 * y * y * n * s2 + 3.0 * n * n * s2 * s2
}

/// Per-sample integrands: kinetic, trap, pair, denominator, for each axis.
fn integrands(t: &DensityTerm, p: &ModelParams, x: &[Vec3], out: &mut [[f64; 4]; 3]) {
    let s2 = t.sigma * t.sigma;
    let mut xbar = [0.0; 3];
    let mut grad_sum = 0.0;
    let mut radial = 0.0;
    for (xk, ck) in x.iter().zip(&t.centers) {
        let mut z2 = 0.0;
        for m in 0..3 {
            xbar[m] += xk[m];
            z2 += (xk[m] - ck[m]).powi(2);
            radial += xk[m] * xk[m];
        }
        grad_sum += z2 - t.half_sep_sq;
    }
    let kinetic = grad_sum / (4.0 * s2 * s2) / (2.0 * p.mass);
    let trap = 0.5 * p.trap * radial;
    let pair = if p.potential.is_identically_zero() { 0.0 } else { total_u_unchecked(&p.potential, x) };
    for (axis, row) in out.iter_mut().enumerate() {
        let x2 = xbar[axis] * xbar[axis];
        *row = [kinetic * x2, trap * x2, pair * x2, x2 * x2];
    }
}

fn place(t: &DensityTerm, z: &[f64], x: &mut [Vec3]) {
    for (k, xk) in x.iter_mut().enumerate() {
        for m in 0..3 {
            xk[m] = t.centers[k][m] + t.sigma * z[3 * k + m];
        }
    }
}

/// Running sums of the per-axis integrands.
#[derive(Debug, Clone, Copy, Default)]
struct Accumulator {
    sum: [[f64; 4]; 3],
    sum_sq: [[f64; 4]; 3],
    count: usize,
}

impl Accumulator {
    fn push(&mut self, v: &[[f64; 4]; 3]) {
        for a in 0..3 {
            for q in 0..4 {
                self.sum[a][q] += v[a][q];
                self.sum_sq[a][q] += v[a][q] * v[a][q];
            }
        }
        self.count += 1;
    }

    fn merge(mut self, o: &Accumulator) -> Accumulator {
        for a in 0..3 {
            for q in 0..4 {
                self.sum[a][q] += o.sum[a][q];
                self.sum_sq[a][q] += o.sum_sq[a][q];
            }
        }
        self.count += o.count;
        self
    }

    fn mean(&self, axis: usize, part: usize) -> f64 {
        self.sum[axis][part] / self.count as f64
    }

    fn std_error(&self, axis: usize, part: usize) -> f64 {
        let k = self.count as f64;
        let mean = self.sum[axis][part] / k;
        ((self.sum_sq[axis][part] / k - mean * mean).max(0.0) / (k - 1.0)).sqrt()
    }
}

/// Fixed chunk count: reductions are ordered and independent of the thread pool size.
const MC_CHUNKS: usize = 64;

fn sample_term(t: &DensityTerm, p: &ModelParams, samples: usize, seed: u64, term: usize) -> Result<Accumulator> {
    let n = t.centers.len();
    let chunks: Vec<Accumulator> = (0..MC_CHUNKS)
        .into_par_iter()
        .map(|c| {
            let count = samples / MC_CHUNKS + usize::from(c < samples % MC_CHUNKS);
            let mut rng = rng::stream(seed, &[term as u64, c as u64]);
            let mut z = vec![0.0; 3 * n];
            let mut x = vec![[0.0; 3]; n];
            let mut row = [[0.0; 4]; 3];
            let mut acc = Accumulator::default();
            for _ in 0..count {
                for v in z.iter_mut() {
                    *v = StandardNormal.sample(&mut rng);
                }
                place(t, &z, &mut x);
                integrands(t, p, &x, &mut row);
                acc.push(&row);
            }
            acc
        })
        .collect();
    let acc = chunks.iter().fold(Accumulator::default(), |a, b| a.merge(b));
    if acc.sum.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Sampling(format!(
            "non-finite integrand in monte-carlo term {term}; the pair potential may be too singular"
        )));
    }
    Ok(acc)
}

/// All parts estimated by sampling, with standard errors per part.
///
/// `[axis][kinetic, trap, pair, denominator]`.
pub type PartTable = [[f64; 4]; 3];

/// Returned as means and standard errors.
pub fn sample_all_parts(
    state: &TestState,
    p: &ModelParams,
    samples: usize,
    seed: u64,
) -> Result<(PartTable, PartTable)> {
    check_inputs(state, p)?;
    require(samples >= 2, || "need at least 2 samples".into())?;
    let mut mean = [[0.0; 4]; 3];
    let mut var = [[0.0; 4]; 3];
    for (i, t) in state.density_terms().terms.iter().enumerate() {
        let acc = sample_term(t, p, samples, seed, i as u64 as usize)?;
        for a in 0..3 {
            for q in 0..4 {
                mean[a][q] += t.weight * acc.mean(a, q);
                var[a][q] += (t.weight * acc.std_error(a, q)).powi(2);
            }
        }
    }
    Ok((mean, var.map(|r| r.map(f64::sqrt))))
}

fn check_inputs(state: &TestState, p: &ModelParams) -> Result<()> {
    if !p.potential.integrable_class() {
        return Err(Error::NonIntegrable(
            "raw Lennard-Jones diverges against Gaussian states; use capped-lj".into(),
        ));
    }
    require(state.n_bodies() == p.n_bodies, || {
        format!("state has {} bodies, model has {}", state.n_bodies(), p.n_bodies)
    })
}

fn evaluate(state: &TestState, p: &ModelParams, q: &QuadratureSpec) -> Result<(Vec<DirectionBound>, f64)> {
    check_inputs(state, p)?;
    q.validate(state.n_bodies())?;
    let decomposition = state.density_terms();
    let terms = &decomposition.terms;
    let mut parts = [[0.0; 4]; 3];
    let mut pair_var = [0.0; 3];
    let mut sampled = false;
    match *q {
        QuadratureSpec::TensorQuadrature { nodes } => {
            for t in terms {
                let n = t.centers.len();
                let mut x = vec![[0.0; 3]; n];
                let mut row = [[0.0; 4]; 3];
                for a in 0..3 {
                    for part in 0..4 {
                        let v = tensor_expectation(3 * n, nodes, |z| {
                            place(t, z, &mut x);
                            integrands(t, p, &x, &mut row);
                            row[a][part]
                        })?;
                        parts[a][part] += t.weight * v;
                    }
                }
            }
        }
        QuadratureSpec::Analytic | QuadratureSpec::MonteCarlo { .. } => {
            for (i, t) in terms.iter().enumerate() {
                for a in 0..3 {
                    parts[a][0] += t.weight * kinetic_closed_form(t, a, p.mass);
                    parts[a][1] += t.weight * trap_closed_form(t, a, p.trap);
                    parts[a][3] += t.weight * fourth_moment_closed_form(t, a);
                }
                if p.potential.is_identically_zero() {
                    continue;
                }
                let QuadratureSpec::MonteCarlo { samples, seed } = *q else {
                    return Err(Error::Parameter(
                        "the pair part needs monte-carlo or tensor-quadrature".into(),
                    ));
                };
                sampled = true;
                let acc = sample_term(t, p, samples, seed, i)?;
                for a in 0..3 {
                    parts[a][2] += t.weight * acc.mean(a, 2);
                    pair_var[a] += (t.weight * acc.std_error(a, 2)).powi(2);
                }
            }
        }
    }
    let directions = (0..3)
        .map(|a| {
            let [kinetic, trap, pair, denominator] = parts[a];
            let num = kinetic + trap + pair;
            DirectionBound {
                direction: a + 1,
                kinetic,
                trap,
                pair,
                denominator,
                lambda_lb: (num > 0.0).then(|| denominator / num),
                pair_std_error: sampled.then(|| pair_var[a].sqrt()),
            }
        })
        .collect();
    Ok((directions, decomposition.dropped_overlap))
}

fn direction_index(mu: usize) -> Result<usize> {
    require((1..=3).contains(&mu), || format!("direction must be 1, 2 or 3, got {mu}"))?;
    Ok(mu - 1)
}

/// `(kinetic, potential)` numerator parts along direction `mu` (1-based).
pub fn numerator(state: &TestState, p: &ModelParams, mu: usize, q: &QuadratureSpec) -> Result<(f64, f64)> {
    let a = direction_index(mu)?;
    let (d, _) = evaluate(state, p, q)?;
    Ok((d[a].kinetic, d[a].potential()))
}

/// `int xbar_mu^4 |theta|^2` along direction `mu` (1-based).
pub fn denominator(state: &TestState, mu: usize, q: &QuadratureSpec) -> Result<f64> {
    let a = direction_index(mu)?;
    let decomposition = state.density_terms();
    match *q {
        QuadratureSpec::TensorQuadrature { nodes } => {
            require(3 * state.n_bodies() <= 12, || "tensor quadrature limited to 12 dimensions".into())?;
            let mut total = 0.0;
            for t in &decomposition.terms {
                let y = t.centers.iter().map(|c| c[a]).sum::<f64>();
                let n = t.centers.len();
                let v = tensor_expectation(3 * n, nodes, |z| {
                    let xbar = y + t.sigma * (0..n).map(|k| z[3 * k + a]).sum::<f64>();
                    xbar.powi(4)
                })?;
                total += t.weight * v;
            }
            Ok(total)
        }
        _ => Ok(decomposition.terms.iter().map(|t| t.weight * fourth_moment_closed_form(t, a)).sum()),
    }
}

/// Bound along every direction; the reported bound is the largest.
pub fn lambda_lower_bound(state: &TestState, p: &ModelParams, q: &QuadratureSpec) -> Result<BoundResult> {
    let (directions, dropped_overlap) = evaluate(state, p, q)?;
    let unbounded_axis = directions.iter().position(|d| d.lambda_lb.is_none());
    let best = unbounded_axis.unwrap_or_else(|| {
        (0..3)
            .max_by(|&i, &j| {
                directions[i].lambda_lb.partial_cmp(&directions[j].lambda_lb).expect("finite bounds")
            })
            .expect("three directions")
    });
    let d = directions[best];
    Ok(BoundResult {
        mu: best + 1,
        numerator_kinetic: d.kinetic,
        numerator_potential: d.potential(),
        denominator: d.denominator,
        lambda_lb: d.lambda_lb,
        unbounded: unbounded_axis.is_some(),
        error_bars: d.pair_std_error,
        dropped_overlap,
        directions,
    })
}

/// Smallest coupling certified by criterion (v): `w_min = rho / (4 lambda_lb)`.
pub fn w_lower_threshold_v(b: &BoundResult, rho: f64) -> Result<f64> {
    require(rho > 0.0, || format!("rho must be positive, got {rho}"))?;
    match b.lambda_lb {
        None => Err(Error::Infeasible(
            "variational bound is unbounded; criterion (v) is then vacuous, not computed".into(),
        )),
        Some(l) if l <= 0.0 => Err(Error::Infeasible(format!("lambda_lb = {l} gives no threshold"))),
        Some(l) => Ok(rho / (4.0 * l)),
    }
}

/// As [`w_lower_threshold_v`], but an unbounded bound yields `0` when `accept_unbounded`.
pub fn w_lower_threshold_v_or_vacuous(b: &BoundResult, rho: f64, accept_unbounded: bool) -> Result<f64> {
    match (b.lambda_lb, accept_unbounded) {
        (None, true) => Ok(0.0),
        _ => w_lower_threshold_v(b, rho),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::PairPotential;
    use crate::states::{LatticeState, SuperpositionState};
    use nalgebra::{DMatrix, SymmetricEigen};

    fn harmonic(n: usize, m: f64, v: f64) -> ModelParams {
        ModelParams::new(n, m, v, 0.0, PairPotential::zero(), 0.0).unwrap()
    }

    fn lattice(n: usize, a: f64, sigma: f64, center: bool) -> TestState {
        TestState::Lattice(LatticeState::build(n, a, sigma, center).unwrap())
    }

    /// Independent Gauss-Hermite rule from the Golub-Welsch eigenproblem.
    fn golub_welsch(n: usize) -> (Vec<f64>, Vec<f64>) {
        let j = DMatrix::from_fn(n, n, |i, k| {
            if i.abs_diff(k) == 1 {
                (i.max(k) as f64 / 2.0).sqrt()
            } else {
                0.0
            }
        });
        let e = SymmetricEigen::new(j);
        let nodes: Vec<f64> = e.eigenvalues.iter().map(|x| x * 2f64.sqrt()).collect();
        let weights: Vec<f64> = (0..n).map(|i| e.eigenvectors[(0, i)].powi(2)).collect();
        (nodes, weights)
    }

    /// One-body oracle: direct tensor integration of the defining integrals.
    fn one_body_oracle(center: Vec3, sigma: f64, m: f64, v: f64, axis: usize) -> [f64; 3] {
        let (x, w) = golub_welsch(24);
        let mut out = [0.0; 3];
        for (i, wi) in w.iter().enumerate() {
            for (j, wj) in w.iter().enumerate() {
                for (k, wk) in w.iter().enumerate() {
                    let p = [center[0] + sigma * x[i], center[1] + sigma * x[j], center[2] + sigma * x[k]];
                    let z2 = (sigma * x[i]).powi(2) + (sigma * x[j]).powi(2) + (sigma * x[k]).powi(2);
                    let grad_sq = z2 / (4.0 * sigma.powi(4));
                    let r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
                    let xa = p[axis];
                    let weight = wi * wj * wk;
                    out[0] += weight * xa * xa * grad_sq / (2.0 * m);
                    out[1] += weight * xa * xa * 0.5 * v * r2;
                    out[2] += weight * xa.powi(4);
                }
            }
        }
        out
    }

    #[test]
    fn one_body_closed_forms_match_quadrature() {
        for (center, sigma, m, v) in [([0.0; 3], 1.0, 1.0, 1.0), ([0.7, -0.2, 1.1], 0.4, 2.0, 3.0)] {
            let state = TestState::Lattice(LatticeState::from_sites(vec![center], sigma).unwrap());
            let r = lambda_lower_bound(&state, &harmonic(1, m, v), &QuadratureSpec::Analytic).unwrap();
            for a in 0..3 {
                let o = one_body_oracle(center, sigma, m, v, a);
                let d = r.directions[a];
                assert!((d.kinetic - o[0]).abs() < 1e-8 * o[0].abs().max(1.0));
                assert!((d.trap - o[1]).abs() < 1e-8 * o[1].abs().max(1.0));
                assert!((d.denominator - o[2]).abs() < 1e-8 * o[2].abs().max(1.0));
            }
        }
    }

    #[test]
    fn unit_gaussian_fourth_moment() {
        let d = denominator(&lattice(1, 1.0, 1.0, true), 1, &QuadratureSpec::Analytic).unwrap();
        assert!((d - 3.0).abs() < 1e-15);
        let gh = denominator(&lattice(1, 1.0, 1.0, true), 1, &QuadratureSpec::TensorQuadrature { nodes: 8 }).unwrap();
        assert!((gh - 3.0).abs() < 1e-12);
    }

    #[test]
    fn centred_denominator_is_wick_value() {
        let sigma = 0.3;
        for n in [2, 3, 8, 27] {
            let d = denominator(&lattice(n, 1.1, sigma, true), 2, &QuadratureSpec::Analytic).unwrap();
            let expect = 3.0 * (n as f64 * sigma * sigma).powi(2);
            assert!((d - expect).abs() < 1e-12 * expect);
        }
    }

    #[test]
    fn closed_forms_match_tensor_quadrature_two_bodies() {
        let p = ModelParams::new(2, 1.3, 0.7, 0.0, PairPotential::zero(), 0.0).unwrap();
        let state = lattice(2, 1.0, 0.45, false);
        let a = lambda_lower_bound(&state, &p, &QuadratureSpec::Analytic).unwrap();
        let t = lambda_lower_bound(&state, &p, &QuadratureSpec::TensorQuadrature { nodes: 6 }).unwrap();
        for (x, y) in a.directions.iter().zip(&t.directions) {
            for (u, v) in [(x.kinetic, y.kinetic), (x.trap, y.trap), (x.denominator, y.denominator)] {
                assert!((u - v).abs() < 1e-9 * u.abs().max(1.0), "{u} vs {v}");
            }
        }
    }

    #[test]
    fn superposition_cross_terms_match_tensor_quadrature() {
        let base = LatticeState::build(2, 1.0, 0.5, true).unwrap();
        let state = TestState::Superposition(SuperpositionState::new(base, 0.3, 1, 0.4).unwrap());
        let p = ModelParams::new(2, 1.0, 1.0, 0.0, PairPotential::zero(), 0.0).unwrap();
        let a = lambda_lower_bound(&state, &p, &QuadratureSpec::Analytic).unwrap();
        let t = lambda_lower_bound(&state, &p, &QuadratureSpec::TensorQuadrature { nodes: 6 }).unwrap();
        assert_eq!(a.dropped_overlap, 0.0);
        for (x, y) in a.directions.iter().zip(&t.directions) {
            assert!((x.kinetic - y.kinetic).abs() < 1e-9 * x.kinetic.abs());
            assert!((x.denominator - y.denominator).abs() < 1e-9 * x.denominator);
        }
    }

    #[test]
    fn analytic_and_sampled_parts_agree() {
        let p = ModelParams::new(3, 1.0, 2.0, 0.0, PairPotential::capped_lj(1.0, 1.0), 0.0).unwrap();
        let base = LatticeState::build(3, 1.12, 0.28, true).unwrap();
        let state = TestState::Superposition(SuperpositionState::new(base, 0.2, 2, 0.3).unwrap());
        let analytic = lambda_lower_bound(&state, &p, &QuadratureSpec::MonteCarlo { samples: 1000, seed: 1 }).unwrap();
        let (mean, se) = sample_all_parts(&state, &p, 1_000_000, 42).unwrap();
        for a in 0..3 {
            let d = analytic.directions[a];
            for (q, v) in [(0, d.kinetic), (1, d.trap), (3, d.denominator)] {
                assert!((mean[a][q] - v).abs() <= 3.0 * se[a][q], "axis {a} part {q}: {} vs {v} (se {})", mean[a][q], se[a][q]);
            }
        }
    }

    #[test]
    fn pair_part_quadrature_vs_sampling_smooth_potential() {
        let pot = PairPotential::basuev_smooth(2.0, 0.8, 0.6, Some(0.3));
        let p = ModelParams::new(2, 1.0, 1.0, 0.0, pot, 0.0).unwrap();
        let state = lattice(2, 1.1, 0.35, true);
        let t = lambda_lower_bound(&state, &p, &QuadratureSpec::TensorQuadrature { nodes: 12 }).unwrap();
        let m = lambda_lower_bound(&state, &p, &QuadratureSpec::MonteCarlo { samples: 400_000, seed: 5 }).unwrap();
        for (x, y) in t.directions.iter().zip(&m.directions) {
            let se = y.pair_std_error.unwrap();
            assert!((x.pair - y.pair).abs() <= 3.0 * se + 1e-4 * x.pair.abs(), "{} vs {} (se {se})", x.pair, y.pair);
        }
    }

    #[test]
    fn isotropic_state_gives_equal_directions() {
        let r = lambda_lower_bound(&lattice(1, 1.0, 0.5, true), &harmonic(1, 1.0, 1.0), &QuadratureSpec::Analytic)
            .unwrap();
        let l: Vec<f64> = r.directions.iter().map(|d| d.lambda_lb.unwrap()).collect();
        assert!((l[0] - l[1]).abs() < 1e-15 && (l[1] - l[2]).abs() < 1e-15);
        assert!((r.lambda_lb.unwrap() - r.denominator / (r.numerator_kinetic + r.numerator_potential)).abs() < 1e-12);
    }

    #[test]
    fn shifted_direction_dominates() {
        let base = LatticeState::build(8, 1.12, 0.28, true).unwrap();
        let state = TestState::Superposition(SuperpositionState::new(base, 14.0, 1, 0.0).unwrap());
        let r = lambda_lower_bound(&state, &harmonic(8, 1.0, 1.0), &QuadratureSpec::Analytic).unwrap();
        assert_eq!(r.mu, 1);
        let l: Vec<f64> = r.directions.iter().map(|d| d.lambda_lb.unwrap()).collect();
        assert!(l[0] > l[1] && l[0] > l[2]);
    }

    #[test]
    fn zero_trap_means_kinetic_only() {
        // B-only models need v > 0, so drop the trap by evaluating with a tiny one
        let p = harmonic(2, 1.0, 1e-300);
        let (kin, pot) = numerator(&lattice(2, 1.0, 0.5, true), &p, 1, &QuadratureSpec::Analytic).unwrap();
        assert!(kin > 0.0 && pot.abs() < 1e-290);
    }

    #[test]
    fn raw_lj_rejected_and_analytic_needs_zero_pair() {
        let state = lattice(2, 1.12, 0.3, true);
        let lj = ModelParams::new(2, 1.0, 1.0, 0.0, PairPotential::lennard_jones(1.0, 1.0), 0.0).unwrap();
        assert!(matches!(lambda_lower_bound(&state, &lj, &QuadratureSpec::Analytic), Err(Error::NonIntegrable(_))));
        let capped = ModelParams::new(2, 1.0, 1.0, 0.0, PairPotential::capped_lj(1.0, 1.0), 0.0).unwrap();
        assert!(matches!(lambda_lower_bound(&state, &capped, &QuadratureSpec::Analytic), Err(Error::Parameter(_))));
        assert!(lambda_lower_bound(&lattice(5, 1.0, 0.3, true), &harmonic(5, 1.0, 1.0), &QuadratureSpec::TensorQuadrature { nodes: 3 }).is_err());
    }

    #[test]
    fn threshold_arithmetic() {
        let mut r = lambda_lower_bound(&lattice(1, 1.0, 0.5, true), &harmonic(1, 1.0, 1.0), &QuadratureSpec::Analytic).unwrap();
        r.lambda_lb = Some(50.0);
        assert!((w_lower_threshold_v(&r, 2.0).unwrap() - 0.01).abs() < 1e-15);
        r.lambda_lb = Some(100.0);
        assert!((w_lower_threshold_v(&r, 2.0).unwrap() - 0.005).abs() < 1e-15);
        r.lambda_lb = Some(0.0);
        assert!(matches!(w_lower_threshold_v(&r, 2.0), Err(Error::Infeasible(_))));
        r.lambda_lb = None;
        assert!(w_lower_threshold_v(&r, 2.0).is_err());
        assert_eq!(w_lower_threshold_v_or_vacuous(&r, 2.0, true).unwrap(), 0.0);
    }

    #[test]
    fn sampling_is_reproducible() {
        let p = ModelParams::new(3, 1.0, 1.0, 0.0, PairPotential::capped_lj(1.0, 1.0), 0.0).unwrap();
        let q = QuadratureSpec::MonteCarlo { samples: 5000, seed: 17 };
        let state = lattice(3, 1.12, 0.28, true);
        let a = lambda_lower_bound(&state, &p, &q).unwrap();
        let b = lambda_lower_bound(&state, &p, &q).unwrap();
        assert_eq!(a, b);
    }

    // Dense one-dimensional discretisation of Lambda = -(1/2m) d^2/dx^2 + v x^2 / 2.
    fn lambda_1d(m: f64, v: f64, n: usize, half_box: f64) -> (DMatrix<f64>, Vec<f64>, f64) {
        let h = 2.0 * half_box / (n + 1) as f64;
        let x: Vec<f64> = (1..=n).map(|i| -half_box + i as f64 * h).collect();
        let k = 1.0 / (2.0 * m * h * h);
        let a = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                2.0 * k + 0.5 * v * x[i] * x[i]
            } else if i.abs_diff(j) == 1 {
                -k
            } else {
                0.0
            }
        });
        (a, x, h)
    }

    #[test]
    fn inverse_substitution_matches_dense_inverse() {
        // even grid count keeps x = 0 off the lattice
        let (lam, x, _) = lambda_1d(1.0, 1.0, 120, 8.0);
        let xd = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(x.clone()));
        let omega = &xd * lam.clone().try_inverse().unwrap() * &xd;
        let omega_inv = omega.try_inverse().unwrap();
        let xinv = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(x.len(), x.iter().map(|v| 1.0 / v)));
        let via_sub = &xinv * &lam * &xinv;
        let phi = nalgebra::DVector::from_iterator(x.len(), x.iter().map(|v| (-(v - 1.0).powi(2)).exp() * v * v));
        let dense = phi.dot(&(&omega_inv * &phi)) / phi.norm_squared();
        let sub = phi.dot(&(&via_sub * &phi)) / phi.norm_squared();
        assert!((dense - sub).abs() < 1e-8 * sub.abs(), "{dense} vs {sub}");
    }

    #[test]
    fn integration_by_parts_identity_one_dimension() {
        // pre-IBP: -(1/2m){2||t||^2 - 2<t|2t + x t'> + <t|(x^2 t)''>}; post-IBP: (1/2m) int x^2 t'^2
        let (m, c, s) = (0.8, 0.6, 0.7);
        let (nodes, weights) = golub_welsch(60);
        let theta = |x: f64| (-(x - c).powi(2) / (4.0 * s * s)).exp();
        let d1 = |x: f64| -(x - c) / (2.0 * s * s) * theta(x);
        let d2 = |x: f64| ((x - c).powi(2) / (4.0 * s.powi(4)) - 1.0 / (2.0 * s * s)) * theta(x);
        // E over Normal(c, s^2) of g(x) / density gives int g dx; density cancels against theta^2
        let integral = |g: &dyn Fn(f64) -> f64| -> f64 {
            nodes
                .iter()
                .zip(&weights)
                .map(|(z, w)| {
                    let x = c + s * z;
                    let dens = (-(z * z) / 2.0).exp() / (s * (2.0 * std::f64::consts::PI).sqrt());
                    w * g(x) / dens
                })
                .sum()
        };
        let norm = integral(&|x| theta(x).powi(2));
        let cross = integral(&|x| theta(x) * (2.0 * theta(x) + x * d1(x)));
        let second = integral(&|x| theta(x) * (2.0 * theta(x) + 4.0 * x * d1(x) + x * x * d2(x)));
        let pre = -(2.0 * norm - 2.0 * cross + second) / (2.0 * m);
        let post = integral(&|x| x * x * d1(x).powi(2)) / (2.0 * m);
        assert!((pre - post).abs() < 1e-10 * post.abs(), "{pre} vs {post}");
    }
}
