//! Body-count scaling of the variational bound and the coupling window.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bound::{lambda_lower_bound, w_lower_threshold_v, QuadratureSpec};
use crate::criteria::{w_upper_bound_iv, ModelParams};
use crate::error::{require, Error, Result};
use crate::potentials::PairPotential;
use crate::rng::derive_seed;
use crate::states::{moments_s, LatticeState, SuperpositionState, TestState, NEGLIGIBLE_OVERLAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateFamily {
    /// Centred Gaussian lattice.
    NearlyClassical,
    /// Two copies of the centred lattice translated by `-R` and `+R`.
    Superposition,
}

/// Fixed parameters shared by every body count of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingParams {
    pub mass: f64,
    pub trap: f64,
    pub potential: PairPotential,
    pub eps_u: f64,
    /// Lattice spacing `a`.
    pub spacing: f64,
    pub sigma: f64,
    /// Translation `R`; `None` picks `10 sigma sqrt(200 / N_min)`.
    pub shift: Option<f64>,
    /// 1-based translation axis.
    pub direction: usize,
    pub phase: f64,
    pub rho: f64,
    pub delta: f64,
    pub quadrature: QuadratureSpec,
}

impl ScalingParams {
    /// Capped Lennard-Jones lattice at the pair minimum with `sigma = a / 4`.
    pub fn capped_lj_defaults(energy: f64, length: f64, mass: f64, trap: f64, eps_u: f64) -> Self {
        let spacing = 2f64.powf(1.0 / 6.0) * length;
        ScalingParams {
            mass,
            trap,
            potential: PairPotential::capped_lj(energy, length),
            eps_u,
            spacing,
            sigma: spacing / 4.0,
            shift: None,
            direction: 1,
            phase: 0.0,
            rho: 4.0,
            delta: 0.25,
            quadrature: QuadratureSpec::MonteCarlo { samples: 100_000, seed: 0 },
        }
    }
}

pub fn default_shift(sigma: f64, n_min: usize) -> f64 {
    10.0 * sigma * (200.0 / n_min as f64).sqrt()
}

pub const DEFAULT_N_LIST: [usize; 3] = [8, 27, 64];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRecord {
    pub n_bodies: usize,
    pub numerator_kinetic: f64,
    pub numerator_potential: f64,
    pub denominator: f64,
    pub lambda_lb: Option<f64>,
    pub w_min_v: Option<f64>,
    /// `None` when the split condition of (iv) fails.
    pub w_max_iv: Option<f64>,
    pub window_nonempty: bool,
    pub pair_std_error: Option<f64>,
    pub overlap: f64,
}

impl ScalingRecord {
    pub fn numerator(&self) -> f64 {
        self.numerator_kinetic + self.numerator_potential
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRun {
    pub family: StateFamily,
    pub n_list: Vec<usize>,
    pub shift: Option<f64>,
    pub params: ScalingParams,
    pub records: Vec<ScalingRecord>,
}

fn build_state(family: StateFamily, n: usize, p: &ScalingParams, shift: f64) -> Result<TestState> {
    let base = LatticeState::build(n, p.spacing, p.sigma, true)?;
    Ok(match family {
        StateFamily::NearlyClassical => TestState::Lattice(base),
        StateFamily::Superposition => {
            TestState::Superposition(SuperpositionState::new(base, shift, p.direction, p.phase)?)
        }
    })
}

fn run_one(family: StateFamily, n: usize, p: &ScalingParams, shift: f64) -> Result<ScalingRecord> {
    let state = build_state(family, n, p, shift)?;
    let model = ModelParams::new(n, p.mass, p.trap, 0.0, p.potential.clone(), p.eps_u)?;
    let q = match p.quadrature {
        QuadratureSpec::MonteCarlo { samples, seed } => {
            QuadratureSpec::MonteCarlo { samples, seed: derive_seed(seed, &[n as u64]) }
        }
        other => other,
    };
    let b = lambda_lower_bound(&state, &model, &q)?;
    let w_min_v = match w_lower_threshold_v(&b, p.rho) {
        Ok(w) => Some(w),
        Err(Error::Infeasible(_)) => None,
        Err(e) => return Err(e),
    };
    let w_max_iv = match w_upper_bound_iv(&model, p.rho, &moments_s(&state), p.delta) {
        Ok(c) => Some(c.w_max),
        Err(Error::SplitCondition { .. }) => None,
        Err(e) => return Err(e),
    };
    let overlap = match &state {
        TestState::Superposition(s) => s.overlap(),
        TestState::Lattice(_) => 0.0,
    };
    Ok(ScalingRecord {
        n_bodies: n,
        numerator_kinetic: b.numerator_kinetic,
        numerator_potential: b.numerator_potential,
        denominator: b.denominator,
        lambda_lb: b.lambda_lb,
        window_nonempty: matches!((w_min_v, w_max_iv), (Some(lo), Some(hi)) if lo <= hi),
        w_min_v,
        w_max_iv,
        pair_std_error: b.error_bars,
        overlap,
    })
}

fn validate_n_list(n_list: &[usize]) -> Result<()> {
    require(n_list.len() >= 3, || format!("need at least 3 body counts, got {}", n_list.len()))?;
    require(n_list[0] >= 1 && n_list.windows(2).all(|w| w[0] < w[1]), || {
        format!("body counts must be positive and strictly increasing: {n_list:?}")
    })
}

/// Bound quantities for each body count; independent counts run in parallel.
pub fn run_scaling(family: StateFamily, n_list: &[usize], p: &ScalingParams) -> Result<ScalingRun> {
    validate_n_list(n_list)?;
    let shift = match family {
        StateFamily::NearlyClassical => None,
        StateFamily::Superposition => {
            let r = p.shift.unwrap_or_else(|| default_shift(p.sigma, n_list[0]));
            let overlap = (-(n_list[0] as f64) * r * r / (2.0 * p.sigma * p.sigma)).exp();
            require(overlap < NEGLIGIBLE_OVERLAP, || {
                format!("branch overlap {overlap:e} at N = {} is not negligible; increase R", n_list[0])
            })?;
            Some(r)
        }
    };
    let records = n_list
        .par_iter()
        .map(|&n| run_one(family, n, p, shift.unwrap_or(0.0)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScalingRun { family, n_list: n_list.to_vec(), shift, params: p.clone(), records })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub r_squared: f64,
}

/// Least-squares slope of `log(value)` against `log(N)`.
pub fn fit_exponent(values: &[f64], n_list: &[usize]) -> Result<ExponentFit> {
    require(values.len() == n_list.len(), || {
        format!("{} values for {} body counts", values.len(), n_list.len())
    })?;
    require(values.len() >= 2, || "need at least two points".into())?;
    if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::Domain(format!("log-log fit needs positive values, got {v}")));
    }
    require(n_list.iter().all(|&n| n >= 1), || "body counts must be positive".into())?;
    let xs: Vec<f64> = n_list.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    require(sxx > 0.0, || "body counts must not all coincide".into())?;
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(ExponentFit { slope, r_squared })
}

/// Fitted exponents of the recorded quantities. The potential part can be
/// negative, so its magnitude is fitted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSlopes {
    pub numerator_kinetic: Option<ExponentFit>,
    pub numerator_potential_magnitude: Option<ExponentFit>,
    pub numerator: Option<ExponentFit>,
    pub denominator: Option<ExponentFit>,
    pub lambda_lb: Option<ExponentFit>,
    pub w_min_v: Option<ExponentFit>,
    pub w_max_iv: Option<ExponentFit>,
}

pub fn run_slopes(run: &ScalingRun) -> RunSlopes {
    let fit = |f: &dyn Fn(&ScalingRecord) -> Option<f64>| -> Option<ExponentFit> {
        let values: Option<Vec<f64>> = run.records.iter().map(f).collect();
        fit_exponent(&values?, &run.n_list).ok()
    };
    RunSlopes {
        numerator_kinetic: fit(&|r| Some(r.numerator_kinetic)),
        numerator_potential_magnitude: fit(&|r| Some(r.numerator_potential.abs())),
        numerator: fit(&|r| Some(r.numerator())),
        denominator: fit(&|r| Some(r.denominator)),
        lambda_lb: fit(&|r| r.lambda_lb),
        w_min_v: fit(&|r| r.w_min_v),
        w_max_iv: fit(&|r| r.w_max_iv),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowRow {
    pub n_bodies: usize,
    pub w_min_v: Option<f64>,
    pub w_max_iv: Option<f64>,
    pub nonempty: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowTable {
    pub rows: Vec<WindowRow>,
    /// Nonempty at every body count of the run.
    pub persists: bool,
}

pub fn window_vs_n(run: &ScalingRun) -> WindowTable {
    let rows: Vec<WindowRow> = run
        .records
        .iter()
        .map(|r| WindowRow { n_bodies: r.n_bodies, w_min_v: r.w_min_v, w_max_iv: r.w_max_iv, nonempty: r.window_nonempty })
        .collect();
    let persists = !rows.is_empty() && rows.iter().all(|r| r.nonempty);
    WindowTable { rows, persists }
}
