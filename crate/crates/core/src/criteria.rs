//! Model parameters and sufficient conditions for the instability criteria.
//!
//! Conditions (i)-(iv) are checked through closed-form sufficient bounds:
//! the harmonic ground energy for (i), completing the square in
//! `f = w xbar^t (xbar - 2S)` for (ii), the imaginary-part weight for (iii)
//! and Cauchy-Schwarz plus Young for the coupling ceiling in (iv).
//! Condition (v) supplies the coupling floor via [`crate::bound`].

use serde::Serialize;

use crate::error::{require, Error, Result};
use crate::potentials::PairPotential;
use crate::states::StateMoments;

/// Physical parameters of the trapped model (`hbar = 1`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelParams {
    pub n_bodies: usize,
    pub mass: f64,
    /// Harmonic trap strength `v` in `B = (v/2) sum |x_k|^2`.
    pub trap: f64,
    /// Wavefunction-energy coupling `w`.
    pub coupling: f64,
    pub potential: PairPotential,
    /// Stability constant `eps_U` with `U >= -eps_U N`.
    pub eps_u: f64,
}

impl ModelParams {
    pub fn new(
        n_bodies: usize,
        mass: f64,
        trap: f64,
        coupling: f64,
        potential: PairPotential,
        eps_u: f64,
    ) -> Result<Self> {
        require(n_bodies >= 1, || "N must be at least 1".into())?;
        require(mass > 0.0 && mass.is_finite(), || format!("mass must be positive, got {mass}"))?;
        require(trap >= 0.0 && trap.is_finite(), || format!("trap strength must be >= 0, got {trap}"))?;
        require(coupling >= 0.0 && coupling.is_finite(), || format!("coupling must be >= 0, got {coupling}"))?;
        require(eps_u >= 0.0 && eps_u.is_finite(), || format!("eps_U must be >= 0, got {eps_u}"))?;
        potential.validate()?;
        Ok(ModelParams { n_bodies, mass, trap, coupling, potential, eps_u })
    }

    /// `omega = sqrt(v / m)`.
    pub fn omega(&self) -> f64 {
        (self.trap / self.mass).sqrt()
    }

    pub fn with_coupling(&self, coupling: f64) -> Self {
        ModelParams { coupling, ..self.clone() }
    }

    pub fn with_bodies(&self, n_bodies: usize) -> Self {
        ModelParams { n_bodies, ..self.clone() }
    }
}

/// Criterion (i): `Lambda >= omega (3N/2) - eps_U N`, positive iff `3 omega / 2 > eps_U`.
pub fn check_i(p: &ModelParams) -> (bool, f64) {
    let omega = p.omega();
    let n = p.n_bodies as f64;
    (1.5 * omega > p.eps_u, omega * 1.5 * n - p.eps_u * n)
}

/// Criterion (ii) through `f >= -w |S|^2`: passes iff `lambda_min_lower - w |S|^2 > eta`.
pub fn check_ii(p: &ModelParams, s: &StateMoments, eta: f64) -> Result<bool> {
    require(eta > 0.0, || format!("eta must be positive, got {eta}"))?;
    let (_, lower) = check_i(p);
    Ok(lower - p.coupling * s.s_norm_sq() > eta)
}

/// Criterion (iii): `4 w int [Im psi]^2 |xbar|^2 < eta`.
pub fn check_iii(s: &StateMoments, eta: f64, w: f64) -> bool {
    4.0 * w * s.im_weight < eta
}

/// Which inequality limits the coupling ceiling of criterion (iv).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActiveBound {
    /// `|xbar|^2 <= N sum |x_k|^2` absorbed into the halved trap.
    CauchySchwarz,
    /// The constant `w (1 + 1/delta) |S|^2` exhausts the residual ground energy.
    ResidualGroundEnergy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingCeiling {
    pub w_max: f64,
    pub active: ActiveBound,
}

/// Ceiling on `w` for `f <= (rho - 1)[-(1/4m) Laplacian + B/2]` over `dof` degrees
/// of freedom shared by `n_bodies` bodies (`dof = 3N` in three dimensions).
///
/// Uses `f <= w |xbar - S|^2 <= w (1 + delta) |xbar|^2 + w (1 + 1/delta) |S|^2` and
/// `|xbar|^2 <= N sum |x_k|^2`. The quadratic part is absorbed by the trap when
/// `w <= (rho - 1) v / (4 N (1 + delta))`; what remains of the trap, with the
/// quarter kinetic term, is an oscillator whose ground energy must cover the
/// constant.
pub fn coupling_ceiling(
    n_bodies: usize,
    dof: usize,
    mass: f64,
    trap: f64,
    rho: f64,
    s_norm_sq: f64,
    delta: f64,
) -> Result<CouplingCeiling> {
    require(rho > 1.0, || format!("rho must exceed 1, got {rho}"))?;
    require(delta > 0.0, || format!("delta must be positive, got {delta}"))?;
    require(n_bodies >= 1 && dof >= 1, || "need at least one body and one degree of freedom".into())?;
    require(mass > 0.0 && trap > 0.0, || "mass and trap must be positive".into())?;
    let cs = (rho - 1.0) * trap / (4.0 * n_bodies as f64 * (1.0 + delta));
    let constant = (1.0 + 1.0 / delta) * s_norm_sq;
    if constant == 0.0 {
        return Ok(CouplingCeiling { w_max: cs, active: ActiveBound::CauchySchwarz });
    }
    let residual = |w: f64| {
        let v_left = 0.5 * trap * (1.0 - w / cs).max(0.0);
        (rho - 1.0) * 0.5 * dof as f64 * (v_left / (2.0 * mass)).sqrt()
    };
    // w * constant rises and the residual falls on [0, cs]; bisect the crossing
    let (mut lo, mut hi) = (0.0, cs);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid * constant <= residual(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * cs {
            break;
        }
    }
    Ok(CouplingCeiling { w_max: lo, active: ActiveBound::ResidualGroundEnergy })
}

/// Criterion (iv) ceiling for the three-dimensional model.
///
/// Requires `-(1/4m) Laplacian + B/2 + U >= 0`, checked via `3 omega / 4 >= eps_U`.
pub fn w_upper_bound_iv(
    p: &ModelParams,
    rho: f64,
    s: &StateMoments,
    delta: f64,
) -> Result<CouplingCeiling> {
    let quarter_omega = 0.75 * p.omega();
    if quarter_omega < p.eps_u {
        return Err(Error::SplitCondition { quarter_omega, eps_u: p.eps_u });
    }
    coupling_ceiling(p.n_bodies, 3 * p.n_bodies, p.mass, p.trap, rho, s.s_norm_sq(), delta)
}

/// Outcome of all criterion checks and the resulting coupling window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriteriaReport {
    pub pass_i: bool,
    pub pass_ii: bool,
    pub pass_iii: bool,
    pub pass_iv: bool,
    /// Lower bound on the spectrum of `Lambda`.
    pub lambda_min_lower: f64,
    pub eta: f64,
    pub rho: f64,
    pub delta: f64,
    /// Zero when the split condition of (iv) fails.
    pub w_max_iv: f64,
    pub w_max_active: Option<ActiveBound>,
    pub w_min_v: f64,
    pub window_nonempty: bool,
    /// Whether the configured coupling lies inside a nonempty window.
    pub coupling_in_window: bool,
}

/// Default margin for (ii)/(iii): half of the criterion-(i) lower bound.
pub fn default_eta(p: &ModelParams) -> f64 {
    let (_, lower) = check_i(p);
    if lower > 0.0 {
        0.5 * lower
    } else {
        f64::MIN_POSITIVE
    }
}

/// Runs (i)-(iv) and intersects `[w_min_v, w_max_iv]`.
///
/// (ii) and (iii) weaken as `w` grows, so they are evaluated at the top of
/// the window: passing there certifies every coupling inside it.
pub fn assemble_report(
    p: &ModelParams,
    rho: f64,
    eta: Option<f64>,
    s: &StateMoments,
    w_min_v: f64,
    delta: f64,
) -> Result<CriteriaReport> {
    require(rho > 1.0, || format!("rho must exceed 1, got {rho}"))?;
    require(delta > 0.0, || format!("delta must be positive, got {delta}"))?;
    let eta = eta.unwrap_or_else(|| default_eta(p));
    require(eta > 0.0, || format!("eta must be positive, got {eta}"))?;
    let (pass_i, lambda_min_lower) = check_i(p);
    let (w_max_iv, w_max_active, pass_iv) = match w_upper_bound_iv(p, rho, s, delta) {
        Ok(c) => (c.w_max, Some(c.active), c.w_max > 0.0),
        Err(Error::SplitCondition { .. }) => (0.0, None, false),
        Err(e) => return Err(e),
    };
    let w_top = w_max_iv.max(w_min_v);
    let pass_ii = check_ii(&p.with_coupling(w_top), s, eta)?;
    let pass_iii = check_iii(s, eta, w_top);
    let window_nonempty = pass_i && pass_ii && pass_iii && pass_iv && w_min_v <= w_max_iv;
    let coupling_in_window = window_nonempty && (w_min_v..=w_max_iv).contains(&p.coupling);
    Ok(CriteriaReport {
        pass_i,
        pass_ii,
        pass_iii,
        pass_iv,
        lambda_min_lower,
        eta,
        rho,
        delta,
        w_max_iv,
        w_max_active,
        w_min_v,
        window_nonempty,
        coupling_in_window,
    })
}
