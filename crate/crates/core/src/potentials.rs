//! Pair potentials, total interaction energy over configurations, and a
//! multi-start estimate of the thermodynamic-stability constant.
//!
//! The total interaction energy sums over *ordered* pairs `j != k`, so every
//! unordered pair contributes twice and a two-body well of depth `E` gives a
//! total of `-2E`.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{require, Error, Result};
use crate::rng;

pub type Vec3 = [f64; 3];

/// LJ minimum location in units of the length scale.
pub const LJ_MIN_FACTOR: f64 = 1.122_462_048_309_373; // 2^(1/6)

/// A spherically symmetric pair interaction `u(r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PairPotential {
    /// `4E[(alpha/r)^12 - (alpha/r)^6]`.
    LennardJones { energy: f64, length: f64 },
    /// Square well: `height` for `r <= radius`, `-1` on `(radius, radius + width]`,
    /// zero beyond. With `smoothing = Some(s)` the steps become `tanh` ramps of width `s`.
    Basuev {
        height: f64,
        radius: f64,
        width: f64,
        #[serde(default)]
        smoothing: Option<f64>,
    },
    /// Lennard-Jones outside `r_cap`, constant `u(r_cap)` inside.
    /// Dropping the attractive term leaves a pure capped `r^-12` repulsion.
    CappedLj {
        energy: f64,
        length: f64,
        #[serde(default)]
        r_cap: Option<f64>,
        #[serde(default = "default_true")]
        attractive: bool,
    },
    /// Piecewise-linear table; constant `u[0]` below `r[0]`, zero past the last node.
    Tabulated { r: Vec<f64>, u: Vec<f64> },
}

fn default_true() -> bool {
    true
}

fn smooth_step(t: f64, width: f64) -> f64 {
    0.5 * (1.0 + (t / width).tanh())
}

fn smooth_step_deriv(t: f64, width: f64) -> f64 {
    let th = (t / width).tanh();
    0.5 * (1.0 - th * th) / width
}

impl PairPotential {
    pub fn lennard_jones(energy: f64, length: f64) -> Self {
        PairPotential::LennardJones { energy, length }
    }

    pub fn basuev(height: f64, radius: f64, width: f64) -> Self {
        PairPotential::Basuev { height, radius, width, smoothing: None }
    }

    /// Smooth approximant of the square well; `smoothing` defaults to `width / 4`.
    pub fn basuev_smooth(height: f64, radius: f64, width: f64, smoothing: Option<f64>) -> Self {
        PairPotential::Basuev {
            height,
            radius,
            width,
            smoothing: Some(smoothing.unwrap_or(width / 4.0)),
        }
    }

    /// Capped LJ with the default cap radius `length / 2`.
    pub fn capped_lj(energy: f64, length: f64) -> Self {
        PairPotential::CappedLj { energy, length, r_cap: None, attractive: true }
    }

    /// Capped `4E(alpha/r)^12` with no attractive well (`u >= 0`).
    pub fn capped_repulsion(energy: f64, length: f64) -> Self {
        PairPotential::CappedLj { energy, length, r_cap: None, attractive: false }
    }

    pub fn zero() -> Self {
        PairPotential::Tabulated { r: vec![1.0], u: vec![0.0] }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PairPotential::LennardJones { energy, length } => {
                require(*energy > 0.0 && *length > 0.0, || {
                    "lennard-jones needs energy > 0 and length > 0".into()
                })
            }
            PairPotential::Basuev { height, radius, width, smoothing } => {
                require(height.is_finite() && *radius > 0.0 && *width > 0.0, || {
                    "basuev needs finite height, radius > 0, width > 0".into()
                })?;
                require(smoothing.is_none_or(|s| s > 0.0), || {
                    "basuev smoothing must be positive".into()
                })
            }
            PairPotential::CappedLj { energy, length, r_cap, .. } => {
                require(*energy > 0.0 && *length > 0.0, || {
                    "capped-lj needs energy > 0 and length > 0".into()
                })?;
                require(r_cap.is_none_or(|c| c > 0.0), || "capped-lj r_cap must be positive".into())
            }
            PairPotential::Tabulated { r, u } => {
                require(!r.is_empty() && r.len() == u.len(), || {
                    "tabulated potential needs equal-length, non-empty r and u".into()
                })?;
                require(r[0] > 0.0 && r.windows(2).all(|w| w[1] > w[0]), || {
                    "tabulated r must be positive and strictly increasing".into()
                })?;
                require(u.iter().all(|x| x.is_finite()), || "tabulated u must be finite".into())
            }
        }
    }

    /// `true` for a table of zeros.
    pub fn is_identically_zero(&self) -> bool {
        matches!(self, PairPotential::Tabulated { u, .. } if u.iter().all(|&x| x == 0.0))
    }

    /// `true` iff the potential is bounded above with an integrable tail.
    pub fn integrable_class(&self) -> bool {
        !matches!(self, PairPotential::LennardJones { .. })
    }

    /// `sup_r u(r)` when finite.
    pub fn upper_bound(&self) -> Option<f64> {
        match self {
            PairPotential::LennardJones { .. } => None,
            PairPotential::Basuev { height, .. } => Some(height.max(0.0)),
            PairPotential::CappedLj { .. } => Some(self.energy_unchecked(0.0).max(0.0)),
            PairPotential::Tabulated { u, .. } => {
                Some(u.iter().copied().fold(0.0_f64, f64::max))
            }
        }
    }

    /// Length at which the attractive well sits; used to seed configurations.
    pub fn characteristic_length(&self) -> f64 {
        match self {
            PairPotential::LennardJones { length, .. } | PairPotential::CappedLj { length, .. } => {
                LJ_MIN_FACTOR * length
            }
            PairPotential::Basuev { radius, width, .. } => radius + 0.5 * width,
            PairPotential::Tabulated { r, u } => {
                let (i, _) = u
                    .iter()
                    .enumerate()
                    .fold((0, f64::INFINITY), |acc, (i, &x)| if x < acc.1 { (i, x) } else { acc });
                r[i]
            }
        }
    }

    /// Evaluates `u(r)` for `r > 0`.
    pub fn eval_pair(&self, r: f64) -> Result<f64> {
        if r.is_nan() || r <= 0.0 || !r.is_finite() {
            return Err(Error::Domain(format!("pair distance must be positive and finite, got {r}")));
        }
        Ok(self.energy_unchecked(r))
    }

    /// `u(r)` for `r >= 0`; raw LJ returns `+inf` at the origin.
    pub fn energy_unchecked(&self, r: f64) -> f64 {
        match *self {
            PairPotential::LennardJones { energy, length } => {
                if r == 0.0 {
                    return f64::INFINITY;
                }
                let s6 = (length / r).powi(6);
                4.0 * energy * (s6 * s6 - s6)
            }
            PairPotential::Basuev { height, radius, width, smoothing } => match smoothing {
                None => {
                    if r <= radius {
                        height
                    } else if r <= radius + width {
                        -1.0
                    } else {
                        0.0
                    }
                }
                Some(s) => {
                    height * smooth_step(radius - r, s)
                        - smooth_step(r - radius, s) * smooth_step(radius + width - r, s)
                }
            },
            PairPotential::CappedLj { energy, length, r_cap, attractive } => {
                let rc = r_cap.unwrap_or(0.5 * length);
                let s6 = (length / r.max(rc)).powi(6);
                if attractive {
                    4.0 * energy * (s6 * s6 - s6)
                } else {
                    4.0 * energy * s6 * s6
                }
            }
            PairPotential::Tabulated { r: ref rs, ref u } => {
                if r <= rs[0] {
                    return u[0];
                }
                let last = rs.len() - 1;
                if r > rs[last] {
                    return 0.0;
                }
                let i = rs.partition_point(|&x| x < r).max(1);
                let t = (r - rs[i - 1]) / (rs[i] - rs[i - 1]);
                u[i - 1] + t * (u[i] - u[i - 1])
            }
        }
    }

    /// `du/dr`, zero on flat pieces.
    pub fn derivative(&self, r: f64) -> f64 {
        match *self {
            PairPotential::LennardJones { energy, length } => {
                let s6 = (length / r).powi(6);
                -24.0 * energy * (2.0 * s6 * s6 - s6) / r
            }
            PairPotential::Basuev { height, radius, width, smoothing } => match smoothing {
                None => 0.0,
                Some(s) => {
                    -height * smooth_step_deriv(radius - r, s)
                        - (smooth_step_deriv(r - radius, s) * smooth_step(radius + width - r, s)
                            - smooth_step(r - radius, s) * smooth_step_deriv(radius + width - r, s))
                }
            },
            PairPotential::CappedLj { energy, length, r_cap, attractive } => {
                let rc = r_cap.unwrap_or(0.5 * length);
                if r < rc {
                    return 0.0;
                }
                let s6 = (length / r).powi(6);
                if attractive {
                    -24.0 * energy * (2.0 * s6 * s6 - s6) / r
                } else {
                    -48.0 * energy * s6 * s6 / r
                }
            }
            PairPotential::Tabulated { r: ref rs, ref u } => {
                let last = rs.len() - 1;
                if r <= rs[0] || r > rs[last] {
                    return 0.0;
                }
                let i = rs.partition_point(|&x| x < r).max(1);
                (u[i] - u[i - 1]) / (rs[i] - rs[i - 1])
            }
        }
    }
}

/// Positions of `N >= 1` bodies in three dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    positions: Vec<Vec3>,
}

impl Configuration {
    pub fn new(positions: Vec<Vec3>) -> Result<Self> {
        require(!positions.is_empty(), || "configuration needs at least one body".into())?;
        require(positions.iter().flatten().all(|x| x.is_finite()), || {
            "configuration coordinates must be finite".into()
        })?;
        Ok(Configuration { positions })
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

pub(crate) fn distance(a: &Vec3, b: &Vec3) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

/// Ordered-pair sum `U = sum_{j != k} u(|x_j - x_k|)`.
pub fn eval_total_u(p: &PairPotential, c: &Configuration) -> Result<f64> {
    let x = c.positions();
    let bounded = p.integrable_class();
    let mut total = 0.0;
    for j in 0..x.len() {
        for k in (j + 1)..x.len() {
            let r = distance(&x[j], &x[k]);
            if r == 0.0 && !bounded {
                return Err(Error::SingularConfiguration(j, k));
            }
            total += p.energy_unchecked(r);
        }
    }
    Ok(2.0 * total)
}

/// Same sum without validation; raw LJ returns `+inf` on coincidence.
pub(crate) fn total_u_unchecked(p: &PairPotential, x: &[Vec3]) -> f64 {
    let mut total = 0.0;
    for j in 0..x.len() {
        for k in (j + 1)..x.len() {
            total += p.energy_unchecked(distance(&x[j], &x[k]));
        }
    }
    2.0 * total
}

fn total_u_gradient(p: &PairPotential, x: &[Vec3], grad: &mut [Vec3]) {
    for g in grad.iter_mut() {
        *g = [0.0; 3];
    }
    for j in 0..x.len() {
        for k in (j + 1)..x.len() {
            let r = distance(&x[j], &x[k]);
            if r == 0.0 {
                continue;
            }
            // factor 2 from the ordered-pair convention
            let coef = 2.0 * p.derivative(r) / r;
            for m in 0..3 {
                let f = coef * (x[j][m] - x[k][m]);
                grad[j][m] += f;
                grad[k][m] -= f;
            }
        }
    }
}

/// Lower estimate of the stability constant together with its search provenance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityEstimate {
    /// `max_N max(0, -min U / N)` over the searched body counts.
    pub value: f64,
    pub n_max: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Lowest total energy found for each body count `N = 2..=n_max`.
    pub min_energy: Vec<(usize, f64)>,
    pub tag: &'static str,
}

const DESCENT_MAX_ITERS: usize = 20_000;

fn descend(p: &PairPotential, x: &mut [Vec3], scale: f64) -> f64 {
    let mut grad = vec![[0.0; 3]; x.len()];
    let mut trial = x.to_vec();
    let mut energy = total_u_unchecked(p, x);
    let mut step = 1e-3 * scale * scale;
    for _ in 0..DESCENT_MAX_ITERS {
        total_u_gradient(p, x, &mut grad);
        let g2: f64 = grad.iter().flatten().map(|g| g * g).sum();
        if g2.sqrt() < 1e-12 {
            break;
        }
        let mut accepted = false;
        while step * g2.sqrt() > 1e-14 * scale {
            for (t, (xi, gi)) in trial.iter_mut().zip(x.iter().zip(&grad)) {
                for m in 0..3 {
                    t[m] = xi[m] - step * gi[m];
                }
            }
            let e = total_u_unchecked(p, &trial);
            if e <= energy - 1e-4 * step * g2 {
                x.copy_from_slice(&trial);
                energy = e;
                step *= 1.5;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    energy
}

fn random_start<R: Rng>(n: usize, scale: f64, rng: &mut R) -> Vec<Vec3> {
    let side = scale * (n as f64).cbrt().max(1.0);
    let min_sep = 0.85 * scale;
    let mut x: Vec<Vec3> = Vec::with_capacity(n);
    let mut attempts = 0;
    while x.len() < n {
        let cand = [
            rng.gen::<f64>() * side,
            rng.gen::<f64>() * side,
            rng.gen::<f64>() * side,
        ];
        attempts += 1;
        if attempts > 10_000 || x.iter().all(|y| distance(y, &cand) >= min_sep) {
            x.push(cand);
        }
    }
    x
}

fn minimize_once(p: &PairPotential, n: usize, seed: u64, restart: usize) -> f64 {
    let scale = p.characteristic_length();
    let mut rng = rng::stream(seed, &[n as u64, restart as u64]);
    let mut x = random_start(n, scale, &mut rng);
    let mut energy = descend(p, &mut x, scale);
    // stochastic single-body moves reach minima of flat or stepped potentials
    let kick = Normal::new(0.0, 0.05 * scale).expect("positive std");
    for _ in 0..300 * n {
        let i = rng.gen_range(0..n);
        let old = x[i];
        for m in 0..3 {
            x[i][m] += kick.sample(&mut rng);
        }
        let e = total_u_unchecked(p, &x);
        if e < energy {
            energy = e;
        } else {
            x[i] = old;
        }
    }
    energy.min(descend(p, &mut x, scale))
}

/// Multi-start local minimisation of `U/N` for `N = 2..=n_max`.
///
/// Each `(N, restart)` pair draws from its own seed substream, so adding
/// restarts or raising `n_max` only adds searches and the estimate never drops.
pub fn estimate_stability_constant(
    p: &PairPotential,
    n_max: usize,
    restarts: usize,
    seed: u64,
) -> Result<StabilityEstimate> {
    p.validate()?;
    require(n_max >= 2, || format!("n_max must be at least 2, got {n_max}"))?;
    require(restarts >= 1, || "restarts must be at least 1".into())?;
    let mut min_energy = Vec::with_capacity(n_max - 1);
    let mut value = 0.0_f64;
    for n in 2..=n_max {
        let mins: Vec<f64> = (0..restarts)
            .into_par_iter()
            .map(|i| minimize_once(p, n, seed, i))
            .collect();
        let best = mins.into_iter().fold(f64::INFINITY, f64::min);
        value = value.max(-best / n as f64);
        min_energy.push((n, best));
    }
    Ok(StabilityEstimate { value, n_max, restarts, seed, min_energy, tag: "estimate" })
}

/// Samples the Lennard-Jones-type inequalities on a log grid over `[a/100, 100a]`.
pub fn check_lj_type(p: &PairPotential, c1: f64, c2: f64, a: f64, eps: f64) -> Result<bool> {
    require(a > 0.0 && c1 > 0.0 && c2 > 0.0 && eps > 0.0, || {
        "check_lj_type needs a, c1, c2, eps > 0".into()
    })?;
    const POINTS: usize = 4001;
    let (lo, hi) = ((a / 100.0).ln(), (100.0 * a).ln());
    let power = 3.0 + eps;
    Ok((0..POINTS).all(|i| {
        let r = (lo + (hi - lo) * i as f64 / (POINTS - 1) as f64).exp();
        let u = p.energy_unchecked(r);
        let envelope = r.powf(-power);
        let inner_ok = r > a || u >= c1 * envelope;
        let outer_ok = r < a || u.abs() <= c2 * envelope;
        inner_ok && outer_ok
    }))
}
