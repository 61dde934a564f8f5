//! Gaussian product test states and their closed-form moments.
//!
//! Single-body factor: `g(x) = (2 pi sigma^2)^(-3/4) exp(-|x|^2 / (4 sigma^2))`, so
//! `|g|^2` is the normal density with per-axis variance `sigma^2`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{require, Result};
use crate::potentials::{Configuration, Vec3};

/// Cross terms between superposition branches are dropped below this overlap.
pub const NEGLIGIBLE_OVERLAP: f64 = 1e-12;

/// Product of Gaussians centred on lattice sites.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeState {
    sites: Vec<Vec3>,
    sigma: f64,
    centered: bool,
}

fn integer_cbrt_ceil(n: usize) -> usize {
    let mut side = (n as f64).cbrt().round() as usize;
    while side * side * side < n {
        side += 1;
    }
    while side > 1 && (side - 1).pow(3) >= n {
        side -= 1;
    }
    side.max(1)
}

impl LatticeState {
    pub fn from_sites(sites: Vec<Vec3>, sigma: f64) -> Result<Self> {
        require(!sites.is_empty(), || "state needs at least one body".into())?;
        require(sigma > 0.0 && sigma.is_finite(), || format!("sigma must be positive, got {sigma}"))?;
        require(sites.iter().flatten().all(|x| x.is_finite()), || "sites must be finite".into())?;
        Ok(LatticeState { sites, sigma, centered: false })
    }

    /// Fills a cube of side `ceil(N^(1/3))` in raster order (x fastest) with
    /// spacing `a`, keeps the first `N` sites and optionally subtracts their mean.
    pub fn build(n: usize, a: f64, sigma: f64, center: bool) -> Result<Self> {
        require(n >= 1, || "lattice needs N >= 1".into())?;
        require(a > 0.0 && a.is_finite(), || format!("lattice spacing must be positive, got {a}"))?;
        let side = integer_cbrt_ceil(n);
        let mut sites: Vec<Vec3> = (0..n)
            .map(|i| {
                let (ix, iy, iz) = (i % side, (i / side) % side, i / (side * side));
                [ix as f64 * a, iy as f64 * a, iz as f64 * a]
            })
            .collect();
        if center {
            let mut mean = [0.0; 3];
            for s in &sites {
                for m in 0..3 {
                    mean[m] += s[m];
                }
            }
            for m in &mut mean {
                *m /= n as f64;
            }
            for s in &mut sites {
                for m in 0..3 {
                    s[m] -= mean[m];
                }
            }
        }
        let mut state = LatticeState::from_sites(sites, sigma)?;
        state.centered = center;
        Ok(state)
    }

    pub fn sites(&self) -> &[Vec3] {
        &self.sites
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    pub fn n_bodies(&self) -> usize {
        self.sites.len()
    }

    /// `Y = sum_k y_k`.
    pub fn site_sum(&self) -> Vec3 {
        let mut y = [0.0; 3];
        for s in &self.sites {
            for m in 0..3 {
                y[m] += s[m];
            }
        }
        y
    }

    pub fn translated(&self, t: Vec3) -> LatticeState {
        LatticeState {
            sites: self.sites.iter().map(|s| [s[0] + t[0], s[1] + t[1], s[2] + t[2]]).collect(),
            sigma: self.sigma,
            centered: false,
        }
    }

    fn log_amplitude(&self, x: &[Vec3]) -> f64 {
        let s2 = self.sigma * self.sigma;
        let prefactor = -0.75 * (2.0 * std::f64::consts::PI * s2).ln();
        x.iter()
            .zip(&self.sites)
            .map(|(xk, yk)| {
                let d2: f64 = (0..3).map(|m| (xk[m] - yk[m]).powi(2)).sum();
                prefactor - d2 / (4.0 * s2)
            })
            .sum()
    }

    /// Pointwise value of the (real) product state.
    pub fn eval(&self, c: &Configuration) -> Result<f64> {
        require(c.len() == self.n_bodies(), || {
            format!("configuration has {} bodies, state has {}", c.len(), self.n_bodies())
        })?;
        Ok(self.log_amplitude(c.positions()).exp())
    }
}

pub fn build_lattice_state(n: usize, a: f64, sigma: f64, center: bool) -> Result<LatticeState> {
    LatticeState::build(n, a, sigma, center)
}

/// `(theta_{-R} + beta theta_{+R}) / sqrt(2)` with every body shifted by `-/+ R e_mu`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuperpositionState {
    base: LatticeState,
    shift: f64,
    /// Zero-based axis index.
    axis: usize,
    beta: Complex64,
}

impl SuperpositionState {
    /// `direction` is 1-based (1, 2 or 3); `phase` is the argument of `beta`.
    pub fn new(base: LatticeState, shift: f64, direction: usize, phase: f64) -> Result<Self> {
        require((1..=3).contains(&direction), || format!("direction must be 1, 2 or 3, got {direction}"))?;
        require(shift >= 0.0 && shift.is_finite(), || format!("shift must be >= 0, got {shift}"))?;
        require(phase.is_finite(), || "phase must be finite".into())?;
        Ok(SuperpositionState { base, shift, axis: direction - 1, beta: Complex64::from_polar(1.0, phase) })
    }

    pub fn base(&self) -> &LatticeState {
        &self.base
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn direction(&self) -> usize {
        self.axis + 1
    }

    pub fn beta(&self) -> Complex64 {
        self.beta
    }

    fn offset(&self, sign: f64) -> Vec3 {
        let mut t = [0.0; 3];
        t[self.axis] = sign * self.shift;
        t
    }

    /// Branch multiplying `1/sqrt(2)`: `theta(x - R e)`, centred at `y + R e`.
    pub fn minus_branch(&self) -> LatticeState {
        self.base.translated(self.offset(1.0))
    }

    /// Branch multiplying `beta/sqrt(2)`: `theta(x + R e)`, centred at `y - R e`.
    pub fn plus_branch(&self) -> LatticeState {
        self.base.translated(self.offset(-1.0))
    }

    /// `<theta_{-R} | theta_{+R}> = exp(-N R^2 / (2 sigma^2))`.
    pub fn overlap(&self) -> f64 {
        let s = self.base.sigma;
        (-(self.base.n_bodies() as f64) * self.shift * self.shift / (2.0 * s * s)).exp()
    }

    /// Squared norm of the unnormalised superposition: `1 + Re(beta) * overlap`.
    pub fn norm_sq(&self) -> f64 {
        1.0 + self.beta.re * self.overlap()
    }

    /// Unnormalised amplitude.
    pub fn eval(&self, c: &Configuration) -> Result<Complex64> {
        let minus = self.minus_branch().eval(c)?;
        let plus = self.plus_branch().eval(c)?;
        Ok((Complex64::new(minus, 0.0) + self.beta * plus) / std::f64::consts::SQRT_2)
    }
}

/// Either family of test state.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TestState {
    Lattice(LatticeState),
    Superposition(SuperpositionState),
}

/// One Gaussian piece of `|psi|^2` (or of the gradient cross density).
///
/// The density is `weight * prod_k Normal(centers[k], sigma^2 I)`. Cross terms
/// between branches separated by `2h` carry `half_sep_sq = |h|^2`, which
/// enters the gradient products as `grad_a . grad_b = (|z|^2 - |h|^2)/(4 sigma^4)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityTerm {
    pub weight: f64,
    pub centers: Vec<Vec3>,
    pub sigma: f64,
    pub half_sep_sq: f64,
}

impl DensityTerm {
    pub fn center_sum(&self) -> Vec3 {
        let mut y = [0.0; 3];
        for s in &self.centers {
            for m in 0..3 {
                y[m] += s[m];
            }
        }
        y
    }

    pub fn center_norm_sq_sum(&self) -> f64 {
        self.centers.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>()).sum()
    }
}

/// Decomposition of a normalised `|psi|^2` into Gaussian pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityDecomposition {
    pub terms: Vec<DensityTerm>,
    /// Overlap of the dropped cross term, zero when nothing was dropped.
    pub dropped_overlap: f64,
}

impl TestState {
    pub fn n_bodies(&self) -> usize {
        self.lattice().n_bodies()
    }

    pub fn sigma(&self) -> f64 {
        self.lattice().sigma()
    }

    fn lattice(&self) -> &LatticeState {
        match self {
            TestState::Lattice(s) => s,
            TestState::Superposition(s) => &s.base,
        }
    }

    pub fn is_real(&self) -> bool {
        match self {
            TestState::Lattice(_) => true,
            TestState::Superposition(s) => s.beta.im == 0.0,
        }
    }

    /// Gaussian pieces of the normalised density; the branch cross term is kept
    /// while its overlap is at least [`NEGLIGIBLE_OVERLAP`].
    pub fn density_terms(&self) -> DensityDecomposition {
        match self {
            TestState::Lattice(s) => DensityDecomposition {
                terms: vec![DensityTerm {
                    weight: 1.0,
                    centers: s.sites.clone(),
                    sigma: s.sigma,
                    half_sep_sq: 0.0,
                }],
                dropped_overlap: 0.0,
            },
            TestState::Superposition(s) => {
                let norm = s.norm_sq();
                let branch = |l: LatticeState| DensityTerm {
                    weight: 0.5 / norm,
                    centers: l.sites,
                    sigma: s.base.sigma,
                    half_sep_sq: 0.0,
                };
                let mut terms = vec![branch(s.minus_branch()), branch(s.plus_branch())];
                let ov = s.overlap();
                let mut dropped_overlap = 0.0;
                if ov >= NEGLIGIBLE_OVERLAP {
                    terms.push(DensityTerm {
                        weight: s.beta.re * ov / norm,
                        centers: s.base.sites.clone(),
                        sigma: s.base.sigma,
                        half_sep_sq: s.shift * s.shift,
                    });
                } else {
                    dropped_overlap = ov;
                }
                DensityDecomposition { terms, dropped_overlap }
            }
        }
    }

    /// Amplitude at a configuration; superpositions are returned unnormalised.
    pub fn eval(&self, c: &Configuration) -> Result<Complex64> {
        match self {
            TestState::Lattice(s) => Ok(Complex64::new(s.eval(c)?, 0.0)),
            TestState::Superposition(s) => s.eval(c),
        }
    }
}

pub fn eval_state(s: &TestState, c: &Configuration) -> Result<Complex64> {
    s.eval(c)
}

/// Closed-form Gaussian integrals of a product state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianIntegrals {
    pub norm_sq: f64,
    /// `int |d theta / d x_{k,mu}|^2 = 1/(4 sigma^2)`.
    pub grad_sq_per_component: f64,
    /// `int |grad_k theta|^2 = 3/(4 sigma^2)` for one body.
    pub grad_sq_full_gradient: f64,
    /// `1/(16 sigma^2)`: what the per-component integral becomes when the
    /// factor 2 from differentiating `|x|^2` in the exponent is dropped.
    pub grad_sq_without_chain_factor: f64,
}

pub fn gaussian_norm_and_grad_integrals(s: &LatticeState) -> GaussianIntegrals {
    let s2 = s.sigma * s.sigma;
    GaussianIntegrals {
        norm_sq: 1.0,
        grad_sq_per_component: 1.0 / (4.0 * s2),
        grad_sq_full_gradient: 3.0 / (4.0 * s2),
        grad_sq_without_chain_factor: 1.0 / (16.0 * s2),
    }
}

/// `<xbar_mu^2> = sum_j sum_k y_{j,mu} y_{k,mu} + N sigma^2` (direction 1-based).
pub fn second_moment_xbar(s: &LatticeState, direction: usize) -> Result<f64> {
    require((1..=3).contains(&direction), || format!("direction must be 1, 2 or 3, got {direction}"))?;
    let y = s.site_sum()[direction - 1];
    Ok(y * y + s.n_bodies() as f64 * s.sigma * s.sigma)
}

/// First moments entering the criteria.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StateMoments {
    /// `S = <xbar>`.
    pub s: Vec3,
    pub norm_sq: f64,
    /// `int [Im psi]^2 |xbar|^2` for the normalised state.
    pub im_weight: f64,
}

impl StateMoments {
    pub fn s_norm_sq(&self) -> f64 {
        self.s.iter().map(|x| x * x).sum()
    }

    /// Moments of a real, normalised state with the given `S`.
    pub fn real(s: Vec3) -> Self {
        StateMoments { s, norm_sq: 1.0, im_weight: 0.0 }
    }
}

pub fn moments_s(state: &TestState) -> StateMoments {
    let decomposition = state.density_terms();
    let mut s = [0.0; 3];
    let mut norm_sq = 0.0;
    for t in &decomposition.terms {
        let y = t.center_sum();
        for m in 0..3 {
            s[m] += t.weight * y[m];
        }
        norm_sq += t.weight;
    }
    let im_weight = match state {
        TestState::Lattice(_) => 0.0,
        TestState::Superposition(sp) => {
            let plus = sp.plus_branch();
            let y = plus.site_sum();
            let n = plus.n_bodies() as f64;
            let xbar_sq = y.iter().map(|v| v * v).sum::<f64>() + 3.0 * n * plus.sigma * plus.sigma;
            sp.beta.im * sp.beta.im / (2.0 * sp.norm_sq()) * xbar_sq
        }
    };
    StateMoments { s, norm_sq, im_weight }
}
