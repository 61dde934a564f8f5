//! TOML run configuration.

use serde::Deserialize;

use crate::bound::QuadratureSpec;
use crate::criteria::ModelParams;
use crate::error::{Error, Result};
use crate::potentials::PairPotential;
use crate::rng::derive_seed;
use crate::scaling::{default_shift, StateFamily, DEFAULT_N_LIST};
use crate::spectral::{DyadSpec, ScanOptions};
use crate::states::{LatticeState, SuperpositionState, TestState};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub model: Option<ModelSection>,
    pub potential: Option<PairPotential>,
    pub state: Option<StateSection>,
    pub quadrature: Option<QuadratureSection>,
    pub stability: Option<StabilitySection>,
    pub scaling: Option<ScalingSection>,
    pub discretization: Option<DiscretizationSection>,
    pub scan: Option<ScanOptions>,
    pub dyads: Option<DyadSpec>,
    pub potential_grid: Option<PotentialGrid>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub n: usize,
    pub mass: f64,
    pub trap: f64,
    #[serde(default)]
    pub coupling: f64,
    #[serde(default = "default_rho")]
    pub rho: f64,
    pub eta: Option<f64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Estimated from `[stability]` when absent.
    pub eps_u: Option<f64>,
    /// Treat an unbounded variational bound as satisfying (v).
    #[serde(default)]
    pub accept_unbounded: bool,
}

fn default_rho() -> f64 {
    4.0
}

fn default_delta() -> f64 {
    0.25
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateKind {
    Lattice,
    Superposition,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSection {
    pub kind: StateKind,
    /// Defaults to the model body count.
    pub n: Option<usize>,
    /// Lattice spacing; defaults to the pair-potential minimum.
    pub a: Option<f64>,
    /// Defaults to `a / 4`.
    pub sigma: Option<f64>,
    #[serde(default = "yes")]
    pub center: bool,
    /// Translation `R`; defaults to `10 sigma sqrt(200 / N)`.
    pub shift: Option<f64>,
    #[serde(default = "first_axis")]
    pub direction: usize,
    /// Argument of `beta`.
    #[serde(default)]
    pub phase: f64,
}

fn yes() -> bool {
    true
}

fn first_axis() -> usize {
    1
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case", deny_unknown_fields)]
pub enum QuadratureSection {
    Analytic,
    TensorQuadrature { nodes: usize },
    MonteCarlo { samples: usize },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilitySection {
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
}

fn default_n_max() -> usize {
    6
}

fn default_restarts() -> usize {
    8
}

impl Default for StabilitySection {
    fn default() -> Self {
        StabilitySection { n_max: default_n_max(), restarts: default_restarts() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSection {
    pub family: StateFamily,
    #[serde(default = "default_n_list")]
    pub n_list: Vec<usize>,
    pub a: Option<f64>,
    pub sigma: Option<f64>,
    pub shift: Option<f64>,
    #[serde(default = "first_axis")]
    pub direction: usize,
    #[serde(default)]
    pub phase: f64,
}

fn default_n_list() -> Vec<usize> {
    DEFAULT_N_LIST.to_vec()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizationSection {
    pub n_list: Vec<usize>,
    pub box_len: f64,
    #[serde(default = "one")]
    pub bodies: usize,
    #[serde(default = "one")]
    pub dim: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialGrid {
    pub r_min: f64,
    pub r_max: f64,
    pub points: usize,
}

impl Default for PotentialGrid {
    fn default() -> Self {
        PotentialGrid { r_min: 0.95, r_max: 3.0, points: 206 }
    }
}

/// Seed substreams per consumer, so sections never share random numbers.
pub(crate) mod streams {
    pub const STABILITY: u64 = 1;
    pub const QUADRATURE: u64 = 2;
}

pub fn parse(text: &str) -> Result<RunConfig> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

fn missing(section: &str) -> Error {
    Error::Config(format!("missing [{section}] section"))
}

impl RunConfig {
    pub fn model_section(&self) -> Result<&ModelSection> {
        self.model.as_ref().ok_or_else(|| missing("model"))
    }

    pub fn potential_or_zero(&self) -> PairPotential {
        self.potential.clone().unwrap_or_else(PairPotential::zero)
    }

    pub fn stability_section(&self) -> StabilitySection {
        self.stability.unwrap_or_default()
    }

    /// Model parameters; `eps_u` is supplied when the config leaves it out.
    pub fn model_params(&self, eps_u: f64) -> Result<ModelParams> {
        let m = self.model_section()?;
        ModelParams::new(m.n, m.mass, m.trap, m.coupling, self.potential_or_zero(), m.eps_u.unwrap_or(eps_u))
    }

    pub fn quadrature(&self, seed: u64) -> QuadratureSpec {
        match self.quadrature {
            None if self.potential_or_zero().is_identically_zero() => QuadratureSpec::Analytic,
            None => QuadratureSpec::MonteCarlo { samples: 100_000, seed: derive_seed(seed, &[streams::QUADRATURE]) },
            Some(QuadratureSection::Analytic) => QuadratureSpec::Analytic,
            Some(QuadratureSection::TensorQuadrature { nodes }) => QuadratureSpec::TensorQuadrature { nodes },
            Some(QuadratureSection::MonteCarlo { samples }) => {
                QuadratureSpec::MonteCarlo { samples, seed: derive_seed(seed, &[streams::QUADRATURE]) }
            }
        }
    }

    pub fn test_state(&self) -> Result<TestState> {
        let s = self.state.as_ref().ok_or_else(|| missing("state"))?;
        let n = match (s.n, &self.model) {
            (Some(n), _) => n,
            (None, Some(m)) => m.n,
            (None, None) => return Err(Error::Config("[state] needs n when [model] is absent".into())),
        };
        let a = s.a.unwrap_or_else(|| self.potential_or_zero().characteristic_length());
        let sigma = s.sigma.unwrap_or(a / 4.0);
        let base = LatticeState::build(n, a, sigma, s.center)?;
        Ok(match s.kind {
            StateKind::Lattice => TestState::Lattice(base),
            StateKind::Superposition => {
                let shift = s.shift.unwrap_or_else(|| default_shift(sigma, n));
                TestState::Superposition(SuperpositionState::new(base, shift, s.direction, s.phase)?)
            }
        })
    }
}
