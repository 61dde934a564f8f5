//! Finite-difference lattices and assembly of the rank-structured Jacobian.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::jacobian::RankStructuredJacobian;
use crate::criteria::ModelParams;
use crate::error::{require, Error, Result};
use crate::potentials::{total_u_unchecked, Vec3};
use crate::states::StateMoments;

/// Largest block dimension assembled densely.
pub const MAX_DENSE_DIM: usize = 4096;

/// `n` points per axis on `[-L/2, L/2]`, spacing `L / (n - 1)`, zero beyond the box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizationSpec {
    pub n: usize,
    pub box_len: f64,
    pub bodies: usize,
    /// Spatial dimension per body (1 or 3).
    #[serde(default = "one")]
    pub dim: usize,
}

fn one() -> usize {
    1
}

impl DiscretizationSpec {
    pub fn validate(&self) -> Result<()> {
        require(self.n >= 3, || format!("need at least 3 grid points per axis, got {}", self.n))?;
        require(self.box_len > 0.0 && self.box_len.is_finite(), || {
            format!("box length must be positive, got {}", self.box_len)
        })?;
        require(self.bodies >= 1, || "need at least one body".into())?;
        require(self.dim == 1 || self.dim == 3, || format!("dimension must be 1 or 3, got {}", self.dim))
    }

    pub fn spacing(&self) -> f64 {
        self.box_len / (self.n - 1) as f64
    }

    /// Coordinates per configuration, `dim * bodies`.
    pub fn coords(&self) -> usize {
        self.dim * self.bodies
    }

    /// Full lattice dimension `n^(dim N)`, `None` on overflow.
    pub fn full_dimension(&self) -> Option<usize> {
        self.n.checked_pow(self.coords() as u32)
    }

    /// Real-Hilbert-space count `2 n^N` of the per-body one-dimensional reduction.
    pub fn real_hilbert_count(&self) -> Option<usize> {
        self.n.checked_pow(self.bodies as u32).and_then(|x| x.checked_mul(2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub spec: DiscretizationSpec,
    pub spacing: f64,
    pub size: usize,
}

impl Grid {
    pub fn new(spec: DiscretizationSpec) -> Result<Self> {
        spec.validate()?;
        let size = spec
            .full_dimension()
            .filter(|&s| s <= MAX_DENSE_DIM)
            .ok_or_else(|| {
                Error::Parameter(format!(
                    "{}^{} lattice sites exceed the dense limit {MAX_DENSE_DIM}",
                    spec.n,
                    spec.coords()
                ))
            })?;
        Ok(Grid { spec, spacing: spec.spacing(), size })
    }

    /// Coordinates of site `index`; coordinate 0 varies fastest.
    pub fn point(&self, index: usize, out: &mut [f64]) {
        let mut rest = index;
        let half = 0.5 * self.spec.box_len;
        for x in out.iter_mut() {
            *x = -half + (rest % self.spec.n) as f64 * self.spacing;
            rest /= self.spec.n;
        }
    }

    /// Quadrature weight `eps^(dim N)` of one site.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.spec.coords() as i32)
    }

    /// Values of `f` at every site.
    pub fn sample(&self, f: &dyn Fn(&[f64]) -> f64) -> DVector<f64> {
        let mut x = vec![0.0; self.spec.coords()];
        DVector::from_fn(self.size, |i, _| {
            self.point(i, &mut x);
            f(&x)
        })
    }

    fn positions(&self, x: &[f64]) -> Vec<Vec3> {
        x.chunks(self.spec.dim)
            .map(|c| {
                let mut p = [0.0; 3];
                p[..c.len()].copy_from_slice(c);
                p
            })
            .collect()
    }

    fn xbar(&self, x: &[f64]) -> Vec3 {
        let mut s = [0.0; 3];
        for c in x.chunks(self.spec.dim) {
            for (a, v) in c.iter().enumerate() {
                s[a] += v;
            }
        }
        s
    }
}

/// Lattice profile of one dyad vector; values carry the weight `eps^(D/2)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DyadProfile {
    #[default]
    Zero,
    /// `coef * xbar_1 * psi`, `psi` the trap ground state.
    XPsi { coef: f64 },
    /// `amplitude * prod_c exp(-(x_c - center)^2 / (4 width^2))`.
    Gaussian { amplitude: f64, center: f64, width: f64 },
}

/// Vectors left out of a config section are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DyadSpec {
    pub u: DyadProfile,
    pub v: DyadProfile,
    pub a1: DyadProfile,
    pub a2: DyadProfile,
    pub d1: DyadProfile,
    pub d2: DyadProfile,
}

impl DyadSpec {
    /// Every vector `sqrt(w) xbar_1 psi`.
    pub fn default_for(coupling: f64) -> Self {
        let p = DyadProfile::XPsi { coef: coupling.sqrt() };
        DyadSpec { u: p.clone(), v: p.clone(), a1: p.clone(), a2: p.clone(), d1: p.clone(), d2: p }
    }

    pub fn zero() -> Self {
        let z = DyadProfile::Zero;
        DyadSpec { u: z.clone(), v: z.clone(), a1: z.clone(), a2: z.clone(), d1: z.clone(), d2: z }
    }
}

impl Default for DyadSpec {
    fn default() -> Self {
        DyadSpec::zero()
    }
}

fn assemble_profile(grid: &Grid, p: &DyadProfile, model: &ModelParams) -> Result<DVector<f64>> {
    let weight = grid.cell_volume().sqrt();
    match *p {
        DyadProfile::Zero => Ok(DVector::zeros(grid.size)),
        DyadProfile::XPsi { coef } => {
            require(model.trap > 0.0, || "the x-psi profile needs a positive trap strength".into())?;
            let var = 1.0 / (2.0 * model.mass * model.omega());
            let norm = (2.0 * std::f64::consts::PI * var).powf(-0.25);
            Ok(grid.sample(&|x| {
                let psi: f64 = x.iter().map(|c| norm * (-c * c / (4.0 * var)).exp()).product();
                coef * grid.xbar(x)[0] * psi * weight
            }))
        }
        DyadProfile::Gaussian { amplitude, center, width } => {
            require(width > 0.0, || format!("gaussian profile width must be positive, got {width}"))?;
            Ok(grid.sample(&|x| {
                let g: f64 = x.iter().map(|c| (-(c - center).powi(2) / (4.0 * width * width)).exp()).product();
                amplitude * g * weight
            }))
        }
    }
}

/// `E = -(1/2m) Laplacian_eps + V + f` on the lattice with
/// `f = w xbar^t (xbar - 2 S)`, `w` the model coupling and `S` frozen from `s`.
pub fn discretize(
    model: &ModelParams,
    spec: &DiscretizationSpec,
    s: &StateMoments,
    dyads: Option<&DyadSpec>,
) -> Result<RankStructuredJacobian> {
    let grid = Grid::new(*spec)?;
    let n = grid.size;
    let hop = 1.0 / (2.0 * model.mass * grid.spacing * grid.spacing);
    let coords = spec.coords();
    let mut e = DMatrix::zeros(n, n);
    let mut x = vec![0.0; coords];
    for i in 0..n {
        grid.point(i, &mut x);
        let trap = 0.5 * model.trap * x.iter().map(|c| c * c).sum::<f64>();
        let pair = if spec.bodies > 1 && !model.potential.is_identically_zero() {
            total_u_unchecked(&model.potential, &grid.positions(&x))
        } else {
            0.0
        };
        if !pair.is_finite() {
            return Err(Error::Domain(format!("pair potential is not finite at lattice site {x:?}")));
        }
        let xb = grid.xbar(&x);
        let f: f64 = (0..spec.dim).map(|a| model.coupling * xb[a] * (xb[a] - 2.0 * s.s[a])).sum();
        e[(i, i)] = 2.0 * coords as f64 * hop + trap + pair + f;
        let mut stride = 1;
        for _ in 0..coords {
            let digit = (i / stride) % spec.n;
            if digit + 1 < spec.n {
                e[(i, i + stride)] = -hop;
                e[(i + stride, i)] = -hop;
            }
            stride *= spec.n;
        }
    }
    let default_vectors = dyads.is_none();
    let owned;
    let d = match dyads {
        Some(d) => d,
        None => {
            owned = DyadSpec::default_for(model.coupling);
            &owned
        }
    };
    let build = |p: &DyadProfile| assemble_profile(&grid, p, model);
    let j = RankStructuredJacobian::new(e, build(&d.u)?, build(&d.v)?, build(&d.a1)?, build(&d.a2)?, build(&d.d1)?, build(&d.d2)?)?;
    Ok(j.with_grid(grid, default_vectors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::PairPotential;
    use nalgebra::SymmetricEigen;

    fn oscillator(m: f64, v: f64, w: f64) -> ModelParams {
        ModelParams::new(1, m, v, w, PairPotential::zero(), 0.0).unwrap()
    }

    #[test]
    fn harmonic_levels_converge() {
        let (m, v) = (1.0f64, 1.0f64);
        let omega = (v / m).sqrt();
        let spec = DiscretizationSpec { n: 200, box_len: 20.0 / (m * omega).sqrt(), bodies: 1, dim: 1 };
        let j = discretize(&oscillator(m, v, 0.0), &spec, &StateMoments::real([0.0; 3]), None).unwrap();
        let mut ev: Vec<f64> = SymmetricEigen::new(j.e().clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] - 0.5 * omega).abs() < 0.01 * 0.5 * omega, "{}", ev[0]);
        for k in 1..4 {
            assert!((ev[k] - (k as f64 + 0.5) * omega).abs() < 0.02 * (k as f64 + 0.5), "level {k}: {}", ev[k]);
        }
    }

    #[test]
    fn zero_coupling_is_plain_operator_and_stencil_sums_vanish() {
        let spec = DiscretizationSpec { n: 7, box_len: 6.0, bodies: 2, dim: 1 };
        let s = StateMoments::real([1.0, 0.0, 0.0]);
        let j = discretize(&oscillator(1.0, 0.0, 0.0).with_bodies(2), &spec, &s, Some(&DyadSpec::zero())).unwrap();
        assert!(!j.default_vectors);
        let e = j.e();
        let grid = Grid::new(spec).unwrap();
        let mut x = vec![0.0; 2];
        for i in 0..e.nrows() {
            grid.point(i, &mut x);
            let interior = x.iter().all(|c| c.abs() < 2.9);
            if interior {
                assert!(e.row(i).sum().abs() < 1e-12, "row {i}");
            }
        }
    }

    #[test]
    fn coupling_adds_diagonal_f() {
        let spec = DiscretizationSpec { n: 9, box_len: 8.0, bodies: 1, dim: 1 };
        let s = StateMoments::real([0.5, 0.0, 0.0]);
        let base = discretize(&oscillator(1.0, 1.0, 0.0), &spec, &s, Some(&DyadSpec::zero())).unwrap();
        let with = discretize(&oscillator(1.0, 1.0, 0.3), &spec, &s, Some(&DyadSpec::zero())).unwrap();
        let grid = Grid::new(spec).unwrap();
        let mut x = [0.0];
        for i in 0..9 {
            grid.point(i, &mut x);
            let f = 0.3 * x[0] * (x[0] - 1.0);
            assert!((with.e()[(i, i)] - base.e()[(i, i)] - f).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_bookkeeping() {
        let spec = DiscretizationSpec { n: 5, box_len: 4.0, bodies: 2, dim: 1 };
        assert_eq!(spec.spacing(), 1.0);
        assert_eq!(spec.full_dimension(), Some(25));
        assert_eq!(spec.real_hilbert_count(), Some(50));
        let big = DiscretizationSpec { n: 10, box_len: 4.0, bodies: 2, dim: 3 };
        assert!(Grid::new(big).is_err());
        assert!(DiscretizationSpec { n: 2, ..spec }.validate().is_err());
    }

    #[test]
    fn default_vectors_are_flagged() {
        let spec = DiscretizationSpec { n: 9, box_len: 9.0, bodies: 1, dim: 1 };
        let j = discretize(&oscillator(1.0, 1.0, 0.01), &spec, &StateMoments::real([0.0; 3]), None).unwrap();
        assert!(j.default_vectors);
    }
}
