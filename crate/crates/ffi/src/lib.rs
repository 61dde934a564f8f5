//! C ABI over `wfe-core`.
//!
//! Every function returns a [`WfeStatus`]; results go through out-pointers.
//! On failure the message is kept per thread and read back with
//! [`wfe_last_error_message`]. Matrices are dense, column-major `f64` arrays.
//! Handles are opaque and must be released with the matching `_free`.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use nalgebra::{DMatrix, DVector};
use wfe_core::bound::{lambda_lower_bound, QuadratureSpec};
use wfe_core::criteria::{check_i, w_upper_bound_iv, ModelParams};
use wfe_core::potentials::{estimate_stability_constant, eval_total_u, Configuration, PairPotential};
use wfe_core::spectral::{
    det_ipr1, det_ipr2, discretize, first_zero_scan, sylvester_det, DiscretizationSpec, RankStructuredJacobian,
    ScanOptions,
};
use wfe_core::states::{moments_s, LatticeState, StateMoments, SuperpositionState, TestState};
use wfe_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WfeStatus {
    Ok = 0,
    Domain = 1,
    Parameter = 2,
    SingularConfiguration = 3,
    NonIntegrable = 4,
    Sampling = 5,
    SplitCondition = 6,
    Infeasible = 7,
    Singular = 8,
    Degenerate = 9,
    Shape = 10,
    NotPositiveDefinite = 11,
    Config = 12,
    Io = 13,
    NullPointer = 14,
    Panic = 15,
}

impl From<&Error> for WfeStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain(_) => WfeStatus::Domain,
            Error::Parameter(_) => WfeStatus::Parameter,
            Error::SingularConfiguration(..) => WfeStatus::SingularConfiguration,
            Error::NonIntegrable(_) => WfeStatus::NonIntegrable,
            Error::Sampling(_) => WfeStatus::Sampling,
            Error::SplitCondition { .. } => WfeStatus::SplitCondition,
            Error::Infeasible(_) => WfeStatus::Infeasible,
            Error::Singular(_) => WfeStatus::Singular,
            Error::Degenerate(_) => WfeStatus::Degenerate,
            Error::Shape(_) => WfeStatus::Shape,
            Error::NotPositiveDefinite(_) => WfeStatus::NotPositiveDefinite,
            Error::Config(_) => WfeStatus::Config,
            Error::Io(_) => WfeStatus::Io,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

enum Failure {
    Core(Error),
    Null(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type FfiResult = Result<(), Failure>;

fn guard(f: impl FnOnce() -> FfiResult) -> WfeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            WfeStatus::Ok
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            WfeStatus::from(&e)
        }
        Ok(Err(Failure::Null(name))) => {
            set_error(format!("null pointer: {name}"));
            WfeStatus::NullPointer
        }
        Err(_) => {
            set_error("panic inside wfe".into());
            WfeStatus::Panic
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(name))
}

unsafe fn slice<'a>(p: *const f64, len: usize, name: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn matrix(p: *const f64, rows: usize, cols: usize, name: &'static str) -> Result<DMatrix<f64>, Failure> {
    Ok(DMatrix::from_column_slice(rows, cols, slice(p, rows * cols, name)?))
}

unsafe fn vector(p: *const f64, len: usize, name: &'static str) -> Result<DVector<f64>, Failure> {
    Ok(DVector::from_column_slice(slice(p, len, name)?))
}

unsafe fn boxed<T>(value: T, dst: *mut *mut T) -> FfiResult {
    *out(dst, "out")? = Box::into_raw(Box::new(value));
    Ok(())
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`) and returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn wfe_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Opaque pair potential.
pub struct WfePotential(PairPotential);

/// Opaque test state.
pub struct WfeState(TestState);

/// Opaque block Jacobian.
pub struct WfeJacobian(RankStructuredJacobian);

fn new_potential(p: PairPotential) -> Result<WfePotential, Failure> {
    p.validate()?;
    Ok(WfePotential(p))
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wfe_potential_lennard_jones(energy: f64, length: f64, out: *mut *mut WfePotential) -> WfeStatus {
    guard(|| boxed(new_potential(PairPotential::lennard_jones(energy, length))?, out))
}

/// Lennard-Jones with the core flattened below `length / 2`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wfe_potential_capped_lj(energy: f64, length: f64, out: *mut *mut WfePotential) -> WfeStatus {
    guard(|| boxed(new_potential(PairPotential::capped_lj(energy, length))?, out))
}

/// Square-well potential; a NaN `smoothing` keeps sharp steps.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wfe_potential_basuev(
    height: f64,
    radius: f64,
    width: f64,
    smoothing: f64,
    out: *mut *mut WfePotential,
) -> WfeStatus {
    guard(|| {
        let smoothing = (!smoothing.is_nan()).then_some(smoothing);
        boxed(new_potential(PairPotential::basuev_smooth(height, radius, width, smoothing))?, out)
    })
}

/// # Safety
/// `p` must be null or a handle from a `wfe_potential_*` constructor, freed once.
#[no_mangle]
pub unsafe extern "C" fn wfe_potential_free(p: *mut WfePotential) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `p` must be a live handle and `value` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wfe_potential_eval(p: *const WfePotential, r: f64, value: *mut f64) -> WfeStatus {
    guard(|| {
        let p = p.as_ref().ok_or(Failure::Null("potential"))?;
        *out(value, "value")? = p.0.eval_pair(r)?;
        Ok(())
    })
}

/// `U = sum_{j != k} u(|x_j - x_k|)` for `n_bodies` positions stored as `x, y, z` triples.
///
/// # Safety
/// `positions` must hold `3 * n_bodies` values; `p` live; `value` valid.
#[no_mangle]
pub unsafe extern "C" fn wfe_total_u(
    p: *const WfePotential,
    positions: *const f64,
    n_bodies: usize,
    value: *mut f64,
) -> WfeStatus {
    guard(|| {
        let p = p.as_ref().ok_or(Failure::Null("potential"))?;
        let xs = slice(positions, 3 * n_bodies, "positions")?;
        let c = Configuration::new(xs.chunks(3).map(|c| [c[0], c[1], c[2]]).collect())?;
        *out(value, "value")? = eval_total_u(&p.0, &c)?;
        Ok(())
    })
}

/// Lower estimate of `eps_U` from clusters of up to `n_max` bodies.
///
/// # Safety
/// `p` live; `value` valid.
#[no_mangle]
pub unsafe extern "C" fn wfe_stability_estimate(
    p: *const WfePotential,
    n_max: usize,
    restarts: usize,
    seed: u64,
    value: *mut f64,
) -> WfeStatus {
    guard(|| {
        let p = p.as_ref().ok_or(Failure::Null("potential"))?;
        *out(value, "value")? = estimate_stability_constant(&p.0, n_max, restarts, seed)?.value;
        Ok(())
    })
}

/// Gaussian lattice state on a cubic raster.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wfe_state_lattice(
    n_bodies: usize,
    spacing: f64,
    sigma: f64,
    center: bool,
    out: *mut *mut WfeState,
) -> WfeStatus {
    guard(|| boxed(WfeState(TestState::Lattice(LatticeState::build(n_bodies, spacing, sigma, center)?)), out))
}

/// Superposition of the centred lattice translated by `-/+ shift` along 1-based `direction`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wfe_state_superposition(
    n_bodies: usize,
    spacing: f64,
    sigma: f64,
    shift: f64,
    direction: usize,
    phase: f64,
    out: *mut *mut WfeState,
) -> WfeStatus {
    guard(|| {
        let base = LatticeState::build(n_bodies, spacing, sigma, true)?;
        boxed(WfeState(TestState::Superposition(SuperpositionState::new(base, shift, direction, phase)?)), out)
    })
}

/// # Safety
/// `s` must be null or a handle from a `wfe_state_*` constructor, freed once.
#[no_mangle]
pub unsafe extern "C" fn wfe_state_free(s: *mut WfeState) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// `S` (three values), squared norm and imaginary-part weight.
///
/// # Safety
/// `s` live; `s_out` holds 3 values; other pointers valid.
#[no_mangle]
pub unsafe extern "C" fn wfe_state_moments(
    s: *const WfeState,
    s_out: *mut f64,
    norm_sq: *mut f64,
    im_weight: *mut f64,
) -> WfeStatus {
    guard(|| {
        let s = s.as_ref().ok_or(Failure::Null("state"))?;
        let m = moments_s(&s.0);
        if s_out.is_null() {
            return Err(Failure::Null("s_out"));
        }
        std::slice::from_raw_parts_mut(s_out, 3).copy_from_slice(&m.s);
        *out(norm_sq, "norm_sq")? = m.norm_sq;
        *out(im_weight, "im_weight")? = m.im_weight;
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WfeQuadrature {
    Analytic = 0,
    /// `param` is the node count per axis.
    TensorQuadrature = 1,
    /// `param` is the sample count.
    MonteCarlo = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WfeBound {
    /// 1-based direction of the best bound.
    pub mu: usize,
    pub numerator_kinetic: f64,
    pub numerator_potential: f64,
    pub denominator: f64,
    /// NaN when `unbounded`.
    pub lambda_lb: f64,
    pub unbounded: bool,
    /// NaN unless sampled.
    pub pair_std_error: f64,
}

/// Variational lower bound; `potential` may be null for `U = 0`.
///
/// # Safety
/// `state` live; `potential` null or live; `result` valid.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn wfe_lambda_lower_bound(
    state: *const WfeState,
    mass: f64,
    trap: f64,
    potential: *const WfePotential,
    method: WfeQuadrature,
    param: usize,
    seed: u64,
    result: *mut WfeBound,
) -> WfeStatus {
    guard(|| {
        let s = state.as_ref().ok_or(Failure::Null("state"))?;
        let pot = potential.as_ref().map_or_else(PairPotential::zero, |p| p.0.clone());
        let model = ModelParams::new(s.0.n_bodies(), mass, trap, 0.0, pot, 0.0)?;
        let q = match method {
            WfeQuadrature::Analytic => QuadratureSpec::Analytic,
            WfeQuadrature::TensorQuadrature => QuadratureSpec::TensorQuadrature { nodes: param },
            WfeQuadrature::MonteCarlo => QuadratureSpec::MonteCarlo { samples: param, seed },
        };
        let b = lambda_lower_bound(&s.0, &model, &q)?;
        *out(result, "result")? = WfeBound {
            mu: b.mu,
            numerator_kinetic: b.numerator_kinetic,
            numerator_potential: b.numerator_potential,
            denominator: b.denominator,
            lambda_lb: b.lambda_lb.unwrap_or(f64::NAN),
            unbounded: b.unbounded,
            pair_std_error: b.error_bars.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

/// Criterion (i): `3 omega / 2 > eps_U`, with the spectral lower bound of `Lambda`.
///
/// # Safety
/// `pass` and `lower` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn wfe_check_i(
    n_bodies: usize,
    mass: f64,
    trap: f64,
    eps_u: f64,
    pass: *mut bool,
    lower: *mut f64,
) -> WfeStatus {
    guard(|| {
        let p = ModelParams::new(n_bodies, mass, trap, 0.0, PairPotential::zero(), eps_u)?;
        let (ok, lo) = check_i(&p);
        *out(pass, "pass")? = ok;
        *out(lower, "lower")? = lo;
        Ok(())
    })
}

/// Criterion (iv) coupling ceiling for a real state with `|S|^2 = s_norm_sq`.
///
/// # Safety
/// `w_max` must be a valid pointer.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn wfe_w_upper_bound_iv(
    n_bodies: usize,
    mass: f64,
    trap: f64,
    eps_u: f64,
    rho: f64,
    s_norm_sq: f64,
    delta: f64,
    w_max: *mut f64,
) -> WfeStatus {
    guard(|| {
        let p = ModelParams::new(n_bodies, mass, trap, 0.0, PairPotential::zero(), eps_u)?;
        if s_norm_sq.is_nan() || s_norm_sq < 0.0 {
            return Err(Error::Parameter(format!("|S|^2 must be >= 0, got {s_norm_sq}")).into());
        }
        let s = StateMoments::real([s_norm_sq.sqrt(), 0.0, 0.0]);
        *out(w_max, "w_max")? = w_upper_bound_iv(&p, rho, &s, delta)?.w_max;
        Ok(())
    })
}

/// `det(R + xi eta^t)` for an `n x n` matrix `r`.
///
/// # Safety
/// `r` holds `n * n` values, `xi` and `eta` hold `n`; `value` valid.
#[no_mangle]
pub unsafe extern "C" fn wfe_det_ipr1(
    r: *const f64,
    n: usize,
    xi: *const f64,
    eta: *const f64,
    value: *mut f64,
) -> WfeStatus {
    guard(|| {
        *out(value, "value")? =
            det_ipr1(&matrix(r, n, n, "r")?, &vector(xi, n, "xi")?, &vector(eta, n, "eta")?)?;
        Ok(())
    })
}

/// `det(R + xi1 eta1^t + xi2 eta2^t)`.
///
/// # Safety
/// `r` holds `n * n` values and each vector `n`; `value` valid.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn wfe_det_ipr2(
    r: *const f64,
    n: usize,
    xi1: *const f64,
    eta1: *const f64,
    xi2: *const f64,
    eta2: *const f64,
    value: *mut f64,
) -> WfeStatus {
    guard(|| {
        *out(value, "value")? = det_ipr2(
            &matrix(r, n, n, "r")?,
            &vector(xi1, n, "xi1")?,
            &vector(eta1, n, "eta1")?,
            &vector(xi2, n, "xi2")?,
            &vector(eta2, n, "eta2")?,
        )?;
        Ok(())
    })
}

/// `det(I + P Q)` and `det(I + Q P)` for `P: rows x cols`, `Q: cols x rows`.
///
/// # Safety
/// `p` and `q` hold `rows * cols` values; `lhs`, `rhs` valid.
#[no_mangle]
pub unsafe extern "C" fn wfe_sylvester_det(
    p: *const f64,
    q: *const f64,
    rows: usize,
    cols: usize,
    lhs: *mut f64,
    rhs: *mut f64,
) -> WfeStatus {
    guard(|| {
        let (l, r) = sylvester_det(&matrix(p, rows, cols, "p")?, &matrix(q, cols, rows, "q")?)?;
        *out(lhs, "lhs")? = l;
        *out(rhs, "rhs")? = r;
        Ok(())
    })
}

/// Jacobian from explicit blocks: `E` is `n x n`, the six vectors have length `n`.
///
/// # Safety
/// Array sizes as stated; `out` valid.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn wfe_jacobian_new(
    e: *const f64,
    n: usize,
    u: *const f64,
    v: *const f64,
    a1: *const f64,
    a2: *const f64,
    d1: *const f64,
    d2: *const f64,
    out: *mut *mut WfeJacobian,
) -> WfeStatus {
    guard(|| {
        let j = RankStructuredJacobian::new(
            matrix(e, n, n, "e")?,
            vector(u, n, "u")?,
            vector(v, n, "v")?,
            vector(a1, n, "a1")?,
            vector(a2, n, "a2")?,
            vector(d1, n, "d1")?,
            vector(d2, n, "d2")?,
        )?;
        boxed(WfeJacobian(j), out)
    })
}

/// Lattice Jacobian with the default dyad vectors and `S = 0`; `potential` may be null.
///
/// # Safety
/// `potential` null or live; `out` valid.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn wfe_jacobian_discretize(
    n_grid: usize,
    box_len: f64,
    bodies: usize,
    dim: usize,
    mass: f64,
    trap: f64,
    coupling: f64,
    potential: *const WfePotential,
    out: *mut *mut WfeJacobian,
) -> WfeStatus {
    guard(|| {
        let pot = potential.as_ref().map_or_else(PairPotential::zero, |p| p.0.clone());
        let model = ModelParams::new(bodies, mass, trap, coupling, pot, 0.0)?;
        let spec = DiscretizationSpec { n: n_grid, box_len, bodies, dim };
        let j = discretize(&model, &spec, &StateMoments::real([0.0; 3]), None)?;
        boxed(WfeJacobian(j), out)
    })
}

/// # Safety
/// `j` must be null or a handle from a `wfe_jacobian_*` constructor, freed once.
#[no_mangle]
pub unsafe extern "C" fn wfe_jacobian_free(j: *mut WfeJacobian) {
    if !j.is_null() {
        drop(Box::from_raw(j));
    }
}

/// Block size `n` of the Jacobian.
///
/// # Safety
/// `j` live; `dim` valid.
#[no_mangle]
pub unsafe extern "C" fn wfe_jacobian_dim(j: *const WfeJacobian, dim: *mut usize) -> WfeStatus {
    guard(|| {
        *out(dim, "dim")? = j.as_ref().ok_or(Failure::Null("jacobian"))?.0.dim();
        Ok(())
    })
}

/// `F(lambda)` and `G(lambda)` with `det(M - lambda I) = F G`.
///
/// # Safety
/// `j` live; `f`, `g` valid.
#[no_mangle]
pub unsafe extern "C" fn wfe_jacobian_char_poly(
    j: *const WfeJacobian,
    lambda: f64,
    f: *mut f64,
    g: *mut f64,
) -> WfeStatus {
    guard(|| {
        let c = j.as_ref().ok_or(Failure::Null("jacobian"))?.0.char_poly_eval(lambda)?;
        *out(f, "f")? = c.f;
        *out(g, "g")? = c.g;
        Ok(())
    })
}

/// First zero of `G` on `(0, lambda_star)`. Nonpositive `lambda_star`, `step`
/// or `tol` select the defaults. `found` is false when no zero is certified.
///
/// # Safety
/// `j` live; `found`, `lambda` valid.
#[no_mangle]
pub unsafe extern "C" fn wfe_jacobian_first_zero(
    j: *const WfeJacobian,
    lambda_star: f64,
    step: f64,
    tol: f64,
    found: *mut bool,
    lambda: *mut f64,
) -> WfeStatus {
    guard(|| {
        let j = &j.as_ref().ok_or(Failure::Null("jacobian"))?.0;
        let pick = |x: f64| (x > 0.0).then_some(x);
        let opts = ScanOptions { lambda_star: pick(lambda_star), step: pick(step), tol: pick(tol) };
        let (ls, st, tl) = opts.resolve(j);
        let r = first_zero_scan(j, ls, st, tl)?;
        *out(found, "found")? = r.lambda.is_some();
        *out(lambda, "lambda")? = r.lambda.unwrap_or(f64::NAN);
        Ok(())
    })
}
