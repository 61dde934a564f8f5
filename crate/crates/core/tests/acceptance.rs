//! Acceptance suite: one pass/fail line per criterion.
//!
//! Runs without the libtest harness so the summary lines always print.
//! Reference values are computed here by independent means (dense
//! determinants, Golub-Welsch quadrature, dense eigensolves).

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wfe_core::bound::{lambda_lower_bound, QuadratureSpec};
use wfe_core::criteria::ModelParams;
use wfe_core::potentials::{estimate_stability_constant, Configuration, PairPotential};
use wfe_core::scaling::{run_scaling, run_slopes, window_vs_n, ScalingParams, ScalingRun, StateFamily, DEFAULT_N_LIST};
use wfe_core::spectral::{
    det_ipr1, det_ipr2, first_zero_scan, lambda_eps_sequence, sylvester_det, DiscretizationSpec, DyadProfile, DyadSpec,
    RankStructuredJacobian, ScanOptions,
};
use wfe_core::states::{gaussian_norm_and_grad_integrals, second_moment_xbar, LatticeState, StateMoments, TestState};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

// ---------------------------------------------------------------- 1

fn lj_geometry() -> Outcome {
    let p = PairPotential::lennard_jones(4.0, 1.0);
    let root = p.eval_pair(1.0).unwrap();
    let r_min = 2f64.powf(1.0 / 6.0);
    let u_min = p.eval_pair(r_min).unwrap();
    // the minimum is a minimum: neighbours sit higher
    let h = 1e-4;
    let local = p.eval_pair(r_min - h).unwrap() > u_min && p.eval_pair(r_min + h).unwrap() > u_min;
    let pass = root.abs() <= 1e-12 && (u_min + 4.0).abs() <= 1e-10 && local;
    outcome(pass, format!("u(1) = {root:e}, u(2^(1/6)) + 4 = {:e}", u_min + 4.0))
}

// ---------------------------------------------------------------- 2

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
}

fn determinant_machinery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = [0.0f64; 3];
    for _ in 0..200 {
        let n = rng.gen_range(2..=12);
        let r = random_matrix(&mut rng, n, n) + DMatrix::identity(n, n) * 2.0;
        let (xi, eta) = (random_vector(&mut rng, n), random_vector(&mut rng, n));
        let dense = (&r + &xi * eta.transpose()).determinant();
        worst[0] = worst[0].max(rel(det_ipr1(&r, &xi, &eta).unwrap(), dense));

        let (xi2, eta2) = (random_vector(&mut rng, n), random_vector(&mut rng, n));
        let dense = (&r + &xi * eta.transpose() + &xi2 * eta2.transpose()).determinant();
        worst[1] = worst[1].max(rel(det_ipr2(&r, &xi, &eta, &xi2, &eta2).unwrap(), dense));

        let m = rng.gen_range(2..=12);
        let p = random_matrix(&mut rng, n, m);
        let q = random_matrix(&mut rng, m, n);
        let left = (DMatrix::identity(n, n) + &p * &q).determinant();
        let right = (DMatrix::identity(m, m) + &q * &p).determinant();
        let (l, r2) = sylvester_det(&p, &q).unwrap();
        worst[2] = worst[2].max(rel(l, left)).max(rel(r2, right));
    }
    let pass = worst.iter().all(|&w| w <= 1e-9);
    outcome(pass, format!("max rel error ipr1 {:.1e}, ipr2 {:.1e}, sylvester {:.1e}", worst[0], worst[1], worst[2]))
}

// ---------------------------------------------------------------- 3

fn block_factorization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let mut max_dim = 0;
    for _ in 0..50 {
        let n = rng.gen_range(1..=32);
        max_dim = max_dim.max(2 * n);
        let a = random_matrix(&mut rng, n, n);
        let e = &a * a.transpose() + DMatrix::identity(n, n) * n as f64;
        let small = |rng: &mut ChaCha8Rng| random_vector(rng, n) * 0.4;
        let j = RankStructuredJacobian::new(
            e,
            small(&mut rng),
            small(&mut rng),
            random_vector(&mut rng, n),
            random_vector(&mut rng, n),
            random_vector(&mut rng, n),
            random_vector(&mut rng, n),
        )
        .unwrap();
        for _ in 0..5 {
            let lambda = rng.gen_range(0.0..3.0 * n as f64);
            let factored = j.char_poly_eval(lambda).unwrap().product();
            let dense = j.dense_shifted(lambda).determinant();
            worst = worst.max(rel(factored, dense));
        }
    }
    outcome(worst <= 1e-8, format!("max rel error {worst:.1e} over 250 evaluations, dimension <= {max_dim}"))
}

// ---------------------------------------------------------------- 4

/// Gauss-Hermite nodes and weights for weight `exp(-t^2)` from the Jacobi matrix.
fn hermite_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let jac = DMatrix::from_fn(n, n, |i, j| if i + 1 == j || j + 1 == i { (i.max(j) as f64 / 2.0).sqrt() } else { 0.0 });
    let eig = SymmetricEigen::new(jac);
    let mu0 = std::f64::consts::PI.sqrt();
    let w = (0..n).map(|k| mu0 * eig.eigenvectors[(0, k)].powi(2)).collect();
    (eig.eigenvalues.iter().copied().collect(), w)
}

/// `int f(x) |theta(x)|^2 dx` over all `3N` coordinates, with `f` polynomial times
/// the ratio `g / |theta|^2` supplied by the caller.
fn tensor_integral(state: &LatticeState, nodes: usize, mut f: impl FnMut(&[[f64; 3]]) -> f64) -> f64 {
    let (t, w) = hermite_rule(nodes);
    let n = state.n_bodies();
    let dims = 3 * n;
    let s = state.sigma();
    let mut idx = vec![0usize; dims];
    let mut total = 0.0;
    loop {
        let mut weight = 1.0;
        let mut x = vec![[0.0; 3]; n];
        for d in 0..dims {
            let (k, m) = (d / 3, d % 3);
            x[k][m] = state.sites()[k][m] + std::f64::consts::SQRT_2 * s * t[idx[d]];
            weight *= w[idx[d]] / std::f64::consts::PI.sqrt();
        }
        total += weight * f(&x);
        let mut d = 0;
        loop {
            if d == dims {
                return total;
            }
            idx[d] += 1;
            if idx[d] < nodes {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

fn theta(state: &LatticeState, x: &[[f64; 3]]) -> f64 {
    state.eval(&Configuration::new(x.to_vec()).unwrap()).unwrap()
}

fn gaussian_moments() -> Outcome {
    let mut worst = 0.0f64;
    let mut chain_ratio = 0.0;
    for (n, a, sigma) in [(1usize, 1.0, 0.3), (2, 1.2, 0.4), (2, 0.7, 0.25)] {
        let state = LatticeState::build(n, a, sigma, n == 2).unwrap();
        let g = gaussian_norm_and_grad_integrals(&state);
        let nodes = 8;
        // |theta|^2 divided by the product-Gaussian weight the rule integrates against
        let density = |x: &[[f64; 3]]| {
            let mut w = 1.0;
            for (k, site) in state.sites().iter().enumerate() {
                for m in 0..3 {
                    let z = x[k][m] - site[m];
                    w *= (-z * z / (2.0 * sigma * sigma)).exp() / (2.0 * std::f64::consts::PI * sigma * sigma).sqrt();
                }
            }
            w
        };
        let norm = tensor_integral(&state, nodes, |x| theta(&state, x).powi(2) / density(x));
        worst = worst.max((norm - g.norm_sq).abs());

        let second = tensor_integral(&state, nodes, |x| {
            let xbar: f64 = x.iter().map(|p| p[0]).sum();
            xbar * xbar * theta(&state, x).powi(2) / density(x)
        });
        worst = worst.max(rel(second, second_moment_xbar(&state, 1).unwrap()));
        if n == 1 || state.is_centered() {
            worst = worst.max(rel(second, n as f64 * sigma * sigma + state.site_sum()[0].powi(2)));
        }

        // d theta / d x_{0,0} by a fourth-order central difference
        let h = 1e-3;
        let grad = tensor_integral(&state, nodes, |x| {
            let mut shifted = x.to_vec();
            let mut at = |dx: f64| {
                shifted[0][0] = x[0][0] + dx;
                theta(&state, &shifted)
            };
            let d = (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h);
            d * d / density(x)
        });
        worst = worst.max(rel(grad, g.grad_sq_per_component));
        chain_ratio = grad / g.grad_sq_without_chain_factor;
    }
    outcome(
        worst <= 1e-8,
        format!(
            "max rel error {worst:.1e}; quadrature gradient = 1/(4 sigma^2) per component, {chain_ratio:.6} x the 1/(16 sigma^2) form"
        ),
    )
}

// ---------------------------------------------------------------- 5, 6

fn eps_u_estimate() -> f64 {
    estimate_stability_constant(&PairPotential::capped_lj(1.0, 1.0), 6, 8, 0).unwrap().value
}

fn within(x: Option<f64>, target: f64) -> (bool, f64) {
    match x {
        Some(s) => ((s - target).abs() <= 0.3, s),
        None => (false, f64::NAN),
    }
}

fn superposition_run(eps_u: f64, mass: f64, trap: f64, rho: f64) -> ScalingRun {
    let mut p = ScalingParams::capped_lj_defaults(1.0, 1.0, mass, trap, eps_u);
    p.rho = rho;
    run_scaling(StateFamily::Superposition, &DEFAULT_N_LIST, &p).unwrap()
}

fn scaling_reproduction(eps_u: f64, sup: &ScalingRun) -> Outcome {
    let p = ScalingParams::capped_lj_defaults(1.0, 1.0, 1.0, 100.0, eps_u);
    let classical = run_scaling(StateFamily::NearlyClassical, &DEFAULT_N_LIST, &p).unwrap();
    let c = run_slopes(&classical);
    let checks = [
        ("kin", within(c.numerator_kinetic.map(|f| f.slope), 2.0)),
        ("|pot|", within(c.numerator_potential_magnitude.map(|f| f.slope), 2.0)),
        ("num", within(c.numerator.map(|f| f.slope), 2.0)),
        ("den", within(c.denominator.map(|f| f.slope), 2.0)),
    ];
    let s = run_slopes(sup);
    let overlap_ok = sup.records.iter().all(|r| r.overlap < 1e-12);
    let sup_checks = [
        ("num", within(s.numerator.map(|f| f.slope), 3.0)),
        ("den", within(s.denominator.map(|f| f.slope), 4.0)),
    ];
    let pass = overlap_ok && checks.iter().chain(&sup_checks).all(|(_, (ok, _))| *ok);
    let fmt = |xs: &[(&str, (bool, f64))]| xs.iter().map(|(n, (_, s))| format!("{n} {s:.3}")).collect::<Vec<_>>().join(", ");
    outcome(
        pass,
        format!(
            "nearly-classical slopes [{}]; superposition slopes [{}], max overlap {:.1e}",
            fmt(&checks),
            fmt(&sup_checks),
            sup.records.iter().map(|r| r.overlap).fold(0.0, f64::max)
        ),
    )
}

fn spread(xs: &[f64]) -> f64 {
    let hi = xs.iter().cloned().fold(f64::MIN, f64::max);
    let lo = xs.iter().cloned().fold(f64::MAX, f64::min);
    hi / lo
}

fn window_persistence(eps_u: f64, baseline: ScalingRun) -> Outcome {
    let mut found = Vec::new();
    let mut tried = Vec::new();
    let grid: Vec<(f64, f64, f64)> = [2.0, 4.0, 8.0]
        .iter()
        .flat_map(|&rho| [100.0, 200.0, 400.0].iter().flat_map(move |&v| [1.0, 2.0].map(move |m| (rho, v, m))))
        .collect();
    for (rho, v, m) in grid {
        let run = if (rho, v, m) == (4.0, 100.0, 1.0) { baseline.clone() } else { superposition_run(eps_u, m, v, rho) };
        let table = window_vs_n(&run);
        let scaled = |f: fn(&wfe_core::scaling::ScalingRecord) -> Option<f64>| {
            run.records.iter().map(|r| f(r).map(|w| w * r.n_bodies as f64)).collect::<Option<Vec<f64>>>()
        };
        let (lo, hi) = (scaled(|r| r.w_min_v), scaled(|r| r.w_max_iv));
        let steady = matches!((&lo, &hi), (Some(a), Some(b)) if spread(a) <= 1.5 && spread(b) <= 1.5);
        tried.push(format!("rho={rho} v={v} m={m}: {}", if table.persists && steady { "open" } else { "closed" }));
        if table.persists && steady {
            found.push(format!(
                "(rho={rho}, v={v}, m={m}) N*w_min {:.1?} N*w_max {:.1?}",
                lo.unwrap(),
                hi.unwrap()
            ));
        }
    }
    let detail = match found.first() {
        Some(f) => format!("{} of {} triples keep the window open at every N, e.g. {f}", found.len(), tried.len()),
        None => format!("no triple keeps the window open: {}", tried.join("; ")),
    };
    outcome(!found.is_empty(), detail)
}

// ---------------------------------------------------------------- 7

/// `lambda_max(x (Lambda_x + c)^-1 x)` on a Dirichlet grid with `points` interior nodes.
fn dense_omega_max(mass: f64, trap: f64, shift: f64, half_width: f64, points: usize) -> f64 {
    let h = 2.0 * half_width / (points + 1) as f64;
    let x: Vec<f64> = (1..=points).map(|i| -half_width + i as f64 * h).collect();
    let t = 1.0 / (2.0 * mass * h * h);
    let lambda = DMatrix::from_fn(points, points, |i, j| {
        if i == j {
            2.0 * t + 0.5 * trap * x[i] * x[i] + shift
        } else if i.abs_diff(j) == 1 {
            -t
        } else {
            0.0
        }
    });
    let inv = lambda.cholesky().unwrap().inverse();
    let omega = DMatrix::from_fn(points, points, |i, j| x[i] * inv[(i, j)] * x[j]);
    SymmetricEigen::new(omega).eigenvalues.max()
}

fn bound_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_ratio = 0.0f64;
    for _ in 0..20 {
        let mass: f64 = rng.gen_range(0.5..2.0);
        let trap: f64 = rng.gen_range(0.5..4.0);
        let omega = (trap / mass).sqrt();
        let ground_sd = (1.0 / (2.0 * mass * omega)).sqrt();
        let sigma = ground_sd * rng.gen_range(0.6..1.6);
        let center = rng.gen_range(-1.0..1.0) * ground_sd;
        let state = LatticeState::from_sites(vec![[center, 0.0, 0.0]], sigma).unwrap();
        let model = ModelParams::new(1, mass, trap, 0.0, PairPotential::zero(), 0.0).unwrap();
        let b = lambda_lower_bound(&TestState::Lattice(state), &model, &QuadratureSpec::Analytic).unwrap();
        // the transverse axes contribute at least their ground energy omega/2 each,
        // so the three-dimensional top eigenvalue is the 1D one shifted by omega
        let half_width = 10.0 * ground_sd.max(sigma) + center.abs();
        let top = dense_omega_max(mass, trap, omega, half_width, 700);
        // Lambda is isotropic, so every direction shares this top eigenvalue
        for d in &b.directions {
            worst_ratio = worst_ratio.max(d.lambda_lb.unwrap() / top);
        }
    }
    outcome(worst_ratio <= 1.0 + 1e-8, format!("max lambda_lb / dense lambda_max = {worst_ratio:.6}"))
}

// ---------------------------------------------------------------- 8

fn plateau() -> Outcome {
    let model = ModelParams::new(1, 1.0, 1.0, 0.0, PairPotential::zero(), 0.0).unwrap();
    let base = DiscretizationSpec { n: 8, box_len: 9.0, bodies: 1, dim: 1 };
    let amplitude = (2.0 / (2.0 * std::f64::consts::PI * 0.5).sqrt()).sqrt();
    let g = DyadProfile::Gaussian { amplitude, center: 0.0, width: 0.5f64.sqrt() };
    let dyads = DyadSpec { a1: g.clone(), a2: g, ..DyadSpec::zero() };
    let rows = lambda_eps_sequence(
        &model,
        &[8, 12, 16, 24],
        &base,
        &StateMoments::real([0.0; 3]),
        Some(&dyads),
        &ScanOptions::default(),
    )
    .unwrap();
    let all_found = rows.iter().all(|r| r.lambda.is_some() && r.f_nonvanishing && r.sign_change);
    let last = rows.last().and_then(|r| r.rel_change).unwrap_or(f64::INFINITY);
    let lambdas: Vec<String> = rows.iter().map(|r| format!("{:.4}", r.lambda.unwrap_or(f64::NAN))).collect();

    // the single-site synthetic zero, recovered to the requested tolerance
    let (e, a2) = (0.5f64, 2.0f64);
    let z = DVector::zeros(1);
    let a = DVector::from_element(1, a2.sqrt());
    let j = RankStructuredJacobian::new(DMatrix::from_element(1, 1, e), z.clone(), z.clone(), a.clone(), a, z.clone(), z)
        .unwrap();
    let exact = (a2 - (a2 * a2 - 4.0 * e * e).sqrt()) / 2.0;
    let synthetic = first_zero_scan(&j, 5.0, 0.05, 1e-12).unwrap().lambda.map(|l| (l - exact).abs());
    let synthetic_ok = synthetic.is_some_and(|d| d <= 1e-12);

    outcome(
        all_found && last <= 0.05 && synthetic_ok,
        format!("lambda_eps [{}], final rel change {last:.2e}; synthetic zero error {synthetic:?}", lambdas.join(", ")),
    )
}

// ---------------------------------------------------------------- 9

const CONFIG: &str = r#"
seed = 5
[model]
n = 8
mass = 1.0
trap = 100.0
[potential]
kind = "capped-lj"
energy = 1.0
length = 1.0
[state]
kind = "superposition"
[quadrature]
method = "monte-carlo"
samples = 4000
[stability]
n_max = 4
restarts = 2
[scaling]
family = "superposition"
[discretization]
n_list = [8, 12, 16]
box_len = 9.0
"#;

fn run_cli(sub: &str, config: &Path, out: &Path) -> bool {
    Command::new(env!("CARGO_BIN_EXE_wfe"))
        .arg(sub)
        .arg("--config")
        .arg(config)
        .arg("--out-dir")
        .arg(out)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn json_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let root = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-determinism");
    let _ = std::fs::remove_dir_all(&root);
    std::fs::create_dir_all(&root).unwrap();
    let config = root.join("run.toml");
    std::fs::write(&config, CONFIG).unwrap();
    let mut failures = Vec::new();
    let subs = ["potential", "stability", "criteria", "bound", "scaling", "spectrum"];
    for sub in subs {
        let (a, b) = (root.join(format!("{sub}-a")), root.join(format!("{sub}-b")));
        if !run_cli(sub, &config, &a) || !run_cli(sub, &config, &b) {
            failures.push(format!("{sub}: run failed"));
            continue;
        }
        let (ja, jb) = (json_files(&a), json_files(&b));
        if ja.is_empty() || ja != jb {
            failures.push(format!("{sub}: JSON differs"));
        }
    }
    let detail = if failures.is_empty() {
        format!("{} subcommands byte-identical across repeated runs", subs.len())
    } else {
        failures.join("; ")
    };
    outcome(failures.is_empty(), detail)
}

// ----------------------------------------------------------------

fn timed(n: u32, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let o = f();
    let took = start.elapsed();
    let in_time = took <= budget;
    let pass = o.pass && in_time;
    println!(
        "criterion {n}: {} ({:.2} s of {} s) {}",
        if pass { "PASS" } else { "FAIL" },
        took.as_secs_f64(),
        budget.as_secs(),
        o.detail
    );
    pass
}

fn main() {
    let secs = Duration::from_secs;
    let mut results = vec![
        timed(1, secs(1), lj_geometry),
        timed(2, secs(10), determinant_machinery),
        timed(3, secs(60), block_factorization),
        timed(4, secs(30), gaussian_moments),
    ];

    let start = Instant::now();
    let eps_u = eps_u_estimate();
    let baseline = superposition_run(eps_u, 1.0, 100.0, 4.0);
    let shared = start.elapsed();
    let budget = secs(600).saturating_sub(shared);
    println!("scaling setup: eps_U estimate {eps_u:.4}, baseline superposition run {:.1} s", shared.as_secs_f64());
    let start = Instant::now();
    let five = timed(5, budget, || scaling_reproduction(eps_u, &baseline));
    let left = budget.saturating_sub(start.elapsed());
    results.push(five);
    results.push(timed(6, left, || window_persistence(eps_u, baseline)));

    results.push(timed(7, secs(120), bound_soundness));
    results.push(timed(8, secs(120), plateau));
    results.push(timed(9, secs(60), determinism));

    let failed = results.iter().filter(|p| !**p).count();
    println!("acceptance: {} of {} criteria pass", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
