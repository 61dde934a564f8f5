//! The `wfe` batch driver: config in, JSON and CSV artifacts out.
//!
//! Exit codes: 0 success, 1 validation or usage error, 2 numerical failure.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::bound::{lambda_lower_bound, w_lower_threshold_v_or_vacuous, BoundResult};
use crate::criteria::{assemble_report, CriteriaReport};
use crate::error::{Error, Result};
use crate::potentials::{estimate_stability_constant, PairPotential, StabilityEstimate};
use crate::rng::derive_seed;
use crate::scaling::{run_scaling, run_slopes, window_vs_n, RunSlopes, ScalingParams, ScalingRun, WindowTable};
use crate::spectral::{discretize, first_zero_scan, DiscretizationSpec, LambdaEpsRow};
use crate::states::{gaussian_norm_and_grad_integrals, moments_s, StateMoments, TestState};
use config::{streams, RunConfig};
use output::{cell, sha256_hex, Provenance, Sink};

#[derive(Debug, Parser)]
#[command(name = "wfe", version, about = "Instability criteria and spectral scans for trapped N-body models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides `seed` in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate u(r) over the configured radial grid.
    Potential(Common),
    /// Estimate the stability constant eps_U.
    Stability(Common),
    /// Check criteria (i)-(v) and report the coupling window.
    Criteria(Common),
    /// Variational lower bound on the top eigenvalue of xbar Lambda^-1 xbar.
    Bound(Common),
    /// Body-count scaling run with exponent fits.
    Scaling(Common),
    /// First zero of G on a sequence of lattices.
    Spectrum {
        #[command(flatten)]
        common: Common,
        /// Compare F*G against the dense determinant where the block dimension is at most 64.
        #[arg(long)]
        dense_check: bool,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Potential(_) => "potential",
            Command::Stability(_) => "stability",
            Command::Criteria(_) => "criteria",
            Command::Bound(_) => "bound",
            Command::Scaling(_) => "scaling",
            Command::Spectrum { .. } => "spectrum",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Potential(c)
            | Command::Stability(c)
            | Command::Criteria(c)
            | Command::Bound(c)
            | Command::Scaling(c)
            | Command::Spectrum { common: c, .. } => c,
        }
    }
}

/// Parses `argv`, runs the subcommand and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("wfe {}: {e}", cli.command.name());
            e.exit_code()
        }
    }
}

struct Context {
    cfg: RunConfig,
    seed: u64,
    sink: Sink,
}

fn load(cmd: &Command) -> Result<Context> {
    let common = cmd.common();
    let bytes = match &common.config {
        Some(p) => std::fs::read(p).map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?,
        None => Vec::new(),
    };
    let text = String::from_utf8(bytes.clone()).map_err(|_| Error::Config("config is not UTF-8".into()))?;
    let cfg = config::parse(&text)?;
    let seed = common.seed.or(cfg.seed).unwrap_or(0);
    let provenance = Provenance {
        tool: "wfe",
        version: env!("CARGO_PKG_VERSION"),
        subcommand: cmd.name(),
        config_sha256: sha256_hex(&bytes),
        seed,
    };
    let sink = Sink::new(&common.out_dir, provenance)?;
    Ok(Context { cfg, seed, sink })
}

fn execute(cmd: &Command) -> Result<String> {
    let ctx = load(cmd)?;
    match cmd {
        Command::Potential(_) => potential(&ctx),
        Command::Stability(_) => stability(&ctx),
        Command::Criteria(_) => criteria(&ctx),
        Command::Bound(_) => bound(&ctx),
        Command::Scaling(_) => scaling(&ctx),
        Command::Spectrum { dense_check, .. } => spectrum(&ctx, *dense_check),
    }
}

fn rel(path: &Path) -> String {
    path.display().to_string()
}

#[derive(Serialize)]
struct PotentialOut {
    potential: PairPotential,
    r_min: f64,
    r_max: f64,
    points: usize,
    /// Grid point with the lowest energy.
    grid_minimum: (f64, f64),
}

fn potential(ctx: &Context) -> Result<String> {
    let p = ctx.cfg.potential.clone().unwrap_or(PairPotential::lennard_jones(4.0, 1.0));
    p.validate()?;
    let g = ctx.cfg.potential_grid.unwrap_or_default();
    if !(g.r_min > 0.0 && g.r_max > g.r_min && g.points >= 2) {
        return Err(Error::Parameter(format!(
            "radial grid needs 0 < r_min < r_max and points >= 2, got [{}, {}] x {}",
            g.r_min, g.r_max, g.points
        )));
    }
    let rows: Vec<(f64, f64)> = (0..g.points)
        .map(|i| {
            let r = g.r_min + (g.r_max - g.r_min) * i as f64 / (g.points - 1) as f64;
            p.eval_pair(r).map(|u| (r, u))
        })
        .collect::<Result<_>>()?;
    let grid_minimum = rows.iter().copied().fold((f64::NAN, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let csv_rows: Vec<Vec<String>> = rows.iter().map(|&(r, u)| vec![cell(Some(r)), cell(Some(u))]).collect();
    let csv = ctx.sink.csv("potential.csv", &["r", "u"], &csv_rows)?;
    let out = PotentialOut { potential: p, r_min: g.r_min, r_max: g.r_max, points: g.points, grid_minimum };
    let json = ctx.sink.json("potential.json", &out)?;
    Ok(format!(
        "potential: {} points, grid minimum u({:.6}) = {:.6}; wrote {} and {}",
        g.points,
        grid_minimum.0,
        grid_minimum.1,
        rel(&csv),
        rel(&json)
    ))
}

fn estimate(ctx: &Context, p: &PairPotential) -> Result<StabilityEstimate> {
    let s = ctx.cfg.stability_section();
    estimate_stability_constant(p, s.n_max, s.restarts, derive_seed(ctx.seed, &[streams::STABILITY]))
}

fn stability(ctx: &Context) -> Result<String> {
    let p = ctx.cfg.potential.clone().ok_or_else(|| Error::Config("missing [potential] section".into()))?;
    let est = estimate(ctx, &p)?;
    let json = ctx.sink.json("stability.json", &est)?;
    Ok(format!(
        "stability: eps_U >= {:.6} (estimate, N <= {}, {} restarts); wrote {}",
        est.value,
        est.n_max,
        est.restarts,
        rel(&json)
    ))
}

#[derive(Serialize)]
struct EpsU {
    value: f64,
    source: &'static str,
    estimate: Option<StabilityEstimate>,
}

fn resolve_eps_u(ctx: &Context) -> Result<EpsU> {
    let m = ctx.cfg.model_section()?;
    let p = ctx.cfg.potential_or_zero();
    Ok(match m.eps_u {
        Some(value) => EpsU { value, source: "config", estimate: None },
        None if p.is_identically_zero() => EpsU { value: 0.0, source: "zero-potential", estimate: None },
        None => {
            let est = estimate(ctx, &p)?;
            EpsU { value: est.value, source: "estimate", estimate: Some(est) }
        }
    })
}

#[derive(Serialize)]
struct CriteriaOut {
    report: CriteriaReport,
    eps_u: EpsU,
    moments: StateMoments,
    bound: BoundResult,
}

fn criteria(ctx: &Context) -> Result<String> {
    let m = ctx.cfg.model_section()?;
    let eps_u = resolve_eps_u(ctx)?;
    let p = ctx.cfg.model_params(eps_u.value)?;
    let state = ctx.cfg.test_state()?;
    let moments = moments_s(&state);
    let b = lambda_lower_bound(&state, &p, &ctx.cfg.quadrature(ctx.seed))?;
    let w_min_v = match w_lower_threshold_v_or_vacuous(&b, m.rho, m.accept_unbounded) {
        Ok(w) => w,
        Err(Error::Infeasible(_)) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    let report = assemble_report(&p, m.rho, m.eta, &moments, w_min_v, m.delta)?;
    let flag = |b: bool| if b { "pass" } else { "fail" };
    let summary = format!(
        "criteria: i={} ii={} iii={} iv={} window=[{:.6e}, {:.6e}] nonempty={}",
        flag(report.pass_i),
        flag(report.pass_ii),
        flag(report.pass_iii),
        flag(report.pass_iv),
        report.w_min_v,
        report.w_max_iv,
        report.window_nonempty
    );
    let json = ctx.sink.json("criteria.json", &CriteriaOut { report, eps_u, moments, bound: b })?;
    Ok(format!("{summary}; wrote {}", rel(&json)))
}

#[derive(Serialize)]
struct BoundOut {
    bound: BoundResult,
    /// Per-axis gradient-integral conventions of the lattice state.
    gradient_constants: Option<crate::states::GaussianIntegrals>,
}

fn bound(ctx: &Context) -> Result<String> {
    let m = ctx.cfg.model_section()?;
    let p = ctx.cfg.model_params(m.eps_u.unwrap_or(0.0))?;
    let state = ctx.cfg.test_state()?;
    let b = lambda_lower_bound(&state, &p, &ctx.cfg.quadrature(ctx.seed))?;
    let rows: Vec<Vec<String>> = b
        .directions
        .iter()
        .map(|d| {
            vec![
                d.direction.to_string(),
                cell(Some(d.kinetic)),
                cell(Some(d.trap)),
                cell(Some(d.pair)),
                cell(d.pair_std_error),
                cell(Some(d.denominator)),
                cell(d.lambda_lb),
            ]
        })
        .collect();
    let csv = ctx.sink.csv("bound.csv", &["mu", "kinetic", "trap", "pair", "pair_std_error", "denominator", "lambda_lb"], &rows)?;
    let gradient_constants = match &state {
        TestState::Lattice(l) => Some(gaussian_norm_and_grad_integrals(l)),
        TestState::Superposition(s) => Some(gaussian_norm_and_grad_integrals(s.base())),
    };
    let summary = match b.lambda_lb {
        Some(l) => format!("bound: lambda_lb = {l:.6e} (mu = {})", b.mu),
        None => format!("bound: unbounded along mu = {}", b.mu),
    };
    let json = ctx.sink.json("bound.json", &BoundOut { bound: b, gradient_constants })?;
    Ok(format!("{summary}; wrote {} and {}", rel(&json), rel(&csv)))
}

#[derive(Serialize)]
struct ScalingOut {
    run: ScalingRun,
    slopes: RunSlopes,
    window: WindowTable,
}

fn scaling(ctx: &Context) -> Result<String> {
    let m = ctx.cfg.model_section()?;
    let s = ctx.cfg.scaling.as_ref().ok_or_else(|| Error::Config("missing [scaling] section".into()))?;
    let potential = ctx.cfg.potential_or_zero();
    let eps_u = resolve_eps_u(ctx)?.value;
    let spacing = s.a.unwrap_or_else(|| potential.characteristic_length());
    let params = ScalingParams {
        mass: m.mass,
        trap: m.trap,
        potential,
        eps_u,
        spacing,
        sigma: s.sigma.unwrap_or(spacing / 4.0),
        shift: s.shift,
        direction: s.direction,
        phase: s.phase,
        rho: m.rho,
        delta: m.delta,
        quadrature: ctx.cfg.quadrature(ctx.seed),
    };
    let run = run_scaling(s.family, &s.n_list, &params)?;
    let rows: Vec<Vec<String>> = run
        .records
        .iter()
        .map(|r| {
            vec![
                r.n_bodies.to_string(),
                cell(Some(r.numerator_kinetic)),
                cell(Some(r.numerator_potential)),
                cell(Some(r.denominator)),
                cell(r.lambda_lb),
                cell(r.w_min_v),
                cell(r.w_max_iv),
                r.window_nonempty.to_string(),
            ]
        })
        .collect();
    let csv = ctx.sink.csv(
        "scaling.csv",
        &["N", "numerator_kin", "numerator_pot", "denominator", "lambda_lb", "w_min_v", "w_max_iv", "window_nonempty"],
        &rows,
    )?;
    let slopes = run_slopes(&run);
    let window = window_vs_n(&run);
    let slope = |f: &Option<crate::scaling::ExponentFit>| f.map_or("n/a".to_string(), |f| format!("{:.3}", f.slope));
    let summary = format!(
        "scaling: numerator slope {}, denominator slope {}, window persists = {}",
        slope(&slopes.numerator),
        slope(&slopes.denominator),
        window.persists
    );
    let json = ctx.sink.json("scaling.json", &ScalingOut { run, slopes, window })?;
    Ok(format!("{summary}; wrote {} and {}", rel(&json), rel(&csv)))
}

#[derive(Serialize)]
struct DenseCheck {
    n: usize,
    max_rel_error: f64,
}

#[derive(Serialize)]
struct SpectrumOut {
    rows: Vec<LambdaEpsRow>,
    final_rel_change: Option<f64>,
    dense_check: Vec<DenseCheck>,
}

fn spectrum(ctx: &Context, dense_check: bool) -> Result<String> {
    let d = ctx.cfg.discretization.as_ref().ok_or_else(|| Error::Config("missing [discretization] section".into()))?;
    let m = ctx.cfg.model_section()?;
    let p = ctx
        .cfg
        .model_params(m.eps_u.unwrap_or(0.0))?
        .with_bodies(d.bodies);
    let moments = match &ctx.cfg.state {
        Some(_) => moments_s(&ctx.cfg.test_state()?),
        None => StateMoments::real([0.0; 3]),
    };
    let opts = ctx.cfg.scan.unwrap_or_default();
    let base = DiscretizationSpec { n: d.n_list.first().copied().unwrap_or(3), box_len: d.box_len, bodies: d.bodies, dim: d.dim };
    let rows = crate::spectral::lambda_eps_sequence(&p, &d.n_list, &base, &moments, ctx.cfg.dyads.as_ref(), &opts)?;
    let mut checks = Vec::new();
    if dense_check {
        for &n in &d.n_list {
            let spec = DiscretizationSpec { n, ..base };
            let j = discretize(&p, &spec, &moments, ctx.cfg.dyads.as_ref())?;
            if j.dim() > 64 {
                continue;
            }
            let (lambda_star, step, tol) = opts.resolve(&j);
            let scan = first_zero_scan(&j, lambda_star, step, tol)?;
            let probes = [0.0, 0.25, 0.5, 0.75, 1.0].map(|t| t * lambda_star);
            let mut worst = 0.0_f64;
            for lambda in probes.iter().copied().chain(scan.lambda) {
                let c = j.char_poly_eval(lambda)?;
                let dense = j.dense_shifted(lambda).determinant();
                worst = worst.max((c.product() - dense).abs() / dense.abs().max(f64::MIN_POSITIVE));
            }
            checks.push(DenseCheck { n, max_rel_error: worst });
        }
    }
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.n.to_string(), cell(Some(r.eps)), cell(r.lambda), cell(r.rel_change), r.g_signs.clone()])
        .collect();
    let csv = ctx.sink.csv("spectrum.csv", &["n", "eps", "lambda_eps", "rel_change", "g_signs"], &csv_rows)?;
    let final_rel_change = rows.last().and_then(|r| r.rel_change);
    let found = rows.iter().filter(|r| r.lambda.is_some()).count();
    let flagged = if rows.iter().any(|r| r.default_vectors) { " (default dyad vectors)" } else { "" };
    let summary = format!(
        "spectrum: lambda_eps found on {found}/{} lattices, final relative change {}{flagged}",
        rows.len(),
        final_rel_change.map_or("n/a".into(), |x| format!("{x:.3e}"))
    );
    let json = ctx.sink.json("spectrum.json", &SpectrumOut { rows, final_rel_change, dense_check: checks })?;
    Ok(format!("{summary}; wrote {} and {}", rel(&json), rel(&csv)))
}
