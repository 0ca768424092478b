//! `yamabe`: command-line front end of the numerical laboratory.
//!
//! Exit codes: 0 success, 1 failed assertion or solver failure, 2 usage error.
//! Errors are written to standard error as JSON.

mod config;
mod output;
mod svg;

use clap::{Args, Parser, Subcommand};
use config::{
    parse_family, parse_image, parse_nonlinearity, parse_sign, pick, positive, require, ConfigError, FileConfig,
    ShootConfig, SolveConfig, VerifyConfig, DEFAULT_OUTER_HORIZON, DEFAULT_TOL,
};
use output::{envelope, trajectory_csv, Artifacts};
use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::ExitCode;
use svg::Plot;
use yamabe_core::coefficients::{CoefficientFamily, Nonlinearity};
use yamabe_core::diagnostics::{classify, energy, pohozaev_residual, ClassicalParams};
use yamabe_core::geometry::Profile;
use yamabe_core::shooting::{
    find_positive_solutions, glue_entire, glue_half_line, shoot_nodal_family, CompactProblem, CompactSolution,
    DeSitterImage, GlueOptions, GluedSolution, NodalSearch, ShootError, ShootOptions, POSITIVE_D_MIN,
};
use yamabe_core::singular_ivp::{estimate_blowup, integrate_with, IntegrateOptions, Sign, SingularIvp};
use yamabe_core::suites::{run_suite, Suite, SuiteOptions, DEFAULT_SEED};

#[derive(Debug, Parser)]
#[command(name = "yamabe", version, about = "Numerical laboratory for reduced Yamabe-type equations")]
struct Cli {
    /// Configuration file with [solve], [shoot], [verify] and [output] sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for CSV, JSON and SVG artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Relative tolerance of the integrator.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Horizon: the radial end for solve, the hyperbolic horizon for glue.
    #[arg(long, global = true)]
    rmax: Option<f64>,
    /// Seed of the random geometry samples.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: number of logical processors).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate w'' + q w' = ±f(w) from the singular endpoint.
    Solve(SolveArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
    /// Find the k-nodal solution of the compact problem on [0, π].
    Shoot(ShootArgs),
    /// Shoot, then glue the compact solution to hyperbolic pieces.
    Glue(GlueArgs),
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// power:θ, sinh:α,β,plus|minus or sin:α,β.
    #[arg(long)]
    family: Option<String>,
    /// power:Λ,p, pml:Λ,p or pdiff:Λ,δ,p,s.
    #[arg(long)]
    f: Option<String>,
    /// minus or plus.
    #[arg(long)]
    sign: Option<String>,
    /// Initial value w(0).
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    /// Also write an SVG plot (requires --out).
    #[arg(long)]
    svg: bool,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// regimes, pohozaev, energy, hypotheses, geometry or tables.
    suite: String,
    /// Random samples per spec variant in the geometry suite.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Debug, Args)]
struct ShootArgs {
    #[arg(long)]
    ell: Option<u32>,
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    n1: Option<u32>,
    #[arg(long)]
    n2: Option<u32>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Number of zeros on [0, π].
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Debug, Args)]
struct GlueArgs {
    #[command(flatten)]
    shoot: ShootArgs,
    /// line, from-minus-one or from-one.
    #[arg(long)]
    image: Option<String>,
    /// Value at t = 1 for the from-one image.
    #[arg(long, allow_negative_numbers = true)]
    d: Option<f64>,
}

/// Failures with their exit codes.
#[derive(Debug)]
enum CliError {
    Usage(String),
    Failure { kind: &'static str, message: String, details: Value },
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl CliError {
    fn failure(kind: &'static str, e: impl std::fmt::Display) -> Self {
        CliError::Failure { kind, message: e.to_string(), details: Value::Null }
    }

    fn report(&self) -> (Value, u8) {
        match self {
            CliError::Usage(m) => (json!({ "error": { "kind": "usage", "message": m } }), 2),
            CliError::Failure { kind, message, details } => {
                (json!({ "error": { "kind": kind, "message": message, "details": details } }), 1)
            }
        }
    }
}

/// Whether every check of a command held.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Passed,
    AssertionFailed,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let (v, code) = CliError::Usage(e.to_string()).report();
            eprintln!("{v}");
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(Status::Passed) => ExitCode::SUCCESS,
        Ok(Status::AssertionFailed) => ExitCode::from(1),
        Err(e) => {
            let (v, code) = e.report();
            eprintln!("{v}");
            ExitCode::from(code)
        }
    }
}

/// Global settings shared by all commands.
struct Globals {
    file: FileConfig,
    out: Option<PathBuf>,
    jobs: Option<usize>,
}

fn run(cli: Cli) -> Result<Status, CliError> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let out = cli.out.clone().or_else(|| file.output.out.clone().map(PathBuf::from));
    let jobs = pick(cli.jobs, file.output.jobs);
    if let Some(n) = jobs {
        if n == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::failure("threads", e))?;
    }
    let g = Globals { file, out, jobs };
    match cli.command {
        Command::Solve(a) => solve(&g, a, cli.tol, cli.rmax),
        Command::Verify(a) => verify(&g, a, cli.seed),
        Command::Shoot(a) => shoot(&g, a, cli.tol),
        Command::Glue(a) => glue(&g, a, cli.tol, cli.rmax),
    }
}

fn emit(g: &Globals, command: &str, config: Value, result: Value, mut files: Artifacts) -> Result<(), CliError> {
    let mut cfg = config;
    cfg["out"] = json!(g.out.as_ref().map(|p| p.display().to_string()));
    cfg["jobs"] = json!(g.jobs);
    let doc = envelope(command, cfg, result);
    let text = output::to_json(&doc);
    if let Some(dir) = &g.out {
        files.add(format!("{command}.json"), text.clone());
        files.write(dir).map_err(|e| CliError::failure("io", e))?;
    }
    println!("{text}");
    Ok(())
}

fn tolerance(flag: Option<f64>, file: Option<f64>) -> Result<f64, CliError> {
    Ok(positive(pick(flag, file).unwrap_or(DEFAULT_TOL), "tol")?)
}

fn solve(g: &Globals, args: SolveArgs, tol: Option<f64>, rmax: Option<f64>) -> Result<Status, CliError> {
    let sec = &g.file.solve;
    let family_s = require(pick(args.family, sec.family.clone()), "family", "solve")?;
    let f_s = require(pick(args.f, sec.f.clone()), "f", "solve")?;
    let sign_s = pick(args.sign, sec.sign.clone()).unwrap_or_else(|| "minus".into());
    let a = require(pick(args.a, sec.a), "a", "solve")?;
    let family = parse_family(&family_s)?;
    let nl = parse_nonlinearity(&f_s)?;
    let sign = parse_sign(&sign_s)?;
    let rmax = positive(pick(rmax, sec.rmax).unwrap_or_else(|| SolveConfig::default_rmax(&family)), "rmax")?;
    let cfg = SolveConfig {
        family: family_s,
        f: f_s,
        sign: sign_s,
        a,
        rmax,
        tol: tolerance(tol, sec.tol)?,
        svg: args.svg || sec.svg.unwrap_or(false),
    };
    let ivp = SingularIvp::new(family, nl, sign, a, rmax);
    ivp.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let traj = integrate_with(&ivp, &IntegrateOptions::with_tolerance(cfg.tol)).map_err(|e| CliError::failure("solver", e))?;
    let rhs = ivp.effective_rhs().map_err(|e| CliError::failure("solver", e))?;
    let e = energy(&traj, &rhs.nl, rhs.sign);
    let (classification, pohozaev) = match (family, nl, sign) {
        (CoefficientFamily::PowerLaw { theta }, Nonlinearity::PurePower { lambda, p }, Sign::Minus) => {
            let params = ClassicalParams { theta, lambda, p, a };
            (Some(classify(&traj, &params)), pohozaev_residual(&traj, theta, lambda, p).ok())
        }
        _ => (None, None),
    };
    let blowup = traj.is_blow_up().then(|| estimate_blowup(&traj, &nl).ok()).flatten();
    let result = json!({
        "problem": ivp,
        "termination": traj.termination,
        "zero_count": traj.zero_count(),
        "events": traj.events,
        "stats": traj.stats,
        "energy": {
            "kind": e.kind,
            "max_increase_rate": e.max_increase_rate,
            "max_deviation": e.max_deviation,
            "non_increasing": e.non_increasing,
        },
        "classification": classification,
        "pohozaev": pohozaev,
        "blowup": blowup,
    });
    let mut files = Artifacts::default();
    files.add("trajectory.csv", trajectory_csv(traj.nodes.iter().map(|n| (n.r, n.w, n.wp))));
    if cfg.svg {
        let cap = 10.0 * a.abs().max(1.0);
        let mut markers = vec![];
        if let Some(b) = &blowup {
            markers.push((b.r_est, "R".to_string()));
        }
        let plot = Plot {
            title: format!("w(r): q = {family}, f = {nl}, sign {}, a = {a}", cfg.sign),
            x_label: "r".into(),
            y_label: "w".into(),
            series: vec![traj.nodes.iter().map(|n| (n.r, n.w)).collect()],
            markers,
            y_clip: Some((-cap, cap)),
        };
        files.add("trajectory.svg", plot.render());
    }
    emit(g, "solve", json!(cfg), result, files)?;
    Ok(Status::Passed)
}

fn verify(g: &Globals, args: VerifyArgs, seed: Option<u64>) -> Result<Status, CliError> {
    let suite: Suite = args.suite.parse().map_err(CliError::Usage)?;
    let sec = &g.file.verify;
    let cfg = VerifyConfig {
        suite: suite.name().into(),
        seed: pick(seed, sec.seed).unwrap_or(DEFAULT_SEED),
        samples: pick(args.samples, sec.samples).unwrap_or(SuiteOptions::default().samples),
    };
    if cfg.samples == 0 {
        return Err(CliError::Usage("samples must be at least 1".into()));
    }
    let report = run_suite(suite, &SuiteOptions { seed: cfg.seed, samples: cfg.samples });
    let passed = report.passed;
    emit(g, "verify", json!(cfg), json!(report), Artifacts::default())?;
    Ok(if passed { Status::Passed } else { Status::AssertionFailed })
}

fn shoot_config(g: &Globals, a: ShootArgs, tol: Option<f64>, rmax: Option<f64>) -> Result<ShootConfig, CliError> {
    let sec = &g.file.shoot;
    let cfg = ShootConfig {
        ell: require(pick(a.ell, sec.ell), "ell", "shoot")?,
        m: require(pick(a.m, sec.m), "m", "shoot")?,
        n1: require(pick(a.n1, sec.n1), "n1", "shoot")?,
        n2: require(pick(a.n2, sec.n2), "n2", "shoot")?,
        p: require(pick(a.p, sec.p), "p", "shoot")?,
        lambda: require(pick(a.lambda, sec.lambda), "lambda", "shoot")?,
        k: pick(a.k, sec.k).unwrap_or(1),
        tol: tolerance(tol, sec.tol)?,
        image: sec.image.clone().unwrap_or_else(|| "line".into()),
        d: sec.d,
        rmax: positive(pick(rmax, sec.rmax).unwrap_or(DEFAULT_OUTER_HORIZON), "rmax")?,
    };
    cfg.problem().validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

fn shoot_options(tol: f64) -> ShootOptions {
    let mut opts = ShootOptions::default();
    opts.integrate.settings.rtol = tol;
    opts.integrate.settings.atol = tol * 1e-2;
    opts
}

fn gate(problem: &CompactProblem) -> Value {
    let (below_k, below_entire) = problem.subcritical_flags();
    json!({
        "k_zeroes_bound": problem.k_zeroes_bound(),
        "entire_bound": problem.entire_bound(),
        "below_k_zeroes_bound": below_k,
        "below_entire_bound": below_entire,
        "lambda_one": problem.lambda_one(),
    })
}

fn search_json(s: &NodalSearch) -> Value {
    json!({ "d_range": s.d_range, "e_max": s.e_max, "candidates": s.candidates })
}

fn solution_json(sol: &CompactSolution, k: usize) -> Value {
    let parity = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    json!({
        "d": sol.d,
        "e": sol.e,
        "zero_count": sol.zero_count,
        "zero_count_certified": sol.zero_count_certified(),
        "defect": sol.defect,
        "min_extremum": sol.min_extremum,
        "newton_iterations": sol.newton_iterations,
        "parity": { "expected_sign_of_e": parity, "holds": sol.e.signum() == parity && sol.e.abs() > 1.0 },
    })
}

/// The k-nodal solution, or `None` with a constant-only report below `λ₁`.
fn nodal_solution(cfg: &ShootConfig) -> Result<Result<(CompactSolution, NodalSearch), Value>, CliError> {
    let problem = cfg.problem();
    let opts = shoot_options(cfg.tol);
    if problem.lambda_one().is_some_and(|l1| cfg.lambda <= l1) {
        let search = find_positive_solutions(&problem, POSITIVE_D_MIN, &opts).map_err(|e| CliError::failure("solver", e))?;
        return Ok(Err(json!({
            "constant_only": search.solutions.is_empty(),
            "constants": [-1.0, 0.0, 1.0],
            "gate": gate(&problem),
            "positive_search": search,
        })));
    }
    let (mut results, search) = shoot_nodal_family(&problem, &[cfg.k], &opts).map_err(|e| match e {
        ShootError::Supercritical { .. } => CliError::Failure { kind: "gate", message: e.to_string(), details: gate(&problem) },
        e => CliError::failure("solver", e),
    })?;
    match results.remove(0) {
        Ok(sol) => Ok(Ok((sol, search))),
        Err(e) => Err(CliError::Failure { kind: "not_found", message: e.to_string(), details: search_json(&search) }),
    }
}

fn shoot(g: &Globals, a: ShootArgs, tol: Option<f64>) -> Result<Status, CliError> {
    let cfg = shoot_config(g, a, tol, None)?;
    let mut files = Artifacts::default();
    let (result, status) = match nodal_solution(&cfg)? {
        Err(report) => {
            let ok = report["constant_only"] == json!(true);
            (report, if ok { Status::Passed } else { Status::AssertionFailed })
        }
        Ok((sol, search)) => {
            files.add("solution.csv", trajectory_csv(sol.nodes().into_iter()));
            files.add("solution.svg", compact_plot(&sol, cfg.k).render());
            let mut v = solution_json(&sol, cfg.k);
            v["gate"] = gate(&cfg.problem());
            v["search"] = search_json(&search);
            (v, Status::Passed)
        }
    };
    emit(g, "shoot", json!(cfg), result, files)?;
    Ok(status)
}

fn compact_plot(sol: &CompactSolution, k: usize) -> Plot {
    Plot {
        title: format!("{k}-nodal solution on [0, π]: d = {:.6}, e = {:.6}", sol.d, sol.e),
        x_label: "r".into(),
        y_label: "w".into(),
        series: vec![sol.nodes().into_iter().map(|(r, w, _)| (r, w)).collect()],
        markers: vec![],
        y_clip: None,
    }
}

fn glue(g: &Globals, a: GlueArgs, tol: Option<f64>, rmax: Option<f64>) -> Result<Status, CliError> {
    let mut cfg = shoot_config(g, a.shoot, tol, rmax)?;
    if let Some(img) = a.image {
        cfg.image = img;
    }
    cfg.d = a.d.or(cfg.d);
    let image = parse_image(&cfg.image)?;
    let problem = cfg.problem();
    let opts = GlueOptions { outer_horizon: cfg.rmax, integrate: IntegrateOptions::with_tolerance(cfg.tol) };
    let (glued, middle) = if image == DeSitterImage::FromOne {
        let d = require(cfg.d, "d", "shoot")?;
        (glue_half_line(&problem, d, &opts), None)
    } else {
        match nodal_solution(&cfg)? {
            Err(report) => {
                emit(g, "glue", json!(cfg), report, Artifacts::default())?;
                return Ok(Status::AssertionFailed);
            }
            Ok((sol, _)) => (glue_entire(&problem, &sol, image, &opts), Some(sol)),
        }
    };
    let glued = glued.map_err(|e| CliError::failure("glue", e))?;
    let mut result = glued_json(&glued);
    if let Some(sol) = &middle {
        result["middle"] = solution_json(sol, cfg.k);
    }
    let mut files = Artifacts::default();
    files.add("glued.svg", glued_plot(&glued).render());
    emit(g, "glue", json!(cfg), result, files)?;
    Ok(Status::Passed)
}

/// Sign of `v` at the far end of a piece.
fn far_sign(piece: &yamabe_core::shooting::OuterPiece) -> f64 {
    piece.sign * piece.trajectory.last().w.signum()
}

fn glued_json(g: &GluedSolution) -> Value {
    let (r_plus, r_minus) = g.blow_up_abscissae();
    json!({
        "case": g.case_tag.to_string(),
        "image": g.image,
        "r_plus": r_plus,
        "r_minus": r_minus,
        "natural_plus": g.natural_plus,
        "natural_plus_error": g.natural_plus.max_error(),
        "natural_minus": g.natural_minus,
        "natural_minus_error": g.natural_minus.map(|c| c.max_error()),
        "residual_middle": g.residual_middle,
        "residual_right": g.residual_right,
        "residual_left": g.residual_left,
        "far_end_sign_right": far_sign(&g.right),
        "far_end_sign_left": g.left.as_ref().map(far_sign),
        "right_termination": g.right.trajectory.termination,
        "left_termination": g.left.as_ref().map(|l| l.trajectory.termination),
    })
}

fn glued_plot(g: &GluedSolution) -> Plot {
    let pts: Vec<(f64, f64)> = g.grid().into_iter().filter_map(|t| g.value(t).map(|v| (t, v))).collect();
    let scale = pts.iter().filter(|(t, _)| t.abs() <= 1.0).map(|(_, v)| v.abs()).fold(1.0, f64::max);
    let (r_plus, r_minus) = g.blow_up_abscissae();
    let mut markers = vec![];
    if let Some(r) = r_plus {
        markers.push((r, "R+".to_string()));
    }
    if let Some(r) = r_minus {
        markers.push((-r, "-R-".to_string()));
    }
    Plot {
        title: format!("{} profile v(t)", g.case_tag),
        x_label: "t".into(),
        y_label: "v".into(),
        series: vec![pts],
        markers,
        y_clip: Some((-10.0 * scale, 10.0 * scale)),
    }
}
