//! Command-line front end.
//!
//! A config file (`--config FILE`, TOML with keys named like the long flags
//! of the chosen subcommand) is expanded into flags placed before the
//! command-line ones, so explicit flags win.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use hessianlab_core::inequality::{decades, Campaign, Target};
use hessianlab_core::linalg::random_symmetric;
use hessianlab_core::report::{DecadeResult, TrendReport};
use hessianlab_core::sampling::{sample_rng, SampleSpec, TailMode};
use hessianlab_core::singular::{self, SingularFamilyParams};
use hessianlab_core::solver::{self, Damping, Field, SolveConfig};
use hessianlab_core::transforms::{self, admissibility_campaign, quotient_constants, rigidity_root};
use hessianlab_core::LabError;

use crate::gridio::{read_grid, write_grid};
use crate::output::{write_csv, write_report, Envelope};
use crate::parallel::{run_campaign, run_chunked, thread_count};
use crate::sparse::FaerLu;
use crate::CliError;

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "hessianlab",
    version,
    about = "Sum-Hessian operator laboratory",
    args_override_self = true
)]
pub struct Cli {
    /// TOML file of default flag values for the subcommand.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Run one inequality campaign; exit 1 on any violation.
    Verify(CampaignArgs),
    /// Sweep λ₁ decades looking for violations and the empirical threshold.
    Hunt(CampaignArgs),
    /// Finite-difference Dirichlet solve of σ₃ + ασ₂ = f.
    Solve(SolveArgs),
    /// Quotient-equation shift constants, identities, and the rigidity cubic.
    TransformCheck(TransformArgs),
    /// Residuals and Hölder probe of the singular family.
    SingularDemo(SingularArgs),
    /// Interior Hessian bound across a family of semi-convexity constants.
    Probe(ProbeArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Output {
    /// JSON report path (default: hessianlab-<command>.json).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// CSV path for tabular results.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CampaignArgs {
    /// Inequality id.
    #[arg(long)]
    pub target: String,
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Semi-convexity bound: eigenvalues ≥ −K.
    #[arg(long = "K", default_value_t = 1.0)]
    #[serde(rename = "K")]
    pub semiconvexity: f64,
    /// λ₁ range as lo:hi.
    #[arg(long, default_value = "1e3:1e6")]
    pub lambda1: String,
    #[arg(long, default_value_t = 10_000)]
    pub count: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// bounded, spiked-two, general or mixed (hunt defaults to general).
    #[arg(long)]
    pub tail_mode: Option<String>,
    #[arg(long, default_value_t = 10.0)]
    pub tail_bound: f64,
    /// Window lo:hi for S_k(λ).
    #[arg(long)]
    pub level: Option<String>,
    /// Level bound for the tail-bound target.
    #[arg(long = "N1", default_value_t = 10.0)]
    #[serde(rename = "N1")]
    pub n1: f64,
    /// Shift for the ellipticity ratio.
    #[arg(long = "K1", default_value_t = 2.0)]
    #[serde(rename = "K1")]
    pub k1: f64,
    /// Large-λ₁ threshold J.
    #[arg(long, default_value_t = 1e3)]
    pub threshold: f64,
    #[arg(long, default_value_t = 8)]
    pub directions: usize,
    /// Decade exponents a:b for a trend over [10^a, 10^(a+1)], …
    #[arg(long)]
    pub decades: Option<String>,
    /// Largest acceptable |log-log slope| of the constant across decades.
    #[arg(long, default_value_t = 0.05)]
    pub slope_tolerance: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_tries: u32,
    #[command(flatten)]
    #[serde(skip)]
    pub out: Output,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolveArgs {
    #[arg(long, default_value_t = 3)]
    pub n_dims: usize,
    #[arg(long, default_value_t = 17)]
    pub resolution: usize,
    /// Coefficient of σ₂.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Manufactured exact solution, e.g. quadratic:2,1,0.5 | quartic:c,eps | pogorelov:s,c,kappa.
    #[arg(long)]
    pub exact: Option<String>,
    /// Right-hand side closed form (e.g. constant:4); overrides --exact.
    #[arg(long)]
    pub rhs: Option<String>,
    /// Dirichlet data closed form; overrides --exact.
    #[arg(long)]
    pub boundary: Option<String>,
    #[arg(long)]
    pub rhs_grid: Option<PathBuf>,
    #[arg(long)]
    pub boundary_grid: Option<PathBuf>,
    #[arg(long, default_value_t = -0.5)]
    pub lo: f64,
    #[arg(long, default_value_t = 0.5)]
    pub hi: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 50)]
    pub max_iterations: u32,
    #[arg(long, default_value_t = 1.0)]
    pub initial_step: f64,
    /// Write the discrete solution in the grid container format.
    #[arg(long)]
    pub save_grid: Option<PathBuf>,
    #[command(flatten)]
    #[serde(skip)]
    pub out: Output,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TransformArgs {
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    /// Quotient index (1 or 2); both when omitted.
    #[arg(long)]
    pub l: Option<u8>,
    /// Right-hand side of the rigidity equation.
    #[arg(long, default_value_t = 2.0)]
    pub c0: f64,
    /// Random matrices for the shift identity and level-set samples.
    #[arg(long, default_value_t = 10_000)]
    pub count: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: Output,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SingularArgs {
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    /// Regularization σ for the residual campaign.
    #[arg(long, default_value_t = 0.01)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.5)]
    pub r: f64,
    #[arg(long, default_value_t = 1000)]
    pub points: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: Output,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ProbeArgs {
    /// quadratic or pogorelov.
    #[arg(long, default_value = "pogorelov")]
    pub family: String,
    /// Comma-separated semi-convexity constants.
    #[arg(long = "Ks", default_value = "0.25,0.5,1")]
    #[serde(rename = "Ks")]
    pub ks: String,
    #[arg(long, default_value_t = 3)]
    pub n_dims: usize,
    #[arg(long, default_value_t = 13)]
    pub resolution: usize,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// λ₁ of the quadratic family.
    #[arg(long, default_value_t = 8.0)]
    pub lambda1: f64,
    /// Regularization s of the Pogorelov family.
    #[arg(long, default_value_t = 0.01)]
    pub s: f64,
    /// Convex padding c of the Pogorelov family.
    #[arg(long, default_value_t = 4.0)]
    pub c: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: Output,
}

/// Exit classes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_NONCONVERGENCE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

/// Parses `argv` (including the program name), runs the command, writes
/// reports, and returns the exit code. Human-readable output goes to `out`,
/// errors to `err`.
pub fn run(argv: Vec<OsString>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_CONFIG;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    match dispatch(&cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// Moves `--config FILE` contents in front of the remaining flags.
fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let mut path = None;
    let mut rest = Vec::with_capacity(argv.len());
    let mut it = argv.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy().into_owned();
        if s == "--config" {
            path = Some(PathBuf::from(
                it.next()
                    .ok_or_else(|| CliError::Config("--config needs a path".into()))?,
            ));
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else { return Ok(rest) };
    let text =
        std::fs::read_to_string(&path).map_err(|e| CliError::Config(format!("reading {}: {e}", path.display())))?;
    let flags = config_flags(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    // program name, subcommand, config flags, then the rest
    let sub = rest
        .iter()
        .skip(1)
        .position(|a| !a.to_string_lossy().starts_with('-'))
        .map(|p| p + 1)
        .ok_or_else(|| CliError::Config("a subcommand is required".into()))?;
    let mut out: Vec<OsString> = rest[..=sub].to_vec();
    out.extend(flags.into_iter().map(OsString::from));
    out.extend(rest[sub + 1..].iter().cloned());
    Ok(out)
}

/// Flat TOML table → `--key=value` tokens in key order.
pub fn config_flags(text: &str) -> Result<Vec<String>, String> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| e.message().to_string())?;
    let mut flags = Vec::with_capacity(table.len());
    for (key, value) in table {
        let v = match value {
            toml::Value::String(s) => s,
            toml::Value::Integer(i) => i.to_string(),
            toml::Value::Float(f) => format!("{f:e}"),
            toml::Value::Boolean(b) => b.to_string(),
            other => return Err(format!("key '{key}' must be a scalar, found {}", other.type_str())),
        };
        flags.push(format!("--{key}={v}"));
    }
    Ok(flags)
}

fn dispatch(cmd: &Command, out: &mut dyn Write) -> Result<i32, CliError> {
    match cmd {
        Command::Verify(a) => verify(cmd, a, out),
        Command::Hunt(a) => hunt(cmd, a, out),
        Command::Solve(a) => solve(cmd, a, out),
        Command::TransformCheck(a) => transform_check(cmd, a, out),
        Command::SingularDemo(a) => singular_demo(cmd, a, out),
        Command::Probe(a) => probe(cmd, a, out),
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Verify(_) => "verify",
        Command::Hunt(_) => "hunt",
        Command::Solve(_) => "solve",
        Command::TransformCheck(_) => "transform-check",
        Command::SingularDemo(_) => "singular-demo",
        Command::Probe(_) => "probe",
    }
}

fn report_path(cmd: &Command, o: &Output) -> PathBuf {
    o.output
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("hessianlab-{}.json", command_name(cmd))))
}

fn emit<R: Serialize>(
    cmd: &Command,
    o: &Output,
    passed: bool,
    result: &R,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let path = report_path(cmd, o);
    write_report(&path, &Envelope::new(command_name(cmd), cmd, passed, result))?;
    writeln!(out, "report: {}", path.display()).map_err(|e| CliError::Io(e.to_string()))
}

fn parse_pair(s: &str, what: &str) -> Result<(f64, f64), CliError> {
    let bad = || CliError::Config(format!("{what} must look like lo:hi, got '{s}'"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    Ok((
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    ))
}

fn parse_decades(s: &str) -> Result<Vec<(f64, f64)>, CliError> {
    let bad = || CliError::Config(format!("decades must look like a:b with a < b, got '{s}'"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let (a, b): (i32, i32) = (
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    );
    if a >= b {
        return Err(bad());
    }
    Ok(decades(a, b))
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| CliError::Config(format!("{what}: cannot parse '{t}'")))
        })
        .collect()
}

/// `kind:p1,p2,…` closed forms for the solver.
pub fn parse_field(s: &str, n_dims: usize) -> Result<Field, CliError> {
    let (kind, params) = s.split_once(':').unwrap_or((s, ""));
    let p = parse_list(params, kind)?;
    let want = |k: usize| {
        if p.len() == k {
            Ok(())
        } else {
            Err(CliError::Config(format!(
                "{kind} takes {k} parameters, got {}",
                p.len()
            )))
        }
    };
    Ok(match kind {
        "constant" => {
            want(1)?;
            Field::Constant { value: p[0] }
        }
        "quadratic" => {
            want(n_dims)?;
            Field::Quadratic { diag: p }
        }
        "quartic" => {
            want(2)?;
            Field::Quartic { c: p[0], eps: p[1] }
        }
        "pogorelov" => {
            want(3)?;
            Field::Pogorelov {
                s: p[0],
                c: p[1],
                kappa: p[2],
            }
        }
        _ => {
            return Err(CliError::Config(format!(
                "unknown field '{kind}'; use constant, quadratic, quartic or pogorelov"
            )))
        }
    })
}

fn campaign(a: &CampaignArgs, default_tail: TailMode) -> Result<Campaign, CliError> {
    let target = Target::parse(&a.target, a.n1, a.k1).map_err(|e| CliError::Config(e.to_string()))?;
    let mut spec = SampleSpec::new(a.n, a.k);
    spec.semiconvexity = a.semiconvexity;
    spec.lambda1_range = parse_pair(&a.lambda1, "lambda1")?;
    spec.count = a.count;
    spec.seed = a.seed;
    spec.tail_mode = match &a.tail_mode {
        Some(m) => TailMode::parse(m).ok_or_else(|| {
            CliError::Config(format!(
                "unknown tail mode '{m}'; use bounded, spiked-two, general or mixed"
            ))
        })?,
        None => default_tail,
    };
    spec.tail_bound = a.tail_bound;
    spec.level = a.level.as_deref().map(|l| parse_pair(l, "level")).transpose()?;
    spec.max_tries = a.max_tries;
    let mut c = Campaign::new(target, spec).map_err(|e| CliError::Config(e.to_string()))?;
    c.threshold = a.threshold;
    c.directions = a.directions;
    Ok(c)
}

fn trend_of(c: &Campaign, ds: &[(f64, f64)]) -> Result<TrendReport, CliError> {
    Ok(hessianlab_core::inequality::trend(c, ds, run_campaign)?)
}

fn verify(cmd: &Command, a: &CampaignArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let c = campaign(a, TailMode::Mixed)?;
    #[derive(Serialize)]
    struct VerifyResult {
        report: hessianlab_core::VerificationReport,
        trend: Option<TrendReport>,
        trend_bounded: Option<bool>,
    }
    let report = run_campaign(&c)?;
    let trend = a
        .decades
        .as_deref()
        .map(parse_decades)
        .transpose()?
        .map(|ds| trend_of(&c, &ds))
        .transpose()?;
    let trend_bounded = trend.as_ref().map(|t| t.bounded(a.slope_tolerance));
    let passed = report.passed() && trend_bounded.unwrap_or(true) && trend.as_ref().is_none_or(|t| t.violations() == 0);
    writeln!(
        out,
        "{}: samples {} violations {} worst margin {:e} constant {:e}{}",
        report.inequality_id,
        report.samples,
        report.violations,
        report.worst_margin,
        report.estimated_constant,
        trend
            .as_ref()
            .and_then(|t| t.slope)
            .map(|s| format!(" trend slope {s:e}"))
            .unwrap_or_default()
    )
    .map_err(|e| CliError::Io(e.to_string()))?;
    if let (Some(t), Some(path)) = (&trend, &a.out.csv) {
        write_csv(
            path,
            &[
                "lambda1_lo",
                "lambda1_hi",
                "samples",
                "violations",
                "worst_margin",
                "constant",
            ],
            decade_rows(&t.decades),
        )?;
    }
    emit(
        cmd,
        &a.out,
        passed,
        &VerifyResult {
            report,
            trend,
            trend_bounded,
        },
        out,
    )?;
    Ok(if passed { EXIT_OK } else { EXIT_VIOLATION })
}

fn decade_rows(ds: &[DecadeResult]) -> Vec<Vec<f64>> {
    ds.iter()
        .map(|d| {
            vec![
                d.lambda1_lo,
                d.lambda1_hi,
                d.report.samples as f64,
                d.report.violations as f64,
                d.report.worst_margin,
                d.report.estimated_constant,
            ]
        })
        .collect()
}

fn hunt(cmd: &Command, a: &CampaignArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let c = campaign(a, TailMode::General)?;
    let ds = parse_decades(a.decades.as_deref().unwrap_or("1:6"))?;
    let t = trend_of(&c, &ds)?;
    // lowest λ₁ from which every remaining decade is clean
    let threshold = t
        .decades
        .iter()
        .rposition(|d| d.report.violations > 0)
        .map_or(Some(ds[0].0), |i| t.decades.get(i + 1).map(|d| d.lambda1_lo));
    #[derive(Serialize)]
    struct HuntResult {
        trend: TrendReport,
        violations: u64,
        empirical_threshold: Option<f64>,
    }
    let violations = t.violations();
    for d in &t.decades {
        writeln!(
            out,
            "[{:e}, {:e}] violations {} worst margin {:e}",
            d.lambda1_lo, d.lambda1_hi, d.report.violations, d.report.worst_margin
        )
        .map_err(|e| CliError::Io(e.to_string()))?;
    }
    if let Some(path) = &a.out.csv {
        write_csv(
            path,
            &[
                "lambda1_lo",
                "lambda1_hi",
                "samples",
                "violations",
                "worst_margin",
                "constant",
            ],
            decade_rows(&t.decades),
        )?;
    }
    emit(
        cmd,
        &a.out,
        violations == 0,
        &HuntResult {
            trend: t,
            violations,
            empirical_threshold: threshold,
        },
        out,
    )?;
    Ok(if violations == 0 { EXIT_OK } else { EXIT_VIOLATION })
}

fn solve_config(a: &SolveArgs) -> Result<(SolveConfig, Option<Field>), CliError> {
    let exact = a.exact.as_deref().map(|s| parse_field(s, a.n_dims)).transpose()?;
    let default_exact = || Field::Quadratic {
        diag: vec![1.0; a.n_dims],
    };
    let base = exact.clone().unwrap_or_else(default_exact);
    let rhs = match (&a.rhs_grid, &a.rhs) {
        (Some(p), _) => Field::Grid { values: read_grid(p)? },
        (None, Some(s)) => parse_field(s, a.n_dims)?,
        (None, None) => Field::OperatorOf {
            of: Box::new(base.clone()),
        },
    };
    let boundary = match (&a.boundary_grid, &a.boundary) {
        (Some(p), _) => Field::Grid { values: read_grid(p)? },
        (None, Some(s)) => parse_field(s, a.n_dims)?,
        (None, None) => base.clone(),
    };
    let uses_exact = a.rhs.is_none() && a.rhs_grid.is_none() && a.boundary.is_none() && a.boundary_grid.is_none();
    let cfg = SolveConfig {
        lo: vec![a.lo; a.n_dims],
        hi: vec![a.hi; a.n_dims],
        resolution: vec![a.resolution; a.n_dims],
        alpha: a.alpha,
        rhs,
        boundary,
        damping: Damping {
            initial_step: a.initial_step,
            max_iterations: a.max_iterations,
            ..Damping::default()
        },
        tolerance: a.tolerance,
    };
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok((cfg, uses_exact.then_some(base)))
}

fn solve(cmd: &Command, a: &SolveArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let (cfg, exact) = solve_config(a)?;
    let res = solver::solve(&cfg, None, &mut FaerLu)?;
    let error_vs_exact = match &exact {
        Some(f) => {
            let u = &res.u;
            let mut e: f64 = 0.0;
            for i in 0..u.grid.len() {
                e = e.max((u.values[i] - f.eval(&u.grid.point(i), i, cfg.alpha)?).abs());
            }
            Some(e)
        }
        None => None,
    };
    if let Some(p) = &a.save_grid {
        write_grid(p, &res.u)?;
    }
    #[derive(Serialize)]
    struct SolveOut<'a> {
        result: &'a solver::SolveResult,
        error_vs_exact: Option<f64>,
    }
    writeln!(
        out,
        "status {:?} iterations {} residual {:e} max lambda1 {:e}{}",
        res.status,
        res.iterations,
        res.residual_inf,
        res.max_lambda1,
        error_vs_exact.map(|e| format!(" error {e:e}")).unwrap_or_default()
    )
    .map_err(|e| CliError::Io(e.to_string()))?;
    if let Some(path) = &a.out.csv {
        let rows = res
            .diagnostics
            .iter()
            .enumerate()
            .map(|(i, d)| vec![i as f64, d.residual_inf, d.step, d.admissible_nodes])
            .collect();
        write_csv(path, &["iteration", "residual_inf", "step", "admissible_nodes"], rows)?;
    }
    let ok = res.converged();
    emit(
        cmd,
        &a.out,
        ok,
        &SolveOut {
            result: &res,
            error_vs_exact,
        },
        out,
    )?;
    Ok(if ok { EXIT_OK } else { EXIT_NONCONVERGENCE })
}

#[derive(Debug, Serialize)]
struct ConstantsCheck {
    constants: transforms::TransformConstants,
    level_residual: f64,
    constant_term_residual: f64,
    /// Max of |identity residual| / (1 + |σ₃(A + aI)|) over random matrices.
    shift_identity_residual: f64,
    admissibility: hessianlab_core::VerificationReport,
}

fn transform_check(cmd: &Command, a: &TransformArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let ls: Vec<u8> = match a.l {
        Some(l) => vec![l],
        None => vec![1, 2],
    };
    let mut checks = Vec::new();
    for l in ls {
        let tc = quotient_constants(a.n, l).map_err(|e| CliError::Config(e.to_string()))?;
        let mut worst: f64 = 0.0;
        for i in 0..a.count {
            let mut rng = sample_rng(a.seed, i);
            let m = random_symmetric(&mut rng, a.n, 1.0);
            worst =
                worst.max(transforms::shift_identity_residual(&m, &tc)? / transforms::shift_identity_scale(&m, &tc)?);
        }
        let adm = run_chunked(a.count, thread_count(), |r| {
            admissibility_campaign(&tc, a.count, a.seed, r)
        })?;
        writeln!(
            out,
            "n = {} l = {}: a = {:.7} C0 = {:.7} level residual {:e} constant-term residual {:e} shift identity residual {:e} admissibility violations {}",
            tc.n,
            tc.l,
            tc.a,
            tc.c0,
            tc.level_residual(),
            tc.constant_term_residual(),
            worst,
            adm.violations
        )
        .map_err(|e| CliError::Io(e.to_string()))?;
        checks.push(ConstantsCheck {
            constants: tc,
            level_residual: tc.level_residual(),
            constant_term_residual: tc.constant_term_residual(),
            shift_identity_residual: worst,
            admissibility: adm,
        });
    }
    let rigidity = rigidity_root(a.n, a.c0).map_err(|e| CliError::Config(e.to_string()))?;
    writeln!(
        out,
        "rigidity cubic, c0 = {}: K0 = {} (threshold {})",
        a.c0,
        rigidity.k0.map(|k| format!("{k:.12}")).unwrap_or_else(|| "none".into()),
        rigidity.threshold
    )
    .map_err(|e| CliError::Io(e.to_string()))?;
    #[derive(Serialize)]
    struct TransformOut {
        checks: Vec<ConstantsCheck>,
        rigidity: transforms::RigidityData,
    }
    let passed = checks
        .iter()
        .all(|c| c.admissibility.passed() && c.shift_identity_residual <= 1e-9);
    emit(cmd, &a.out, passed, &TransformOut { checks, rigidity }, out)?;
    Ok(if passed { EXIT_OK } else { EXIT_VIOLATION })
}

fn singular_demo(cmd: &Command, a: &SingularArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let p = SingularFamilyParams::new(a.n, a.k, a.sigma, a.r).map_err(|e| CliError::Config(e.to_string()))?;
    let residuals = singular::residual_campaign(&p, a.points, a.seed)?;
    let limit = p.with_sigma(0.0)?;
    let holder = singular::holder_probe(
        &limit,
        &singular::default_direction(&limit),
        &singular::default_t_grid(),
    )?;
    let pts = singular::safe_points(&p, 64, 0.05 * p.r, a.seed);
    let convergence = singular::convergence_check(&p, &[0.1, 0.01, 0.001, 1e-4, 0.0], &pts)?;
    let convexity = singular::convexity_probe(&limit, a.points, 1e-3 * p.r, a.seed)?;
    let exponent = singular::prefactor_exponent(a.k as i64);
    let csv_path = a
        .out
        .csv
        .clone()
        .unwrap_or_else(|| PathBuf::from("hessianlab-singular-demo.csv"));
    let rows = holder.rows.iter().map(|r| vec![r.0, r.1, r.2]).collect();
    write_csv(&csv_path, &["t", "grad_norm", "hessian_norm"], rows)?;
    writeln!(
        out,
        "k = {}: fitted slope {:.4} (expected {:.4}), max |Du| {:.4}, residual {:e}, min sigma_(k-1) {:e}, prefactor exponent {}",
        a.k, holder.slope, holder.expected_slope, holder.max_gradient, residuals.max_scaled_sigma_k, residuals.min_sigma_km1, exponent
    )
    .map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(out, "csv: {}", csv_path.display()).map_err(|e| CliError::Io(e.to_string()))?;
    #[derive(Serialize)]
    struct SingularOut {
        params: SingularFamilyParams,
        residuals: singular::ResidualSummary,
        prefactor_exponent: String,
        holder: singular::HolderProbe,
        convergence: singular::Convergence,
        min_second_difference: f64,
    }
    let passed = residuals.max_scaled_sigma_k <= 1e-10 && residuals.min_sigma_km1 > 0.0 && convexity >= -1e-10;
    emit(
        cmd,
        &a.out,
        passed,
        &SingularOut {
            params: p,
            residuals,
            prefactor_exponent: exponent.to_string(),
            holder,
            convergence,
            min_second_difference: convexity,
        },
        out,
    )?;
    Ok(if passed { EXIT_OK } else { EXIT_VIOLATION })
}

fn probe(cmd: &Command, a: &ProbeArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let ks = parse_list(&a.ks, "Ks")?;
    let family = match a.family.as_str() {
        "quadratic" => solver::quadratic_family(&ks, a.n_dims, a.resolution, a.alpha, a.lambda1),
        "pogorelov" => solver::pogorelov_family(&ks, a.n_dims, a.resolution, a.alpha, a.s, a.c),
        other => {
            return Err(CliError::Config(format!(
                "unknown family '{other}'; use quadratic or pogorelov"
            )))
        }
    };
    for (_, cfg) in &family {
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    }
    let rows = solver::interior_bound_probe(&family, &mut FaerLu)?;
    for r in &rows {
        writeln!(
            out,
            "K = {}: max lambda1 {:e} b {:.6} status {:?}",
            r.semiconvexity, r.max_lambda1, r.b, r.status
        )
        .map_err(|e| CliError::Io(e.to_string()))?;
    }
    if let Some(path) = &a.out.csv {
        let table = rows
            .iter()
            .map(|r| {
                vec![
                    r.semiconvexity,
                    r.max_lambda1,
                    r.b,
                    r.center_lambda1,
                    r.min_eigenvalue,
                    r.c1_norm,
                ]
            })
            .collect();
        write_csv(
            path,
            &["K", "max_lambda1", "b", "center_lambda1", "min_eigenvalue", "c1_norm"],
            table,
        )?;
    }
    let ok = rows.iter().all(|r| r.status == solver::SolveStatus::Converged);
    emit(cmd, &a.out, ok, &rows, out)?;
    Ok(if ok { EXIT_OK } else { EXIT_NONCONVERGENCE })
}

impl From<LabError> for CliError {
    fn from(e: LabError) -> Self {
        match e {
            LabError::Argument(_) | LabError::Dimension { .. } => CliError::Config(e.to_string()),
            LabError::LinearAlgebra(_) => CliError::Solver(e.to_string()),
            other => CliError::Run(other.to_string()),
        }
    }
}
