// `!(x > 0.0)` rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use collar::config::{build_manifold, load_config, parse_config, SuiteConfig};
use collar::model_space::{
    ball_radius, ball_radius_or_inf, classify, collar_model_volume, kasue_constant, model_critical,
    EffectiveDim,
};
use collar::profile::Profile;
use collar::report::{reports_to_csv, reports_to_json, to_json_string};
use collar::sturm_liouville::{free_eigenvalue, model_eigenvalue};
use collar::suite::run_suite;
use collar::verification::Status;
use collar::warped_product::{build, curvature_margin, FiberSpec};

const DEFAULT_CONFIG: &str = include_str!("../configs/default.toml");

/// Exit status for configuration and flag errors.
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "collar",
    version,
    about = "Comparison geometry checks for weighted manifolds with boundary"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify (κ, λ) and print the model constants.
    Model(ModelArgs),
    /// Principal Dirichlet-Neumann p-eigenvalue of a model space.
    Eigen(EigenArgs),
    /// Curvature samples and gate margin of a warped product.
    Curvature(CurvatureArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
}

fn parse_dim(s: &str) -> Result<EffectiveDim, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "∞" => Ok(EffectiveDim::Infinite),
        other => other
            .parse::<f64>()
            .map(EffectiveDim::from)
            .map_err(|e| format!("{e}: expected a number or inf")),
    }
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, allow_negative_numbers = true)]
    kappa: f64,
    #[arg(long, allow_negative_numbers = true)]
    lambda: f64,
    /// Effective dimension; a number or `inf`.
    #[arg(long = "N", value_parser = parse_dim)]
    big_n: Option<EffectiveDim>,
    /// Radius for `s_N_at_r`.
    #[arg(long)]
    r: Option<f64>,
    /// Inscribed radius for `kasue_at_D`.
    #[arg(long = "D")]
    d: Option<f64>,
}

#[derive(Args)]
struct EigenArgs {
    #[arg(long)]
    p: f64,
    #[arg(long = "N", value_parser = parse_dim)]
    big_n: Option<EffectiveDim>,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    kappa: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    lambda: f64,
    #[arg(long = "D")]
    d: f64,
    /// Unweighted problem `μ_{p,∞,D}` (constant density).
    #[arg(long, conflicts_with_all = ["big_n", "kappa", "lambda"])]
    free: bool,
}

#[derive(Args)]
struct CurvatureArgs {
    /// Suite config holding the manifold.
    #[arg(long, requires = "manifold", conflicts_with_all = ["w", "f", "n", "length"])]
    config: Option<PathBuf>,
    /// Manifold name in the config.
    #[arg(long, requires = "config")]
    manifold: Option<String>,
    /// Warping function of t.
    #[arg(long)]
    w: Option<String>,
    /// Weight function of t.
    #[arg(long, default_value = "0")]
    f: String,
    /// Manifold dimension.
    #[arg(long)]
    n: Option<u32>,
    /// Collar length.
    #[arg(long = "L")]
    length: Option<f64>,
    /// Einstein constant of the fiber (unit sphere by default).
    #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
    fiber_kappa: f64,
    /// Effective dimension; a number or `inf`.
    #[arg(long = "N", value_parser = parse_dim)]
    big_n: EffectiveDim,
    /// Curvature lower bound κ.
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    kappa: f64,
    /// Boundary mean curvature bound λ.
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    lambda: f64,
    #[arg(long, default_value_t = 1024)]
    grid: usize,
    /// Include the per-sample curvature arrays.
    #[arg(long)]
    samples: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite config file.
    #[arg(required_unless_present_any = ["default", "print_default"], conflicts_with = "default")]
    config: Option<PathBuf>,
    /// Run the bundled default suite.
    #[arg(long)]
    default: bool,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Also write the CSV table here.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Print the bundled default config and exit.
    #[arg(long, conflicts_with_all = ["config", "json", "csv"])]
    print_default: bool,
}

fn finite_or_null(x: Option<f64>) -> Value {
    match x {
        Some(v) if v.is_finite() => json!(v),
        _ => Value::Null,
    }
}

fn cmd_model(args: ModelArgs) -> anyhow::Result<ExitCode> {
    let ModelArgs {
        kappa,
        lambda,
        big_n,
        r,
        d,
    } = args;
    if !kappa.is_finite() || !lambda.is_finite() {
        bail!("kappa and lambda must be finite");
    }
    let s_n = match (big_n, r) {
        (Some(EffectiveDim::Infinite), Some(r)) => Some(r),
        (Some(EffectiveDim::Finite(n)), Some(r)) => Some(collar_model_volume(n, kappa, lambda, r)?),
        _ => None,
    };
    let kasue = match (big_n, d) {
        (Some(EffectiveDim::Infinite), Some(d)) => Some(d),
        (Some(EffectiveDim::Finite(n)), Some(d)) => Some(kasue_constant(n, kappa, lambda, d)?),
        _ => None,
    };
    let out = json!({
        "class": classify(kappa, lambda).to_string(),
        "c_ball": finite_or_null(ball_radius(kappa, lambda)),
        "d_model": finite_or_null(model_critical(kappa, lambda).value()),
        "s_N_at_r": finite_or_null(s_n),
        "kasue_at_D": finite_or_null(kasue),
    });
    emit(&to_json_string(&out));
    Ok(ExitCode::SUCCESS)
}

fn cmd_eigen(args: EigenArgs) -> anyhow::Result<ExitCode> {
    if !(args.p > 1.0) || !args.p.is_finite() {
        bail!("p = {} out of range: need 1 < p < ∞", args.p);
    }
    if !(args.d > 0.0) || !args.d.is_finite() {
        bail!("D = {} must be positive and finite", args.d);
    }
    let result = match (args.free, args.big_n) {
        (true, _) | (false, Some(EffectiveDim::Infinite)) => {
            if args.kappa != 0.0 || args.lambda != 0.0 {
                bail!("N = inf takes kappa = lambda = 0");
            }
            free_eigenvalue(args.p, args.d)?
        }
        (false, Some(EffectiveDim::Finite(n))) => {
            let c_bar = ball_radius_or_inf(args.kappa, args.lambda);
            if args.d > c_bar {
                bail!(
                    "D = {} exceeds C̄ = {c_bar} for kappa = {}, lambda = {}",
                    args.d,
                    args.kappa,
                    args.lambda
                );
            }
            model_eigenvalue(args.p, n, args.kappa, args.lambda, args.d)?
        }
        (false, None) => bail!("give --N or --free"),
    };
    let out = json!({
        "mu": result.mu,
        "residual": result.endpoint_residual,
        "iterations": result.iterations,
    });
    emit(&to_json_string(&out));
    Ok(ExitCode::SUCCESS)
}

fn cmd_curvature(args: CurvatureArgs) -> anyhow::Result<ExitCode> {
    let m = match (&args.config, &args.manifold) {
        (Some(path), Some(name)) => {
            let config = load_config(path)?;
            let spec = config
                .manifolds
                .get(name)
                .ok_or_else(|| anyhow!("manifold {name:?} not defined in config"))?;
            build_manifold(name, spec)?.manifold
        }
        _ => {
            let w = args
                .w
                .as_deref()
                .ok_or_else(|| anyhow!("give --w (or --config with --manifold)"))?;
            let n = args.n.ok_or_else(|| anyhow!("--n is required with --w"))?;
            let length = args
                .length
                .ok_or_else(|| anyhow!("--L is required with --w"))?;
            if n < 2 {
                bail!("n = {n} must be at least 2");
            }
            let fiber = FiberSpec {
                einstein_constant: args.fiber_kappa,
                ..FiberSpec::unit_sphere(n - 1)
            };
            build(
                n,
                fiber,
                length,
                Profile::parse(w)?,
                Profile::parse(&args.f)?,
                false,
            )?
        }
    };
    if args.grid < 2 {
        bail!("grid must be at least 2");
    }
    let report = curvature_margin(&m, args.big_n, args.kappa, args.grid)?;
    let mut out = json!({
        "margin": report.margin,
        "gate_margin": report.gate_margin(args.big_n, args.lambda),
        "h_f_0": report.h_f_0,
        "h_f_L": report.h_f_l,
        "grid": args.grid,
    });
    if args.samples {
        out["t"] = json!(report.t);
        out["radial"] = json!(report.radial_samples);
        out["fiber"] = json!(report.fiber_samples);
    }
    emit(&to_json_string(&out));
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs) -> anyhow::Result<ExitCode> {
    if args.print_default {
        emit(DEFAULT_CONFIG.trim_end());
        return Ok(ExitCode::SUCCESS);
    }
    let config: SuiteConfig = match &args.config {
        Some(path) => load_config(path)?,
        None => parse_config(DEFAULT_CONFIG).context("bundled default config")?,
    };
    let reports = run_suite(&config)?;

    let output = config.output.clone().unwrap_or_default();
    let json_path = args.json.or(output.json.map(PathBuf::from));
    let csv_path = args.csv.or(output.csv.map(PathBuf::from));
    let json_text = reports_to_json(&reports);
    match json_path {
        Some(path) => fs::write(&path, json_text + "\n")
            .with_context(|| format!("writing {}", path.display()))?,
        None => emit(&json_text),
    }
    if let Some(path) = csv_path {
        fs::write(&path, reports_to_csv(&reports))
            .with_context(|| format!("writing {}", path.display()))?;
    }

    let count = |s: Status| reports.iter().filter(|r| r.status == s).count();
    let (pass, fail, skipped) = (
        count(Status::Pass),
        count(Status::Fail),
        count(Status::NotApplicable),
    );
    for r in reports.iter().filter(|r| r.status == Status::Fail) {
        eprintln!(
            "FAIL {} on {}: conclusion margin {:?}, tolerance {:e}{}",
            r.check_name,
            r.manifold.as_deref().unwrap_or("parameters"),
            r.conclusion_margin,
            r.tolerance,
            r.notes
                .first()
                .map(|n| format!(" ({n})"))
                .unwrap_or_default()
        );
    }
    eprintln!(
        "{} checks: {pass} pass, {fail} fail, {skipped} not applicable",
        reports.len()
    );
    Ok(if fail == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

/// Writes a line to stdout; a closed pipe (`collar ... | head`) is not an error.
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if let Err(e) = writeln!(out, "{text}").and_then(|_| out.flush()) {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            eprintln!("error: writing to stdout: {e}");
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Model(a) => cmd_model(a),
        Command::Eigen(a) => cmd_eigen(a),
        Command::Curvature(a) => cmd_curvature(a),
        Command::Verify(a) => cmd_verify(a),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(EXIT_USAGE)
    })
}
