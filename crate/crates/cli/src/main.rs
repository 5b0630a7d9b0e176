//! Command-line driver for germ projection, renormalization, toy amplitudes,
//! polarization batches and the check suites.

mod cache;
mod config;
mod suites;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use merorenorm::germ::parse_germ;
use merorenorm::microlocal::run_polarization_batch;
use merorenorm::qft::{regularized_amplitude, renormalize_amplitude};
use merorenorm::quad::QuadratureConfig;
use merorenorm::renorm::renormalize;
use merorenorm::{project_pi, Complex64};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use cache::Cache;
use config::{GermRequest, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("io: {0}")]
    Io(String),
    #[error("{0}")]
    Compute(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) | CliError::Json(_) => 2,
            CliError::Compute(_) => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "merorenorm", version, about = "Renormalization of products of complex powers by pole subtraction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the JSON result to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Directory for cached renorm and qft results.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Seed for Monte Carlo estimates, random batches and corpora.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Quadrature tolerance for renorm and qft; pass tolerance for check suites.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Split a germ expression in l1..lp into singular and holomorphic parts.
    Germ {
        expr: Option<String>,
        #[arg(long)]
        vars: Option<usize>,
    },
    /// Renormalize the power product of the [renorm] section.
    Renorm,
    /// Evaluate or renormalize the amplitude of the [qft] section.
    Qft,
    /// Run the polarization batch of the [polar] section.
    Polar,
    /// Run a named check suite, or `all`.
    Check { suite: Option<String> },
}

struct Outcome {
    text: String,
    pass: bool,
}

fn render<T: Serialize>(value: &T) -> Result<String, CliError> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn largest_variable(expr: &str) -> usize {
    let bytes = expr.as_bytes();
    let mut best = 0;
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'l' {
            let digits: String = bytes[i + 1..].iter().take_while(|c| c.is_ascii_digit()).map(|&c| c as char).collect();
            best = best.max(digits.parse().unwrap_or(0));
        }
    }
    best.max(1)
}

fn cmd_germ(req: &GermRequest) -> Result<Outcome, CliError> {
    let p = req.vars.unwrap_or_else(|| largest_variable(&req.expr));
    let germ = parse_germ(&req.expr, p).map_err(|e| CliError::Usage(e.to_string()))?;
    let d = project_pi(&germ).map_err(|e| CliError::Usage(e.to_string()))?;
    let out = json!({
        "input": germ.to_string(),
        "singular": d.singular.iter().map(|t| t.to_germ(&d.center).to_string()).collect::<Vec<_>>(),
        "holomorphic": d.holomorphic.to_string(),
        "decomposition": d,
    });
    Ok(Outcome { text: render(&out)?, pass: true })
}

/// Runs `compute` unless the cache holds the result for `request`.
fn cached<T: Serialize>(
    cache: Option<&Cache>,
    command: &str,
    request: &T,
    compute: impl FnOnce() -> Result<String, CliError>,
) -> Result<String, CliError> {
    let Some(cache) = cache else {
        return compute();
    };
    let key = cache::key(command, request)?;
    if let Some(text) = cache.load(&key) {
        return Ok(text);
    }
    let text = compute()?;
    cache.store(&key, &text)?;
    Ok(text)
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let seed = cli.seed.or(cfg.seed);
    let cache = cli.cache_dir.as_deref().map(Cache::open).transpose()?;
    let missing = |section: &str| CliError::Usage(format!("the configuration needs a [{section}] section"));
    match &cli.command {
        Command::Germ { expr, vars } => {
            let req = match (expr, &cfg.germ) {
                (Some(e), _) => GermRequest { expr: e.clone(), vars: *vars },
                (None, Some(g)) => GermRequest { expr: g.expr.clone(), vars: vars.or(g.vars) },
                (None, None) => return Err(CliError::Usage("give an expression or a [germ] section".into())),
            };
            cmd_germ(&req)
        }
        Command::Renorm => {
            let mut req = cfg.renorm.clone().ok_or_else(|| missing("renorm"))?;
            req.quadrature = cfg.quadrature(req.quadrature, cli.tol)?;
            req.phi.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            let text = cached(cache.as_ref(), "renorm", &req, || {
                let mut r = renormalize(&req).map_err(|e| CliError::Compute(e.to_string()))?;
                r.germ = None;
                render(&r)
            })?;
            Ok(Outcome { text, pass: true })
        }
        Command::Qft => {
            let mut req = cfg.qft.clone().ok_or_else(|| missing("qft"))?;
            req.options.quadrature = cfg.quadrature(req.options.quadrature, cli.tol)?;
            if let Some(s) = seed {
                req.options.seed = s;
            }
            let text = cached(cache.as_ref(), "qft", &req, || {
                let compute = |e: merorenorm::qft::QftError| CliError::Compute(e.to_string());
                match &req.lambdas {
                    Some(ls) => {
                        let ls: Vec<Complex64> = ls.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
                        let v = regularized_amplitude(req.spacetime, &req.model, &req.amplitude, &ls, &req.phi, &req.options)
                            .map_err(compute)?;
                        render(&v)
                    }
                    None => {
                        let r = renormalize_amplitude(req.spacetime, &req.model, &req.amplitude, &req.phi, &req.options)
                            .map_err(compute)?;
                        render(&r)
                    }
                }
            })?;
            Ok(Outcome { text, pass: true })
        }
        Command::Polar => {
            let mut batch = cfg.polar.clone().ok_or_else(|| missing("polar"))?;
            if let Some(s) = seed {
                batch.seed = s;
            }
            if !(1..=2).contains(&batch.space_dim) {
                return Err(CliError::Usage(format!("space_dim must be 1 or 2, got {}", batch.space_dim)));
            }
            let r = run_polarization_batch(&batch);
            Ok(Outcome { text: render(&r)?, pass: r.pass() })
        }
        Command::Check { suite } => {
            let suite = suite.clone().or(cfg.check.as_ref().map(|c| c.suite.clone())).unwrap_or_else(|| "all".into());
            let params = suites::SuiteParams {
                seed: seed.unwrap_or(0),
                tol: cli.tol,
                quadrature: cfg.quadrature(QuadratureConfig::default(), None)?,
            };
            let names: Vec<&str> = if suite == "all" { suites::SUITES.to_vec() } else { vec![suite.as_str()] };
            let mut reports = Vec::new();
            for name in names {
                let r = suites::run(name, &params).ok_or_else(|| {
                    CliError::Usage(format!("unknown suite {name:?}; known: all, {}", suites::SUITES.join(", ")))
                })?;
                reports.push(r);
            }
            let pass = reports.iter().all(|r| r.pass);
            let text = if reports.len() == 1 { render(&reports[0])? } else { render(&json!({ "pass": pass, "suites": reports }))? };
            Ok(Outcome { text, pass })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = run(&cli).and_then(|o| {
        match &cli.out {
            Some(path) => std::fs::write(path, &o.text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
            None => print!("{}", o.text),
        }
        Ok(o)
    });
    match outcome {
        Ok(o) if o.pass => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
