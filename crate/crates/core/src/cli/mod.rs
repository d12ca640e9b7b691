//! The `metricline` command-line front end.
//!
//! Exit codes: 0 certified, 2 refuted, 3 inconclusive, 1 usage, parse,
//! parameter or domain errors. `METRICLINE_THREADS` caps the worker pool
//! (0 or unset: one per core).

pub mod report;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::catalog::{self, CatalogError};
use crate::certify::{check_all, CheckConfig, ConfigError, MetricCandidate, Verdict};
use crate::expr::{eval_xy, ParseError};
use crate::grid;
use crate::subadditive::{classify_translation_invariant, Domain, GeneratorFunction, SubadditiveError};

pub use report::{to_json, CandidateInfo, Report, SCHEMA_VERSION};

pub const EXIT_ERROR: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "metricline", version, about = "Decide whether d(x, y) is a metric on the real line")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certify, refute or fail to decide a candidate d(x, y).
    Certify(CertifyArgs),
    /// Classify the translation-invariant metric f(y - x) of a generator.
    Subadditive(SubadditiveArgs),
    /// List the built-in candidates.
    Catalog(CatalogArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed for every random choice (overrides the configuration file).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the JSON report here.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Leave the timings out of the JSON report.
    #[arg(long)]
    pub omit_timings: bool,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    /// Candidate expression in x and y.
    #[arg(long, conflicts_with = "catalog", required_unless_present = "catalog")]
    pub expr: Option<String>,
    /// Name of a built-in candidate.
    #[arg(long)]
    pub catalog: Option<String>,
    /// Catalog parameter as `key=value`; repeatable.
    #[arg(long = "param", requires = "catalog")]
    pub params: Vec<String>,
    /// Generator g(x) for `concave_ti`.
    #[arg(long, requires = "catalog")]
    pub generator: Option<String>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct SubadditiveArgs {
    /// Generator expression in x.
    #[arg(long, conflicts_with = "fixture", required_unless_present = "fixture")]
    pub generator: Option<String>,
    /// Built-in piecewise generator: exa1 or exa2.
    #[arg(long)]
    pub fixture: Option<String>,
    /// The generator is given on [0, inf) and extended evenly.
    #[arg(long)]
    pub half_line: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct CatalogArgs {
    /// Show one entry in detail.
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Subadditive(#[from] SubadditiveError),
    #[error("configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("malformed parameter `{0}` (expected key=value)")]
    Param(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn io_error(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// What a command produced: an exit code, the text for standard output and
/// optionally a report.
pub struct Outcome {
    pub code: i32,
    pub summary: String,
    pub report: Option<Report>,
}

fn load_config(common: &CommonArgs) -> Result<CheckConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => CheckConfig::parse(&fs::read_to_string(path).map_err(io_error(path))?)?,
        None => CheckConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.rng_seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_params(raw: &[String]) -> Result<BTreeMap<String, f64>, CliError> {
    raw.iter()
        .map(|kv| {
            let (k, v) = kv.split_once('=').ok_or_else(|| CliError::Param(kv.clone()))?;
            let v: f64 = v.trim().parse().map_err(|_| CliError::Param(kv.clone()))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

/// Reject candidates that cannot be evaluated on the sample grid.
fn preflight(d: &MetricCandidate, cfg: &CheckConfig) -> Result<(), CliError> {
    for (x, y) in grid::grid2d(cfg) {
        if let Err(err) = eval_xy(&d.expr, x, y) {
            return Err(CliError::Domain(format!("d({x:e}, {y:e}): {err}")));
        }
    }
    Ok(())
}

fn summarize(label: &str, source: &str, verdict: &Verdict) -> String {
    let mut s = format!("candidate: {label}\nsource:    {source}\nverdict:   {}", verdict.kind());
    match verdict {
        Verdict::Certified(c) => {
            s += &format!(" by {} ({})\n", c.theorem, c.caveat);
        }
        Verdict::Refuted { violation, pair } => {
            let pts: Vec<String> = violation.witness.iter().map(|v| format!("{v}")).collect();
            s += &format!(
                "\nwitness:   {} at [{}], magnitude {:e}\n",
                violation.kind,
                pts.join(", "),
                violation.magnitude
            );
            if let Some(p) = pair {
                s += &format!(
                    "pair:      f({} + {}) = {} > f({}) + f({}) = {}\n",
                    p.x, p.y, p.lhs, p.x, p.y, p.rhs
                );
            }
        }
        Verdict::Inconclusive { diagnostics } => {
            s.push('\n');
            for d in diagnostics {
                s += &format!("  - {d}\n");
            }
        }
    }
    s
}

fn write_report(common: &CommonArgs, report: &Report) -> Result<(), CliError> {
    if let Some(path) = &common.json {
        let r = if common.omit_timings {
            report.without_timings()
        } else {
            report.clone()
        };
        fs::write(path, r.to_json()).map_err(io_error(path))?;
    }
    Ok(())
}

pub fn cmd_certify(args: &CertifyArgs) -> Result<Outcome, CliError> {
    let cfg = load_config(&args.common)?;
    let d = match (&args.expr, &args.catalog) {
        (Some(src), _) => MetricCandidate::parse(src.clone(), src)?,
        (None, Some(name)) => {
            let params = parse_params(&args.params)?;
            catalog::get(name, &params, args.generator.as_deref())?.candidate
        }
        (None, None) => unreachable!("clap requires one of --expr and --catalog"),
    };
    preflight(&d, &cfg)?;
    let outcome = check_all(&d, &cfg);
    let report = Report {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION"),
        command: "certify",
        candidate: CandidateInfo {
            label: d.label.clone(),
            source: d.source.clone(),
        },
        verdict: outcome.verdict,
        necessary: Some(outcome.necessary),
        search: outcome.search,
        config_echo: cfg,
        timings: Some(outcome.timings),
    };
    write_report(&args.common, &report)?;
    Ok(Outcome {
        code: report.verdict.exit_code(),
        summary: summarize(&d.label, &d.source, &report.verdict),
        report: Some(report),
    })
}

pub fn cmd_subadditive(args: &SubadditiveArgs) -> Result<Outcome, CliError> {
    let cfg = load_config(&args.common)?;
    let domain = if args.half_line {
        Domain::HalfLine
    } else {
        Domain::WholeLine
    };
    let (label, gen) = match (&args.generator, &args.fixture) {
        (Some(src), _) => (src.clone(), GeneratorFunction::parse(src, domain)?),
        (None, Some(name)) => (name.clone(), GeneratorFunction::fixture(name)?),
        (None, None) => unreachable!("clap requires one of --generator and --fixture"),
    };
    let started = std::time::Instant::now();
    let verdict = classify_translation_invariant(&gen, &cfg).map_err(|e| CliError::Domain(e.to_string()))?;
    let timings = crate::certify::Timings {
        hypotheses_ms: started.elapsed().as_secs_f64() * 1e3,
        ..Default::default()
    };
    let report = Report {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION"),
        command: "subadditive",
        candidate: CandidateInfo {
            label: label.clone(),
            source: gen.source.clone(),
        },
        verdict,
        necessary: None,
        search: None,
        config_echo: cfg,
        timings: Some(timings),
    };
    write_report(&args.common, &report)?;
    Ok(Outcome {
        code: report.verdict.exit_code(),
        summary: summarize(&label, &gen.source, &report.verdict),
        report: Some(report),
    })
}

pub fn cmd_catalog(args: &CatalogArgs) -> Result<Outcome, CliError> {
    let describe = |name: &str| -> Result<String, CatalogError> {
        let params: Vec<String> = catalog::param_schema(name)?
            .iter()
            .map(|(k, default, rule)| format!("{k} (default {default}, {rule})"))
            .collect();
        let params = if params.is_empty() {
            "none".to_string()
        } else {
            params.join("; ")
        };
        Ok(format!(
            "{name}\n  formula:  {}\n  params:   {params}\n  expected: {}\n",
            catalog::formula(name)?,
            catalog::expected_theorem(name)?
        ))
    };
    let summary = match &args.name {
        Some(name) => describe(name)?,
        None => catalog::NAMES.iter().map(|n| describe(n)).collect::<Result<String, _>>()?,
    };
    Ok(Outcome {
        code: 0,
        summary,
        report: None,
    })
}

/// Size the global worker pool from `METRICLINE_THREADS`.
fn configure_threads() {
    let n = std::env::var("METRICLINE_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(0);
    if n > 0 {
        // Fails only if the pool was already built, in which case it stays as is.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Parse `args`, run the command and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { EXIT_ERROR } else { 0 };
        }
    };
    configure_threads();
    let result = match &cli.command {
        Command::Certify(a) => cmd_certify(a),
        Command::Subadditive(a) => cmd_subadditive(a),
        Command::Catalog(a) => cmd_catalog(a),
    };
    match result {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(out.summary.as_bytes());
            out.code
        }
        Err(err) => {
            eprintln!("error: {err}");
            EXIT_ERROR
        }
    }
}
