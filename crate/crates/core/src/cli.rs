//! Command-line front end.
//!
//! Exit status: 0 success, 2 invalid input, 3 numerical failure (singular or
//! indefinite metric), 4 ambiguous spectrum under `--strict`.

use std::ops::RangeInclusive;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::ckv::{count_ckv, Mode, SolverConfig};
use crate::error::{CkvError, Result};
use crate::jet;
use crate::metrics::{builtin_factor, builtin_metric};
use crate::perturb::{run_trials, TrialOutcome};
use crate::report::{self, SCHEMA};
use crate::tensor::MetricProvider;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_AMBIGUOUS: i32 = 4;

/// Upper bound on jet-scan rows.
const MAX_SCAN_ROWS: u64 = 1_000_000;

#[derive(Debug, Parser)]
#[command(
    name = "ckv-lab",
    version,
    about = "Conformal Killing field detection, metric perturbation trials and jet dimension counts"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Numerical dimension of the (conformal) Killing fields of a catalog metric.
    CkvCount {
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Exact jet dimension counts over a range of (n, k).
    JetScan {
        /// Dimension range, `a..b` (inclusive) or a single value.
        #[arg(long, default_value = "2..8")]
        n: String,
        /// Jet order range, `a..b` (inclusive) or a single value.
        #[arg(long, default_value = "0..10")]
        k: String,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Seeded bump-perturbation trials.
    PerturbRun {
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value_t = crate::perturb::DEFAULT_EPSILON)]
        eps: f64,
        #[arg(long, default_value_t = 20)]
        trials: u64,
        /// Seed of the first trial; trial i uses seed + i.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Conformal-mode nullity of g and c·g.
    InvarianceCheck {
        #[command(flatten)]
        solver: SolverArgs,
        /// One of const-2, exp-x1, sphere.
        #[arg(long)]
        factor: String,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, default_value = "flat")]
    pub metric: String,
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub degree: u32,
    /// conformal or killing
    #[arg(long, default_value = "conformal")]
    pub mode: String,
    /// Grid points per axis.
    #[arg(long, default_value_t = 6)]
    pub grid: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = 1e3)]
    pub gap_min: f64,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Report path; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Exit with status 4 when any spectrum is ambiguous.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    CkvCount,
    JetScan {
        n: RangeInclusive<u64>,
        k: RangeInclusive<u64>,
    },
    PerturbRun {
        eps: f64,
        trials: u64,
        seed: u64,
    },
    InvarianceCheck {
        factor: String,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::CkvCount => "ckv-count",
            Command::JetScan { .. } => "jet-scan",
            Command::PerturbRun { .. } => "perturb-run",
            Command::InvarianceCheck { .. } => "invariance-check",
        }
    }
}

/// A fully validated invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub metric: String,
    pub n: usize,
    pub solver: SolverConfig,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub strict: bool,
}

/// Parse `a..b`, `a..=b` (both inclusive) or `a`.
pub fn parse_range(field: &'static str, s: &str) -> Result<RangeInclusive<u64>> {
    let parse = |t: &str| {
        t.trim()
            .parse::<u64>()
            .map_err(|_| CkvError::invalid(field, format!("`{s}` is not a range like 2..8")))
    };
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (parse(a)?, parse(b.strip_prefix('=').unwrap_or(b))?),
        None => {
            let v = parse(s)?;
            (v, v)
        }
    };
    if lo > hi {
        return Err(CkvError::invalid(field, format!("empty range `{s}`")));
    }
    Ok(lo..=hi)
}

fn solver_config(args: &SolverArgs) -> Result<SolverConfig> {
    let cfg = SolverConfig {
        mode: args.mode.parse::<Mode>()?,
        degree: args.degree,
        grid: args.grid,
        rel_tol: args.rel_tol,
        gap_min: args.gap_min,
    };
    cfg.validate(args.n)?;
    Ok(cfg)
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self> {
        let (command, solver_args, output, default_format) = match cli.command {
            CliCommand::CkvCount { solver, output } => {
                (Command::CkvCount, Some(solver), output, Format::Json)
            }
            CliCommand::JetScan { n, k, output } => {
                let n = parse_range("n", &n)?;
                let k = parse_range("k", &k)?;
                if *n.start() < 2 {
                    return Err(CkvError::invalid("n", "dimension range must start at >= 2"));
                }
                let rows = (n.end() - n.start() + 1).saturating_mul(k.end() - k.start() + 1);
                if rows > MAX_SCAN_ROWS || *n.end() > 1_000_000 || *k.end() > 1_000_000 {
                    return Err(CkvError::invalid("n", "scan range too large"));
                }
                (Command::JetScan { n, k }, None, output, Format::Csv)
            }
            CliCommand::PerturbRun {
                solver,
                eps,
                trials,
                seed,
                output,
            } => {
                if !eps.is_finite() || eps < 0.0 {
                    return Err(CkvError::invalid("eps", format!("must be >= 0, got {eps}")));
                }
                if trials == 0 {
                    return Err(CkvError::invalid("trials", "need at least one trial"));
                }
                if seed.checked_add(trials).is_none() {
                    return Err(CkvError::invalid("seed", "seed + trials overflows"));
                }
                (
                    Command::PerturbRun { eps, trials, seed },
                    Some(solver),
                    output,
                    Format::Json,
                )
            }
            CliCommand::InvarianceCheck {
                solver,
                factor,
                output,
            } => {
                builtin_factor(&factor)?;
                (
                    Command::InvarianceCheck { factor },
                    Some(solver),
                    output,
                    Format::Json,
                )
            }
        };
        let (metric, n, solver) = match solver_args {
            Some(args) => {
                let cfg = solver_config(&args)?;
                // resolve the label now so a typo exits 2 before any work
                builtin_metric(&args.metric, args.n)?;
                (args.metric, args.n, cfg)
            }
            None => (String::new(), 0, SolverConfig::default()),
        };
        Ok(Self {
            command,
            metric,
            n,
            solver,
            out: output.out,
            format: output.format.unwrap_or(default_format),
            strict: output.strict,
        })
    }
}

/// Report text plus whether any spectrum in it was ambiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub body: String,
    pub ambiguous: bool,
}

fn document(command: &str, mut body: Value) -> String {
    body["schema"] = Value::from(SCHEMA);
    body["command"] = Value::from(command);
    report::to_canonical_json(&body)
}

/// Run the computation and render the report without writing it.
pub fn render(cfg: &RunConfig) -> Result<Rendered> {
    let name = cfg.command.name();
    match &cfg.command {
        Command::JetScan { n, k } => {
            let scan = jet::scan(n.clone(), k.clone());
            let body = match cfg.format {
                Format::Csv => report::jet_scan_csv(&scan),
                Format::Json => {
                    let mut v = report::jet_scan_json(&scan);
                    v["n_range"] = json!([n.start(), n.end()]);
                    v["k_range"] = json!([k.start(), k.end()]);
                    document(name, v)
                }
            };
            Ok(Rendered {
                body,
                ambiguous: false,
            })
        }
        Command::CkvCount => {
            let g = builtin_metric(&cfg.metric, cfg.n)?;
            let r = count_ckv(g.as_ref(), &cfg.solver)?;
            let body = match cfg.format {
                Format::Csv => report::ckv_reports_csv(&[("metric", &r)]),
                Format::Json => document(name, report::ckv_report_json(&r)),
            };
            Ok(Rendered {
                body,
                ambiguous: r.ambiguous,
            })
        }
        Command::PerturbRun { eps, trials, seed } => {
            let g: Arc<dyn MetricProvider> = builtin_metric(&cfg.metric, cfg.n)?;
            let seeds: Vec<u64> = (*seed..*seed + *trials).collect();
            let outcomes = run_trials(g, &cfg.solver, *eps, &seeds)?;
            let valid: Vec<_> = outcomes.iter().filter_map(TrialOutcome::record).collect();
            let ambiguous = valid
                .iter()
                .any(|r| r.before.ambiguous || r.after.ambiguous);
            let body = match cfg.format {
                Format::Csv => report::trials_csv(&outcomes),
                Format::Json => document(
                    name,
                    json!({
                        "metric": cfg.metric,
                        "n": cfg.n,
                        "eps": *eps,
                        "seed": *seed,
                        "trials": outcomes.iter().map(report::trial_outcome_json).collect::<Vec<_>>(),
                        "summary": {
                            "trials": outcomes.len(),
                            "valid": valid.len(),
                            "invalid": outcomes.len() - valid.len(),
                            "after_nullity_zero": valid.iter().filter(|r| r.after.nullity == 0).count(),
                            "ambiguous": valid.iter().filter(|r| r.before.ambiguous || r.after.ambiguous).count(),
                        },
                    }),
                ),
            };
            Ok(Rendered { body, ambiguous })
        }
        Command::InvarianceCheck { factor } => {
            let g = builtin_metric(&cfg.metric, cfg.n)?;
            let (base, scaled) =
                crate::perturb::conformal_invariance_check(g, factor, &cfg.solver)?;
            let ambiguous = base.ambiguous || scaled.ambiguous;
            let body = match cfg.format {
                Format::Csv => report::ckv_reports_csv(&[("base", &base), ("scaled", &scaled)]),
                Format::Json => document(
                    name,
                    json!({
                        "factor": factor,
                        "base": report::ckv_report_json(&base),
                        "scaled": report::ckv_report_json(&scaled),
                        "equal": base.nullity == scaled.nullity,
                    }),
                ),
            };
            Ok(Rendered { body, ambiguous })
        }
    }
}

fn exit_code_for(err: &CkvError) -> i32 {
    if err.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_INVALID
    }
}

/// Render and write the report; returns the process exit status.
pub fn run(cfg: &RunConfig) -> i32 {
    let rendered = match render(cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("ckv-lab {}: {e}", cfg.command.name());
            return exit_code_for(&e);
        }
    };
    let written = match &cfg.out {
        Some(path) => std::fs::write(path, &rendered.body),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(rendered.body.as_bytes())
        }
    };
    if let Err(e) = written {
        let target = cfg
            .out
            .as_ref()
            .map_or("stdout".to_string(), |p| p.display().to_string());
        eprintln!("ckv-lab: cannot write report to {target}: {e}");
        return EXIT_INVALID;
    }
    if cfg.strict && rendered.ambiguous {
        eprintln!("ckv-lab {}: ambiguous spectrum", cfg.command.name());
        return EXIT_AMBIGUOUS;
    }
    EXIT_OK
}

/// Full entry point: parse, validate, run.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
            let _ = e.print();
            return code;
        }
    };
    match RunConfig::from_cli(cli) {
        Ok(cfg) => run(&cfg),
        Err(e) => {
            eprintln!("ckv-lab: {e}");
            exit_code_for(&e)
        }
    }
}
