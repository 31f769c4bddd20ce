//! xlab: batch front-end for the operator library.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or config error.

mod commands;
mod config;
mod output;

use clap::{Args, Parser, Subcommand};
use config::{OutputFormat, RunConfig, ToleranceConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "xlab",
    version,
    about = "Rearrangement calculus, operator evaluation, and inequality replay"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Screen a weight description against the admissibility conditions.
    CheckPhi(RunArgs),
    /// Compute the decreasing rearrangement of a function literal.
    Rearrange(RunArgs),
    /// Evaluate one norm of a function literal.
    Norm(RunArgs),
    /// Tabulate the operator triple (P, Q, R) over a grid.
    Apply(RunArgs),
    /// Replay one inequality suite and report the worst ratio.
    Verify {
        /// One of: char-bound | gh | pgqg | forward | converse | corollary |
        /// remark | zygmund | lemma-identity | lemma-infimum | dilation
        suite: String,
        #[command(flatten)]
        args: RunArgs,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format (default json).
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// Family seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Absolute quadrature tolerance override.
    #[arg(long)]
    tol_abs: Option<f64>,
    /// Relative quadrature tolerance override.
    #[arg(long)]
    tol_rel: Option<f64>,
    /// Print the fully resolved configuration instead of running.
    #[arg(long)]
    dump_config: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match real_main(cli) {
        Ok(true) => ExitCode::from(0),
        Ok(false) => ExitCode::from(1),
        Err(message) => {
            eprintln!("xlab: {message}");
            ExitCode::from(2)
        }
    }
}

fn real_main(cli: Cli) -> Result<bool, String> {
    init_thread_pool()?;
    let (name, suite, args) = match &cli.command {
        Command::CheckPhi(a) => ("check-phi", None, a),
        Command::Rearrange(a) => ("rearrange", None, a),
        Command::Norm(a) => ("norm", None, a),
        Command::Apply(a) => ("apply", None, a),
        Command::Verify { suite, args } => ("verify", Some(suite.as_str()), args),
    };

    let mut cfg = load_config(args.config.as_deref())?;
    apply_overrides(&mut cfg, args)?;

    let canonical = match suite {
        Some(s) => format!("verify {s}"),
        None => name.to_owned(),
    };
    if let Some(prev) = &cfg.command {
        if prev != &canonical {
            return Err(format!(
                "config was written for `{prev}` but this invocation is `{canonical}`"
            ));
        }
    }
    cfg.command = Some(canonical);
    cfg.validate()?;

    if args.dump_config {
        let body = output::to_json(&cfg)?;
        write_body(&cfg.out, body)?;
        return Ok(true);
    }

    let outcome = commands::run(name, suite, &cfg)?;
    write_body(&cfg.out, outcome.body)?;
    Ok(outcome.passed)
}

fn load_config(path: Option<&std::path::Path>) -> Result<RunConfig, String> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let raw = std::fs::read_to_string(p)
                .map_err(|e| format!("cannot read config {}: {e}", p.display()))?;
            serde_json::from_str(&raw).map_err(|e| format!("config {}: {e}", p.display()))
        }
    }
}

fn apply_overrides(cfg: &mut RunConfig, args: &RunArgs) -> Result<(), String> {
    if let Some(seed) = args.seed {
        cfg.family.get_or_insert_with(Default::default).seed = Some(seed);
    }
    if args.tol_abs.is_some() || args.tol_rel.is_some() {
        let base = cfg.tolerances.unwrap_or(ToleranceConfig {
            abs: 1e-10,
            rel: 1e-8,
        });
        cfg.tolerances = Some(ToleranceConfig {
            abs: args.tol_abs.unwrap_or(base.abs),
            rel: args.tol_rel.unwrap_or(base.rel),
        });
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    if let Some(format) = args.format {
        cfg.format = Some(format);
    }
    Ok(())
}

/// Honor XLAB_THREADS before any parallel work; results do not depend on
/// the pool size, only throughput does.
fn init_thread_pool() -> Result<(), String> {
    let Ok(raw) = std::env::var("XLAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .map_err(|_| format!("XLAB_THREADS = {raw:?} is not a positive integer"))?;
    if threads == 0 {
        return Err("XLAB_THREADS must be at least 1".into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| format!("thread pool: {e}"))
}

fn write_body(out: &Option<PathBuf>, body: String) -> Result<(), String> {
    match out {
        Some(path) => {
            std::fs::write(path, body).map_err(|e| format!("cannot write {}: {e}", path.display()))
        }
        None => {
            print!("{body}");
            Ok(())
        }
    }
}
