//! `brw`: runs configured experiments, convergence tables and built-in checks.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod report;
mod run;
mod selftest;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Config, TableCfg, TableKind, VerifyCfg};
use report::{CliError, Report};
use run::Context;

const THREADS_ENV: &str = "BRW_THREADS";

#[derive(Debug, Parser)]
#[command(name = "brw", version, about = "Branching random walk experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML experiment file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default `brw-out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; falls back to the config, then to BRW_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Rational arithmetic where supported.
    #[arg(long, global = true)]
    exact: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment described by --config.
    Run,
    /// Convergence table of scaled exact values against their limit.
    Table {
        #[arg(long, value_enum)]
        kind: Option<TableKind>,
        #[arg(long, allow_hyphen_values = true)]
        theta: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<u64>>,
        #[arg(long, value_delimiter = ',')]
        x_list: Option<Vec<f64>>,
        #[arg(long)]
        t: Option<f64>,
    },
    /// Exact Feynman-Kac and martingale sweep.
    Verify {
        #[arg(long)]
        m_max: Option<usize>,
        #[arg(long)]
        x_cap: Option<i64>,
    },
    /// Quick built-in checks.
    Selftest,
}

fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| {
            CliError::field(
                THREADS_ENV,
                format!("{THREADS_ENV} must be a positive integer, got `{v}`"),
            )
        }),
        Err(_) => Ok(None),
    }
}

fn context(common: &Common) -> Result<Context, CliError> {
    let mut config = match &common.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if common.seed.is_some() {
        config.seed = common.seed;
    }
    if common.out.is_some() {
        config.out = common.out.clone();
    }
    if common.threads.is_some() {
        config.threads = common.threads;
    }
    let threads = match config.threads {
        Some(t) => Some(t),
        None => threads_from_env()?,
    };
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::field("threads", "threads must be positive"));
        }
        // fails only if a pool already exists, which cannot happen this early
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let exact = common.exact || config.exact.unwrap_or(false);
    let out = config.out.clone().unwrap_or_else(|| PathBuf::from("brw-out"));
    Ok(Context { config, out, exact })
}

fn dispatch(cli: Cli) -> Result<u8, CliError> {
    let mut ctx = context(&cli.common)?;
    match cli.command {
        Command::Run => {
            if cli.common.config.is_none() {
                return Err(CliError::field("config", "`run` needs --config"));
            }
            run::run(&ctx)
        }
        Command::Table {
            kind,
            theta,
            n_list,
            x_list,
            t,
        } => {
            let base = ctx.config.table.clone();
            let kind = kind
                .or(base.as_ref().map(|b| b.kind))
                .ok_or_else(|| CliError::field("table.kind", "field `table.kind` is required"))?;
            let tc = TableCfg {
                kind,
                theta: theta.or(base.as_ref().map(|b| b.theta)).unwrap_or(0.0),
                n_list: n_list
                    .or(base.as_ref().map(|b| b.n_list.clone()))
                    .ok_or_else(|| CliError::field("table.n_list", "field `table.n_list` is required"))?,
                x_list: x_list
                    .or(base.as_ref().map(|b| b.x_list.clone()))
                    .ok_or_else(|| CliError::field("table.x_list", "field `table.x_list` is required"))?,
                t: t.or(base.as_ref().and_then(|b| b.t)),
                dx: base.as_ref().map(|b| b.dx).unwrap_or(0.01),
            };
            ctx.config.table = Some(tc.clone());
            table::convergence_table(&ctx, &tc)
        }
        Command::Verify { m_max, x_cap } => {
            let mut vc: VerifyCfg = ctx.config.verify.clone().unwrap_or_default();
            if let Some(m) = m_max {
                vc.m_max = m;
            }
            if let Some(x) = x_cap {
                vc.x_cap = x;
            }
            ctx.config.verify = Some(vc.clone());
            let mut report = Report::new(&ctx.out, "verify")?;
            let resolved = run::verify(&ctx, &vc, &mut report)?;
            report.write_json("manifest.json", &ctx.manifest(resolved))?;
            report.finish()
        }
        Command::Selftest => selftest::selftest(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{}", e.diagnostic());
            ExitCode::from(e.status)
        }
    }
}
