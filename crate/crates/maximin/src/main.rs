use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use maximin::error::{CliError, EXIT_CONFIG};
use maximin::experiments::{self, output_path, write_table};
use maximin::ExperimentConfig;

/// Maximin-secure Shapley allocation: exact values, protocol simulation and
/// sampling-complexity experiments.
///
/// Settings come from an optional `key = value` file (`--config`) and are
/// overridden by flags. Output is CSV, written to `--output`, to
/// `$MAXIMIN_OUT_DIR/<command>.csv`, or to standard output.
///
/// Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 compute
/// cap reached (stopping-rule hard cap, DP memory cap, exhausted R scan).
#[derive(Parser, Debug)]
#[command(name = "maximin", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Shapley values, maximum marginal contributions and Gamma per player.
    Shapley(Settings),
    /// Run allocations and emit per-sample reward decompositions.
    Simulate(Settings),
    /// Smallest R giving eps-expected maximin security against the optimal adversary.
    MinSamples(Settings),
    /// Empirical CDF of the honest player's multiplicative error over M runs.
    Cdf(Settings),
    /// Boundary values E_worst[T][N][c] of the optimal-adversary table.
    DpTable(Settings),
}

macro_rules! settings {
    ($($field:ident : $help:literal),* $(,)?) => {
        #[derive(clap::Args, Debug)]
        struct Settings {
            /// Configuration file of `key = value` lines.
            #[arg(long, value_name = "FILE")]
            config: Option<PathBuf>,
            /// Run workloads above desk scale.
            #[arg(long)]
            full_scale: bool,
            /// Any configuration key, as KEY=VALUE (repeatable).
            #[arg(long = "set", value_name = "KEY=VALUE")]
            set: Vec<String>,
            $(
                #[doc = $help]
                #[arg(long, value_name = "VALUE")]
                $field: Option<String>,
            )*
        }

        impl Settings {
            fn flags(&self) -> Result<Vec<(String, String)>, CliError> {
                let mut out: Vec<(String, String)> = Vec::new();
                $(
                    if let Some(v) = &self.$field {
                        out.push((stringify!($field).to_string(), v.clone()));
                    }
                )*
                if self.full_scale {
                    out.push(("full_scale".into(), "true".into()));
                }
                for kv in &self.set {
                    let (k, v) = kv.split_once('=').ok_or_else(|| {
                        CliError::Config(maximin::config::ConfigError::Syntax {
                            origin: maximin::config::Origin::Flag,
                            message: format!("--set expects KEY=VALUE, got `{kv}`"),
                        })
                    })?;
                    out.push((k.trim().to_string(), v.trim().to_string()));
                }
                Ok(out)
            }
        }
    };
}

settings! {
    game: "lb | pair | max-gamma | hypergraph",
    n: "Number of players (for a hypergraph: total after padding)",
    honest: "Honest player id (default 0)",
    partner: "Pair game's second special player",
    hypergraph: "Hypergraph file for the edge synergy game",
    padding: "Isolated players appended to the hypergraph",
    protocol: "naive | seq",
    adversary: "passive | cyclic | block | dp | always",
    budget: "known | unknown | rate",
    c: "Violation budget C",
    f: "Violation rate f",
    eps: "Target multiplicative error",
    delta: "Failure probability",
    gamma: "Gamma used by the formulas (default: the game's)",
    stopping: "fixed | known | unknown | adaptive",
    r: "Number of P-samples for fixed stopping",
    m: "Number of independent runs",
    seed: "64-bit master seed",
    output: "Output CSV path",
    punishment: "count-only | perpetual",
    greedy: "Block attack seizes every opportunity (true | false)",
    max_r: "Largest R scanned by min-samples",
    sweep: "min-samples sweep, e.g. c:1,2,3 or eps:0.05,0.1 or n:8,12",
    jobs: "Worker threads",
    hard_cap: "Hard cap on P-samples for the unknown-budget rule",
    per_sample: "Emit per-sample rows (default: only when m = 1)",
    memory_cap: "Byte cap for optimal-adversary tables",
}

fn run(cli: Cli) -> Result<Option<CliError>, CliError> {
    let (name, settings) = match &cli.command {
        Command::Shapley(s) => ("shapley", s),
        Command::Simulate(s) => ("simulate", s),
        Command::MinSamples(s) => ("min-samples", s),
        Command::Cdf(s) => ("cdf", s),
        Command::DpTable(s) => ("dp-table", s),
    };
    let flags = settings.flags()?;
    let cfg = ExperimentConfig::resolve(
        settings.config.as_deref(),
        flags.iter().map(|(k, v)| (k.as_str(), v.as_str())),
    )?;
    let mut late = None;
    let table = match cli.command {
        Command::Shapley(_) => experiments::cmd_shapley(&cfg)?,
        Command::Simulate(_) => experiments::cmd_simulate(&cfg)?,
        Command::MinSamples(_) => {
            let (t, err) = experiments::cmd_min_samples(&cfg)?;
            late = err;
            t
        }
        Command::Cdf(_) => experiments::cmd_cdf(&cfg)?,
        Command::DpTable(_) => experiments::cmd_dp_table(&cfg)?,
    };
    write_table(&table, output_path(&cfg, name).as_deref())?;
    Ok(late)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(e)) | Err(e) => {
            eprintln!("maximin: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
