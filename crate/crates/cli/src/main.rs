//! `schmeans`: CSV-emitting experiment runner.
//!
//! Exit status: 0 when every declared check passes, 1 when a check fails
//! (the table is still written), 2 on configuration or input errors.

mod commands;
mod config;
mod output;
mod selftest;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{CmdError, Outcome};
use config::{ConfigError, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "schmeans", version, about = "Experiments on Schrödinger means along time sequences")]
#[command(after_help = config::schema_help())]
struct Cli {
    /// TOML config file (keys as listed below, tables or dotted keys).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one config key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output CSV path (stdout when absent).
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct FieldArgs {
    /// Field file (`N h count` header, then `ξ… re im` lines).
    #[arg(long)]
    field: Option<String>,
    /// Scale λ of the generated random annulus field.
    #[arg(long)]
    lambda: Option<String>,
    /// Number of frequencies of the generated field.
    #[arg(long)]
    count: Option<String>,
    /// Keep only the dyadic annulus k.
    #[arg(long)]
    annulus: Option<String>,
    /// Master seed.
    #[arg(long)]
    seed: Option<String>,
    /// Grid points per axis on [-1, 1]^N.
    #[arg(long)]
    grid: Option<String>,
}

impl FieldArgs {
    fn overrides(&self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("fields.file", self.field.clone()),
            ("fields.lambda", self.lambda.clone()),
            ("fields.count", self.count.clone()),
            ("fields.annulus", self.annulus.clone()),
            ("seed", self.seed.clone()),
            ("fields.grid", self.grid.clone()),
        ]
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate e^{itP(D)} f on a grid over [-1, 1]^N.
    Propagate {
        #[command(flatten)]
        field: FieldArgs,
        /// Time t.
        #[arg(long)]
        t: Option<String>,
        /// Symbol: nonelliptic, nonelliptic3+, nonelliptic3-, elliptic2, elliptic3.
        #[arg(long)]
        symbol: Option<String>,
    },
    /// L²(B(0,1)) norm of the maximal function over a time interval.
    Maximal {
        #[command(flatten)]
        field: FieldArgs,
        /// Interval `a,b` inside [0, 1].
        #[arg(long)]
        interval: Option<String>,
        #[arg(long)]
        symbol: Option<String>,
    },
    /// Weak Lorentz quasi-norm of a time sequence at several depths.
    Lorentz {
        /// `power:a=A[,length=N]` or `csv:PATH`.
        #[arg(long)]
        sequence: Option<String>,
        #[arg(long)]
        r: Option<String>,
        /// Comma-separated depths.
        #[arg(long)]
        depths: Option<String>,
    },
    /// Dyadic time blocks A_l and their normalized sizes.
    Blocks {
        #[arg(long)]
        sequence: Option<String>,
        #[arg(long)]
        r: Option<String>,
        #[arg(long)]
        max_level: Option<String>,
    },
    /// Local maximal estimate on short intervals, random annulus data.
    Thm14 {
        /// Comma-separated λ list.
        #[arg(long)]
        lambda: Option<String>,
        /// Interval exponents e with |I| = λ^{-e}.
        #[arg(long)]
        intervals: Option<String>,
        #[arg(long)]
        trials: Option<String>,
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        seed: Option<String>,
    },
    /// Maximal estimate over (0, 1).
    GlobalMax {
        #[arg(long)]
        lambda: Option<String>,
        #[arg(long)]
        trials: Option<String>,
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        seed: Option<String>,
    },
    /// Three-term split of the sequential maximal function.
    DecomposeTrace {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        sequence: Option<String>,
        #[arg(long)]
        s: Option<String>,
        #[arg(long)]
        depth: Option<String>,
    },
    /// Tail errors sup_{n ≥ m} |e^{it_n P(D)} f − f| for several m.
    Converge {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        sequence: Option<String>,
        /// Comma-separated tail starts.
        #[arg(long)]
        tails: Option<String>,
        #[arg(long)]
        depth: Option<String>,
        #[arg(long)]
        symbol: Option<String>,
    },
    /// Divergence construction, one stage per bad scale.
    Counterexample {
        #[arg(long)]
        s: Option<String>,
        #[arg(long)]
        sequence: Option<String>,
        /// Comma-separated candidate scales b.
        #[arg(long)]
        scales: Option<String>,
        /// 2 or 3.
        #[arg(long)]
        dim: Option<String>,
        /// Grid points per axis on U_j.
        #[arg(long)]
        points: Option<String>,
        /// 256 points per axis.
        #[arg(long)]
        dense: bool,
    },
    /// Closed-form checks of every module.
    Selftest,
    /// Run a named experiment (any subcommand above) with its arguments.
    Run {
        experiment: String,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        args: Vec<String>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Propagate { .. } => "propagate",
            Command::Maximal { .. } => "maximal",
            Command::Lorentz { .. } => "lorentz",
            Command::Blocks { .. } => "blocks",
            Command::Thm14 { .. } => "thm14",
            Command::GlobalMax { .. } => "global-max",
            Command::DecomposeTrace { .. } => "decompose-trace",
            Command::Converge { .. } => "converge",
            Command::Counterexample { .. } => "counterexample",
            Command::Selftest => "selftest",
            Command::Run { .. } => "run",
        }
    }

    fn overrides(&self) -> Vec<(&'static str, Option<String>)> {
        match self {
            Command::Propagate { field, t, symbol } => {
                let mut v = field.overrides();
                v.push(("propagator.t", t.clone()));
                v.push(("propagator.symbol", symbol.clone()));
                v
            }
            Command::Maximal { field, interval, symbol } => {
                let mut v = field.overrides();
                v.push(("propagator.interval", interval.clone()));
                v.push(("propagator.symbol", symbol.clone()));
                v
            }
            Command::Lorentz { sequence, r, depths } => vec![
                ("sequences.sequence", sequence.clone()),
                ("sequences.r", r.clone()),
                ("sequences.depths", depths.clone()),
            ],
            Command::Blocks { sequence, r, max_level } => vec![
                ("sequences.sequence", sequence.clone()),
                ("sequences.r", r.clone()),
                ("sequences.max_level", max_level.clone()),
            ],
            Command::Thm14 { lambda, intervals, trials, grid, seed } => vec![
                ("estimates.lambdas", lambda.clone()),
                ("estimates.intervals", intervals.clone()),
                ("estimates.trials", trials.clone()),
                ("estimates.grid", grid.clone()),
                ("seed", seed.clone()),
            ],
            Command::GlobalMax { lambda, trials, grid, seed } => vec![
                ("estimates.lambdas", lambda.clone()),
                ("estimates.global_trials", trials.clone()),
                ("estimates.global_grid", grid.clone()),
                ("seed", seed.clone()),
            ],
            Command::DecomposeTrace { field, sequence, s, depth } => {
                let mut v = field.overrides();
                v.push(("sequences.sequence", sequence.clone()));
                v.push(("estimates.s", s.clone()));
                v.push(("estimates.depth", depth.clone()));
                v
            }
            Command::Converge { field, sequence, tails, depth, symbol } => {
                let mut v = field.overrides();
                v.push(("sequences.sequence", sequence.clone()));
                v.push(("estimates.tails", tails.clone()));
                v.push(("estimates.depth", depth.clone()));
                v.push(("propagator.symbol", symbol.clone()));
                v
            }
            Command::Counterexample { s, sequence, scales, dim, points, dense } => vec![
                ("counterexample.s", s.clone()),
                ("counterexample.sequence", sequence.clone()),
                ("counterexample.scales", scales.clone()),
                ("counterexample.dim", dim.clone()),
                ("counterexample.points", points.clone()),
                ("counterexample.dense", dense.then(|| "true".to_string())),
            ],
            Command::Selftest | Command::Run { .. } => Vec::new(),
        }
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::defaults();
    if let Some(path) = &cli.config {
        cfg.merge_file(path)?;
    }
    for pair in &cli.set {
        cfg.set_pair(pair)?;
    }
    for (key, value) in cli.command.overrides() {
        if let Some(v) = value {
            cfg.set(key, &v)?;
        }
    }
    cfg.set("experiment", cli.command.name())?;
    Ok(cfg)
}

fn execute(command: &Command, cfg: &RunConfig) -> Result<Outcome, CmdError> {
    match command {
        Command::Propagate { .. } => commands::propagate(cfg),
        Command::Maximal { .. } => commands::maximal(cfg),
        Command::Lorentz { .. } => commands::lorentz(cfg),
        Command::Blocks { .. } => commands::blocks(cfg),
        Command::Thm14 { .. } => commands::thm14(cfg),
        Command::GlobalMax { .. } => commands::global_max(cfg),
        Command::DecomposeTrace { .. } => commands::decompose_trace(cfg),
        Command::Converge { .. } => commands::converge(cfg),
        Command::Counterexample { .. } => commands::counterexample(cfg),
        Command::Selftest => {
            let (rows, failures) = selftest::run(cfg.float("selftest.semigroup_tol"))?;
            Ok(Outcome { columns: vec!["check".into(), "value".into(), "pass".into()], rows, failures })
        }
        Command::Run { .. } => unreachable!("run is expanded before execution"),
    }
}

fn init_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("DML_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| format!("DML_THREADS must be a positive integer, got `{raw}`"))?;
    if n == 0 {
        return Err("DML_THREADS must be positive".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

/// Replaces `run <experiment> args…` by the parsed experiment, keeping the
/// outer global options unless the inner ones override them.
fn expand_run(cli: Cli) -> Result<Cli, clap::Error> {
    let Command::Run { experiment, args } = &cli.command else {
        return Ok(cli);
    };
    let argv = std::iter::once("schmeans".to_string()).chain(std::iter::once(experiment.clone())).chain(args.iter().cloned());
    let inner = Cli::try_parse_from(argv)?;
    if matches!(inner.command, Command::Run { .. }) {
        return Err(clap::Error::raw(clap::error::ErrorKind::InvalidSubcommand, "run cannot be nested\n"));
    }
    let mut set = cli.set.clone();
    set.extend(inner.set);
    Ok(Cli { config: inner.config.or(cli.config), set, out: inner.out.or(cli.out), command: inner.command })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse().and_then(expand_run) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    let cfg = match resolve(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let outcome = match execute(&cli.command, &cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let columns: Vec<&str> = outcome.columns.iter().map(String::as_str).collect();
    let bytes = output::render(cli.command.name(), &cfg, &columns, &outcome.rows);
    let written = match &cli.out {
        Some(path) => std::fs::write(path, &bytes).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => std::io::stdout().write_all(&bytes).map_err(|e| e.to_string()),
    };
    if let Err(msg) = written {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    if outcome.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        for f in &outcome.failures {
            eprintln!("FAILED: {f}");
        }
        ExitCode::from(1)
    }
}
