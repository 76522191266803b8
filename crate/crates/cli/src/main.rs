use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::bail;
use clap::{Args, Parser, Subcommand};

use curved_born::experiment::{ExperimentConfig, MSpec, Suite};

mod commands;
mod output;

#[derive(Parser, Debug)]
#[command(name = "curved-born", version, about = "Sequential detection on curved lattice surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long, short)]
    config: PathBuf,
    /// Directory for result files; created if missing.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Override the slicing parameters, e.g. `--m 4,2,1`.
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<i64>>,
    /// Print JSON instead of the text table.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Slice decomposition of the surface for each m.
    Geometry(Common),
    /// Sequential protocol: P(s) and P_det(L).
    Run(Common),
    /// Closed expression for every outcome sequence.
    Closed(Common),
    /// Curved Born probabilities of the patch events.
    Born(Common),
    /// Lower and upper bracket of P_det(L).
    Bounds(Common),
    /// Brackets, sequential and Born values across m; writes sweep.csv.
    Sweep(Common),
    /// Auxiliary-state properties along one outcome branch.
    Trail {
        #[command(flatten)]
        common: Common,
        /// Branch label such as `01|00`; defaults to the most likely branch.
        #[arg(long)]
        branch: Option<String>,
    },
    /// Axiom and protocol checks; exits 1 if any fails.
    Suite {
        #[command(flatten)]
        common: Common,
        /// Which checks to run: axioms, theorem or all.
        #[arg(long)]
        suite: String,
    },
}

fn load(common: &Common) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&common.config)
        .map_err(|e| UsageError(format!("{}: {e}", common.config.display())))?;
    if let Some(ms) = &common.m {
        cfg.m = MSpec::Many(ms.clone());
        cfg.validate().map_err(|e| UsageError(format!("--m: {e}")))?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let (common, result) = match &cli.command {
        Command::Geometry(c) => (c, commands::geometry(&load(c)?)?),
        Command::Run(c) => (c, commands::run(&load(c)?)?),
        Command::Closed(c) => (c, commands::closed(&load(c)?)?),
        Command::Born(c) => (c, commands::born(&load(c)?)?),
        Command::Bounds(c) => (c, commands::bounds(&load(c)?)?),
        Command::Sweep(c) => (c, commands::sweep(&load(c)?)?),
        Command::Trail { common, branch } => (common, commands::trail(&load(common)?, branch.as_deref())?),
        Command::Suite { common, suite } => {
            if suite.trim().is_empty() {
                bail!(UsageError("--suite must name axioms, theorem or all".into()));
            }
            let suite: Suite = suite.parse().map_err(|e: curved_born::Error| UsageError(e.to_string()))?;
            (common, commands::suite(&load(common)?, suite)?)
        }
    };
    output::emit(&result, common.out.as_deref(), common.json)?;
    Ok(if result.failed() { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

/// Bad command-line input; exits with status 2 like clap's own errors.
#[derive(Debug)]
struct UsageError(String);

impl std::error::Error for UsageError {}

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
