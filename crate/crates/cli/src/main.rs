mod artifacts;
mod commands;
mod fail;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::Context;
use crate::fail::CliResult;

/// Trim, linearise, analyse and redesign the controllers of a VSM-controlled DFIG wind farm.
#[derive(Parser)]
#[command(name = "vsmfarm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Farm configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Controller set; the pole-placement baseline when omitted.
    #[arg(long)]
    controllers: Option<PathBuf>,
    /// Loop targets; those of the configuration when omitted.
    #[arg(long)]
    specs: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Stage label recorded in tables and the manifest.
    #[arg(long, default_value = "custom")]
    stage_label: String,
}

#[derive(Subcommand)]
enum Command {
    /// Pole-placement controllers and their single-loop margins.
    Baseline(Common),
    /// Steady-state operating point.
    Trim(Common),
    /// State-space model at the operating point.
    Linearize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        op: Option<PathBuf>,
    },
    /// Phase margins and crossover frequencies of every loop.
    Margins {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        op: Option<PathBuf>,
        /// Each loop against its design plant, ignoring coupling.
        #[arg(long)]
        decoupled: bool,
        /// Also write S, T, G, P and C of every loop.
        #[arg(long)]
        bode: bool,
    },
    /// Interaction matrix, influence indices and redesign order.
    Interact {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        op: Option<PathBuf>,
    },
    /// Coordinated loop-shaping redesign.
    Redesign {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        op: Option<PathBuf>,
        /// Loop order, one id per line; derived from interaction when omitted.
        #[arg(long)]
        sequence: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        iterations: usize,
    },
    /// Nonlinear time-domain simulation.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// `pref_step`, `voltage_dip` or a scenario file.
        #[arg(long)]
        scenario: String,
        /// Second controller set, overlaid with `trd_`/`frd_` prefixes.
        #[arg(long)]
        compare: Option<PathBuf>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        tf: Option<f64>,
    },
    /// Every stage from the baseline to the large-signal comparison.
    ReproducePaper {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        specs: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2)]
        iterations: usize,
        #[arg(long)]
        dt: Option<f64>,
    },
}

fn context(c: &Common) -> CliResult<Context> {
    Context::load(&c.config, c.controllers.as_deref(), c.specs.as_deref())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Baseline(c) => commands::baseline(&context(&c)?, &c.out, &c.stage_label),
        Command::Trim(c) => commands::trim(&context(&c)?, &c.out, &c.stage_label),
        Command::Linearize { common: c, op } => {
            commands::linearize(&mut context(&c)?, op.as_deref(), &c.out, &c.stage_label)
        }
        Command::Margins { common: c, op, decoupled, bode } => {
            commands::margins(&mut context(&c)?, op.as_deref(), decoupled, bode, &c.out, &c.stage_label)
        }
        Command::Interact { common: c, op } => {
            commands::interact(&mut context(&c)?, op.as_deref(), &c.out, &c.stage_label)
        }
        Command::Redesign { common: c, op, sequence, iterations } => commands::redesign(
            &mut context(&c)?,
            op.as_deref(),
            sequence.as_deref(),
            iterations,
            &c.out,
            &c.stage_label,
        ),
        Command::Simulate { common: c, scenario, compare, dt, tf } => commands::simulate(
            &mut context(&c)?,
            compare.as_deref(),
            &scenario,
            dt,
            tf,
            &c.out,
            &c.stage_label,
        ),
        Command::ReproducePaper { config, specs, out, iterations, dt } => {
            let mut ctx = Context::load(&config, None, specs.as_deref())?;
            commands::reproduce(&mut ctx, iterations, dt, &out)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
