use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pucci_cli::{
    cmd_certify, cmd_dini, cmd_measure, cmd_solve, cmd_sweep, CliError, ExperimentConfig, Outcome, Overrides,
    SweepAxis,
};

/// Boundary-regularity experiments for Pucci extremal equations.
///
/// Relative output directories are placed under $PUCCI_LAB_OUTPUT_ROOT when
/// it is set. Exit status: 0 pass, 2 failed verdict, 1 error.
#[derive(Parser)]
#[command(name = "pucci-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config (JSON).
    config: PathBuf,
    /// Override the grid spacing.
    #[arg(long)]
    h: Option<f64>,
    /// Override the stencil width.
    #[arg(long = "W", alias = "width")]
    width: Option<u32>,
    /// Override the solver tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

impl ConfigArgs {
    fn load(&self) -> Result<(ExperimentConfig, Overrides), CliError> {
        let cfg = ExperimentConfig::load(&self.config)?;
        let overrides = Overrides {
            h: self.h,
            width: self.width,
            tol: self.tol,
        };
        Ok((cfg, overrides))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve the Dirichlet problem and write the field.
    Solve(ConfigArgs),
    /// Run a scenario and judge its growth profile.
    Measure(ConfigArgs),
    /// Run the A_k recursion of the config's certify block.
    Certify {
        config: PathBuf,
    },
    /// Classify a modulus of continuity.
    Dini {
        /// Modulus as JSON, or @path to a JSON file.
        #[arg(long)]
        modulus: String,
        #[arg(long, default_value_t = 1.0)]
        r0: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Repeat a scenario along one axis.
    Sweep {
        #[command(flatten)]
        args: ConfigArgs,
        /// One of h, W, omega_param, a_notch.
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let outcome = match cli.command {
        Command::Solve(args) => {
            let (cfg, o) = args.load()?;
            cmd_solve(&cfg, &o, &mut out)
        }
        Command::Measure(args) => {
            let (cfg, o) = args.load()?;
            cmd_measure(&cfg, &o, &mut out)
        }
        Command::Certify { config } => cmd_certify(&ExperimentConfig::load(&config)?, &mut out),
        Command::Dini { modulus, r0, tol } => {
            let text = match modulus.strip_prefix('@') {
                Some(path) => std::fs::read_to_string(path).map_err(|source| CliError::Read {
                    path: path.into(),
                    source,
                })?,
                None => modulus,
            };
            cmd_dini(&text, r0, tol, &mut out)
        }
        Command::Sweep { args, axis, values } => {
            let (cfg, o) = args.load()?;
            cmd_sweep(&cfg, &o, SweepAxis::parse(&axis)?, &values, &mut out)
        }
    };
    out.flush().ok();
    outcome
}

fn main() -> ExitCode {
    env_logger::init();
    match run(Cli::parse()) {
        Ok(outcome) => ExitCode::from(outcome.exit_code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
