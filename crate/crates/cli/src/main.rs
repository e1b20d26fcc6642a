use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hxreg_cli::{
    cmd_simulate, cmd_synth, cmd_transfer, parse_complex, parse_config, reproduce, Channel, CliError, Context, Mode,
    RunConfig,
};

#[derive(Parser)]
#[command(name = "hxreg", version, about = "Output regulation for a hyperbolic heat-exchanger model")]
struct Cli {
    /// TOML run configuration; defaults to the heat-exchanger scenario.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `simulation.output`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Number of grid points (overrides `plant.n_grid`).
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Suppress informational lines.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate G(s) or G1(s) at one complex frequency.
    Transfer {
        /// Frequency such as `2i` or `0.5-1.5i`.
        #[arg(long, allow_hyphen_values = true)]
        s: String,
        #[arg(long, value_enum, default_value_t = ChannelArg::Actuator)]
        channel: ChannelArg,
    },
    /// Synthesize the regulator and write its profiles.
    Synth,
    /// Simulate one scenario and write the trace.
    Simulate {
        #[arg(long, value_enum, default_value_t = ModeArg::Feedback)]
        mode: ModeArg,
        /// Feedforward only: start from rest with the configured r_w0.
        #[arg(long)]
        unmatched: bool,
    },
    /// Recompute the reference numbers and print a pass/fail table.
    ReproducePaper,
}

#[derive(Clone, Copy, ValueEnum)]
enum ChannelArg {
    Actuator,
    Unit,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Open,
    Feedforward,
    Feedback,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => parse_config(path)?,
        None => RunConfig::default(),
    };
    if cli.grid.is_some_and(|n| n < 2) {
        return Err(CliError::Usage("--grid needs at least 2 points".into()));
    }
    let ctx = Context { config, out_dir: cli.out, grid: cli.grid, quiet: cli.quiet };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Transfer { s, channel } => {
            let channel = match channel {
                ChannelArg::Actuator => Channel::Actuator,
                ChannelArg::Unit => Channel::Unit,
            };
            cmd_transfer(&ctx, parse_complex(&s)?, channel, &mut out)?;
        }
        Command::Synth => {
            cmd_synth(&ctx, &mut out)?;
        }
        Command::Simulate { mode, unmatched } => {
            let mode = match mode {
                ModeArg::Open => Mode::Open,
                ModeArg::Feedforward => Mode::Feedforward,
                ModeArg::Feedback => Mode::Feedback,
            };
            cmd_simulate(&ctx, mode, !unmatched, &mut out)?;
        }
        Command::ReproducePaper => {
            reproduce::cmd_reproduce_paper(&ctx, &mut out)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hxreg: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
