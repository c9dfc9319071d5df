//! `ews-sdr`: sizing, BER curves, power tables and closed-loop simulation for
//! an energy-aware solar-powered SDR link.
//!
//! Every subcommand prints CSV (or an aligned table) on stdout. Exit status is
//! 0 on success, 1 on I/O failure and 2 on invalid input or configuration.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ews_sdr::solar::PanelRounding;

mod commands;
mod config;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Invalid(#[from] ews_sdr::Error),
    #[error("{0}")]
    Usage(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) | CliError::Invalid(_) | CliError::Usage(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "ews-sdr",
    version,
    about = "Energy-aware adaptive M-PSK link toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum RoundingArg {
    Ceiling,
    NearestDown,
}

impl From<RoundingArg> for PanelRounding {
    fn from(r: RoundingArg) -> Self {
        match r {
            RoundingArg::Ceiling => PanelRounding::Ceiling,
            RoundingArg::NearestDown => PanelRounding::NearestDown,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Size the battery bank and PV array for the configured load.
    Size {
        #[arg(short, long)]
        config: Option<PathBuf>,
        /// Emit `field,value,unit` CSV instead of a table.
        #[arg(long)]
        csv: bool,
        /// Override the panel-count rounding policy.
        #[arg(long, value_enum)]
        rounding: Option<RoundingArg>,
    },
    /// Tabulate BER against Eb/N0 for M-PSK over AWGN.
    Ber {
        /// Comma-separated orders, e.g. `bpsk,qpsk,8psk`. Empty for none.
        #[arg(long, default_value = "qpsk,8psk,16psk,32psk,64psk")]
        mods: String,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        snr_start: f64,
        #[arg(long, default_value_t = 30.0, allow_negative_numbers = true)]
        snr_stop: f64,
        #[arg(long, default_value_t = 0.5)]
        snr_step: f64,
        /// Also run a Monte Carlo estimate with this many symbols per point.
        #[arg(long, value_name = "SYMBOLS")]
        monte_carlo: Option<u64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Split Monte Carlo over this many seeded sub-streams in parallel.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Tabulate transmitter current draw over a gain × power grid.
    Power {
        #[arg(short, long)]
        config: Option<PathBuf>,
        /// Comma-separated gains in dB.
        #[arg(long, default_value = "0,10,20,30")]
        gains: String,
        #[arg(long, default_value_t = 0.0)]
        p_start: f64,
        #[arg(long, default_value_t = 1.0)]
        p_stop: f64,
        #[arg(long, default_value_t = 0.1)]
        p_step: f64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run the closed-loop simulation and write its time series.
    Simulate {
        #[arg(short, long)]
        config: Option<PathBuf>,
        /// CSV destination; stdout when omitted. The summary goes to stderr.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Print the embedded default configuration.
    Defaults,
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Size {
            config,
            csv,
            rounding,
        } => commands::size(config.as_deref(), csv, rounding.map(Into::into)),
        Command::Ber {
            mods,
            snr_start,
            snr_stop,
            snr_step,
            monte_carlo,
            seed,
            workers,
            out,
        } => commands::ber(&commands::BerArgs {
            mods: commands::parse_mods(&mods)?,
            grid: commands::linear_grid("snr", snr_start, snr_stop, snr_step)?,
            monte_carlo,
            seed,
            workers,
            out,
        }),
        Command::Power {
            config,
            gains,
            p_start,
            p_stop,
            p_step,
            out,
        } => commands::power(
            config.as_deref(),
            &commands::parse_list("gains", &gains)?,
            &commands::linear_grid("p", p_start, p_stop, p_step)?,
            out.as_deref(),
        ),
        Command::Simulate { config, out } => commands::simulate(config.as_deref(), out.as_deref()),
        Command::Defaults => {
            print!("{}", config::ConfigDocument::default().to_toml());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ews-sdr: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
