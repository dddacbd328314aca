mod cmd;
mod config;
mod error;
mod svg;
mod system;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::Config;

#[derive(Parser)]
#[command(
    name = "millum",
    version,
    about = "Imaging kernels, effective PSF synthesis, stability audits and resolution-limit constructions for multi-illumination microscopy"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML config file; keys override the preset, flags override both
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides [output] dir)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// RNG seed (overrides [run] seed)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Built-in system preset
    #[arg(long, global = true, value_parser = ["sim", "confocal", "smlm", "beam"])]
    preset: Option<String>,
    /// Override any config key, e.g. --set adversarial.n=4
    #[arg(long = "set", global = true)]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Imaging kernel matrix, effective PSF profile/spectrum and cutoffs
    Kernel,
    /// Monte Carlo bandpass stability audit over noise/pattern perturbations
    Stability,
    /// Construct and certify a worst-case indistinguishable source pair
    Adversarial,
    /// Closed-form separation limits and illumination incoherence
    Limits,
    /// Discrete-kernel quadrature convergence table
    Quadrature,
}

fn main() {
    let cli = Cli::parse();
    let cfg = match Config::load(
        cli.preset.as_deref(),
        cli.config.as_deref(),
        &cli.set,
        cli.out.as_deref(),
        cli.seed,
    ) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    };
    let result = match cli.command {
        Command::Kernel => cmd::cmd_kernel(&cfg),
        Command::Stability => cmd::cmd_stability(&cfg),
        Command::Adversarial => cmd::cmd_adversarial(&cfg),
        Command::Limits => cmd::cmd_limits(&cfg),
        Command::Quadrature => cmd::cmd_quadrature(&cfg),
    };
    if let Err(e) = result {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
