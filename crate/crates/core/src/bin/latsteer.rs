use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use latsteer::cli::{execute, Command, Overrides};
use latsteer::controller::Variant;

/// Lateral path-following with an offset sensor: simulation and stability analysis.
#[derive(Parser)]
#[command(name = "latsteer", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// Config file, or `preset:<name>` for a built-in one.
    #[arg(long)]
    config: String,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Assert that the run uses no random numbers (always true; recorded in the manifest).
    #[arg(long)]
    seedless: bool,
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    common: Common,
    /// Override the integration step in seconds.
    #[arg(long)]
    dt: Option<f64>,
    /// Override the controller variant (full, naive, unwrapped, linear).
    #[arg(long)]
    variant: Option<Variant>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one closed-loop scenario.
    Simulate(SimArgs),
    /// Run a scenario once per controller variant and compare.
    Compare(SimArgs),
    /// Scan the (k1, k2) plane for stability and peak amplification.
    StabilityMap(Common),
    /// Amplification ratio against frequency for the configured gain points.
    FreqResponse(Common),
    /// Run every built-in preset and write the sensor-offset term table.
    FigsRepro {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        seedless: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (cmd, out, ov) = match &cli.command {
        Cmd::Simulate(a) => (
            Command::Simulate(&a.common.config),
            &a.common.out,
            Overrides {
                dt: a.dt,
                variant: a.variant,
            },
        ),
        Cmd::Compare(a) => (
            Command::Compare(&a.common.config),
            &a.common.out,
            Overrides {
                dt: a.dt,
                variant: a.variant,
            },
        ),
        Cmd::StabilityMap(c) => (
            Command::StabilityMap(&c.config),
            &c.out,
            Overrides::default(),
        ),
        Cmd::FreqResponse(c) => (
            Command::FreqResponse(&c.config),
            &c.out,
            Overrides::default(),
        ),
        Cmd::FigsRepro { out, dt, .. } => (
            Command::FigsRepro,
            out,
            Overrides {
                dt: *dt,
                variant: None,
            },
        ),
    };
    let (manifest, result) = execute(cmd, out, ov);
    match result {
        Ok(()) => {
            for p in &manifest.outputs {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
