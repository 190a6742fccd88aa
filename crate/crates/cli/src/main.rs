//! `polyreg`: polyhedral norm tools and convex image reconstruction.

mod approx;
mod config;
mod denoise;
mod error;
mod mri;
mod norm;
mod recon;
mod selftest;

use clap::{Parser, Subcommand};
use error::CliResult;
use serde::Serialize;
use serde_json::{Map, Value};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "polyreg", version, about = "Polyhedral norms, proximal solvers and image reconstruction")]
struct Cli {
    /// JSON file with command parameters; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for phantoms, noise, masks and probes
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: polyreg_out)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate and transform polyhedral norms
    #[command(subcommand)]
    Norm(norm::NormCommand),
    /// Approximation error of inscribed polytopes versus vertex count
    Approx(approx::ApproxArgs),
    /// Denoise an image or a noisy phantom
    Denoise(denoise::DenoiseArgs),
    /// Reconstruct from subsampled Fourier measurements
    Mri(mri::MriArgs),
    /// Run the invariant suite
    Selftest(selftest::SelftestArgs),
}

/// Options shared by every command.
pub struct Globals {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl Globals {
    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("polyreg_out"))
    }

    /// Command flags as a JSON object, with the global seed folded in.
    pub fn flags(&self, args: &impl Serialize) -> CliResult<Map<String, Value>> {
        let mut m = match serde_json::to_value(args)? {
            Value::Object(m) => m,
            _ => Map::new(),
        };
        if let Some(s) = self.seed {
            m.insert("seed".into(), Value::from(s));
        }
        Ok(m)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = Globals { config: cli.config, seed: cli.seed, out: cli.out };
    let result = match &cli.command {
        Command::Norm(c) => norm::run(&g, c),
        Command::Approx(a) => approx::run(&g, a),
        Command::Denoise(a) => denoise::run(&g, a),
        Command::Mri(a) => mri::run(&g, a),
        Command::Selftest(a) => selftest::run(&g, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("polyreg: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
