use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use twocomp_harness::{run_command, ExperimentConfig, RunOptions};

#[derive(Parser)]
#[command(name = "twocomp", version, about = "Particle ensembles, PDE solves and diagnostics for the two-component system")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the particle ensemble and write smoothed densities.
    Simulate(Common),
    /// Solve the cross-diffusion PDE.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Also write the Maxwell-Stefan form of the solution.
        #[arg(long)]
        ms_form: bool,
        /// D12 of the Maxwell-Stefan form (default keeps concentrations in the simplex).
        #[arg(long, requires = "ms_form")]
        ms_d12: Option<f64>,
    },
    /// Compare ensemble-mean densities with the PDE solution.
    Compare(Common),
    /// Martingale, quadratic-variation and replacement diagnostics.
    Diagnose(Common),
    /// Compare over the configured grid of particle counts.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: `outputs.directory` of the config).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Master seed (default: `particles.seed` of the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Write SVG plots.
    #[arg(long)]
    plot: bool,
    /// Leave wall-clock timings out of the manifest.
    #[arg(long)]
    omit_timings: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common, ms_form, ms_d12) = match cli.command {
        Command::Simulate(c) => ("simulate", c, false, None),
        Command::Solve { common, ms_form, ms_d12 } => ("solve", common, ms_form, ms_d12),
        Command::Compare(c) => ("compare", c, false, None),
        Command::Diagnose(c) => ("diagnose", c, false, None),
        Command::Sweep(c) => ("sweep", c, false, None),
    };
    let cfg = match ExperimentConfig::load(&common.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let opts = RunOptions {
        out_dir: common.out_dir,
        seed: common.seed,
        threads: common.threads,
        plot: common.plot,
        omit_timings: common.omit_timings,
        ms_form,
        ms_d12,
    };
    match run_command(name, &cfg, &opts) {
        Ok(out) => {
            for line in &out.summary {
                println!("{line}");
            }
            println!("wrote {} files to {}", out.manifest.files.len() + 1, out.dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
