mod commands;
mod config;
mod fail;
mod predict;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "flowfield", version, about = "Conditional flow-matching surrogates for fields on point sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic benchmark dataset as FFD1.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 64)]
        points: usize,
        /// Condition grid, e.g. 20x10.
        #[arg(long, default_value = "20x10")]
        grid: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Convert a long-format CSV into FFD1.
    Import {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Leading condition columns.
        #[arg(long)]
        cond_columns: usize,
        /// Coordinate columns after the point index.
        #[arg(long, default_value_t = 0)]
        coord_columns: usize,
    },
    /// Print a preset run configuration as JSON.
    Preset {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a model and write checkpoints plus a loss trace.
    Train {
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override train.steps.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Generate one field per row of a conditions CSV.
    Sample {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        conditions: PathBuf,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        guidance: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample a split and report metrics for each guidance scale.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
        #[arg(long, default_value = "1,1.5,2,2.5,3,4,6")]
        guidance_sweep: String,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Condition entry holding the angle of attack in degrees.
        #[arg(long)]
        aoa_column: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Finite-difference check of a tiny instance of a preset architecture.
    Gradcheck {
        #[arg(long)]
        preset: String,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },
}

fn run(cli: Cli) -> fail::CliResult {
    match cli.command {
        Command::Synth { out, points, grid, seed } => commands::synth(&out, points, &grid, seed),
        Command::Import { csv, out, cond_columns, coord_columns } => {
            commands::import(&csv, &out, cond_columns, coord_columns)
        }
        Command::Preset { name, out } => commands::preset(&name, out.as_deref()),
        Command::Train { config, preset, data, out, steps } => {
            let rc = match (config, preset) {
                (Some(path), _) => config::load(&path)?,
                (None, Some(name)) => config::preset(&name)?,
                (None, None) => return Err(fail::Failure::usage("train needs --config or --preset")),
            };
            commands::train(rc, &data, &out, steps)
        }
        Command::Sample { checkpoint, conditions, steps, guidance, seed, out } => {
            commands::sample(&checkpoint, &conditions, steps, guidance, seed, &out)
        }
        Command::Evaluate { checkpoint, data, split, guidance_sweep, steps, seed, aoa_column, out } => {
            commands::evaluate(commands::EvalArgs {
                checkpoint: &checkpoint,
                data: &data,
                split: &split,
                sweep: &guidance_sweep,
                steps,
                seed,
                aoa_column,
                out: &out,
            })
        }
        Command::Gradcheck { preset, tolerance } => commands::gradcheck(&preset, tolerance),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::from(fail::OK),
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
