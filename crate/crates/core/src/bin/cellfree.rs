use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cellfree::cost::CostConfig;
use cellfree::error::Result;
use cellfree::harness::{preset, run_experiment, summarize, write_cost_csv, ExperimentSpec, PRESETS};

#[derive(Parser)]
#[command(name = "cellfree", about = "Cell-free massive MIMO downlink simulator with multi-antenna users")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep and write one CSV row per (grid point, drop, user, method, bound).
    Run {
        /// Built-in sweep, see `list-presets`.
        #[arg(long, conflicts_with = "config", required_unless_present = "config")]
        preset: Option<String>,
        /// JSON experiment spec instead of a preset.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Override the number of network drops.
        #[arg(long)]
        drops: Option<usize>,
        /// Override the number of channel blocks per drop.
        #[arg(long)]
        blocks: Option<usize>,
        /// Print per-curve means to stderr.
        #[arg(long)]
        summary: bool,
    },
    /// Complexity and fronthaul counts for a JSON configuration.
    Cost {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the built-in presets.
    ListPresets,
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { preset: name, config, seed, out, workers, drops, blocks, summary } => {
            let mut spec = match (name, config) {
                (Some(name), _) => preset(&name)?,
                (None, Some(path)) => ExperimentSpec::from_json(&std::fs::read_to_string(path)?)?,
                (None, None) => unreachable!("clap requires one of --preset and --config"),
            };
            spec.seed = seed.unwrap_or(spec.seed);
            spec.n_drops = drops.unwrap_or(spec.n_drops);
            spec.n_blocks = blocks.unwrap_or(spec.n_blocks);
            let table = run_experiment(&spec, workers)?;
            table.write_csv(output(out.as_ref())?)?;
            for f in &table.failures {
                eprintln!("skipped {}={}: {}", spec.param, f.param_value, f.message);
            }
            if summary {
                for p in summarize(&table.rows) {
                    eprintln!(
                        "{:22} {:9} {}={:<6} mean {:.3} +- {:.3}  median {:.3}",
                        p.method.tag(),
                        p.bound.tag(),
                        spec.param,
                        p.param_value,
                        p.mean,
                        p.std_err,
                        p.median
                    );
                }
            }
        }
        Command::Cost { config, out } => {
            let cfg: CostConfig = serde_json::from_str(&std::fs::read_to_string(config)?)?;
            write_cost_csv(&[cfg], output(out.as_ref())?)?;
        }
        Command::ListPresets => {
            for (name, about) in PRESETS {
                println!("{name:6} {about}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
