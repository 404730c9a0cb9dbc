//! Runs a built-in sweep at reduced Monte Carlo effort and prints the
//! curves; the full CSV goes to the given path.
//!
//! cargo run --release --example run_preset -- fig8 /tmp/fig8.csv

use std::fs::File;

use cellfree::harness::{preset, run_experiment, summarize};

fn main() -> cellfree::error::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "fig8".to_string());
    let out = args.next();

    let mut spec = preset(&name)?;
    spec.n_drops = 3;
    spec.n_blocks = 150;
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let table = run_experiment(&spec, workers)?;
    if let Some(path) = out {
        table.write_csv(File::create(&path)?)?;
        println!("{} rows written to {path}", table.rows.len());
    }
    for f in &table.failures {
        println!("skipped {}={}: {}", spec.param, f.param_value, f.message);
    }
    for p in summarize(&table.rows) {
        println!(
            "{:22} {:9} {}={:<5} mean {:6.3}  sum {:7.3}",
            p.method.tag(),
            p.bound.tag(),
            spec.param,
            p.param_value,
            p.mean,
            p.mean_sum_se
        );
    }
    Ok(())
}
