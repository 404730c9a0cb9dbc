//! Monte Carlo engine: one job per (grid point, drop), run on a fixed-size
//! thread pool and reassembled in grid order.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::SeedTree;
use crate::sim::{DropContext, EvalOptions};

use super::spec::ExperimentSpec;
use super::table::{GridFailure, ResultRow, ResultTable};

/// Rows of one drop at one grid point.
pub fn run_drop(spec: &ExperimentSpec, g: usize, drop: u64) -> Result<Vec<ResultRow>> {
    let cfg = spec.config_at(g)?;
    let ctx = DropContext::new(&cfg, SeedTree::new(spec.seed).child(drop), spec.pilot_assignment)?;
    let blocks = ctx.sample_blocks(spec.n_blocks)?;
    let opts = EvalOptions { schedule_streams: spec.schedule_streams };
    let mut rows = Vec::with_capacity(spec.methods.len() * spec.bounds.len() * cfg.num_users);
    for &method in &spec.methods {
        let out = ctx.evaluate(method, &blocks, &spec.bounds, opts)?;
        for (b, &bound) in out.report.bounds.iter().enumerate() {
            for (user, &se) in out.report.se[b].iter().enumerate() {
                rows.push(ResultRow {
                    preset: spec.preset.clone(),
                    method,
                    bound,
                    param_name: spec.param.name().to_string(),
                    param_value: spec.grid[g],
                    drop,
                    user,
                    se_bits_per_hz: se,
                    seed: spec.seed,
                    n_blocks: spec.n_blocks,
                });
            }
        }
    }
    Ok(rows)
}

/// Runs the sweep on `workers` threads. The output depends only on the spec.
/// A failing drop removes its whole grid point from the table and is
/// reported in [`ResultTable::failures`].
pub fn run_experiment(spec: &ExperimentSpec, workers: usize) -> Result<ResultTable> {
    spec.validate()?;
    if workers == 0 {
        return Err(Error::Config("workers must be positive".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let jobs: Vec<(usize, u64)> =
        (0..spec.grid.len()).flat_map(|g| (0..spec.n_drops as u64).map(move |d| (g, d))).collect();
    log::info!("{}: {} grid points x {} drops on {workers} workers", spec.preset, spec.grid.len(), spec.n_drops);
    let results: Vec<Result<Vec<ResultRow>>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(g, d)| {
                let out = run_drop(spec, g, d);
                log::debug!("{} {}={} drop {d} done", spec.preset, spec.param, spec.grid[g]);
                out
            })
            .collect()
    });

    let mut table = ResultTable::default();
    for (g, chunk) in results.chunks(spec.n_drops).enumerate() {
        let value = spec.grid[g];
        if let Some((d, Err(e))) = chunk.iter().enumerate().find(|(_, r)| r.is_err()) {
            log::warn!("{} {}={value}: drop {d} failed, skipping the grid point: {e}", spec.preset, spec.param);
            table.failures.push(GridFailure { param_value: value, message: format!("drop {d}: {e}") });
            continue;
        }
        for rows in chunk.iter().flatten() {
            table.rows.extend(rows.iter().cloned());
        }
    }
    Ok(table)
}
