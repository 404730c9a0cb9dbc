//! Greedy stream dropping for same-stream transmission in a crowded setup,
//! where the APs have fewer antennas than there are streams to separate.
//!
//! cargo run --release --example stream_scheduling

use cellfree::config::{default_pilot_length, SystemConfig};
use cellfree::pilots::PilotAssignment;
use cellfree::receiver::{evaluate_bounds, Bound};
use cellfree::rng::SeedTree;
use cellfree::sim::{DropContext, EvalOptions, Method};
use cellfree::streams::{schedule_streams_same, StreamPlan};

fn main() -> cellfree::error::Result<()> {
    let cfg = SystemConfig {
        num_aps: 4,
        ap_antennas: 2,
        num_users: 6,
        ue_antennas: 2,
        tau_p: default_pilot_length(6, 2),
        ..SystemConfig::default()
    };
    let ctx = DropContext::new(&cfg, SeedTree::new(8), PilotAssignment::StrongestAp)?;
    let blocks = ctx.sample_blocks(200)?;

    // The scheduler accepts any objective; here it is the sum SE with pilots.
    let objective = |plan: &StreamPlan| -> cellfree::error::Result<f64> {
        let links = ctx.same_stream_links(&blocks, plan)?;
        let rep = evaluate_bounds(&ctx.layout(&plan.active), &links.links, &[Bound::Pilots], cfg.tau_c, SeedTree::new(9))?;
        Ok(rep.se[0].iter().sum())
    };
    let out = schedule_streams_same(objective, StreamPlan::full(cfg.num_users, cfg.ue_antennas))?;
    println!("{} APs x {} antennas, {} users x {} antennas", cfg.num_aps, cfg.ap_antennas, cfg.num_users, cfg.ue_antennas);
    println!("sum SE with all streams {:.3}, after dropping {} streams {:.3} ({} evaluations)", out.initial_sum_se, out.drops, out.sum_se, out.evaluations);
    for (k, sel) in out.plan.active.iter().enumerate() {
        println!("  user {k}: streams {:?}", sel.streams().collect::<Vec<_>>());
    }

    // The same scheduler runs inside DropContext::evaluate by default.
    let plain = ctx.evaluate(Method::Same, &blocks, &[Bound::Pilots], EvalOptions { schedule_streams: false })?;
    let sched = ctx.evaluate(Method::Same, &blocks, &[Bound::Pilots], EvalOptions { schedule_streams: true })?;
    let sum = |se: &[f64]| se.iter().sum::<f64>();
    println!("evaluate(): {:.3} without scheduling, {:.3} with", sum(&plain.report.se[0]), sum(&sched.report.se[0]));
    Ok(())
}
