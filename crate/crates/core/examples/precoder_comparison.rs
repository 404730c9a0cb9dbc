//! Runs all transmission methods on one network drop and reports the
//! average per-user SE with downlink pilots and how much power each AP uses.
//!
//! cargo run --release --example precoder_comparison [N]

use cellfree::config::SystemConfig;
use cellfree::pilots::PilotAssignment;
use cellfree::receiver::Bound;
use cellfree::rng::SeedTree;
use cellfree::sim::{DropContext, EvalOptions, Method};

fn main() -> cellfree::error::Result<()> {
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4);
    let cfg = SystemConfig { ap_antennas: n, ..SystemConfig::default() };
    let ctx = DropContext::new(&cfg, SeedTree::new(5), PilotAssignment::StrongestAp)?;
    let blocks = ctx.sample_blocks(300)?;
    println!("L={} N={} K={} M={}, 300 blocks", cfg.num_aps, n, cfg.num_users, cfg.ue_antennas);
    println!("{:22} {:>8} {:>12} {:>12}", "method", "SE", "busiest AP", "idle APs");
    for method in Method::ALL {
        let out = ctx.evaluate(method, &blocks, &[Bound::Pilots], EvalOptions::default())?;
        let se = out.report.se[0].iter().sum::<f64>() / cfg.num_users as f64;
        let peak = out.ap_power.iter().copied().fold(0.0, f64::max) / cfg.dl_power;
        let idle = out.ap_power.iter().filter(|&&p| p == 0.0).count();
        println!("{:22} {se:8.3} {:11.1}% {idle:12}", method.tag(), 100.0 * peak);
    }
    Ok(())
}
