//! The four SE expressions for same-stream transmission on a few drops,
//! with one and with two antennas per user.
//!
//! cargo run --release --example bound_comparison

use cellfree::config::{default_pilot_length, Fading, SystemConfig};
use cellfree::pilots::PilotAssignment;
use cellfree::receiver::Bound;
use cellfree::rng::SeedTree;
use cellfree::sim::{DropContext, EvalOptions, Method};

fn main() -> cellfree::error::Result<()> {
    let drops = 4;
    for (m, fading) in [(1, Fading::Iid), (2, Fading::Correlated)] {
        let cfg = SystemConfig { ue_antennas: m, tau_p: default_pilot_length(5, m), fading, ..SystemConfig::default() };
        let mut avg = [0.0; 4];
        for d in 0..drops {
            let ctx = DropContext::new(&cfg, SeedTree::new(20).child(d), PilotAssignment::StrongestAp)?;
            let blocks = ctx.sample_blocks(300)?;
            let out = ctx.evaluate(Method::Same, &blocks, &Bound::ALL, EvalOptions::default())?;
            for (b, row) in out.report.se.iter().enumerate() {
                avg[b] += row.iter().sum::<f64>() / (cfg.num_users * drops as usize) as f64;
            }
        }
        println!("M = {m}, {fading:?} fading, average per-user SE over {drops} drops");
        for (b, bound) in Bound::ALL.iter().enumerate() {
            println!("  {:9} {:6.3}", bound.tag(), avg[b]);
        }
        println!("  pilots / noCSI = {:.3}", avg[2] / avg[0]);
    }
    Ok(())
}
