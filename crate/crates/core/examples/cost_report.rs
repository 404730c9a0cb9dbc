//! Complexity and fronthaul counts per coherence block, and how they grow
//! with the number of user antennas.
//!
//! cargo run --release --example cost_report

use cellfree::cost::{cost_report, CostConfig};
use cellfree::harness::write_cost_csv;

fn main() -> cellfree::error::Result<()> {
    let base = CostConfig { num_aps: 20, ap_antennas: 4, ue_antennas: 2, num_users: 5, tau_p: 5, tau_c: 200 };
    let r = cost_report(&base)?;
    println!("{base:?}");
    println!("  uplink estimation      {:>10} complex multiplications", r.ul_estimation_mults);
    println!("  centralized precoding  {:>10} complex multiplications", r.precoder_mults);
    println!("  fronthaul per AP       {:>10} pilot scalars, {} data scalars", r.fronthaul_pilot_scalars, r.fronthaul_data_scalars);

    // Pilot length grows with M when every user antenna needs its own pilot.
    let sweep: Vec<CostConfig> = (1..=4).map(|m| CostConfig { ue_antennas: m, tau_p: 5 * m, ..base }).collect();
    println!();
    write_cost_csv(&sweep, std::io::stdout().lock())
}
