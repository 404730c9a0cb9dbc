//! Uplink pilots and MMSE channel estimation for two users that share a
//! pilot at the same AP, checked against the closed-form error covariance.
//!
//! cargo run --release --example uplink_estimation

use cellfree::config::SystemConfig;
use cellfree::linalg::{frobenius, trace_re, CMat};
use cellfree::network::{drop_network, ChannelSampler};
use cellfree::pilots::{build_pilot_book, receive_uplink_pilots, PilotAssignment, UplinkStatistics};
use cellfree::rng::SeedTree;

fn main() -> cellfree::error::Result<()> {
    // One pilot matrix for both users, so they contaminate each other.
    let cfg = SystemConfig { num_aps: 1, ap_antennas: 4, num_users: 2, ue_antennas: 2, tau_p: 2, ..SystemConfig::default() };
    let net = drop_network(&cfg, SeedTree::new(3))?;
    let book = build_pilot_book(&cfg, &net.beta, PilotAssignment::RoundRobin)?;
    let q = vec![cfg.ul_power; cfg.num_users];
    let stats = UplinkStatistics::new(&net, &book, &q)?;
    let sampler = ChannelSampler::new(&net)?;
    println!("reuse set of user 0: {:?}", book.reuse_set(0));

    let trials = 100_000;
    let mut rng = SeedTree::new(4).rng();
    let nm = cfg.ap_antennas * cfg.ue_antennas;
    let (mut sq, mut cross) = (0.0, CMat::zeros(nm, nm));
    for _ in 0..trials {
        let h = sampler.sample(&mut rng);
        let obs = receive_uplink_pilots(&h, &book, &q, &mut rng);
        let est = stats.estimate(&book, &obs);
        let err = h.vector(0, 0) - &est[0];
        sq += err.norm_squared();
        cross += &est[0] * err.adjoint();
    }
    let link = stats.link(0, 0);
    let n = trials as f64;
    println!("empirical MSE {:.5e}  tr(C_err) {:.5e}", sq / n, trace_re(&link.c_err));
    println!(
        "orthogonality |E{{h_hat e^H}}| / |R_hat| = {:.4}",
        frobenius(&(cross / cellfree::linalg::c(n))) / frobenius(&link.r_hat)
    );
    println!("estimate captures {:.1}% of the channel energy", 100.0 * trace_re(&link.r_hat) / trace_re(net.correlation(0, 0)));
    Ok(())
}
