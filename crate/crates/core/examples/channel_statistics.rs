//! Draws one network and compares the sample covariance of a channel with
//! its correlation matrix.
//!
//! cargo run --release --example channel_statistics

use cellfree::config::SystemConfig;
use cellfree::linalg::{frobenius, hermitian_eigenvalues, CMat};
use cellfree::network::{drop_network, ChannelSampler};
use cellfree::rng::SeedTree;

fn main() -> cellfree::error::Result<()> {
    let cfg = SystemConfig::default();
    let net = drop_network(&cfg, SeedTree::new(1))?;

    let db: Vec<f64> = net.beta.iter().map(|b| 10.0 * b.log10()).collect();
    let (lo, hi) = db.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
    println!("{} APs, {} users; noise-normalized beta spans {lo:.1} .. {hi:.1} dB", cfg.num_aps, cfg.num_users);

    // Strongest link of user 0.
    let l = (0..cfg.num_aps).max_by(|&a, &b| net.beta(a, 0).total_cmp(&net.beta(b, 0))).unwrap_or(0);
    let r = net.correlation(l, 0);
    let eig = hermitian_eigenvalues(r);
    println!("AP {l} -> user 0: beta {:.3e}, eigenvalues of R / beta:", net.beta(l, 0));
    println!("  {:?}", eig.iter().map(|e| format!("{:.3}", e / net.beta(l, 0))).collect::<Vec<_>>());

    let sampler = ChannelSampler::new(&net)?;
    let mut rng = SeedTree::new(2).rng();
    let draws = 10_000;
    let nm = cfg.ap_antennas * cfg.ue_antennas;
    let mut cov = CMat::zeros(nm, nm);
    for _ in 0..draws {
        let h = sampler.sample(&mut rng);
        let v = h.vector(l, 0);
        cov += v * v.adjoint();
    }
    cov /= cellfree::linalg::c(draws as f64);
    println!("sample covariance vs R over {draws} draws: relative Frobenius error {:.4}", frobenius(&(&cov - r)) / frobenius(r));
    Ok(())
}
