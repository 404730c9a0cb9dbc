//! MR precoding to one user over an i.i.d. channel: the diagonal of the
//! effective channel hardens, the off-diagonal entries do not, and the
//! hardening bound falls behind once the user has two antennas.
//!
//! cargo run --release --example hardening_failure

use cellfree::downlink::{effective_channel, LinkBlock, LinkLayout};
use cellfree::linalg::{c, CMat};
use cellfree::precoding::mr_precoder;
use cellfree::receiver::{evaluate_bounds, Bound};
use cellfree::rng::{complex_normal, SeedTree};
use cellfree::streams::Selection;

fn iid(n: usize, m: usize, rng: &mut impl rand::Rng) -> CMat {
    CMat::from_fn(n, m, |_, _| complex_normal(rng))
}

fn main() -> cellfree::error::Result<()> {
    let mut rng = SeedTree::new(11).rng();

    let (n, m, draws) = (16, 2, 20_000);
    let samples: Vec<CMat> = (0..draws)
        .map(|_| {
            let h = iid(n, m, &mut rng);
            effective_channel(&h, &mr_precoder(&h))
        })
        .collect();
    let mean = samples.iter().fold(CMat::zeros(m, m), |a, b| a + b) / c(draws as f64);
    let var = |r: usize, s: usize| samples.iter().map(|b| (b[(r, s)] - mean[(r, s)]).norm_sqr()).sum::<f64>() / draws as f64;
    println!("N = {n}, M = {m}, {draws} draws of B = H^H H");
    println!("  mean diagonal {:.2} {:.2}, mean off-diagonal magnitude {:.3}", mean[(0, 0)].re, mean[(1, 1)].re, mean[(0, 1)].norm());
    println!("  variance of B - E{{B}}: diagonal {:.2} {:.2}, off-diagonal {:.2} {:.2}", var(0, 0), var(1, 1), var(0, 1), var(1, 0));

    // Same channel through the bound engine, transmit SNR 10 per stream.
    println!("\n  N   M  noCSI  pilots  fullCSI  (bits/s/Hz)");
    for n in [4, 16, 64] {
        for m in [1, 2] {
            let layout = LinkLayout {
                num_users: 1,
                dim: m,
                num_pilots: 1,
                pilot_of: vec![0],
                q: vec![1.0],
                tau_p: m,
                active: vec![Selection::all(m)],
            };
            let scale = c((10.0 / n as f64).sqrt());
            let blocks: Vec<LinkBlock> = (0..2000)
                .map(|_| {
                    let h = iid(n, m, &mut rng);
                    LinkBlock { num_users: 1, b: vec![effective_channel(&h, &mr_precoder(&h)) * scale] }
                })
                .collect();
            let rep = evaluate_bounds(&layout, &blocks, &[Bound::NoCsi, Bound::Pilots, Bound::FullCsi], 200, SeedTree::new(12))?;
            println!("{n:3} {m:3} {:6.2} {:7.2} {:8.2}", rep.se[0][0], rep.se[1][0], rep.se[2][0]);
        }
    }
    Ok(())
}
