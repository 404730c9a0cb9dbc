//! Hand-built channels for checks that a random drop cannot provide.

use nalgebra::DMatrix;
use rand::Rng;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::{c, CMat, CVec};
use crate::network::NetworkRealization;
use crate::pilots::{build_pilot_book, PilotAssignment};
use crate::rng::{complex_normal_vec, SeedTree};
use crate::sim::{BlockCsi, DropContext};

/// AP-side singular vectors of the block-diagonal channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApDirections {
    /// AP `l` radiates along the `l`-th coordinate axis of its array.
    Orthogonal,
    /// A fresh uniformly distributed unit vector per AP and block.
    Random,
}

/// A single user with `M` antennas served by `L = M` APs, where AP `l` only
/// reaches user antenna `l`: `H_l = sqrt(gain) e^{j theta} v_l e_l^T`. The
/// stacked channel then has block-diagonal right singular vectors. Channel
/// gains are fixed and phases random, and the APs know the channels exactly.
pub fn block_diagonal_drop(
    ap_antennas: usize,
    ue_antennas: usize,
    gain: f64,
    directions: ApDirections,
    n_blocks: usize,
    seed: SeedTree,
) -> Result<(DropContext, Vec<BlockCsi>)> {
    let (n, m) = (ap_antennas, ue_antennas);
    if directions == ApDirections::Orthogonal && n < m {
        return Err(Error::Config(format!("orthogonal AP directions need N >= L (N = {n}, L = {m})")));
    }
    if !(gain > 0.0 && gain.is_finite()) {
        return Err(Error::Config("gain must be positive".into()));
    }
    let cfg = SystemConfig { num_aps: m, ap_antennas: n, num_users: 1, ue_antennas: m, tau_p: m, ..SystemConfig::default() };
    cfg.validate()?;

    // vec(H_l) = sqrt(gain) e^{j theta} (e_l kron v_l).
    let correlation: Vec<CMat> = (0..m)
        .map(|l| {
            let mut r = CMat::zeros(n * m, n * m);
            match directions {
                ApDirections::Orthogonal => r[(l * n + l, l * n + l)] = c(gain),
                ApDirections::Random => {
                    for a in 0..n {
                        r[(l * n + a, l * n + a)] = c(gain / n as f64);
                    }
                }
            }
            r
        })
        .collect();
    let beta = DMatrix::from_element(m, 1, gain / (n * m) as f64);
    let net = NetworkRealization::from_parts(n, m, vec![[0.0, 0.0]; m], vec![[0.0, 0.0]], beta.clone(), correlation)?;
    let book = build_pilot_book(&cfg, &beta, PilotAssignment::RoundRobin)?;
    let c_err = vec![CMat::zeros(n * m, n * m); m];
    let ctx = DropContext::with_given_csi(&cfg, net, book, c_err, seed)?;

    let blocks = (0..n_blocks)
        .map(|b| {
            let mut rng = seed.child(b as u64).rng();
            let h: Vec<CMat> = (0..m)
                .map(|l| {
                    let v = match directions {
                        ApDirections::Orthogonal => CVec::from_fn(n, |a, _| c(if a == l { 1.0 } else { 0.0 })),
                        ApDirections::Random => complex_normal_vec(&mut rng, n).normalize(),
                    };
                    let theta: f64 = rng.random::<f64>() * std::f64::consts::TAU;
                    let scale = num_complex::Complex64::from_polar(gain.sqrt(), theta);
                    let mut hl = CMat::zeros(n, m);
                    hl.set_column(l, &(v * scale));
                    hl
                })
                .collect();
            BlockCsi { h_hat: h.clone(), h }
        })
        .collect();
    Ok((ctx, blocks))
}
