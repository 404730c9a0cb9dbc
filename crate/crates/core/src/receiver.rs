//! Receive combiners and the four spectral efficiency bounds.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::downlink::{pilot_noise, receive_downlink_pilots, DownlinkEstimators, LinkBlock, LinkLayout};
use crate::error::{Error, Result};
use crate::linalg::{self, c, capacity_log2, identity, unvec, vec_cols, CMat};
use crate::rng::SeedTree;
use crate::streams::Selection;

/// Which spectral efficiency expression to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Bound {
    /// Hardening bound: only the mean effective channel is known.
    #[serde(rename = "noCSI")]
    NoCsi,
    /// Genie-aided effective channel at the receiver.
    #[serde(rename = "fullCSI")]
    FullCsi,
    /// Downlink pilots, LMMSE estimation, MMSE combining.
    #[serde(rename = "pilots")]
    Pilots,
    /// Downlink pilots, LMMSE estimation, ZF combining.
    #[serde(rename = "pilotsZF")]
    PilotsZf,
}

impl Bound {
    pub const ALL: [Bound; 4] = [Bound::NoCsi, Bound::FullCsi, Bound::Pilots, Bound::PilotsZf];

    pub fn tag(self) -> &'static str {
        match self {
            Bound::NoCsi => "noCSI",
            Bound::FullCsi => "fullCSI",
            Bound::Pilots => "pilots",
            Bound::PilotsZf => "pilotsZF",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        Bound::ALL
            .into_iter()
            .find(|b| b.tag() == tag)
            .ok_or_else(|| Error::Config(format!("unknown bound '{tag}' (expected noCSI, fullCSI, pilots or pilotsZF)")))
    }

    /// Whether the bound pays for downlink pilots as well.
    pub fn uses_downlink_pilots(self) -> bool {
        matches!(self, Bound::Pilots | Bound::PilotsZf)
    }

    pub fn prelog(self, tau_p: usize, tau_c: usize) -> f64 {
        let overhead = if self.uses_downlink_pilots() { 2 * tau_p } else { tau_p };
        1.0 - overhead as f64 / tau_c as f64
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

fn columns(a: &CMat, sel: &Selection) -> CMat {
    let idx: Vec<usize> = sel.streams().collect();
    a.select_columns(idx.iter())
}

/// MMSE combiner `U = (sum_i (B^_ki B^_ki^H + C_B~ki) + I)^{-1} B^_kk`
/// restricted to the active streams.
pub fn mmse_combiner(b_hat: &[CMat], error_grams: &[CMat], k: usize, active: &Selection) -> Result<CMat> {
    let m = b_hat[k].nrows();
    let mut a = identity(m);
    for (bh, ce) in b_hat.iter().zip(error_grams) {
        a += bh * bh.adjoint() + ce;
    }
    linalg::hpd_solve(&a, &columns(&b_hat[k], active))
}

/// ZF combiner `U = B^_A (B^_A^H B^_A)^{-1}` on the active columns, so that
/// `U^H B^_A = I`.
pub fn zf_combiner(b_hat_kk: &CMat, active: &Selection) -> Result<CMat> {
    let ba = columns(b_hat_kk, active);
    let gram = ba.adjoint() * &ba;
    let scale = linalg::trace_re(&gram) / gram.nrows().max(1) as f64;
    if !(scale > 0.0) || linalg::min_eigenvalue(&gram) <= 1e-12 * scale {
        return Err(Error::Degenerate("effective channel estimate is rank deficient".into()));
    }
    Ok(linalg::hpd_solve(&gram, &ba.adjoint())
        .map_err(|_| Error::Degenerate("effective channel estimate is rank deficient".into()))?
        .adjoint())
}

/// `prelog * log2|I + B^H Xi^{-1} B|`.
pub fn se_hardening(b_bar: &CMat, xi: &CMat, prelog: f64) -> Result<f64> {
    Ok(prelog * capacity_log2(b_bar, xi)?)
}

/// One realization of the perfect-CSI bound, `log2|I + B^H Xi~^{-1} B|`.
pub fn perfect_csi_log2(b_kk: &CMat, xi_tilde: &CMat) -> Result<f64> {
    capacity_log2(b_kk, xi_tilde)
}

/// `prelog * log2|I + E^H C^{-1} E|`.
pub fn se_pilot_general(e_bar: &CMat, c_n: &CMat, prelog: f64) -> Result<f64> {
    Ok(prelog * capacity_log2(e_bar, c_n)?)
}

/// `prelog * log2|I + C^{-1}|`.
pub fn se_pilot_zf(c_n: &CMat, prelog: f64) -> Result<f64> {
    Ok(prelog * capacity_log2(&identity(c_n.nrows()), c_n)?)
}

/// Per-user SE of every requested bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub bounds: Vec<Bound>,
    /// `se[b][k]`, aligned with `bounds`.
    pub se: Vec<Vec<f64>>,
    pub n_blocks: usize,
}

impl BoundReport {
    pub fn get(&self, bound: Bound) -> Option<&[f64]> {
        self.bounds.iter().position(|&b| b == bound).map(|i| self.se[i].as_slice())
    }
}

/// Accumulated statistics of the combined signal `U^H y` for one user.
struct CombinedStats {
    e: CMat,
    x: CMat,
    xx: CMat,
    interference: CMat,
    noise: CMat,
}

impl CombinedStats {
    fn new(a: usize) -> Self {
        CombinedStats {
            e: CMat::zeros(a, a),
            x: CMat::zeros(a, a),
            xx: CMat::zeros(a, a),
            interference: CMat::zeros(a, a),
            noise: CMat::zeros(a, a),
        }
    }

    fn push(&mut self, u: &CMat, b_hat_kk: &CMat, block: &LinkBlock, k: usize, active: &Selection) {
        let uh = u.adjoint();
        self.e += &uh * columns(b_hat_kk, active);
        let x = &uh * columns(block.get(k, k), active);
        self.xx += &x * x.adjoint();
        self.x += x;
        for i in (0..block.num_users).filter(|&i| i != k) {
            let v = &uh * block.get(k, i);
            self.interference += &v * v.adjoint();
        }
        self.noise += &uh * u;
    }

    /// `(E_bar, C_n)`.
    fn finish(self, n: usize) -> (CMat, CMat) {
        let s = c(1.0 / n as f64);
        let e = self.e * s;
        let x = self.x * s;
        let cn = self.xx * s - &x * e.adjoint() - &e * x.adjoint() + &e * e.adjoint() + (self.interference + self.noise) * s;
        (e, linalg::hermitian_part(&cn))
    }
}

/// Evaluates the requested bounds for every user over a set of blocks.
///
/// All statistics (means, covariances, downlink estimator moments) are
/// sample averages over `blocks`; downlink pilot noise for block `b`, user
/// `k`, pilot `t` is drawn from `noise_seed.child(b).child(k).child(t)`.
pub fn evaluate_bounds(
    layout: &LinkLayout,
    blocks: &[LinkBlock],
    bounds: &[Bound],
    tau_c: usize,
    noise_seed: SeedTree,
) -> Result<BoundReport> {
    layout.validate()?;
    if blocks.len() < 2 {
        return Err(Error::Config(format!("need at least 2 blocks, got {}", blocks.len())));
    }
    let (kk, m) = (layout.num_users, layout.dim);
    let n = blocks.len();
    let inv_n = c(1.0 / n as f64);
    let mut se = vec![vec![0.0; kk]; bounds.len()];
    let want = |b: Bound| bounds.iter().position(|&x| x == b);

    if want(Bound::NoCsi).is_some() || want(Bound::FullCsi).is_some() {
        for k in 0..kk {
            let mut mean = CMat::zeros(m, m);
            let mut second = CMat::zeros(m, m);
            let mut full = 0.0;
            for blk in blocks {
                let bkk = blk.get(k, k);
                mean += bkk;
                let mut xi_tilde = identity(m);
                for i in (0..kk).filter(|&i| i != k) {
                    let bki = blk.get(k, i);
                    xi_tilde += bki * bki.adjoint();
                }
                second += &xi_tilde + bkk * bkk.adjoint();
                if want(Bound::FullCsi).is_some() {
                    full += perfect_csi_log2(bkk, &xi_tilde)?;
                }
            }
            let mean = mean * inv_n;
            // second holds E{sum_i B_ki B_ki^H} + I.
            let xi = linalg::hermitian_part(&(second * inv_n - &mean * mean.adjoint()));
            if let Some(p) = want(Bound::NoCsi) {
                se[p][k] = se_hardening(&mean, &xi, Bound::NoCsi.prelog(layout.tau_p, tau_c))?;
            }
            if let Some(p) = want(Bound::FullCsi) {
                se[p][k] = Bound::FullCsi.prelog(layout.tau_p, tau_c) * full / n as f64;
            }
        }
    }

    let mmse = want(Bound::Pilots);
    let zf = want(Bound::PilotsZf);
    if mmse.is_some() || zf.is_some() {
        let est = DownlinkEstimators::from_blocks(layout, blocks)?;
        let mut stats_mmse: Vec<CombinedStats> = layout.active.iter().map(|a| CombinedStats::new(a.rank())).collect();
        let mut stats_zf: Vec<CombinedStats> = layout.active.iter().map(|a| CombinedStats::new(a.rank())).collect();
        for (b, blk) in blocks.iter().enumerate() {
            let block_seed = noise_seed.child(b as u64);
            for k in 0..kk {
                let user_seed = block_seed.child(k as u64);
                let obs: Vec<_> = (0..layout.num_pilots)
                    .map(|t| {
                        let noise = pilot_noise(&mut user_seed.child(t as u64).rng(), m);
                        vec_cols(&receive_downlink_pilots(blk, layout, k, t, &noise))
                    })
                    .collect();
                let b_hat: Vec<CMat> =
                    (0..kk).map(|i| unvec(&est.estimator(k, i).estimate(&obs[layout.pilot_of[i]]), m, m)).collect();
                let active = &layout.active[k];
                if mmse.is_some() {
                    let grams: Vec<CMat> = (0..kk).map(|i| est.error_gram(k, i).clone()).collect();
                    let u = mmse_combiner(&b_hat, &grams, k, active)?;
                    stats_mmse[k].push(&u, &b_hat[k], blk, k, active);
                }
                if zf.is_some() {
                    let u = zf_combiner(&b_hat[k], active)?;
                    stats_zf[k].push(&u, &b_hat[k], blk, k, active);
                }
            }
        }
        let prelog = Bound::Pilots.prelog(layout.tau_p, tau_c);
        for k in (0..kk).rev() {
            let s_zf = stats_zf.pop().expect("one per user");
            let s_mmse = stats_mmse.pop().expect("one per user");
            if let Some(p) = mmse {
                let (e, cn) = s_mmse.finish(n);
                se[p][k] = se_pilot_general(&e, &cn, prelog)?;
            }
            if let Some(p) = zf {
                let (_, cn) = s_zf.finish(n);
                se[p][k] = se_pilot_zf(&cn, prelog)?;
            }
        }
    }

    for (b, row) in bounds.iter().zip(&se) {
        if row.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::Numerical(format!("{b} bound produced an invalid SE")));
        }
    }
    Ok(BoundReport { bounds: bounds.to_vec(), se, n_blocks: n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius, C64};
    use crate::rng::complex_normal;
    use proptest::prelude::*;

    fn rand_mat(seed: u64, r: usize, cl: usize) -> CMat {
        let mut rng = SeedTree::new(seed).rng();
        CMat::from_fn(r, cl, |_, _| complex_normal(&mut rng))
    }

    #[test]
    fn zero_estimates_give_zero_combiner() {
        let z = vec![CMat::zeros(2, 2); 3];
        let u = mmse_combiner(&z, &z, 1, &Selection::all(2)).unwrap();
        assert_eq!(u, CMat::zeros(2, 2));
    }

    #[test]
    fn scalar_mmse_combiner() {
        let bh = C64::new(1.5, -0.5);
        let ce = 0.7;
        let u = mmse_combiner(&[CMat::from_element(1, 1, bh)], &[CMat::from_element(1, 1, c(ce))], 0, &Selection::all(1))
            .unwrap();
        let expect = bh / (bh.norm_sqr() + ce + 1.0);
        assert!((u[(0, 0)] - expect).norm() < 1e-14);
    }

    #[test]
    fn unitary_estimate_halves() {
        let q = rand_mat(1, 3, 3).qr().q();
        let u = mmse_combiner(&[q.clone()], &[CMat::zeros(3, 3)], 0, &Selection::all(3)).unwrap();
        assert!(frobenius(&(&u - &q * c(0.5))) < 1e-12);
        assert!(frobenius(&(u.adjoint() * &q - identity(3) * c(0.5))) < 1e-12);
    }

    #[test]
    fn zf_examples() {
        let u = zf_combiner(&(identity(2) * c(2.0)), &Selection::all(2)).unwrap();
        assert!(frobenius(&(u.adjoint() - identity(2) * c(0.5))) < 1e-14);
        let q = rand_mat(2, 2, 2).qr().q();
        let u = zf_combiner(&q, &Selection::all(2)).unwrap();
        assert!(frobenius(&(u.adjoint() - q.adjoint())) < 1e-12);
        let b = rand_mat(3, 2, 2);
        let u = zf_combiner(&b, &Selection::all(2)).unwrap();
        assert!(frobenius(&(u.adjoint() * &b - identity(2))) < 1e-10);
    }

    #[test]
    fn zf_on_subset_and_rank_deficiency() {
        let b = rand_mat(4, 3, 3);
        let sel = Selection(vec![true, false, true]);
        let u = zf_combiner(&b, &sel).unwrap();
        assert_eq!(u.shape(), (3, 2));
        assert!(frobenius(&(u.adjoint() * columns(&b, &sel) - identity(2))) < 1e-10);
        let mut singular = b.clone();
        let col0 = singular.column(0).clone_owned();
        singular.set_column(1, &col0);
        assert!(matches!(zf_combiner(&singular, &Selection::all(3)), Err(Error::Degenerate(_))));
    }

    #[test]
    fn hardening_reductions() {
        assert_eq!(se_hardening(&CMat::zeros(2, 2), &identity(2), 0.9).unwrap(), 0.0);
        let g = C64::new(3.0, 1.0);
        let s2 = 2.5;
        let se = se_hardening(&CMat::from_element(1, 1, g), &CMat::from_element(1, 1, c(s2)), 0.8).unwrap();
        assert!((se - 0.8 * (1.0 + g.norm_sqr() / s2).log2()).abs() < 1e-12);
        let full = se_hardening(&identity(2), &identity(2), 1.0).unwrap();
        let half = se_hardening(&identity(2), &identity(2), Bound::NoCsi.prelog(100, 200)).unwrap();
        assert!((half - full / 2.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_csi_single_user_identity() {
        let v = perfect_csi_log2(&identity(3), &identity(3)).unwrap();
        assert!((v - 3.0).abs() < 1e-12);
    }

    #[test]
    fn pilot_bound_examples() {
        assert_eq!(se_pilot_general(&CMat::zeros(2, 2), &identity(2), 0.9).unwrap(), 0.0);
        assert!((se_pilot_general(&identity(2), &identity(2), 0.9).unwrap() - 1.8).abs() < 1e-12);
        assert!((se_pilot_zf(&identity(2), 0.9).unwrap() - 1.8).abs() < 1e-12);
        let mut last = f64::INFINITY;
        for cn in [0.1, 1.0, 10.0, 1e3, 1e6] {
            let v = se_pilot_zf(&CMat::from_element(1, 1, c(cn)), 0.5).unwrap();
            assert!((v - 0.5 * (1.0 + 1.0 / cn).log2()).abs() < 1e-12);
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn prelogs_and_tags() {
        assert_eq!(Bound::NoCsi.prelog(10, 200), 0.95);
        assert_eq!(Bound::PilotsZf.prelog(10, 200), 0.9);
        for b in Bound::ALL {
            assert_eq!(Bound::from_tag(b.tag()).unwrap(), b);
        }
        assert!(Bound::from_tag("genie").is_err());
    }

    fn synthetic_blocks(seed: u64, kk: usize, m: usize, n: usize, mean_gain: f64) -> Vec<LinkBlock> {
        let mut rng = SeedTree::new(seed).rng();
        (0..n)
            .map(|_| LinkBlock {
                num_users: kk,
                b: (0..kk * kk)
                    .map(|idx| {
                        let base = if idx % (kk + 1) == 0 { identity(m) * c(mean_gain) } else { CMat::zeros(m, m) };
                        base + CMat::from_fn(m, m, |_, _| complex_normal(&mut rng))
                    })
                    .collect(),
            })
            .collect()
    }

    fn layout(kk: usize, m: usize) -> LinkLayout {
        LinkLayout {
            num_users: kk,
            dim: m,
            num_pilots: kk,
            pilot_of: (0..kk).collect(),
            q: vec![10.0; kk],
            tau_p: 2,
            active: vec![Selection::all(m); kk],
        }
    }

    #[test]
    fn zf_pilot_bound_equals_general_form_with_zf() {
        // With ZF, E_bar = I exactly, so the general bound reduces to the ZF one.
        let lay = layout(2, 2);
        let blocks = synthetic_blocks(5, 2, 2, 400, 3.0);
        let rep = evaluate_bounds(&lay, &blocks, &Bound::ALL, 200, SeedTree::new(6)).unwrap();
        for k in 0..2 {
            for b in Bound::ALL {
                let v = rep.get(b).unwrap()[k];
                assert!(v.is_finite() && v >= 0.0);
            }
            assert!(rep.get(Bound::Pilots).unwrap()[k] >= rep.get(Bound::PilotsZf).unwrap()[k] - 1e-9);
        }
    }

    #[test]
    fn gaussian_surrogate_pilot_bound() {
        // Single user, M = 1, b ~ CN(mu, 1): moments are known in closed form.
        // Observation y = sqrt(q tau) b + n; LMMSE gives b^ with error
        // variance e = 1 / (1 + q tau) and b^ ~ CN(mu, 1 - e). With ZF the
        // residual is (b~ + n) / b^, whose second moment follows by
        // integrating 1/|b^|^2 against the Rician distribution of b^.
        let (q, tau) = (5.0, 2usize);
        let mu = 4.0;
        let n = 100_000;
        let mut rng = SeedTree::new(7).rng();
        let blocks: Vec<LinkBlock> = (0..n)
            .map(|_| LinkBlock { num_users: 1, b: vec![CMat::from_element(1, 1, c(mu) + complex_normal(&mut rng))] })
            .collect();
        let lay = LinkLayout { num_users: 1, dim: 1, num_pilots: 1, pilot_of: vec![0], q: vec![q], tau_p: tau, active: vec![Selection::all(1)] };
        let rep = evaluate_bounds(&lay, &blocks, &[Bound::PilotsZf, Bound::NoCsi], 100, SeedTree::new(8)).unwrap();
        let e = 1.0 / (1.0 + q * tau as f64);
        let var_hat = 1.0 - e;
        // E{1/|b^|^2} by quadrature over the Rician magnitude.
        let (steps, top) = (20_000, mu + 12.0);
        let h = top / steps as f64;
        let mut inv = 0.0;
        for s in 1..=steps {
            let r = s as f64 * h;
            let bessel = {
                // I0(x) e^{-x} via numerical integral, x = 2 r mu / var_hat.
                let x = 2.0 * r * mu / var_hat;
                let m = 400;
                let mut acc = 0.0;
                for j in 0..m {
                    let th = (j as f64 + 0.5) * std::f64::consts::PI / m as f64;
                    acc += (x * (th.cos() - 1.0)).exp();
                }
                acc / m as f64
            };
            let pdf = 2.0 * r / var_hat * (-(r - mu).powi(2) / var_hat).exp() * bessel;
            inv += pdf / (r * r) * h;
        }
        let c_n = (e + 1.0) * inv;
        let expect = Bound::PilotsZf.prelog(tau, 100) * (1.0 + 1.0 / c_n).log2();
        let got = rep.get(Bound::PilotsZf).unwrap()[0];
        assert!((got - expect).abs() < 0.03 * expect, "{got} vs {expect}");
        let hard = Bound::NoCsi.prelog(tau, 100) * (1.0 + mu * mu / 2.0).log2();
        assert!((rep.get(Bound::NoCsi).unwrap()[0] - hard).abs() < 0.03 * hard);
    }

    proptest! {
        #[test]
        fn determinant_identity(seed in 0u64..1000, m in 1usize..4) {
            let a = rand_mat(seed, m, m);
            let w = rand_mat(seed + 7, m, m);
            let cov = &w * w.adjoint() + identity(m);
            let direct = capacity_log2(&a, &cov).unwrap();
            let alt = linalg::log2det_hpd(&(&cov + &a * a.adjoint())).unwrap() - linalg::log2det_hpd(&cov).unwrap();
            prop_assert!((direct - alt).abs() < 1e-9 * (1.0 + alt.abs()));
            prop_assert!(direct >= 0.0);
        }
    }
}
