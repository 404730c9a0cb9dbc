//! Effective downlink channels, precoded downlink pilots, sample moments and
//! the LMMSE estimator of the effective channel.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, c, diag_block_sum, identity, unvec, vec_cols, CMat, CVec};
use crate::rng::complex_normal_vec;
use crate::streams::Selection;

/// `B = H^H W`.
pub fn effective_channel(h: &CMat, w: &CMat) -> CMat {
    h.adjoint() * w
}

/// Who transmits which downlink pilot, and with how much power.
///
/// A "user" here is any receiver with `dim` antennas and up to `dim`
/// streams; the per-antenna baseline uses single-antenna virtual users.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkLayout {
    pub num_users: usize,
    pub dim: usize,
    pub num_pilots: usize,
    pub pilot_of: Vec<usize>,
    pub q: Vec<f64>,
    pub tau_p: usize,
    pub active: Vec<Selection>,
}

impl LinkLayout {
    pub fn group(&self, t: usize) -> Vec<usize> {
        (0..self.num_users).filter(|&i| self.pilot_of[i] == t).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.num_users;
        if self.pilot_of.len() != k || self.q.len() != k || self.active.len() != k {
            return Err(Error::Data("link layout vectors disagree on the number of users".into()));
        }
        if self.pilot_of.iter().any(|&t| t >= self.num_pilots) {
            return Err(Error::Data("pilot index out of range".into()));
        }
        if self.active.iter().any(|s| s.0.len() != self.dim || s.rank() == 0) {
            return Err(Error::Data("every user needs at least one active stream".into()));
        }
        Ok(())
    }
}

/// Effective channels of one coherence block: `B_ki` (`dim x dim`) at index
/// `k * K + i`, the channel from user `i`'s precoded signal to user `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkBlock {
    pub num_users: usize,
    pub b: Vec<CMat>,
}

impl LinkBlock {
    pub fn get(&self, k: usize, i: usize) -> &CMat {
        &self.b[k * self.num_users + i]
    }
}

/// `Y_kt = sum_{i uses t} sqrt(q_i tau_p) B_ki + N`, the downlink pilot
/// observation of user `k` after correlating with pilot `t`.
pub fn receive_downlink_pilots(block: &LinkBlock, layout: &LinkLayout, k: usize, t: usize, noise: &CMat) -> CMat {
    let mut y = noise.clone();
    for i in layout.group(t) {
        y += block.get(k, i) * c((layout.q[i] * layout.tau_p as f64).sqrt());
    }
    y
}

/// Draws the post-correlation pilot noise, `dim x dim` with unit variance.
pub fn pilot_noise<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMat {
    unvec(&complex_normal_vec(rng, dim * dim), dim, dim)
}

/// Running first and second moments of a complex random vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMoments {
    pub n: usize,
    sum: CVec,
    sum_outer: CMat,
}

impl SampleMoments {
    pub fn new(dim: usize) -> Self {
        SampleMoments { n: 0, sum: CVec::zeros(dim), sum_outer: CMat::zeros(dim, dim) }
    }

    pub fn push(&mut self, z: &CVec) {
        self.n += 1;
        self.sum += z;
        self.sum_outer += z * z.adjoint();
    }

    pub fn merge(&mut self, other: &SampleMoments) {
        self.n += other.n;
        self.sum += &other.sum;
        self.sum_outer += &other.sum_outer;
    }

    pub fn mean(&self) -> CVec {
        &self.sum / c(self.n.max(1) as f64)
    }

    /// Unbiased sample covariance.
    pub fn covariance(&self) -> Result<CMat> {
        if self.n < 2 {
            return Err(Error::Config(format!("need at least 2 samples for a covariance, got {}", self.n)));
        }
        let n = self.n as f64;
        let mean = self.mean();
        let cov = (&self.sum_outer - (&mean * mean.adjoint()) * c(n)) / c(n - 1.0);
        Ok(linalg::hermitian_part(&cov))
    }
}

/// LMMSE estimator `b^ = E{b} + C_by C_y^{-1} (y - E{y})`.
#[derive(Debug, Clone, PartialEq)]
pub struct LmmseEstimator {
    pub mean_b: CVec,
    pub mean_y: CVec,
    pub gain: CMat,
    /// `C_b~ = C_b - C_by C_y^{-1} C_by^H`.
    pub c_err: CMat,
}

impl LmmseEstimator {
    pub fn from_moments(mean_b: CVec, mean_y: CVec, c_b: &CMat, c_by: &CMat, c_y: &CMat) -> Result<Self> {
        let chol = linalg::cholesky(c_y)?;
        let gain = chol.solve(&c_by.adjoint()).adjoint();
        let c_err = linalg::hermitian_part(&(c_b - &gain * c_by.adjoint()));
        Ok(LmmseEstimator { mean_b, mean_y, gain, c_err })
    }

    pub fn estimate(&self, y: &CVec) -> CVec {
        &self.mean_b + &self.gain * (y - &self.mean_y)
    }

    pub fn mse(&self) -> f64 {
        linalg::trace_re(&self.c_err)
    }
}

/// An estimate of one effective channel matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveEstimate {
    pub b_hat: CVec,
    pub b_hat_mat: CMat,
    pub c_err: CMat,
    pub mse: f64,
}

/// LMMSE estimate of `b = vec(B)` (`dim x dim`) from the vectorized pilot
/// observation.
pub fn lmmse_effective_estimate(y: &CVec, est: &LmmseEstimator, dim: usize) -> EffectiveEstimate {
    let b_hat = est.estimate(y);
    let b_hat_mat = unvec(&b_hat, dim, dim);
    EffectiveEstimate { b_hat, b_hat_mat, c_err: est.c_err.clone(), mse: est.mse() }
}

/// `E{B~ B~^H}` from the error covariance of `vec(B)`.
pub fn error_gram(c_err: &CMat, dim: usize) -> CMat {
    diag_block_sum(c_err, dim, |_| true)
}

/// Downlink LMMSE estimators of every `B_ki`, built from sample moments of
/// the effective channels.
///
/// The observation of `b_ki` is user `k`'s pilot observation on the pilot of
/// user `i`; its moments follow from the joint sample moments of the
/// channels of all users sharing that pilot plus the unit noise.
#[derive(Debug, Clone)]
pub struct DownlinkEstimators {
    pub layout: LinkLayout,
    /// Index `k * K + i`.
    pub estimators: Vec<LmmseEstimator>,
    /// `E{B~_ki B~_ki^H}`, index `k * K + i`.
    pub error_grams: Vec<CMat>,
    pub n_samples: usize,
}

impl DownlinkEstimators {
    pub fn from_blocks(layout: &LinkLayout, blocks: &[LinkBlock]) -> Result<Self> {
        layout.validate()?;
        let (kk, d2) = (layout.num_users, layout.dim * layout.dim);
        let groups: Vec<Vec<usize>> = (0..layout.num_pilots).map(|t| layout.group(t)).collect();
        let mut estimators = Vec::with_capacity(kk * kk);
        let mut error_grams = Vec::with_capacity(kk * kk);
        let mut cache: Vec<Option<(CVec, CMat)>> = vec![None; kk * layout.num_pilots];
        for k in 0..kk {
            for i in 0..kk {
                let t = layout.pilot_of[i];
                let group = &groups[t];
                let slot = k * layout.num_pilots + t;
                if cache[slot].is_none() {
                    let mut acc = SampleMoments::new(group.len() * d2);
                    for blk in blocks {
                        let mut z = CVec::zeros(group.len() * d2);
                        for (g, &j) in group.iter().enumerate() {
                            z.rows_mut(g * d2, d2).copy_from(&vec_cols(blk.get(k, j)));
                        }
                        acc.push(&z);
                    }
                    cache[slot] = Some((acc.mean(), acc.covariance()?));
                }
                let (mean_z, cov_z) = cache[slot].as_ref().expect("filled above");
                let pos = group.iter().position(|&j| j == i).expect("user belongs to its pilot group");
                // y = A z + n with A = [sqrt(q_j tau_p) I] over the group.
                let weights: Vec<f64> = group.iter().map(|&j| (layout.q[j] * layout.tau_p as f64).sqrt()).collect();
                let mut mean_y = CVec::zeros(d2);
                let mut c_y = identity(d2);
                let mut c_by = CMat::zeros(d2, d2);
                for (g, &wg) in weights.iter().enumerate() {
                    mean_y += mean_z.rows(g * d2, d2) * c(wg);
                    c_by += cov_z.view((pos * d2, g * d2), (d2, d2)) * c(wg);
                    for (h, &wh) in weights.iter().enumerate() {
                        c_y += cov_z.view((g * d2, h * d2), (d2, d2)) * c(wg * wh);
                    }
                }
                let mean_b = mean_z.rows(pos * d2, d2).into_owned();
                let c_b = cov_z.view((pos * d2, pos * d2), (d2, d2)).into_owned();
                let est = LmmseEstimator::from_moments(mean_b, mean_y, &c_b, &c_by, &c_y)?;
                error_grams.push(error_gram(&est.c_err, layout.dim));
                estimators.push(est);
            }
        }
        Ok(DownlinkEstimators { layout: layout.clone(), estimators, error_grams, n_samples: blocks.len() })
    }

    pub fn estimator(&self, k: usize, i: usize) -> &LmmseEstimator {
        &self.estimators[k * self.layout.num_users + i]
    }

    pub fn error_gram(&self, k: usize, i: usize) -> &CMat {
        &self.error_grams[k * self.layout.num_users + i]
    }
}
