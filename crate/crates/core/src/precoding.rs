//! MMSE precoders for same-stream and separate-stream transmission, MR, and
//! the power normalizations.
//!
//! Channel estimates are passed as `N x M` matrices indexed `l * K + k`;
//! error covariances and second moments as `NM x NM` covariances of
//! `vec(H_lk)` with the same indexing.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, c, diag_block_sum, identity, CMat};
use crate::streams::{Selection, SelectionSet, StreamPlan};

/// Shapes shared by every precoder computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub num_aps: usize,
    pub num_users: usize,
    pub ap_antennas: usize,
    pub ue_antennas: usize,
}

impl Dims {
    fn idx(&self, l: usize, k: usize) -> usize {
        l * self.num_users + k
    }

    fn check_estimates(&self, h_hat: &[CMat]) -> Result<()> {
        if h_hat.len() != self.num_aps * self.num_users {
            return Err(Error::Data(format!("expected {} channel estimates, got {}", self.num_aps * self.num_users, h_hat.len())));
        }
        for h in h_hat {
            if h.shape() != (self.ap_antennas, self.ue_antennas) {
                return Err(Error::Data(format!("channel estimate has shape {:?}", h.shape())));
            }
            if !linalg::is_finite(h) {
                return Err(Error::Data("non-finite channel estimate".into()));
            }
        }
        Ok(())
    }
}

/// `E{X S X^H}` for the columns of `X` kept by `sel`, from the covariance of
/// `vec(X)`.
pub fn selected_column_moment(cov: &CMat, rows: usize, sel: &Selection) -> CMat {
    diag_block_sum(cov, rows, |m| sel.contains(m))
}

/// MR precoding: the precoder is the channel itself.
pub fn mr_precoder(h: &CMat) -> CMat {
    h.clone()
}

/// Stacks `[H_1k; ...; H_Lk]` into an `LN x M` matrix.
pub fn stack_user(dims: &Dims, h: &[CMat], k: usize) -> CMat {
    let (n, m) = (dims.ap_antennas, dims.ue_antennas);
    let mut out = CMat::zeros(dims.num_aps * n, m);
    for l in 0..dims.num_aps {
        out.view_mut((l * n, 0), (n, m)).copy_from(&h[dims.idx(l, k)]);
    }
    out
}

fn mask_columns(mut a: CMat, sel: &Selection) -> CMat {
    for (j, keep) in sel.0.iter().enumerate() {
        if !keep {
            a.column_mut(j).fill(linalg::ZERO);
        }
    }
    a
}

/// Explicit centralized bracket
/// `sum_i q_i (H^_i S_i H^_i^H + C_{H~_i S_i}) + I_LN`, where `S_i` holds
/// user `i`'s active streams.
pub fn centralized_bracket(dims: &Dims, h_hat: &[CMat], c_err: &[CMat], q: &[f64], plan: &StreamPlan) -> Result<CMat> {
    dims.check_estimates(h_hat)?;
    let (n, ln) = (dims.ap_antennas, dims.num_aps * dims.ap_antennas);
    let mut a = identity(ln);
    for i in 0..dims.num_users {
        let hs = mask_columns(stack_user(dims, h_hat, i), &plan.active[i]);
        a += (&hs * hs.adjoint()) * c(q[i]);
        for l in 0..dims.num_aps {
            let block = selected_column_moment(&c_err[dims.idx(l, i)], n, &plan.active[i]) * c(q[i]);
            let mut v = a.view_mut((l * n, l * n), (n, n));
            v += block;
        }
    }
    Ok(a)
}

/// Centralized MMSE precoders by a direct `LN x LN` solve. Reference route
/// for [`CentralizedPrecoder`].
pub fn centralized_direct(dims: &Dims, h_hat: &[CMat], c_err: &[CMat], q: &[f64], plan: &StreamPlan) -> Result<Vec<CMat>> {
    let a = centralized_bracket(dims, h_hat, c_err, q, plan)?;
    let chol = linalg::cholesky(&a)?;
    Ok((0..dims.num_users)
        .map(|k| mask_columns(chol.solve(&stack_user(dims, h_hat, k)) * c(q[k]), &plan.active[k]))
        .collect())
}

/// Centralized MMSE precoder with the statistical part of the bracket
/// factored once per stream plan.
///
/// The bracket is `X X^H + D` with `D` block diagonal over APs, so
/// `A^{-1} X = D^{-1} X (I + X^H D^{-1} X)^{-1}` needs only `N x N` and
/// `T x T` factorizations, `T` being the number of active streams.
#[derive(Debug, Clone)]
pub struct CentralizedPrecoder {
    dims: Dims,
    q: Vec<f64>,
    plan: StreamPlan,
    d_inv: Vec<CMat>,
}

impl CentralizedPrecoder {
    pub fn new(dims: Dims, c_err: &[CMat], q: &[f64], plan: &StreamPlan) -> Result<Self> {
        let n = dims.ap_antennas;
        let mut d_inv = Vec::with_capacity(dims.num_aps);
        for l in 0..dims.num_aps {
            let mut d = identity(n);
            for i in 0..dims.num_users {
                d += selected_column_moment(&c_err[dims.idx(l, i)], n, &plan.active[i]) * c(q[i]);
            }
            d_inv.push(linalg::hpd_inverse(&d)?);
        }
        Ok(CentralizedPrecoder { dims, q: q.to_vec(), plan: plan.clone(), d_inv })
    }

    /// `W_k` (`LN x M`, inactive columns zero) for every user.
    pub fn compute(&self, h_hat: &[CMat]) -> Result<Vec<CMat>> {
        let d = &self.dims;
        d.check_estimates(h_hat)?;
        let (n, m) = (d.ap_antennas, d.ue_antennas);
        let ln = d.num_aps * n;
        let mut cols = Vec::new();
        for i in 0..d.num_users {
            cols.extend(self.plan.active[i].streams().map(|s| (i, s)));
        }
        let t = cols.len();
        let mut x = CMat::zeros(ln, t);
        for (col, &(i, s)) in cols.iter().enumerate() {
            let sq = self.q[i].sqrt();
            for l in 0..d.num_aps {
                let h = &h_hat[d.idx(l, i)];
                for a in 0..n {
                    x[(l * n + a, col)] = h[(a, s)] * sq;
                }
            }
        }
        let mut z = CMat::zeros(ln, t);
        for l in 0..d.num_aps {
            let zl = &self.d_inv[l] * x.rows(l * n, n);
            z.rows_mut(l * n, n).copy_from(&zl);
        }
        let inner = identity(t) + x.adjoint() * &z;
        // F = Z (I + X^H Z)^{-1}; the inner matrix is Hermitian, so solve
        // from the right through its adjoint.
        let f = linalg::hpd_solve(&inner, &z.adjoint())?.adjoint();
        let mut out = vec![CMat::zeros(ln, m); d.num_users];
        for (col, &(i, s)) in cols.iter().enumerate() {
            // q_i A^{-1} h_is = sqrt(q_i) A^{-1} x_col
            let scale = c(self.q[i].sqrt());
            out[i].set_column(s, &(f.column(col) * scale));
        }
        Ok(out)
    }
}

/// How much CSI the APs exchange in separate-stream transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsiSharing {
    /// Estimates of every AP are available to every AP.
    Shared,
    /// Each AP knows its own estimates and only statistics of the others.
    Local,
}

/// Separate-stream MMSE precoders `W'_lk Gamma_lk`.
#[derive(Debug, Clone)]
pub struct SeparatePrecoder {
    dims: Dims,
    sharing: CsiSharing,
    q: Vec<f64>,
    gammas: SelectionSet,
    /// Statistical part of the bracket per AP (one shared copy with CSI
    /// sharing), identity included.
    fixed: Vec<CMat>,
}

impl SeparatePrecoder {
    /// `second_moments` holds the covariance of `vec(H_lk)`; it is only read
    /// without CSI sharing.
    pub fn new(
        dims: Dims,
        sharing: CsiSharing,
        c_err: &[CMat],
        second_moments: &[CMat],
        q: &[f64],
        gammas: &SelectionSet,
    ) -> Result<Self> {
        gammas.validate_separate()?;
        let n = dims.ap_antennas;
        let err_term = |l: usize| -> CMat {
            let mut acc = CMat::zeros(n, n);
            for i in 0..dims.num_users {
                acc += selected_column_moment(&c_err[dims.idx(l, i)], n, gammas.gamma(l, i)) * c(q[i]);
            }
            acc
        };
        let fixed = match sharing {
            CsiSharing::Shared => {
                let mut a = identity(n);
                for j in 0..dims.num_aps {
                    a += err_term(j);
                }
                vec![a]
            }
            CsiSharing::Local => {
                let moments: Vec<CMat> = (0..dims.num_aps)
                    .map(|j| {
                        let mut acc = CMat::zeros(n, n);
                        for i in 0..dims.num_users {
                            acc += selected_column_moment(&second_moments[dims.idx(j, i)], n, gammas.gamma(j, i)) * c(q[i]);
                        }
                        acc
                    })
                    .collect();
                let total: CMat = moments.iter().fold(CMat::zeros(n, n), |acc, x| acc + x);
                (0..dims.num_aps).map(|l| identity(n) + err_term(l) + (&total - &moments[l])).collect()
            }
        };
        Ok(SeparatePrecoder { dims, sharing, q: q.to_vec(), gammas: gammas.clone(), fixed })
    }

    pub fn gammas(&self) -> &SelectionSet {
        &self.gammas
    }

    fn instantaneous(&self, h_hat: &[CMat], l: usize) -> CMat {
        let n = self.dims.ap_antennas;
        let mut acc = CMat::zeros(n, n);
        for i in 0..self.dims.num_users {
            let g = self.gammas.gamma(l, i);
            if g.rank() == 0 {
                continue;
            }
            let hs = mask_columns(h_hat[self.dims.idx(l, i)].clone(), g);
            acc += (&hs * hs.adjoint()) * c(self.q[i]);
        }
        acc
    }

    /// Bracket used by AP `l` for the current estimates.
    pub fn bracket(&self, h_hat: &[CMat], l: usize) -> Result<CMat> {
        self.dims.check_estimates(h_hat)?;
        Ok(match self.sharing {
            CsiSharing::Shared => {
                let mut a = self.fixed[0].clone();
                for j in 0..self.dims.num_aps {
                    a += self.instantaneous(h_hat, j);
                }
                a
            }
            CsiSharing::Local => &self.fixed[l] + self.instantaneous(h_hat, l),
        })
    }

    /// `W'_lk Gamma_lk` (`N x M`) for each `(l, k)` with a nonzero selection,
    /// indexed `l * K + k`.
    pub fn compute(&self, h_hat: &[CMat]) -> Result<Vec<Option<CMat>>> {
        let d = &self.dims;
        let mut out = vec![None; d.num_aps * d.num_users];
        let shared = match self.sharing {
            CsiSharing::Shared => Some(linalg::cholesky(&self.bracket(h_hat, 0)?)?),
            CsiSharing::Local => None,
        };
        for l in 0..d.num_aps {
            let served: Vec<usize> = (0..d.num_users).filter(|&k| self.gammas.gamma(l, k).rank() > 0).collect();
            if served.is_empty() {
                continue;
            }
            let local;
            let chol = match &shared {
                Some(ch) => ch,
                None => {
                    local = linalg::cholesky(&self.bracket(h_hat, l)?)?;
                    &local
                }
            };
            for k in served {
                let w = chol.solve(&h_hat[d.idx(l, k)]) * c(self.q[k]);
                out[d.idx(l, k)] = Some(mask_columns(w, self.gammas.gamma(l, k)));
            }
        }
        Ok(out)
    }
}

/// `rho_k = rho_d sqrt(sum_l beta_lk) / sum_i sqrt(sum_l beta_li)`.
pub fn same_stream_powers(beta: &DMatrix<f64>, rho_d: f64) -> Result<Vec<f64>> {
    let weights: Vec<f64> = beta.column_iter().map(|col| col.sum().sqrt()).collect();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::Degenerate("all users have zero large-scale gain".into()));
    }
    Ok(weights.iter().map(|w| rho_d * w / total).collect())
}

/// `rho_lk = rho_d rank(Gamma_lk) sqrt(beta_lk) / sum_i rank(Gamma_li) sqrt(beta_li)`;
/// zero at APs that serve nobody.
pub fn separate_stream_powers(beta: &DMatrix<f64>, gammas: &SelectionSet, rho_d: f64) -> DMatrix<f64> {
    let (l_count, k_count) = beta.shape();
    let mut rho = DMatrix::zeros(l_count, k_count);
    for l in 0..l_count {
        let w: Vec<f64> = (0..k_count).map(|k| gammas.gamma(l, k).rank() as f64 * beta[(l, k)].sqrt()).collect();
        let total: f64 = w.iter().sum();
        if total > 0.0 {
            for k in 0..k_count {
                rho[(l, k)] = rho_d * w[k] / total;
            }
        }
    }
    rho
}

/// Scale factors applied to unnormalized precoders, and the resulting
/// average transmit power of each AP.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaling {
    pub coef: Vec<f64>,
    pub ap_power: Vec<f64>,
}

/// Same-stream normalization.
///
/// `mean_norms[(l, k)]` is `E{||W_lk||_F^2}` of the unnormalized precoder.
/// After `W_k <- sqrt(rho_k) W_k / sqrt(sum_l E{||W_lk||^2})`, all
/// coefficients are scaled by a common factor so the busiest AP transmits
/// exactly `rho_d`.
pub fn normalize_same_stream(mean_norms: &DMatrix<f64>, rho: &[f64], rho_d: f64) -> Result<Scaling> {
    let (l_count, k_count) = mean_norms.shape();
    let mut coef = Vec::with_capacity(k_count);
    for k in 0..k_count {
        let total = mean_norms.column(k).sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::Degenerate(format!("precoder of user {k} has zero power")));
        }
        coef.push((rho[k] / total).sqrt());
    }
    let power = |coef: &[f64]| -> Vec<f64> {
        (0..l_count).map(|l| (0..k_count).map(|k| coef[k] * coef[k] * mean_norms[(l, k)]).sum()).collect()
    };
    let peak = power(&coef).into_iter().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::Degenerate("no AP transmits any power".into()));
    }
    let boost = (rho_d / peak).sqrt();
    coef.iter_mut().for_each(|x| *x *= boost);
    let ap_power = power(&coef);
    Ok(Scaling { coef, ap_power })
}

/// Separate-stream normalization: `W'_lk <- sqrt(rho_lk) W'_lk / sqrt(E{||W'_lk Gamma_lk||^2})`.
///
/// `coef` is indexed `l * K + k`; unserved pairs get zero.
pub fn normalize_separate_stream(mean_norms: &DMatrix<f64>, rho: &DMatrix<f64>, gammas: &SelectionSet) -> Result<Scaling> {
    let (l_count, k_count) = mean_norms.shape();
    let mut coef = vec![0.0; l_count * k_count];
    let mut ap_power = vec![0.0; l_count];
    for l in 0..l_count {
        for k in 0..k_count {
            if gammas.gamma(l, k).rank() == 0 {
                continue;
            }
            let norm = mean_norms[(l, k)];
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(Error::Degenerate(format!("precoder from AP {l} to user {k} has zero power")));
            }
            coef[l * k_count + k] = (rho[(l, k)] / norm).sqrt();
            ap_power[l] += rho[(l, k)];
        }
    }
    Ok(Scaling { coef, ap_power })
}
