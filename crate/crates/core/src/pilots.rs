//! Pilot books, pilot assignment and uplink MMSE channel estimation.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec, C64};
use crate::network::{ChannelSet, NetworkRealization};
use crate::rng;

/// How users are mapped onto the `tau_p / M` pilot matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PilotAssignment {
    /// The first users take distinct pilots; each later user takes the
    /// pilot with the least received energy at its strongest AP.
    #[default]
    StrongestAp,
    /// User `k` gets pilot `k mod (tau_p / M)`.
    RoundRobin,
}

/// Orthonormal pilot matrices and the resulting reuse sets.
#[derive(Debug, Clone)]
pub struct PilotBook {
    pub tau_p: usize,
    pub ue_antennas: usize,
    /// Pilot index of each user.
    pub assignment: Vec<usize>,
    /// `Phi_k`, `tau_p x M`, one per user.
    pub phi: Vec<CMat>,
}

impl PilotBook {
    pub fn num_pilots(&self) -> usize {
        self.tau_p / self.ue_antennas
    }

    pub fn pilot_of(&self, k: usize) -> usize {
        self.assignment[k]
    }

    /// Users sharing pilot `t`, in increasing order.
    pub fn group(&self, t: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] == t).collect()
    }

    /// `P_k`: users sharing user `k`'s pilot (including `k`).
    pub fn reuse_set(&self, k: usize) -> Vec<usize> {
        self.group(self.assignment[k])
    }
}

/// `tau x tau` unitary DFT matrix.
pub fn dft_unitary(tau: usize) -> CMat {
    let s = 1.0 / (tau as f64).sqrt();
    CMat::from_fn(tau, tau, |a, b| C64::from_polar(s, -2.0 * PI * (a * b) as f64 / tau as f64))
}

/// Builds a pilot book from disjoint `M`-column blocks of a DFT matrix.
pub fn build_pilot_book(cfg: &SystemConfig, beta: &DMatrix<f64>, strategy: PilotAssignment) -> Result<PilotBook> {
    let m = cfg.ue_antennas;
    if cfg.tau_p == 0 || !cfg.tau_p.is_multiple_of(m) {
        return Err(Error::Config(format!("tau_p = {} is not a positive multiple of M = {m}", cfg.tau_p)));
    }
    let pilots = cfg.tau_p / m;
    let k_count = cfg.num_users;
    if beta.ncols() != k_count {
        return Err(Error::Data("beta does not match the number of users".into()));
    }
    let assignment = match strategy {
        PilotAssignment::RoundRobin => (0..k_count).map(|k| k % pilots).collect(),
        PilotAssignment::StrongestAp => {
            let mut assignment: Vec<usize> = Vec::with_capacity(k_count);
            for k in 0..k_count {
                if k < pilots {
                    assignment.push(k);
                    continue;
                }
                let master = (0..beta.nrows())
                    .max_by(|&a, &b| beta[(a, k)].total_cmp(&beta[(b, k)]).then(b.cmp(&a)))
                    .unwrap_or(0);
                let load = |t: usize| -> f64 {
                    assignment.iter().enumerate().filter(|(_, &p)| p == t).map(|(i, _)| beta[(master, i)]).sum()
                };
                let best = (0..pilots).min_by(|&a, &b| load(a).total_cmp(&load(b)).then(a.cmp(&b))).unwrap_or(0);
                assignment.push(best);
            }
            assignment
        }
    };
    let dft = dft_unitary(cfg.tau_p);
    let phi = assignment.iter().map(|&t| dft.columns(t * m, m).into_owned()).collect();
    Ok(PilotBook { tau_p: cfg.tau_p, ue_antennas: m, assignment, phi })
}

/// Correlated uplink pilot observations `y` for every (AP, pilot) pair.
#[derive(Debug, Clone)]
pub struct PilotObservations {
    pub num_pilots: usize,
    /// Indexed `l * num_pilots + t`.
    pub y: Vec<CVec>,
}

impl PilotObservations {
    pub fn at(&self, l: usize, t: usize) -> &CVec {
        &self.y[l * self.num_pilots + t]
    }

    /// `y_lk`, the observation AP `l` uses for user `k`.
    pub fn for_user(&self, book: &PilotBook, l: usize, k: usize) -> &CVec {
        self.at(l, book.pilot_of(k))
    }
}

/// `y_lk = sqrt(q tau_p) h_lk + sum_{i in P_k \ k} sqrt(q tau_p) h_li + n_lk`.
///
/// Users in the same reuse set see the same observation, so one vector per
/// (AP, pilot) is produced.
pub fn receive_uplink_pilots<R: Rng + ?Sized>(
    channels: &ChannelSet,
    book: &PilotBook,
    q: &[f64],
    rng: &mut R,
) -> PilotObservations {
    let nm = channels.ap_antennas * channels.ue_antennas;
    let pilots = book.num_pilots();
    let tau = book.tau_p as f64;
    let mut y = Vec::with_capacity(channels.num_aps * pilots);
    for l in 0..channels.num_aps {
        for t in 0..pilots {
            let mut v = rng::complex_normal_vec(rng, nm);
            for i in book.group(t) {
                v.axpy(c((q[i] * tau).sqrt()), channels.vector(l, i), ONE);
            }
            y.push(v);
        }
    }
    PilotObservations { num_pilots: pilots, y }
}

const ONE: C64 = C64::new(1.0, 0.0);

/// Received pilot matrix at one AP before correlation: `sum_i sqrt(q_i tau_p) H_li Phi_i^H + N_l`.
pub fn received_pilot_signal(channels: &ChannelSet, book: &PilotBook, q: &[f64], l: usize, noise: &CMat) -> CMat {
    let tau = book.tau_p as f64;
    let mut y = noise.clone();
    for i in 0..channels.num_users {
        y += channels.matrix(l, i) * book.phi[i].adjoint() * c((q[i] * tau).sqrt());
    }
    y
}

/// MMSE estimator statistics for one AP-user pair.
#[derive(Debug, Clone)]
pub struct LinkEstimator {
    /// `sqrt(q_k tau_p) R Psi^{-1}`.
    pub gain: CMat,
    pub psi: CMat,
    /// Covariance of the estimate.
    pub r_hat: CMat,
    /// Covariance of the estimation error.
    pub c_err: CMat,
}

/// `Psi_lk = tau_p sum_{i in P_k} q_i R_li + I`.
pub fn observation_covariance(net: &NetworkRealization, book: &PilotBook, q: &[f64], l: usize, k: usize) -> CMat {
    let nm = net.ap_antennas * net.ue_antennas;
    let tau = book.tau_p as f64;
    let mut psi = linalg::identity(nm);
    for i in book.reuse_set(k) {
        psi += net.correlation(l, i) * c(tau * q[i]);
    }
    psi
}

/// Uplink MMSE estimator for a single link.
pub fn link_estimator(r: &CMat, psi: &CMat, q_k: f64, tau_p: usize) -> Result<LinkEstimator> {
    let a = q_k * tau_p as f64;
    let psi_inv_r = linalg::hpd_solve(psi, r)?;
    let gain = psi_inv_r.adjoint() * c(a.sqrt());
    let r_hat = linalg::hermitian_part(&(r * &psi_inv_r * c(a)));
    let c_err = linalg::hermitian_part(&(r - &r_hat));
    Ok(LinkEstimator { gain, psi: psi.clone(), r_hat, c_err })
}

/// `h_hat = sqrt(q_k tau_p) R Psi^{-1} y` together with the error covariance.
pub fn mmse_estimate_uplink(y: &CVec, r: &CMat, psi: &CMat, q_k: f64, tau_p: usize) -> Result<(CVec, CMat)> {
    if y.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Data("non-finite pilot observation".into()));
    }
    let est = link_estimator(r, psi, q_k, tau_p)?;
    Ok((&est.gain * y, est.c_err))
}

/// Estimators for every AP-user pair of a drop.
#[derive(Debug, Clone)]
pub struct UplinkStatistics {
    pub num_aps: usize,
    pub num_users: usize,
    /// Indexed `l * K + k`.
    pub links: Vec<LinkEstimator>,
}

impl UplinkStatistics {
    pub fn new(net: &NetworkRealization, book: &PilotBook, q: &[f64]) -> Result<Self> {
        let mut links = Vec::with_capacity(net.num_aps * net.num_users);
        for l in 0..net.num_aps {
            for k in 0..net.num_users {
                let psi = observation_covariance(net, book, q, l, k);
                links.push(link_estimator(net.correlation(l, k), &psi, q[k], book.tau_p)?);
            }
        }
        Ok(UplinkStatistics { num_aps: net.num_aps, num_users: net.num_users, links })
    }

    pub fn link(&self, l: usize, k: usize) -> &LinkEstimator {
        &self.links[l * self.num_users + k]
    }

    /// Applies every link estimator to the pilot observations; indexed `l * K + k`.
    pub fn estimate(&self, book: &PilotBook, obs: &PilotObservations) -> Vec<CVec> {
        let mut out = Vec::with_capacity(self.links.len());
        for l in 0..self.num_aps {
            for k in 0..self.num_users {
                out.push(&self.link(l, k).gain * obs.for_user(book, l, k));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius, hermitian_eigenvalues, identity, ZERO};
    use crate::rng::SeedTree;

    fn cfg(k: usize, m: usize, tau_p: usize) -> SystemConfig {
        SystemConfig { num_users: k, ue_antennas: m, tau_p, num_aps: 3, ap_antennas: 2, ..SystemConfig::default() }
    }

    #[test]
    fn two_users_disjoint_blocks() {
        let c = cfg(2, 2, 4);
        let book = build_pilot_book(&c, &DMatrix::from_element(3, 2, 1.0), PilotAssignment::StrongestAp).unwrap();
        let cross = book.phi[0].adjoint() * &book.phi[1];
        assert!(cross.iter().all(|z| z.norm() < 1e-12));
        let own = book.phi[0].adjoint() * &book.phi[0];
        assert!(frobenius(&(own - identity(2))) < 1e-12);
    }

    #[test]
    fn four_users_two_groups() {
        let c = cfg(4, 2, 4);
        let book = build_pilot_book(&c, &DMatrix::from_element(3, 4, 1.0), PilotAssignment::RoundRobin).unwrap();
        assert_eq!(book.group(0), vec![0, 2]);
        assert_eq!(book.group(1), vec![1, 3]);
        let within = book.phi[0].adjoint() * &book.phi[2];
        assert!(frobenius(&(within - identity(2))) < 1e-12);
        let across = book.phi[0].adjoint() * &book.phi[1];
        assert!(frobenius(&across) < 1e-12);
    }

    #[test]
    fn odd_pilot_length_is_rejected() {
        let c = cfg(5, 2, 5);
        let r = build_pilot_book(&c, &DMatrix::from_element(3, 5, 1.0), PilotAssignment::StrongestAp);
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn strongest_ap_avoids_loaded_pilot() {
        // Two pilots, three users. User 2's strongest AP is AP 0 where user 0
        // is strong and user 1 weak, so it should join user 1.
        let c = cfg(3, 1, 2);
        let beta = DMatrix::from_row_slice(3, 3, &[10.0, 0.1, 5.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        let book = build_pilot_book(&c, &beta, PilotAssignment::StrongestAp).unwrap();
        assert_eq!(book.assignment, vec![0, 1, 1]);
    }

    fn small_net(n: usize, m: usize, r: CMat, users: usize) -> NetworkRealization {
        NetworkRealization::from_parts(
            n,
            m,
            vec![[0.0, 0.0]],
            vec![[0.0, 0.0]; users],
            DMatrix::from_element(1, users, 1.0),
            vec![r; users],
        )
        .unwrap()
    }

    #[test]
    fn correlation_step_matches_reduced_model() {
        let c4 = SystemConfig { num_aps: 1, ap_antennas: 2, num_users: 4, ue_antennas: 2, tau_p: 4, ..SystemConfig::default() };
        let net = small_net(2, 2, identity(4), 4);
        let book = build_pilot_book(&c4, &net.beta, PilotAssignment::RoundRobin).unwrap();
        let ch = crate::network::sample_channels(&net, SeedTree::new(4)).unwrap();
        let q = vec![1.0, 2.0, 3.0, 4.0];
        let y = received_pilot_signal(&ch, &book, &q, 0, &CMat::zeros(2, 4));
        let y0 = y * &book.phi[0];
        let expected = ch.matrix(0, 0) * c((1.0f64 * 4.0).sqrt()) + ch.matrix(0, 2) * c((3.0f64 * 4.0).sqrt());
        assert!(frobenius(&(y0 - expected)) < 1e-12);
    }

    #[test]
    fn scalar_estimate_closed_form() {
        let beta = 0.7;
        let (q, tau) = (2.0, 3usize);
        let r = CMat::from_element(1, 1, c(beta));
        let psi = CMat::from_element(1, 1, c(q * tau as f64 * beta + 1.0));
        let y = CVec::from_element(1, C64::new(0.3, -1.1));
        let (h, err) = mmse_estimate_uplink(&y, &r, &psi, q, tau).unwrap();
        let a = (q * tau as f64).sqrt() * beta / (q * tau as f64 * beta + 1.0);
        assert!((h[0] - y[0] * a).norm() < 1e-14);
        let expected_err = beta - q * tau as f64 * beta * beta / (q * tau as f64 * beta + 1.0);
        assert!((err[(0, 0)].re - expected_err).abs() < 1e-14);
    }

    #[test]
    fn zero_correlation_gives_zero_estimate() {
        let r = CMat::zeros(4, 4);
        let psi = identity(4);
        let y = CVec::from_element(4, c(1.0));
        let (h, err) = mmse_estimate_uplink(&y, &r, &psi, 1.0, 2).unwrap();
        assert!(h.iter().all(|z| *z == ZERO));
        assert!(err.iter().all(|z| *z == ZERO));
    }

    #[test]
    fn non_finite_observation_is_rejected() {
        let y = CVec::from_element(1, C64::new(f64::NAN, 0.0));
        let r = identity(1);
        assert!(mmse_estimate_uplink(&y, &r, &identity(1), 1.0, 1).is_err());
    }

    #[test]
    fn covariances_split_and_are_psd() {
        let cfg = SystemConfig { num_aps: 4, ap_antennas: 2, num_users: 4, ue_antennas: 2, tau_p: 4, ..SystemConfig::default() };
        let net = crate::network::drop_network(&cfg, SeedTree::new(9)).unwrap();
        let book = build_pilot_book(&cfg, &net.beta, PilotAssignment::StrongestAp).unwrap();
        let q = vec![cfg.ul_power; 4];
        let stats = UplinkStatistics::new(&net, &book, &q).unwrap();
        for l in 0..4 {
            for k in 0..4 {
                let e = stats.link(l, k);
                let r = net.correlation(l, k);
                assert!(frobenius(&(&e.r_hat + &e.c_err - r)) <= 1e-10 * frobenius(r));
                assert!(hermitian_eigenvalues(&e.c_err)[0] >= -1e-10 * linalg::trace_re(r));
                assert!(hermitian_eigenvalues(&e.psi)[0] >= 1.0 - 1e-9);
            }
        }
    }

    #[test]
    fn mse_shrinks_with_pilot_energy() {
        let r = CMat::from_fn(4, 4, |a, b| c(0.8f64.powi((a as i32 - b as i32).abs())));
        let mut last = f64::INFINITY;
        for qt in [0.01, 0.1, 1.0, 10.0, 100.0, 1e4] {
            let psi = identity(4) + &r * c(qt);
            let e = link_estimator(&r, &psi, qt, 1).unwrap();
            let mse = linalg::trace_re(&e.c_err);
            assert!(mse <= last + 1e-12);
            last = mse;
        }
    }

    #[test]
    fn pilot_sharing_never_helps() {
        let r = CMat::from_fn(4, 4, |a, b| c(0.6f64.powi((a as i32 - b as i32).abs())));
        let other = identity(4) * c(0.5);
        let alone = link_estimator(&r, &(identity(4) + &r * c(10.0)), 10.0, 1).unwrap();
        let shared = link_estimator(&r, &(identity(4) + (&r + &other) * c(10.0)), 10.0, 1).unwrap();
        assert!(linalg::trace_re(&shared.c_err) >= linalg::trace_re(&alone.c_err) - 1e-12);
    }
}
