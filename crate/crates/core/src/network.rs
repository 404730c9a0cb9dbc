//! Network geometry, large-scale fading, spatial correlation and channel
//! sampling.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::{Fading, SystemConfig};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec, C64};
use crate::rng::{self, purpose, SeedTree};

/// Pathloss at 1 m in dB.
pub const PATHLOSS_AT_1M_DB: f64 = -30.5;
/// Pathloss exponent times 10.
pub const PATHLOSS_SLOPE_DB: f64 = 36.7;
/// Standard deviation of log-normal shadowing in dB.
pub const SHADOWING_STD_DB: f64 = 4.0;
/// Height difference between APs and users in meters.
pub const VERTICAL_OFFSET_M: f64 = 10.0;
/// Receiver noise power over 20 MHz in dBm.
pub const NOISE_POWER_DBM: f64 = -94.0;

/// Channel gain in dB at 3-D distance `d` (meters), without shadowing.
pub fn pathloss_db(d: f64) -> f64 {
    PATHLOSS_AT_1M_DB - PATHLOSS_SLOPE_DB * d.max(VERTICAL_OFFSET_M).log10()
}

/// One drop of AP and user positions with the resulting channel statistics.
#[derive(Debug, Clone)]
pub struct NetworkRealization {
    pub num_aps: usize,
    pub num_users: usize,
    pub ap_antennas: usize,
    pub ue_antennas: usize,
    pub ap_positions: Vec<[f64; 2]>,
    pub ue_positions: Vec<[f64; 2]>,
    /// Noise-normalized large-scale fading, `L x K`. Each channel entry has
    /// variance `beta_lk`, so `tr(R_lk) = N M beta_lk`.
    pub beta: DMatrix<f64>,
    correlation: Vec<CMat>,
}

impl NetworkRealization {
    /// Builds a realization from explicit statistics. `correlation` is
    /// indexed `l * K + k`, each matrix `NM x NM`.
    pub fn from_parts(
        ap_antennas: usize,
        ue_antennas: usize,
        ap_positions: Vec<[f64; 2]>,
        ue_positions: Vec<[f64; 2]>,
        beta: DMatrix<f64>,
        correlation: Vec<CMat>,
    ) -> Result<Self> {
        let (l, k) = beta.shape();
        let nm = ap_antennas * ue_antennas;
        if correlation.len() != l * k || correlation.iter().any(|r| r.shape() != (nm, nm)) {
            return Err(Error::Data("correlation matrices do not match network dimensions".into()));
        }
        Ok(NetworkRealization {
            num_aps: l,
            num_users: k,
            ap_antennas,
            ue_antennas,
            ap_positions,
            ue_positions,
            beta,
            correlation,
        })
    }

    pub fn correlation(&self, l: usize, k: usize) -> &CMat {
        &self.correlation[l * self.num_users + k]
    }

    pub fn beta(&self, l: usize, k: usize) -> f64 {
        self.beta[(l, k)]
    }
}

/// Draws AP/user positions, shadowed pathloss and correlation matrices.
pub fn drop_network(cfg: &SystemConfig, seed: SeedTree) -> Result<NetworkRealization> {
    cfg.validate()?;
    let mut rng = seed.child(purpose::GEOMETRY).rng();
    let side = cfg.area_side;
    let (l_count, k_count) = (cfg.num_aps, cfg.num_users);
    let point = |rng: &mut rand_chacha::ChaCha8Rng| -> [f64; 2] {
        let x: f64 = rng.random::<f64>() * side;
        let y: f64 = rng.random::<f64>() * side;
        [x, y]
    };
    let aps: Vec<[f64; 2]> = (0..l_count).map(|_| point(&mut rng)).collect();
    let ues: Vec<[f64; 2]> = (0..k_count).map(|_| point(&mut rng)).collect();

    let noise_db = NOISE_POWER_DBM;
    let asd = cfg.asd_deg.to_radians();
    let mut beta = DMatrix::zeros(l_count, k_count);
    let mut correlation = Vec::with_capacity(l_count * k_count);
    for (l, ap) in aps.iter().enumerate() {
        for (k, ue) in ues.iter().enumerate() {
            let dx = ue[0] - ap[0];
            let dy = ue[1] - ap[1];
            let d = (dx * dx + dy * dy + VERTICAL_OFFSET_M * VERTICAL_OFFSET_M).sqrt();
            let shadow: f64 = rng.sample::<f64, _>(StandardNormal) * SHADOWING_STD_DB;
            let gain_db = pathloss_db(d) + shadow;
            let b = 10f64.powf((gain_db - noise_db) / 10.0);
            beta[(l, k)] = b;
            let r = match cfg.fading {
                Fading::Iid => linalg::identity(cfg.ap_antennas * cfg.ue_antennas),
                Fading::Correlated => {
                    let ap_angle = dy.atan2(dx);
                    let ue_angle = ap_angle + PI;
                    local_scattering_correlation(
                        ap_angle,
                        ue_angle,
                        asd,
                        cfg.ap_antennas,
                        cfg.ue_antennas,
                        cfg.antenna_spacing,
                    )?
                }
            };
            correlation.push(r * c(b));
        }
    }
    NetworkRealization::from_parts(cfg.ap_antennas, cfg.ue_antennas, aps, ues, beta, correlation)
}

/// Gaussian local-scattering correlation of a ULA with `n` elements.
///
/// Entry `(a, b)` is `E{exp(j 2 pi d (b - a) sin(angle + delta))}` with
/// `delta ~ N(0, asd^2)`. Unit diagonal.
pub fn ula_correlation(n: usize, angle: f64, asd: f64, spacing: f64) -> Result<CMat> {
    if !(asd > 0.0 && spacing > 0.0) {
        return Err(Error::Config("local scattering needs asd > 0 and spacing > 0".into()));
    }
    let first_row: Vec<C64> = (0..n).map(|lag| scattering_integral(lag as f64, angle, asd, spacing)).collect();
    Ok(CMat::from_fn(n, n, |a, b| if b >= a { first_row[b - a] } else { first_row[a - b].conj() }))
}

fn scattering_integral(lag: f64, angle: f64, asd: f64, spacing: f64) -> C64 {
    if lag == 0.0 {
        return c(1.0);
    }
    let k = 2.0 * PI * spacing * lag;
    let phase = |delta: f64| C64::from_polar(1.0, k * (angle + delta).sin());
    if asd < 0.5 {
        // Composite Simpson over +-10 standard deviations.
        let intervals = 1024;
        let half = 10.0 * asd;
        let h = 2.0 * half / intervals as f64;
        let norm = 1.0 / ((2.0 * PI).sqrt() * asd);
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..=intervals {
            let delta = -half + i as f64 * h;
            let w = if i == 0 || i == intervals {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += phase(delta) * (w * norm * (-0.5 * (delta / asd).powi(2)).exp());
        }
        acc * (h / 3.0)
    } else {
        // Wide spread: fold the Gaussian onto one period (wrapped normal via
        // its Fourier series) and use the periodic trapezoidal rule.
        let points = 1024;
        let h = 2.0 * PI / points as f64;
        let mut terms = Vec::new();
        let mut n = 1usize;
        loop {
            let coef = (-0.5 * (n as f64 * asd).powi(2)).exp();
            if coef < 1e-18 {
                break;
            }
            terms.push((n as f64, coef));
            n += 1;
        }
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..points {
            let delta = -PI + i as f64 * h;
            let density = (1.0 + 2.0 * terms.iter().map(|&(n, cf)| cf * (n * delta).cos()).sum::<f64>()) / (2.0 * PI);
            acc += phase(delta) * density;
        }
        acc * h
    }
}

/// Joint AP/user correlation `R_ue (x) R_ap` of `vec(H)` for an `N x M`
/// channel, with unit diagonal (trace `N M`).
pub fn local_scattering_correlation(
    ap_angle: f64,
    ue_angle: f64,
    asd: f64,
    n: usize,
    m: usize,
    spacing: f64,
) -> Result<CMat> {
    let r_ap = ula_correlation(n, ap_angle, asd, spacing)?;
    let r_ue = ula_correlation(m, ue_angle, asd, spacing)?;
    let r = linalg::kron(&r_ue, &r_ap);
    let nm = (n * m) as f64;
    let floor = -1e-10 * linalg::trace_re(&r) / nm;
    if linalg::min_eigenvalue(&r) < floor {
        return Err(Error::Defect("local scattering correlation is not PSD".into()));
    }
    Ok(linalg::hermitian_part(&r))
}

/// Channel realizations of one coherence block.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    pub num_aps: usize,
    pub num_users: usize,
    pub ap_antennas: usize,
    pub ue_antennas: usize,
    /// `vec(H_lk)`, indexed `l * K + k`.
    pub h: Vec<CVec>,
}

impl ChannelSet {
    pub fn vector(&self, l: usize, k: usize) -> &CVec {
        &self.h[l * self.num_users + k]
    }

    /// `H_lk` as an `N x M` matrix.
    pub fn matrix(&self, l: usize, k: usize) -> CMat {
        linalg::unvec(self.vector(l, k), self.ap_antennas, self.ue_antennas)
    }
}

/// Pre-factored `R_lk^{1/2}` for repeated sampling.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    num_aps: usize,
    num_users: usize,
    ap_antennas: usize,
    ue_antennas: usize,
    roots: Vec<CMat>,
}

impl ChannelSampler {
    pub fn new(net: &NetworkRealization) -> Result<Self> {
        let nm = (net.ap_antennas * net.ue_antennas) as f64;
        let roots = (0..net.num_aps * net.num_users)
            .map(|idx| {
                let r = &net.correlation[idx];
                let tol = 1e-10 * (linalg::trace_re(r) / nm).abs().max(f64::MIN_POSITIVE);
                linalg::psd_sqrt(r, tol)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ChannelSampler {
            num_aps: net.num_aps,
            num_users: net.num_users,
            ap_antennas: net.ap_antennas,
            ue_antennas: net.ue_antennas,
            roots,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelSet {
        let nm = self.ap_antennas * self.ue_antennas;
        let h = self.roots.iter().map(|root| root * rng::complex_normal_vec(rng, nm)).collect();
        ChannelSet {
            num_aps: self.num_aps,
            num_users: self.num_users,
            ap_antennas: self.ap_antennas,
            ue_antennas: self.ue_antennas,
            h,
        }
    }
}

/// `h_lk = R_lk^{1/2} z`, `z ~ CN(0, I)`, for every AP-user pair.
pub fn sample_channels(net: &NetworkRealization, seed: SeedTree) -> Result<ChannelSet> {
    let sampler = ChannelSampler::new(net)?;
    Ok(sampler.sample(&mut seed.child(purpose::CHANNEL).rng()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius, hermitian_eigenvalues, identity};

    #[test]
    fn identical_seeds_give_identical_drops() {
        let cfg = SystemConfig::default();
        let a = drop_network(&cfg, SeedTree::new(11)).unwrap();
        let b = drop_network(&cfg, SeedTree::new(11)).unwrap();
        assert_eq!(a.ap_positions, b.ap_positions);
        assert_eq!(a.beta, b.beta);
        for i in 0..cfg.num_aps * cfg.num_users {
            assert_eq!(a.correlation[i], b.correlation[i]);
        }
    }

    #[test]
    fn zero_area_uses_vertical_distance() {
        let cfg = SystemConfig { area_side: 0.0, fading: Fading::Iid, ..SystemConfig::default() };
        let net = drop_network(&cfg, SeedTree::new(3)).unwrap();
        assert!(net.ap_positions.iter().chain(&net.ue_positions).all(|p| p == &[0.0, 0.0]));
        // Without shadowing every link would be at pathloss_db(10); check the
        // median sits there.
        let mut db: Vec<f64> = net.beta.iter().map(|b| 10.0 * b.log10() + NOISE_POWER_DBM).collect();
        db.sort_by(f64::total_cmp);
        let median = db[db.len() / 2];
        assert!((median - pathloss_db(10.0)).abs() < 2.0, "median {median}");
    }

    #[test]
    fn correlation_trace_and_psd() {
        let cfg = SystemConfig::default();
        let net = drop_network(&cfg, SeedTree::new(5)).unwrap();
        let nm = (cfg.ap_antennas * cfg.ue_antennas) as f64;
        for l in 0..cfg.num_aps {
            for k in 0..cfg.num_users {
                let r = net.correlation(l, k);
                let b = net.beta(l, k);
                assert!(b > 0.0);
                let tr = linalg::trace_re(r);
                assert!((tr - nm * b).abs() <= 1e-12 * nm * b);
                assert!(hermitian_eigenvalues(r)[0] >= -1e-10 * tr / nm);
            }
        }
    }

    #[test]
    fn wide_spread_approaches_uniform_angles() {
        // Uniform angle of arrival gives J0(pi * lag) at half-wavelength spacing.
        let j0 = [1.0, -0.304_242_177_644_093_9, 0.220_276_908_539_934_5, -0.181_211_453_508_927_6];
        let r = ula_correlation(4, 0.3, 1e3, 0.5).unwrap();
        for lag in 0..4 {
            assert!((r[(0, lag)] - c(j0[lag])).norm() < 1e-6, "lag {lag}: {}", r[(0, lag)]);
        }
    }

    #[test]
    fn narrow_spread_is_rank_one() {
        let n = 6;
        let r = ula_correlation(n, 0.4, 1e-4, 0.5).unwrap();
        let ev = hermitian_eigenvalues(&r);
        assert!((ev[n - 1] - n as f64).abs() < 1e-3);
        let steer = CVec::from_fn(n, |a, _| C64::from_polar(1.0, 2.0 * PI * 0.5 * a as f64 * 0.4f64.sin()));
        let outer = &steer * steer.adjoint();
        // Entry (a, b) carries exp(j k (b - a) sin) = conj(s_a) s_b.
        let expected = outer.map(|z| z.conj());
        assert!(frobenius(&(&r - &expected)) < 1e-3 * n as f64);
    }

    #[test]
    fn zero_correlation_gives_zero_channel() {
        let net = NetworkRealization::from_parts(
            2,
            2,
            vec![[0.0, 0.0]],
            vec![[0.0, 0.0]],
            DMatrix::from_element(1, 1, 1.0),
            vec![CMat::zeros(4, 4)],
        )
        .unwrap();
        let ch = sample_channels(&net, SeedTree::new(1)).unwrap();
        assert!(ch.vector(0, 0).iter().all(|z| *z == C64::new(0.0, 0.0)));
    }

    #[test]
    fn indefinite_correlation_is_rejected() {
        let mut r = identity(2);
        r[(0, 0)] = c(-1.0);
        let net = NetworkRealization::from_parts(
            2,
            1,
            vec![[0.0, 0.0]],
            vec![[0.0, 0.0]],
            DMatrix::from_element(1, 1, 1.0),
            vec![r],
        )
        .unwrap();
        assert!(matches!(ChannelSampler::new(&net), Err(Error::Data(_))));
    }
}
