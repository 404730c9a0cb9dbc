//! Closed-form computational complexity and fronthaul load per coherence
//! block.

use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};

/// Dimensions entering the cost formulas. The pilot length is independent of
/// `M` here, unlike in [`SystemConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostConfig {
    #[serde(rename = "L")]
    pub num_aps: u64,
    #[serde(rename = "N")]
    pub ap_antennas: u64,
    #[serde(rename = "M")]
    pub ue_antennas: u64,
    #[serde(rename = "K")]
    pub num_users: u64,
    pub tau_p: u64,
    pub tau_c: u64,
}

impl From<&SystemConfig> for CostConfig {
    fn from(cfg: &SystemConfig) -> Self {
        CostConfig {
            num_aps: cfg.num_aps as u64,
            ap_antennas: cfg.ap_antennas as u64,
            ue_antennas: cfg.ue_antennas as u64,
            num_users: cfg.num_users as u64,
            tau_p: cfg.tau_p as u64,
            tau_c: cfg.tau_c as u64,
        }
    }
}

/// Integer counts per coherence block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CostReport {
    /// Complex multiplications for uplink channel estimation, whole network.
    pub ul_estimation_mults: u64,
    /// Complex multiplications for the centralized MMSE precoder, whole network.
    pub precoder_mults: u64,
    /// Complex scalars per AP sent to the CPU for channel estimation.
    pub fronthaul_pilot_scalars: u64,
    /// Complex scalars per AP for the downlink data.
    pub fronthaul_data_scalars: u64,
}

fn overflow(what: &str) -> Error {
    Error::Range(format!("{what} overflows a 64-bit count"))
}

fn mul(a: u64, b: u64, what: &str) -> Result<u64> {
    a.checked_mul(b).ok_or_else(|| overflow(what))
}

fn add(a: u64, b: u64, what: &str) -> Result<u64> {
    a.checked_add(b).ok_or_else(|| overflow(what))
}

/// `K((NM)^2 + N tau_p)` multiplications for uplink estimation.
pub fn ul_estimation_mults(cfg: &CostConfig) -> Result<u64> {
    let what = "uplink estimation complexity";
    let nm = mul(cfg.ap_antennas, cfg.ue_antennas, what)?;
    let per_user = add(mul(nm, nm, what)?, mul(cfg.ap_antennas, cfg.tau_p, what)?, what)?;
    mul(cfg.num_users, per_user, what)
}

/// `((NL)^2 + NL)/2 MK + (NL)^2 M + ((NL)^3 - NL)/3` multiplications for
/// the centralized precoder.
pub fn precoder_mults(cfg: &CostConfig) -> Result<u64> {
    let what = "precoder complexity";
    let nl = mul(cfg.ap_antennas, cfg.num_aps, what)?;
    let nl2 = mul(nl, nl, what)?;
    let gram = mul(add(nl2, nl, what)? / 2, mul(cfg.ue_antennas, cfg.num_users, what)?, what)?;
    let solve = mul(nl2, cfg.ue_antennas, what)?;
    let factor = (mul(nl2, nl, what)? - nl) / 3;
    add(add(gram, solve, what)?, factor, what)
}

/// Per-AP fronthaul load: `(tau_p N M, (tau_c - tau_p) N)`. Same-stream and
/// separate-stream transmission share both numbers.
pub fn fronthaul(cfg: &CostConfig) -> Result<(u64, u64)> {
    let what = "fronthaul load";
    if cfg.tau_p > cfg.tau_c {
        return Err(Error::Config(format!("tau_p = {} exceeds tau_c = {}", cfg.tau_p, cfg.tau_c)));
    }
    let pilot = mul(mul(cfg.tau_p, cfg.ap_antennas, what)?, cfg.ue_antennas, what)?;
    let data = mul(cfg.tau_c - cfg.tau_p, cfg.ap_antennas, what)?;
    Ok((pilot, data))
}

pub fn cost_report(cfg: &CostConfig) -> Result<CostReport> {
    let (fronthaul_pilot_scalars, fronthaul_data_scalars) = fronthaul(cfg)?;
    Ok(CostReport {
        ul_estimation_mults: ul_estimation_mults(cfg)?,
        precoder_mults: precoder_mults(cfg)?,
        fronthaul_pilot_scalars,
        fronthaul_data_scalars,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(l: u64, n: u64, m: u64, k: u64, tau_p: u64, tau_c: u64) -> CostConfig {
        CostConfig { num_aps: l, ap_antennas: n, ue_antennas: m, num_users: k, tau_p, tau_c }
    }

    #[test]
    fn reference_configuration() {
        let r = cost_report(&cfg(20, 4, 2, 5, 5, 200)).unwrap();
        assert_eq!(r.ul_estimation_mults, 420);
        assert_eq!(r.precoder_mults, 215_840);
        assert_eq!(r.fronthaul_pilot_scalars, 40);
        assert_eq!(r.fronthaul_data_scalars, 780);
    }

    #[test]
    fn unit_case() {
        let c = cfg(1, 1, 1, 1, 1, 1);
        assert_eq!(ul_estimation_mults(&c).unwrap(), 2);
        assert_eq!(precoder_mults(&c).unwrap(), 2);
        assert_eq!(fronthaul(&c).unwrap(), (1, 0));
    }

    #[test]
    fn absurd_sizes_overflow() {
        let c = cfg(1 << 22, 1 << 22, 2, 5, 5, 200);
        assert!(matches!(precoder_mults(&c), Err(Error::Range(_))));
    }

    #[test]
    fn pilot_longer_than_block() {
        assert!(matches!(fronthaul(&cfg(1, 1, 1, 1, 3, 2)), Err(Error::Config(_))));
    }

    #[test]
    fn json_rejects_unknown_keys() {
        let ok: CostConfig = serde_json::from_str(r#"{"L":20,"N":4,"M":2,"K":5,"tau_p":5,"tau_c":200}"#).unwrap();
        assert_eq!(ok, cfg(20, 4, 2, 5, 5, 200));
        assert!(serde_json::from_str::<CostConfig>(r#"{"L":20,"N":4,"M":2,"K":5,"tau_p":5,"tau_c":200,"x":1}"#).is_err());
    }

    proptest! {
        #[test]
        fn precoder_cost_is_affine_in_m(l in 1u64..30, n in 1u64..10, k in 1u64..10, m in 1u64..8) {
            let at = |m| precoder_mults(&cfg(l, n, m, k, 1, 10)).unwrap() as i128;
            let step = at(m + 1) - at(m);
            prop_assert_eq!(step, at(m + 2) - at(m + 1));
            // The inversion term does not depend on M.
            let nl = (n * l) as i128;
            prop_assert_eq!(at(m) - m as i128 * step, (nl * nl * nl - nl) / 3);
        }
    }
}
