//! System parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Small-scale fading model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Fading {
    /// Kronecker local-scattering correlation at both link ends.
    #[default]
    Correlated,
    /// `R_lk = beta_lk I`.
    Iid,
}

/// Uplink transmit power in mW (normalized by the noise power in the model).
pub const DEFAULT_UL_POWER_MW: f64 = 100.0;
/// Per-AP downlink power budget in mW.
pub const DEFAULT_DL_POWER_MW: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Number of APs.
    #[serde(rename = "L")]
    pub num_aps: usize,
    /// Antennas per AP.
    #[serde(rename = "N")]
    pub ap_antennas: usize,
    /// Number of users.
    #[serde(rename = "K")]
    pub num_users: usize,
    /// Antennas per user.
    #[serde(rename = "M")]
    pub ue_antennas: usize,
    /// Coherence block length in symbols.
    pub tau_c: usize,
    /// Pilot length in symbols, a multiple of `M`.
    pub tau_p: usize,
    /// Side of the square coverage area in meters.
    #[serde(default = "default_area")]
    pub area_side: f64,
    /// Angular standard deviation of the local scattering model (degrees).
    #[serde(default = "default_asd")]
    pub asd_deg: f64,
    /// Per-user pilot/data power `q_k`, noise-normalized.
    #[serde(default = "default_ul_power")]
    pub ul_power: f64,
    /// Per-AP downlink power budget `rho_d`, noise-normalized.
    #[serde(default = "default_dl_power")]
    pub dl_power: f64,
    #[serde(default)]
    pub fading: Fading,
    /// ULA element spacing in wavelengths.
    #[serde(default = "default_spacing")]
    pub antenna_spacing: f64,
}

fn default_area() -> f64 {
    1000.0
}
fn default_asd() -> f64 {
    15.0
}
fn default_ul_power() -> f64 {
    DEFAULT_UL_POWER_MW
}
fn default_dl_power() -> f64 {
    DEFAULT_DL_POWER_MW
}
fn default_spacing() -> f64 {
    0.5
}

/// Pilot length used by the presets: `ceil(K/2)` orthogonal pilot matrices.
pub fn default_pilot_length(num_users: usize, ue_antennas: usize) -> usize {
    num_users.div_ceil(2) * ue_antennas
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            num_aps: 20,
            ap_antennas: 4,
            num_users: 5,
            ue_antennas: 2,
            tau_c: 200,
            tau_p: default_pilot_length(5, 2),
            area_side: default_area(),
            asd_deg: default_asd(),
            ul_power: DEFAULT_UL_POWER_MW,
            dl_power: DEFAULT_DL_POWER_MW,
            fading: Fading::Correlated,
            antenna_spacing: default_spacing(),
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        let ints = [
            ("L", self.num_aps),
            ("N", self.ap_antennas),
            ("K", self.num_users),
            ("M", self.ue_antennas),
            ("tau_c", self.tau_c),
            ("tau_p", self.tau_p),
        ];
        for (name, v) in ints {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if 2 * self.tau_p > self.tau_c {
            return Err(Error::Config(format!(
                "tau_p = {} exceeds tau_c / 2 = {}",
                self.tau_p,
                self.tau_c as f64 / 2.0
            )));
        }
        if !self.tau_p.is_multiple_of(self.ue_antennas) {
            return Err(Error::Config(format!(
                "tau_p = {} is not a multiple of M = {}",
                self.tau_p, self.ue_antennas
            )));
        }
        let positive = [("ul_power", self.ul_power), ("dl_power", self.dl_power), ("antenna_spacing", self.antenna_spacing)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive and finite")));
            }
        }
        if !(self.area_side >= 0.0 && self.area_side.is_finite()) {
            return Err(Error::Config("area_side must be non-negative".into()));
        }
        if self.fading == Fading::Correlated && !(self.asd_deg > 0.0 && self.asd_deg.is_finite()) {
            return Err(Error::Config("asd_deg must be positive".into()));
        }
        Ok(())
    }

    /// Number of mutually orthogonal pilot matrices, `tau_p / M`.
    pub fn num_pilots(&self) -> usize {
        self.tau_p / self.ue_antennas
    }

    /// Pre-log factor `1 - tau_p/tau_c` (no downlink pilots).
    pub fn prelog_uplink_only(&self) -> f64 {
        1.0 - self.tau_p as f64 / self.tau_c as f64
    }

    /// Pre-log factor `1 - 2 tau_p/tau_c` (uplink and downlink pilots).
    pub fn prelog_with_downlink_pilots(&self) -> f64 {
        1.0 - 2.0 * self.tau_p as f64 / self.tau_c as f64
    }
}
