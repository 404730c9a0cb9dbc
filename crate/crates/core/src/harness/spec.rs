use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::{default_pilot_length, SystemConfig};
use crate::error::{Error, Result};
use crate::pilots::PilotAssignment;
use crate::receiver::Bound;
use crate::sim::Method;

/// System parameter varied along a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParam {
    #[serde(rename = "L")]
    NumAps,
    #[serde(rename = "N")]
    ApAntennas,
    #[serde(rename = "K")]
    NumUsers,
    #[serde(rename = "M")]
    UeAntennas,
    #[serde(rename = "asd_deg")]
    AsdDeg,
    #[serde(rename = "tau_c")]
    TauC,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::NumAps => "L",
            SweepParam::ApAntennas => "N",
            SweepParam::NumUsers => "K",
            SweepParam::UeAntennas => "M",
            SweepParam::AsdDeg => "asd_deg",
            SweepParam::TauC => "tau_c",
        }
    }

    fn is_integer(self) -> bool {
        !matches!(self, SweepParam::AsdDeg)
    }

    /// Returns `base` with this parameter set to `value`.
    pub fn apply(self, base: &SystemConfig, value: f64) -> Result<SystemConfig> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::Config(format!("{} = {value} is not a valid grid value", self.name())));
        }
        if self.is_integer() && value.fract() != 0.0 {
            return Err(Error::Config(format!("{} must be an integer, got {value}", self.name())));
        }
        let mut cfg = base.clone();
        let n = value as usize;
        match self {
            SweepParam::NumAps => cfg.num_aps = n,
            SweepParam::ApAntennas => cfg.ap_antennas = n,
            SweepParam::NumUsers => cfg.num_users = n,
            SweepParam::UeAntennas => cfg.ue_antennas = n,
            SweepParam::AsdDeg => cfg.asd_deg = value,
            SweepParam::TauC => cfg.tau_c = n,
        }
        Ok(cfg)
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn yes() -> bool {
    true
}

/// A complete sweep: which system, which parameter, which methods and
/// bounds, and how much Monte Carlo effort per grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub preset: String,
    pub param: SweepParam,
    pub grid: Vec<f64>,
    pub methods: Vec<Method>,
    pub bounds: Vec<Bound>,
    /// Network drops (geometry realizations) per grid point.
    pub n_drops: usize,
    /// Channel blocks per drop, used for the statistics and the bounds alike.
    pub n_blocks: usize,
    pub base: SystemConfig,
    pub seed: u64,
    /// Greedy stream dropping for same-stream transmission.
    #[serde(default = "yes")]
    pub schedule_streams: bool,
    /// Recompute `tau_p` from `K` and `M` at every grid point.
    #[serde(default = "yes")]
    pub auto_pilot_length: bool,
    #[serde(default)]
    pub pilot_assignment: PilotAssignment,
}

impl ExperimentSpec {
    /// System configuration at grid index `g`.
    pub fn config_at(&self, g: usize) -> Result<SystemConfig> {
        let value = *self
            .grid
            .get(g)
            .ok_or_else(|| Error::Config(format!("grid index {g} out of range")))?;
        let mut cfg = self.param.apply(&self.base, value)?;
        if self.auto_pilot_length {
            cfg.tau_p = default_pilot_length(cfg.num_users, cfg.ue_antennas);
        }
        Ok(cfg)
    }

    /// Structural checks. Per-point configuration errors are left to the run,
    /// which reports them without aborting the sweep.
    pub fn validate(&self) -> Result<()> {
        if self.preset.is_empty() {
            return Err(Error::Config("preset name is empty".into()));
        }
        let empty = [
            ("grid", self.grid.is_empty()),
            ("methods", self.methods.is_empty()),
            ("bounds", self.bounds.is_empty()),
        ];
        for (name, is_empty) in empty {
            if is_empty {
                return Err(Error::Config(format!("{name} must not be empty")));
            }
        }
        if self.n_drops == 0 {
            return Err(Error::Config("n_drops must be positive".into()));
        }
        // Covariances need at least two samples.
        if self.n_blocks < 2 {
            return Err(Error::Config("n_blocks must be at least 2".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ExperimentSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }
}
