//! Sweeps that mirror the figures of the numerical study.

use crate::config::{Fading, SystemConfig};
use crate::error::{Error, Result};
use crate::pilots::PilotAssignment;
use crate::receiver::Bound;
use crate::sim::Method;

use super::spec::{ExperimentSpec, SweepParam};

pub const DEFAULT_DROPS: usize = 20;
pub const DEFAULT_BLOCKS: usize = 500;
pub const DEFAULT_SEED: u64 = 42;

/// Preset names with a one-line description.
pub const PRESETS: &[(&str, &str)] = &[
    ("fig2", "Methods 1-3 versus AP antennas N, M=2"),
    ("fig3", "Methods 1-3 versus angular standard deviation, N=4, M=2"),
    ("fig4", "Methods 1-3 versus number of users K, N=4, M=2"),
    ("fig5", "MMSE and ZF combiners versus user antennas M, tau_c=200"),
    ("fig6", "MMSE and ZF combiners versus user antennas M, tau_c=1000"),
    ("fig7", "noCSI, fullCSI and pilot bounds versus N, M=1, i.i.d. fading"),
    ("fig8", "noCSI, fullCSI and pilot bounds versus N, M=2"),
    ("fig9", "noCSI, fullCSI and pilot bounds for a single AP, N up to 80"),
    ("fig10", "Method 3 against per-antenna single-user treatment versus N"),
];

const THREE_METHODS: [Method; 3] = [Method::Same, Method::SeparateCsi, Method::SeparateLocal];
const THREE_BOUNDS: [Bound; 3] = [Bound::NoCsi, Bound::FullCsi, Bound::Pilots];

fn ints(range: std::ops::RangeInclusive<u32>) -> Vec<f64> {
    range.map(f64::from).collect()
}

pub fn preset(name: &str) -> Result<ExperimentSpec> {
    let base = SystemConfig::default();
    let (param, grid, methods, bounds, base): (SweepParam, Vec<f64>, Vec<Method>, Vec<Bound>, SystemConfig) = match name {
        "fig2" => (SweepParam::ApAntennas, ints(1..=8), THREE_METHODS.to_vec(), vec![Bound::Pilots], base),
        "fig3" => (
            SweepParam::AsdDeg,
            vec![5.0, 10.0, 15.0, 20.0, 30.0, 45.0, 60.0],
            THREE_METHODS.to_vec(),
            vec![Bound::Pilots],
            base,
        ),
        "fig4" => (SweepParam::NumUsers, vec![2.0, 4.0, 6.0, 8.0, 10.0], THREE_METHODS.to_vec(), vec![Bound::Pilots], base),
        "fig5" => (SweepParam::UeAntennas, ints(1..=4), vec![Method::Same], vec![Bound::Pilots, Bound::PilotsZf], base),
        "fig6" => (
            SweepParam::UeAntennas,
            ints(1..=4),
            vec![Method::Same],
            vec![Bound::Pilots, Bound::PilotsZf],
            SystemConfig { tau_c: 1000, ..base },
        ),
        "fig7" => (
            SweepParam::ApAntennas,
            ints(1..=8),
            vec![Method::Same],
            THREE_BOUNDS.to_vec(),
            SystemConfig { ue_antennas: 1, fading: Fading::Iid, ..base },
        ),
        "fig8" => (SweepParam::ApAntennas, ints(1..=8), vec![Method::Same], THREE_BOUNDS.to_vec(), base),
        "fig9" => (
            SweepParam::ApAntennas,
            vec![20.0, 40.0, 60.0, 80.0],
            vec![Method::Same],
            THREE_BOUNDS.to_vec(),
            SystemConfig { num_aps: 1, ..base },
        ),
        "fig10" => (
            SweepParam::ApAntennas,
            ints(1..=8),
            vec![Method::SeparateCsi, Method::PerAntennaBaseline],
            vec![Bound::NoCsi, Bound::Pilots],
            base,
        ),
        other => {
            let known: Vec<&str> = PRESETS.iter().map(|p| p.0).collect();
            return Err(Error::Config(format!("unknown preset '{other}' (known: {})", known.join(", "))));
        }
    };
    Ok(ExperimentSpec {
        preset: name.to_string(),
        param,
        grid,
        methods,
        bounds,
        n_drops: DEFAULT_DROPS,
        n_blocks: DEFAULT_BLOCKS,
        base,
        seed: DEFAULT_SEED,
        schedule_streams: true,
        auto_pilot_length: true,
        pilot_assignment: PilotAssignment::StrongestAp,
    })
}
