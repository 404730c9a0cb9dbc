//! Long-format result rows and their CSV encoding.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::cost::{cost_report, CostConfig};
use crate::error::{Error, Result};
use crate::receiver::Bound;
use crate::sim::Method;

/// Header of the run CSV, in order.
pub const RUN_COLUMNS: [&str; 10] =
    ["preset", "method", "bound", "param_name", "param_value", "drop", "user", "se_bits_per_hz", "seed", "n_blocks"];

/// Header of the cost CSV, in order.
pub const COST_COLUMNS: [&str; 10] = [
    "L",
    "N",
    "M",
    "K",
    "tau_p",
    "tau_c",
    "ul_estimation_mults",
    "precoder_mults",
    "fronthaul_pilot_scalars",
    "fronthaul_data_scalars",
];

/// One user in one drop at one grid point, under one method and bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub preset: String,
    pub method: Method,
    pub bound: Bound,
    pub param_name: String,
    pub param_value: f64,
    pub drop: u64,
    pub user: usize,
    pub se_bits_per_hz: f64,
    pub seed: u64,
    pub n_blocks: usize,
}

/// A grid point that was skipped because some drop failed.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFailure {
    pub param_value: f64,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
    pub failures: Vec<GridFailure>,
}

impl ResultTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        // An empty table still carries the header.
        if self.rows.is_empty() {
            w.write_record(RUN_COLUMNS)?;
        }
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(buf)
    }

    /// Reads a run CSV, insisting on the exact header.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers()?.clone();
        for (i, want) in RUN_COLUMNS.iter().enumerate() {
            match headers.get(i) {
                Some(got) if got == *want => {}
                Some(got) => return Err(Error::Data(format!("column {i} is '{got}', expected '{want}'"))),
                None => return Err(Error::Data(format!("missing column '{want}'"))),
            }
        }
        if headers.len() > RUN_COLUMNS.len() {
            return Err(Error::Data(format!("unexpected column '{}'", &headers[RUN_COLUMNS.len()])));
        }
        let rows = r.deserialize().collect::<std::result::Result<Vec<ResultRow>, _>>()?;
        Ok(ResultTable { rows, failures: Vec::new() })
    }
}

/// Writes one cost row per configuration.
pub fn write_cost_csv<W: Write>(configs: &[CostConfig], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COST_COLUMNS)?;
    for cfg in configs {
        let r = cost_report(cfg)?;
        let fields = [
            cfg.num_aps,
            cfg.ap_antennas,
            cfg.ue_antennas,
            cfg.num_users,
            cfg.tau_p,
            cfg.tau_c,
            r.ul_estimation_mults,
            r.precoder_mults,
            r.fronthaul_pilot_scalars,
            r.fronthaul_data_scalars,
        ];
        w.write_record(fields.iter().map(u64::to_string))?;
    }
    w.flush()?;
    Ok(())
}
