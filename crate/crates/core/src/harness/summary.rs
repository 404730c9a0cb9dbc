//! Per-curve statistics over a result table.

use std::collections::BTreeMap;

use crate::receiver::Bound;
use crate::sim::Method;

use super::table::ResultRow;

/// Statistics of one (method, bound, grid value) group.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub method: Method,
    pub bound: Bound,
    pub param_value: f64,
    /// Number of (drop, user) samples.
    pub samples: usize,
    pub mean: f64,
    pub median: f64,
    /// Standard error of `mean`, zero with a single sample.
    pub std_err: f64,
    /// Sum SE over users, averaged over drops.
    pub mean_sum_se: f64,
    /// Sorted per-user SE values, the support of the empirical CDF.
    pub sorted: Vec<f64>,
}

impl CurvePoint {
    /// Empirical CDF at `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        let below = self.sorted.partition_point(|&v| v <= x);
        below as f64 / self.sorted.len() as f64
    }
}

/// Groups rows by method, bound and grid value, in order of first appearance.
pub fn summarize(rows: &[ResultRow]) -> Vec<CurvePoint> {
    let mut order: Vec<(Method, Bound, f64)> = Vec::new();
    let mut groups: Vec<Vec<&ResultRow>> = Vec::new();
    for row in rows {
        let key = (row.method, row.bound, row.param_value);
        match order.iter().position(|k| *k == key) {
            Some(i) => groups[i].push(row),
            None => {
                order.push(key);
                groups.push(vec![row]);
            }
        }
    }
    order
        .into_iter()
        .zip(groups)
        .map(|((method, bound, param_value), group)| {
            let mut sorted: Vec<f64> = group.iter().map(|r| r.se_bits_per_hz).collect();
            sorted.sort_by(f64::total_cmp);
            let n = sorted.len();
            let mean = sorted.iter().sum::<f64>() / n as f64;
            let median = if n % 2 == 1 { sorted[n / 2] } else { 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]) };
            let std_err = if n > 1 {
                let var = sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                (var / n as f64).sqrt()
            } else {
                0.0
            };
            let mut per_drop: BTreeMap<u64, f64> = BTreeMap::new();
            for r in &group {
                *per_drop.entry(r.drop).or_default() += r.se_bits_per_hz;
            }
            let mean_sum_se = per_drop.values().sum::<f64>() / per_drop.len() as f64;
            CurvePoint { method, bound, param_value, samples: n, mean, median, std_err, mean_sum_se, sorted }
        })
        .collect()
}

/// Looks up one group.
pub fn find(points: &[CurvePoint], method: Method, bound: Bound, param_value: f64) -> Option<&CurvePoint> {
    points.iter().find(|p| p.method == method && p.bound == bound && p.param_value == param_value)
}
