//! Per-drop simulation pipeline: channels and uplink estimates per block,
//! precoders, effective channels and bounds for each transmission method.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::downlink::{LinkBlock, LinkLayout};
use crate::error::{Error, Result};
use crate::linalg::{c, unvec, CMat};
use crate::network::{drop_network, ChannelSampler, NetworkRealization};
use crate::pilots::{build_pilot_book, receive_uplink_pilots, PilotAssignment, PilotBook, UplinkStatistics};
use crate::precoding::{
    normalize_same_stream, normalize_separate_stream, same_stream_powers, separate_stream_powers, stack_user,
    CentralizedPrecoder, CsiSharing, Dims, SeparatePrecoder,
};
use crate::receiver::{evaluate_bounds, Bound, BoundReport};
use crate::rng::{purpose, SeedTree};
use crate::streams::{schedule_streams_same, select_serving_aps, Selection, SelectionSet, StreamPlan};

/// Downlink transmission method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Every AP sends every stream with the centralized MMSE precoder.
    Same,
    /// One stream per serving AP, precoders computed with shared CSI.
    SeparateCsi,
    /// One stream per serving AP, precoders from local CSI and statistics.
    SeparateLocal,
    /// Separate streams with CSI sharing, but each user antenna decodes its
    /// own stream as if it were a single-antenna user.
    PerAntennaBaseline,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Same, Method::SeparateCsi, Method::SeparateLocal, Method::PerAntennaBaseline];

    pub fn tag(self) -> &'static str {
        match self {
            Method::Same => "same",
            Method::SeparateCsi => "separate_csi",
            Method::SeparateLocal => "separate_local",
            Method::PerAntennaBaseline => "per_antenna_baseline",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        Method::ALL.into_iter().find(|m| m.tag() == tag).ok_or_else(|| {
            Error::Config(format!("unknown method '{tag}' (expected same, separate_csi, separate_local or per_antenna_baseline)"))
        })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// True channels and uplink estimates of one coherence block, as `N x M`
/// matrices indexed `l * K + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockCsi {
    pub h: Vec<CMat>,
    pub h_hat: Vec<CMat>,
}

/// Everything fixed within one network drop.
#[derive(Debug, Clone)]
pub struct DropContext {
    pub cfg: SystemConfig,
    pub net: NetworkRealization,
    pub book: PilotBook,
    pub q: Vec<f64>,
    pub dims: Dims,
    /// Uplink estimation error covariance per link, `NM x NM`.
    pub c_err: Vec<CMat>,
    uplink: Option<UplinkStatistics>,
    seed: SeedTree,
}

/// Outcome of one method on one drop.
#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub method: Method,
    pub report: BoundReport,
    /// Average transmit power of each AP.
    pub ap_power: Vec<f64>,
    /// Streams kept per user (same-stream transmission).
    pub plan: StreamPlan,
    /// Off-block Frobenius mass of the centralized precoders, relative to
    /// their total mass (same-stream only).
    pub off_block_mass: Option<f64>,
}

/// Options for [`DropContext::evaluate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalOptions {
    /// Run the greedy stream-dropping scheduler for same-stream transmission.
    pub schedule_streams: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { schedule_streams: true }
    }
}

impl DropContext {
    /// Draws a network and sets up uplink estimation for it.
    pub fn new(cfg: &SystemConfig, seed: SeedTree, assignment: PilotAssignment) -> Result<Self> {
        let net = drop_network(cfg, seed)?;
        Self::from_network(cfg, net, seed, assignment)
    }

    pub fn from_network(cfg: &SystemConfig, net: NetworkRealization, seed: SeedTree, assignment: PilotAssignment) -> Result<Self> {
        cfg.validate()?;
        let book = build_pilot_book(cfg, &net.beta, assignment)?;
        let q = vec![cfg.ul_power; cfg.num_users];
        let uplink = UplinkStatistics::new(&net, &book, &q)?;
        let c_err = uplink.links.iter().map(|l| l.c_err.clone()).collect();
        Ok(DropContext { dims: dims_of(cfg), cfg: cfg.clone(), net, book, q, c_err, uplink: Some(uplink), seed })
    }

    /// A drop whose blocks are supplied directly, with the given uplink error
    /// covariances (zero for perfect CSI).
    pub fn with_given_csi(
        cfg: &SystemConfig,
        net: NetworkRealization,
        book: PilotBook,
        c_err: Vec<CMat>,
        seed: SeedTree,
    ) -> Result<Self> {
        cfg.validate()?;
        let q = vec![cfg.ul_power; cfg.num_users];
        Ok(DropContext { dims: dims_of(cfg), cfg: cfg.clone(), net, book, q, c_err, uplink: None, seed })
    }

    /// Channels and uplink estimates for `n_blocks` coherence blocks. Block
    /// `b` depends only on the drop seed and `b`.
    pub fn sample_blocks(&self, n_blocks: usize) -> Result<Vec<BlockCsi>> {
        let uplink =
            self.uplink.as_ref().ok_or_else(|| Error::Config("this drop has no channel model to sample from".into()))?;
        let sampler = ChannelSampler::new(&self.net)?;
        let (n, m) = (self.dims.ap_antennas, self.dims.ue_antennas);
        (0..n_blocks)
            .map(|b| {
                let mut ch_rng = self.seed.child(purpose::CHANNEL).child(b as u64).rng();
                let mut noise_rng = self.seed.child(purpose::UPLINK_NOISE).child(b as u64).rng();
                let channels = sampler.sample(&mut ch_rng);
                let obs = receive_uplink_pilots(&channels, &self.book, &self.q, &mut noise_rng);
                let est = uplink.estimate(&self.book, &obs);
                Ok(BlockCsi {
                    h: channels.h.iter().map(|v| unvec(v, n, m)).collect(),
                    h_hat: est.iter().map(|v| unvec(v, n, m)).collect(),
                })
            })
            .collect()
    }

    /// Layout of the physical users for the given active streams.
    pub fn layout(&self, active: &[Selection]) -> LinkLayout {
        LinkLayout {
            num_users: self.dims.num_users,
            dim: self.dims.ue_antennas,
            num_pilots: self.book.num_pilots(),
            pilot_of: self.book.assignment.clone(),
            q: self.q.clone(),
            tau_p: self.cfg.tau_p,
            active: active.to_vec(),
        }
    }

    fn second_moments(&self) -> Vec<CMat> {
        (0..self.dims.num_aps).flat_map(|l| (0..self.dims.num_users).map(move |k| (l, k))).map(|(l, k)| self.net.correlation(l, k).clone()).collect()
    }

    /// Effective channels of same-stream transmission with the given plan.
    pub fn same_stream_links(&self, blocks: &[BlockCsi], plan: &StreamPlan) -> Result<SameStreamLinks> {
        let d = self.dims;
        let (n, kk) = (d.ap_antennas, d.num_users);
        let pre = CentralizedPrecoder::new(d, &self.c_err, &self.q, plan)?;
        let mut raw = Vec::with_capacity(blocks.len());
        let mut norms = DMatrix::zeros(d.num_aps, kk);
        let mut off_block = 0.0;
        let mut total = 0.0;
        for blk in blocks {
            let w = pre.compute(&blk.h_hat)?;
            let stacked: Vec<CMat> = (0..kk).map(|k| stack_user(&d, &blk.h, k)).collect();
            let mut g = Vec::with_capacity(kk * kk);
            for hk in &stacked {
                for wi in &w {
                    g.push(hk.adjoint() * wi);
                }
            }
            for (i, wi) in w.iter().enumerate() {
                for l in 0..d.num_aps {
                    let rows = wi.rows(l * n, n);
                    let nrm = rows.norm_squared();
                    norms[(l, i)] += nrm;
                    total += nrm;
                    // Columns of W_i that do not belong to AP l's own stream
                    // (stream l when L = M) count as off-block mass.
                    if d.num_aps == d.ue_antennas {
                        off_block += (0..d.ue_antennas).filter(|&s| s != l).map(|s| rows.column(s).norm_squared()).sum::<f64>();
                    }
                }
            }
            raw.push(g);
        }
        norms /= blocks.len() as f64;
        let rho = same_stream_powers(&self.net.beta, self.cfg.dl_power)?;
        let scaling = normalize_same_stream(&norms, &rho, self.cfg.dl_power)?;
        let links = raw
            .into_iter()
            .map(|g| LinkBlock {
                num_users: kk,
                b: g.into_iter().enumerate().map(|(idx, gi)| gi * c(scaling.coef[idx % kk])).collect(),
            })
            .collect();
        let off_block_mass = (d.num_aps == d.ue_antennas && total > 0.0).then(|| off_block / total);
        Ok(SameStreamLinks { links, ap_power: scaling.ap_power, off_block_mass })
    }

    /// Effective channels of separate-stream transmission with
    /// strongest-AP stream assignment.
    pub fn separate_stream_links(&self, blocks: &[BlockCsi], sharing: CsiSharing) -> Result<(Vec<LinkBlock>, Vec<f64>, SelectionSet)> {
        let gammas = select_serving_aps(&self.net.beta, self.dims.ue_antennas)?;
        self.separate_stream_links_with(blocks, sharing, &gammas).map(|(l, p)| (l, p, gammas))
    }

    pub fn separate_stream_links_with(
        &self,
        blocks: &[BlockCsi],
        sharing: CsiSharing,
        gammas: &SelectionSet,
    ) -> Result<(Vec<LinkBlock>, Vec<f64>)> {
        let d = self.dims;
        let kk = d.num_users;
        let second = match sharing {
            CsiSharing::Local => self.second_moments(),
            CsiSharing::Shared => Vec::new(),
        };
        let pre = SeparatePrecoder::new(d, sharing, &self.c_err, &second, &self.q, gammas)?;
        let units: Vec<(usize, usize)> =
            (0..d.num_aps).flat_map(|l| (0..kk).map(move |i| (l, i))).filter(|&(l, i)| gammas.gamma(l, i).rank() > 0).collect();
        let mut norms = DMatrix::zeros(d.num_aps, kk);
        let mut raw = Vec::with_capacity(blocks.len());
        for blk in blocks {
            let w = pre.compute(&blk.h_hat)?;
            // g[k][u] = H_lk^H W'_li Gamma_li for unit u = (l, i).
            let mut g = Vec::with_capacity(kk * units.len());
            for k in 0..kk {
                for &(l, i) in &units {
                    let wi = w[l * kk + i].as_ref().expect("unit has a precoder");
                    g.push(blk.h[l * kk + k].adjoint() * wi);
                }
            }
            for &(l, i) in &units {
                norms[(l, i)] += w[l * kk + i].as_ref().expect("unit has a precoder").norm_squared();
            }
            raw.push(g);
        }
        norms /= blocks.len() as f64;
        let rho = separate_stream_powers(&self.net.beta, gammas, self.cfg.dl_power);
        let scaling = normalize_separate_stream(&norms, &rho, gammas)?;
        let m = d.ue_antennas;
        let links = raw
            .into_iter()
            .map(|g| {
                let mut b = vec![CMat::zeros(m, m); kk * kk];
                for k in 0..kk {
                    for (u, &(l, i)) in units.iter().enumerate() {
                        b[k * kk + i] += &g[k * units.len() + u] * c(scaling.coef[l * kk + i]);
                    }
                }
                LinkBlock { num_users: kk, b }
            })
            .collect();
        Ok((links, scaling.ap_power))
    }

    fn noise_seed(&self) -> SeedTree {
        self.seed.child(purpose::DOWNLINK_NOISE)
    }

    /// Runs one method on the given blocks and evaluates the bounds.
    pub fn evaluate(&self, method: Method, blocks: &[BlockCsi], bounds: &[Bound], opts: EvalOptions) -> Result<MethodOutcome> {
        let (kk, m) = (self.dims.num_users, self.dims.ue_antennas);
        let tau_c = self.cfg.tau_c;
        match method {
            Method::Same => {
                let full = StreamPlan::full(kk, m);
                let plan = if opts.schedule_streams && m > 1 {
                    let evaluator = |plan: &StreamPlan| -> Result<f64> {
                        let links = self.same_stream_links(blocks, plan)?;
                        let rep = evaluate_bounds(&self.layout(&plan.active), &links.links, &[Bound::Pilots], tau_c, self.noise_seed())?;
                        Ok(rep.se[0].iter().sum())
                    };
                    schedule_streams_same(evaluator, full)?.plan
                } else {
                    full
                };
                let links = self.same_stream_links(blocks, &plan)?;
                let report = evaluate_bounds(&self.layout(&plan.active), &links.links, bounds, tau_c, self.noise_seed())?;
                Ok(MethodOutcome { method, report, ap_power: links.ap_power, plan, off_block_mass: links.off_block_mass })
            }
            Method::SeparateCsi | Method::SeparateLocal => {
                let sharing = if method == Method::SeparateCsi { CsiSharing::Shared } else { CsiSharing::Local };
                let (links, ap_power, gammas) = self.separate_stream_links(blocks, sharing)?;
                let plan = served_streams(&gammas);
                let report = evaluate_bounds(&self.layout(&plan.active), &links, bounds, tau_c, self.noise_seed())?;
                Ok(MethodOutcome { method, report, ap_power, plan, off_block_mass: None })
            }
            Method::PerAntennaBaseline => {
                let (links, ap_power, gammas) = self.separate_stream_links(blocks, CsiSharing::Shared)?;
                let plan = served_streams(&gammas);
                let layout = self.layout(&plan.active);
                let (vlayout, vlinks) = virtualize(&layout, &links);
                let vrep = evaluate_bounds(&vlayout, &vlinks, bounds, tau_c, self.noise_seed())?;
                let se = vrep.se.iter().map(|row| row.chunks(m).map(|c| c.iter().sum()).collect()).collect();
                let report = BoundReport { bounds: vrep.bounds, se, n_blocks: vrep.n_blocks };
                Ok(MethodOutcome { method, report, ap_power, plan, off_block_mass: None })
            }
        }
    }
}

/// Effective channels of same-stream transmission plus power diagnostics.
#[derive(Debug, Clone)]
pub struct SameStreamLinks {
    pub links: Vec<LinkBlock>,
    pub ap_power: Vec<f64>,
    pub off_block_mass: Option<f64>,
}

fn dims_of(cfg: &SystemConfig) -> Dims {
    Dims { num_aps: cfg.num_aps, num_users: cfg.num_users, ap_antennas: cfg.ap_antennas, ue_antennas: cfg.ue_antennas }
}

/// Streams that some AP sends to each user.
pub fn served_streams(gammas: &SelectionSet) -> StreamPlan {
    let m = gammas.ue_antennas;
    StreamPlan {
        active: (0..gammas.num_users)
            .map(|k| {
                let mut s = Selection::none(m);
                for (_, stream) in gammas.serving(k) {
                    s.0[stream] = true;
                }
                s
            })
            .collect(),
    }
}

/// Splits every `dim`-antenna user into `dim` single-antenna users.
///
/// Virtual user `(k, m)` decodes stream `m` of user `k`; the channel from
/// virtual user `(i, s)`'s stream is entry `(m, s)` of `B_ki`, and it uses
/// column `s` of user `i`'s pilot matrix.
pub fn virtualize(layout: &LinkLayout, blocks: &[LinkBlock]) -> (LinkLayout, Vec<LinkBlock>) {
    let (kk, m) = (layout.num_users, layout.dim);
    let kv = kk * m;
    let vlayout = LinkLayout {
        num_users: kv,
        dim: 1,
        num_pilots: layout.num_pilots * m,
        pilot_of: (0..kv).map(|v| layout.pilot_of[v / m] * m + v % m).collect(),
        q: (0..kv).map(|v| layout.q[v / m]).collect(),
        tau_p: layout.tau_p,
        active: vec![Selection::all(1); kv],
    };
    let vblocks = blocks
        .iter()
        .map(|blk| LinkBlock {
            num_users: kv,
            b: (0..kv * kv)
                .map(|idx| {
                    let (v, w) = (idx / kv, idx % kv);
                    CMat::from_element(1, 1, blk.get(v / m, w / m)[(v % m, w % m)])
                })
                .collect(),
        })
        .collect();
    (vlayout, vblocks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> SystemConfig {
        SystemConfig { num_aps: 4, ap_antennas: 2, num_users: 3, ue_antennas: 2, tau_p: 4, tau_c: 200, ..SystemConfig::default() }
    }

    #[test]
    fn method_tags_round_trip() {
        for m in Method::ALL {
            assert_eq!(Method::from_tag(m.tag()).unwrap(), m);
        }
        assert!(Method::from_tag("joint").is_err());
    }

    #[test]
    fn blocks_are_reproducible() {
        let ctx = DropContext::new(&small_cfg(), SeedTree::new(3), PilotAssignment::StrongestAp).unwrap();
        let a = ctx.sample_blocks(3).unwrap();
        let b = ctx.sample_blocks(5).unwrap();
        assert_eq!(a[..], b[..3]);
    }

    #[test]
    fn separate_power_fills_every_serving_ap() {
        let cfg = small_cfg();
        let ctx = DropContext::new(&cfg, SeedTree::new(4), PilotAssignment::StrongestAp).unwrap();
        let blocks = ctx.sample_blocks(50).unwrap();
        for sharing in [CsiSharing::Shared, CsiSharing::Local] {
            let (_, power, gammas) = ctx.separate_stream_links(&blocks, sharing).unwrap();
            for (l, p) in power.iter().enumerate() {
                let serves = (0..cfg.num_users).any(|k| gammas.gamma(l, k).rank() > 0);
                let target = if serves { cfg.dl_power } else { 0.0 };
                assert!((p - target).abs() <= 1e-9 * cfg.dl_power);
            }
        }
    }

    #[test]
    fn same_power_peak_is_budget() {
        let cfg = small_cfg();
        let ctx = DropContext::new(&cfg, SeedTree::new(5), PilotAssignment::StrongestAp).unwrap();
        let blocks = ctx.sample_blocks(50).unwrap();
        let links = ctx.same_stream_links(&blocks, &StreamPlan::full(3, 2)).unwrap();
        let peak = links.ap_power.iter().copied().fold(0.0, f64::max);
        assert!((peak - cfg.dl_power).abs() < 1e-9 * cfg.dl_power);
        assert!(links.ap_power.iter().all(|&p| p <= cfg.dl_power * (1.0 + 1e-12)));
    }

    #[test]
    fn virtualization_preserves_entries() {
        let layout = LinkLayout {
            num_users: 2,
            dim: 2,
            num_pilots: 1,
            pilot_of: vec![0, 0],
            q: vec![1.0, 2.0],
            tau_p: 2,
            active: vec![Selection::all(2); 2],
        };
        let blk = LinkBlock { num_users: 2, b: (0..4).map(|x| CMat::from_fn(2, 2, |r, s| c((10 * x + 2 * r + s) as f64))).collect() };
        let (vl, vb) = virtualize(&layout, &[blk.clone()]);
        assert_eq!(vl.pilot_of, vec![0, 1, 0, 1]);
        assert_eq!(vl.q, vec![1.0, 1.0, 2.0, 2.0]);
        // Virtual (1, 0) hears virtual (0, 1) through B_10[0, 1].
        assert_eq!(vb[0].get(2, 1)[(0, 0)], blk.get(1, 0)[(0, 1)]);
    }

    #[test]
    fn all_methods_run_on_a_small_drop() {
        let cfg = small_cfg();
        let ctx = DropContext::new(&cfg, SeedTree::new(6), PilotAssignment::StrongestAp).unwrap();
        let blocks = ctx.sample_blocks(40).unwrap();
        for method in Method::ALL {
            let out = ctx.evaluate(method, &blocks, &Bound::ALL, EvalOptions::default()).unwrap();
            assert_eq!(out.report.se.len(), 4);
            for row in &out.report.se {
                assert_eq!(row.len(), cfg.num_users);
                assert!(row.iter().all(|x| x.is_finite() && *x >= 0.0));
            }
        }
    }

    #[test]
    fn scheduling_never_lowers_sum_se() {
        let cfg = SystemConfig { num_aps: 2, ap_antennas: 1, num_users: 4, ue_antennas: 2, tau_p: 4, ..small_cfg() };
        let ctx = DropContext::new(&cfg, SeedTree::new(7), PilotAssignment::StrongestAp).unwrap();
        let blocks = ctx.sample_blocks(40).unwrap();
        let sched = ctx.evaluate(Method::Same, &blocks, &[Bound::Pilots], EvalOptions { schedule_streams: true }).unwrap();
        let plain = ctx.evaluate(Method::Same, &blocks, &[Bound::Pilots], EvalOptions { schedule_streams: false }).unwrap();
        let sum = |o: &MethodOutcome| o.report.se[0].iter().sum::<f64>();
        assert!(sum(&sched) >= sum(&plain) - 1e-12);
        assert!(sched.plan.total_streams() <= plain.plan.total_streams());
    }
}
