//! Stream selection for separate-stream transmission and greedy stream
//! dropping for same-stream transmission.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{CMat, ONE};

/// Binary diagonal `M x M` selection matrix, stored as its diagonal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Selection(pub Vec<bool>);

impl Selection {
    pub fn none(m: usize) -> Self {
        Selection(vec![false; m])
    }

    pub fn all(m: usize) -> Self {
        Selection(vec![true; m])
    }

    pub fn single(m: usize, stream: usize) -> Self {
        let mut s = Self::none(m);
        s.0[stream] = true;
        s
    }

    pub fn rank(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn contains(&self, stream: usize) -> bool {
        self.0[stream]
    }

    pub fn streams(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    /// Entrywise product of two diagonal selections.
    pub fn product(&self, other: &Selection) -> Selection {
        Selection(self.0.iter().zip(&other.0).map(|(a, b)| *a && *b).collect())
    }

    pub fn matrix(&self) -> CMat {
        let m = self.0.len();
        CMat::from_fn(m, m, |i, j| if i == j && self.0[i] { ONE } else { crate::linalg::ZERO })
    }
}

/// `Gamma_jk` for every AP `j` and user `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionSet {
    pub num_aps: usize,
    pub num_users: usize,
    pub ue_antennas: usize,
    gamma: Vec<Selection>,
}

impl SelectionSet {
    pub fn new(num_aps: usize, num_users: usize, ue_antennas: usize) -> Self {
        SelectionSet { num_aps, num_users, ue_antennas, gamma: vec![Selection::none(ue_antennas); num_aps * num_users] }
    }

    /// Every AP sends every stream (same-stream layout; not a valid
    /// separate-stream plan when `L > 1`).
    pub fn full(num_aps: usize, num_users: usize, ue_antennas: usize) -> Self {
        SelectionSet { num_aps, num_users, ue_antennas, gamma: vec![Selection::all(ue_antennas); num_aps * num_users] }
    }

    pub fn gamma(&self, j: usize, k: usize) -> &Selection {
        &self.gamma[j * self.num_users + k]
    }

    pub fn set(&mut self, j: usize, k: usize, sel: Selection) {
        self.gamma[j * self.num_users + k] = sel;
    }

    /// Stacked `Gamma_k`, `LM x M`.
    pub fn stacked(&self, k: usize) -> CMat {
        let m = self.ue_antennas;
        let mut out = CMat::zeros(self.num_aps * m, m);
        for j in 0..self.num_aps {
            out.view_mut((j * m, 0), (m, m)).copy_from(&self.gamma(j, k).matrix());
        }
        out
    }

    /// `(AP, stream)` pairs serving user `k`.
    pub fn serving(&self, k: usize) -> Vec<(usize, usize)> {
        (0..self.num_aps).flat_map(|j| self.gamma(j, k).streams().map(move |s| (j, s))).collect()
    }

    /// Checks that no stream of a user is sent by two APs.
    pub fn validate_separate(&self) -> Result<()> {
        for k in 0..self.num_users {
            let mut seen = vec![false; self.ue_antennas];
            for j in 0..self.num_aps {
                for s in self.gamma(j, k).streams() {
                    if seen[s] {
                        return Err(Error::Data(format!("stream {s} of user {k} is sent by more than one AP")));
                    }
                    seen[s] = true;
                }
            }
        }
        Ok(())
    }
}

/// For each user, the `M` APs with the largest `beta` send one stream each;
/// stream `m` goes to the `m`-th strongest AP. Ties go to the lower AP index.
pub fn select_serving_aps(beta: &DMatrix<f64>, ue_antennas: usize) -> Result<SelectionSet> {
    let (l, k_count) = beta.shape();
    if l < ue_antennas {
        return Err(Error::Config(format!("separate streams need L >= M (L = {l}, M = {ue_antennas})")));
    }
    let mut set = SelectionSet::new(l, k_count, ue_antennas);
    for k in 0..k_count {
        let mut order: Vec<usize> = (0..l).collect();
        order.sort_by(|&a, &b| beta[(b, k)].total_cmp(&beta[(a, k)]).then(a.cmp(&b)));
        for (stream, &ap) in order.iter().take(ue_antennas).enumerate() {
            set.set(ap, k, Selection::single(ue_antennas, stream));
        }
    }
    Ok(set)
}

/// Active streams per user for same-stream transmission.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StreamPlan {
    pub active: Vec<Selection>,
}

impl StreamPlan {
    pub fn full(num_users: usize, ue_antennas: usize) -> Self {
        StreamPlan { active: vec![Selection::all(ue_antennas); num_users] }
    }

    pub fn total_streams(&self) -> usize {
        self.active.iter().map(Selection::rank).sum()
    }

    /// The plan with user `k`'s highest-indexed active stream removed, or
    /// `None` if only one stream is left.
    pub fn without_last_stream(&self, k: usize) -> Option<StreamPlan> {
        let sel = &self.active[k];
        if sel.rank() <= 1 {
            return None;
        }
        let last = sel.streams().last()?;
        let mut next = self.clone();
        next.active[k].0[last] = false;
        Some(next)
    }
}

/// Result of [`schedule_streams_same`].
#[derive(Debug, Clone)]
pub struct ScheduleOutcome {
    pub plan: StreamPlan,
    pub sum_se: f64,
    pub initial_sum_se: f64,
    pub evaluations: usize,
    pub drops: usize,
}

/// Greedy stream dropping.
///
/// Users are visited in order; a user's last active stream is dropped when
/// that strictly increases the sum SE returned by `evaluate`. Passes repeat
/// until one completes without a drop. Each user keeps at least one stream.
pub fn schedule_streams_same<F>(mut evaluate: F, initial: StreamPlan) -> Result<ScheduleOutcome>
where
    F: FnMut(&StreamPlan) -> Result<f64>,
{
    let initial_sum_se = evaluate(&initial)?;
    let mut plan = initial;
    let mut best = initial_sum_se;
    let mut evaluations = 1;
    let mut drops = 0;
    loop {
        let mut dropped_any = false;
        for k in 0..plan.active.len() {
            let Some(candidate) = plan.without_last_stream(k) else { continue };
            let value = evaluate(&candidate)?;
            evaluations += 1;
            if value > best {
                best = value;
                plan = candidate;
                drops += 1;
                dropped_any = true;
            }
        }
        if !dropped_any {
            break;
        }
    }
    Ok(ScheduleOutcome { plan, sum_se: best, initial_sum_se, evaluations, drops })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sort_order_assigns_streams() {
        let beta = DMatrix::from_column_slice(2, 1, &[1.0, 2.0]);
        let set = select_serving_aps(&beta, 2).unwrap();
        assert_eq!(set.gamma(1, 0), &Selection::single(2, 0));
        assert_eq!(set.gamma(0, 0), &Selection::single(2, 1));
    }

    #[test]
    fn ties_favor_lower_index() {
        let beta = DMatrix::from_column_slice(3, 1, &[1.0, 1.0, 1.0]);
        let set = select_serving_aps(&beta, 2).unwrap();
        assert_eq!(set.serving(0), vec![(0, 0), (1, 1)]);
        assert_eq!(set.gamma(2, 0).rank(), 0);
    }

    #[test]
    fn too_few_aps() {
        let beta = DMatrix::from_element(1, 2, 1.0);
        assert!(matches!(select_serving_aps(&beta, 2), Err(Error::Config(_))));
    }

    #[test]
    fn selection_algebra() {
        let a = Selection(vec![true, false, true]);
        assert_eq!(a.product(&a), a);
        let m = a.matrix();
        assert_eq!(&m * &m, m);
        assert_eq!(a.rank(), 2);
    }

    #[test]
    fn constant_evaluator_keeps_plan() {
        let init = StreamPlan::full(3, 2);
        let out = schedule_streams_same(|_| Ok(1.0), init.clone()).unwrap();
        assert_eq!(out.plan, init);
        assert_eq!(out.drops, 0);
        assert_eq!(out.evaluations, 1 + 3);
    }

    #[test]
    fn evaluator_errors_propagate() {
        let r = schedule_streams_same(|_| Err(Error::Numerical("boom".into())), StreamPlan::full(1, 2));
        assert!(r.is_err());
    }

    #[test]
    fn drops_last_column_first() {
        // Sum SE rewards fewer streams for user 1 only.
        let eval = |p: &StreamPlan| Ok(p.active[0].rank() as f64 - p.active[1].rank() as f64);
        let out = schedule_streams_same(eval, StreamPlan::full(2, 3)).unwrap();
        assert_eq!(out.plan.active[0], Selection::all(3));
        assert_eq!(out.plan.active[1], Selection(vec![true, false, false]));
        assert_eq!(out.drops, 2);
    }
}
