//! Nested forward selection: grow the output set one element at a time,
//! keeping everything chosen so far. A baseline and MILP warm start; the
//! value sequence is nondecreasing but the final set need not be optimal.

use crate::data::Dataset;
use crate::dea::{all_efficiencies, ActiveSet};
use crate::select::{ObjectiveKind, SelectError};

/// The order in which outputs were added and the objective value after
/// each addition. The set after step t is exactly the first t entries.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyTrace {
    pub order: Vec<usize>,
    pub values: Vec<f64>,
}

impl GreedyTrace {
    /// The final selection as a sorted set.
    pub fn selected(&self) -> Vec<usize> {
        let mut s = self.order.clone();
        s.sort_unstable();
        s
    }

    /// The selection after `t` steps, sorted.
    pub fn prefix(&self, t: usize) -> Vec<usize> {
        let mut s = self.order[..t].to_vec();
        s.sort_unstable();
        s
    }
}

/// Greedy nested forward selection under a linear objective (average or
/// weighted average). Each step evaluates every candidate addition by a
/// batch of efficiency LPs and keeps the best, ties to the lowest index.
pub fn greedy_nested(
    d: &Dataset,
    p: usize,
    objective: &ObjectiveKind,
) -> Result<GreedyTrace, SelectError> {
    if !matches!(
        objective,
        ObjectiveKind::Average | ObjectiveKind::Weighted(_)
    ) {
        return Err(SelectError::InvalidConfig(format!(
            "greedy selection is defined for linear objectives, not {}",
            objective.name()
        )));
    }
    if p > d.num_outputs() {
        return Err(SelectError::InvalidConfig(format!(
            "p = {p} exceeds the {} available outputs",
            d.num_outputs()
        )));
    }
    if let ObjectiveKind::Weighted(w) = objective {
        if w.len() != d.num_dmus() {
            return Err(SelectError::BadWeights(format!(
                "got {} weights for {} DMUs",
                w.len(),
                d.num_dmus()
            )));
        }
    }
    let mut order = Vec::with_capacity(p);
    let mut values = Vec::with_capacity(p);
    let mut chosen: Vec<usize> = Vec::new();
    for _ in 0..p {
        let mut best: Option<(usize, f64)> = None;
        for o in 0..d.num_outputs() {
            if chosen.contains(&o) {
                continue;
            }
            let mut candidate = chosen.clone();
            candidate.push(o);
            let effs = all_efficiencies(d, &ActiveSet::with_outputs(d, candidate))?;
            let v = objective.evaluate(&effs);
            if best.map(|(_, bv)| v > bv + 1e-9).unwrap_or(true) {
                best = Some((o, v));
            }
        }
        let (o, v) = best.expect("p <= O leaves at least one candidate");
        chosen.push(o);
        order.push(o);
        values.push(v);
    }
    Ok(GreedyTrace { order, values })
}
