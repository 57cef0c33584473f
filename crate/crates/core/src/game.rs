//! Strategic analysis of selection conflict: how each DMU fares under every
//! other DMU's individually preferred selection versus the joint one, which
//! individual strategies attract support, and the 5%-bin histogram of that
//! support.

use crate::data::Dataset;
use crate::select::{solve_selection, Mode, SelectError, SelectionConfig};

/// Strict-preference tolerance: an efficiency difference must exceed this
/// to count as a preference (LP arithmetic noise guard).
pub const PREFER_TOL: f64 = 1e-6;

/// Pairwise efficiency differences between individual and joint selections.
///
/// `delta[k][k_prime]` is DMU `k`'s efficiency under DMU `k_prime`'s
/// preferred selection minus its efficiency under the joint selection.
/// The diagonal is nonnegative up to tolerance: a DMU's own selection is
/// at least as good for it as the joint one.
#[derive(Debug, Clone)]
pub struct CrossEfficiencyMatrix {
    pub delta: Vec<Vec<f64>>,
    pub joint_selection: Vec<usize>,
    pub individual_selections: Vec<Vec<usize>>,
    /// Efficiencies under the joint selection.
    pub joint_efficiencies: Vec<f64>,
    /// `individual_efficiencies[k_prime][k]` = DMU k's efficiency under
    /// DMU k_prime's selection.
    pub individual_efficiencies: Vec<Vec<f64>>,
}

/// Support percentages per individual strategy and their 5%-wide bins.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportProfile {
    /// `pi[k_prime]`: percentage of DMUs strictly preferring DMU k_prime's
    /// selection over the joint one.
    pub pi: Vec<f64>,
    /// 20 counts for [0,5), [5,10), ..., [95,100]; the last bin is closed.
    pub bins: Vec<usize>,
}

/// Solve the joint problem and all K individual problems, then assemble
/// the cross-efficiency difference matrix.
pub fn cross_efficiency(
    d: &Dataset,
    cfg: &SelectionConfig,
) -> Result<CrossEfficiencyMatrix, SelectError> {
    let k_count = d.num_dmus();
    let joint = solve_selection(d, cfg, Mode::Joint)
        .map_err(|e| tag(e, "joint selection"))?;
    let mut individual_selections = Vec::with_capacity(k_count);
    let mut individual_efficiencies = Vec::with_capacity(k_count);
    for k in 0..k_count {
        let sol = solve_selection(d, cfg, Mode::Individual(k))
            .map_err(|e| tag(e, &format!("individual selection for DMU {}", d.dmu_ids()[k])))?;
        individual_selections.push(sol.selected_outputs);
        individual_efficiencies.push(sol.efficiencies);
    }
    let mut delta = vec![vec![0.0; k_count]; k_count];
    for k in 0..k_count {
        for kp in 0..k_count {
            delta[k][kp] = individual_efficiencies[kp][k] - joint.efficiencies[k];
        }
    }
    Ok(CrossEfficiencyMatrix {
        delta,
        joint_selection: joint.selected_outputs,
        individual_selections,
        joint_efficiencies: joint.efficiencies,
        individual_efficiencies,
    })
}

fn tag(e: SelectError, context: &str) -> SelectError {
    match e {
        SelectError::StructurallyInfeasible(msg) => {
            SelectError::StructurallyInfeasible(format!("{context}: {msg}"))
        }
        other => other,
    }
}

/// Support percentage per column of the difference matrix, binned in
/// intervals of width 5%. Bins are left-closed/right-open except the final
/// [95, 100], which is closed so unanimous support is representable.
pub fn support_profile(m: &CrossEfficiencyMatrix) -> SupportProfile {
    let k_count = m.delta.len();
    let mut pi = Vec::with_capacity(k_count);
    for kp in 0..k_count {
        let supporters = (0..k_count)
            .filter(|&k| m.delta[k][kp] > PREFER_TOL)
            .count();
        pi.push(100.0 * supporters as f64 / k_count as f64);
    }
    let mut bins = vec![0usize; 20];
    for &v in &pi {
        let idx = ((v / 5.0).floor() as usize).min(19);
        bins[idx] += 1;
    }
    SupportProfile { pi, bins }
}
