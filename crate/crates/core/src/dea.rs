//! Constant-returns-to-scale input-oriented efficiency in multiplier form.
//!
//! For DMU `k` and an active subset of inputs/outputs, the score is the
//! optimum of: maximize the weighted active-output sum of DMU `k`, subject
//! to every DMU's weighted outputs not exceeding its weighted inputs, and
//! DMU `k`'s weighted inputs normalized to one. A score of 1 puts the DMU
//! on the efficient frontier.

use thiserror::Error;

use crate::data::Dataset;
use crate::milp::{solve_lp, MilpModel, Relation, Sense, SolveStatus, SolverError};

#[derive(Debug, Error)]
pub enum DeaError {
    #[error("DMU index {0} out of range")]
    BadDmuIndex(usize),
    #[error("active set references index {0} out of range")]
    BadActiveIndex(usize),
    #[error("active input set is empty")]
    EmptyInputs,
    #[error("normalization infeasible for DMU {dmu}: all active inputs are zero")]
    NormalizationInfeasible { dmu: String },
    #[error("LP for DMU {dmu} ended with status {status:?}")]
    UnexpectedStatus { dmu: String, status: SolveStatus },
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Active subset of inputs and outputs used in an evaluation.
///
/// Inputs must be nonempty. The output set may be empty only transiently
/// inside sweeps; the efficiency is then 0 by convention.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveSet {
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
}

impl ActiveSet {
    /// All inputs and all outputs of a dataset.
    pub fn full(d: &Dataset) -> Self {
        ActiveSet {
            inputs: (0..d.num_inputs()).collect(),
            outputs: (0..d.num_outputs()).collect(),
        }
    }

    /// All inputs, the given outputs.
    pub fn with_outputs(d: &Dataset, outputs: impl Into<Vec<usize>>) -> Self {
        let mut outputs = outputs.into();
        outputs.sort_unstable();
        outputs.dedup();
        ActiveSet {
            inputs: (0..d.num_inputs()).collect(),
            outputs,
        }
    }

    pub fn with_inputs_outputs(
        inputs: impl Into<Vec<usize>>,
        outputs: impl Into<Vec<usize>>,
    ) -> Self {
        let mut inputs = inputs.into();
        inputs.sort_unstable();
        inputs.dedup();
        let mut outputs = outputs.into();
        outputs.sort_unstable();
        outputs.dedup();
        ActiveSet { inputs, outputs }
    }

    fn validate(&self, d: &Dataset) -> Result<(), DeaError> {
        if self.inputs.is_empty() {
            return Err(DeaError::EmptyInputs);
        }
        for &i in &self.inputs {
            if i >= d.num_inputs() {
                return Err(DeaError::BadActiveIndex(i));
            }
        }
        for &o in &self.outputs {
            if o >= d.num_outputs() {
                return Err(DeaError::BadActiveIndex(o));
            }
        }
        Ok(())
    }
}

/// Build the efficiency LP for DMU `k` over an active set: input weights
/// `alpha`, output weights `beta`, frontier rows for every DMU, and the
/// unit normalization of DMU `k`'s weighted inputs.
pub fn build_dea_lp(d: &Dataset, k: usize, active: &ActiveSet) -> Result<MilpModel, DeaError> {
    if k >= d.num_dmus() {
        return Err(DeaError::BadDmuIndex(k));
    }
    active.validate(d)?;
    if !active.inputs.iter().any(|&i| d.input(k, i) > 0.0) {
        return Err(DeaError::NormalizationInfeasible {
            dmu: d.dmu_ids()[k].clone(),
        });
    }
    let mut m = MilpModel::new(Sense::Maximize);
    let alpha: Vec<usize> = active
        .inputs
        .iter()
        .map(|&i| m.add_var(format!("alpha_{i}"), 0.0, f64::INFINITY))
        .collect();
    let beta: Vec<usize> = active
        .outputs
        .iter()
        .map(|&o| m.add_var(format!("beta_{o}"), 0.0, f64::INFINITY))
        .collect();
    for (bi, &o) in active.outputs.iter().enumerate() {
        m.set_objective(beta[bi], d.output(k, o));
    }
    for j in 0..d.num_dmus() {
        let mut terms = Vec::with_capacity(alpha.len() + beta.len());
        for (bi, &o) in active.outputs.iter().enumerate() {
            terms.push((beta[bi], d.output(j, o)));
        }
        for (ai, &i) in active.inputs.iter().enumerate() {
            terms.push((alpha[ai], -d.input(j, i)));
        }
        m.add_constraint(format!("frontier_{j}"), terms, Relation::Le, 0.0);
    }
    let norm: Vec<(usize, f64)> = active
        .inputs
        .iter()
        .enumerate()
        .map(|(ai, &i)| (alpha[ai], d.input(k, i)))
        .collect();
    m.add_constraint("normalize", norm, Relation::Eq, 1.0);
    Ok(m)
}

/// Efficiency of DMU `k` on the active set, in [0, 1].
pub fn efficiency(d: &Dataset, k: usize, active: &ActiveSet) -> Result<f64, DeaError> {
    if k >= d.num_dmus() {
        return Err(DeaError::BadDmuIndex(k));
    }
    active.validate(d)?;
    if active.outputs.is_empty() {
        return Ok(0.0);
    }
    let model = build_dea_lp(d, k, active)?;
    let out = solve_lp(&model)?;
    if out.status != SolveStatus::Optimal {
        return Err(DeaError::UnexpectedStatus {
            dmu: d.dmu_ids()[k].clone(),
            status: out.status,
        });
    }
    debug_assert!(out.objective >= -1e-7 && out.objective <= 1.0 + 1e-7);
    Ok(out.objective.clamp(0.0, 1.0))
}

/// Efficiencies of all DMUs on the same active set; the joint evaluation
/// decomposes into K independent LPs.
pub fn all_efficiencies(d: &Dataset, active: &ActiveSet) -> Result<Vec<f64>, DeaError> {
    (0..d.num_dmus()).map(|k| efficiency(d, k, active)).collect()
}
