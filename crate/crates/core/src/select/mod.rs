//! Selection formulations and solvers: individual (per-DMU) and joint
//! output selection, optional input selection, five objectives, and the
//! weight/cost/cluster/correlation extensions.
//!
//! [`solve_selection`] is the entry point. Small models go through the
//! generic MILP/MIQP stack; large joint models are routed to a structured
//! branch-and-bound over output subsets whose node bounds come from per-DMU
//! relaxation LPs. Both paths are exact and gap-certified, and both report
//! efficiencies recomputed on the realized selection.

mod build;
pub mod config;
mod subset_bnb;

pub use build::{
    apply_extensions, attach_objective, build_fsdea_individual, build_osdea_individual,
    build_osdea_joint, tightened_output_bounds, BuiltModel,
};
pub use config::{
    percentile_count, ClusterSpec, CorrelationRule, Mode, ObjectiveKind, SelectionConfig,
};

use thiserror::Error;

use crate::data::{DataError, Dataset};
use crate::dea::{self, ActiveSet, DeaError};
use crate::milp::{
    solve_convex_miqp, solve_lp, solve_milp, MilpModel, SolveOutcome, SolveStatus, SolverError,
};

#[derive(Debug, Error)]
pub enum SelectError {
    #[error("structurally infeasible: {0}")]
    StructurallyInfeasible(String),
    #[error("normalization infeasible for DMU {dmu}")]
    NormalizationInfeasible { dmu: String },
    #[error("bad weights: {0}")]
    BadWeights(String),
    #[error("bad percentile: {0}")]
    BadPercentile(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("enumeration would visit {needed} subsets, cap is {cap}")]
    CapExceeded { needed: u128, cap: u128 },
    #[error("time limit reached before any feasible selection was found")]
    TimeLimitWithoutSolution,
    #[error("internal consistency failure: {0}")]
    ConsistencyFailure(String),
    #[error(transparent)]
    Dea(#[from] DeaError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// A realized selection with its efficiency profile.
#[derive(Debug, Clone)]
pub struct SelectionSolution {
    /// Chosen outputs, sorted ascending (0-based).
    pub selected_outputs: Vec<usize>,
    /// Chosen inputs when input selection was active.
    pub selected_inputs: Option<Vec<usize>>,
    /// Efficiencies of all DMUs under the realized selection, recomputed by
    /// plain efficiency LPs.
    pub efficiencies: Vec<f64>,
    /// Objective value of the selection under the configured objective.
    pub objective_value: f64,
    /// Solver telemetry (status, gap, nodes, wall time).
    pub outcome: SolveOutcome,
}

/// Tolerance for the consistency re-solve between solver objective and the
/// objective recomputed from efficiency LPs.
pub const CONSISTENCY_TOL: f64 = 1e-6;

/// Joint-model size (in constraint rows) beyond which the structured
/// subset solver takes over from the generic MILP stack. The dense-basis
/// simplex stays snappy below this; per-DMU decomposition wins above it.
const GENERIC_ROW_LIMIT: usize = 600;

/// Efficiency of one DMU on an active set under optional per-output weight
/// bounds. `None` means the weight bounds make the evaluation infeasible.
pub(crate) fn bounded_efficiency(
    d: &Dataset,
    k: usize,
    active: &ActiveSet,
    weight_bounds: Option<&[(f64, f64)]>,
) -> Result<Option<f64>, SelectError> {
    let Some(wb) = weight_bounds else {
        return Ok(Some(dea::efficiency(d, k, active)?));
    };
    if active.outputs.is_empty() {
        return Ok(Some(0.0));
    }
    let mut model = dea::build_dea_lp(d, k, active)?;
    let names: Vec<String> = active
        .outputs
        .iter()
        .map(|&o| format!("beta_{o}"))
        .collect();
    for var in model.variables.iter_mut() {
        if let Some(pos) = names.iter().position(|n| n == &var.name) {
            let (l, u) = wb[active.outputs[pos]];
            var.lower = l;
            if u.is_finite() {
                var.upper = var.upper.min(u);
            }
        }
    }
    let out = solve_lp(&model)?;
    match out.status {
        SolveStatus::Optimal => Ok(Some(out.objective.clamp(0.0, 1.0))),
        SolveStatus::Infeasible => Ok(None),
        other => Err(SelectError::ConsistencyFailure(format!(
            "evaluation LP for DMU {k} ended {other:?}"
        ))),
    }
}

/// Efficiencies of all DMUs under a selection, with optional weight bounds.
/// Errors if the bounds make any DMU's evaluation infeasible.
pub(crate) fn evaluate_selection(
    d: &Dataset,
    outputs: &[usize],
    inputs: Option<&[usize]>,
    weight_bounds: Option<&[(f64, f64)]>,
) -> Result<Vec<f64>, SelectError> {
    let active = match inputs {
        Some(ins) => ActiveSet::with_inputs_outputs(ins.to_vec(), outputs.to_vec()),
        None => ActiveSet::with_outputs(d, outputs.to_vec()),
    };
    (0..d.num_dmus())
        .map(|k| {
            bounded_efficiency(d, k, &active, weight_bounds)?.ok_or_else(|| {
                SelectError::StructurallyInfeasible(format!(
                    "weight bounds are infeasible for DMU {}",
                    d.dmu_ids()[k]
                ))
            })
        })
        .collect()
}

/// Objective value of an efficiency vector under a mode: the DMU's own
/// efficiency for individual selection, the configured objective otherwise.
pub(crate) fn objective_of(
    cfg: &SelectionConfig,
    mode: Mode,
    efficiencies: &[f64],
) -> f64 {
    match mode {
        Mode::Individual(k) => efficiencies[k],
        Mode::Joint => cfg.objective.evaluate(efficiencies),
    }
}

/// Solve a selection problem end to end: build, warm start where it
/// applies, solve, break value ties toward the lexicographically smallest
/// output set, then recompute efficiencies on the realized selection and
/// check them against the solver's objective.
pub fn solve_selection(
    d: &Dataset,
    cfg: &SelectionConfig,
    mode: Mode,
) -> Result<SelectionSolution, SelectError> {
    cfg.validate(d)?;
    if let Mode::Individual(k) = mode {
        if k >= d.num_dmus() {
            return Err(SelectError::InvalidConfig(format!(
                "DMU index {k} out of range"
            )));
        }
    }
    if mode == Mode::Joint && cfg.p_tilde.is_some() {
        return Err(SelectError::InvalidConfig(
            "input selection is only available in individual mode".into(),
        ));
    }
    let rows_estimate = match mode {
        Mode::Joint => d.num_dmus() * (d.num_dmus() + 1) + d.num_dmus() * d.num_outputs() + 1,
        Mode::Individual(_) => d.num_dmus() + d.num_outputs() + 2,
    };
    let structured = mode == Mode::Joint
        && cfg.p_tilde.is_none()
        && rows_estimate > GENERIC_ROW_LIMIT
        && d.num_outputs() <= 64;
    if structured {
        subset_bnb::solve_structured(d, cfg, mode)
    } else {
        solve_generic(d, cfg, mode)
    }
}

fn solve_generic(
    d: &Dataset,
    cfg: &SelectionConfig,
    mode: Mode,
) -> Result<SelectionSolution, SelectError> {
    let built = match mode {
        Mode::Individual(k) if cfg.p_tilde.is_some() => build_fsdea_individual(d, k, cfg)?,
        Mode::Individual(k) => build_osdea_individual(d, k, cfg)?,
        Mode::Joint => build_osdea_joint(d, cfg)?,
    };
    // Greedy warm start for the linear joint objectives.
    let warm = if mode == Mode::Joint
        && matches!(
            cfg.objective,
            ObjectiveKind::Average | ObjectiveKind::Weighted(_)
        ) {
        crate::greedy::greedy_nested(d, cfg.p, &cfg.objective)
            .ok()
            .and_then(|trace| warm_start_map(d, cfg, &built, &trace.selected()))
    } else {
        None
    };
    let out = run_built(&built.model, cfg, warm.as_ref())?;
    match out.status {
        SolveStatus::Infeasible => {
            return Err(SelectError::StructurallyInfeasible(
                "the selection constraints admit no feasible choice".into(),
            ))
        }
        SolveStatus::Unbounded => {
            return Err(SelectError::Solver(SolverError::NumericalBreakdown(
                "selection model reported unbounded".into(),
            )))
        }
        SolveStatus::TimeLimit if out.objective.is_nan() => {
            return Err(SelectError::TimeLimitWithoutSolution)
        }
        _ => {}
    }
    let mut outputs = built.extract_outputs(&out.primal);
    let mut inputs = built.extract_inputs(&out.primal);
    // Deterministic tie-breaking toward the lexicographically smallest
    // output set, via re-solves with pinned selections.
    if out.status == SolveStatus::Optimal {
        let refined = lexicographic_refine(d, cfg, &built, out.objective, outputs.clone())?;
        if refined != outputs && inputs.is_some() {
            // The realized input set must match the refined output set.
            let mut pinned = built.model.clone();
            for (o, &zv) in built.z.iter().enumerate() {
                if refined.contains(&o) {
                    pinned.variables[zv].lower = 1.0;
                } else {
                    pinned.variables[zv].upper = 0.0;
                }
            }
            let re = run_built(&pinned, cfg, None)?;
            if re.status == SolveStatus::Optimal {
                inputs = built.extract_inputs(&re.primal);
            }
        }
        outputs = refined;
    }
    finish_solution(d, cfg, mode, outputs, inputs, out)
}

fn run_built(
    model: &MilpModel,
    cfg: &SelectionConfig,
    warm: Option<&std::collections::BTreeMap<String, f64>>,
) -> Result<SolveOutcome, SelectError> {
    if model.quad_terms.is_empty() {
        Ok(solve_milp(model, warm, cfg.time_limit, cfg.gap_tol)?)
    } else {
        Ok(solve_convex_miqp(model, cfg.time_limit, cfg.gap_tol)?)
    }
}

/// Lexicographically smallest optimal output set: walk outputs in index
/// order, try pinning each one in, and keep the pin whenever the optimum is
/// preserved. A witness set (some optimal set consistent with current pins)
/// avoids re-solves for indices it already contains.
fn lexicographic_refine(
    d: &Dataset,
    cfg: &SelectionConfig,
    built: &BuiltModel,
    optimal_value: f64,
    witness_start: Vec<usize>,
) -> Result<Vec<usize>, SelectError> {
    let maximize = built.model.sense == crate::milp::Sense::Maximize;
    let preserved = |v: f64| {
        if maximize {
            v >= optimal_value - 1e-9
        } else {
            v <= optimal_value + 1e-9
        }
    };
    let mut witness: Vec<usize> = witness_start;
    let mut pinned_one: Vec<usize> = Vec::new();
    let mut pinned_zero: Vec<usize> = Vec::new();
    for o in 0..d.num_outputs() {
        if pinned_one.len() == cfg.p {
            break;
        }
        if witness.contains(&o) {
            pinned_one.push(o);
            continue;
        }
        // Remaining slots must be fillable from indices above o.
        if pinned_one.len() + (d.num_outputs() - o) <= cfg.p {
            break;
        }
        if built.model.variables[built.z[o]].upper < 1.0 {
            pinned_zero.push(o);
            continue;
        }
        let mut trial = built.model.clone();
        for &q in &pinned_one {
            trial.variables[built.z[q]].lower = 1.0;
        }
        for &q in &pinned_zero {
            trial.variables[built.z[q]].upper = 0.0;
        }
        trial.variables[built.z[o]].lower = 1.0;
        let out = run_built(&trial, cfg, None)?;
        if out.status == SolveStatus::Optimal && preserved(out.objective) {
            pinned_one.push(o);
            witness = built.extract_outputs(&out.primal);
        } else {
            pinned_zero.push(o);
        }
    }
    Ok(if pinned_one.len() == cfg.p {
        pinned_one
    } else {
        witness
    })
}

/// Build a full warm-start primal map for a joint model from a selection
/// set, by solving the per-DMU efficiency LPs on that set.
fn warm_start_map(
    d: &Dataset,
    cfg: &SelectionConfig,
    built: &BuiltModel,
    outputs: &[usize],
) -> Option<std::collections::BTreeMap<String, f64>> {
    let active = ActiveSet::with_outputs(d, outputs.to_vec());
    let mut map = std::collections::BTreeMap::new();
    for (o, &zv) in built.z.iter().enumerate() {
        map.insert(
            built.model.variables[zv].name.clone(),
            if outputs.contains(&o) { 1.0 } else { 0.0 },
        );
    }
    for (b, &k) in built.block_dmus.iter().enumerate() {
        let model = dea::build_dea_lp(d, k, &active).ok()?;
        let sol = solve_lp(&model).ok()?;
        if sol.status != SolveStatus::Optimal {
            return None;
        }
        for i in 0..d.num_inputs() {
            let name = &built.model.variables[built.alpha[b][i]].name;
            let v = active
                .inputs
                .iter()
                .position(|&ai| ai == i)
                .map(|_| sol.value_of(&format!("alpha_{i}")))
                .unwrap_or(0.0);
            map.insert(name.clone(), v);
        }
        for o in 0..d.num_outputs() {
            let name = &built.model.variables[built.beta[b][o]].name;
            let v = if outputs.contains(&o) {
                sol.value_of(&format!("beta_{o}"))
            } else {
                0.0
            };
            map.insert(name.clone(), v);
        }
    }
    // Weight-bounded or extension-constrained models may reject the greedy
    // point; the MILP layer validates and drops it in that case.
    let _ = cfg;
    Some(map)
}

/// Shared tail: recompute efficiencies on the realized selection, check
/// consistency with the solver's objective, assemble the solution.
pub(crate) fn finish_solution(
    d: &Dataset,
    cfg: &SelectionConfig,
    mode: Mode,
    outputs: Vec<usize>,
    inputs: Option<Vec<usize>>,
    outcome: SolveOutcome,
) -> Result<SelectionSolution, SelectError> {
    let effs = evaluate_selection(
        d,
        &outputs,
        inputs.as_deref(),
        cfg.weight_bounds.as_deref(),
    )?;
    let objective_value = objective_of(cfg, mode, &effs);
    if outcome.status == SolveStatus::Optimal
        && (objective_value - outcome.objective).abs() > CONSISTENCY_TOL
    {
        return Err(SelectError::ConsistencyFailure(format!(
            "recomputed objective {objective_value} differs from solver objective {}",
            outcome.objective
        )));
    }
    Ok(SelectionSolution {
        selected_outputs: outputs,
        selected_inputs: inputs,
        efficiencies: effs,
        objective_value,
        outcome,
    })
}

/// One row of a budget sweep.
#[derive(Debug)]
pub struct SweepEntry {
    pub p: usize,
    pub result: Result<SelectionSolution, SelectError>,
}

impl SweepEntry {
    /// Distribution summary of the efficiencies at this budget.
    pub fn summary(&self) -> Option<crate::data::EfficiencySummary> {
        self.result
            .as_ref()
            .ok()
            .and_then(|sol| crate::data::summarize(&sol.efficiencies).ok())
    }
}

/// Solve the joint selection for every `p` in the range. Failures are
/// recorded per p and the sweep continues. The marginal gain
/// `v(p+1) - v(p)` is available via [`sweep_marginals`].
pub fn sweep_p(
    d: &Dataset,
    cfg: &SelectionConfig,
    p_range: std::ops::RangeInclusive<usize>,
) -> Vec<SweepEntry> {
    p_range
        .map(|p| {
            let mut cp = cfg.clone();
            cp.p = p;
            SweepEntry {
                p,
                result: cp
                    .validate(d)
                    .and_then(|()| solve_selection(d, &cp, Mode::Joint)),
            }
        })
        .collect()
}

/// Marginal objective gains between consecutive successful sweep entries:
/// entry for p carries `v(p+1) - v(p)` when both solved.
pub fn sweep_marginals(entries: &[SweepEntry]) -> Vec<Option<f64>> {
    (0..entries.len())
        .map(|i| {
            if i + 1 >= entries.len() || entries[i + 1].p != entries[i].p + 1 {
                return None;
            }
            match (&entries[i].result, &entries[i + 1].result) {
                (Ok(a), Ok(b)) => Some(b.objective_value - a.objective_value),
                _ => None,
            }
        })
        .collect()
}
