//! Self-contained LP / MILP / convex-MIQP solving.
//!
//! The pieces: a model layer ([`MilpModel`]), a bounded-variable revised
//! simplex for LP relaxations ([`solve_lp`]), best-first branch-and-bound on
//! binary variables ([`solve_milp`]), and an outer-approximation loop for
//! convex separable quadratic objectives ([`solve_convex_miqp`]).

mod branch_bound;
mod model;
mod outer;
mod simplex;

pub use branch_bound::solve_milp;
pub use model::{Constraint, MilpModel, QuadTerm, Relation, Sense, VarKind, Variable};
pub use outer::solve_convex_miqp;
pub use simplex::{solve_lp, LpResult, LpStatus};

pub(crate) use simplex::RelaxationCore;

use std::collections::BTreeMap;
use thiserror::Error;

/// Feasibility tolerance applied when checking primal points.
pub const FEASIBILITY_TOL: f64 = 1e-7;
/// Integrality tolerance for binary variables.
pub const INTEGRALITY_TOL: f64 = 1e-6;
/// Default relative MIP gap tolerance.
pub const DEFAULT_GAP_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("iteration limit of {0} exceeded")]
    IterationLimit(usize),
}

/// Terminal status of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    TimeLimit,
}

/// Result of an LP/MILP/MIQP solve.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    /// Objective in the model's own sense; NaN when no feasible point is known.
    pub objective: f64,
    /// Variable name to value, for the reported point.
    pub primal: BTreeMap<String, f64>,
    /// Relative optimality gap at termination.
    pub gap: f64,
    /// Branch-and-bound nodes explored (0 for pure LP solves).
    pub nodes: u64,
    pub wall_time: f64,
    /// Non-fatal notes, e.g. a rejected warm-start incumbent.
    pub warnings: Vec<String>,
}

impl SolveOutcome {
    pub fn value_of(&self, name: &str) -> f64 {
        self.primal.get(name).copied().unwrap_or(0.0)
    }
}
