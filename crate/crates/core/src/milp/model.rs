//! Model representation for LP/MILP/convex-MIQP problems.
//!
//! A [`MilpModel`] holds continuous and binary variables with bounds, sparse
//! linear constraints, and a linear objective that may carry convex separable
//! quadratic terms of the form `weight * (target - expr)^2` attached to
//! affine expressions (used with minimization only).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::SolverError;

/// Kind of a decision variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

/// A decision variable with bounds.
#[derive(Debug, Clone)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

/// Constraint relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// A sparse linear constraint `sum(coef * var) relation rhs`.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// Optimization sense.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

/// Convex separable quadratic objective term `weight * (target - expr)^2`,
/// where `expr` is an affine expression over model variables.
#[derive(Debug, Clone)]
pub struct QuadTerm {
    pub name: String,
    pub weight: f64,
    pub target: f64,
    pub expr: Vec<(usize, f64)>,
}

/// An LP/MILP/convex-MIQP model.
#[derive(Debug, Clone)]
pub struct MilpModel {
    pub sense: Sense,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    /// Dense linear objective coefficient per variable.
    pub objective: Vec<f64>,
    /// Constant added to the objective value.
    pub objective_constant: f64,
    pub quad_terms: Vec<QuadTerm>,
}

impl MilpModel {
    pub fn new(sense: Sense) -> Self {
        MilpModel {
            sense,
            variables: Vec::new(),
            constraints: Vec::new(),
            objective: Vec::new(),
            objective_constant: 0.0,
            quad_terms: Vec::new(),
        }
    }

    /// Add a continuous variable, returning its index.
    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> usize {
        self.variables.push(Variable {
            name: name.into(),
            kind: VarKind::Continuous,
            lower,
            upper,
        });
        self.objective.push(0.0);
        self.variables.len() - 1
    }

    /// Add a binary variable with bounds [0, 1], returning its index.
    pub fn add_binary(&mut self, name: impl Into<String>) -> usize {
        self.variables.push(Variable {
            name: name.into(),
            kind: VarKind::Binary,
            lower: 0.0,
            upper: 1.0,
        });
        self.objective.push(0.0);
        self.variables.len() - 1
    }

    pub fn set_objective(&mut self, var: usize, coef: f64) {
        self.objective[var] = coef;
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(usize, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> usize {
        self.constraints.push(Constraint {
            name: name.into(),
            terms,
            relation,
            rhs,
        });
        self.constraints.len() - 1
    }

    /// Attach a convex quadratic term `weight * (target - expr)^2`.
    pub fn add_quad_term(
        &mut self,
        name: impl Into<String>,
        weight: f64,
        target: f64,
        expr: Vec<(usize, f64)>,
    ) {
        self.quad_terms.push(QuadTerm {
            name: name.into(),
            weight,
            target,
            expr,
        });
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn binary_indices(&self) -> Vec<usize> {
        self.variables
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Binary)
            .map(|(i, _)| i)
            .collect()
    }

    /// Check structural invariants: bound sanity, term indices, finiteness,
    /// binaries confined to [0, 1], quadratic terms only under minimization.
    pub fn validate(&self) -> Result<(), SolverError> {
        for (i, v) in self.variables.iter().enumerate() {
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(SolverError::InvalidModel(format!(
                    "variable {} ({}) has invalid bounds [{}, {}]",
                    i, v.name, v.lower, v.upper
                )));
            }
            if v.kind == VarKind::Binary && (v.lower < 0.0 || v.upper > 1.0) {
                return Err(SolverError::InvalidModel(format!(
                    "binary variable {} ({}) has bounds outside [0, 1]",
                    i, v.name
                )));
            }
        }
        for (ci, c) in self.constraints.iter().enumerate() {
            if !c.rhs.is_finite() {
                return Err(SolverError::InvalidModel(format!(
                    "constraint {} ({}) has non-finite rhs",
                    ci, c.name
                )));
            }
            for &(vi, coef) in &c.terms {
                if vi >= self.variables.len() {
                    return Err(SolverError::InvalidModel(format!(
                        "constraint {} ({}) references unknown variable {}",
                        ci, c.name, vi
                    )));
                }
                if !coef.is_finite() {
                    return Err(SolverError::InvalidModel(format!(
                        "constraint {} ({}) has non-finite coefficient",
                        ci, c.name
                    )));
                }
            }
        }
        if self.objective.len() != self.variables.len() {
            return Err(SolverError::InvalidModel(
                "objective length does not match variable count".into(),
            ));
        }
        if !self.quad_terms.is_empty() && self.sense != Sense::Minimize {
            return Err(SolverError::InvalidModel(
                "quadratic terms require a minimization objective".into(),
            ));
        }
        for q in &self.quad_terms {
            if q.weight < 0.0 {
                return Err(SolverError::InvalidModel(format!(
                    "quadratic term {} has negative weight",
                    q.name
                )));
            }
            for &(vi, _) in &q.expr {
                if vi >= self.variables.len() {
                    return Err(SolverError::InvalidModel(format!(
                        "quadratic term {} references unknown variable {}",
                        q.name, vi
                    )));
                }
            }
        }
        Ok(())
    }

    /// Evaluate the linear part of the objective at a point.
    pub fn eval_linear_objective(&self, x: &[f64]) -> f64 {
        self.objective_constant
            + self
                .objective
                .iter()
                .zip(x.iter())
                .map(|(c, v)| c * v)
                .sum::<f64>()
    }

    /// Evaluate the full objective (linear plus quadratic terms) at a point.
    pub fn eval_objective(&self, x: &[f64]) -> f64 {
        let mut val = self.eval_linear_objective(x);
        for q in &self.quad_terms {
            let e: f64 = q.expr.iter().map(|&(vi, c)| c * x[vi]).sum();
            val += q.weight * (q.target - e) * (q.target - e);
        }
        val
    }

    /// Largest constraint violation at a point (0 for a feasible point).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for c in &self.constraints {
            let lhs: f64 = c.terms.iter().map(|&(vi, coef)| coef * x[vi]).sum();
            let v = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (i, var) in self.variables.iter().enumerate() {
            worst = worst.max(var.lower - x[i]).max(x[i] - var.upper);
        }
        worst
    }

    /// Build a name -> value map for a primal point.
    pub fn primal_map(&self, x: &[f64]) -> BTreeMap<String, f64> {
        self.variables
            .iter()
            .zip(x.iter())
            .map(|(v, &val)| (v.name.clone(), val))
            .collect()
    }

    /// Render the model in the LP text file format (objective, constraints,
    /// bounds, binary sections). Quadratic terms are emitted as comments,
    /// since they are epigraph data rather than constraint rows.
    pub fn to_lp_format(&self) -> String {
        let mut out = String::new();
        let sense = match self.sense {
            Sense::Maximize => "Maximize",
            Sense::Minimize => "Minimize",
        };
        let _ = writeln!(out, "{sense}");
        let mut obj = String::from(" obj:");
        let mut first = true;
        for (i, &c) in self.objective.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            push_term(&mut obj, c, &self.variables[i].name, first);
            first = false;
        }
        if first {
            obj.push_str(" 0");
        }
        let _ = writeln!(out, "{obj}");
        for q in &self.quad_terms {
            let mut e = String::new();
            let mut qf = true;
            for &(vi, c) in &q.expr {
                push_term(&mut e, c, &self.variables[vi].name, qf);
                qf = false;
            }
            let _ = writeln!(
                out,
                "\\ quad {}: + {} * ({} -{})^2",
                q.name, q.weight, q.target, e
            );
        }
        let _ = writeln!(out, "Subject To");
        for c in &self.constraints {
            let mut row = format!(" {}:", c.name);
            let mut cf = true;
            for &(vi, coef) in &c.terms {
                if coef == 0.0 {
                    continue;
                }
                push_term(&mut row, coef, &self.variables[vi].name, cf);
                cf = false;
            }
            if cf {
                row.push_str(" 0");
            }
            let rel = match c.relation {
                Relation::Le => "<=",
                Relation::Eq => "=",
                Relation::Ge => ">=",
            };
            let _ = writeln!(out, "{row} {rel} {}", c.rhs);
        }
        let _ = writeln!(out, "Bounds");
        for v in &self.variables {
            if v.kind == VarKind::Binary {
                continue;
            }
            match (v.lower.is_finite(), v.upper.is_finite()) {
                (true, true) => {
                    let _ = writeln!(out, " {} <= {} <= {}", v.lower, v.name, v.upper);
                }
                (true, false) => {
                    let _ = writeln!(out, " {} >= {}", v.name, v.lower);
                }
                (false, true) => {
                    let _ = writeln!(out, " -inf <= {} <= {}", v.name, v.upper);
                }
                (false, false) => {
                    let _ = writeln!(out, " {} free", v.name);
                }
            }
        }
        let binaries: Vec<&str> = self
            .variables
            .iter()
            .filter(|v| v.kind == VarKind::Binary)
            .map(|v| v.name.as_str())
            .collect();
        if !binaries.is_empty() {
            let _ = writeln!(out, "Binaries");
            let _ = writeln!(out, " {}", binaries.join(" "));
        }
        let _ = writeln!(out, "End");
        out
    }
}

fn push_term(buf: &mut String, coef: f64, name: &str, first: bool) {
    if coef < 0.0 {
        let _ = write!(buf, " - {} {}", -coef, name);
    } else if first {
        let _ = write!(buf, " {} {}", coef, name);
    } else {
        let _ = write!(buf, " + {} {}", coef, name);
    }
}
