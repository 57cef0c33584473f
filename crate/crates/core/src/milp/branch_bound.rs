//! Best-first branch-and-bound over binary variables.

use std::collections::BinaryHeap;
use std::time::Instant;

use super::model::{MilpModel, Sense, VarKind};
use super::simplex::{LpStatus, RelaxationCore};
use super::{SolveOutcome, SolveStatus, SolverError, FEASIBILITY_TOL, INTEGRALITY_TOL};

struct Node {
    /// Search key: parent relaxation value, sign-adjusted so larger is better.
    key: f64,
    id: u64,
    /// Binary fixings along the path from the root: (variable, value).
    fixings: Vec<(usize, u8)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key && self.id == other.id
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key
            .total_cmp(&other.key)
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// Solve a MILP by best-first branch-and-bound on its binary variables.
///
/// A warm-start incumbent, when supplied and feasible, seeds the primal
/// bound; an infeasible one is dropped with a warning. Branching picks the
/// most fractional binary (ties to the lowest variable index). Terminates
/// as `Optimal` once the relative bound gap is at most `gap_tol`, or as
/// `TimeLimit` with the best incumbent found.
pub fn solve_milp(
    model: &MilpModel,
    incumbent: Option<&std::collections::BTreeMap<String, f64>>,
    time_limit: f64,
    gap_tol: f64,
) -> Result<SolveOutcome, SolverError> {
    if !model.quad_terms.is_empty() {
        return Err(SolverError::InvalidModel(
            "solve_milp does not accept quadratic terms; use solve_convex_miqp".into(),
        ));
    }
    let started = Instant::now();
    let core = RelaxationCore::from_model(model)?;
    let maximize = model.sense == Sense::Maximize;
    let sgn = if maximize { 1.0 } else { -1.0 };
    let binaries: Vec<usize> = model.binary_indices();
    let base_lower: Vec<f64> = model.variables.iter().map(|v| v.lower).collect();
    let base_upper: Vec<f64> = model.variables.iter().map(|v| v.upper).collect();

    let mut warnings = Vec::new();
    let mut best_x: Option<Vec<f64>> = None;
    let mut best_val = f64::NEG_INFINITY; // sign-adjusted: larger is better
    if let Some(start) = incumbent {
        match warm_start_point(model, start) {
            Ok(x) => {
                best_val = sgn * model.eval_linear_objective(&x);
                best_x = Some(x);
            }
            Err(reason) => {
                warnings.push(format!("warm-start incumbent ignored: {reason}"));
            }
        }
    }

    let mut heap = BinaryHeap::new();
    heap.push(Node {
        key: f64::INFINITY,
        id: 0,
        fixings: Vec::new(),
    });
    let mut next_id = 1u64;
    let mut nodes = 0u64;
    let mut timed_out = false;
    let mut root_unbounded = false;

    while let Some(node) = heap.pop() {
        if started.elapsed().as_secs_f64() > time_limit {
            timed_out = true;
            break;
        }
        // The heap key is an upper bound on anything below this node.
        if node.key <= best_val + 1e-9 {
            continue;
        }
        if best_x.is_some() && rel_gap(node.key, best_val) <= gap_tol {
            break;
        }
        let mut lower = base_lower.clone();
        let mut upper = base_upper.clone();
        for &(v, b) in &node.fixings {
            lower[v] = b as f64;
            upper[v] = b as f64;
        }
        let res = core.solve(&lower, &upper)?;
        nodes += 1;
        match res.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                if node.fixings.is_empty() {
                    root_unbounded = true;
                    break;
                }
                return Err(SolverError::NumericalBreakdown(
                    "unbounded node relaxation below a bounded root".into(),
                ));
            }
            LpStatus::Optimal => {}
        }
        let bound = sgn * res.objective;
        if bound <= best_val + 1e-9 {
            continue;
        }
        // Most fractional binary, ties to the lowest index.
        let mut branch: Option<(usize, f64)> = None;
        for &b in &binaries {
            let v = res.x[b];
            let dist = (v - v.round()).abs();
            if dist > INTEGRALITY_TOL && branch.map(|(_, d)| dist > d).unwrap_or(true) {
                branch = Some((b, dist));
            }
        }
        match branch {
            None => {
                let mut x = res.x.clone();
                for &b in &binaries {
                    x[b] = x[b].round();
                }
                let val = sgn * model.eval_linear_objective(&x);
                if val > best_val {
                    best_val = val;
                    best_x = Some(x);
                }
            }
            Some((b, _)) => {
                for fix in [0u8, 1u8] {
                    let mut fixings = node.fixings.clone();
                    fixings.push((b, fix));
                    heap.push(Node {
                        key: bound,
                        id: next_id,
                        fixings,
                    });
                    next_id += 1;
                }
            }
        }
    }

    if root_unbounded {
        return Ok(SolveOutcome {
            status: SolveStatus::Unbounded,
            objective: f64::NAN,
            primal: Default::default(),
            gap: f64::INFINITY,
            nodes,
            wall_time: started.elapsed().as_secs_f64(),
            warnings,
        });
    }

    let remaining_bound = heap
        .peek()
        .map(|n| n.key)
        .unwrap_or(f64::NEG_INFINITY)
        .max(best_val);
    let gap = if best_x.is_some() {
        rel_gap(remaining_bound, best_val)
    } else {
        f64::INFINITY
    };

    let outcome = match (&best_x, timed_out) {
        (Some(_), true) if gap > gap_tol => SolveStatus::TimeLimit,
        (Some(_), _) => SolveStatus::Optimal,
        (None, true) => SolveStatus::TimeLimit,
        (None, false) => SolveStatus::Infeasible,
    };

    let (objective, primal) = match best_x {
        Some(ref x) => {
            // Polish: re-solve the LP with binaries pinned for a clean point.
            let mut lower = base_lower.clone();
            let mut upper = base_upper.clone();
            for &b in &binaries {
                lower[b] = x[b];
                upper[b] = x[b];
            }
            match core.solve(&lower, &upper) {
                Ok(r) if r.status == LpStatus::Optimal => {
                    (r.objective, model.primal_map(&r.x))
                }
                _ => (sgn * best_val, model.primal_map(x)),
            }
        }
        None => (f64::NAN, Default::default()),
    };

    Ok(SolveOutcome {
        status: outcome,
        objective,
        primal,
        gap: if outcome == SolveStatus::Optimal {
            gap.min(gap_tol)
        } else {
            gap
        },
        nodes,
        wall_time: started.elapsed().as_secs_f64(),
        warnings,
    })
}

fn rel_gap(bound: f64, incumbent: f64) -> f64 {
    if !bound.is_finite() || !incumbent.is_finite() {
        return f64::INFINITY;
    }
    (bound - incumbent).max(0.0) / incumbent.abs().max(1.0)
}

/// Turn a name -> value warm start into a validated primal vector.
fn warm_start_point(
    model: &MilpModel,
    start: &std::collections::BTreeMap<String, f64>,
) -> Result<Vec<f64>, String> {
    let mut x = vec![0.0; model.num_vars()];
    for (i, v) in model.variables.iter().enumerate() {
        match start.get(&v.name) {
            Some(&val) => x[i] = val,
            None => return Err(format!("missing value for variable {}", v.name)),
        }
    }
    for (i, v) in model.variables.iter().enumerate() {
        if v.kind == VarKind::Binary && (x[i] - x[i].round()).abs() > INTEGRALITY_TOL {
            return Err(format!("variable {} is not integral", v.name));
        }
    }
    let viol = model.max_violation(&x);
    if viol > FEASIBILITY_TOL {
        return Err(format!("constraint violation {viol:.3e}"));
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::model::{MilpModel, Relation, Sense};
    use std::collections::BTreeMap;

    fn knapsack() -> MilpModel {
        // max z1 + z2 s.t. z1 + z2 <= 1
        let mut m = MilpModel::new(Sense::Maximize);
        let z1 = m.add_binary("z1");
        let z2 = m.add_binary("z2");
        m.set_objective(z1, 1.0);
        m.set_objective(z2, 1.0);
        m.add_constraint("c", vec![(z1, 1.0), (z2, 1.0)], Relation::Le, 1.0);
        m
    }

    #[test]
    fn simple_binary_knapsack() {
        let out = solve_milp(&knapsack(), None, 60.0, 1e-6).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!((out.objective - 1.0).abs() < 1e-9);
        let z1 = out.value_of("z1");
        let z2 = out.value_of("z2");
        assert!((z1 + z2 - 1.0).abs() < 1e-6);
        assert!((z1 - z1.round()).abs() < 1e-6 && (z2 - z2.round()).abs() < 1e-6);
    }

    #[test]
    fn weighted_knapsack_integer_optimum() {
        // max 3a + 4b + 2c s.t. 2a + 3b + c <= 4 -> a=1, c=1... check best = a+b (2a+3b=5 >4), so a=1,c=1 gives 5; b=1,c=1 gives 6 w/ weight 4 <= 4.
        let mut m = MilpModel::new(Sense::Maximize);
        let a = m.add_binary("a");
        let b = m.add_binary("b");
        let c = m.add_binary("c");
        m.set_objective(a, 3.0);
        m.set_objective(b, 4.0);
        m.set_objective(c, 2.0);
        m.add_constraint("w", vec![(a, 2.0), (b, 3.0), (c, 1.0)], Relation::Le, 4.0);
        let out = solve_milp(&m, None, 60.0, 1e-6).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!((out.objective - 6.0).abs() < 1e-9, "got {}", out.objective);
    }

    #[test]
    fn infeasible_milp() {
        let mut m = knapsack();
        m.add_constraint(
            "force",
            vec![(0, 1.0), (1, 1.0)],
            Relation::Ge,
            2.0,
        );
        let out = solve_milp(&m, None, 60.0, 1e-6).unwrap();
        assert_eq!(out.status, SolveStatus::Infeasible);
    }

    #[test]
    fn valid_warm_start_is_kept() {
        let m = knapsack();
        let mut start = BTreeMap::new();
        start.insert("z1".to_string(), 1.0);
        start.insert("z2".to_string(), 0.0);
        let out = solve_milp(&m, Some(&start), 60.0, 1e-6).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!(out.warnings.is_empty());
        assert!((out.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn invalid_warm_start_is_ignored_with_warning() {
        let m = knapsack();
        let mut start = BTreeMap::new();
        start.insert("z1".to_string(), 1.0);
        start.insert("z2".to_string(), 1.0); // violates z1 + z2 <= 1
        let out = solve_milp(&m, Some(&start), 60.0, 1e-6).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert_eq!(out.warnings.len(), 1);
        assert!((out.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fixed_binaries_match_pure_lp() {
        let mut m = MilpModel::new(Sense::Maximize);
        let z = m.add_binary("z");
        let x = m.add_var("x", 0.0, 10.0);
        m.set_objective(x, 1.0);
        m.add_constraint("link", vec![(x, 1.0), (z, -4.0)], Relation::Le, 0.0);
        m.variables[z].lower = 1.0; // fix z = 1
        let milp = solve_milp(&m, None, 60.0, 1e-6).unwrap();
        let lp = crate::milp::solve_lp(&m).unwrap();
        assert!((milp.objective - lp.objective).abs() < 1e-7);
        assert!((milp.objective - 4.0).abs() < 1e-7);
    }

    #[test]
    fn mixed_integer_continuous() {
        // max x + z, x <= 1.5 continuous, z binary, x + z <= 2
        let mut m = MilpModel::new(Sense::Maximize);
        let x = m.add_var("x", 0.0, 1.5);
        let z = m.add_binary("z");
        m.set_objective(x, 1.0);
        m.set_objective(z, 1.0);
        m.add_constraint("c", vec![(x, 1.0), (z, 1.0)], Relation::Le, 2.0);
        let out = solve_milp(&m, None, 60.0, 1e-6).unwrap();
        assert!((out.objective - 2.0).abs() < 1e-9);
        assert!((out.value_of("z") - 1.0).abs() < 1e-6);
    }

    #[test]
    fn determinism_same_outcome_twice() {
        let mut m = MilpModel::new(Sense::Maximize);
        let vars: Vec<usize> = (0..6).map(|i| m.add_binary(format!("z{i}"))).collect();
        for (i, &v) in vars.iter().enumerate() {
            m.set_objective(v, 1.0 + (i as f64) * 0.1);
        }
        let terms: Vec<(usize, f64)> = vars.iter().map(|&v| (v, 1.0)).collect();
        m.add_constraint("card", terms, Relation::Le, 3.0);
        let a = solve_milp(&m, None, 60.0, 1e-6).unwrap();
        let b = solve_milp(&m, None, 60.0, 1e-6).unwrap();
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
        assert_eq!(a.primal, b.primal);
        assert_eq!(a.nodes, b.nodes);
    }
}
