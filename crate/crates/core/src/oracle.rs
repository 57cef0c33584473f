//! Exhaustive enumeration reference. Deliberately unclever: walk every
//! feasible subset in lexicographic order, score each one with plain
//! efficiency LP batches, and keep the best. Shares only the simplex with
//! the branch-and-bound stack, so it serves as an independent check of the
//! MILP layer. Also houses a closed-form single-input specialization that
//! bypasses LPs entirely.

use crate::data::Dataset;
use crate::milp::{SolveOutcome, SolveStatus};
use crate::select::{
    Mode, SelectError, SelectionConfig, SelectionSolution,
};

/// Default cap on the number of enumerated subsets.
pub const DEFAULT_ENUM_CAP: u128 = 100_000;

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

/// All k-subsets of 0..n in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        // advance
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        cur[i] += 1;
        for j in (i + 1)..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Does a subset satisfy the cost/cluster/conflict extensions?
fn admissible(cfg: &SelectionConfig, conflicts: &Option<Vec<Vec<u8>>>, set: &[usize]) -> bool {
    if let Some(bounds) = &cfg.weight_bounds {
        for (o, &(l, _)) in bounds.iter().enumerate() {
            if l > 0.0 && !set.contains(&o) {
                return false;
            }
        }
    }
    if let Some((c, budget)) = &cfg.costs {
        let total: f64 = set.iter().map(|&o| c[o]).sum();
        if total > budget + 1e-12 {
            return false;
        }
    }
    if let Some(clusters) = &cfg.clusters {
        for cl in clusters {
            let n = set.iter().filter(|o| cl.members.contains(o)).count();
            if n < cl.p_min || n > cl.p_max {
                return false;
            }
        }
    }
    if let Some(r) = conflicts {
        for (i, &a) in set.iter().enumerate() {
            for &b in &set[i + 1..] {
                if r[a][b] != 0 {
                    return false;
                }
            }
        }
    }
    true
}

/// Exact optimum by brute force over all feasible subsets, ties to the
/// lexicographically smallest set. The cap guards against explosion;
/// [`DEFAULT_ENUM_CAP`] is a sensible default.
pub fn enumerate_best(
    d: &Dataset,
    cfg: &SelectionConfig,
    mode: Mode,
    cap: u128,
) -> Result<SelectionSolution, SelectError> {
    cfg.validate(d)?;
    let k_focus = match mode {
        Mode::Individual(k) if k >= d.num_dmus() => {
            return Err(SelectError::InvalidConfig(format!(
                "DMU index {k} out of range"
            )))
        }
        Mode::Individual(k) => Some(k),
        Mode::Joint => {
            if cfg.p_tilde.is_some() {
                return Err(SelectError::InvalidConfig(
                    "input selection is only available in individual mode".into(),
                ));
            }
            None
        }
    };
    let started = std::time::Instant::now();
    let out_count = binomial(d.num_outputs(), cfg.p);
    let in_count = match cfg.p_tilde {
        Some(pt) => binomial(d.num_inputs(), pt),
        None => 1,
    };
    let needed = out_count.saturating_mul(in_count);
    if needed > cap {
        return Err(SelectError::CapExceeded { needed, cap });
    }
    let conflicts = cfg.conflict_matrix(d)?;
    let input_sets: Vec<Option<Vec<usize>>> = match cfg.p_tilde {
        Some(pt) => combinations(d.num_inputs(), pt).into_iter().map(Some).collect(),
        None => vec![None],
    };
    type Candidate = (f64, Vec<usize>, Option<Vec<usize>>, Vec<f64>);
    let mut best: Option<Candidate> = None;
    let maximizing = match mode {
        Mode::Individual(_) => true,
        Mode::Joint => cfg.objective.maximizing(),
    };
    let mut evaluated = 0u64;
    for outs in combinations(d.num_outputs(), cfg.p) {
        if !admissible(cfg, &conflicts, &outs) {
            continue;
        }
        for ins in &input_sets {
            // For an individual evaluation only the focal DMU's LP matters,
            // but the full vector is cheap at oracle scale and reported.
            let effs = match crate::select::evaluate_selection(
                d,
                &outs,
                ins.as_deref(),
                cfg.weight_bounds.as_deref(),
            ) {
                Ok(e) => e,
                Err(SelectError::StructurallyInfeasible(_)) => continue,
                Err(SelectError::Dea(crate::dea::DeaError::NormalizationInfeasible {
                    ..
                })) => continue,
                Err(e) => return Err(e),
            };
            evaluated += 1;
            let value = match k_focus {
                Some(k) => effs[k],
                None => cfg.objective.evaluate(&effs),
            };
            // Subsets arrive in lexicographic order, so keeping the first
            // of any value tie realizes the smallest-set tie-break.
            let better = match &best {
                None => true,
                Some((bv, _, _, _)) => {
                    if maximizing {
                        value > bv + 1e-9
                    } else {
                        value < bv - 1e-9
                    }
                }
            };
            if better {
                best = Some((value, outs.clone(), ins.clone(), effs));
            }
        }
    }
    let (value, outs, ins, effs) = best.ok_or_else(|| {
        SelectError::StructurallyInfeasible(
            "no feasible subset satisfies the extension constraints".into(),
        )
    })?;
    Ok(SelectionSolution {
        selected_outputs: outs,
        selected_inputs: ins,
        efficiencies: effs,
        objective_value: value,
        outcome: SolveOutcome {
            status: SolveStatus::Optimal,
            objective: value,
            primal: Default::default(),
            gap: 0.0,
            nodes: evaluated,
            wall_time: started.elapsed().as_secs_f64(),
            warnings: Vec::new(),
        },
    })
}

/// Closed-form best single output for a DMU on single-input data:
/// `max_o (y_o^k / x^k) / max_j (y_o^j / x^j)`, ties to the lowest index.
/// An LP-free cross-check for the p = 1 individual problem.
pub fn single_input_p1_value(d: &Dataset, k: usize) -> Result<(usize, f64), SelectError> {
    if d.num_inputs() != 1 {
        return Err(SelectError::InvalidConfig(format!(
            "single-input specialization needs I = 1, dataset has {}",
            d.num_inputs()
        )));
    }
    if k >= d.num_dmus() {
        return Err(SelectError::InvalidConfig(format!(
            "DMU index {k} out of range"
        )));
    }
    for j in 0..d.num_dmus() {
        if d.input(j, 0) <= 0.0 {
            return Err(SelectError::InvalidConfig(format!(
                "DMU {} has a zero input",
                d.dmu_ids()[j]
            )));
        }
    }
    let mut best = (0usize, f64::NEG_INFINITY);
    for o in 0..d.num_outputs() {
        let own = d.output(k, o) / d.input(k, 0);
        let peak = (0..d.num_dmus())
            .map(|j| d.output(j, o) / d.input(j, 0))
            .fold(0.0f64, f64::max);
        let value = if peak > 0.0 { own / peak } else { 0.0 };
        if value > best.1 + 1e-15 {
            best = (o, value);
        }
    }
    Ok(best)
}
