//! Cross-module invariants and property tests beyond the acceptance gate.
#![allow(clippy::needless_range_loop)]

mod common;

use common::{assert_close, corpus, nested_table, par_for_each, random_instance_sized};
use dea_select::data::{
    correlation_matrix, normalize_outputs, parse_dataset_csv, summarize, threshold_rule_matrix,
    Dataset,
};
use dea_select::dea::{all_efficiencies, efficiency, ActiveSet};
use dea_select::greedy::greedy_nested;
use dea_select::milp::{solve_lp, solve_milp, MilpModel, Relation, Sense, SolveStatus};
use dea_select::oracle::{enumerate_best, DEFAULT_ENUM_CAP};
use dea_select::select::{
    percentile_count, solve_selection, sweep_marginals, sweep_p, Mode, ObjectiveKind,
    SelectionConfig,
};
use proptest::prelude::*;
use rand::SeedableRng;

proptest! {
    #[test]
    fn double_normalization_fixes_ranges(
        rows in proptest::collection::vec(
            proptest::collection::vec(0.01f64..10.0, 3),
            2..8,
        )
    ) {
        let k = rows.len();
        let d = Dataset::new(
            (0..k).map(|i| format!("r{i}")).collect(),
            vec![vec![1.0]; k],
            rows,
            vec!["x".into()],
            vec!["a".into(), "b".into(), "c".into()],
        ).unwrap();
        let once = normalize_outputs(&d);
        let twice = normalize_outputs(&once);
        for (o, range) in twice.output_ranges().iter().enumerate() {
            if d.output_ranges()[o] > 0.0 {
                prop_assert!((range - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn correlation_invariant_under_positive_affine_maps(
        col_a in proptest::collection::vec(0.0f64..5.0, 4),
        scale in 0.01f64..50.0,
        shift in 0.0f64..10.0,
    ) {
        let k = col_a.len();
        let col_b: Vec<f64> = col_a.iter().map(|v| 5.0 - v).collect();
        let build = |a: &[f64]| Dataset::new(
            (0..k).map(|i| format!("r{i}")).collect(),
            vec![vec![1.0]; k],
            a.iter().zip(col_b.iter()).map(|(&x, &y)| vec![x, y]).collect(),
            vec!["x".into()],
            vec!["a".into(), "b".into()],
        ).unwrap();
        let base = correlation_matrix(&build(&col_a)).unwrap();
        let mapped: Vec<f64> = col_a.iter().map(|v| v * scale + shift).collect();
        let transformed = correlation_matrix(&build(&mapped)).unwrap();
        prop_assert!((base.rho[0][1] - transformed.rho[0][1]).abs() < 1e-9);
    }

    #[test]
    fn summary_order_statistics_hold(
        values in proptest::collection::vec(0.0f64..=1.0, 1..40)
    ) {
        let s = summarize(&values).unwrap();
        prop_assert!(s.min <= s.q1 + 1e-12);
        prop_assert!(s.q1 <= s.q2 + 1e-12);
        prop_assert!(s.q2 <= s.q3 + 1e-12);
        prop_assert!(s.q3 <= s.max + 1e-12);
        prop_assert!(s.mean >= s.min - 1e-12 && s.mean <= s.max + 1e-12);
        prop_assert!(s.std_dev <= s.max - s.min + 1e-12);
        prop_assert!((s.iqr - (s.q3 - s.q1)).abs() < 1e-12);
    }

    #[test]
    fn threshold_matrix_symmetric_zero_diagonal(tau in -1.0f64..=1.0) {
        let d = parse_dataset_csv(
            "id,in:x,out:a,out:b,out:c\nr1,1,0.1,0.9,0.3\nr2,1,0.5,0.2,0.8\nr3,1,0.9,0.4,0.1\n",
        ).unwrap();
        let rho = correlation_matrix(&d).unwrap();
        let r = threshold_rule_matrix(&rho, tau);
        for a in 0..3 {
            prop_assert_eq!(r[a][a], 0);
            for b in 0..3 {
                prop_assert_eq!(r[a][b], r[b][a]);
            }
        }
    }

    #[test]
    fn lp_relaxation_bounds_milp(seed in 0u64..500) {
        // Random small set-packing style models.
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        use rand::Rng;
        let n = rng.random_range(2..6);
        let mut m = MilpModel::new(Sense::Maximize);
        let vars: Vec<usize> = (0..n).map(|i| m.add_binary(format!("z{i}"))).collect();
        for (i, &v) in vars.iter().enumerate() {
            m.set_objective(v, rng.random_range(0.1..2.0));
            let _ = i;
        }
        for _ in 0..rng.random_range(1..4) {
            let mut terms: Vec<(usize, f64)> = Vec::new();
            for &v in &vars {
                if rng.random_bool(0.7) {
                    terms.push((v, rng.random_range(0.2..1.5)));
                }
            }
            if terms.is_empty() {
                continue;
            }
            let rhs = rng.random_range(0.5..2.5);
            m.add_constraint("c", terms, Relation::Le, rhs);
        }
        let lp = solve_lp(&m).unwrap();
        let milp = solve_milp(&m, None, 30.0, 1e-9).unwrap();
        if lp.status == SolveStatus::Optimal && milp.status == SolveStatus::Optimal {
            prop_assert!(lp.objective >= milp.objective - 1e-7);
        }
    }
}

#[test]
fn efficiency_monotone_in_output_sets_on_corpus() {
    let instances = corpus(20, 0x3030);
    par_for_each(&instances, |inst| {
        let d = &inst.dataset;
        let o = d.num_outputs();
        for k in 0..d.num_dmus() {
            let small = efficiency(d, k, &ActiveSet::with_outputs(d, vec![0])).unwrap();
            let mid = efficiency(d, k, &ActiveSet::with_outputs(d, vec![0, 1])).unwrap();
            let full = efficiency(d, k, &ActiveSet::with_outputs(d, (0..o).collect::<Vec<_>>()))
                .unwrap();
            assert!(small <= mid + 1e-9 && mid <= full + 1e-9);
            assert!((0.0..=1.0).contains(&full));
        }
    });
}

#[test]
fn selection_values_scale_invariant() {
    let instances = corpus(12, 0x5CA1E);
    par_for_each(&instances, |inst| {
        let d = &inst.dataset;
        let p = 2.min(d.num_outputs());
        let cfg = SelectionConfig::new(p);
        let base = solve_selection(d, &cfg, Mode::Joint).unwrap();
        let scaled_data = d.scale_output_column(1 % d.num_outputs(), 7.25);
        let scaled = solve_selection(&scaled_data, &cfg, Mode::Joint).unwrap();
        assert_close(
            base.objective_value,
            scaled.objective_value,
            1e-6,
            "scale invariance of the optimal value",
        );
        // The realized selection remains optimal under scaling.
        let effs = all_efficiencies(
            &scaled_data,
            &ActiveSet::with_outputs(&scaled_data, base.selected_outputs.clone()),
        )
        .unwrap();
        let val = cfg.objective.evaluate(&effs);
        assert_close(val, scaled.objective_value, 1e-6, "old set stays optimal");
    });
}

#[test]
fn greedy_is_a_lower_bound_and_accepted_as_warm_start() {
    let instances = corpus(20, 0x6EED);
    par_for_each(&instances, |inst| {
        let d = &inst.dataset;
        for p in 1..=d.num_outputs().min(4) {
            let trace = greedy_nested(d, p, &ObjectiveKind::Average).unwrap();
            let exact = solve_selection(d, &SelectionConfig::new(p), Mode::Joint).unwrap();
            assert!(
                trace.values[p - 1] <= exact.objective_value + 1e-6,
                "instance {} p={p}: greedy {} above exact {}",
                inst.id,
                trace.values[p - 1],
                exact.objective_value
            );
            // The greedy incumbent must be accepted by the MILP layer:
            // a rejected warm start would leave a warning behind.
            assert!(
                exact.outcome.warnings.is_empty(),
                "unexpected warnings: {:?}",
                exact.outcome.warnings
            );
        }
    });
}

#[test]
fn input_selection_matches_enumeration_on_small_instances() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(0xF5DEA);
    for trial in 0..12 {
        let d = random_instance_sized(&mut rng, 4, 3, 3);
        let mut cfg = SelectionConfig::new(2);
        cfg.p_tilde = Some(1);
        cfg.gap_tol = 1e-9;
        for k in 0..d.num_dmus() {
            let sol = solve_selection(&d, &cfg, Mode::Individual(k)).unwrap();
            let oracle = enumerate_best(&d, &cfg, Mode::Individual(k), DEFAULT_ENUM_CAP).unwrap();
            assert_close(
                sol.objective_value,
                oracle.objective_value,
                1e-6,
                &format!("trial {trial} DMU {k} with input selection"),
            );
            assert_eq!(sol.selected_inputs.as_ref().map(Vec::len), Some(1));
            assert_eq!(sol.selected_outputs.len(), 2);
        }
    }
}

#[test]
fn percentile_level_is_the_mth_largest_efficiency() {
    let instances = corpus(15, 0x9E9C);
    par_for_each(&instances, |inst| {
        let d = &inst.dataset;
        for pi in [50u32, 75] {
            let m = percentile_count(d.num_dmus(), pi);
            if m < 1 {
                continue;
            }
            let cfg = SelectionConfig::new(2.min(d.num_outputs()))
                .with_objective(ObjectiveKind::Percentile(pi));
            let sol = solve_selection(d, &cfg, Mode::Joint).unwrap();
            let mut effs = sol.efficiencies.clone();
            effs.sort_by(f64::total_cmp);
            let mth_largest = effs[effs.len() - m];
            assert_close(
                sol.objective_value,
                mth_largest,
                1e-6,
                "level equals the m-th largest realized efficiency",
            );
        }
    });
}

#[test]
fn structured_solver_agrees_with_enumeration_at_scale() {
    // Large enough to route through the structured branch-and-bound, small
    // enough in outputs for the enumeration oracle to stay exact.
    let mut rng = rand::rngs::StdRng::seed_from_u64(0x57A7);
    let d = random_instance_sized(&mut rng, 48, 1, 6);
    for objective in [
        ObjectiveKind::Average,
        ObjectiveKind::Min,
        ObjectiveKind::Quadratic,
        ObjectiveKind::Percentile(50),
    ] {
        let mut cfg = SelectionConfig::new(2).with_objective(objective);
        cfg.gap_tol = 1e-9;
        let sol = solve_selection(&d, &cfg, Mode::Joint).unwrap();
        let oracle = enumerate_best(&d, &cfg, Mode::Joint, DEFAULT_ENUM_CAP).unwrap();
        assert_close(
            sol.objective_value,
            oracle.objective_value,
            1e-6,
            &format!("structured vs oracle under {}", cfg.objective.name()),
        );
        assert_eq!(
            sol.selected_outputs, oracle.selected_outputs,
            "lexicographic tie policy under {}",
            cfg.objective.name()
        );
    }
}

#[test]
fn sweep_reports_marginals_and_monotone_values() {
    let d = nested_table();
    let entries = sweep_p(&d, &SelectionConfig::new(1), 1..=3);
    let values: Vec<f64> = entries
        .iter()
        .map(|e| e.result.as_ref().unwrap().objective_value)
        .collect();
    assert!(values.windows(2).all(|w| w[1] >= w[0] - 1e-6));
    let marginals = sweep_marginals(&entries);
    assert_eq!(marginals.len(), 3);
    assert!(marginals[0].is_some() && marginals[1].is_some());
    assert!(marginals[2].is_none());
    assert_close(
        values[0] + marginals[0].unwrap(),
        values[1],
        1e-12,
        "marginal arithmetic",
    );
}

#[test]
fn sparse_outputs_still_match_enumeration() {
    // Zero output cells trigger the fixed-weight and forced-binary logic;
    // the solver must keep agreeing with brute force on such data.
    let instances = common::sparse_corpus(30, 0x0F0E);
    par_for_each(&instances, |inst| {
        let d = &inst.dataset;
        for p in 1..=d.num_outputs() {
            for objective in [ObjectiveKind::Average, ObjectiveKind::Min] {
                let mut cfg = SelectionConfig::new(p).with_objective(objective);
                cfg.gap_tol = 1e-9;
                let sol = solve_selection(d, &cfg, Mode::Joint)
                    .unwrap_or_else(|e| panic!("sparse instance {} p={p}: {e}", inst.id));
                let oracle = enumerate_best(d, &cfg, Mode::Joint, DEFAULT_ENUM_CAP).unwrap();
                assert_close(
                    sol.objective_value,
                    oracle.objective_value,
                    1e-6,
                    &format!(
                        "sparse instance {} p={p} {}",
                        inst.id,
                        cfg.objective.name()
                    ),
                );
            }
            // Individual mode with a rotating DMU, including DMUs whose
            // zero outputs outnumber the budget.
            let k = inst.id % d.num_dmus();
            let mut cfg = SelectionConfig::new(p);
            cfg.gap_tol = 1e-9;
            let sol = solve_selection(d, &cfg, Mode::Individual(k)).unwrap();
            let oracle = enumerate_best(d, &cfg, Mode::Individual(k), DEFAULT_ENUM_CAP).unwrap();
            assert_close(
                sol.objective_value,
                oracle.objective_value,
                1e-6,
                &format!("sparse instance {} p={p} individual {k}", inst.id),
            );
        }
    });
}

#[test]
fn time_limit_returns_promptly_with_flagged_outcome() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(0x7131);
    let d = random_instance_sized(&mut rng, 40, 1, 20);
    let mut cfg = SelectionConfig::new(5);
    cfg.time_limit = 0.02;
    let started = std::time::Instant::now();
    match solve_selection(&d, &cfg, Mode::Joint) {
        Ok(sol) => {
            assert_eq!(sol.outcome.status, SolveStatus::TimeLimit);
            assert_eq!(sol.selected_outputs.len(), 5);
        }
        Err(dea_select::select::SelectError::TimeLimitWithoutSolution) => {}
        Err(e) => panic!("unexpected error: {e}"),
    }
    assert!(
        started.elapsed().as_secs_f64() < 10.0,
        "time-limited solve must return promptly"
    );
}

#[test]
fn individual_tie_breaks_to_lowest_output_index() {
    // DMU 5 of the concavity table reaches efficiency 1 through output 1
    // or output 4; the realized selection must be the lower index.
    let d = common::concavity_table();
    let sol = solve_selection(&d, &SelectionConfig::new(1), Mode::Individual(4)).unwrap();
    assert_close(sol.objective_value, 1.0, 1e-9, "tied optimum value");
    assert_eq!(sol.selected_outputs, vec![0]);
}

#[test]
fn sweep_on_nested_table_reports_expected_sets() {
    let d = nested_table();
    let entries = sweep_p(&d, &SelectionConfig::new(1), 1..=3);
    let sets: Vec<Vec<usize>> = entries
        .iter()
        .map(|e| e.result.as_ref().unwrap().selected_outputs.clone())
        .collect();
    assert_eq!(sets[0], vec![0]);
    assert_eq!(sets[1], vec![1, 2]);
    assert_eq!(sets[2], vec![0, 1, 2]);
    let v2 = entries[1].result.as_ref().unwrap().objective_value;
    assert_close(v2, 1.0, 1e-9, "v(2) on the nested table");
}

#[test]
fn oracle_full_budget_self_consistency() {
    let instances = corpus(10, 0x0AC1E);
    par_for_each(&instances, |inst| {
        let d = &inst.dataset;
        let o = d.num_outputs();
        let s = enumerate_best(d, &SelectionConfig::new(o), Mode::Joint, DEFAULT_ENUM_CAP)
            .unwrap();
        assert_eq!(s.selected_outputs, (0..o).collect::<Vec<_>>());
        let full = all_efficiencies(d, &ActiveSet::full(d)).unwrap();
        let mean = full.iter().sum::<f64>() / full.len() as f64;
        assert_close(s.objective_value, mean, 1e-9, "oracle v(O) = mean(E)");
    });
}

#[test]
fn solver_binaries_are_integral_and_constraints_respected() {
    let d = nested_table();
    let cfg = SelectionConfig::new(2);
    let built = dea_select::select::build_osdea_joint(&d, &cfg).unwrap();
    let out = solve_milp(&built.model, None, 60.0, 1e-6).unwrap();
    assert_eq!(out.status, SolveStatus::Optimal);
    let point: Vec<f64> = built
        .model
        .variables
        .iter()
        .map(|v| out.primal[&v.name])
        .collect();
    assert!(built.model.max_violation(&point) <= 1e-7);
    for &z in &built.z {
        let v = point[z];
        assert!((v - v.round()).abs() <= 1e-6);
    }
}

#[test]
fn lp_format_dump_contains_selection_structure() {
    let d = nested_table();
    let built = dea_select::select::build_osdea_joint(&d, &SelectionConfig::new(2)).unwrap();
    let text = built.model.to_lp_format();
    assert!(text.contains("Maximize"));
    assert!(text.contains("Binaries"));
    assert!(text.contains("z_0 z_1 z_2"));
    assert!(text.contains("card:"));
    assert!(text.ends_with("End\n"));
}
