//! Shared fixtures: the two toy tables used across the suite and a
//! reproducible random corpus of small instances.
#![allow(dead_code)] // each integration test binary uses a subset

use dea_select::data::{parse_dataset_csv, Dataset};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// 5 DMUs, single input, four outputs; the marginal gain of the third
/// output exceeds the second's, so the value curve is not concave.
pub fn concavity_table() -> Dataset {
    parse_dataset_csv(
        "id,in:x1,out:y1,out:y2,out:y3,out:y4\n\
         d1,1,0.6,0.3333333333333333,0.3333333333333333,0.3333333333333333\n\
         d2,1,0.7,0.3333333333333333,0.3333333333333333,0.3333333333333333\n\
         d3,1,0.8,1,0,0\n\
         d4,1,0.9,0,1,0\n\
         d5,1,1,0,0,1\n",
    )
    .unwrap()
}

/// 4 DMUs, single input, three outputs; the greedy nested path locks in
/// output 1 and misses the optimal pair {2, 3}.
pub fn nested_table() -> Dataset {
    parse_dataset_csv(
        "id,in:x1,out:y1,out:y2,out:y3\n\
         d1,1,0.85,0.2,0.8\n\
         d2,1,0.95,0.4,0.6\n\
         d3,1,0.9,0.6,0.4\n\
         d4,1,1,0.8,0.2\n",
    )
    .unwrap()
}

pub struct CorpusInstance {
    pub id: usize,
    pub dataset: Dataset,
}

/// Deterministic random corpus: K in 3..=8, I in 1..=2, O in 3..=6,
/// entries uniform in [0.1, 1.1] so all data is strictly positive and the
/// reciprocal weight bounds stay mild.
pub fn corpus(n: usize, seed: u64) -> Vec<CorpusInstance> {
    (0..n)
        .map(|id| CorpusInstance {
            id,
            dataset: random_instance(seed.wrapping_add(id as u64)),
        })
        .collect()
}

pub fn random_instance(seed: u64) -> Dataset {
    let mut rng = StdRng::seed_from_u64(seed);
    let k = rng.random_range(3..=8);
    let i = rng.random_range(1..=2);
    let o = rng.random_range(3..=6);
    random_instance_sized(&mut rng, k, i, o)
}

pub fn random_instance_sized(rng: &mut StdRng, k: usize, i: usize, o: usize) -> Dataset {
    let ids = (0..k).map(|r| format!("u{r}")).collect();
    let inputs = (0..k)
        .map(|_| (0..i).map(|_| rng.random_range(0.1..1.1)).collect())
        .collect();
    let outputs = (0..k)
        .map(|_| (0..o).map(|_| rng.random_range(0.1..1.1)).collect())
        .collect();
    let input_names = (0..i).map(|c| format!("x{}", c + 1)).collect();
    let output_names = (0..o).map(|c| format!("y{}", c + 1)).collect();
    Dataset::new(ids, inputs, outputs, input_names, output_names).unwrap()
}

/// Instances where a quarter of the output cells are exactly zero, to
/// exercise the fixed-weight and forced-binary paths. Inputs stay strictly
/// positive.
pub fn sparse_corpus(n: usize, seed: u64) -> Vec<CorpusInstance> {
    (0..n)
        .map(|id| {
            let mut rng = StdRng::seed_from_u64(seed.wrapping_add(id as u64));
            let k = rng.random_range(3..=7);
            let i = rng.random_range(1..=2);
            let o = rng.random_range(3..=5);
            let ids = (0..k).map(|r| format!("u{r}")).collect();
            let inputs = (0..k)
                .map(|_| (0..i).map(|_| rng.random_range(0.1..1.1)).collect())
                .collect();
            let outputs = (0..k)
                .map(|_| {
                    (0..o)
                        .map(|_| {
                            if rng.random_bool(0.25) {
                                0.0
                            } else {
                                rng.random_range(0.1..1.1)
                            }
                        })
                        .collect()
                })
                .collect();
            let dataset = Dataset::new(
                ids,
                inputs,
                outputs,
                (0..i).map(|c| format!("x{}", c + 1)).collect(),
                (0..o).map(|c| format!("y{}", c + 1)).collect(),
            )
            .unwrap();
            CorpusInstance { id, dataset }
        })
        .collect()
}

/// Run a check over items on a small scoped thread pool; worker panics
/// (failed assertions) propagate and fail the test.
pub fn par_for_each<T: Sync, F: Fn(&T) + Sync>(items: &[T], f: F) {
    let workers = std::thread::available_parallelism()
        .map(|v| v.get())
        .unwrap_or(1)
        .clamp(1, 8);
    if workers == 1 || items.len() < 2 {
        items.iter().for_each(&f);
        return;
    }
    let chunk = items.len().div_ceil(workers);
    std::thread::scope(|scope| {
        for part in items.chunks(chunk) {
            let f = &f;
            scope.spawn(move || part.iter().for_each(f));
        }
    });
}

pub fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
    assert!(
        (a - b).abs() <= tol,
        "{what}: {a} vs {b} (diff {:.3e} > {tol:.1e})",
        (a - b).abs()
    );
}
