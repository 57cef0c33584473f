//! MILP/MIQP builders for the selection formulations.
//!
//! Individual model for DMU `k`: the efficiency LP plus one binary per
//! output, big-M (or reciprocal-bound) links between output weights and
//! their binaries, and an exact cardinality row. Input selection adds the
//! same machinery on the input side. The joint model shares one binary
//! vector across all K DMU blocks and supports five objectives.

use crate::data::Dataset;
use crate::milp::{MilpModel, Relation, Sense};

use super::config::{ObjectiveKind, SelectionConfig};
use super::{percentile_count, SelectError};

/// Index bookkeeping for a built selection model.
#[derive(Debug, Clone)]
pub struct BuiltModel {
    pub model: MilpModel,
    /// DMU indices covered by the blocks (all K for joint, one for individual).
    pub block_dmus: Vec<usize>,
    /// `alpha[b][i]` variable index for block `b`, input `i`.
    pub alpha: Vec<Vec<usize>>,
    /// `beta[b][o]` variable index for block `b`, output `o`.
    pub beta: Vec<Vec<usize>>,
    /// Output selection binaries, one per output.
    pub z: Vec<usize>,
    /// Input selection binaries when input selection is active.
    pub z_tilde: Option<Vec<usize>>,
    /// Level variable for min/percentile objectives.
    pub lambda: Option<usize>,
}

impl BuiltModel {
    /// Efficiency expression `sum_o y_o^(dmu) * beta[b][o]` for a block.
    fn efficiency_expr(&self, d: &Dataset, b: usize) -> Vec<(usize, f64)> {
        let k = self.block_dmus[b];
        (0..d.num_outputs())
            .filter(|&o| d.output(k, o) > 0.0)
            .map(|o| (self.beta[b][o], d.output(k, o)))
            .collect()
    }

    /// Selected outputs from a primal point (binaries rounded at 1e-6).
    pub fn extract_outputs(&self, primal: &std::collections::BTreeMap<String, f64>) -> Vec<usize> {
        self.z
            .iter()
            .enumerate()
            .filter(|&(_, &zi)| {
                primal
                    .get(&self.model.variables[zi].name)
                    .map(|&v| v > 0.5)
                    .unwrap_or(false)
            })
            .map(|(o, _)| o)
            .collect()
    }

    pub fn extract_inputs(
        &self,
        primal: &std::collections::BTreeMap<String, f64>,
    ) -> Option<Vec<usize>> {
        self.z_tilde.as_ref().map(|zt| {
            zt.iter()
                .enumerate()
                .filter(|&(_, &zi)| {
                    primal
                        .get(&self.model.variables[zi].name)
                        .map(|&v| v > 0.5)
                        .unwrap_or(false)
                })
                .map(|(i, _)| i)
                .collect()
        })
    }
}

/// Upper bounds for DMU `k`'s output weights: `1 / y_o^(k)` where the
/// output is positive, 0 where it is zero (the weight is then fixed).
pub fn tightened_output_bounds(d: &Dataset, k: usize) -> Vec<f64> {
    (0..d.num_outputs())
        .map(|o| {
            let y = d.output(k, o);
            if y > 0.0 {
                1.0 / y
            } else {
                0.0
            }
        })
        .collect()
}

/// Effective link coefficient for (k, o): `min(M, 1/y)` under tightening,
/// plain M otherwise. Returns None when the weight is fixed to zero.
fn link_coef(d: &Dataset, k: usize, o: usize, cfg: &SelectionConfig) -> Option<f64> {
    let y = d.output(k, o);
    if y <= 0.0 {
        return None;
    }
    if cfg.use_tightened_bounds {
        Some(cfg.big_m.min(1.0 / y))
    } else {
        Some(cfg.big_m)
    }
}

/// Build the output-selection model for a single DMU.
pub fn build_osdea_individual(
    d: &Dataset,
    k: usize,
    cfg: &SelectionConfig,
) -> Result<BuiltModel, SelectError> {
    cfg.validate(d)?;
    if k >= d.num_dmus() {
        return Err(SelectError::InvalidConfig(format!(
            "DMU index {k} out of range"
        )));
    }
    let mut built = skeleton(d, &[k], cfg)?;
    // Objective: DMU k's own efficiency.
    let expr = built.efficiency_expr(d, 0);
    for &(v, c) in &expr {
        built.model.set_objective(v, c);
    }
    finish_extensions(d, cfg, &mut built)?;
    Ok(built)
}

/// Build the feature-selection model for a single DMU: output selection
/// plus `p_tilde` input selection binaries with their own links.
pub fn build_fsdea_individual(
    d: &Dataset,
    k: usize,
    cfg: &SelectionConfig,
) -> Result<BuiltModel, SelectError> {
    let p_tilde = cfg.p_tilde.ok_or_else(|| {
        SelectError::InvalidConfig("build_fsdea_individual needs p_tilde".into())
    })?;
    let mut built = build_osdea_individual(d, k, cfg)?;
    let z_tilde: Vec<usize> = (0..d.num_inputs())
        .map(|i| built.model.add_binary(format!("zt_{i}")))
        .collect();
    for i in 0..d.num_inputs() {
        let x = d.input(k, i);
        let m_tilde = if cfg.use_tightened_bounds && x > 0.0 {
            cfg.big_m.min(1.0 / x)
        } else {
            cfg.big_m
        };
        let alpha = built.alpha[0][i];
        built.model.variables[alpha].upper = m_tilde;
        built.model.add_constraint(
            format!("ilink_{i}"),
            vec![(alpha, 1.0), (z_tilde[i], -m_tilde)],
            Relation::Le,
            0.0,
        );
    }
    built.model.add_constraint(
        "icard",
        z_tilde.iter().map(|&v| (v, 1.0)).collect(),
        Relation::Eq,
        p_tilde as f64,
    );
    built.z_tilde = Some(z_tilde);
    Ok(built)
}

/// Build the joint selection model: one shared binary vector, K DMU blocks,
/// objective attached per the configuration.
pub fn build_osdea_joint(d: &Dataset, cfg: &SelectionConfig) -> Result<BuiltModel, SelectError> {
    cfg.validate(d)?;
    if cfg.p_tilde.is_some() {
        return Err(SelectError::InvalidConfig(
            "input selection is only available in individual mode".into(),
        ));
    }
    let dmus: Vec<usize> = (0..d.num_dmus()).collect();
    let mut built = skeleton(d, &dmus, cfg)?;
    attach_objective(d, cfg, &mut built)?;
    finish_extensions(d, cfg, &mut built)?;
    Ok(built)
}

/// Shared core: per-block efficiency LPs, shared z binaries, link rows, and
/// the exact output cardinality.
fn skeleton(d: &Dataset, dmus: &[usize], cfg: &SelectionConfig) -> Result<BuiltModel, SelectError> {
    let many = dmus.len() > 1;
    let mut model = MilpModel::new(Sense::Maximize);
    let z: Vec<usize> = (0..d.num_outputs())
        .map(|o| model.add_binary(format!("z_{o}")))
        .collect();
    let mut alpha = Vec::with_capacity(dmus.len());
    let mut beta = Vec::with_capacity(dmus.len());
    for (b, &k) in dmus.iter().enumerate() {
        let tag = if many {
            format!("_{k}")
        } else {
            String::new()
        };
        let _ = b;
        let a_row: Vec<usize> = (0..d.num_inputs())
            .map(|i| model.add_var(format!("a{tag}_{i}"), 0.0, f64::INFINITY))
            .collect();
        let b_row: Vec<usize> = (0..d.num_outputs())
            .map(|o| {
                let ub = match link_coef(d, k, o, cfg) {
                    None => 0.0, // zero output: weight fixed without loss of optimality
                    Some(u) if cfg.use_tightened_bounds => u,
                    Some(_) => f64::INFINITY,
                };
                model.add_var(format!("b{tag}_{o}"), 0.0, ub)
            })
            .collect();
        for j in 0..d.num_dmus() {
            let mut terms = Vec::with_capacity(d.num_inputs() + d.num_outputs());
            for o in 0..d.num_outputs() {
                let y = d.output(j, o);
                if y > 0.0 && model.variables[b_row[o]].upper > 0.0 {
                    terms.push((b_row[o], y));
                }
            }
            for i in 0..d.num_inputs() {
                let x = d.input(j, i);
                if x > 0.0 {
                    terms.push((a_row[i], -x));
                }
            }
            model.add_constraint(format!("fr{tag}_{j}"), terms, Relation::Le, 0.0);
        }
        let norm: Vec<(usize, f64)> = (0..d.num_inputs())
            .filter(|&i| d.input(k, i) > 0.0)
            .map(|i| (a_row[i], d.input(k, i)))
            .collect();
        if norm.is_empty() {
            return Err(SelectError::NormalizationInfeasible {
                dmu: d.dmu_ids()[k].clone(),
            });
        }
        model.add_constraint(format!("norm{tag}"), norm, Relation::Eq, 1.0);
        // Link each positive-output weight to the shared binary, honoring
        // per-output weight bounds when configured.
        for o in 0..d.num_outputs() {
            let Some(u) = link_coef(d, k, o, cfg) else {
                continue;
            };
            let wb = cfg
                .weight_bounds
                .as_ref()
                .map(|b| b[o])
                .unwrap_or((0.0, f64::INFINITY));
            let upper = if wb.1.is_finite() { wb.1.min(u) } else { u };
            model.add_constraint(
                format!("link{tag}_{o}"),
                vec![(b_row[o], 1.0), (z[o], -upper)],
                Relation::Le,
                0.0,
            );
            if wb.0 > 0.0 {
                model.add_constraint(
                    format!("linklb{tag}_{o}"),
                    vec![(z[o], wb.0), (b_row[o], -1.0)],
                    Relation::Le,
                    0.0,
                );
            }
        }
        alpha.push(a_row);
        beta.push(b_row);
    }
    // Individual model: a zero output is never worth selecting, as long as
    // enough positive outputs remain to meet the cardinality.
    if dmus.len() == 1 {
        let k = dmus[0];
        let positive = (0..d.num_outputs()).filter(|&o| d.output(k, o) > 0.0).count();
        if positive >= cfg.p {
            for o in 0..d.num_outputs() {
                if d.output(k, o) <= 0.0 {
                    model.variables[z[o]].upper = 0.0;
                }
            }
        }
    }
    // Positive weight lower bounds force selection.
    if let Some(bounds) = &cfg.weight_bounds {
        for (o, &(l, _)) in bounds.iter().enumerate() {
            if l > 0.0 {
                model.variables[z[o]].lower = 1.0;
            }
        }
    }
    model.add_constraint(
        "card",
        z.iter().map(|&v| (v, 1.0)).collect(),
        Relation::Eq,
        cfg.p as f64,
    );
    Ok(BuiltModel {
        model,
        block_dmus: dmus.to_vec(),
        alpha,
        beta,
        z,
        z_tilde: None,
        lambda: None,
    })
}

/// Attach the configured objective to a joint model.
pub fn attach_objective(
    d: &Dataset,
    cfg: &SelectionConfig,
    built: &mut BuiltModel,
) -> Result<(), SelectError> {
    let kf = built.block_dmus.len() as f64;
    match &cfg.objective {
        ObjectiveKind::Average => {
            for b in 0..built.block_dmus.len() {
                for (v, c) in built.efficiency_expr(d, b) {
                    built.model.set_objective(v, c / kf);
                }
            }
        }
        ObjectiveKind::Weighted(w) => {
            for (b, &k) in built.block_dmus.iter().enumerate() {
                for (v, c) in built.efficiency_expr(d, b) {
                    built.model.set_objective(v, w[k] * c / kf);
                }
            }
        }
        ObjectiveKind::Quadratic => {
            built.model.sense = Sense::Minimize;
            for b in 0..built.block_dmus.len() {
                let expr = built.efficiency_expr(d, b);
                built
                    .model
                    .add_quad_term(format!("k{}", built.block_dmus[b]), 1.0 / kf, 1.0, expr);
            }
        }
        ObjectiveKind::Min => {
            let lambda = built.model.add_var("lam", 0.0, 1.0);
            built.model.set_objective(lambda, 1.0);
            for b in 0..built.block_dmus.len() {
                let mut terms = built.efficiency_expr(d, b);
                for t in terms.iter_mut() {
                    t.1 = -t.1;
                }
                terms.push((lambda, 1.0));
                built.model.add_constraint(
                    format!("level_{}", built.block_dmus[b]),
                    terms,
                    Relation::Le,
                    0.0,
                );
            }
            built.lambda = Some(lambda);
        }
        ObjectiveKind::Percentile(pi) => {
            let count = percentile_count(built.block_dmus.len(), *pi);
            let lambda = built.model.add_var("lam", 0.0, 1.0);
            built.model.set_objective(lambda, 1.0);
            let mut deltas = Vec::with_capacity(built.block_dmus.len());
            // Level reached by `count` DMUs: e_k >= lambda - M'(1 - delta_k)
            // with M' = 1, valid because efficiencies and lambda live in [0, 1].
            for b in 0..built.block_dmus.len() {
                let k = built.block_dmus[b];
                let delta = built.model.add_binary(format!("d_{k}"));
                let mut terms = built.efficiency_expr(d, b);
                for t in terms.iter_mut() {
                    t.1 = -t.1;
                }
                terms.push((lambda, 1.0));
                terms.push((delta, 1.0));
                built
                    .model
                    .add_constraint(format!("pct_{k}"), terms, Relation::Le, 1.0);
                deltas.push(delta);
            }
            built.model.add_constraint(
                "pct_count",
                deltas.iter().map(|&v| (v, 1.0)).collect(),
                Relation::Eq,
                count as f64,
            );
            built.lambda = Some(lambda);
        }
    }
    Ok(())
}

/// Add the cost, cluster, and correlation-conflict rows over the output
/// binaries. Weight-bound link replacement happens during model assembly;
/// this applies the remaining extensions in order.
pub fn apply_extensions(
    d: &Dataset,
    cfg: &SelectionConfig,
    model: &mut MilpModel,
    z: &[usize],
) -> Result<(), SelectError> {
    if let Some((c, budget)) = &cfg.costs {
        let terms: Vec<(usize, f64)> = z
            .iter()
            .enumerate()
            .filter(|&(o, _)| c[o] != 0.0)
            .map(|(o, &v)| (v, c[o]))
            .collect();
        model.add_constraint("cost", terms, Relation::Le, *budget);
    }
    if let Some(clusters) = &cfg.clusters {
        for (ci, cl) in clusters.iter().enumerate() {
            let terms: Vec<(usize, f64)> = cl.members.iter().map(|&o| (z[o], 1.0)).collect();
            if cl.p_max < cl.members.len() {
                model.add_constraint(
                    format!("clmax_{}", ci + 1),
                    terms.clone(),
                    Relation::Le,
                    cl.p_max as f64,
                );
            }
            if cl.p_min > 0 {
                model.add_constraint(
                    format!("clmin_{}", ci + 1),
                    terms,
                    Relation::Ge,
                    cl.p_min as f64,
                );
            }
        }
    }
    if let Some(r) = cfg.conflict_matrix(d)? {
        for a in 0..z.len() {
            for b in (a + 1)..z.len() {
                if r[a][b] != 0 {
                    model.add_constraint(
                        format!("conf_{}_{}", a + 1, b + 1),
                        vec![(z[a], 1.0), (z[b], 1.0)],
                        Relation::Le,
                        1.0,
                    );
                }
            }
        }
    }
    Ok(())
}

fn finish_extensions(
    d: &Dataset,
    cfg: &SelectionConfig,
    built: &mut BuiltModel,
) -> Result<(), SelectError> {
    let z = built.z.clone();
    apply_extensions(d, cfg, &mut built.model, &z)
}
