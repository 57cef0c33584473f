//! Selection configuration: objectives, budgets, extension constraints, and
//! the flat key-value text format used by the CLI.
//!
//! Text format, one `key=value` per line (`#` starts a comment):
//!
//! ```text
//! p=3
//! p_tilde=1
//! objective=average|weighted|quadratic|min|percentile
//! pi=50
//! weights=1,1,0.5
//! bounds.2=0.1,5
//! cost.c=1,2,3
//! cost.C=4
//! cluster.1=1,2:0,1
//! corr.tau=0.9
//! bigm=1000
//! time_limit=300
//! gap=1e-6
//! ```
//!
//! Output and input indices in the text format are 1-based; the in-memory
//! representation is 0-based.

use crate::data::Dataset;

use super::SelectError;

/// Objective used by the joint selection model.
#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveKind {
    /// Maximize the mean efficiency.
    Average,
    /// Maximize the weighted mean efficiency (one nonnegative weight per DMU).
    Weighted(Vec<f64>),
    /// Minimize the mean squared distance to the all-efficient ideal point.
    Quadratic,
    /// Maximize the worst efficiency.
    Min,
    /// Maximize the level reached by the top `floor(K * pi / 100)` DMUs.
    Percentile(u32),
}

impl ObjectiveKind {
    pub fn name(&self) -> &'static str {
        match self {
            ObjectiveKind::Average => "average",
            ObjectiveKind::Weighted(_) => "weighted",
            ObjectiveKind::Quadratic => "quadratic",
            ObjectiveKind::Min => "min",
            ObjectiveKind::Percentile(_) => "percentile",
        }
    }

    /// True when a larger objective value is better.
    pub fn maximizing(&self) -> bool {
        !matches!(self, ObjectiveKind::Quadratic)
    }

    /// Evaluate the objective on a full efficiency vector.
    pub fn evaluate(&self, effs: &[f64]) -> f64 {
        let k = effs.len() as f64;
        match self {
            ObjectiveKind::Average => effs.iter().sum::<f64>() / k,
            ObjectiveKind::Weighted(w) => {
                effs.iter().zip(w.iter()).map(|(e, w)| e * w).sum::<f64>() / k
            }
            ObjectiveKind::Quadratic => {
                effs.iter().map(|e| (1.0 - e) * (1.0 - e)).sum::<f64>() / k
            }
            ObjectiveKind::Min => effs.iter().cloned().fold(f64::INFINITY, f64::min),
            ObjectiveKind::Percentile(pi) => {
                let m = percentile_count(effs.len(), *pi);
                let mut sorted = effs.to_vec();
                sorted.sort_by(f64::total_cmp);
                // m-th largest value
                sorted[sorted.len() - m]
            }
        }
    }
}

/// `floor(K * pi / 100)`, the number of DMUs required to reach the level.
pub fn percentile_count(k: usize, pi: u32) -> usize {
    (k as u64 * pi as u64 / 100) as usize
}

/// Whether a selection is individually tailored to one DMU or shared.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Individual(usize),
    Joint,
}

/// A cluster of similar outputs with selection count bounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterSpec {
    /// 0-based output indices.
    pub members: Vec<usize>,
    pub p_min: usize,
    pub p_max: usize,
}

/// Pairwise-conflict rule derived from output correlations.
#[derive(Debug, Clone, PartialEq)]
pub enum CorrelationRule {
    /// Flag pairs whose Pearson correlation reaches the threshold.
    Tau(f64),
    /// Explicit 0-1 conflict matrix (symmetric, zero diagonal).
    Matrix(Vec<Vec<u8>>),
}

/// Full configuration of a selection run.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionConfig {
    /// Number of outputs to select.
    pub p: usize,
    /// Number of inputs to select, when input selection is active.
    pub p_tilde: Option<usize>,
    pub objective: ObjectiveKind,
    /// Per-output weight bounds [L, U] on the output multipliers; entries
    /// default to [0, inf).
    pub weight_bounds: Option<Vec<(f64, f64)>>,
    /// Per-output costs and the total budget.
    pub costs: Option<(Vec<f64>, f64)>,
    pub clusters: Option<Vec<ClusterSpec>>,
    pub correlation_rule: Option<CorrelationRule>,
    pub big_m: f64,
    pub time_limit: f64,
    pub gap_tol: f64,
    /// Replace the big-M link by the data-derived reciprocal bound where
    /// available. On by default; a programmatic switch, not part of the
    /// text format.
    pub use_tightened_bounds: bool,
}

impl SelectionConfig {
    pub fn new(p: usize) -> Self {
        SelectionConfig {
            p,
            p_tilde: None,
            objective: ObjectiveKind::Average,
            weight_bounds: None,
            costs: None,
            clusters: None,
            correlation_rule: None,
            big_m: 1000.0,
            time_limit: 300.0,
            gap_tol: 1e-6,
            use_tightened_bounds: true,
        }
    }

    pub fn with_objective(mut self, objective: ObjectiveKind) -> Self {
        self.objective = objective;
        self
    }

    /// Validate the configuration against a dataset. Structural arithmetic
    /// that cannot admit any feasible selection is reported as
    /// [`SelectError::StructurallyInfeasible`].
    pub fn validate(&self, d: &Dataset) -> Result<(), SelectError> {
        let o = d.num_outputs();
        let k = d.num_dmus();
        if self.p < 1 || self.p > o {
            return Err(SelectError::InvalidConfig(format!(
                "p = {} outside 1..={o}",
                self.p
            )));
        }
        if let Some(pt) = self.p_tilde {
            if pt < 1 || pt > d.num_inputs() {
                return Err(SelectError::InvalidConfig(format!(
                    "p_tilde = {pt} outside 1..={}",
                    d.num_inputs()
                )));
            }
        }
        if !(self.big_m.is_finite() && self.big_m > 0.0) {
            return Err(SelectError::InvalidConfig("bigm must be positive".into()));
        }
        if self.gap_tol < 0.0 || !self.gap_tol.is_finite() {
            return Err(SelectError::InvalidConfig("gap must be nonnegative".into()));
        }
        match &self.objective {
            ObjectiveKind::Weighted(w) => {
                if w.len() != k {
                    return Err(SelectError::BadWeights(format!(
                        "got {} weights for {k} DMUs",
                        w.len()
                    )));
                }
                if w.iter().any(|&x| !x.is_finite() || x < 0.0) {
                    return Err(SelectError::BadWeights(
                        "weights must be finite and nonnegative".into(),
                    ));
                }
            }
            ObjectiveKind::Percentile(pi) => {
                if *pi < 1 || *pi > 100 {
                    return Err(SelectError::BadPercentile(format!(
                        "pi = {pi} outside 1..=100"
                    )));
                }
                if percentile_count(k, *pi) < 1 {
                    return Err(SelectError::BadPercentile(format!(
                        "floor(K*pi/100) = 0 for K = {k}, pi = {pi}"
                    )));
                }
            }
            _ => {}
        }
        if let Some(bounds) = &self.weight_bounds {
            if bounds.len() != o {
                return Err(SelectError::InvalidConfig(format!(
                    "weight bounds cover {} outputs, dataset has {o}",
                    bounds.len()
                )));
            }
            for (i, &(l, u)) in bounds.iter().enumerate() {
                if l < 0.0 || l > u {
                    return Err(SelectError::InvalidConfig(format!(
                        "weight bounds for output {} invalid: [{l}, {u}]",
                        i + 1
                    )));
                }
            }
            let forced = bounds.iter().filter(|&&(l, _)| l > 0.0).count();
            if forced > self.p {
                return Err(SelectError::StructurallyInfeasible(format!(
                    "#(L_o > 0) = {forced} > p = {}",
                    self.p
                )));
            }
        }
        if let Some((c, budget)) = &self.costs {
            if c.len() != o {
                return Err(SelectError::InvalidConfig(format!(
                    "cost vector covers {} outputs, dataset has {o}",
                    c.len()
                )));
            }
            if c.iter().any(|&x| !x.is_finite() || x < 0.0) {
                return Err(SelectError::InvalidConfig(
                    "costs must be finite and nonnegative".into(),
                ));
            }
            let mut sorted = c.clone();
            sorted.sort_by(f64::total_cmp);
            let cheapest: f64 = sorted[..self.p].iter().sum();
            if cheapest > *budget + 1e-12 {
                return Err(SelectError::StructurallyInfeasible(format!(
                    "cheapest {}-subset costs {cheapest}, budget C = {budget}",
                    self.p
                )));
            }
        }
        if let Some(clusters) = &self.clusters {
            let mut seen = vec![false; o];
            for (ci, cl) in clusters.iter().enumerate() {
                if cl.members.is_empty() {
                    return Err(SelectError::InvalidConfig(format!(
                        "cluster {} is empty",
                        ci + 1
                    )));
                }
                for &m in &cl.members {
                    if m >= o {
                        return Err(SelectError::InvalidConfig(format!(
                            "cluster {} references output {} out of range",
                            ci + 1,
                            m + 1
                        )));
                    }
                    if seen[m] {
                        return Err(SelectError::InvalidConfig(format!(
                            "output {} appears in two clusters",
                            m + 1
                        )));
                    }
                    seen[m] = true;
                }
                if cl.p_min > cl.p_max || cl.p_max > cl.members.len() {
                    return Err(SelectError::StructurallyInfeasible(format!(
                        "cluster {} bounds [{}, {}] invalid for size {}",
                        ci + 1,
                        cl.p_min,
                        cl.p_max,
                        cl.members.len()
                    )));
                }
            }
            if seen.iter().any(|&s| !s) {
                return Err(SelectError::InvalidConfig(
                    "clusters must partition all outputs".into(),
                ));
            }
            let min_sum: usize = clusters.iter().map(|c| c.p_min).sum();
            let max_sum: usize = clusters.iter().map(|c| c.p_max).sum();
            if min_sum > self.p || max_sum < self.p {
                return Err(SelectError::StructurallyInfeasible(format!(
                    "cluster bounds force between {min_sum} and {max_sum} outputs, p = {}",
                    self.p
                )));
            }
        }
        if let Some(rule) = &self.correlation_rule {
            match rule {
                CorrelationRule::Tau(t) => {
                    if !(-1.0..=1.0).contains(t) {
                        return Err(SelectError::InvalidConfig(format!(
                            "corr.tau = {t} outside [-1, 1]"
                        )));
                    }
                }
                CorrelationRule::Matrix(r) => {
                    if r.len() != o || r.iter().any(|row| row.len() != o) {
                        return Err(SelectError::InvalidConfig(
                            "conflict matrix shape mismatch".into(),
                        ));
                    }
                    for a in 0..o {
                        if r[a][a] != 0 {
                            return Err(SelectError::InvalidConfig(
                                "conflict matrix must have a zero diagonal".into(),
                            ));
                        }
                        for b in 0..o {
                            if r[a][b] > 1 || r[a][b] != r[b][a] {
                                return Err(SelectError::InvalidConfig(
                                    "conflict matrix must be symmetric 0-1".into(),
                                ));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Resolve the pairwise conflict matrix, computing correlations when the
    /// rule is a threshold.
    pub fn conflict_matrix(&self, d: &Dataset) -> Result<Option<Vec<Vec<u8>>>, SelectError> {
        match &self.correlation_rule {
            None => Ok(None),
            Some(CorrelationRule::Matrix(m)) => Ok(Some(m.clone())),
            Some(CorrelationRule::Tau(tau)) => {
                let rho = crate::data::correlation_matrix(d)?;
                Ok(Some(crate::data::threshold_rule_matrix(&rho, *tau)))
            }
        }
    }

    /// Parse the flat key-value text format.
    pub fn parse(text: &str) -> Result<Self, SelectError> {
        let mut p: Option<usize> = None;
        let mut cfg = SelectionConfig::new(1);
        let mut objective_name: Option<String> = None;
        let mut pi: Option<u32> = None;
        let mut weights: Option<Vec<f64>> = None;
        let mut bounds: Vec<(usize, f64, f64)> = Vec::new();
        let mut cost_c: Option<Vec<f64>> = None;
        let mut cost_budget: Option<f64> = None;
        let mut clusters: Vec<(usize, ClusterSpec)> = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                SelectError::InvalidConfig(format!("line {}: expected key=value", ln + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            let bad = |what: &str| {
                SelectError::InvalidConfig(format!("line {}: bad {what}: {value:?}", ln + 1))
            };
            match key {
                "p" => p = Some(value.parse().map_err(|_| bad("p"))?),
                "p_tilde" => cfg.p_tilde = Some(value.parse().map_err(|_| bad("p_tilde"))?),
                "objective" => objective_name = Some(value.to_string()),
                "pi" => pi = Some(value.parse().map_err(|_| bad("pi"))?),
                "weights" => weights = Some(parse_list(value).map_err(|_| bad("weights"))?),
                "cost.c" => cost_c = Some(parse_list(value).map_err(|_| bad("cost.c"))?),
                "cost.C" => cost_budget = Some(value.parse().map_err(|_| bad("cost.C"))?),
                "corr.tau" => {
                    cfg.correlation_rule =
                        Some(CorrelationRule::Tau(value.parse().map_err(|_| bad("corr.tau"))?))
                }
                "bigm" => cfg.big_m = value.parse().map_err(|_| bad("bigm"))?,
                "time_limit" => cfg.time_limit = value.parse().map_err(|_| bad("time_limit"))?,
                "gap" => cfg.gap_tol = value.parse().map_err(|_| bad("gap"))?,
                _ => {
                    if let Some(idx) = key.strip_prefix("bounds.") {
                        let o: usize = idx.parse().map_err(|_| bad("bounds index"))?;
                        let (l, u) = value.split_once(',').ok_or_else(|| bad("bounds pair"))?;
                        let l: f64 = l.trim().parse().map_err(|_| bad("bounds lower"))?;
                        let u: f64 = parse_upper(u.trim()).map_err(|_| bad("bounds upper"))?;
                        if o == 0 {
                            return Err(bad("bounds index (1-based)"));
                        }
                        bounds.push((o - 1, l, u));
                    } else if let Some(idx) = key.strip_prefix("cluster.") {
                        let ci: usize = idx.parse().map_err(|_| bad("cluster index"))?;
                        let (members, lims) =
                            value.split_once(':').ok_or_else(|| bad("cluster spec"))?;
                        let members: Vec<usize> = members
                            .split(',')
                            .map(|s| s.trim().parse::<usize>())
                            .collect::<Result<_, _>>()
                            .map_err(|_| bad("cluster members"))?;
                        if members.contains(&0) {
                            return Err(bad("cluster members (1-based)"));
                        }
                        let (lo, hi) = lims.split_once(',').ok_or_else(|| bad("cluster limits"))?;
                        clusters.push((
                            ci,
                            ClusterSpec {
                                members: members.iter().map(|&m| m - 1).collect(),
                                p_min: lo.trim().parse().map_err(|_| bad("cluster p_min"))?,
                                p_max: hi.trim().parse().map_err(|_| bad("cluster p_max"))?,
                            },
                        ));
                    } else {
                        return Err(SelectError::InvalidConfig(format!(
                            "line {}: unknown key {key:?}",
                            ln + 1
                        )));
                    }
                }
            }
        }
        cfg.p = p.ok_or_else(|| SelectError::InvalidConfig("missing required key p".into()))?;
        cfg.objective = match objective_name.as_deref().unwrap_or("average") {
            "average" => ObjectiveKind::Average,
            "weighted" => ObjectiveKind::Weighted(weights.ok_or_else(|| {
                SelectError::InvalidConfig("objective=weighted needs weights=".into())
            })?),
            "quadratic" => ObjectiveKind::Quadratic,
            "min" => ObjectiveKind::Min,
            "percentile" => ObjectiveKind::Percentile(pi.ok_or_else(|| {
                SelectError::InvalidConfig("objective=percentile needs pi=".into())
            })?),
            other => {
                return Err(SelectError::InvalidConfig(format!(
                    "unknown objective {other:?}"
                )))
            }
        };
        if !bounds.is_empty() {
            let max_idx = bounds.iter().map(|&(o, _, _)| o).max().unwrap();
            let mut v = vec![(0.0, f64::INFINITY); max_idx + 1];
            for (o, l, u) in bounds {
                v[o] = (l, u);
            }
            cfg.weight_bounds = Some(v);
        }
        match (cost_c, cost_budget) {
            (Some(c), Some(b)) => cfg.costs = Some((c, b)),
            (None, None) => {}
            _ => {
                return Err(SelectError::InvalidConfig(
                    "cost.c and cost.C must be given together".into(),
                ))
            }
        }
        if !clusters.is_empty() {
            clusters.sort_by_key(|&(ci, _)| ci);
            cfg.clusters = Some(clusters.into_iter().map(|(_, c)| c).collect());
        }
        Ok(cfg)
    }

    /// Render back to the text format (inverse of [`SelectionConfig::parse`]
    /// up to key ordering and float formatting).
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("p={}\n", self.p));
        if let Some(pt) = self.p_tilde {
            out.push_str(&format!("p_tilde={pt}\n"));
        }
        out.push_str(&format!("objective={}\n", self.objective.name()));
        match &self.objective {
            ObjectiveKind::Weighted(w) => {
                out.push_str(&format!("weights={}\n", join_list(w)));
            }
            ObjectiveKind::Percentile(pi) => {
                out.push_str(&format!("pi={pi}\n"));
            }
            _ => {}
        }
        if let Some(bounds) = &self.weight_bounds {
            for (o, &(l, u)) in bounds.iter().enumerate() {
                if l != 0.0 || u.is_finite() {
                    let u_str = if u.is_finite() {
                        format!("{u}")
                    } else {
                        "inf".to_string()
                    };
                    out.push_str(&format!("bounds.{}={l},{u_str}\n", o + 1));
                }
            }
        }
        if let Some((c, budget)) = &self.costs {
            out.push_str(&format!("cost.c={}\n", join_list(c)));
            out.push_str(&format!("cost.C={budget}\n"));
        }
        if let Some(clusters) = &self.clusters {
            for (ci, cl) in clusters.iter().enumerate() {
                let members: Vec<String> =
                    cl.members.iter().map(|m| (m + 1).to_string()).collect();
                out.push_str(&format!(
                    "cluster.{}={}:{},{}\n",
                    ci + 1,
                    members.join(","),
                    cl.p_min,
                    cl.p_max
                ));
            }
        }
        if let Some(CorrelationRule::Tau(t)) = &self.correlation_rule {
            out.push_str(&format!("corr.tau={t}\n"));
        }
        out.push_str(&format!("bigm={}\n", self.big_m));
        out.push_str(&format!("time_limit={}\n", self.time_limit));
        out.push_str(&format!("gap={}\n", self.gap_tol));
        out
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>, std::num::ParseFloatError> {
    s.split(',').map(|t| t.trim().parse::<f64>()).collect()
}

fn parse_upper(s: &str) -> Result<f64, std::num::ParseFloatError> {
    if s == "inf" {
        Ok(f64::INFINITY)
    } else {
        s.parse()
    }
}

fn join_list(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::parse_dataset_csv;

    fn four_output_dataset() -> crate::data::Dataset {
        parse_dataset_csv(
            "id,in:x,out:a,out:b,out:c,out:d\n\
             r1,1,1,2,3,4\nr2,1,4,3,2,1\nr3,2,1,1,1,1\n",
        )
        .unwrap()
    }

    #[test]
    fn parses_full_grammar() {
        let text = "\
# demo
p=2
p_tilde=1
objective=percentile
pi=50
bounds.2=0.1,5
cost.c=1,1,1,1
cost.C=3
cluster.1=1,2:0,1
cluster.2=3,4:1,2
corr.tau=0.9
bigm=500
time_limit=60
gap=1e-5
";
        let cfg = SelectionConfig::parse(text).unwrap();
        assert_eq!(cfg.p, 2);
        assert_eq!(cfg.p_tilde, Some(1));
        assert_eq!(cfg.objective, ObjectiveKind::Percentile(50));
        assert_eq!(cfg.weight_bounds.as_ref().unwrap()[1], (0.1, 5.0));
        assert_eq!(cfg.costs.as_ref().unwrap().1, 3.0);
        let clusters = cfg.clusters.as_ref().unwrap();
        assert_eq!(clusters[0].members, vec![0, 1]);
        assert_eq!(clusters[1].p_min, 1);
        assert_eq!(cfg.correlation_rule, Some(CorrelationRule::Tau(0.9)));
        assert_eq!(cfg.big_m, 500.0);
        assert_eq!(cfg.time_limit, 60.0);
        assert_eq!(cfg.gap_tol, 1e-5);
    }

    #[test]
    fn round_trips_through_text() {
        let text = "p=3\nobjective=weighted\nweights=1,2,0.5\nbigm=1000\ntime_limit=300\ngap=0.000001\n";
        let cfg = SelectionConfig::parse(text).unwrap();
        let again = SelectionConfig::parse(&cfg.to_config_string()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn missing_p_is_rejected() {
        assert!(matches!(
            SelectionConfig::parse("objective=min\n"),
            Err(SelectError::InvalidConfig(_))
        ));
    }

    #[test]
    fn unknown_key_is_rejected() {
        assert!(SelectionConfig::parse("p=1\nnope=3\n").is_err());
    }

    #[test]
    fn lower_bound_count_exceeding_p_is_structural() {
        let d = four_output_dataset();
        let mut cfg = SelectionConfig::new(1);
        cfg.weight_bounds = Some(vec![
            (0.1, 1.0),
            (0.1, 1.0),
            (0.0, f64::INFINITY),
            (0.0, f64::INFINITY),
        ]);
        assert!(matches!(
            cfg.validate(&d),
            Err(SelectError::StructurallyInfeasible(_))
        ));
    }

    #[test]
    fn cost_budget_below_cheapest_subset_is_structural() {
        let d = four_output_dataset();
        let mut cfg = SelectionConfig::new(3);
        cfg.costs = Some((vec![1.0, 1.0, 1.0, 1.0], 2.0));
        assert!(matches!(
            cfg.validate(&d),
            Err(SelectError::StructurallyInfeasible(_))
        ));
    }

    #[test]
    fn cluster_arithmetic_is_checked() {
        let d = four_output_dataset();
        let mut cfg = SelectionConfig::new(3);
        cfg.clusters = Some(vec![
            ClusterSpec {
                members: vec![0, 1],
                p_min: 0,
                p_max: 1,
            },
            ClusterSpec {
                members: vec![2, 3],
                p_min: 0,
                p_max: 1,
            },
        ]);
        // p = 3 > sum of p_max = 2
        assert!(matches!(
            cfg.validate(&d),
            Err(SelectError::StructurallyInfeasible(_))
        ));
    }

    #[test]
    fn incomplete_cluster_partition_is_invalid() {
        let d = four_output_dataset();
        let mut cfg = SelectionConfig::new(2);
        cfg.clusters = Some(vec![ClusterSpec {
            members: vec![0, 1],
            p_min: 0,
            p_max: 2,
        }]);
        assert!(matches!(
            cfg.validate(&d),
            Err(SelectError::InvalidConfig(_))
        ));
    }

    #[test]
    fn percentile_floor_zero_is_rejected() {
        let d = four_output_dataset(); // K = 3
        let cfg = SelectionConfig::new(1).with_objective(ObjectiveKind::Percentile(25));
        assert!(matches!(
            cfg.validate(&d),
            Err(SelectError::BadPercentile(_))
        ));
    }

    #[test]
    fn objective_evaluation() {
        let effs = [0.85, 0.95, 0.9, 1.0];
        assert!((ObjectiveKind::Average.evaluate(&effs) - 0.925).abs() < 1e-12);
        assert!((ObjectiveKind::Min.evaluate(&effs) - 0.85).abs() < 1e-12);
        let w = ObjectiveKind::Weighted(vec![1.0, 1.0, 1.0, 1.0]);
        assert!((w.evaluate(&effs) - 0.925).abs() < 1e-12);
        let q = ObjectiveKind::Quadratic.evaluate(&effs);
        let expect = (0.15f64.powi(2) + 0.05f64.powi(2) + 0.1f64.powi(2)) / 4.0;
        assert!((q - expect).abs() < 1e-12);
        // floor(4 * 50 / 100) = 2 -> second largest
        assert!((ObjectiveKind::Percentile(50).evaluate(&effs) - 0.95).abs() < 1e-12);
    }
}
