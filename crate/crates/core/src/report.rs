//! Run reports and CSV artifact emission for the command-line surface.
//!
//! Reports serialize to JSON with a fixed field order, so identical inputs
//! and flags produce byte-identical files (the timestamp can be left out
//! for that purpose). CSV artifacts use the default shortest-round-trip
//! float formatting, which re-parses exactly.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::data::{Dataset, EfficiencySummary};
use crate::game::{CrossEfficiencyMatrix, SupportProfile};
use crate::milp::{SolveStatus, SolveOutcome};
use crate::select::SelectionSolution;

#[derive(Debug, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

impl Default for ToolInfo {
    fn default() -> Self {
        ToolInfo {
            name: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct DatasetDigest {
    pub dmus: usize,
    pub inputs: usize,
    pub outputs: usize,
    pub input_names: Vec<String>,
    pub output_names: Vec<String>,
    /// Column ranges (max - min) of the data as loaded.
    pub input_ranges: Vec<f64>,
    pub output_ranges: Vec<f64>,
    /// Whether outputs were range-normalized before solving.
    pub normalized: bool,
}

impl DatasetDigest {
    pub fn new(raw: &Dataset, normalized: bool) -> Self {
        DatasetDigest {
            dmus: raw.num_dmus(),
            inputs: raw.num_inputs(),
            outputs: raw.num_outputs(),
            input_names: raw.input_names().to_vec(),
            output_names: raw.output_names().to_vec(),
            input_ranges: raw.input_ranges(),
            output_ranges: raw.output_ranges(),
            normalized,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SolverTelemetry {
    pub status: SolveStatus,
    pub gap: f64,
    pub nodes: u64,
    /// Omitted together with the timestamp: wall time is not reproducible.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_seconds: Option<f64>,
    pub warnings: Vec<String>,
}

impl From<&SolveOutcome> for SolverTelemetry {
    fn from(o: &SolveOutcome) -> Self {
        SolverTelemetry {
            status: o.status,
            gap: o.gap,
            nodes: o.nodes,
            wall_time_seconds: Some(o.wall_time),
            warnings: o.warnings.clone(),
        }
    }
}

/// One DMU's efficiency, keyed by id.
#[derive(Debug, Serialize)]
pub struct EfficiencyEntry {
    pub dmu: String,
    pub efficiency: f64,
}

#[derive(Debug, Serialize)]
pub struct EffReport {
    /// 1-based output indices used in the evaluation.
    pub active_outputs: Vec<usize>,
    pub efficiencies: Vec<EfficiencyEntry>,
    pub summary: EfficiencySummary,
}

#[derive(Debug, Serialize)]
pub struct SelectionReport {
    pub mode: String,
    pub dmu: Option<String>,
    pub p: usize,
    pub p_tilde: Option<usize>,
    pub objective: String,
    /// 1-based indices of the realized selection.
    pub selected_outputs: Vec<usize>,
    pub selected_output_names: Vec<String>,
    pub selected_inputs: Option<Vec<usize>>,
    pub objective_value: f64,
    pub efficiencies: Vec<EfficiencyEntry>,
    pub summary: EfficiencySummary,
    pub greedy: Option<GreedyReport>,
    pub oracle_check: Option<OracleCheck>,
    pub solver: SolverTelemetry,
}

#[derive(Debug, Serialize)]
pub struct GreedyReport {
    /// 1-based output indices in selection order.
    pub order: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct OracleCheck {
    pub ran: bool,
    pub skipped_reason: Option<String>,
    pub oracle_objective: Option<f64>,
    pub difference: Option<f64>,
    pub agrees: Option<bool>,
}

#[derive(Debug, Serialize)]
pub struct SweepRowReport {
    pub p: usize,
    pub ok: bool,
    pub error: Option<String>,
    pub selected_outputs: Option<Vec<usize>>,
    pub objective_value: Option<f64>,
    pub summary: Option<EfficiencySummary>,
    /// Objective gain from p to p + 1 when both solved.
    pub marginal_to_next: Option<f64>,
    pub solver: Option<SolverTelemetry>,
}

#[derive(Debug, Serialize)]
pub struct GameReport {
    pub p: usize,
    /// 1-based indices.
    pub joint_selection: Vec<usize>,
    pub joint_objective: f64,
    pub individual_selections: Vec<Vec<usize>>,
    pub support_percent: Vec<f64>,
    pub support_bins: Vec<usize>,
}

#[derive(Debug, Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<String>,
    pub warnings: Vec<String>,
    /// 1-based indices of constant output columns.
    pub zero_range_outputs: Vec<usize>,
}

/// Top-level run report; exactly one payload field is populated per command.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub tool: ToolInfo,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp_unix: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub dataset: DatasetDigest,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_echo: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub efficiency: Option<EffReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selection: Option<SelectionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<SweepRowReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub game: Option<GameReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationReport>,
}

impl RunReport {
    pub fn new(command: String, dataset: DatasetDigest, with_timestamp: bool) -> Self {
        RunReport {
            tool: ToolInfo::default(),
            command,
            timestamp_unix: if with_timestamp {
                Some(
                    std::time::SystemTime::now()
                        .duration_since(std::time::UNIX_EPOCH)
                        .map(|d| d.as_secs())
                        .unwrap_or(0),
                )
            } else {
                None
            },
            seed: None,
            dataset,
            config_echo: None,
            efficiency: None,
            selection: None,
            sweep: None,
            game: None,
            validation: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Drop wall-clock timings, leaving only reproducible numbers. Applied
    /// alongside the timestamp exclusion.
    pub fn redact_timing(&mut self) {
        if let Some(sel) = &mut self.selection {
            sel.solver.wall_time_seconds = None;
        }
        if let Some(rows) = &mut self.sweep {
            for row in rows {
                if let Some(s) = &mut row.solver {
                    s.wall_time_seconds = None;
                }
            }
        }
    }
}

pub fn efficiency_entries(d: &Dataset, effs: &[f64]) -> Vec<EfficiencyEntry> {
    d.dmu_ids()
        .iter()
        .zip(effs.iter())
        .map(|(id, &e)| EfficiencyEntry {
            dmu: id.clone(),
            efficiency: e,
        })
        .collect()
}

/// 0-based indices to the 1-based presentation used in files and reports.
pub fn one_based(indices: &[usize]) -> Vec<usize> {
    indices.iter().map(|&i| i + 1).collect()
}

pub fn selection_report(
    d: &Dataset,
    mode: &str,
    dmu: Option<&str>,
    cfg: &crate::select::SelectionConfig,
    sol: &SelectionSolution,
) -> SelectionReport {
    SelectionReport {
        mode: mode.to_string(),
        dmu: dmu.map(str::to_string),
        p: cfg.p,
        p_tilde: cfg.p_tilde,
        objective: cfg.objective.name().to_string(),
        selected_outputs: one_based(&sol.selected_outputs),
        selected_output_names: sol
            .selected_outputs
            .iter()
            .map(|&o| d.output_names()[o].clone())
            .collect(),
        selected_inputs: sol.selected_inputs.as_deref().map(one_based),
        objective_value: sol.objective_value,
        efficiencies: efficiency_entries(d, &sol.efficiencies),
        summary: crate::data::summarize(&sol.efficiencies).expect("K >= 1"),
        greedy: None,
        oracle_check: None,
        solver: SolverTelemetry::from(&sol.outcome),
    }
}

/// Efficiency histogram with 20 bins of width 0.05 over [0, 1]; the final
/// bin is closed so a score of exactly 1 is counted.
pub fn efficiency_histogram(effs: &[f64]) -> Vec<usize> {
    let mut bins = vec![0usize; 20];
    for &e in effs {
        let idx = ((e / 0.05).floor() as usize).min(19);
        bins[idx] += 1;
    }
    bins
}

pub struct CsvArtifacts {
    pub out_dir: PathBuf,
    pub written: Vec<PathBuf>,
}

impl CsvArtifacts {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        CsvArtifacts {
            out_dir: out_dir.into(),
            written: Vec::new(),
        }
    }

    fn write(&mut self, name: &str, content: &str) -> std::io::Result<PathBuf> {
        std::fs::create_dir_all(&self.out_dir)?;
        let path = self.out_dir.join(name);
        let mut f = std::fs::File::create(&path)?;
        f.write_all(content.as_bytes())?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn write_report(&mut self, report: &RunReport) -> std::io::Result<PathBuf> {
        let mut json = report.to_json();
        json.push('\n');
        self.write("report.json", &json)
    }

    /// K x K difference matrix; columns are the strategy owners.
    pub fn write_delta(
        &mut self,
        d: &Dataset,
        m: &CrossEfficiencyMatrix,
    ) -> std::io::Result<PathBuf> {
        let mut s = String::from("dmu");
        for id in d.dmu_ids() {
            s.push(',');
            s.push_str(id);
        }
        s.push('\n');
        for (k, id) in d.dmu_ids().iter().enumerate() {
            s.push_str(id);
            for kp in 0..d.num_dmus() {
                s.push_str(&format!(",{}", m.delta[k][kp]));
            }
            s.push('\n');
        }
        self.write("delta.csv", &s)
    }

    pub fn write_support(
        &mut self,
        d: &Dataset,
        profile: &SupportProfile,
    ) -> std::io::Result<PathBuf> {
        let mut s = String::from("dmu,support_percent\n");
        for (id, pi) in d.dmu_ids().iter().zip(profile.pi.iter()) {
            s.push_str(&format!("{id},{pi}\n"));
        }
        self.write("support.csv", &s)
    }

    pub fn write_support_histogram(&mut self, profile: &SupportProfile) -> std::io::Result<PathBuf> {
        let mut s = String::from("bin_start,count\n");
        for (i, count) in profile.bins.iter().enumerate() {
            s.push_str(&format!("{},{count}\n", i * 5));
        }
        self.write("support_hist.csv", &s)
    }

    pub fn write_sweep_curve(&mut self, rows: &[SweepRowReport]) -> std::io::Result<PathBuf> {
        let mut s = String::from("p,objective,marginal_to_next\n");
        for r in rows {
            let obj = r
                .objective_value
                .map(|v| v.to_string())
                .unwrap_or_default();
            let marg = r.marginal_to_next.map(|v| v.to_string()).unwrap_or_default();
            s.push_str(&format!("{},{obj},{marg}\n", r.p));
        }
        self.write("sweep_curve.csv", &s)
    }

    pub fn write_efficiency_histogram(
        &mut self,
        p: usize,
        effs: &[f64],
    ) -> std::io::Result<PathBuf> {
        let bins = efficiency_histogram(effs);
        let mut s = String::from("bin_start,count\n");
        for (i, count) in bins.iter().enumerate() {
            s.push_str(&format!("{},{count}\n", (i as f64) * 0.05));
        }
        self.write(&format!("eff_hist_p{p}.csv"), &s)
    }

    pub fn write_correlation(
        &mut self,
        d: &Dataset,
        rho: &crate::data::CorrelationMatrix,
    ) -> std::io::Result<PathBuf> {
        let mut s = String::from("output");
        for name in d.output_names() {
            s.push(',');
            s.push_str(name);
        }
        s.push('\n');
        for (a, name) in d.output_names().iter().enumerate() {
            s.push_str(name);
            for b in 0..d.num_outputs() {
                s.push_str(&format!(",{}", rho.rho[a][b]));
            }
            s.push('\n');
        }
        self.write("correlation.csv", &s)
    }
}

/// Round-trip helper used by tests: parse a CSV cell grid back.
pub fn parse_csv_grid(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

pub fn report_path(out_dir: &Path) -> PathBuf {
    out_dir.join("report.json")
}
