//! Command-line surface: load a dataset, run efficiency scoring, output
//! selection, budget sweeps, the strategic cross-efficiency analysis, or
//! dataset validation, and emit a JSON report plus CSV artifacts.
//!
//! Exit codes: 0 success, 2 data/configuration error, 3 solver failure,
//! 4 structurally infeasible selection constraints.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use dea_select::data::{
    self, correlation_matrix, load_dataset, normalize_outputs, summarize, Dataset,
};
use dea_select::game::{cross_efficiency, support_profile};
use dea_select::greedy::greedy_nested;
use dea_select::oracle::{enumerate_best, DEFAULT_ENUM_CAP};
use dea_select::report::{
    efficiency_entries, one_based, selection_report, CsvArtifacts, DatasetDigest, EffReport,
    GameReport, GreedyReport, OracleCheck, RunReport, SolverTelemetry, SweepRowReport,
    ValidationReport,
};
use dea_select::select::{
    solve_selection, sweep_marginals, sweep_p, Mode, ObjectiveKind, SelectError, SelectionConfig,
};

#[derive(Parser)]
#[command(
    name = "dea-select",
    version,
    about = "Output/input selection for DEA efficiency benchmarking"
)]
struct Cli {
    /// Dataset CSV (header: id, in:<name>..., out:<name>...).
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Selection configuration file (key=value lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for report.json and CSV artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Echoed into the report for scripting bookkeeping.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Cross-check the selection against exhaustive enumeration.
    #[arg(long, global = true)]
    oracle: bool,
    /// Skip the default range normalization of outputs.
    #[arg(long = "no-normalize", global = true)]
    no_normalize: bool,
    /// Omit the timestamp so reports are byte-identical across runs.
    #[arg(long = "no-timestamp", global = true)]
    no_timestamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Efficiency scores for all DMUs, optionally on a subset of outputs.
    Eff {
        /// Comma-separated 1-based output indices to activate.
        #[arg(long, value_delimiter = ',')]
        outputs: Option<Vec<usize>>,
    },
    /// Solve one selection problem (joint or per-DMU).
    Select {
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// 1-based DMU index, required for individual mode.
        #[arg(long)]
        dmu: Option<usize>,
    },
    /// Solve the joint selection for a range of budgets.
    Sweep {
        #[arg(long = "p-min")]
        p_min: usize,
        #[arg(long = "p-max")]
        p_max: usize,
    },
    /// Cross-efficiency conflict analysis between individual and joint selections.
    Game,
    /// Check dataset invariants and emit correlation heat data.
    Validate,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Individual,
    Joint,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<data::DataError> for Failure {
    fn from(e: data::DataError) -> Self {
        Failure::new(2, e.to_string())
    }
}

impl From<SelectError> for Failure {
    fn from(e: SelectError) -> Self {
        Failure::new(select_exit_code(&e), e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(2, format!("i/o error: {e}"))
    }
}

fn select_exit_code(e: &SelectError) -> u8 {
    match e {
        SelectError::StructurallyInfeasible(_) | SelectError::NormalizationInfeasible { .. } => 4,
        SelectError::BadWeights(_)
        | SelectError::BadPercentile(_)
        | SelectError::InvalidConfig(_)
        | SelectError::Data(_) => 2,
        SelectError::Dea(_)
        | SelectError::Solver(_)
        | SelectError::CapExceeded { .. }
        | SelectError::TimeLimitWithoutSolution
        | SelectError::ConsistencyFailure(_) => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let data_path = cli
        .data
        .as_ref()
        .ok_or_else(|| Failure::new(2, "--data <csv> is required"))?;
    if matches!(cli.command, Command::Validate) {
        return cmd_validate(cli, data_path);
    }
    let raw = load_dataset(data_path)?;
    let used = if cli.no_normalize {
        raw.clone()
    } else {
        normalize_outputs(&raw)
    };
    for o in raw.zero_range_output_columns() {
        eprintln!(
            "warning: output column {} ({}) has zero range, left unnormalized",
            o + 1,
            raw.output_names()[o]
        );
    }
    match &cli.command {
        Command::Eff { outputs } => cmd_eff(cli, &raw, &used, outputs.as_deref()),
        Command::Select { mode, dmu } => cmd_select(cli, &raw, &used, *mode, *dmu),
        Command::Sweep { p_min, p_max } => cmd_sweep(cli, &raw, &used, *p_min, *p_max),
        Command::Game => cmd_game(cli, &raw, &used),
        Command::Validate => unreachable!("handled above"),
    }
}

fn command_echo() -> String {
    std::env::args().collect::<Vec<_>>().join(" ")
}

fn base_report(cli: &Cli, raw: &Dataset) -> RunReport {
    let mut r = RunReport::new(
        command_echo(),
        DatasetDigest::new(raw, !cli.no_normalize),
        !cli.no_timestamp,
    );
    r.seed = cli.seed;
    r
}

fn load_config(cli: &Cli, d: &Dataset) -> Result<(SelectionConfig, String), Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::new(2, "--config <file> is required for this command"))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::new(2, format!("cannot read config {}: {e}", path.display())))?;
    let cfg = SelectionConfig::parse(&text).map_err(Failure::from)?;
    cfg.validate(d).map_err(Failure::from)?;
    Ok((cfg, text))
}

fn finish(cli: &Cli, report: &mut RunReport) -> Result<(), Failure> {
    if cli.no_timestamp {
        report.redact_timing();
    }
    let mut artifacts = CsvArtifacts::new(&cli.out);
    artifacts.write_report(report)?;
    println!("{}", report.to_json());
    Ok(())
}

fn parse_output_list(d: &Dataset, outputs: &[usize]) -> Result<Vec<usize>, Failure> {
    let mut zero_based = Vec::with_capacity(outputs.len());
    for &o in outputs {
        if o == 0 || o > d.num_outputs() {
            return Err(Failure::new(
                2,
                format!("output index {o} outside 1..={}", d.num_outputs()),
            ));
        }
        zero_based.push(o - 1);
    }
    zero_based.sort_unstable();
    zero_based.dedup();
    Ok(zero_based)
}

fn cmd_eff(
    cli: &Cli,
    raw: &Dataset,
    used: &Dataset,
    outputs: Option<&[usize]>,
) -> Result<(), Failure> {
    let active = match outputs {
        Some(list) => {
            dea_select::dea::ActiveSet::with_outputs(used, parse_output_list(used, list)?)
        }
        None => dea_select::dea::ActiveSet::full(used),
    };
    let effs = dea_select::dea::all_efficiencies(used, &active)
        .map_err(|e| Failure::new(3, e.to_string()))?;
    let mut report = base_report(cli, raw);
    report.efficiency = Some(EffReport {
        active_outputs: one_based(&active.outputs),
        efficiencies: efficiency_entries(used, &effs),
        summary: summarize(&effs).map_err(Failure::from)?,
    });
    finish(cli, &mut report)
}

fn cmd_select(
    cli: &Cli,
    raw: &Dataset,
    used: &Dataset,
    mode_arg: ModeArg,
    dmu: Option<usize>,
) -> Result<(), Failure> {
    let (cfg, cfg_text) = load_config(cli, used)?;
    let (mode, mode_name, dmu_id) = match mode_arg {
        ModeArg::Joint => (Mode::Joint, "joint", None),
        ModeArg::Individual => {
            let k = dmu.ok_or_else(|| {
                Failure::new(2, "--dmu <1-based index> is required for individual mode")
            })?;
            if k == 0 || k > used.num_dmus() {
                return Err(Failure::new(
                    2,
                    format!("--dmu {k} outside 1..={}", used.num_dmus()),
                ));
            }
            (
                Mode::Individual(k - 1),
                "individual",
                Some(used.dmu_ids()[k - 1].clone()),
            )
        }
    };
    let sol = solve_selection(used, &cfg, mode).map_err(Failure::from)?;
    let mut rep = selection_report(used, mode_name, dmu_id.as_deref(), &cfg, &sol);
    if mode == Mode::Joint
        && matches!(
            cfg.objective,
            ObjectiveKind::Average | ObjectiveKind::Weighted(_)
        )
    {
        if let Ok(trace) = greedy_nested(used, cfg.p, &cfg.objective) {
            rep.greedy = Some(GreedyReport {
                order: one_based(&trace.order),
                values: trace.values,
            });
        }
    }
    let mut failure: Option<Failure> = None;
    if cli.oracle {
        rep.oracle_check = Some(match enumerate_best(used, &cfg, mode, DEFAULT_ENUM_CAP) {
            Ok(oracle_sol) => {
                let diff = (oracle_sol.objective_value - sol.objective_value).abs();
                let agrees = diff <= 1e-6;
                if !agrees {
                    failure = Some(Failure::new(
                        3,
                        format!(
                            "oracle mismatch: solver {} vs enumeration {} (diff {diff:.3e})",
                            sol.objective_value, oracle_sol.objective_value
                        ),
                    ));
                }
                OracleCheck {
                    ran: true,
                    skipped_reason: None,
                    oracle_objective: Some(oracle_sol.objective_value),
                    difference: Some(diff),
                    agrees: Some(agrees),
                }
            }
            Err(SelectError::CapExceeded { needed, cap }) => OracleCheck {
                ran: false,
                skipped_reason: Some(format!("{needed} subsets exceed the cap {cap}")),
                oracle_objective: None,
                difference: None,
                agrees: None,
            },
            Err(e) => return Err(Failure::from(e)),
        });
    }
    let mut report = base_report(cli, raw);
    report.config_echo = Some(cfg_text);
    report.selection = Some(rep);
    finish(cli, &mut report)?;
    match failure {
        Some(f) => Err(f),
        None => Ok(()),
    }
}

fn cmd_sweep(
    cli: &Cli,
    raw: &Dataset,
    used: &Dataset,
    p_min: usize,
    p_max: usize,
) -> Result<(), Failure> {
    if p_min == 0 || p_max > used.num_outputs() || p_min > p_max {
        return Err(Failure::new(
            2,
            format!(
                "invalid budget range {p_min}..={p_max} for {} outputs",
                used.num_outputs()
            ),
        ));
    }
    let (cfg, cfg_text) = load_config_for_sweep(cli, p_min)?;
    let entries = sweep_p(used, &cfg, p_min..=p_max);
    let marginals = sweep_marginals(&entries);
    let mut artifacts = CsvArtifacts::new(&cli.out);
    let mut rows = Vec::with_capacity(entries.len());
    let mut first_failure: Option<Failure> = None;
    for (entry, marginal) in entries.iter().zip(marginals.iter()) {
        match &entry.result {
            Ok(sol) => {
                artifacts.write_efficiency_histogram(entry.p, &sol.efficiencies)?;
                rows.push(SweepRowReport {
                    p: entry.p,
                    ok: true,
                    error: None,
                    selected_outputs: Some(one_based(&sol.selected_outputs)),
                    objective_value: Some(sol.objective_value),
                    summary: entry.summary(),
                    marginal_to_next: *marginal,
                    solver: Some(SolverTelemetry::from(&sol.outcome)),
                });
            }
            Err(e) => {
                if first_failure.is_none() {
                    first_failure = Some(Failure::new(select_exit_code(e), e.to_string()));
                }
                rows.push(SweepRowReport {
                    p: entry.p,
                    ok: false,
                    error: Some(e.to_string()),
                    selected_outputs: None,
                    objective_value: None,
                    summary: None,
                    marginal_to_next: None,
                    solver: None,
                });
            }
        }
    }
    artifacts.write_sweep_curve(&rows)?;
    let mut report = base_report(cli, raw);
    report.config_echo = Some(cfg_text);
    report.sweep = Some(rows);
    finish(cli, &mut report)?;
    match first_failure {
        Some(f) => Err(f),
        None => Ok(()),
    }
}

/// A sweep drives p itself, so the config's p is overridden by the range
/// start before validation; each sweep entry re-validates its own p.
fn load_config_for_sweep(
    cli: &Cli,
    p_min: usize,
) -> Result<(SelectionConfig, String), Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::new(2, "--config <file> is required for this command"))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::new(2, format!("cannot read config {}: {e}", path.display())))?;
    let mut cfg = SelectionConfig::parse(&text).map_err(Failure::from)?;
    cfg.p = p_min;
    Ok((cfg, text))
}

fn cmd_game(cli: &Cli, raw: &Dataset, used: &Dataset) -> Result<(), Failure> {
    let (cfg, cfg_text) = load_config(cli, used)?;
    let matrix = cross_efficiency(used, &cfg).map_err(Failure::from)?;
    let profile = support_profile(&matrix);
    let mut artifacts = CsvArtifacts::new(&cli.out);
    artifacts.write_delta(used, &matrix)?;
    artifacts.write_support(used, &profile)?;
    artifacts.write_support_histogram(&profile)?;
    let joint_objective = cfg.objective.evaluate(&matrix.joint_efficiencies);
    let mut report = base_report(cli, raw);
    report.config_echo = Some(cfg_text);
    report.game = Some(GameReport {
        p: cfg.p,
        joint_selection: one_based(&matrix.joint_selection),
        joint_objective,
        individual_selections: matrix
            .individual_selections
            .iter()
            .map(|s| one_based(s))
            .collect(),
        support_percent: profile.pi.clone(),
        support_bins: profile.bins.clone(),
    });
    finish(cli, &mut report)
}

fn cmd_validate(cli: &Cli, data_path: &PathBuf) -> Result<(), Failure> {
    let text = std::fs::read_to_string(data_path)
        .map_err(|e| Failure::new(2, format!("cannot read {}: {e}", data_path.display())))?;
    let validation = data::validate_dataset_csv(&text);
    let ok = validation.violations.is_empty();
    let digest = match &validation.dataset {
        Some(d) => DatasetDigest::new(d, false),
        None => DatasetDigest {
            dmus: 0,
            inputs: 0,
            outputs: 0,
            input_names: Vec::new(),
            output_names: Vec::new(),
            input_ranges: Vec::new(),
            output_ranges: Vec::new(),
            normalized: false,
        },
    };
    let zero_range = validation
        .dataset
        .as_ref()
        .map(|d| one_based(&d.zero_range_output_columns()))
        .unwrap_or_default();
    let mut report = RunReport::new(command_echo(), digest, !cli.no_timestamp);
    report.seed = cli.seed;
    report.validation = Some(ValidationReport {
        ok,
        violations: validation.violations.clone(),
        warnings: validation.warnings.clone(),
        zero_range_outputs: zero_range,
    });
    let mut artifacts = CsvArtifacts::new(&cli.out);
    if let Some(d) = &validation.dataset {
        if d.num_dmus() >= 2 {
            let rho = correlation_matrix(d).map_err(Failure::from)?;
            artifacts.write_correlation(d, &rho)?;
        }
    }
    artifacts.write_report(&report)?;
    println!("{}", report.to_json());
    for w in &validation.warnings {
        eprintln!("warning: {w}");
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::new(
            2,
            format!(
                "{} invariant violation(s):\n  {}",
                validation.violations.len(),
                validation.violations.join("\n  ")
            ),
        ))
    }
}
