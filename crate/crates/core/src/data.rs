//! Dataset representation, CSV ingestion, range normalization, correlation
//! analysis, and descriptive statistics of efficiency distributions.
//!
//! The CSV schema is strict: UTF-8, comma-separated, first row is the
//! header, first column is `id`, every other column is `in:<name>` or
//! `out:<name>`, decimal point `.`, no thousands separators.

use std::collections::BTreeSet;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("missing column: {0}")]
    MissingColumn(String),
    #[error("negative value at row {row}, column {col}")]
    NegativeValue { row: usize, col: String },
    #[error("non-numeric cell at row {row}, column {col}: {text:?}")]
    NonNumericCell { row: usize, col: String, text: String },
    #[error("duplicate DMU id {0:?}")]
    DuplicateDmuId(String),
    #[error("row {row} has {got} cells, expected {expected}")]
    RaggedRow { row: usize, got: usize, expected: usize },
    #[error("dataset is empty")]
    Empty,
    #[error("DMU {0:?} has no strictly positive input")]
    AllZeroInputRow(String),
    #[error("correlation needs at least 2 DMUs, got {0}")]
    TooFewRows(usize),
    #[error("cannot summarize an empty vector")]
    EmptyVector,
    #[error("{0}")]
    Invalid(String),
}

/// A dataset of K decision-making units with I inputs and O outputs.
///
/// Immutable after construction; operations return new datasets. All
/// entries are finite and nonnegative, and every DMU has at least one
/// strictly positive input so the weighted-input normalization is
/// satisfiable.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dmu_ids: Vec<String>,
    /// K x I, row-major.
    inputs: Vec<Vec<f64>>,
    /// K x O, row-major.
    outputs: Vec<Vec<f64>>,
    input_names: Vec<String>,
    output_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        dmu_ids: Vec<String>,
        inputs: Vec<Vec<f64>>,
        outputs: Vec<Vec<f64>>,
        input_names: Vec<String>,
        output_names: Vec<String>,
    ) -> Result<Self, DataError> {
        let k = dmu_ids.len();
        if k == 0 || input_names.is_empty() || output_names.is_empty() {
            return Err(DataError::Empty);
        }
        if inputs.len() != k || outputs.len() != k {
            return Err(DataError::Invalid(
                "matrix row counts do not match the id count".into(),
            ));
        }
        let mut seen = BTreeSet::new();
        for id in &dmu_ids {
            if !seen.insert(id.clone()) {
                return Err(DataError::DuplicateDmuId(id.clone()));
            }
        }
        for (r, row) in inputs.iter().enumerate() {
            if row.len() != input_names.len() {
                return Err(DataError::RaggedRow {
                    row: r + 1,
                    got: row.len(),
                    expected: input_names.len(),
                });
            }
            for (c, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(DataError::NegativeValue {
                        row: r + 1,
                        col: format!("in:{}", input_names[c]),
                    });
                }
            }
            if row.iter().all(|&v| v <= 0.0) {
                return Err(DataError::AllZeroInputRow(dmu_ids[r].clone()));
            }
        }
        for (r, row) in outputs.iter().enumerate() {
            if row.len() != output_names.len() {
                return Err(DataError::RaggedRow {
                    row: r + 1,
                    got: row.len(),
                    expected: output_names.len(),
                });
            }
            for (c, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(DataError::NegativeValue {
                        row: r + 1,
                        col: format!("out:{}", output_names[c]),
                    });
                }
            }
        }
        Ok(Dataset {
            dmu_ids,
            inputs,
            outputs,
            input_names,
            output_names,
        })
    }

    pub fn num_dmus(&self) -> usize {
        self.dmu_ids.len()
    }

    pub fn num_inputs(&self) -> usize {
        self.input_names.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.output_names.len()
    }

    pub fn dmu_ids(&self) -> &[String] {
        &self.dmu_ids
    }

    pub fn input_names(&self) -> &[String] {
        &self.input_names
    }

    pub fn output_names(&self) -> &[String] {
        &self.output_names
    }

    pub fn input(&self, dmu: usize, i: usize) -> f64 {
        self.inputs[dmu][i]
    }

    pub fn output(&self, dmu: usize, o: usize) -> f64 {
        self.outputs[dmu][o]
    }

    pub fn input_row(&self, dmu: usize) -> &[f64] {
        &self.inputs[dmu]
    }

    pub fn output_row(&self, dmu: usize) -> &[f64] {
        &self.outputs[dmu]
    }

    /// Column range max - min for each output.
    pub fn output_ranges(&self) -> Vec<f64> {
        (0..self.num_outputs())
            .map(|o| {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for row in &self.outputs {
                    lo = lo.min(row[o]);
                    hi = hi.max(row[o]);
                }
                hi - lo
            })
            .collect()
    }

    pub fn input_ranges(&self) -> Vec<f64> {
        (0..self.num_inputs())
            .map(|i| {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for row in &self.inputs {
                    lo = lo.min(row[i]);
                    hi = hi.max(row[i]);
                }
                hi - lo
            })
            .collect()
    }

    /// Indices of output columns whose range is zero (constant columns).
    /// These are left untouched by [`normalize_outputs`].
    pub fn zero_range_output_columns(&self) -> Vec<usize> {
        self.output_ranges()
            .iter()
            .enumerate()
            .filter(|(_, &r)| r <= 0.0)
            .map(|(o, _)| o)
            .collect()
    }

    /// Scale a single output column by `factor > 0` (testing hook for
    /// units-invariance checks).
    pub fn scale_output_column(&self, o: usize, factor: f64) -> Dataset {
        let mut d = self.clone();
        for row in d.outputs.iter_mut() {
            row[o] *= factor;
        }
        d
    }
}

/// Column roles recognised by [`load_dataset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColumnRole {
    Id,
    Input,
    Output,
}

/// Load a dataset from the strict CSV schema (see module docs).
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_dataset_csv(&text)
}

/// Parse the CSV text form of a dataset.
pub fn parse_dataset_csv(text: &str) -> Result<Dataset, DataError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(DataError::Empty)?;
    let header_cells: Vec<&str> = header.split(',').map(str::trim).collect();
    if header_cells.is_empty() || header_cells[0] != "id" {
        return Err(DataError::MissingColumn("id (first header cell)".into()));
    }
    let mut roles = vec![ColumnRole::Id];
    let mut input_names = Vec::new();
    let mut output_names = Vec::new();
    for cell in &header_cells[1..] {
        if let Some(name) = cell.strip_prefix("in:") {
            roles.push(ColumnRole::Input);
            input_names.push(name.to_string());
        } else if let Some(name) = cell.strip_prefix("out:") {
            roles.push(ColumnRole::Output);
            output_names.push(name.to_string());
        } else {
            return Err(DataError::MissingColumn(format!(
                "column {cell:?} lacks an in:/out: role prefix"
            )));
        }
    }
    if input_names.is_empty() {
        return Err(DataError::MissingColumn("at least one in: column".into()));
    }
    if output_names.is_empty() {
        return Err(DataError::MissingColumn("at least one out: column".into()));
    }
    let mut dmu_ids = Vec::new();
    let mut inputs: Vec<Vec<f64>> = Vec::new();
    let mut outputs: Vec<Vec<f64>> = Vec::new();
    for (line_no, line) in lines {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != roles.len() {
            return Err(DataError::RaggedRow {
                row: line_no + 1,
                got: cells.len(),
                expected: roles.len(),
            });
        }
        let mut in_row = Vec::with_capacity(input_names.len());
        let mut out_row = Vec::with_capacity(output_names.len());
        for (ci, cell) in cells.iter().enumerate() {
            match roles[ci] {
                ColumnRole::Id => dmu_ids.push(cell.to_string()),
                role => {
                    let value: f64 = cell.parse().map_err(|_| DataError::NonNumericCell {
                        row: line_no + 1,
                        col: header_cells[ci].to_string(),
                        text: cell.to_string(),
                    })?;
                    if !value.is_finite() || value < 0.0 {
                        return Err(DataError::NegativeValue {
                            row: line_no + 1,
                            col: header_cells[ci].to_string(),
                        });
                    }
                    if role == ColumnRole::Input {
                        in_row.push(value);
                    } else {
                        out_row.push(value);
                    }
                }
            }
        }
        inputs.push(in_row);
        outputs.push(out_row);
    }
    Dataset::new(dmu_ids, inputs, outputs, input_names, output_names)
}

/// Outcome of a lenient validation pass over a dataset CSV: every invariant
/// violation is collected instead of stopping at the first, and non-fatal
/// oddities (constant columns, all-zero output rows) come back as warnings.
#[derive(Debug)]
pub struct CsvValidation {
    pub violations: Vec<String>,
    pub warnings: Vec<String>,
    /// The parsed dataset when the file is well formed.
    pub dataset: Option<Dataset>,
}

/// Scan a dataset CSV leniently, collecting all violations and warnings.
pub fn validate_dataset_csv(text: &str) -> CsvValidation {
    let mut violations = Vec::new();
    let mut warnings = Vec::new();
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((_, header)) = lines.next() else {
        return CsvValidation {
            violations: vec!["file is empty".into()],
            warnings,
            dataset: None,
        };
    };
    let header_cells: Vec<&str> = header.split(',').map(str::trim).collect();
    if header_cells.is_empty() || header_cells[0] != "id" {
        violations.push("first header cell must be id".into());
    }
    let mut roles = vec![ColumnRole::Id];
    let mut n_inputs = 0usize;
    let mut n_outputs = 0usize;
    for cell in header_cells.iter().skip(1) {
        if cell.strip_prefix("in:").is_some() {
            roles.push(ColumnRole::Input);
            n_inputs += 1;
        } else if cell.strip_prefix("out:").is_some() {
            roles.push(ColumnRole::Output);
            n_outputs += 1;
        } else {
            violations.push(format!("column {cell:?} lacks an in:/out: role prefix"));
            roles.push(ColumnRole::Id);
        }
    }
    if n_inputs == 0 {
        violations.push("no in: columns".into());
    }
    if n_outputs == 0 {
        violations.push("no out: columns".into());
    }
    let mut seen_ids = BTreeSet::new();
    for (line_no, line) in lines {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != roles.len() {
            violations.push(format!(
                "row {} has {} cells, expected {}",
                line_no + 1,
                cells.len(),
                roles.len()
            ));
            continue;
        }
        let mut input_positive = false;
        let mut output_positive = false;
        for (ci, cell) in cells.iter().enumerate() {
            match roles[ci] {
                ColumnRole::Id if ci == 0 => {
                    if !seen_ids.insert(cell.to_string()) {
                        violations.push(format!("duplicate DMU id {cell:?}"));
                    }
                }
                ColumnRole::Id => {}
                role => match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() && v >= 0.0 => {
                        if v > 0.0 {
                            if role == ColumnRole::Input {
                                input_positive = true;
                            } else {
                                output_positive = true;
                            }
                        }
                    }
                    Ok(_) => violations.push(format!(
                        "negative or non-finite value at row {}, column {}",
                        line_no + 1,
                        header_cells[ci]
                    )),
                    Err(_) => violations.push(format!(
                        "non-numeric cell at row {}, column {}: {cell:?}",
                        line_no + 1,
                        header_cells[ci]
                    )),
                },
            }
        }
        if !input_positive {
            violations.push(format!(
                "row {} (DMU {:?}) has no strictly positive input",
                line_no + 1,
                cells[0]
            ));
        }
        if !output_positive {
            warnings.push(format!(
                "row {} (DMU {:?}) has all-zero outputs; its efficiency is 0",
                line_no + 1,
                cells[0]
            ));
        }
    }
    if seen_ids.is_empty() {
        violations.push("no data rows".into());
    }
    let dataset = if violations.is_empty() {
        parse_dataset_csv(text).ok()
    } else {
        None
    };
    if let Some(d) = &dataset {
        for o in d.zero_range_output_columns() {
            warnings.push(format!(
                "output column {} ({}) has zero range, left unnormalized",
                o + 1,
                d.output_names()[o]
            ));
        }
    }
    CsvValidation {
        violations,
        warnings,
        dataset,
    }
}

/// Divide every output column by its range max - min. Columns with zero
/// range are left unchanged (use [`Dataset::zero_range_output_columns`] to
/// report them). Inputs are untouched.
pub fn normalize_outputs(d: &Dataset) -> Dataset {
    let ranges = d.output_ranges();
    let mut out = d.clone();
    for row in out.outputs.iter_mut() {
        for (o, v) in row.iter_mut().enumerate() {
            if ranges[o] > 0.0 {
                *v /= ranges[o];
            }
        }
    }
    out
}

/// Pearson correlation matrix over the output columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub rho: Vec<Vec<f64>>,
}

/// Pearson correlations between output columns over the K DMUs. A pair
/// where either column has zero variance gets rho = 0 by convention, so
/// constant columns never trip threshold rules.
pub fn correlation_matrix(d: &Dataset) -> Result<CorrelationMatrix, DataError> {
    let k = d.num_dmus();
    if k < 2 {
        return Err(DataError::TooFewRows(k));
    }
    let o = d.num_outputs();
    let kf = k as f64;
    let means: Vec<f64> = (0..o)
        .map(|c| (0..k).map(|r| d.output(r, c)).sum::<f64>() / kf)
        .collect();
    let sds: Vec<f64> = (0..o)
        .map(|c| {
            (0..k)
                .map(|r| {
                    let dv = d.output(r, c) - means[c];
                    dv * dv
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let mut rho = vec![vec![0.0; o]; o];
    for a in 0..o {
        for b in a..o {
            if sds[a] <= 0.0 || sds[b] <= 0.0 {
                continue;
            }
            let cov: f64 = (0..k)
                .map(|r| (d.output(r, a) - means[a]) * (d.output(r, b) - means[b]))
                .sum();
            let v = (cov / (sds[a] * sds[b])).clamp(-1.0, 1.0);
            rho[a][b] = v;
            rho[b][a] = v;
        }
    }
    Ok(CorrelationMatrix { rho })
}

/// 0-1 conflict matrix: `R[o][o'] = 1` iff `rho[o][o'] >= tau` and `o != o'`.
pub fn threshold_rule_matrix(rho: &CorrelationMatrix, tau: f64) -> Vec<Vec<u8>> {
    let o = rho.rho.len();
    let mut r = vec![vec![0u8; o]; o];
    for a in 0..o {
        for b in 0..o {
            if a != b && rho.rho[a][b] >= tau {
                r[a][b] = 1;
            }
        }
    }
    r
}

/// Descriptive statistics of an efficiency distribution.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct EfficiencySummary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub std_dev: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub iqr: f64,
}

/// Summary statistics with quartiles by linear interpolation between order
/// statistics and the population standard deviation.
pub fn summarize(effs: &[f64]) -> Result<EfficiencySummary, DataError> {
    if effs.is_empty() {
        return Err(DataError::EmptyVector);
    }
    let n = effs.len() as f64;
    let mut sorted = effs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = effs.iter().sum::<f64>() / n;
    let var = effs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let q1 = interpolated_quantile(&sorted, 0.25);
    let q2 = interpolated_quantile(&sorted, 0.5);
    let q3 = interpolated_quantile(&sorted, 0.75);
    Ok(EfficiencySummary {
        min: sorted[0],
        max: sorted[sorted.len() - 1],
        mean,
        std_dev: var.sqrt(),
        q1,
        q2,
        q3,
        iqr: q3 - q1,
    })
}

fn interpolated_quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n as f64 - 1.0) * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}
