//! Preprocessing stages: imputation, IQR outlier removal, binning, one-hot
//! encoding, correlation, and their composition into [`preprocess`].
//!
//! By default every statistic (means, modes, quartile fences, bin edges,
//! vocabularies) is fitted on the full table before any split. The
//! `preprocess_fit_on_train` variant fits statistics on the training rows
//! only and applies them to both partitions.

use super::processed::{ImputeStat, ProcessedDataset, TransformMetadata};
use super::split::{split_indices, SplitSpec};
use super::{Column, ColumnData, ColumnKind, RawTable};
use crate::error::{Error, Result};
use ndarray::Array2;
use std::collections::BTreeMap;

/// Knobs of the preprocessing pipeline. `None` lists mean "use the default":
/// bin the `income` column when present, one-hot every categorical column.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub target: String,
    pub bin_columns: Option<Vec<String>>,
    pub n_bins: usize,
    pub one_hot_columns: Option<Vec<String>>,
    pub iqr_multiplier: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            target: "fraud_bool".into(),
            bin_columns: None,
            n_bins: 10,
            one_hot_columns: None,
            iqr_multiplier: 1.5,
        }
    }
}

// ---------------------------------------------------------------------------
// Imputation
// ---------------------------------------------------------------------------

/// Fills missing entries: numeric columns with the column mean, categorical
/// columns with the mode (ties broken by the lexicographically smallest
/// value). Returns the filled table and the statistic used per column.
pub fn impute(table: &RawTable) -> Result<(RawTable, BTreeMap<String, ImputeStat>)> {
    impute_masked(table, None)
}

/// As [`impute`], but statistics are computed over the rows where `fit_mask`
/// is true (all rows when `None`).
fn impute_masked(
    table: &RawTable,
    fit_mask: Option<&[bool]>,
) -> Result<(RawTable, BTreeMap<String, ImputeStat>)> {
    let mut stats = BTreeMap::new();
    let mut columns = Vec::with_capacity(table.columns.len());
    let fit = |i: usize| fit_mask.map_or(true, |m| m[i]);

    for col in &table.columns {
        if col.data.missing_count() == 0 {
            columns.push(col.clone());
            continue;
        }
        match &col.data {
            ColumnData::Numeric(values) => {
                let observed: Vec<f64> = values
                    .iter()
                    .enumerate()
                    .filter_map(|(i, v)| if fit(i) { *v } else { None })
                    .collect();
                if observed.is_empty() {
                    return Err(Error::Data(format!(
                        "column '{}' has no observed values to impute from",
                        col.name
                    )));
                }
                let mean = observed.iter().sum::<f64>() / observed.len() as f64;
                stats.insert(col.name.clone(), ImputeStat::Mean(mean));
                let filled = values.iter().map(|v| Some(v.unwrap_or(mean))).collect();
                columns.push(Column {
                    name: col.name.clone(),
                    kind: col.kind,
                    data: ColumnData::Numeric(filled),
                });
            }
            ColumnData::Categorical(values) => {
                let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
                for (i, v) in values.iter().enumerate() {
                    if let (true, Some(s)) = (fit(i), v) {
                        *counts.entry(s.as_str()).or_insert(0) += 1;
                    }
                }
                // BTreeMap iterates keys in lexicographic order, so the first
                // maximal count is the tie-broken mode.
                let mode = counts
                    .iter()
                    .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                    .map(|(k, _)| k.to_string())
                    .ok_or_else(|| {
                        Error::Data(format!(
                            "column '{}' has no observed values to impute from",
                            col.name
                        ))
                    })?;
                stats.insert(col.name.clone(), ImputeStat::Mode(mode.clone()));
                let filled = values
                    .iter()
                    .map(|v| Some(v.clone().unwrap_or_else(|| mode.clone())))
                    .collect();
                columns.push(Column {
                    name: col.name.clone(),
                    kind: col.kind,
                    data: ColumnData::Categorical(filled),
                });
            }
        }
    }
    Ok((RawTable::new(columns)?, stats))
}

// ---------------------------------------------------------------------------
// IQR outlier removal
// ---------------------------------------------------------------------------

/// Quantile by linear interpolation at sorted position `(n - 1) * q`.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

pub struct OutlierReport {
    pub table: RawTable,
    /// True for every retained row, aligned with the input table.
    pub retained: Vec<bool>,
    /// `[lower, upper]` fence per float column that was checked.
    pub fences: BTreeMap<String, (f64, f64)>,
    /// Float columns with fewer than 4 observed values, skipped with a warning.
    pub skipped: Vec<String>,
}

/// Drops every row holding a float value beyond `multiplier * IQR` from the
/// quartiles of its column. Fences are computed from the pre-removal data.
/// Only float-kind columns participate; columns with fewer than 4 observed
/// values are skipped (warned, not an error).
pub fn remove_outliers_iqr(table: &RawTable, multiplier: f64) -> Result<OutlierReport> {
    remove_outliers_masked(table, multiplier, None)
}

fn remove_outliers_masked(
    table: &RawTable,
    multiplier: f64,
    fit_mask: Option<&[bool]>,
) -> Result<OutlierReport> {
    if !(multiplier > 0.0) || !multiplier.is_finite() {
        return Err(Error::Config(
            "IQR multiplier must be a finite positive number".into(),
        ));
    }
    let n = table.row_count();
    let fit = |i: usize| fit_mask.map_or(true, |m| m[i]);

    let mut fences = BTreeMap::new();
    let mut skipped = Vec::new();
    for col in &table.columns {
        if col.kind != ColumnKind::Float {
            continue;
        }
        let values = col.numeric_values().expect("float column stores numbers");
        let mut observed: Vec<f64> = values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| if fit(i) { *v } else { None })
            .collect();
        if observed.len() < 4 {
            log::warn!(
                "outlier removal: column '{}' has only {} observed values, skipping",
                col.name,
                observed.len()
            );
            skipped.push(col.name.clone());
            continue;
        }
        observed.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
        let q1 = quantile(&observed, 0.25);
        let q3 = quantile(&observed, 0.75);
        let iqr = q3 - q1;
        fences.insert(
            col.name.clone(),
            (q1 - multiplier * iqr, q3 + multiplier * iqr),
        );
    }

    let mut retained = vec![true; n];
    for col in &table.columns {
        let Some(&(lo, hi)) = fences.get(&col.name) else {
            continue;
        };
        let values = col.numeric_values().expect("fenced columns are numeric");
        for (i, v) in values.iter().enumerate() {
            if let Some(x) = v {
                if *x < lo || *x > hi {
                    retained[i] = false;
                }
            }
        }
    }

    // Rows reserved for a test partition are never dropped.
    if let Some(mask) = fit_mask {
        for (keep, &is_fit) in retained.iter_mut().zip(mask) {
            if !is_fit {
                *keep = true;
            }
        }
    }

    Ok(OutlierReport {
        table: table.filter_rows(&retained)?,
        retained,
        fences,
        skipped,
    })
}

// ---------------------------------------------------------------------------
// Binning
// ---------------------------------------------------------------------------

/// Equal-width binning over `[min, max]`: label `floor((x - min) / width)`,
/// with `x = max` mapped to the last bin. Labels run `0..n_bins - 1`.
pub fn bin_column(values: &[f64], n_bins: usize) -> Result<Vec<usize>> {
    if n_bins == 0 {
        return Err(Error::Config("n_bins must be at least 1".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("binning requires finite values".into()));
    }
    if values.is_empty() {
        return Ok(Vec::new());
    }
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max <= min {
        return Err(Error::Data(
            "cannot bin a constant column (max equals min)".into(),
        ));
    }
    Ok(apply_bins(values, min, max, n_bins))
}

fn apply_bins(values: &[f64], min: f64, max: f64, n_bins: usize) -> Vec<usize> {
    let width = (max - min) / n_bins as f64;
    values
        .iter()
        .map(|&x| {
            let raw = ((x - min) / width).floor();
            // Clamp handles x == max and, in fit-on-train mode, values
            // outside the fitted range.
            (raw.max(0.0) as usize).min(n_bins - 1)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// One-hot encoding
// ---------------------------------------------------------------------------

/// Replaces each named categorical column with one binary column per
/// vocabulary value, named `<col>=<value>`, vocabulary ordered
/// lexicographically. Returns the encoded table and the vocabularies.
pub fn one_hot(
    table: &RawTable,
    columns: &[String],
) -> Result<(RawTable, BTreeMap<String, Vec<String>>)> {
    let mut vocabularies = BTreeMap::new();
    for name in columns {
        let col = table
            .column(name)
            .ok_or_else(|| Error::Data(format!("one-hot column '{name}' not found")))?;
        let ColumnData::Categorical(values) = &col.data else {
            return Err(Error::Data(format!(
                "one-hot column '{name}' is not categorical"
            )));
        };
        let mut vocab: Vec<String> = values
            .iter()
            .map(|v| {
                v.clone()
                    .ok_or_else(|| Error::Data(format!("column '{name}' has missing values; impute first")))
            })
            .collect::<Result<std::collections::BTreeSet<_>>>()?
            .into_iter()
            .collect();
        vocab.sort();
        vocabularies.insert(name.clone(), vocab);
    }
    let encoded = one_hot_with_vocab(table, &vocabularies)?;
    Ok((encoded, vocabularies))
}

/// One-hot with fixed vocabularies. Values absent from the vocabulary encode
/// as all zeros (relevant only in fit-on-train mode).
fn one_hot_with_vocab(
    table: &RawTable,
    vocabularies: &BTreeMap<String, Vec<String>>,
) -> Result<RawTable> {
    let mut columns = Vec::new();
    for col in &table.columns {
        let Some(vocab) = vocabularies.get(&col.name) else {
            columns.push(col.clone());
            continue;
        };
        let ColumnData::Categorical(values) = &col.data else {
            return Err(Error::Data(format!(
                "one-hot column '{}' is not categorical",
                col.name
            )));
        };
        for value in vocab {
            let indicator: Vec<Option<f64>> = values
                .iter()
                .map(|v| {
                    Some(match v {
                        Some(s) if s == value => 1.0,
                        _ => 0.0,
                    })
                })
                .collect();
            columns.push(Column::numeric(
                format!("{}={}", col.name, value),
                ColumnKind::Integer,
                indicator,
            ));
        }
    }
    RawTable::new(columns)
}

// ---------------------------------------------------------------------------
// Correlation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub values: Array2<f64>,
}

impl CorrelationMatrix {
    /// Comma-separated text with a header row and a leading name column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("column");
        for name in &self.names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (i, name) in self.names.iter().enumerate() {
            out.push_str(name);
            for j in 0..self.names.len() {
                out.push(',');
                out.push_str(&format!("{}", self.values[(i, j)]));
            }
            out.push('\n');
        }
        out
    }
}

/// Pearson correlations over the table's numeric columns. Zero-variance
/// columns are excluded with a warning; fewer than two eligible columns is
/// an error. The result is exactly symmetric with a unit diagonal.
pub fn correlation_matrix(table: &RawTable) -> Result<CorrelationMatrix> {
    let mut names = Vec::new();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for col in &table.columns {
        let Some(values) = col.numeric_values() else {
            continue;
        };
        if values.iter().any(|v| v.is_none()) {
            return Err(Error::Data(format!(
                "column '{}' has missing values; impute before correlating",
                col.name
            )));
        }
        let v: Vec<f64> = values.iter().map(|x| x.unwrap()).collect();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        if v.iter().all(|&x| x == v[0]) || v.iter().map(|&x| (x - mean).powi(2)).sum::<f64>() == 0.0
        {
            log::warn!(
                "correlation: column '{}' has zero variance, excluding",
                col.name
            );
            continue;
        }
        names.push(col.name.clone());
        cols.push(v);
    }
    if names.len() < 2 {
        return Err(Error::Data(
            "correlation needs at least two numeric columns with nonzero variance".into(),
        ));
    }

    let centered: Vec<Vec<f64>> = cols
        .iter()
        .map(|v| {
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|&x| x - mean).collect()
        })
        .collect();
    let norms: Vec<f64> = centered
        .iter()
        .map(|v| v.iter().map(|&x| x * x).sum::<f64>().sqrt())
        .collect();

    let k = names.len();
    let mut values = Array2::zeros((k, k));
    for i in 0..k {
        values[(i, i)] = 1.0;
        for j in 0..i {
            let dot: f64 = centered[i]
                .iter()
                .zip(centered[j].iter())
                .map(|(a, b)| a * b)
                .sum();
            let r = (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0);
            values[(i, j)] = r;
            values[(j, i)] = r;
        }
    }
    Ok(CorrelationMatrix { names, values })
}

// ---------------------------------------------------------------------------
// Full pipeline
// ---------------------------------------------------------------------------

fn resolve_bin_columns(table: &RawTable, cfg: &PipelineConfig) -> Result<Vec<String>> {
    match &cfg.bin_columns {
        Some(named) => {
            for name in named {
                match table.column(name) {
                    None => return Err(Error::Config(format!("bin column '{name}' not found"))),
                    Some(c) if c.kind == ColumnKind::Categorical => {
                        return Err(Error::Config(format!(
                            "bin column '{name}' is categorical"
                        )))
                    }
                    _ => {}
                }
            }
            Ok(named.clone())
        }
        None => Ok(table
            .column("income")
            .map(|c| vec![c.name.clone()])
            .unwrap_or_default()),
    }
}

fn resolve_one_hot_columns(table: &RawTable, cfg: &PipelineConfig) -> Vec<String> {
    match &cfg.one_hot_columns {
        Some(named) => named.clone(),
        None => table
            .columns
            .iter()
            .filter(|c| c.kind == ColumnKind::Categorical)
            .map(|c| c.name.clone())
            .collect(),
    }
}

/// The full preprocessing pipeline: impute, IQR outlier removal, bin, one-hot
/// encode, then assemble the numeric feature matrix and labels. Statistics
/// are fitted on the whole table. Also returns the correlation matrix
/// computed after outlier removal.
pub fn preprocess(raw: &RawTable, cfg: &PipelineConfig) -> Result<(ProcessedDataset, CorrelationMatrix)> {
    let (dataset, correlation, _) = run_pipeline(raw, cfg, None)?;
    Ok((dataset, correlation))
}

/// Pipeline variant that fits every statistic on the training partition only.
/// The split is decided up front on raw row indices; outlier removal drops
/// training rows only. Returns `(train, test, correlation)`.
pub fn preprocess_fit_on_train(
    raw: &RawTable,
    cfg: &PipelineConfig,
    split: &SplitSpec,
) -> Result<(ProcessedDataset, ProcessedDataset, CorrelationMatrix)> {
    split.validate()?;
    let n = raw.row_count();
    if n < 2 {
        return Err(Error::Data("need at least 2 rows to split".into()));
    }
    let (train_idx, _) = split_indices(n, split);
    let mut fit_mask = vec![false; n];
    for &i in &train_idx {
        fit_mask[i] = true;
    }

    let (combined, correlation, survived_fit_mask) = run_pipeline(raw, cfg, Some(&fit_mask))?;
    let train_rows: Vec<usize> = survived_fit_mask
        .iter()
        .enumerate()
        .filter(|(_, &is_train)| is_train)
        .map(|(i, _)| i)
        .collect();
    let test_rows: Vec<usize> = survived_fit_mask
        .iter()
        .enumerate()
        .filter(|(_, &is_train)| !is_train)
        .map(|(i, _)| i)
        .collect();
    Ok((
        combined.subset(&train_rows),
        combined.subset(&test_rows),
        correlation,
    ))
}

/// Shared pipeline body. Returns the processed dataset, the correlation
/// matrix, and a per-surviving-row flag telling whether the row belonged to
/// the fit partition.
fn run_pipeline(
    raw: &RawTable,
    cfg: &PipelineConfig,
    fit_mask: Option<&[bool]>,
) -> Result<(ProcessedDataset, CorrelationMatrix, Vec<bool>)> {
    let target_col = raw
        .column(&cfg.target)
        .ok_or_else(|| Error::Data(format!("target column '{}' not found", cfg.target)))?;
    if target_col.kind == ColumnKind::Categorical {
        return Err(Error::Data(format!(
            "target column '{}' must be numeric",
            cfg.target
        )));
    }

    let (imputed, impute_stats) = impute_masked(raw, fit_mask)?;
    let outliers = remove_outliers_masked(&imputed, cfg.iqr_multiplier, fit_mask)?;
    let table = outliers.table;
    let row_is_fit: Vec<bool> = match fit_mask {
        Some(mask) => outliers
            .retained
            .iter()
            .zip(mask)
            .filter(|(&kept, _)| kept)
            .map(|(_, &f)| f)
            .collect(),
        None => vec![true; table.row_count()],
    };
    if table.row_count() == 0 {
        return Err(Error::Data("no rows survived outlier removal".into()));
    }

    let correlation = correlation_matrix(&table)?;

    // Binning: each configured column is replaced by integer labels named
    // binned_<column>.
    let bin_cols = resolve_bin_columns(&table, cfg)?;
    let mut bins_meta = BTreeMap::new();
    let mut table = table;
    for name in &bin_cols {
        let col = table
            .column(name)
            .ok_or_else(|| Error::Config(format!("bin column '{name}' not found")))?;
        let values: Vec<f64> = col
            .numeric_values()
            .ok_or_else(|| Error::Config(format!("bin column '{name}' is categorical")))?
            .iter()
            .map(|v| v.ok_or_else(|| Error::Data(format!("column '{name}' has missing values"))))
            .collect::<Result<_>>()?;
        let fit_values: Vec<f64> = values
            .iter()
            .zip(row_is_fit.iter())
            .filter(|(_, &f)| f)
            .map(|(&v, _)| v)
            .collect();
        if fit_values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data(format!("column '{name}' has non-finite values")));
        }
        let min = fit_values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = fit_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(max > min) {
            return Err(Error::Data(format!(
                "cannot bin constant column '{name}' (max equals min)"
            )));
        }
        let labels = apply_bins(&values, min, max, cfg.n_bins);
        bins_meta.insert(name.clone(), (min, max, cfg.n_bins));
        let binned: Vec<Option<f64>> = labels.iter().map(|&l| Some(l as f64)).collect();
        let position = table
            .columns
            .iter()
            .position(|c| &c.name == name)
            .expect("column exists");
        table.columns[position] = Column::numeric(
            format!("binned_{name}"),
            ColumnKind::Integer,
            binned,
        );
    }

    // One-hot encoding with vocabularies from the fit partition.
    let one_hot_cols = resolve_one_hot_columns(&table, cfg);
    let mut vocabularies = BTreeMap::new();
    for name in &one_hot_cols {
        let col = table
            .column(name)
            .ok_or_else(|| Error::Data(format!("one-hot column '{name}' not found")))?;
        let ColumnData::Categorical(values) = &col.data else {
            return Err(Error::Data(format!(
                "one-hot column '{name}' is not categorical"
            )));
        };
        let mut vocab: std::collections::BTreeSet<String> = std::collections::BTreeSet::new();
        for (v, &f) in values.iter().zip(row_is_fit.iter()) {
            if !f {
                continue;
            }
            match v {
                Some(s) => {
                    vocab.insert(s.clone());
                }
                None => {
                    return Err(Error::Data(format!(
                        "column '{name}' has missing values; impute first"
                    )))
                }
            }
        }
        vocabularies.insert(name.clone(), vocab.into_iter().collect());
    }
    let table = one_hot_with_vocab(&table, &vocabularies)?;

    // Assemble: every non-target column must be numeric by now.
    let mut feature_names = Vec::new();
    let mut feature_cols: Vec<&Vec<Option<f64>>> = Vec::new();
    let mut labels = Vec::new();
    for col in &table.columns {
        if col.name == cfg.target {
            let values = col.numeric_values().expect("target checked numeric");
            for (i, v) in values.iter().enumerate() {
                match v {
                    Some(x) if *x == 0.0 || *x == 1.0 => labels.push(*x as u8),
                    Some(x) => {
                        return Err(Error::Data(format!(
                            "target must be 0 or 1, found {x} at row {i}"
                        )))
                    }
                    None => {
                        return Err(Error::Data(format!("target missing at row {i}")));
                    }
                }
            }
            continue;
        }
        match &col.data {
            ColumnData::Numeric(values) => {
                feature_names.push(col.name.clone());
                feature_cols.push(values);
            }
            ColumnData::Categorical(_) => {
                return Err(Error::Data(format!(
                    "column '{}' is still categorical after encoding; add it to one_hot_columns",
                    col.name
                )))
            }
        }
    }

    let n_rows = table.row_count();
    let n_cols = feature_cols.len();
    let mut features = Array2::zeros((n_rows, n_cols));
    for (j, col) in feature_cols.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            features[(i, j)] =
                v.ok_or_else(|| Error::Data(format!("missing value survived imputation")))?;
        }
    }

    let metadata = TransformMetadata {
        imputed: impute_stats,
        outlier_fences: outliers.fences,
        outlier_skipped: outliers.skipped,
        retained_rows: outliers.retained,
        bins: bins_meta,
        vocabularies,
    };
    let mut dataset = ProcessedDataset::from_parts(features, labels, feature_names)?;
    dataset.metadata = metadata;
    Ok((dataset, correlation, row_is_fit))
}
