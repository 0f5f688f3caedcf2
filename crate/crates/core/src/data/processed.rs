//! The pipeline's output: an all-numeric feature matrix with labels and the
//! fitted transform statistics, plus its on-disk JSON form.

use crate::error::{Error, Result};
use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// Statistic used to fill a column's missing entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImputeStat {
    Mean(f64),
    Mode(String),
}

/// Everything fitted while preprocessing, recorded for reproducibility.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TransformMetadata {
    /// Imputation statistic per column that had missing values.
    pub imputed: BTreeMap<String, ImputeStat>,
    /// `[lower, upper]` IQR fences per float column.
    pub outlier_fences: BTreeMap<String, (f64, f64)>,
    /// Float columns skipped by outlier removal (too few values).
    pub outlier_skipped: Vec<String>,
    /// Row retention mask from outlier removal, aligned with the imputed table.
    pub retained_rows: Vec<bool>,
    /// Equal-width bin specs per binned column: (min, max, n_bins).
    pub bins: BTreeMap<String, (f64, f64, usize)>,
    /// One-hot vocabulary per encoded column, lexicographically ordered.
    pub vocabularies: BTreeMap<String, Vec<String>>,
}

/// Numeric features plus binary labels after preprocessing.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessedDataset {
    pub features: Array2<f64>,
    pub labels: Vec<u8>,
    pub feature_names: Vec<String>,
    pub metadata: TransformMetadata,
}

impl ProcessedDataset {
    pub fn from_parts(
        features: Array2<f64>,
        labels: Vec<u8>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let ds = Self {
            features,
            labels,
            feature_names,
            metadata: TransformMetadata::default(),
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.nrows() != self.labels.len() {
            return Err(Error::Shape(format!(
                "{} feature rows vs {} labels",
                self.features.nrows(),
                self.labels.len()
            )));
        }
        if self.features.ncols() != self.feature_names.len() {
            return Err(Error::Shape(format!(
                "{} feature columns vs {} names",
                self.features.ncols(),
                self.feature_names.len()
            )));
        }
        if self.features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("features contain non-finite values".into()));
        }
        if self.labels.iter().any(|&y| y > 1) {
            return Err(Error::Data("labels must be 0 or 1".into()));
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    /// Rows selected by index, metadata carried along.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            features: self.features.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            metadata: self.metadata.clone(),
        }
    }

    /// `(negatives, positives)` label counts.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&y| y == 1).count();
        (self.labels.len() - pos, pos)
    }

    /// Per-feature mean vector; the explanation baseline for a shard.
    pub fn feature_means(&self) -> Vec<f64> {
        if self.n_rows() == 0 {
            return vec![0.0; self.n_features()];
        }
        self.features
            .mean_axis(Axis(0))
            .map(|m| m.to_vec())
            .unwrap_or_else(|| vec![0.0; self.n_features()])
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(&DatasetDto::from(self))?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let dto: DatasetDto = serde_json::from_str(&text)
            .map_err(|e| Error::Parse(format!("dataset file '{}': {e}", path.display())))?;
        dto.into_dataset()
    }
}

/// On-disk form: row-major flat values plus explicit dimensions.
#[derive(Debug, Serialize, Deserialize)]
struct DatasetDto {
    feature_names: Vec<String>,
    n_rows: usize,
    n_cols: usize,
    /// Row-major, length `n_rows * n_cols`.
    values: Vec<f64>,
    labels: Vec<u8>,
    metadata: TransformMetadata,
}

impl From<&ProcessedDataset> for DatasetDto {
    fn from(ds: &ProcessedDataset) -> Self {
        Self {
            feature_names: ds.feature_names.clone(),
            n_rows: ds.n_rows(),
            n_cols: ds.n_features(),
            values: ds.features.iter().copied().collect(),
            labels: ds.labels.clone(),
            metadata: ds.metadata.clone(),
        }
    }
}

impl DatasetDto {
    fn into_dataset(self) -> Result<ProcessedDataset> {
        if self.values.len() != self.n_rows * self.n_cols {
            return Err(Error::Shape(format!(
                "dataset payload: {}x{} needs {} values, got {}",
                self.n_rows,
                self.n_cols,
                self.n_rows * self.n_cols,
                self.values.len()
            )));
        }
        let features = Array2::from_shape_vec((self.n_rows, self.n_cols), self.values)
            .map_err(|e| Error::Shape(e.to_string()))?;
        let ds = ProcessedDataset {
            features,
            labels: self.labels,
            feature_names: self.feature_names,
            metadata: self.metadata,
        };
        ds.validate()?;
        Ok(ds)
    }
}
