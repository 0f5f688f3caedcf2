//! Tabular ingestion and the preprocessing pipeline.
//!
//! Raw CSV files become a typed [`RawTable`]; the pipeline (imputation, IQR
//! outlier removal, binning, one-hot encoding) turns that into a
//! [`ProcessedDataset`]: an all-numeric feature matrix plus binary labels.

mod pipeline;
mod processed;
mod smote;
mod split;

pub use pipeline::{
    bin_column, correlation_matrix, impute, one_hot, preprocess, preprocess_fit_on_train,
    remove_outliers_iqr, CorrelationMatrix, PipelineConfig,
};
pub use processed::{ImputeStat, ProcessedDataset, TransformMetadata};
pub use smote::{smote, smote_dataset};
pub use split::{shard, train_test_split, SplitSpec};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Integer,
    Float,
    Categorical,
}

/// Column storage. Numeric columns (integer and float kinds) hold `f64`
/// values so that mean imputation stays exact even for integer sources;
/// the declared [`ColumnKind`] keeps the original type for stages that
/// care (IQR removal applies to float columns only).
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Numeric(Vec<Option<f64>>),
    Categorical(Vec<Option<String>>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn missing_count(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.iter().filter(|x| x.is_none()).count(),
            ColumnData::Categorical(v) => v.iter().filter(|x| x.is_none()).count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    pub data: ColumnData,
}

impl Column {
    pub fn numeric(name: impl Into<String>, kind: ColumnKind, values: Vec<Option<f64>>) -> Self {
        debug_assert!(kind != ColumnKind::Categorical);
        Self {
            name: name.into(),
            kind,
            data: ColumnData::Numeric(values),
        }
    }

    pub fn categorical(name: impl Into<String>, values: Vec<Option<String>>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Categorical,
            data: ColumnData::Categorical(values),
        }
    }

    pub fn numeric_values(&self) -> Option<&Vec<Option<f64>>> {
        match &self.data {
            ColumnData::Numeric(v) => Some(v),
            ColumnData::Categorical(_) => None,
        }
    }
}

/// A typed, column-ordered table with optional missing markers.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub columns: Vec<Column>,
}

impl RawTable {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        if let Some(first) = columns.first() {
            let len = first.data.len();
            if columns.iter().any(|c| c.data.len() != len) {
                return Err(Error::Data("columns have unequal lengths".into()));
            }
        }
        let mut seen = BTreeSet::new();
        for c in &columns {
            if !seen.insert(c.name.clone()) {
                return Err(Error::Data(format!("duplicate column name '{}'", c.name)));
            }
        }
        Ok(Self { columns })
    }

    pub fn row_count(&self) -> usize {
        self.columns.first().map_or(0, |c| c.data.len())
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    /// Keeps only the rows where `mask` is true; all columns filtered alike.
    pub fn filter_rows(&self, mask: &[bool]) -> Result<RawTable> {
        if mask.len() != self.row_count() {
            return Err(Error::Data("row mask length mismatch".into()));
        }
        let columns = self
            .columns
            .iter()
            .map(|c| {
                let data = match &c.data {
                    ColumnData::Numeric(v) => ColumnData::Numeric(
                        v.iter()
                            .zip(mask)
                            .filter(|(_, &keep)| keep)
                            .map(|(x, _)| *x)
                            .collect(),
                    ),
                    ColumnData::Categorical(v) => ColumnData::Categorical(
                        v.iter()
                            .zip(mask)
                            .filter(|(_, &keep)| keep)
                            .map(|(x, _)| x.clone())
                            .collect(),
                    ),
                };
                Column {
                    name: c.name.clone(),
                    kind: c.kind,
                    data,
                }
            })
            .collect();
        RawTable::new(columns)
    }
}

/// Expected columns of a fraud table, the binary target among them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub columns: Vec<(String, ColumnKind)>,
    pub target: String,
    pub missing_tokens: Vec<String>,
}

impl DatasetSchema {
    pub fn new(columns: Vec<(String, ColumnKind)>, target: impl Into<String>) -> Self {
        Self {
            columns,
            target: target.into(),
            missing_tokens: default_missing_tokens(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.columns.iter().find(|(n, _)| *n == self.target) {
            None => Err(Error::Config(format!(
                "target column '{}' not in schema",
                self.target
            ))),
            Some((_, ColumnKind::Integer)) => Ok(()),
            Some((_, _)) => Err(Error::Config(format!(
                "target column '{}' must be integer-kind",
                self.target
            ))),
        }
    }

    /// Builds a schema from a CSV file by sniffing each column: integer if
    /// every non-missing value parses as an integer, else float if every
    /// value parses as a number, else categorical.
    pub fn infer_from_csv(path: &Path, target: &str, missing_tokens: &[String]) -> Result<Self> {
        let mut reader = csv_reader(path)?;
        let headers: Vec<String> = reader
            .headers()
            .map_err(|e| Error::Parse(format!("csv header: {e}")))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        if headers.is_empty() {
            return Err(Error::Data("csv file has no header row".into()));
        }

        let mut all_int = vec![true; headers.len()];
        let mut all_num = vec![true; headers.len()];
        let mut rows = 0usize;
        for record in reader.records() {
            let record = record.map_err(|e| Error::Parse(format!("csv row: {e}")))?;
            rows += 1;
            for (i, field) in record.iter().enumerate().take(headers.len()) {
                let field = field.trim();
                if is_missing(field, missing_tokens) {
                    continue;
                }
                if all_int[i] && field.parse::<i64>().is_err() {
                    all_int[i] = false;
                }
                if all_num[i] && field.parse::<f64>().is_err() {
                    all_num[i] = false;
                }
            }
        }
        if rows == 0 {
            return Err(Error::Data("csv file has a header but no rows".into()));
        }

        let columns = headers
            .iter()
            .enumerate()
            .map(|(i, name)| {
                let kind = if all_int[i] {
                    ColumnKind::Integer
                } else if all_num[i] {
                    ColumnKind::Float
                } else {
                    ColumnKind::Categorical
                };
                (name.clone(), kind)
            })
            .collect();
        let schema = Self {
            columns,
            target: target.to_string(),
            missing_tokens: missing_tokens.to_vec(),
        };
        schema.validate()?;
        Ok(schema)
    }
}

pub fn default_missing_tokens() -> Vec<String> {
    vec![String::new(), "NA".to_string()]
}

fn is_missing(field: &str, tokens: &[String]) -> bool {
    tokens.iter().any(|t| t == field)
}

fn csv_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Data(format!("cannot open '{}': {e}", path.display())))
}

/// Loads a comma-separated file into a typed table. The header must contain
/// exactly the schema's columns; values parse per declared kind, with empty
/// cells and configured missing tokens becoming missing markers. Column order
/// follows the schema.
pub fn load_csv(path: &Path, schema: &DatasetSchema) -> Result<RawTable> {
    schema.validate()?;
    let mut reader = csv_reader(path)?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Parse(format!("csv header: {e}")))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();

    let mut header_pos = Vec::with_capacity(schema.columns.len());
    for (name, _) in &schema.columns {
        match headers.iter().position(|h| h == name) {
            Some(pos) => header_pos.push(pos),
            None => {
                return Err(Error::Data(format!(
                    "missing column '{name}' in '{}'",
                    path.display()
                )))
            }
        }
    }
    for h in &headers {
        if !schema.columns.iter().any(|(n, _)| n == h) {
            return Err(Error::Data(format!("unknown column '{h}' not in schema")));
        }
    }

    let mut numeric: Vec<Vec<Option<f64>>> = vec![Vec::new(); schema.columns.len()];
    let mut categorical: Vec<Vec<Option<String>>> = vec![Vec::new(); schema.columns.len()];
    let mut row_idx = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse(format!("csv row {}: {e}", row_idx + 2)))?;
        if record.len() != headers.len() {
            return Err(Error::Parse(format!(
                "row {}: expected {} fields, got {}",
                row_idx + 2,
                headers.len(),
                record.len()
            )));
        }
        for (col_idx, (name, kind)) in schema.columns.iter().enumerate() {
            let field = record.get(header_pos[col_idx]).unwrap_or("").trim();
            let missing = is_missing(field, &schema.missing_tokens);
            match kind {
                ColumnKind::Integer => {
                    let value = if missing {
                        None
                    } else {
                        Some(field.parse::<i64>().map_err(|_| {
                            Error::Parse(format!(
                                "row {}, column '{name}': '{field}' is not an integer",
                                row_idx + 2
                            ))
                        })? as f64)
                    };
                    numeric[col_idx].push(value);
                }
                ColumnKind::Float => {
                    let value = if missing {
                        None
                    } else {
                        let v = field.parse::<f64>().map_err(|_| {
                            Error::Parse(format!(
                                "row {}, column '{name}': '{field}' is not a number",
                                row_idx + 2
                            ))
                        })?;
                        if !v.is_finite() {
                            return Err(Error::Parse(format!(
                                "row {}, column '{name}': non-finite value",
                                row_idx + 2
                            )));
                        }
                        Some(v)
                    };
                    numeric[col_idx].push(value);
                }
                ColumnKind::Categorical => {
                    categorical[col_idx].push(if missing {
                        None
                    } else {
                        Some(field.to_string())
                    });
                }
            }
        }
        row_idx += 1;
    }
    if row_idx == 0 {
        return Err(Error::Data(format!(
            "'{}' has a header but no data rows",
            path.display()
        )));
    }

    let columns = schema
        .columns
        .iter()
        .enumerate()
        .map(|(i, (name, kind))| match kind {
            ColumnKind::Categorical => {
                Column::categorical(name.clone(), std::mem::take(&mut categorical[i]))
            }
            kind => Column::numeric(name.clone(), *kind, std::mem::take(&mut numeric[i])),
        })
        .collect();
    let table = RawTable::new(columns)?;

    // The target must be a clean binary column.
    let target = table.column(&schema.target).expect("validated above");
    if let ColumnData::Numeric(values) = &target.data {
        for (i, v) in values.iter().enumerate() {
            match v {
                None => {
                    return Err(Error::Data(format!(
                        "target '{}' missing at row {}",
                        schema.target,
                        i + 2
                    )))
                }
                Some(x) if *x != 0.0 && *x != 1.0 => {
                    return Err(Error::Data(format!(
                        "target '{}' must be 0 or 1, found {x} at row {}",
                        schema.target,
                        i + 2
                    )))
                }
                _ => {}
            }
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    fn small_schema() -> DatasetSchema {
        DatasetSchema::new(
            vec![
                ("fraud_bool".into(), ColumnKind::Integer),
                ("income".into(), ColumnKind::Float),
                ("device_os".into(), ColumnKind::Categorical),
            ],
            "fraud_bool",
        )
    }

    #[test]
    fn loads_typed_columns_with_missing_markers() {
        let f = write_csv("fraud_bool,income,device_os\n0,1.5,linux\n1,,windows\n0,2.5,NA\n");
        let table = load_csv(f.path(), &small_schema()).unwrap();
        assert_eq!(table.row_count(), 3);
        assert_eq!(table.columns.len(), 3);
        let income = table.column("income").unwrap().numeric_values().unwrap();
        assert_eq!(income, &vec![Some(1.5), None, Some(2.5)]);
        match &table.column("device_os").unwrap().data {
            ColumnData::Categorical(v) => assert_eq!(v[2], None),
            _ => panic!("expected categorical"),
        }
    }

    #[test]
    fn header_only_file_is_an_error() {
        let f = write_csv("fraud_bool,income,device_os\n");
        assert!(load_csv(f.path(), &small_schema()).is_err());
    }

    #[test]
    fn typed_parse_error_names_row_and_column() {
        let f = write_csv("fraud_bool,income,device_os\n0,abc,linux\n");
        let err = load_csv(f.path(), &small_schema()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("income") && msg.contains("row 2"), "{msg}");
    }

    #[test]
    fn unknown_and_missing_columns_are_errors() {
        let f = write_csv("fraud_bool,income\n0,1.0\n");
        assert!(load_csv(f.path(), &small_schema()).is_err());

        let f = write_csv("fraud_bool,income,device_os,extra\n0,1.0,linux,x\n");
        assert!(load_csv(f.path(), &small_schema()).is_err());
    }

    #[test]
    fn nonbinary_target_is_rejected() {
        let f = write_csv("fraud_bool,income,device_os\n2,1.0,linux\n");
        assert!(load_csv(f.path(), &small_schema()).is_err());
    }

    #[test]
    fn schema_inference_detects_kinds() {
        let f = write_csv(
            "fraud_bool,income,device_os,age\n0,1.5,linux,30\n1,2.0,windows,41\n0,,other,\n",
        );
        let schema =
            DatasetSchema::infer_from_csv(f.path(), "fraud_bool", &default_missing_tokens())
                .unwrap();
        let kinds: std::collections::BTreeMap<_, _> = schema.columns.iter().cloned().collect();
        assert_eq!(kinds["fraud_bool"], ColumnKind::Integer);
        assert_eq!(kinds["income"], ColumnKind::Float);
        assert_eq!(kinds["device_os"], ColumnKind::Categorical);
        assert_eq!(kinds["age"], ColumnKind::Integer);
    }
}
