//! CSV ingestion against a caller-supplied schema. RFC-4180 basic quoting,
//! optional header row, class label in the last field.

use std::fs::File;
use std::path::Path;
use std::sync::Arc;

use super::{AttributeKind, Instance, InstanceStream, Schema, StreamError};

pub struct CsvReader {
    schema: Arc<Schema>,
    records: csv::StringRecordsIntoIter<File>,
    missing_counts: Vec<u64>,
    done: bool,
}

impl CsvReader {
    pub fn open(
        path: impl AsRef<Path>,
        schema: Arc<Schema>,
        has_header: bool,
    ) -> Result<Self, StreamError> {
        let file = File::open(path)?;
        let reader = csv::ReaderBuilder::new()
            .has_headers(has_header)
            .flexible(true)
            .from_reader(file);
        let missing_counts = vec![0; schema.num_attributes() + 1];
        Ok(CsvReader {
            schema,
            records: reader.into_records(),
            missing_counts,
            done: false,
        })
    }

    pub fn missing_counts(&self) -> &[u64] {
        &self.missing_counts
    }

    fn line_of(&self, record: &csv::StringRecord) -> usize {
        record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or_default()
    }

    fn parse_record(&mut self, record: &csv::StringRecord) -> Result<Instance, StreamError> {
        let expected = self.schema.num_attributes() + 1;
        let line = self.line_of(record);
        if record.len() != expected {
            return Err(StreamError::ParseError {
                line,
                message: format!("row has {} fields, expected {expected}", record.len()),
            });
        }
        let mut values = Vec::with_capacity(self.schema.num_attributes());
        for (col, spec) in self.schema.attributes().iter().enumerate() {
            let token = record.get(col).unwrap_or_default().trim();
            if token == "?" {
                self.missing_counts[col] += 1;
                values.push(0.0);
                continue;
            }
            let value = match &spec.kind {
                AttributeKind::Numeric => {
                    token.parse::<f64>().map_err(|_| StreamError::ParseError {
                        line,
                        message: format!("bad numeric value '{token}' in column '{}'", spec.name),
                    })?
                }
                AttributeKind::Nominal(choices) => choices
                    .iter()
                    .position(|v| v == token)
                    .ok_or_else(|| StreamError::UnknownNominalValue {
                        token: token.to_string(),
                        attribute: spec.name.clone(),
                        line,
                    })? as f64,
            };
            values.push(value);
        }
        let class_token = record.get(expected - 1).unwrap_or_default().trim();
        let class_index = if class_token == "?" {
            self.missing_counts[expected - 1] += 1;
            0
        } else {
            self.schema
                .class_labels()
                .iter()
                .position(|l| l == class_token)
                .ok_or_else(|| StreamError::UnknownNominalValue {
                    token: class_token.to_string(),
                    attribute: "class".into(),
                    line,
                })?
        };
        Ok(Instance::new(values, class_index))
    }
}

impl Iterator for CsvReader {
    type Item = Result<Instance, StreamError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.records.next() {
            None => {
                self.done = true;
                None
            }
            Some(Err(e)) => {
                self.done = true;
                let line = e
                    .position()
                    .map(|p| p.line() as usize)
                    .unwrap_or_default();
                Some(Err(StreamError::ParseError {
                    line,
                    message: e.to_string(),
                }))
            }
            Some(Ok(record)) => {
                let parsed = self.parse_record(&record);
                if parsed.is_err() {
                    self.done = true;
                }
                Some(parsed)
            }
        }
    }
}

impl InstanceStream for CsvReader {
    fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }
}

/// Cardinality guard for schema sniffing.
const MAX_SNIFFED_VALUES: usize = 4096;

/// Builds a schema by scanning a CSV file once: columns where every
/// non-missing token parses as a number become numeric, the rest become
/// nominal with values in order of first appearance. The last column is the
/// class. This is the CLI-side companion for files that lack an ARFF header.
pub fn sniff_csv_schema(
    path: impl AsRef<Path>,
    has_header: bool,
) -> Result<Schema, StreamError> {
    use super::AttributeSpec;

    let file = File::open(&path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .from_reader(file);
    let header: Option<Vec<String>> = if has_header {
        Some(reader.headers().map(|h| h.iter().map(String::from).collect()).unwrap_or_default())
    } else {
        None
    };

    let mut n_cols = 0usize;
    let mut numeric: Vec<bool> = Vec::new();
    let mut nominal_values: Vec<Vec<String>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| StreamError::ParseError {
            line: e.position().map(|p| p.line() as usize).unwrap_or_default(),
            message: e.to_string(),
        })?;
        if n_cols == 0 {
            n_cols = record.len();
            numeric = vec![true; n_cols];
            nominal_values = vec![Vec::new(); n_cols];
        }
        for col in 0..n_cols {
            let token = record.get(col).unwrap_or_default().trim();
            if token == "?" || token.is_empty() {
                continue;
            }
            if numeric[col] && token.parse::<f64>().is_err() {
                numeric[col] = false;
            }
            if nominal_values[col].len() <= MAX_SNIFFED_VALUES
                && !nominal_values[col].iter().any(|v| v == token)
            {
                nominal_values[col].push(token.to_string());
            }
        }
    }
    for (col, values) in nominal_values.iter().enumerate() {
        if !numeric[col] && values.len() > MAX_SNIFFED_VALUES {
            return Err(StreamError::ParseError {
                line: 0,
                message: format!(
                    "column {col} has more than {MAX_SNIFFED_VALUES} distinct non-numeric values"
                ),
            });
        }
    }
    if n_cols < 2 {
        return Err(StreamError::ParseError {
            line: 0,
            message: "CSV needs at least one feature column and a class column".into(),
        });
    }
    let name_of = |col: usize| {
        header
            .as_ref()
            .and_then(|h| h.get(col).cloned())
            .filter(|n| !n.is_empty())
            .unwrap_or_else(|| format!("col{col}"))
    };
    let mut attrs = Vec::with_capacity(n_cols - 1);
    for col in 0..n_cols - 1 {
        attrs.push(if numeric[col] {
            AttributeSpec::numeric(name_of(col))
        } else {
            AttributeSpec::nominal(name_of(col), nominal_values[col].clone())
        });
    }
    // Class labels keep first-appearance order; numeric-looking labels are
    // still treated as labels.
    let class_values = nominal_values[n_cols - 1].clone();
    Schema::new(attrs, class_values).map_err(|e| StreamError::ParseError {
        line: 0,
        message: e.to_string(),
    })
}
