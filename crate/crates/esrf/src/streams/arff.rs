//! Reader for the ARFF subset used by the benchmark datasets: `@relation`,
//! `@attribute` (numeric or nominal), `@data`, `%` comments and `?` missing
//! values. Instances are streamed lazily in file order.

use std::fs::File;
use std::io::{BufRead, BufReader, Lines};
use std::path::Path;
use std::sync::Arc;

use super::{AttributeKind, AttributeSpec, Instance, InstanceStream, Schema, StreamError};

/// Missing values are replaced by 0.0 (numeric) or category 0 (nominal) and
/// counted per column so callers can audit how lossy a file was.
pub struct ArffReader {
    schema: Arc<Schema>,
    lines: Lines<BufReader<File>>,
    line_no: usize,
    class_column: usize,
    columns: Vec<AttributeSpec>,
    missing_counts: Vec<u64>,
    done: bool,
}

impl ArffReader {
    /// Opens the file and parses the header through `@data`. The class
    /// attribute defaults to the last `@attribute`; `class_column` overrides
    /// it with a 0-based column index.
    pub fn open(path: impl AsRef<Path>, class_column: Option<usize>) -> Result<Self, StreamError> {
        let file = File::open(path)?;
        let mut lines = BufReader::new(file).lines();
        let mut line_no = 0usize;
        let mut columns: Vec<AttributeSpec> = Vec::new();
        let mut saw_data = false;

        for line in lines.by_ref() {
            line_no += 1;
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('%') {
                continue;
            }
            let lower = trimmed.to_ascii_lowercase();
            if lower.starts_with("@relation") {
                continue;
            }
            if lower.starts_with("@attribute") {
                columns.push(Self::parse_attribute(trimmed, line_no)?);
                continue;
            }
            if lower.starts_with("@data") {
                saw_data = true;
                break;
            }
            return Err(StreamError::ParseError {
                line: line_no,
                message: format!("unexpected header line '{trimmed}'"),
            });
        }
        if !saw_data {
            return Err(StreamError::ParseError {
                line: line_no,
                message: "no @data section".into(),
            });
        }
        if columns.len() < 2 {
            return Err(StreamError::ParseError {
                line: line_no,
                message: "need at least one feature attribute and a class attribute".into(),
            });
        }

        let class_column = class_column.unwrap_or(columns.len() - 1);
        if class_column >= columns.len() {
            return Err(StreamError::ParseError {
                line: line_no,
                message: format!(
                    "class column {class_column} out of range for {} attributes",
                    columns.len()
                ),
            });
        }
        let class_labels = match &columns[class_column].kind {
            AttributeKind::Nominal(values) => values.clone(),
            AttributeKind::Numeric => {
                return Err(StreamError::ParseError {
                    line: line_no,
                    message: format!(
                        "class attribute '{}' must be nominal",
                        columns[class_column].name
                    ),
                })
            }
        };
        let features: Vec<AttributeSpec> = columns
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != class_column)
            .map(|(_, a)| a.clone())
            .collect();
        let schema = Schema::new(features, class_labels).map_err(|e| StreamError::ParseError {
            line: line_no,
            message: e.to_string(),
        })?;

        let missing_counts = vec![0; columns.len()];
        Ok(ArffReader {
            schema: Arc::new(schema),
            lines,
            line_no,
            class_column,
            columns,
            missing_counts,
            done: false,
        })
    }

    fn parse_attribute(line: &str, line_no: usize) -> Result<AttributeSpec, StreamError> {
        let rest = line["@attribute".len()..].trim();
        let (name, kind_str) = if let Some(stripped) = rest.strip_prefix('\'') {
            let end = stripped
                .find('\'')
                .ok_or_else(|| StreamError::ParseError {
                    line: line_no,
                    message: "unterminated quoted attribute name".into(),
                })?;
            (stripped[..end].to_string(), stripped[end + 1..].trim())
        } else {
            let mut parts = rest.splitn(2, char::is_whitespace);
            let name = parts.next().unwrap_or_default().to_string();
            (name, parts.next().unwrap_or_default().trim())
        };
        if name.is_empty() || kind_str.is_empty() {
            return Err(StreamError::ParseError {
                line: line_no,
                message: format!("malformed @attribute line '{line}'"),
            });
        }
        if kind_str.starts_with('{') {
            let inner = kind_str
                .strip_prefix('{')
                .and_then(|s| s.strip_suffix('}'))
                .ok_or_else(|| StreamError::ParseError {
                    line: line_no,
                    message: format!("malformed nominal value list '{kind_str}'"),
                })?;
            let values: Vec<String> = inner
                .split(',')
                .map(|v| v.trim().trim_matches('\'').trim_matches('"').to_string())
                .collect();
            if values.iter().any(|v| v.is_empty()) {
                return Err(StreamError::ParseError {
                    line: line_no,
                    message: "empty nominal value".into(),
                });
            }
            return Ok(AttributeSpec::nominal(name, values));
        }
        match kind_str.to_ascii_lowercase().as_str() {
            "numeric" | "real" | "integer" => Ok(AttributeSpec::numeric(name)),
            other => Err(StreamError::UnsupportedAttribute {
                name,
                kind: other.to_string(),
            }),
        }
    }

    /// Per-column counters of `?` replacements seen so far (header order).
    pub fn missing_counts(&self) -> &[u64] {
        &self.missing_counts
    }

    fn parse_row(&mut self, row: &str) -> Result<Instance, StreamError> {
        let fields: Vec<&str> = row.split(',').map(str::trim).collect();
        if fields.len() != self.columns.len() {
            return Err(StreamError::ParseError {
                line: self.line_no,
                message: format!(
                    "row has {} fields, expected {}",
                    fields.len(),
                    self.columns.len()
                ),
            });
        }
        let mut values = Vec::with_capacity(self.columns.len() - 1);
        let mut class_index = 0usize;
        for (col, (field, spec)) in fields.iter().zip(&self.columns).enumerate() {
            let token = field.trim_matches('\'').trim_matches('"');
            let missing = token == "?";
            if missing {
                self.missing_counts[col] += 1;
            }
            let parsed = match &spec.kind {
                AttributeKind::Numeric => {
                    if missing {
                        0.0
                    } else {
                        token.parse::<f64>().map_err(|_| StreamError::ParseError {
                            line: self.line_no,
                            message: format!("bad numeric value '{token}' in column '{}'", spec.name),
                        })?
                    }
                }
                AttributeKind::Nominal(choices) => {
                    if missing {
                        0.0
                    } else {
                        choices
                            .iter()
                            .position(|v| v == token)
                            .ok_or_else(|| StreamError::UnknownNominalValue {
                                token: token.to_string(),
                                attribute: spec.name.clone(),
                                line: self.line_no,
                            })? as f64
                    }
                }
            };
            if col == self.class_column {
                class_index = parsed as usize;
            } else {
                values.push(parsed);
            }
        }
        Ok(Instance::new(values, class_index))
    }
}

impl Iterator for ArffReader {
    type Item = Result<Instance, StreamError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        loop {
            let line = match self.lines.next() {
                None => {
                    self.done = true;
                    return None;
                }
                Some(Err(e)) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
                Some(Ok(line)) => line,
            };
            self.line_no += 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('%') {
                continue;
            }
            let result = self.parse_row(trimmed);
            if result.is_err() {
                self.done = true;
            }
            return Some(result);
        }
    }
}

impl InstanceStream for ArffReader {
    fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }
}
