//! Instance/schema data model, synthetic drifting stream generators and
//! ARFF/CSV file ingestion.

use std::sync::Arc;

use thiserror::Error;

pub mod arff;
pub mod csv_reader;
pub mod drift_stream;
pub mod generators;

pub use arff::ArffReader;
pub use csv_reader::CsvReader;
pub use drift_stream::DriftStream;

#[derive(Debug, Error)]
pub enum StreamError {
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("unsupported attribute type '{kind}' for attribute '{name}'")]
    UnsupportedAttribute { name: String, kind: String },
    #[error("unknown nominal value '{token}' for attribute '{attribute}' at line {line}")]
    UnknownNominalValue {
        token: String,
        attribute: String,
        line: usize,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Errors raised when constructing an invalid [`Schema`].
#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("schema needs at least one attribute")]
    NoAttributes,
    #[error("schema needs at least two class labels, got {0}")]
    TooFewClasses(usize),
    #[error("duplicate attribute name '{0}'")]
    DuplicateAttribute(String),
    #[error("nominal attribute '{0}' has an empty or duplicated value list")]
    BadNominalValues(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttributeKind {
    Numeric,
    Nominal(Vec<String>),
}

impl AttributeKind {
    /// Number of categories for nominal attributes, `None` for numeric.
    pub fn arity(&self) -> Option<usize> {
        match self {
            AttributeKind::Numeric => None,
            AttributeKind::Nominal(values) => Some(values.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeSpec {
    pub name: String,
    pub kind: AttributeKind,
}

impl AttributeSpec {
    pub fn numeric(name: impl Into<String>) -> Self {
        AttributeSpec {
            name: name.into(),
            kind: AttributeKind::Numeric,
        }
    }

    pub fn nominal(name: impl Into<String>, values: Vec<String>) -> Self {
        AttributeSpec {
            name: name.into(),
            kind: AttributeKind::Nominal(values),
        }
    }
}

/// Attribute layout plus the class label set shared by every instance of a
/// stream. Streams hand out `Arc<Schema>` so readers and learners can hold
/// it without copying.
#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    attributes: Vec<AttributeSpec>,
    class_labels: Vec<String>,
}

impl Schema {
    pub fn new(
        attributes: Vec<AttributeSpec>,
        class_labels: Vec<String>,
    ) -> Result<Self, SchemaError> {
        if attributes.is_empty() {
            return Err(SchemaError::NoAttributes);
        }
        if class_labels.len() < 2 {
            return Err(SchemaError::TooFewClasses(class_labels.len()));
        }
        let mut seen = std::collections::HashSet::new();
        for attr in &attributes {
            if !seen.insert(attr.name.as_str()) {
                return Err(SchemaError::DuplicateAttribute(attr.name.clone()));
            }
            if let AttributeKind::Nominal(values) = &attr.kind {
                let unique: std::collections::HashSet<_> = values.iter().collect();
                if values.is_empty() || unique.len() != values.len() {
                    return Err(SchemaError::BadNominalValues(attr.name.clone()));
                }
            }
        }
        Ok(Schema {
            attributes,
            class_labels,
        })
    }

    pub fn attributes(&self) -> &[AttributeSpec] {
        &self.attributes
    }

    pub fn num_attributes(&self) -> usize {
        self.attributes.len()
    }

    pub fn class_labels(&self) -> &[String] {
        &self.class_labels
    }

    pub fn num_classes(&self) -> usize {
        self.class_labels.len()
    }

    /// Checks that an instance is structurally valid for this schema.
    pub fn validate(&self, instance: &Instance) -> Result<(), StreamError> {
        if instance.values.len() != self.attributes.len() {
            return Err(StreamError::SchemaMismatch(format!(
                "instance has {} values, schema declares {} attributes",
                instance.values.len(),
                self.attributes.len()
            )));
        }
        if instance.class_index >= self.class_labels.len() {
            return Err(StreamError::SchemaMismatch(format!(
                "class index {} out of range for {} labels",
                instance.class_index,
                self.class_labels.len()
            )));
        }
        if !(instance.weight >= 0.0) {
            return Err(StreamError::SchemaMismatch(format!(
                "negative or NaN weight {}",
                instance.weight
            )));
        }
        for (i, (value, attr)) in instance.values.iter().zip(&self.attributes).enumerate() {
            if let AttributeKind::Nominal(values) = &attr.kind {
                let idx = *value;
                if idx.fract() != 0.0 || idx < 0.0 || idx as usize >= values.len() {
                    return Err(StreamError::SchemaMismatch(format!(
                        "attribute {} ('{}'): nominal index {} out of range 0..{}",
                        i,
                        attr.name,
                        idx,
                        values.len()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One stream example. Nominal attribute values are stored as their category
/// index (exact small integers in an f64 slot).
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub values: Vec<f64>,
    pub class_index: usize,
    pub weight: f64,
}

impl Instance {
    pub fn new(values: Vec<f64>, class_index: usize) -> Self {
        Instance {
            values,
            class_index,
            weight: 1.0,
        }
    }
}

/// A source of labeled instances. Generators are infinite and never fail;
/// file readers end and may surface parse errors.
pub trait InstanceStream: Iterator<Item = Result<Instance, StreamError>> + Send {
    fn schema(&self) -> &Arc<Schema>;
}
