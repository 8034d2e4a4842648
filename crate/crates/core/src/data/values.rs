//! Default values and scalar casting.

use chrono::{DateTime, TimeZone, Utc};
use thiserror::Error;

use crate::model::{Cardinality, DataType, Feature, FeatureKind, Schema};

use super::{Mode, Record, Value};

/// Aggregate defaults follow target types recursively; cycles of non-root
/// types bottom out at Null beyond this depth.
const MAX_EMBED_DEPTH: usize = 4;

/// A single value that could not be converted.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot cast {value} to {target}")]
pub struct CastFailure {
    pub value: String,
    pub target: String,
}

/// The default for a data type: empty text, zero, false, epoch, empty
/// containers, element-wise defaults for tuples.
pub fn default_value(t: &DataType) -> Value {
    match t {
        DataType::String | DataType::Identifier => Value::Str(String::new()),
        DataType::Integer => Value::Int(0),
        DataType::Double => Value::Dbl(0.0),
        DataType::Boolean => Value::Bool(false),
        DataType::Timestamp => Value::Timestamp(0),
        DataType::List(_) => Value::List(Vec::new()),
        DataType::Set(_) => Value::Set(Vec::new()),
        DataType::Map(_, _) => Value::Map(Vec::new()),
        DataType::Tuple(parts) => Value::Tuple(parts.iter().map(default_value).collect()),
    }
}

/// The default stored value of a schema feature: attribute type defaults,
/// Null for references, and embedded default records for mandatory
/// aggregates.
pub fn feature_default(schema: &Schema, feature: &Feature) -> Value {
    feature_default_at(schema, feature, 0)
}

fn feature_default_at(schema: &Schema, feature: &Feature, depth: usize) -> Value {
    match &feature.kind {
        FeatureKind::Attribute(at) => default_value(&at.data_type),
        FeatureKind::Reference(_) => Value::Null,
        FeatureKind::Aggregate(ag) => {
            if ag.cardinality.lower() == 0 || depth >= MAX_EMBED_DEPTH {
                return Value::Null;
            }
            let embedded = default_record(schema, &ag.target, depth + 1);
            match ag.cardinality {
                Cardinality::One => Value::Embedded(embedded),
                Cardinality::OneOrMany => Value::List(vec![Value::Embedded(embedded)]),
                Cardinality::ZeroOrOne | Cardinality::ZeroOrMany => Value::Null,
            }
        }
    }
}

/// A record of defaults over the target type's common features.
pub(crate) fn default_record(schema: &Schema, type_name: &str, depth: usize) -> Record {
    let mut record = Record::new();
    if let Some(t) = schema.schema_type(type_name) {
        for f in &t.common_features {
            record.set(&f.name, feature_default_at(schema, f, depth));
        }
    }
    record
}

/// Casts `value` to the scalar type `to`, or reports why it cannot be done.
/// Null passes through unchanged for every target.
pub fn try_cast(value: &Value, to: &DataType) -> Result<Value, CastFailure> {
    debug_assert!(to.is_scalar());
    let fail = || CastFailure {
        value: describe(value),
        target: to.to_string(),
    };
    if matches!(value, Value::Null) {
        return Ok(Value::Null);
    }
    match to {
        DataType::String | DataType::Identifier => Ok(Value::Str(canonical_text(value))),
        DataType::Integer => match value {
            Value::Int(n) => Ok(Value::Int(*n)),
            Value::Dbl(d) if d.is_finite() && *d >= i64::MIN as f64 && *d <= i64::MAX as f64 => {
                Ok(Value::Int(*d as i64))
            }
            Value::Str(s) => s.trim().parse::<i64>().map(Value::Int).map_err(|_| fail()),
            Value::Timestamp(ms) => Ok(Value::Int(*ms)),
            _ => Err(fail()),
        },
        DataType::Double => match value {
            Value::Dbl(d) => Ok(Value::Dbl(*d)),
            Value::Int(n) => Ok(Value::Dbl(*n as f64)),
            Value::Str(s) => match s.trim().parse::<f64>() {
                Ok(d) if d.is_finite() => Ok(Value::Dbl(d)),
                _ => Err(fail()),
            },
            _ => Err(fail()),
        },
        DataType::Boolean => match value {
            Value::Bool(b) => Ok(Value::Bool(*b)),
            Value::Int(n) => Ok(Value::Bool(*n != 0)),
            Value::Str(s) => match s.trim().to_ascii_lowercase().as_str() {
                "true" => Ok(Value::Bool(true)),
                "false" => Ok(Value::Bool(false)),
                _ => Err(fail()),
            },
            _ => Err(fail()),
        },
        DataType::Timestamp => match value {
            Value::Timestamp(ms) => Ok(Value::Timestamp(*ms)),
            Value::Int(ms) => Ok(Value::Timestamp(*ms)),
            Value::Str(s) => DateTime::parse_from_rfc3339(s.trim())
                .map(|dt| Value::Timestamp(dt.timestamp_millis()))
                .map_err(|_| fail()),
            _ => Err(fail()),
        },
        _ => Err(fail()),
    }
}

/// Mode-aware cast: strict propagates the failure, lenient substitutes the
/// target default and bumps `warnings`.
pub fn cast_value(
    value: &Value,
    to: &DataType,
    mode: Mode,
    warnings: &mut u64,
) -> Result<Value, CastFailure> {
    match try_cast(value, to) {
        Ok(v) => Ok(v),
        Err(e) => match mode {
            Mode::Strict => Err(e),
            Mode::Lenient => {
                *warnings += 1;
                Ok(default_value(to))
            }
        },
    }
}

/// Canonical text rendering used by casts to String: scalars in their
/// literal form, timestamps in ISO-8601, containers as their interchange
/// JSON.
pub(crate) fn canonical_text(value: &Value) -> String {
    match value {
        Value::Null => String::new(),
        Value::Str(s) => s.clone(),
        Value::Int(n) => n.to_string(),
        Value::Dbl(d) => format!("{d}"),
        Value::Bool(b) => b.to_string(),
        Value::Timestamp(ms) => format_timestamp(*ms),
        other => super::io::value_to_json(other).to_string(),
    }
}

pub(crate) fn format_timestamp(ms: i64) -> String {
    let dt: DateTime<Utc> = Utc
        .timestamp_millis_opt(ms)
        .single()
        .unwrap_or_else(|| Utc.timestamp_millis_opt(0).single().unwrap());
    dt.format("%Y-%m-%dT%H:%M:%S%.3fZ").to_string()
}

fn describe(value: &Value) -> String {
    match value {
        Value::Embedded(_) => "<embedded record>".to_string(),
        Value::List(v) => format!("<list of {}>", v.len()),
        Value::Set(v) => format!("<set of {}>", v.len()),
        Value::Map(v) => format!("<map of {}>", v.len()),
        Value::Tuple(v) => format!("<tuple of {}>", v.len()),
        other => canonical_text(other),
    }
}
