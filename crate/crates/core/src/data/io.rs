//! The on-disk interchange format: one `<TypeName>.ndjson` file per dataset
//! (one JSON object per line) plus a `manifest` naming the store mode and
//! the type list in order.
//!
//! Sentinels keep every value kind round-trippable inside plain JSON:
//! timestamps are strings `"$ts:<ISO-8601>"`, sets/maps/tuples are
//! single-key objects `{"$set": …}` / `{"$map": …}` / `{"$tuple": …}`, and a
//! genuine string starting with `$` is escaped as `"$str:<text>"`. Nested
//! objects are embedded records.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::DateTime;
use serde::de::{self, Deserializer, MapAccess, SeqAccess, Visitor};
use serde::Deserialize;
use thiserror::Error;

use super::values::format_timestamp;
use super::{Database, Dataset, Record, StoreMode, Value};

#[derive(Debug, Error)]
pub enum DataIoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{file}:{line}: {message}")]
    Format {
        file: String,
        line: usize,
        message: String,
    },
}

const MANIFEST: &str = "manifest";

/// Writes every dataset and the manifest under `dir`, returning the paths
/// written. Output is canonical: sorted record fields, one record per line.
pub fn store_database(db: &Database, dir: &Path) -> Result<Vec<PathBuf>, DataIoError> {
    fs::create_dir_all(dir).map_err(|e| DataIoError::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let mut paths = Vec::new();

    let mut manifest = String::new();
    manifest.push_str(db.mode.as_str());
    manifest.push('\n');
    for name in db.collections.keys() {
        manifest.push_str(name);
        manifest.push('\n');
    }
    let manifest_path = dir.join(MANIFEST);
    fs::write(&manifest_path, manifest).map_err(|e| DataIoError::Io {
        path: manifest_path.clone(),
        source: e,
    })?;
    paths.push(manifest_path);

    for dataset in db.collections.values() {
        let mut text = String::new();
        for record in &dataset.records {
            text.push_str(&record_to_json(record).to_string());
            text.push('\n');
        }
        let path = dir.join(format!("{}.ndjson", dataset.type_name));
        fs::write(&path, text).map_err(|e| DataIoError::Io {
            path: path.clone(),
            source: e,
        })?;
        paths.push(path);
    }
    Ok(paths)
}

/// Loads a database directory written by [`store_database`] (or authored by
/// hand in the same format).
pub fn load_database(dir: &Path) -> Result<Database, DataIoError> {
    let manifest_path = dir.join(MANIFEST);
    let manifest = fs::read_to_string(&manifest_path).map_err(|e| DataIoError::Io {
        path: manifest_path.clone(),
        source: e,
    })?;
    let mut lines = manifest.lines();
    let mode_line = lines.next().unwrap_or("").trim();
    let mode = StoreMode::parse(mode_line).ok_or_else(|| DataIoError::Format {
        file: MANIFEST.to_string(),
        line: 1,
        message: format!("expected AGGREGATE or GRAPH, found `{mode_line}`"),
    })?;

    let mut db = Database::new(mode);
    for name in lines {
        let name = name.trim();
        if name.is_empty() {
            continue;
        }
        let file = format!("{name}.ndjson");
        let path = dir.join(&file);
        let text = fs::read_to_string(&path).map_err(|e| DataIoError::Io {
            path: path.clone(),
            source: e,
        })?;
        let mut dataset = Dataset::new(name);
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parsed: JsonValue =
                serde_json::from_str(line).map_err(|e| DataIoError::Format {
                    file: file.clone(),
                    line: i + 1,
                    message: e.to_string(),
                })?;
            match parsed.0 {
                Value::Embedded(record) => dataset.records.push(record),
                _ => {
                    return Err(DataIoError::Format {
                        file: file.clone(),
                        line: i + 1,
                        message: "each line must be a JSON object".to_string(),
                    })
                }
            }
        }
        db.insert_dataset(dataset);
    }
    Ok(db)
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

pub(crate) fn record_to_json(record: &Record) -> serde_json::Value {
    let mut map = serde_json::Map::new();
    for (name, value) in &record.fields {
        map.insert(name.clone(), value_to_json(value));
    }
    serde_json::Value::Object(map)
}

pub(crate) fn value_to_json(value: &Value) -> serde_json::Value {
    use serde_json::json;
    match value {
        Value::Null => serde_json::Value::Null,
        Value::Str(s) => {
            if s.starts_with('$') {
                serde_json::Value::String(format!("$str:{s}"))
            } else {
                serde_json::Value::String(s.clone())
            }
        }
        Value::Int(n) => json!(n),
        Value::Dbl(d) => json!(d),
        Value::Bool(b) => json!(b),
        Value::Timestamp(ms) => serde_json::Value::String(format!("$ts:{}", format_timestamp(*ms))),
        Value::List(items) => serde_json::Value::Array(items.iter().map(value_to_json).collect()),
        Value::Set(items) => json!({ "$set": items.iter().map(value_to_json).collect::<Vec<_>>() }),
        Value::Tuple(items) => {
            json!({ "$tuple": items.iter().map(value_to_json).collect::<Vec<_>>() })
        }
        Value::Map(pairs) => {
            let encoded: Vec<serde_json::Value> = pairs
                .iter()
                .map(|(k, v)| serde_json::Value::Array(vec![value_to_json(k), value_to_json(v)]))
                .collect();
            json!({ "$map": encoded })
        }
        Value::Embedded(record) => record_to_json(record),
    }
}

/// Canonical single-line text of a record, used by golden tests and the
/// oracle comparisons.
pub fn record_to_canonical_string(record: &Record) -> String {
    record_to_json(record).to_string()
}

// ---------------------------------------------------------------------------
// deserialization (duplicate-key aware)
// ---------------------------------------------------------------------------

struct JsonValue(Value);

impl<'de> Deserialize<'de> for JsonValue {
    fn deserialize<D>(deserializer: D) -> Result<Self, D::Error>
    where
        D: Deserializer<'de>,
    {
        deserializer.deserialize_any(ValueVisitor)
    }
}

struct ValueVisitor;

impl<'de> Visitor<'de> for ValueVisitor {
    type Value = JsonValue;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a JSON value")
    }

    fn visit_bool<E>(self, v: bool) -> Result<JsonValue, E> {
        Ok(JsonValue(Value::Bool(v)))
    }

    fn visit_i64<E>(self, v: i64) -> Result<JsonValue, E> {
        Ok(JsonValue(Value::Int(v)))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<JsonValue, E> {
        i64::try_from(v)
            .map(|n| JsonValue(Value::Int(n)))
            .map_err(|_| E::custom(format!("integer {v} out of range")))
    }

    fn visit_f64<E>(self, v: f64) -> Result<JsonValue, E> {
        Ok(JsonValue(Value::Dbl(v)))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<JsonValue, E> {
        if let Some(iso) = v.strip_prefix("$ts:") {
            let dt = DateTime::parse_from_rfc3339(iso)
                .map_err(|e| E::custom(format!("bad timestamp `{iso}`: {e}")))?;
            return Ok(JsonValue(Value::Timestamp(dt.timestamp_millis())));
        }
        if let Some(text) = v.strip_prefix("$str:") {
            return Ok(JsonValue(Value::Str(text.to_string())));
        }
        if v.starts_with('$') {
            return Err(E::custom(format!("unknown sentinel string `{v}`")));
        }
        Ok(JsonValue(Value::Str(v.to_string())))
    }

    fn visit_unit<E>(self) -> Result<JsonValue, E> {
        Ok(JsonValue(Value::Null))
    }

    fn visit_seq<A>(self, mut seq: A) -> Result<JsonValue, A::Error>
    where
        A: SeqAccess<'de>,
    {
        let mut items = Vec::new();
        while let Some(JsonValue(v)) = seq.next_element()? {
            items.push(v);
        }
        Ok(JsonValue(Value::List(items)))
    }

    fn visit_map<A>(self, mut map: A) -> Result<JsonValue, A::Error>
    where
        A: MapAccess<'de>,
    {
        let mut pairs: Vec<(String, Value)> = Vec::new();
        while let Some((key, JsonValue(value))) = map.next_entry::<String, JsonValue>()? {
            if pairs.iter().any(|(k, _)| k == &key) {
                return Err(de::Error::custom(format!("duplicate field name `{key}`")));
            }
            pairs.push((key, value));
        }
        if pairs.len() == 1 {
            match (pairs[0].0.as_str(), &pairs[0].1) {
                ("$set", Value::List(items)) => {
                    return Ok(JsonValue(Value::Set(items.clone())));
                }
                ("$tuple", Value::List(items)) => {
                    return Ok(JsonValue(Value::Tuple(items.clone())));
                }
                ("$map", Value::List(items)) => {
                    let mut decoded = Vec::new();
                    for item in items {
                        match item {
                            Value::List(kv) if kv.len() == 2 => {
                                decoded.push((kv[0].clone(), kv[1].clone()));
                            }
                            _ => {
                                return Err(de::Error::custom(
                                    "each $map entry must be a [key, value] pair",
                                ))
                            }
                        }
                    }
                    return Ok(JsonValue(Value::Map(decoded)));
                }
                _ => {}
            }
        }
        if let Some((key, _)) = pairs.iter().find(|(k, _)| k.starts_with('$')) {
            return Err(de::Error::custom(format!("unknown sentinel key `{key}`")));
        }
        Ok(JsonValue(Value::Embedded(Record::from_pairs(pairs))))
    }
}
