//! Executable data-level semantics for every taxonomy operation: an
//! in-memory database of per-type record collections, migrated in lockstep
//! with the schema updater.
//!
//! Records are flat field maps; graph relationship records additionally
//! carry their endpoint keys in the reserved `_out` and `_in` fields, which
//! never participate in variation classification.

mod classify;
mod io;
mod migrate;
mod values;

pub use classify::classify_variation;
pub use io::{load_database, record_to_canonical_string, store_database, DataIoError};
pub use migrate::{migrate, MigrateError, MigrationReport, OpReport};
pub use values::{cast_value, default_value, feature_default, try_cast, CastFailure};

use std::collections::BTreeMap;

use crate::evolution::{PreconditionViolation, UsingMismatch};

pub const RESERVED_OUT: &str = "_out";
pub const RESERVED_IN: &str = "_in";

/// Store family of a database: aggregate-based (documents, wide columns,
/// key-value) or graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StoreMode {
    Aggregate,
    Graph,
}

impl StoreMode {
    pub fn as_str(self) -> &'static str {
        match self {
            StoreMode::Aggregate => "AGGREGATE",
            StoreMode::Graph => "GRAPH",
        }
    }

    pub fn parse(text: &str) -> Option<StoreMode> {
        match text {
            "AGGREGATE" => Some(StoreMode::Aggregate),
            "GRAPH" => Some(StoreMode::Graph),
            _ => None,
        }
    }
}

/// Error-handling mode of a migration: strict aborts on data faults, lenient
/// substitutes defaults and counts warnings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Strict,
    Lenient,
}

/// A stored value.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Null,
    Str(String),
    Int(i64),
    Dbl(f64),
    Bool(bool),
    /// Milliseconds since the Unix epoch.
    Timestamp(i64),
    List(Vec<Value>),
    Set(Vec<Value>),
    Map(Vec<(Value, Value)>),
    Tuple(Vec<Value>),
    Embedded(Record),
}

/// One database object: a map from field name to value. Field order is
/// canonical (sorted), record identity is positional within its dataset.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Record {
    pub fields: BTreeMap<String, Value>,
}

impl Record {
    pub fn new() -> Record {
        Record::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (String, Value)>) -> Record {
        Record {
            fields: pairs.into_iter().collect(),
        }
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.fields.get(name)
    }

    pub fn set(&mut self, name: &str, value: Value) {
        self.fields.insert(name.to_string(), value);
    }

    pub fn remove(&mut self, name: &str) -> Option<Value> {
        self.fields.remove(name)
    }

    /// Field names that participate in classification: everything except the
    /// reserved endpoint fields.
    pub fn data_field_names(&self) -> impl Iterator<Item = &str> {
        self.fields
            .keys()
            .map(|k| k.as_str())
            .filter(|k| *k != RESERVED_OUT && *k != RESERVED_IN)
    }
}

/// All records of one schema type, in stable order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub type_name: String,
    pub records: Vec<Record>,
}

impl Dataset {
    pub fn new(type_name: &str) -> Dataset {
        Dataset {
            type_name: type_name.to_string(),
            records: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// An in-memory database: one dataset per schema-type name.
#[derive(Debug, Clone, PartialEq)]
pub struct Database {
    pub mode: StoreMode,
    pub collections: BTreeMap<String, Dataset>,
}

impl Database {
    pub fn new(mode: StoreMode) -> Database {
        Database {
            mode,
            collections: BTreeMap::new(),
        }
    }

    pub fn insert_dataset(&mut self, dataset: Dataset) {
        self.collections.insert(dataset.type_name.clone(), dataset);
    }

    pub fn dataset(&self, name: &str) -> Option<&Dataset> {
        self.collections.get(name)
    }

    pub fn dataset_mut(&mut self, name: &str) -> Option<&mut Dataset> {
        self.collections.get_mut(name)
    }

    pub fn record_count(&self) -> usize {
        self.collections.values().map(Dataset::len).sum()
    }
}

impl From<UsingMismatch> for MigrateError {
    fn from(e: UsingMismatch) -> MigrateError {
        MigrateError::Using(e)
    }
}

impl From<PreconditionViolation> for MigrateError {
    fn from(e: PreconditionViolation) -> MigrateError {
        MigrateError::Precondition(e)
    }
}
