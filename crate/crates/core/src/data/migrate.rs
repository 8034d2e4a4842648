//! The migration loop: each operation's data semantics executed against the
//! evolving schema, in source order, with per-operation accounting.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::evolution::{
    apply_op, apply_script, resolve_selector, FeatureKindTag, PreconditionViolation, SelectorMatch,
    UsingMismatch,
};
use crate::model::{Cardinality, DataType, Feature, Schema, SchemaType, TypeKind};
use crate::orion::{
    print_op, AggregateBody, ChangeOp, ChangeScript, FeatureSelector, JoinCondition, TypeFlavor,
};

use super::classify::classify_variation;
use super::values::{cast_value, default_record, default_value, feature_default};
use super::{Database, Dataset, Mode, Record, StoreMode, Value, RESERVED_IN, RESERVED_OUT};

#[derive(Debug, Error)]
pub enum MigrateError {
    #[error(transparent)]
    Using(UsingMismatch),
    #[error(transparent)]
    Precondition(PreconditionViolation),
    #[error("dataset `{name}` names no schema type")]
    UnknownDataset { name: String },
    #[error("relationship dataset `{name}` is not allowed in an aggregate-based database")]
    RelationshipDatasetInAggregateMode { name: String },
    #[error("{type_name} record {record}: relationship record lacks endpoint keys")]
    MissingEndpoints { type_name: String, record: usize },
    #[error("op {op_index}, {type_name} record {record}: cannot cast {value} to {target}")]
    Cast {
        op_index: usize,
        type_name: String,
        record: usize,
        value: String,
        target: String,
    },
    #[error("op {op_index}, {type_name} record {record}: join matched {found} source records, exactly one required")]
    JoinAmbiguity {
        op_index: usize,
        type_name: String,
        record: usize,
        found: usize,
    },
    #[error("op {op_index}, {type_name} record {record}: reference to `{target}` resolves to no record")]
    DanglingReference {
        op_index: usize,
        type_name: String,
        record: usize,
        target: String,
    },
    #[error("op {op_index}: type `{target}` has no key attribute{}", record_suffix(.record))]
    MissingKey {
        op_index: usize,
        target: String,
        record: Option<usize>,
    },
    #[error("op {op_index}: values of {type_name}.{attribute} are not unique (`{value}` repeats)")]
    UniquenessViolation {
        op_index: usize,
        type_name: String,
        attribute: String,
        value: String,
    },
    #[error("op {op_index}, {type_name} record {record}: cannot narrow a {found}-element value to a single one")]
    MultiplicityNarrowing {
        op_index: usize,
        type_name: String,
        record: usize,
        found: usize,
    },
    #[error("op {op_index}: dataset `{name}` already exists")]
    DatasetClash { op_index: usize, name: String },
}

fn record_suffix(record: &Option<usize>) -> String {
    match record {
        Some(r) => format!(" (record {r} lacks the key field)"),
        None => String::new(),
    }
}

/// Per-operation accounting of a migration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpReport {
    pub index: usize,
    pub op: String,
    /// Records modified in place.
    pub touched: u64,
    /// Records appended to any dataset.
    pub created: u64,
    /// Records removed from the database.
    pub deleted: u64,
    /// Lenient-mode substitutions.
    pub cast_warnings: u64,
}

impl OpReport {
    fn new(index: usize, op: String) -> OpReport {
        OpReport {
            index,
            op,
            touched: 0,
            created: 0,
            deleted: 0,
            cast_warnings: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MigrationReport {
    pub ops: Vec<OpReport>,
}

impl MigrationReport {
    pub fn total_deleted(&self) -> u64 {
        self.ops.iter().map(|o| o.deleted).sum()
    }

    pub fn total_warnings(&self) -> u64 {
        self.ops.iter().map(|o| o.cast_warnings).sum()
    }

    /// One line per operation: index, counters, operation text.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for op in &self.ops {
            let _ = writeln!(
                out,
                "{}\ttouched={}\tcreated={}\tdeleted={}\twarnings={}\t{}",
                op.index, op.touched, op.created, op.deleted, op.cast_warnings, op.op
            );
        }
        out
    }
}

/// Applies the data semantics of every operation in `script` to `db`,
/// evolving `schema` in lockstep. The input database must conform to the
/// schema's type list and the script must apply cleanly at schema level.
pub fn migrate(
    db: &Database,
    schema: &Schema,
    script: &ChangeScript,
    mode: Mode,
) -> Result<(Database, MigrationReport), MigrateError> {
    for (name, dataset) in &db.collections {
        let Some(t) = schema.schema_type(name) else {
            return Err(MigrateError::UnknownDataset { name: name.clone() });
        };
        if t.kind == TypeKind::Relationship {
            match db.mode {
                StoreMode::Aggregate => {
                    return Err(MigrateError::RelationshipDatasetInAggregateMode {
                        name: name.clone(),
                    })
                }
                StoreMode::Graph => {
                    for (i, r) in dataset.records.iter().enumerate() {
                        if r.get(RESERVED_OUT).is_none() || r.get(RESERVED_IN).is_none() {
                            return Err(MigrateError::MissingEndpoints {
                                type_name: name.clone(),
                                record: i,
                            });
                        }
                    }
                }
            }
        }
    }

    let outcome = apply_script(schema, script)?;
    if let Some((_, violation)) = outcome.failed_at {
        return Err(violation.into());
    }

    let mut db = db.clone();
    let mut current = schema.clone();
    let mut report = MigrationReport::default();
    for (index, op) in script.ops.iter().enumerate() {
        let mut r = OpReport::new(index, print_op(op));
        data_step(&mut db, &current, op, mode, index, &mut r)?;
        current = apply_op(&current, op).expect("validated by the dry run");
        report.ops.push(r);
    }
    Ok((db, report))
}

fn dataset_allowed(mode: StoreMode, kind: TypeKind) -> bool {
    mode == StoreMode::Graph || kind == TypeKind::Entity
}

fn flavor_type_kind(flavor: TypeFlavor) -> TypeKind {
    match flavor {
        TypeFlavor::Entity => TypeKind::Entity,
        TypeFlavor::Relationship => TypeKind::Relationship,
    }
}

fn data_step(
    db: &mut Database,
    schema: &Schema,
    op: &ChangeOp,
    mode: Mode,
    op_index: usize,
    report: &mut OpReport,
) -> Result<(), MigrateError> {
    match op {
        ChangeOp::AddType { flavor, name, .. } => {
            if dataset_allowed(db.mode, flavor_type_kind(*flavor)) {
                db.insert_dataset(Dataset::new(name));
            }
        }
        ChangeOp::DeleteType { name, .. } => {
            if let Some(ds) = db.collections.remove(name) {
                report.deleted += ds.len() as u64;
            }
        }
        ChangeOp::RenameType { name, new_name, .. } => {
            if let Some(mut ds) = db.collections.remove(name) {
                ds.type_name = new_name.clone();
                db.insert_dataset(ds);
            }
        }
        ChangeOp::ExtractType {
            flavor,
            name,
            features,
            new_name,
        } => {
            if dataset_allowed(db.mode, flavor_type_kind(*flavor)) {
                let projected = project_dataset(db, name, features, new_name, *flavor);
                report.created += projected.len() as u64;
                db.insert_dataset(projected);
            }
        }
        ChangeOp::SplitType {
            flavor,
            name,
            first_name,
            first_features,
            second_name,
            second_features,
        } => {
            if dataset_allowed(db.mode, flavor_type_kind(*flavor)) {
                let first = project_dataset(db, name, first_features, first_name, *flavor);
                let second = project_dataset(db, name, second_features, second_name, *flavor);
                report.created += (first.len() + second.len()) as u64;
                db.insert_dataset(first);
                db.insert_dataset(second);
                if let Some(ds) = db.collections.remove(name) {
                    report.deleted += ds.len() as u64;
                }
            }
        }
        ChangeOp::MergeTypes {
            flavor,
            first,
            second,
            new_name,
        } => {
            if dataset_allowed(db.mode, flavor_type_kind(*flavor)) {
                let mut records = Vec::new();
                if let Some(ds) = db.collections.remove(first) {
                    report.deleted += ds.len() as u64;
                    records.extend(ds.records);
                }
                if let Some(ds) = db.collections.remove(second) {
                    report.deleted += ds.len() as u64;
                    records.extend(ds.records);
                }
                report.created += records.len() as u64;
                db.insert_dataset(Dataset {
                    type_name: new_name.clone(),
                    records,
                });
            }
        }
        ChangeOp::DeleteVariation {
            type_name, var_id, ..
        } => {
            let Some(t) = schema.schema_type(type_name) else {
                return Ok(());
            };
            if let Some(ds) = db.dataset_mut(type_name) {
                let before = ds.len();
                let t = t.clone();
                ds.records
                    .retain(|r| classify_variation(r, &t) != Some(*var_id));
                report.deleted += (before - ds.len()) as u64;
            }
        }
        ChangeOp::AdaptVariation {
            type_name,
            source,
            target,
            ..
        } => {
            let Some(t) = schema.schema_type(type_name) else {
                return Ok(());
            };
            let target_features: Vec<Feature> = t
                .common_features
                .iter()
                .chain(t.variation(*target).map(|v| v.features.iter()).into_iter().flatten())
                .cloned()
                .collect();
            let member: BTreeSet<&str> =
                target_features.iter().map(|f| f.name.as_str()).collect();
            if let Some(ds) = db.dataset_mut(type_name) {
                for record in &mut ds.records {
                    if classify_variation(record, t) != Some(*source) {
                        continue;
                    }
                    let extra: Vec<String> = record
                        .data_field_names()
                        .filter(|n| !member.contains(n))
                        .map(|n| n.to_string())
                        .collect();
                    for name in extra {
                        record.remove(&name);
                    }
                    for f in &target_features {
                        if record.get(&f.name).is_none() {
                            record.set(&f.name, feature_default(schema, f));
                        }
                    }
                    report.touched += 1;
                }
            }
        }
        ChangeOp::UnionVariations { type_name, .. } => {
            let Some(t) = schema.schema_type(type_name) else {
                return Ok(());
            };
            let union_features: Vec<&Feature> = t.all_features();
            if let Some(ds) = db.dataset_mut(type_name) {
                for record in &mut ds.records {
                    let mut changed = false;
                    for f in &union_features {
                        if record.get(&f.name).is_none() {
                            record.set(&f.name, feature_default(schema, f));
                            changed = true;
                        }
                    }
                    if changed {
                        report.touched += 1;
                    }
                }
            }
        }
        ChangeOp::DeleteFeature { selector } => {
            for m in matches_for(schema, op, selector, FeatureKindTag::Any) {
                let scope = scope_indices(db, schema, &m);
                if let Some(ds) = db.dataset_mut(&m.type_name) {
                    for i in scope {
                        if ds.records[i].remove(&m.feature).is_some() {
                            report.touched += 1;
                        }
                    }
                }
            }
        }
        ChangeOp::RenameFeature { selector, new_name } => {
            for m in matches_for(schema, op, selector, FeatureKindTag::Any) {
                let scope = scope_indices(db, schema, &m);
                if let Some(ds) = db.dataset_mut(&m.type_name) {
                    for i in scope {
                        if let Some(v) = ds.records[i].remove(&m.feature) {
                            ds.records[i].set(new_name, v);
                            report.touched += 1;
                        }
                    }
                }
            }
        }
        ChangeOp::CopyFeature {
            source_type,
            source_feature,
            dest_type,
            dest_feature,
            condition,
        } => {
            copy_join(
                db, op_index, mode, source_type, source_feature, dest_type, dest_feature,
                condition, report,
            )?;
        }
        ChangeOp::MoveFeature {
            source_type,
            source_feature,
            dest_type,
            dest_feature,
            condition,
        } => {
            copy_join(
                db, op_index, mode, source_type, source_feature, dest_type, dest_feature,
                condition, report,
            )?;
            if let Some(ds) = db.dataset_mut(source_type) {
                for record in &mut ds.records {
                    if record.remove(source_feature).is_some() {
                        report.touched += 1;
                    }
                }
            }
        }
        ChangeOp::NestFeatures {
            selector,
            aggregate,
        } => {
            for m in matches_for(schema, op, selector, FeatureKindTag::Any) {
                if !nest_applicable(schema, &m.type_name, aggregate, &m.feature) {
                    continue;
                }
                let scope = scope_indices(db, schema, &m);
                if let Some(ds) = db.dataset_mut(&m.type_name) {
                    for i in scope {
                        let record = &mut ds.records[i];
                        if let Some(v) = record.remove(&m.feature) {
                            nest_into(record, aggregate, &m.feature, v);
                            report.touched += 1;
                        }
                    }
                }
            }
        }
        ChangeOp::UnnestFeatures { selector } => {
            for type_name in selector_type_names(schema, selector) {
                for dotted in &selector.features {
                    let Some((aggregate, feature)) = dotted.split_once('.') else {
                        continue;
                    };
                    if !unnest_applicable(schema, &type_name, aggregate, feature) {
                        continue;
                    }
                    if let Some(ds) = db.dataset_mut(&type_name) {
                        for record in &mut ds.records {
                            if let Some(v) = unnest_from(record, aggregate, feature) {
                                record.set(feature, v);
                                report.touched += 1;
                            }
                        }
                    }
                }
            }
        }
        ChangeOp::AddAttribute {
            type_name,
            name,
            data_type,
        } => {
            if let Some(ds) = db.dataset_mut(type_name) {
                for record in &mut ds.records {
                    record.set(name, default_value(data_type));
                    report.touched += 1;
                }
            }
        }
        ChangeOp::CastAttribute { selector, to } => {
            cast_matches(db, schema, op, selector, FeatureKindTag::Attribute, to, mode, op_index, report)?;
        }
        ChangeOp::PromoteAttribute { selector } => {
            for m in matches_for(schema, op, selector, FeatureKindTag::Attribute) {
                let entity = schema
                    .schema_type(&m.type_name)
                    .is_some_and(|t| t.kind == TypeKind::Entity);
                if !entity {
                    continue;
                }
                if let Some(ds) = db.dataset(&m.type_name) {
                    let mut seen: BTreeSet<String> = BTreeSet::new();
                    for record in &ds.records {
                        let value = record.get(&m.feature).unwrap_or(&Value::Null);
                        let key = super::io::value_to_json(value).to_string();
                        if !seen.insert(key.clone()) {
                            return Err(MigrateError::UniquenessViolation {
                                op_index,
                                type_name: m.type_name.clone(),
                                attribute: m.feature.clone(),
                                value: key,
                            });
                        }
                    }
                }
            }
        }
        ChangeOp::DemoteAttribute { .. } => {}
        ChangeOp::AddReference {
            type_name,
            name,
            cardinality,
            target,
            condition,
            ..
        } => {
            add_reference_data(
                db, schema, op_index, mode, type_name, name, *cardinality, target, condition,
                report,
            )?;
        }
        ChangeOp::CastReference { selector, to } => {
            cast_reference_data(db, schema, op, selector, to, mode, op_index, report)?;
        }
        ChangeOp::MultReference {
            selector,
            cardinality,
        } => {
            mult_data(
                db, schema, op, selector, FeatureKindTag::Reference, *cardinality, mode, op_index,
                report,
            )?;
        }
        ChangeOp::MorphReference { selector, new_name } => {
            morph_reference_data(db, schema, op, selector, new_name, mode, op_index, report)?;
        }
        ChangeOp::AddAggregate {
            type_name,
            name,
            body,
            cardinality,
        } => {
            let default = aggregate_add_default(schema, body, *cardinality);
            if let Some(ds) = db.dataset_mut(type_name) {
                for record in &mut ds.records {
                    record.set(name, default.clone());
                    report.touched += 1;
                }
            }
        }
        ChangeOp::MultAggregate {
            selector,
            cardinality,
        } => {
            mult_data(
                db, schema, op, selector, FeatureKindTag::Aggregate, *cardinality, mode, op_index,
                report,
            )?;
        }
        ChangeOp::MorphAggregate { selector, new_name } => {
            morph_aggregate_data(db, schema, op, selector, new_name, mode, op_index, report)?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// selector plumbing
// ---------------------------------------------------------------------------

/// Schema-level matches of a selector. The schema dry run has already
/// validated the operation, so resolution failures cannot occur here.
fn matches_for(
    schema: &Schema,
    op: &ChangeOp,
    selector: &FeatureSelector,
    kind: FeatureKindTag,
) -> Vec<SelectorMatch> {
    resolve_selector(schema, op, selector, kind).unwrap_or_default()
}

fn selector_type_names(schema: &Schema, selector: &FeatureSelector) -> Vec<String> {
    match &selector.target {
        crate::orion::TypeTarget::Named(n) => vec![n.clone()],
        crate::orion::TypeTarget::Wildcard => {
            schema.types.iter().map(|t| t.name.clone()).collect()
        }
    }
}

/// Indices of the records a match applies to: all records for a type-wide
/// match, otherwise the records classifying into one of the scoped
/// variations.
fn scope_indices(db: &Database, schema: &Schema, m: &SelectorMatch) -> Vec<usize> {
    let Some(ds) = db.dataset(&m.type_name) else {
        return Vec::new();
    };
    match &m.variations {
        None => (0..ds.len()).collect(),
        Some(ids) => {
            let Some(t) = schema.schema_type(&m.type_name) else {
                return Vec::new();
            };
            ds.records
                .iter()
                .enumerate()
                .filter(|(_, r)| {
                    classify_variation(r, t).is_some_and(|v| ids.contains(&v))
                })
                .map(|(i, _)| i)
                .collect()
        }
    }
}

fn nest_applicable(schema: &Schema, type_name: &str, aggregate: &str, feature: &str) -> bool {
    let Some(t) = schema.schema_type(type_name) else {
        return false;
    };
    if t.kind != TypeKind::Entity || feature == aggregate {
        return false;
    }
    let Some(ag) = t.feature(aggregate).and_then(|f| f.as_aggregate()) else {
        return false;
    };
    schema
        .schema_type(&ag.target)
        .is_some_and(|e2| !e2.has_feature(feature))
}

fn unnest_applicable(schema: &Schema, type_name: &str, aggregate: &str, feature: &str) -> bool {
    let Some(t) = schema.schema_type(type_name) else {
        return false;
    };
    if t.kind != TypeKind::Entity || t.has_feature(feature) {
        return false;
    }
    let Some(ag) = t.feature(aggregate).and_then(|f| f.as_aggregate()) else {
        return false;
    };
    schema
        .schema_type(&ag.target)
        .is_some_and(|e2| e2.has_feature(feature))
}

fn nest_into(record: &mut Record, aggregate: &str, feature: &str, value: Value) {
    match record.fields.get_mut(aggregate) {
        Some(Value::Embedded(inner)) => {
            inner.set(feature, value);
        }
        Some(Value::List(items)) => {
            for item in items {
                if let Value::Embedded(inner) = item {
                    inner.set(feature, value.clone());
                }
            }
        }
        Some(Value::Null) | None => {
            let mut inner = Record::new();
            inner.set(feature, value);
            record.set(aggregate, Value::Embedded(inner));
        }
        Some(_) => {
            // A non-embedded value in aggregate position does not conform to
            // the schema; the field is left in place.
            record.set(feature, value);
        }
    }
}

fn unnest_from(record: &mut Record, aggregate: &str, feature: &str) -> Option<Value> {
    match record.fields.get_mut(aggregate) {
        Some(Value::Embedded(inner)) => inner.remove(feature),
        Some(Value::List(items)) => {
            let mut taken = None;
            for item in items {
                if let Value::Embedded(inner) = item {
                    let v = inner.remove(feature);
                    if taken.is_none() {
                        taken = v;
                    }
                }
            }
            taken
        }
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// joins, keys, casts
// ---------------------------------------------------------------------------

fn key_attr_name(t: &SchemaType) -> Option<String> {
    t.all_features()
        .into_iter()
        .find(|f| f.is_key())
        .map(|f| f.name.clone())
}

#[allow(clippy::too_many_arguments)]
fn copy_join(
    db: &mut Database,
    op_index: usize,
    mode: Mode,
    source_type: &str,
    source_feature: &str,
    dest_type: &str,
    dest_feature: &str,
    condition: &JoinCondition,
    report: &mut OpReport,
) -> Result<(), MigrateError> {
    let source_records: Vec<Record> = db
        .dataset(source_type)
        .map(|ds| ds.records.clone())
        .unwrap_or_default();
    let Some(dest) = db.dataset_mut(dest_type) else {
        return Ok(());
    };
    for (i, record) in dest.records.iter_mut().enumerate() {
        let matches: Vec<&Record> = match record.get(&condition.target_feature) {
            Some(key) => source_records
                .iter()
                .filter(|s| s.get(&condition.source_feature) == Some(key))
                .collect(),
            None => Vec::new(),
        };
        let value = match matches.len() {
            0 => Value::Null,
            1 => matches[0].get(source_feature).cloned().unwrap_or(Value::Null),
            n => {
                if mode == Mode::Strict {
                    return Err(MigrateError::JoinAmbiguity {
                        op_index,
                        type_name: dest_type.to_string(),
                        record: i,
                        found: n,
                    });
                }
                report.cast_warnings += 1;
                matches[0].get(source_feature).cloned().unwrap_or(Value::Null)
            }
        };
        record.set(dest_feature, value);
        report.touched += 1;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cast_matches(
    db: &mut Database,
    schema: &Schema,
    op: &ChangeOp,
    selector: &FeatureSelector,
    kind: FeatureKindTag,
    to: &DataType,
    mode: Mode,
    op_index: usize,
    report: &mut OpReport,
) -> Result<(), MigrateError> {
    for m in matches_for(schema, op, selector, kind) {
        let scope = scope_indices(db, schema, &m);
        if let Some(ds) = db.dataset_mut(&m.type_name) {
            for i in scope {
                let record = &mut ds.records[i];
                let Some(current) = record.get(&m.feature) else {
                    continue;
                };
                if matches!(current, Value::Null) {
                    continue;
                }
                let cast = cast_value(current, to, mode, &mut report.cast_warnings).map_err(
                    |e| MigrateError::Cast {
                        op_index,
                        type_name: m.type_name.clone(),
                        record: i,
                        value: e.value,
                        target: e.target,
                    },
                )?;
                record.set(&m.feature, cast);
                report.touched += 1;
            }
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cast_reference_data(
    db: &mut Database,
    schema: &Schema,
    op: &ChangeOp,
    selector: &FeatureSelector,
    to: &DataType,
    mode: Mode,
    op_index: usize,
    report: &mut OpReport,
) -> Result<(), MigrateError> {
    for m in matches_for(schema, op, selector, FeatureKindTag::Reference) {
        // In a graph store the stored key values live on the edge dataset's
        // `_in` endpoints when one exists for this reference.
        let edge_dataset = db.mode == StoreMode::Graph
            && db
                .dataset(&m.feature)
                .is_some_and(|ds| !schema.has_type(&ds.type_name));
        if edge_dataset {
            let ds = db.dataset_mut(&m.feature).unwrap();
            for (i, record) in ds.records.iter_mut().enumerate() {
                let Some(current) = record.get(RESERVED_IN) else {
                    continue;
                };
                if matches!(current, Value::Null) {
                    continue;
                }
                let cast = cast_value(current, to, mode, &mut report.cast_warnings).map_err(
                    |e| MigrateError::Cast {
                        op_index,
                        type_name: m.feature.clone(),
                        record: i,
                        value: e.value,
                        target: e.target,
                    },
                )?;
                record.set(RESERVED_IN, cast);
                report.touched += 1;
            }
            continue;
        }
        let scope = scope_indices(db, schema, &m);
        if let Some(ds) = db.dataset_mut(&m.type_name) {
            for i in scope {
                let record = &mut ds.records[i];
                let Some(current) = record.get(&m.feature).cloned() else {
                    continue;
                };
                let cast = match current {
                    Value::Null => continue,
                    Value::List(items) => {
                        let mut out = Vec::with_capacity(items.len());
                        for item in items {
                            if matches!(item, Value::Null) {
                                out.push(item);
                                continue;
                            }
                            out.push(
                                cast_value(&item, to, mode, &mut report.cast_warnings).map_err(
                                    |e| MigrateError::Cast {
                                        op_index,
                                        type_name: m.type_name.clone(),
                                        record: i,
                                        value: e.value,
                                        target: e.target,
                                    },
                                )?,
                            );
                        }
                        Value::List(out)
                    }
                    other => cast_value(&other, to, mode, &mut report.cast_warnings).map_err(
                        |e| MigrateError::Cast {
                            op_index,
                            type_name: m.type_name.clone(),
                            record: i,
                            value: e.value,
                            target: e.target,
                        },
                    )?,
                };
                record.set(&m.feature, cast);
                report.touched += 1;
            }
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn mult_data(
    db: &mut Database,
    schema: &Schema,
    op: &ChangeOp,
    selector: &FeatureSelector,
    kind: FeatureKindTag,
    cardinality: Cardinality,
    mode: Mode,
    op_index: usize,
    report: &mut OpReport,
) -> Result<(), MigrateError> {
    for m in matches_for(schema, op, selector, kind) {
        if kind == FeatureKindTag::Aggregate {
            let entity = schema
                .schema_type(&m.type_name)
                .is_some_and(|t| t.kind == TypeKind::Entity);
            if !entity {
                continue;
            }
        }
        let scope = scope_indices(db, schema, &m);
        if let Some(ds) = db.dataset_mut(&m.type_name) {
            for i in scope {
                let record = &mut ds.records[i];
                let Some(current) = record.get(&m.feature).cloned() else {
                    continue;
                };
                let next = match (cardinality.is_many(), current) {
                    (_, Value::Null) => continue,
                    // Widening wraps a single value into a singleton list.
                    (true, v @ Value::List(_)) => v,
                    (true, v) => Value::List(vec![v]),
                    // Narrowing takes the sole element.
                    (false, Value::List(items)) => match items.len() {
                        0 => Value::Null,
                        1 => items.into_iter().next().unwrap(),
                        n => {
                            if mode == Mode::Strict {
                                return Err(MigrateError::MultiplicityNarrowing {
                                    op_index,
                                    type_name: m.type_name.clone(),
                                    record: i,
                                    found: n,
                                });
                            }
                            report.cast_warnings += 1;
                            items.into_iter().next().unwrap()
                        }
                    },
                    (false, v) => v,
                };
                if record.get(&m.feature) != Some(&next) {
                    record.set(&m.feature, next);
                    report.touched += 1;
                }
            }
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn add_reference_data(
    db: &mut Database,
    schema: &Schema,
    op_index: usize,
    mode: Mode,
    type_name: &str,
    name: &str,
    cardinality: Cardinality,
    target: &str,
    condition: &Option<JoinCondition>,
    report: &mut OpReport,
) -> Result<(), MigrateError> {
    if db.mode == StoreMode::Graph {
        return add_reference_edges(
            db, schema, op_index, mode, type_name, name, target, condition, report,
        );
    }
    let target_key = schema.schema_type(target).and_then(|t| key_attr_name(t));
    let target_records: Vec<Record> = db
        .dataset(target)
        .map(|ds| ds.records.clone())
        .unwrap_or_default();
    let Some(ds) = db.dataset_mut(type_name) else {
        return Ok(());
    };
    for (i, record) in ds.records.iter_mut().enumerate() {
        let value = match condition {
            None => Value::Null,
            Some(cond) => {
                let matches: Vec<&Record> = match record.get(&cond.target_feature) {
                    Some(key) => target_records
                        .iter()
                        .filter(|t| t.get(&cond.source_feature) == Some(key))
                        .collect(),
                    None => Vec::new(),
                };
                if matches.is_empty() {
                    Value::Null
                } else {
                    let Some(key_name) = &target_key else {
                        if mode == Mode::Strict {
                            return Err(MigrateError::MissingKey {
                                op_index,
                                target: target.to_string(),
                                record: None,
                            });
                        }
                        report.cast_warnings += 1;
                        record.set(name, Value::Null);
                        report.touched += 1;
                        continue;
                    };
                    let keys: Vec<Value> = matches
                        .iter()
                        .map(|t| t.get(key_name).cloned().unwrap_or(Value::Null))
                        .collect();
                    if cardinality.is_many() {
                        Value::List(keys)
                    } else if keys.len() == 1 {
                        keys.into_iter().next().unwrap()
                    } else if mode == Mode::Strict {
                        return Err(MigrateError::JoinAmbiguity {
                            op_index,
                            type_name: type_name.to_string(),
                            record: i,
                            found: keys.len(),
                        });
                    } else {
                        report.cast_warnings += 1;
                        keys.into_iter().next().unwrap()
                    }
                }
            }
        };
        record.set(name, value);
        report.touched += 1;
    }
    Ok(())
}

/// Graph-mode reference addition: edges land in a relationship dataset named
/// after the reference, carrying `_out`/`_in` endpoint keys.
#[allow(clippy::too_many_arguments)]
fn add_reference_edges(
    db: &mut Database,
    schema: &Schema,
    op_index: usize,
    mode: Mode,
    type_name: &str,
    name: &str,
    target: &str,
    condition: &Option<JoinCondition>,
    report: &mut OpReport,
) -> Result<(), MigrateError> {
    if db.collections.contains_key(name) {
        return Err(MigrateError::DatasetClash {
            op_index,
            name: name.to_string(),
        });
    }
    let mut edges = Dataset::new(name);
    if let Some(cond) = condition {
        let source_key = schema
            .schema_type(type_name)
            .and_then(|t| key_attr_name(t));
        let target_key = schema.schema_type(target).and_then(|t| key_attr_name(t));
        let (Some(source_key), Some(target_key)) = (source_key, target_key) else {
            if mode == Mode::Strict {
                return Err(MigrateError::MissingKey {
                    op_index,
                    target: target.to_string(),
                    record: None,
                });
            }
            report.cast_warnings += 1;
            db.insert_dataset(edges);
            return Ok(());
        };
        let target_records: Vec<Record> = db
            .dataset(target)
            .map(|ds| ds.records.clone())
            .unwrap_or_default();
        if let Some(ds) = db.dataset(type_name) {
            for record in &ds.records {
                let Some(join_value) = record.get(&cond.target_feature) else {
                    continue;
                };
                let out_key = record.get(&source_key).cloned().unwrap_or(Value::Null);
                for matched in target_records
                    .iter()
                    .filter(|t| t.get(&cond.source_feature) == Some(join_value))
                {
                    let in_key = matched.get(&target_key).cloned().unwrap_or(Value::Null);
                    let mut edge = Record::new();
                    edge.set(RESERVED_OUT, out_key.clone());
                    edge.set(RESERVED_IN, in_key);
                    edges.records.push(edge);
                    report.created += 1;
                }
            }
        }
    }
    db.insert_dataset(edges);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn morph_reference_data(
    db: &mut Database,
    schema: &Schema,
    op: &ChangeOp,
    selector: &FeatureSelector,
    new_name: &Option<String>,
    mode: Mode,
    op_index: usize,
    report: &mut OpReport,
) -> Result<(), MigrateError> {
    for m in matches_for(schema, op, selector, FeatureKindTag::Reference) {
        let Some(rf) = schema
            .schema_type(&m.type_name)
            .and_then(|t| t.feature(&m.feature))
            .and_then(|f| f.as_reference())
            .cloned()
        else {
            continue;
        };
        let field = new_name.clone().unwrap_or_else(|| m.feature.clone());

        // Graph mode: consume the reference's edge dataset when present.
        if db.mode == StoreMode::Graph {
            if let Some(edges) = db.collections.get(&m.feature) {
                if !schema.has_type(&m.feature) {
                    let edges = edges.clone();
                    db.collections.remove(&m.feature);
                    morph_via_edges(
                        db, schema, op_index, mode, &m, &rf.target, &field, &edges,
                        rf.cardinality, report,
                    )?;
                    continue;
                }
            }
        }

        let target_key = schema
            .schema_type(&rf.target)
            .and_then(|t| key_attr_name(t));
        let target_records: Vec<Record> = db
            .dataset(&rf.target)
            .map(|ds| ds.records.clone())
            .unwrap_or_default();
        let scope = scope_indices(db, schema, &m);
        let Some(ds) = db.dataset_mut(&m.type_name) else {
            continue;
        };
        for i in scope {
            let record = &mut ds.records[i];
            let Some(current) = record.remove(&m.feature) else {
                continue;
            };
            let embedded = match &current {
                Value::Null => Value::Null,
                Value::List(keys) => {
                    let mut out = Vec::new();
                    for key in keys {
                        out.push(dereference(
                            &target_records,
                            &target_key,
                            key,
                            &m,
                            &rf.target,
                            op_index,
                            i,
                            mode,
                            report,
                        )?);
                    }
                    Value::List(out)
                }
                key => dereference(
                    &target_records,
                    &target_key,
                    key,
                    &m,
                    &rf.target,
                    op_index,
                    i,
                    mode,
                    report,
                )?,
            };
            record.set(&field, embedded);
            report.touched += 1;
        }
    }
    Ok(())
}

/// Resolves one stored key against the target dataset and returns an
/// embedded copy of the referenced record.
#[allow(clippy::too_many_arguments)]
fn dereference(
    target_records: &[Record],
    target_key: &Option<String>,
    key: &Value,
    m: &SelectorMatch,
    target: &str,
    op_index: usize,
    record: usize,
    mode: Mode,
    report: &mut OpReport,
) -> Result<Value, MigrateError> {
    if matches!(key, Value::Null) {
        return Ok(Value::Null);
    }
    let Some(key_name) = target_key else {
        if mode == Mode::Strict {
            return Err(MigrateError::MissingKey {
                op_index,
                target: target.to_string(),
                record: Some(record),
            });
        }
        report.cast_warnings += 1;
        return Ok(Value::Null);
    };
    match target_records
        .iter()
        .find(|t| t.get(key_name) == Some(key))
    {
        Some(found) => Ok(Value::Embedded(found.clone())),
        None => {
            if mode == Mode::Strict {
                Err(MigrateError::DanglingReference {
                    op_index,
                    type_name: m.type_name.clone(),
                    record,
                    target: target.to_string(),
                })
            } else {
                report.cast_warnings += 1;
                Ok(Value::Null)
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn morph_via_edges(
    db: &mut Database,
    schema: &Schema,
    op_index: usize,
    mode: Mode,
    m: &SelectorMatch,
    target: &str,
    field: &str,
    edges: &Dataset,
    cardinality: Cardinality,
    report: &mut OpReport,
) -> Result<(), MigrateError> {
    let source_key = schema
        .schema_type(&m.type_name)
        .and_then(|t| key_attr_name(t));
    let target_key = schema.schema_type(target).and_then(|t| key_attr_name(t));
    let target_records: Vec<Record> = db
        .dataset(target)
        .map(|ds| ds.records.clone())
        .unwrap_or_default();
    let Some(ds) = db.dataset_mut(&m.type_name) else {
        return Ok(());
    };
    for (i, record) in ds.records.iter_mut().enumerate() {
        let Some(source_key_name) = &source_key else {
            if mode == Mode::Strict {
                return Err(MigrateError::MissingKey {
                    op_index,
                    target: m.type_name.clone(),
                    record: Some(i),
                });
            }
            report.cast_warnings += 1;
            record.set(field, Value::Null);
            report.touched += 1;
            continue;
        };
        let my_key = record.get(source_key_name).cloned().unwrap_or(Value::Null);
        let mut embedded = Vec::new();
        for edge in edges.records.iter().filter(|e| e.get(RESERVED_OUT) == Some(&my_key)) {
            let in_key = edge.get(RESERVED_IN).cloned().unwrap_or(Value::Null);
            embedded.push(dereference(
                &target_records,
                &target_key,
                &in_key,
                m,
                target,
                op_index,
                i,
                mode,
                report,
            )?);
        }
        let value = if cardinality.is_many() {
            Value::List(embedded)
        } else {
            match embedded.len() {
                0 => Value::Null,
                1 => embedded.into_iter().next().unwrap(),
                n => {
                    if mode == Mode::Strict {
                        return Err(MigrateError::JoinAmbiguity {
                            op_index,
                            type_name: m.type_name.clone(),
                            record: i,
                            found: n,
                        });
                    }
                    report.cast_warnings += 1;
                    embedded.into_iter().next().unwrap()
                }
            }
        };
        record.set(field, value);
        report.touched += 1;
    }
    Ok(())
}

fn aggregate_add_default(
    schema: &Schema,
    body: &AggregateBody,
    cardinality: Cardinality,
) -> Value {
    if cardinality.lower() == 0 {
        return Value::Null;
    }
    let embedded = match body {
        AggregateBody::Existing { target } => default_record(schema, target, 1),
        AggregateBody::Inline { fields, .. } => {
            let mut record = Record::new();
            for f in fields {
                record.set(&f.name, feature_default(schema, f));
            }
            record
        }
    };
    if cardinality.is_many() {
        Value::List(vec![Value::Embedded(embedded)])
    } else {
        Value::Embedded(embedded)
    }
}

#[allow(clippy::too_many_arguments)]
fn morph_aggregate_data(
    db: &mut Database,
    schema: &Schema,
    op: &ChangeOp,
    selector: &FeatureSelector,
    new_name: &Option<String>,
    mode: Mode,
    op_index: usize,
    report: &mut OpReport,
) -> Result<(), MigrateError> {
    for m in matches_for(schema, op, selector, FeatureKindTag::Aggregate) {
        let Some(t) = schema.schema_type(&m.type_name) else {
            continue;
        };
        if t.kind != TypeKind::Entity {
            continue;
        }
        let Some(ag) = t.feature(&m.feature).and_then(|f| f.as_aggregate()).cloned() else {
            continue;
        };
        let field = new_name.clone().unwrap_or_else(|| m.feature.clone());
        let target_key = schema.schema_type(&ag.target).and_then(|t| key_attr_name(t));

        let Some(key_name) = target_key else {
            if mode == Mode::Strict {
                return Err(MigrateError::MissingKey {
                    op_index,
                    target: ag.target.clone(),
                    record: None,
                });
            }
            // Without a key there is nothing to hoist against; embeddings
            // are replaced by Null.
            let scope = scope_indices(db, schema, &m);
            if let Some(ds) = db.dataset_mut(&m.type_name) {
                for i in scope {
                    let record = &mut ds.records[i];
                    if record.remove(&m.feature).is_some() {
                        report.cast_warnings += 1;
                        record.set(&field, Value::Null);
                        report.touched += 1;
                    }
                }
            }
            continue;
        };

        if db.dataset(&ag.target).is_none() {
            db.insert_dataset(Dataset::new(&ag.target));
        }
        let mut fresh_counter: u64 = 0;
        let scope = scope_indices(db, schema, &m);

        // Hoisting appends to the target dataset while iterating the source;
        // indices are resolved up front and records edited one at a time.
        for i in scope {
            let current = {
                let ds = db.dataset_mut(&m.type_name).unwrap();
                ds.records[i].remove(&m.feature)
            };
            let Some(current) = current else { continue };
            let replacement = match current {
                Value::Null => Value::Null,
                Value::List(items) => {
                    let mut keys = Vec::new();
                    for item in items {
                        keys.push(hoist_embedded(
                            db,
                            &ag.target,
                            key_name.as_str(),
                            item,
                            op_index,
                            &m.type_name,
                            i,
                            mode,
                            &mut fresh_counter,
                            report,
                        )?);
                    }
                    Value::List(keys)
                }
                item => hoist_embedded(
                    db,
                    &ag.target,
                    key_name.as_str(),
                    item,
                    op_index,
                    &m.type_name,
                    i,
                    mode,
                    &mut fresh_counter,
                    report,
                )?,
            };
            let ds = db.dataset_mut(&m.type_name).unwrap();
            ds.records[i].set(&field, replacement);
            report.touched += 1;
        }
    }
    Ok(())
}

/// Moves one embedded record into the target dataset (deduplicated by key)
/// and returns the key value that replaces the embedding.
#[allow(clippy::too_many_arguments)]
fn hoist_embedded(
    db: &mut Database,
    target: &str,
    key_name: &str,
    value: Value,
    op_index: usize,
    type_name: &str,
    record: usize,
    mode: Mode,
    fresh_counter: &mut u64,
    report: &mut OpReport,
) -> Result<Value, MigrateError> {
    let Value::Embedded(mut embedded) = value else {
        // Non-embedded values (including Null) pass through unchanged.
        return Ok(value);
    };
    let key = match embedded.get(key_name) {
        Some(k) => k.clone(),
        None => {
            if mode == Mode::Strict {
                return Err(MigrateError::MissingKey {
                    op_index,
                    target: target.to_string(),
                    record: Some(record),
                });
            }
            report.cast_warnings += 1;
            let fresh = fresh_key(db, target, key_name, type_name, fresh_counter);
            embedded.set(key_name, fresh.clone());
            fresh
        }
    };
    let ds = db.dataset_mut(target).unwrap();
    let exists = ds.records.iter().any(|r| r.get(key_name) == Some(&key));
    if !exists {
        ds.records.push(embedded);
        report.created += 1;
    }
    Ok(key)
}

fn fresh_key(
    db: &Database,
    target: &str,
    key_name: &str,
    type_name: &str,
    counter: &mut u64,
) -> Value {
    let ds = db.dataset(target);
    loop {
        *counter += 1;
        let candidate = Value::Str(format!("{type_name}_gen_{counter}"));
        let taken = ds.is_some_and(|ds| {
            ds.records.iter().any(|r| r.get(key_name) == Some(&candidate))
        });
        if !taken {
            return candidate;
        }
    }
}

fn project_dataset(
    db: &Database,
    source: &str,
    feature_names: &[String],
    new_name: &str,
    flavor: TypeFlavor,
) -> Dataset {
    let keep: BTreeSet<&str> = feature_names.iter().map(|s| s.as_str()).collect();
    let mut out = Dataset::new(new_name);
    if let Some(ds) = db.dataset(source) {
        for record in &ds.records {
            let mut projected = Record::new();
            for (name, value) in &record.fields {
                let reserved = name == RESERVED_OUT || name == RESERVED_IN;
                if keep.contains(name.as_str())
                    || (reserved && flavor == TypeFlavor::Relationship)
                {
                    projected.set(name, value.clone());
                }
            }
            out.records.push(projected);
        }
    }
    out
}
