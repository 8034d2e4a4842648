//! Document-store dialect: updateMany commands for in-place changes,
//! aggregation pipelines for anything that joins or writes out collections,
//! and explicit markers for key-flag operations the store has no concept
//! for.

use crate::data::{feature_default, Value};
use crate::evolution::{apply_op, apply_script, resolve_selector, FeatureKindTag, SelectorMatch};
use crate::model::{DataType, Feature, Schema, SchemaType, TypeKind};
use crate::orion::{
    print_op, AggregateBody, ChangeOp, ChangeScript, FeatureSelector, TypeFlavor,
};

use super::{CodegenError, GeneratedScript, Statement, Target, UpdateParts};

/// Conversion codes of the document dialect's `$convert`.
fn convert_code(t: &DataType) -> i32 {
    match t {
        DataType::Double => 1,
        DataType::String | DataType::Identifier => 2,
        DataType::Boolean => 8,
        DataType::Timestamp => 9,
        DataType::Integer => 16,
        _ => 2,
    }
}

pub fn generate_document(
    schema: &Schema,
    script: &ChangeScript,
) -> Result<GeneratedScript, CodegenError> {
    let outcome = apply_script(schema, script)?;
    if let Some((_, violation)) = outcome.failed_at {
        return Err(violation.into());
    }

    let db = schema.name.clone();
    let mut current = schema.clone();
    let mut statements = Vec::new();
    for (index, op) in script.ops.iter().enumerate() {
        emit(&mut statements, &db, &current, op, index);
        current = apply_op(&current, op).expect("validated by the dry run");
    }
    Ok(GeneratedScript {
        target: Target::Document,
        statements,
    })
}

fn emit(out: &mut Vec<Statement>, db: &str, schema: &Schema, op: &ChangeOp, index: usize) {
    let op_text = print_op(op);
    let comment = format!("// {op_text}");
    let unsupported = |out: &mut Vec<Statement>| {
        out.push(Statement::unsupported(Target::Document, index, &op_text));
    };

    match op {
        ChangeOp::AddType {
            flavor,
            name,
            features,
            ..
        } => {
            if *flavor == TypeFlavor::Relationship {
                return unsupported(out);
            }
            out.push(Statement::command(
                format!("{comment}\n{db}.createCollection(\"{name}\")"),
                index,
            ));
            let fields = features
                .iter()
                .map(|f| format!("{}: {}", quoted(&f.name), literal(&feature_default(schema, f))))
                .collect::<Vec<_>>()
                .join(", ");
            out.push(Statement::stackable(
                UpdateParts {
                    database: db.to_string(),
                    collection: name.clone(),
                    filter: "{}".to_string(),
                    update: format!("[{{$addFields: {{{fields}}}}}]"),
                    comment,
                },
                index,
            ));
        }
        ChangeOp::DeleteType { flavor, name } => {
            if *flavor == TypeFlavor::Relationship {
                return unsupported(out);
            }
            out.push(Statement::command(
                format!("{comment}\n{db}.{name}.drop()"),
                index,
            ));
        }
        ChangeOp::RenameType {
            flavor,
            name,
            new_name,
        } => {
            if *flavor == TypeFlavor::Relationship {
                return unsupported(out);
            }
            out.push(Statement::command(
                format!("{comment}\n{db}.{name}.renameCollection(\"{new_name}\")"),
                index,
            ));
        }
        ChangeOp::ExtractType {
            flavor,
            name,
            features,
            new_name,
        } => {
            if *flavor == TypeFlavor::Relationship {
                return unsupported(out);
            }
            out.push(Statement::command(
                format!(
                    "{comment}\n{db}.{name}.aggregate([{{$project: {{{}}}}}, {{$out: \"{new_name}\"}}])",
                    project_fields(features)
                ),
                index,
            ));
        }
        ChangeOp::SplitType {
            flavor,
            name,
            first_name,
            first_features,
            second_name,
            second_features,
        } => {
            if *flavor == TypeFlavor::Relationship {
                return unsupported(out);
            }
            for (part, fs) in [(first_name, first_features), (second_name, second_features)] {
                out.push(Statement::command(
                    format!(
                        "{comment}\n{db}.{name}.aggregate([{{$project: {{{}}}}}, {{$out: \"{part}\"}}])",
                        project_fields(fs)
                    ),
                    index,
                ));
            }
            out.push(Statement::command(
                format!("{comment}\n{db}.{name}.drop()"),
                index,
            ));
        }
        ChangeOp::MergeTypes {
            flavor,
            first,
            second,
            new_name,
        } => {
            if *flavor == TypeFlavor::Relationship {
                return unsupported(out);
            }
            for source in [first, second] {
                out.push(Statement::command(
                    format!(
                        "{comment}\n{db}.{source}.aggregate([{{$merge: {{into: \"{new_name}\"}}}}])"
                    ),
                    index,
                ));
            }
            for source in [first, second] {
                out.push(Statement::command(
                    format!("{comment}\n{db}.{source}.drop()"),
                    index,
                ));
            }
        }
        ChangeOp::DeleteVariation {
            flavor,
            type_name,
            var_id,
        } => {
            if *flavor == TypeFlavor::Relationship {
                return unsupported(out);
            }
            let Some(t) = schema.schema_type(type_name) else {
                return unsupported(out);
            };
            out.push(Statement::command(
                format!(
                    "{comment}\n{db}.{type_name}.remove({})",
                    membership_filter(t, *var_id)
                ),
                index,
            ));
        }
        ChangeOp::AdaptVariation {
            flavor,
            type_name,
            source,
            target,
        } => {
            if *flavor == TypeFlavor::Relationship {
                return unsupported(out);
            }
            let Some(t) = schema.schema_type(type_name) else {
                return unsupported(out);
            };
            let (unset, addfields) = adapt_update(schema, t, *source, *target);
            let mut stages = Vec::new();
            if !unset.is_empty() {
                stages.push(format!(
                    "{{$unset: [{}]}}",
                    unset.iter().map(|f| quoted(f)).collect::<Vec<_>>().join(", ")
                ));
            }
            if !addfields.is_empty() {
                stages.push(format!(
                    "{{$addFields: {{{}}}}}",
                    addfields
                        .iter()
                        .map(|(n, v)| format!("{}: {}", quoted(n), v))
                        .collect::<Vec<_>>()
                        .join(", ")
                ));
            }
            out.push(Statement::stackable(
                UpdateParts {
                    database: db.to_string(),
                    collection: type_name.clone(),
                    filter: membership_filter(t, *source),
                    update: format!("[{}]", stages.join(", ")),
                    comment,
                },
                index,
            ));
        }
        ChangeOp::UnionVariations { flavor, type_name } => {
            if *flavor == TypeFlavor::Relationship {
                return unsupported(out);
            }
            let Some(t) = schema.schema_type(type_name) else {
                return unsupported(out);
            };
            let union: Vec<&Feature> = t.all_features();
            let mut emitted = false;
            for v in &t.variations {
                let missing: Vec<&&Feature> = union
                    .iter()
                    .filter(|f| {
                        t.common_feature(&f.name).is_none() && v.feature(&f.name).is_none()
                    })
                    .collect();
                if missing.is_empty() {
                    continue;
                }
                let fields = missing
                    .iter()
                    .map(|f| {
                        format!("{}: {}", quoted(&f.name), literal(&feature_default(schema, f)))
                    })
                    .collect::<Vec<_>>()
                    .join(", ");
                out.push(Statement::stackable(
                    UpdateParts {
                        database: db.to_string(),
                        collection: type_name.clone(),
                        filter: membership_filter(t, v.var_id),
                        update: format!("[{{$addFields: {{{fields}}}}}]"),
                        comment: comment.clone(),
                    },
                    index,
                ));
                emitted = true;
            }
            if !emitted {
                out.push(Statement::stackable(
                    UpdateParts {
                        database: db.to_string(),
                        collection: type_name.clone(),
                        filter: "{}".to_string(),
                        update: "[{$addFields: {}}]".to_string(),
                        comment,
                    },
                    index,
                ));
            }
        }
        ChangeOp::DeleteFeature { selector } => {
            for (t, m) in entity_matches(schema, op, selector, FeatureKindTag::Any, out, index) {
                let names = m.iter().map(|x| quoted(&x.feature)).collect::<Vec<_>>().join(", ");
                out.push(Statement::stackable(
                    UpdateParts {
                        database: db.to_string(),
                        collection: t.clone(),
                        filter: scope_filter(schema, &t, &m[0].variations),
                        update: format!("[{{$unset: [{names}]}}]"),
                        comment: comment.clone(),
                    },
                    index,
                ));
            }
        }
        ChangeOp::RenameFeature { selector, new_name } => {
            for (t, m) in entity_matches(schema, op, selector, FeatureKindTag::Any, out, index) {
                out.push(Statement::stackable(
                    UpdateParts {
                        database: db.to_string(),
                        collection: t.clone(),
                        filter: scope_filter(schema, &t, &m[0].variations),
                        update: format!(
                            "{{$rename: {{{}: {}}}}}",
                            quoted(&m[0].feature),
                            quoted(new_name)
                        ),
                        comment: comment.clone(),
                    },
                    index,
                ));
            }
        }
        ChangeOp::CopyFeature {
            source_type,
            source_feature,
            dest_type,
            dest_feature,
            condition,
        } => {
            if !both_entities(schema, source_type, dest_type) {
                return unsupported(out);
            }
            out.push(Statement::command(
                format!(
                    "{comment}\n{db}.{dest_type}.aggregate([\
{{$lookup: {{from: \"{source_type}\", localField: {}, foreignField: {}, as: \"_join\"}}}}, \
{{$addFields: {{{}: {{$first: \"$_join.{source_feature}\"}}}}}}, \
{{$addFields: {{\"_join\": \"$$REMOVE\"}}}}, \
{{$out: \"{dest_type}\"}}])",
                    quoted(&condition.target_feature),
                    quoted(&condition.source_feature),
                    quoted(dest_feature),
                ),
                index,
            ));
        }
        ChangeOp::MoveFeature {
            source_type,
            source_feature,
            dest_type,
            dest_feature,
            condition,
        } => {
            if !both_entities(schema, source_type, dest_type) {
                return unsupported(out);
            }
            out.push(Statement::command(
                format!(
                    "{comment}\n{db}.{dest_type}.aggregate([\
{{$lookup: {{from: \"{source_type}\", localField: {}, foreignField: {}, as: \"_join\"}}}}, \
{{$addFields: {{{}: {{$first: \"$_join.{source_feature}\"}}}}}}, \
{{$addFields: {{\"_join\": \"$$REMOVE\"}}}}, \
{{$out: \"{dest_type}\"}}])",
                    quoted(&condition.target_feature),
                    quoted(&condition.source_feature),
                    quoted(dest_feature),
                ),
                index,
            ));
            out.push(Statement::stackable(
                UpdateParts {
                    database: db.to_string(),
                    collection: source_type.clone(),
                    filter: "{}".to_string(),
                    update: format!("[{{$unset: [{}]}}]", quoted(source_feature)),
                    comment,
                },
                index,
            ));
        }
        ChangeOp::NestFeatures {
            selector,
            aggregate,
        } => {
            for (t, m) in entity_matches(schema, op, selector, FeatureKindTag::Any, out, index) {
                let renames = m
                    .iter()
                    .map(|x| {
                        format!("{}: {}", quoted(&x.feature), quoted(&format!("{aggregate}.{}", x.feature)))
                    })
                    .collect::<Vec<_>>()
                    .join(", ");
                out.push(Statement::stackable(
                    UpdateParts {
                        database: db.to_string(),
                        collection: t.clone(),
                        filter: scope_filter(schema, &t, &m[0].variations),
                        update: format!("{{$rename: {{{renames}}}}}"),
                        comment: comment.clone(),
                    },
                    index,
                ));
            }
        }
        ChangeOp::UnnestFeatures { selector } => {
            for (t, m) in entity_matches(schema, op, selector, FeatureKindTag::Any, out, index) {
                let renames = m
                    .iter()
                    .filter_map(|x| {
                        x.feature.split_once('.').map(|(_, plain)| {
                            format!("{}: {}", quoted(&x.feature), quoted(plain))
                        })
                    })
                    .collect::<Vec<_>>()
                    .join(", ");
                out.push(Statement::stackable(
                    UpdateParts {
                        database: db.to_string(),
                        collection: t.clone(),
                        filter: "{}".to_string(),
                        update: format!("{{$rename: {{{renames}}}}}"),
                        comment: comment.clone(),
                    },
                    index,
                ));
            }
        }
        ChangeOp::AddAttribute {
            type_name,
            name,
            data_type,
        } => {
            if !is_entity(schema, type_name) {
                return unsupported(out);
            }
            out.push(Statement::stackable(
                UpdateParts {
                    database: db.to_string(),
                    collection: type_name.clone(),
                    filter: "{}".to_string(),
                    update: format!(
                        "[{{$addFields: {{{}: {}}}}}]",
                        quoted(name),
                        literal(&crate::data::default_value(data_type))
                    ),
                    comment,
                },
                index,
            ));
        }
        ChangeOp::CastAttribute { selector, to } => {
            cast_updates(out, db, schema, op, selector, FeatureKindTag::Attribute, to, index);
        }
        ChangeOp::PromoteAttribute { .. } | ChangeOp::DemoteAttribute { .. } => unsupported(out),
        ChangeOp::AddReference {
            type_name,
            name,
            cardinality,
            target,
            condition,
            ..
        } => {
            if !is_entity(schema, type_name) {
                return unsupported(out);
            }
            match condition {
                Some(cond) => {
                    let key = key_field(schema, target);
                    let expr = if cardinality.is_many() {
                        format!("\"$_join.{key}\"")
                    } else {
                        format!("{{$first: \"$_join.{key}\"}}")
                    };
                    out.push(Statement::command(
                        format!(
                            "{comment}\n{db}.{type_name}.aggregate([\
{{$lookup: {{from: \"{target}\", localField: {}, foreignField: {}, as: \"_join\"}}}}, \
{{$addFields: {{{}: {expr}, \"_join\": \"$$REMOVE\"}}}}, \
{{$out: \"{type_name}\"}}])",
                            quoted(&cond.target_feature),
                            quoted(&cond.source_feature),
                            quoted(name),
                        ),
                        index,
                    ));
                }
                None => {
                    out.push(Statement::stackable(
                        UpdateParts {
                            database: db.to_string(),
                            collection: type_name.clone(),
                            filter: "{}".to_string(),
                            update: format!("[{{$addFields: {{{}: null}}}}]", quoted(name)),
                            comment,
                        },
                        index,
                    ));
                }
            }
        }
        ChangeOp::CastReference { selector, to } => {
            cast_updates(out, db, schema, op, selector, FeatureKindTag::Reference, to, index);
        }
        ChangeOp::MultReference {
            selector,
            cardinality,
        }
        | ChangeOp::MultAggregate {
            selector,
            cardinality,
        } => {
            let kind = if matches!(op, ChangeOp::MultReference { .. }) {
                FeatureKindTag::Reference
            } else {
                FeatureKindTag::Aggregate
            };
            for (t, m) in entity_matches(schema, op, selector, kind, out, index) {
                let field = &m[0].feature;
                let expr = if cardinality.is_many() {
                    format!("[\"${field}\"]")
                } else {
                    format!("{{$first: \"${field}\"}}")
                };
                out.push(Statement::stackable(
                    UpdateParts {
                        database: db.to_string(),
                        collection: t.clone(),
                        filter: scope_filter(schema, &t, &m[0].variations),
                        update: format!("[{{$set: {{{}: {expr}}}}}]", quoted(field)),
                        comment: comment.clone(),
                    },
                    index,
                ));
            }
        }
        ChangeOp::MorphReference { selector, new_name } => {
            for (t, m) in
                entity_matches(schema, op, selector, FeatureKindTag::Reference, out, index)
            {
                let Some(rf) = schema
                    .schema_type(&t)
                    .and_then(|st| st.feature(&m[0].feature))
                    .and_then(|f| f.as_reference())
                else {
                    continue;
                };
                let field = &m[0].feature;
                let new_field = new_name.clone().unwrap_or_else(|| field.clone());
                let key = key_field(schema, &rf.target);
                let mut unset = vec![quoted("_join")];
                if new_field != *field {
                    unset.push(quoted(field));
                }
                out.push(Statement::command(
                    format!(
                        "{comment}\n{db}.{t}.aggregate([\
{{$lookup: {{from: \"{}\", localField: {}, foreignField: {}, as: \"_join\"}}}}, \
{{$addFields: {{{}: {{$first: \"$_join\"}}}}}}, \
{{$unset: [{}]}}, \
{{$out: \"{t}\"}}])",
                        rf.target,
                        quoted(field),
                        quoted(&key),
                        quoted(&new_field),
                        unset.join(", "),
                    ),
                    index,
                ));
            }
        }
        ChangeOp::AddAggregate {
            type_name,
            name,
            body,
            cardinality,
        } => {
            if !is_entity(schema, type_name) {
                return unsupported(out);
            }
            let default = aggregate_literal(schema, body, cardinality.lower() == 0, cardinality.is_many());
            out.push(Statement::stackable(
                UpdateParts {
                    database: db.to_string(),
                    collection: type_name.clone(),
                    filter: "{}".to_string(),
                    update: format!("[{{$addFields: {{{}: {default}}}}}]", quoted(name)),
                    comment,
                },
                index,
            ));
        }
        ChangeOp::MorphAggregate { selector, new_name } => {
            for (t, m) in
                entity_matches(schema, op, selector, FeatureKindTag::Aggregate, out, index)
            {
                let Some(ag) = schema
                    .schema_type(&t)
                    .and_then(|st| st.feature(&m[0].feature))
                    .and_then(|f| f.as_aggregate())
                else {
                    continue;
                };
                let field = &m[0].feature;
                let new_field = new_name.clone().unwrap_or_else(|| field.clone());
                let key = key_field(schema, &ag.target);
                out.push(Statement::command(
                    format!(
                        "{comment}\n{db}.{t}.find().forEach(function(doc) {{ \
{db}.{}.insert(doc.{field}); \
doc.{new_field} = doc.{field}.{key}; \
{db}.{t}.save(doc); }})",
                        ag.target,
                    ),
                    index,
                ));
            }
        }
    }
}

// ---------------------------------------------------------------------------
// helpers
// ---------------------------------------------------------------------------

fn quoted(name: &str) -> String {
    format!("\"{name}\"")
}

fn is_entity(schema: &Schema, name: &str) -> bool {
    schema
        .schema_type(name)
        .is_some_and(|t| t.kind == TypeKind::Entity)
}

fn both_entities(schema: &Schema, a: &str, b: &str) -> bool {
    is_entity(schema, a) && is_entity(schema, b)
}

/// Selector matches restricted to entity types, grouped per type in schema
/// order. Relationship matches become one unsupported marker.
fn entity_matches(
    schema: &Schema,
    op: &ChangeOp,
    selector: &FeatureSelector,
    kind: FeatureKindTag,
    out: &mut Vec<Statement>,
    index: usize,
) -> Vec<(String, Vec<SelectorMatch>)> {
    let matches = resolve_selector(schema, op, selector, kind).unwrap_or_default();
    let mut grouped: Vec<(String, Vec<SelectorMatch>)> = Vec::new();
    let mut skipped_relationship = false;
    for m in matches {
        if !is_entity(schema, &m.type_name) {
            skipped_relationship = true;
            continue;
        }
        match grouped.iter_mut().find(|(t, _)| t == &m.type_name) {
            Some((_, list)) => list.push(m),
            None => grouped.push((m.type_name.clone(), vec![m])),
        }
    }
    if skipped_relationship || grouped.is_empty() {
        out.push(Statement::unsupported(Target::Document, index, &print_op(op)));
    }
    grouped
}

#[allow(clippy::too_many_arguments)]
fn cast_updates(
    out: &mut Vec<Statement>,
    db: &str,
    schema: &Schema,
    op: &ChangeOp,
    selector: &FeatureSelector,
    kind: FeatureKindTag,
    to: &DataType,
    index: usize,
) {
    let comment = format!("// {}", print_op(op));
    for (t, matches) in entity_matches(schema, op, selector, kind, out, index) {
        let sets = matches
            .iter()
            .map(|m| {
                format!(
                    "{}: {{$convert: {{input: \"${}\", to: {}}}}}",
                    quoted(&m.feature),
                    m.feature,
                    convert_code(to)
                )
            })
            .collect::<Vec<_>>()
            .join(", ");
        out.push(Statement::stackable(
            UpdateParts {
                database: db.to_string(),
                collection: t.clone(),
                filter: scope_filter(schema, &t, &matches[0].variations),
                update: format!("[{{$set: {{{sets}}}}}]"),
                comment: comment.clone(),
            },
            index,
        ));
    }
}

/// Exact-membership filter of one variation: `$exists: true` for each member
/// field in declaration order, `$exists: false` for every other field of the
/// type.
fn membership_filter(t: &SchemaType, var_id: u32) -> String {
    let mut clauses = Vec::new();
    let mut member_names = Vec::new();
    for f in &t.common_features {
        member_names.push(f.name.as_str());
    }
    if let Some(v) = t.variation(var_id) {
        for f in &v.features {
            member_names.push(f.name.as_str());
        }
    }
    for name in &member_names {
        clauses.push(format!("{}: {{$exists: true}}", quoted(name)));
    }
    for f in t.all_features() {
        if !member_names.contains(&f.name.as_str()) {
            clauses.push(format!("{}: {{$exists: false}}", quoted(&f.name)));
        }
    }
    format!("{{{}}}", clauses.join(", "))
}

/// Filter of a possibly variation-scoped selector: everything, one
/// variation's membership, or an `$or` of several.
fn scope_filter(schema: &Schema, type_name: &str, variations: &Option<Vec<u32>>) -> String {
    let Some(ids) = variations else {
        return "{}".to_string();
    };
    let Some(t) = schema.schema_type(type_name) else {
        return "{}".to_string();
    };
    let filters: Vec<String> = ids.iter().map(|id| membership_filter(t, *id)).collect();
    match filters.len() {
        1 => filters.into_iter().next().unwrap(),
        _ => format!("{{$or: [{}]}}", filters.join(", ")),
    }
}

/// Removed and added fields when migrating variation `source` to `target`.
fn adapt_update(
    schema: &Schema,
    t: &SchemaType,
    source: u32,
    target: u32,
) -> (Vec<String>, Vec<(String, String)>) {
    let source_names: Vec<String> = t
        .variation(source)
        .map(|v| v.features.iter().map(|f| f.name.clone()).collect())
        .unwrap_or_default();
    let target_features: Vec<&Feature> = t
        .variation(target)
        .map(|v| v.features.iter().collect())
        .unwrap_or_default();
    let target_names: Vec<&str> = target_features.iter().map(|f| f.name.as_str()).collect();

    let unset: Vec<String> = source_names
        .iter()
        .filter(|n| !target_names.contains(&n.as_str()))
        .cloned()
        .collect();
    let added: Vec<(String, String)> = target_features
        .iter()
        .filter(|f| !source_names.contains(&f.name))
        .map(|f| (f.name.clone(), literal(&feature_default(schema, f))))
        .collect();
    (unset, added)
}

fn key_field(schema: &Schema, type_name: &str) -> String {
    schema
        .schema_type(type_name)
        .and_then(|t| t.all_features().into_iter().find(|f| f.is_key()))
        .map(|f| f.name.clone())
        .unwrap_or_else(|| "_id".to_string())
}

fn aggregate_literal(
    schema: &Schema,
    body: &AggregateBody,
    nullable: bool,
    many: bool,
) -> String {
    if nullable {
        return "null".to_string();
    }
    let embedded = match body {
        AggregateBody::Existing { target } => {
            let record = crate::data::Value::Embedded(crate::data::Record::from_pairs(
                schema
                    .schema_type(target)
                    .map(|t| {
                        t.common_features
                            .iter()
                            .map(|f| (f.name.clone(), feature_default(schema, f)))
                            .collect::<Vec<_>>()
                    })
                    .unwrap_or_default(),
            ));
            literal(&record)
        }
        AggregateBody::Inline { fields, .. } => {
            let record = crate::data::Value::Embedded(crate::data::Record::from_pairs(
                fields
                    .iter()
                    .map(|f| (f.name.clone(), feature_default(schema, f)))
                    .collect::<Vec<_>>(),
            ));
            literal(&record)
        }
    };
    if many {
        format!("[{embedded}]")
    } else {
        embedded
    }
}

/// Document-dialect literal of a stored value.
fn literal(value: &Value) -> String {
    match value {
        Value::Null => "null".to_string(),
        Value::Str(s) => serde_json::Value::String(s.clone()).to_string(),
        Value::Int(n) => n.to_string(),
        Value::Dbl(d) => {
            let text = format!("{d}");
            if text.contains('.') || text.contains('e') {
                text
            } else {
                format!("{text}.0")
            }
        }
        Value::Bool(b) => b.to_string(),
        Value::Timestamp(ms) => format!("ISODate({})", ms_to_iso(*ms)),
        Value::List(items) | Value::Set(items) | Value::Tuple(items) => {
            let inner = items.iter().map(literal).collect::<Vec<_>>().join(", ");
            format!("[{inner}]")
        }
        Value::Map(pairs) => {
            let inner = pairs
                .iter()
                .map(|(k, v)| format!("{}: {}", literal(k), literal(v)))
                .collect::<Vec<_>>()
                .join(", ");
            format!("{{{inner}}}")
        }
        Value::Embedded(record) => {
            let inner = record
                .fields
                .iter()
                .map(|(k, v)| format!("{}: {}", quoted(k), literal(v)))
                .collect::<Vec<_>>()
                .join(", ");
            format!("{{{inner}}}")
        }
    }
}

fn ms_to_iso(ms: i64) -> String {
    use chrono::{TimeZone, Utc};
    let dt = Utc
        .timestamp_millis_opt(ms)
        .single()
        .unwrap_or_else(|| Utc.timestamp_millis_opt(0).single().unwrap());
    serde_json::Value::String(dt.format("%Y-%m-%dT%H:%M:%S%.3fZ").to_string()).to_string()
}

/// `$project` field list: `"f": 1` per kept feature.
fn project_fields(features: &[String]) -> String {
    features
        .iter()
        .map(|f| format!("{}: 1", quoted(f)))
        .collect::<Vec<_>>()
        .join(", ")
}
