//! Columnar dialect: CQL statements. The store declares schemas explicitly,
//! so several operations rebuild tables through CSV export/import under
//! `./_mig/`; variation-level and nesting operations have no columnar
//! equivalent and become markers.

use crate::evolution::{apply_op, apply_script, resolve_selector, FeatureKindTag};
use crate::model::{DataType, Feature, FeatureKind, Schema, SchemaType, TypeKind};
use crate::orion::{print_op, AggregateBody, ChangeOp, ChangeScript, FeatureSelector, TypeFlavor};

use super::{CodegenError, GeneratedScript, Statement, Target};

pub fn generate_columnar(
    schema: &Schema,
    script: &ChangeScript,
) -> Result<GeneratedScript, CodegenError> {
    let outcome = apply_script(schema, script)?;
    if let Some((_, violation)) = outcome.failed_at {
        return Err(violation.into());
    }

    let mut current = schema.clone();
    let mut statements = Vec::new();
    for (index, op) in script.ops.iter().enumerate() {
        emit(&mut statements, &current, op, index);
        current = apply_op(&current, op).expect("validated by the dry run");
    }
    Ok(GeneratedScript {
        target: Target::Columnar,
        statements,
    })
}

fn emit(out: &mut Vec<Statement>, schema: &Schema, op: &ChangeOp, index: usize) {
    let op_text = print_op(op);
    let unsupported = |out: &mut Vec<Statement>| {
        out.push(Statement::unsupported(Target::Columnar, index, &op_text));
    };
    let csv = |table: &str| format!("'./_mig/{}_{}.csv'", table.to_lowercase(), index);

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
                create_table(&name.to_lowercase(), &features.iter().collect::<Vec<_>>()),
                index,
            ));
        }
        ChangeOp::DeleteType { flavor, name } => {
            if *flavor == TypeFlavor::Relationship {
                return unsupported(out);
            }
            out.push(Statement::command(
                format!("DROP TABLE {};", name.to_lowercase()),
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
            let Some(t) = schema.schema_type(name) else {
                return unsupported(out);
            };
            let features = t.all_features();
            rebuild_table(
                out,
                index,
                &name.to_lowercase(),
                &new_name.to_lowercase(),
                &features,
                &csv(name),
            );
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
            let Some(t) = schema.schema_type(name) else {
                return unsupported(out);
            };
            let selected = select(t, features);
            extract_into(out, index, &name.to_lowercase(), &new_name.to_lowercase(), &selected, &csv(name));
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
            let Some(t) = schema.schema_type(name) else {
                return unsupported(out);
            };
            extract_into(
                out,
                index,
                &name.to_lowercase(),
                &first_name.to_lowercase(),
                &select(t, first_features),
                &format!("'./_mig/{}_{}_a.csv'", name.to_lowercase(), index),
            );
            extract_into(
                out,
                index,
                &name.to_lowercase(),
                &second_name.to_lowercase(),
                &select(t, second_features),
                &format!("'./_mig/{}_{}_b.csv'", name.to_lowercase(), index),
            );
            out.push(Statement::command(
                format!("DROP TABLE {};", name.to_lowercase()),
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
            let (Some(t1), Some(t2)) = (schema.schema_type(first), schema.schema_type(second))
            else {
                return unsupported(out);
            };
            let mut union: Vec<&Feature> = t1.all_features();
            for f in t2.all_features() {
                if !union.iter().any(|u| u.name == f.name) {
                    union.push(f);
                }
            }
            let csv1 = format!("'./_mig/{}_{}.csv'", first.to_lowercase(), index);
            let csv2 = format!("'./_mig/{}_{}.csv'", second.to_lowercase(), index);
            out.push(Statement::command(
                format!(
                    "COPY {} ({}) TO {csv1};",
                    first.to_lowercase(),
                    column_names(&t1.all_features())
                ),
                index,
            ));
            out.push(Statement::command(
                format!(
                    "COPY {} ({}) TO {csv2};",
                    second.to_lowercase(),
                    column_names(&t2.all_features())
                ),
                index,
            ));
            out.push(Statement::command(
                create_table(&new_name.to_lowercase(), &union),
                index,
            ));
            out.push(Statement::command(
                format!(
                    "COPY {} ({}) FROM {csv1};",
                    new_name.to_lowercase(),
                    column_names(&t1.all_features())
                ),
                index,
            ));
            out.push(Statement::command(
                format!(
                    "COPY {} ({}) FROM {csv2};",
                    new_name.to_lowercase(),
                    column_names(&t2.all_features())
                ),
                index,
            ));
            out.push(Statement::command(
                format!("DROP TABLE {};", first.to_lowercase()),
                index,
            ));
            out.push(Statement::command(
                format!("DROP TABLE {};", second.to_lowercase()),
                index,
            ));
        }
        ChangeOp::DeleteVariation { .. }
        | ChangeOp::AdaptVariation { .. }
        | ChangeOp::UnionVariations { .. }
        | ChangeOp::NestFeatures { .. }
        | ChangeOp::UnnestFeatures { .. }
        | ChangeOp::MultReference { .. }
        | ChangeOp::MorphReference { .. }
        | ChangeOp::MultAggregate { .. }
        | ChangeOp::MorphAggregate { .. } => unsupported(out),
        ChangeOp::DeleteFeature { selector } => {
            for (t, features) in entity_feature_matches(schema, op, selector, out, index) {
                for f in features {
                    out.push(Statement::command(
                        format!("ALTER TABLE {} DROP {};", t.to_lowercase(), f.to_lowercase()),
                        index,
                    ));
                }
            }
        }
        ChangeOp::RenameFeature { selector, new_name } => {
            for (type_name, features) in entity_feature_matches(schema, op, selector, out, index) {
                let old = &features[0];
                let t = schema.schema_type(&type_name).unwrap();
                let old_feature = t.feature(old).unwrap();
                let column_type = cql_type_of(old_feature);
                let before = t.all_features();
                let after: Vec<String> = before
                    .iter()
                    .map(|f| {
                        if f.name == *old {
                            new_name.to_lowercase()
                        } else {
                            f.name.to_lowercase()
                        }
                    })
                    .collect();
                let file = csv(&type_name);
                out.push(Statement::command(
                    format!(
                        "COPY {} ({}) TO {file};",
                        type_name.to_lowercase(),
                        column_names(&before)
                    ),
                    index,
                ));
                out.push(Statement::command(
                    format!(
                        "ALTER TABLE {} DROP {};",
                        type_name.to_lowercase(),
                        old.to_lowercase()
                    ),
                    index,
                ));
                out.push(Statement::command(
                    format!(
                        "ALTER TABLE {} ADD {} {};",
                        type_name.to_lowercase(),
                        new_name.to_lowercase(),
                        column_type
                    ),
                    index,
                ));
                out.push(Statement::command(
                    format!("COPY {} ({}) FROM {file};", type_name.to_lowercase(), after.join(", ")),
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
            copy_columns(
                out, schema, op, index, source_type, source_feature, dest_type, dest_feature,
                condition, false, &csv(source_type),
            );
        }
        ChangeOp::MoveFeature {
            source_type,
            source_feature,
            dest_type,
            dest_feature,
            condition,
        } => {
            copy_columns(
                out, schema, op, index, source_type, source_feature, dest_type, dest_feature,
                condition, true, &csv(source_type),
            );
        }
        ChangeOp::AddAttribute {
            type_name,
            name,
            data_type,
        } => {
            if !is_entity(schema, type_name) {
                return unsupported(out);
            }
            out.push(Statement::command(
                format!(
                    "ALTER TABLE {} ADD {} {};",
                    type_name.to_lowercase(),
                    name.to_lowercase(),
                    cql_type(data_type)
                ),
                index,
            ));
        }
        ChangeOp::CastAttribute { selector, to } => {
            for (type_name, _) in entity_feature_matches(schema, op, selector, out, index) {
                let t = schema.schema_type(&type_name).unwrap();
                let rebuilt: Vec<Feature> = t
                    .all_features()
                    .into_iter()
                    .map(|f| {
                        let mut f = f.clone();
                        if selector.features.contains(&f.name) {
                            if let FeatureKind::Attribute(at) = &mut f.kind {
                                at.data_type = to.clone();
                            }
                        }
                        f
                    })
                    .collect();
                rebuild_table(
                    out,
                    index,
                    &type_name.to_lowercase(),
                    &type_name.to_lowercase(),
                    &rebuilt.iter().collect::<Vec<_>>(),
                    &csv(&type_name),
                );
            }
        }
        ChangeOp::PromoteAttribute { selector } | ChangeOp::DemoteAttribute { selector } => {
            let promote = matches!(op, ChangeOp::PromoteAttribute { .. });
            for (type_name, features) in entity_feature_matches(schema, op, selector, out, index) {
                let t = schema.schema_type(&type_name).unwrap();
                let all = t.all_features();
                let mut keys: Vec<String> = all
                    .iter()
                    .filter(|f| f.is_key())
                    .map(|f| f.name.to_lowercase())
                    .collect();
                if promote {
                    keys.push(features[0].to_lowercase());
                } else {
                    keys.retain(|k| *k != features[0].to_lowercase());
                }
                rebuild_table_with_keys(
                    out,
                    index,
                    &type_name.to_lowercase(),
                    &type_name.to_lowercase(),
                    &all,
                    &keys,
                    &csv(&type_name),
                );
            }
        }
        ChangeOp::AddReference {
            type_name,
            name,
            value_type,
            cardinality,
            target,
            ..
        } => {
            if !is_entity(schema, type_name) {
                return unsupported(out);
            }
            let scalar = value_type.clone().unwrap_or(DataType::String);
            let column = if cardinality.is_many() {
                format!("list<{}>", cql_type(&scalar))
            } else {
                cql_type(&scalar)
            };
            out.push(Statement::command(
                format!(
                    "ALTER TABLE {} ADD {} {};",
                    type_name.to_lowercase(),
                    name.to_lowercase(),
                    column
                ),
                index,
            ));
            let file = csv(target);
            out.push(Statement::command(
                format!("COPY {} TO {file};", target.to_lowercase()),
                index,
            ));
            out.push(Statement::command(
                format!("COPY {} FROM {file};", type_name.to_lowercase()),
                index,
            ));
        }
        ChangeOp::CastReference { selector, to } => {
            for (type_name, _) in entity_feature_matches(schema, op, selector, out, index) {
                let t = schema.schema_type(&type_name).unwrap();
                let rebuilt: Vec<Feature> = t
                    .all_features()
                    .into_iter()
                    .map(|f| {
                        let mut f = f.clone();
                        if selector.features.contains(&f.name) {
                            if let FeatureKind::Reference(rf) = &mut f.kind {
                                rf.value_type = Some(to.clone());
                            }
                        }
                        f
                    })
                    .collect();
                rebuild_table(
                    out,
                    index,
                    &type_name.to_lowercase(),
                    &type_name.to_lowercase(),
                    &rebuilt.iter().collect::<Vec<_>>(),
                    &csv(&type_name),
                );
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
            let (udt_name, fields): (String, Vec<(String, String)>) = match body {
                AggregateBody::Inline {
                    fields,
                    type_name: new_type,
                } => (
                    new_type.to_lowercase(),
                    fields
                        .iter()
                        .map(|f| (f.name.to_lowercase(), cql_type_of(f)))
                        .collect(),
                ),
                AggregateBody::Existing { target } => (
                    target.to_lowercase(),
                    schema
                        .schema_type(target)
                        .map(|t| {
                            t.all_features()
                                .into_iter()
                                .map(|f| (f.name.to_lowercase(), cql_type_of(f)))
                                .collect()
                        })
                        .unwrap_or_default(),
                ),
            };
            let field_list = fields
                .iter()
                .map(|(n, ty)| format!("{n} {ty}"))
                .collect::<Vec<_>>()
                .join(", ");
            out.push(Statement::command(
                format!("CREATE TYPE {udt_name} ({field_list});"),
                index,
            ));
            let column = if cardinality.is_many() {
                format!("list<frozen<{udt_name}>>")
            } else {
                format!("frozen<{udt_name}>")
            };
            out.push(Statement::command(
                format!(
                    "ALTER TABLE {} ADD {} {};",
                    type_name.to_lowercase(),
                    name.to_lowercase(),
                    column
                ),
                index,
            ));
        }
    }
}

// ---------------------------------------------------------------------------
// helpers
// ---------------------------------------------------------------------------

fn is_entity(schema: &Schema, name: &str) -> bool {
    schema
        .schema_type(name)
        .is_some_and(|t| t.kind == TypeKind::Entity)
}

/// Selector matches restricted to entity types, grouped per type; emits a
/// marker when a relationship type was addressed (or nothing matched).
fn entity_feature_matches(
    schema: &Schema,
    op: &ChangeOp,
    selector: &FeatureSelector,
    out: &mut Vec<Statement>,
    index: usize,
) -> Vec<(String, Vec<String>)> {
    let matches = resolve_selector(schema, op, selector, FeatureKindTag::Any).unwrap_or_default();
    let mut grouped: Vec<(String, Vec<String>)> = Vec::new();
    let mut skipped = false;
    for m in matches {
        if !is_entity(schema, &m.type_name) {
            skipped = true;
            continue;
        }
        match grouped.iter_mut().find(|(t, _)| t == &m.type_name) {
            Some((_, list)) => list.push(m.feature),
            None => grouped.push((m.type_name, vec![m.feature])),
        }
    }
    if skipped || grouped.is_empty() {
        out.push(Statement::unsupported(Target::Columnar, index, &print_op(op)));
    }
    grouped
}

fn select<'a>(t: &'a SchemaType, names: &[String]) -> Vec<&'a Feature> {
    names.iter().filter_map(|n| t.feature(n)).collect()
}

fn column_names(features: &[&Feature]) -> String {
    features
        .iter()
        .map(|f| f.name.to_lowercase())
        .collect::<Vec<_>>()
        .join(", ")
}

fn create_table(table: &str, features: &[&Feature]) -> String {
    let keys: Vec<String> = features
        .iter()
        .filter(|f| f.is_key())
        .map(|f| f.name.to_lowercase())
        .collect();
    create_table_with_keys_stmt(table, features, &keys, false)
}

fn create_table_with_keys_stmt(
    table: &str,
    features: &[&Feature],
    keys: &[String],
    if_not_exists: bool,
) -> String {
    let mut columns: Vec<String> = features
        .iter()
        .map(|f| format!("{} {}", f.name.to_lowercase(), cql_type_of(f)))
        .collect();
    if columns.is_empty() {
        columns.push("id text".to_string());
    }
    let mut keys = keys.to_vec();
    if keys.is_empty() {
        keys.push(
            features
                .first()
                .map(|f| f.name.to_lowercase())
                .unwrap_or_else(|| "id".to_string()),
        );
    }
    let head = if if_not_exists {
        "CREATE TABLE IF NOT EXISTS"
    } else {
        "CREATE TABLE"
    };
    format!(
        "{head} {table} ({}, PRIMARY KEY ({}));",
        columns.join(", "),
        keys.join(", ")
    )
}

/// The six-statement export/recreate/import cycle used by rename, cast, and
/// key changes: the final create-if-absent re-asserts the target shape so
/// the cycle is idempotent when re-run.
fn rebuild_table(
    out: &mut Vec<Statement>,
    index: usize,
    src: &str,
    dst: &str,
    features: &[&Feature],
    file: &str,
) {
    let keys: Vec<String> = features
        .iter()
        .filter(|f| f.is_key())
        .map(|f| f.name.to_lowercase())
        .collect();
    rebuild_table_with_keys(out, index, src, dst, features, &keys, file);
}

fn rebuild_table_with_keys(
    out: &mut Vec<Statement>,
    index: usize,
    src: &str,
    dst: &str,
    features: &[&Feature],
    keys: &[String],
    file: &str,
) {
    let cols = column_names(features);
    out.push(Statement::command(
        format!("COPY {src} ({cols}) TO {file};"),
        index,
    ));
    if src == dst {
        out.push(Statement::command(format!("DROP TABLE {src};"), index));
    } else {
        out.push(Statement::command(
            format!("DROP TABLE IF EXISTS {dst};"),
            index,
        ));
    }
    out.push(Statement::command(
        create_table_with_keys_stmt(dst, features, keys, false),
        index,
    ));
    out.push(Statement::command(
        format!("COPY {dst} ({cols}) FROM {file};"),
        index,
    ));
    if src == dst {
        out.push(Statement::command(
            format!("DROP TABLE IF EXISTS {src}_stale;"),
            index,
        ));
    } else {
        out.push(Statement::command(format!("DROP TABLE {src};"), index));
    }
    out.push(Statement::command(
        create_table_with_keys_stmt(dst, features, keys, true),
        index,
    ));
}

/// Extract: two copies and one create.
fn extract_into(
    out: &mut Vec<Statement>,
    index: usize,
    src: &str,
    dst: &str,
    features: &[&Feature],
    file: &str,
) {
    let cols = column_names(features);
    out.push(Statement::command(
        format!("COPY {src} ({cols}) TO {file};"),
        index,
    ));
    out.push(Statement::command(create_table(dst, features), index));
    out.push(Statement::command(
        format!("COPY {dst} ({cols}) FROM {file};"),
        index,
    ));
}

/// Copy/Move between tables: export the source column alongside its key,
/// add the destination column, re-import (the CSV join happens outside the
/// database), and for moves drop the source column.
#[allow(clippy::too_many_arguments)]
fn copy_columns(
    out: &mut Vec<Statement>,
    schema: &Schema,
    op: &ChangeOp,
    index: usize,
    source_type: &str,
    source_feature: &str,
    dest_type: &str,
    dest_feature: &str,
    condition: &crate::orion::JoinCondition,
    drop_source: bool,
    file: &str,
) {
    if !is_entity(schema, source_type) || !is_entity(schema, dest_type) {
        out.push(Statement::unsupported(Target::Columnar, index, &print_op(op)));
        return;
    }
    let column_type = schema
        .schema_type(source_type)
        .and_then(|t| t.feature(source_feature))
        .map(cql_type_of)
        .unwrap_or_else(|| "text".to_string());
    out.push(Statement::command(
        format!(
            "COPY {} ({}, {}) TO {file};",
            source_type.to_lowercase(),
            condition.source_feature.to_lowercase(),
            source_feature.to_lowercase()
        ),
        index,
    ));
    out.push(Statement::command(
        format!(
            "ALTER TABLE {} ADD {} {};",
            dest_type.to_lowercase(),
            dest_feature.to_lowercase(),
            column_type
        ),
        index,
    ));
    out.push(Statement::command(
        format!(
            "COPY {} ({}, {}) FROM {file};",
            dest_type.to_lowercase(),
            condition.target_feature.to_lowercase(),
            dest_feature.to_lowercase()
        ),
        index,
    ));
    if drop_source {
        out.push(Statement::command(
            format!(
                "ALTER TABLE {} DROP {};",
                source_type.to_lowercase(),
                source_feature.to_lowercase()
            ),
            index,
        ));
    }
}

fn cql_type_of(feature: &Feature) -> String {
    match &feature.kind {
        FeatureKind::Attribute(at) => cql_type(&at.data_type),
        FeatureKind::Reference(rf) => {
            let inner = rf
                .value_type
                .as_ref()
                .map(cql_type)
                .unwrap_or_else(|| "text".to_string());
            if rf.cardinality.is_many() {
                format!("list<{inner}>")
            } else {
                inner
            }
        }
        FeatureKind::Aggregate(ag) => {
            let inner = format!("frozen<{}>", ag.target.to_lowercase());
            if ag.cardinality.is_many() {
                format!("list<{inner}>")
            } else {
                inner
            }
        }
    }
}

fn cql_type(t: &DataType) -> String {
    match t {
        DataType::String | DataType::Identifier => "text".to_string(),
        DataType::Integer => "int".to_string(),
        DataType::Double => "double".to_string(),
        DataType::Boolean => "boolean".to_string(),
        DataType::Timestamp => "timestamp".to_string(),
        DataType::List(inner) => format!("list<{}>", cql_type(inner)),
        DataType::Set(inner) => format!("set<{}>", cql_type(inner)),
        DataType::Map(k, v) => format!("map<{}, {}>", cql_type(k), cql_type(v)),
        DataType::Tuple(parts) => format!(
            "tuple<{}>",
            parts.iter().map(cql_type).collect::<Vec<_>>().join(", ")
        ),
    }
}
