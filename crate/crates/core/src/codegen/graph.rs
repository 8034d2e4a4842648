//! Graph dialect: Cypher statements over node labels and relationship
//! types. The store is schemaless, so most operations select the affected
//! nodes or relationships and set or remove properties; embedding-related
//! operations have no graph equivalent and become markers.

use crate::data::{feature_default, Value};
use crate::evolution::{apply_op, apply_script, resolve_selector, FeatureKindTag, SelectorMatch};
use crate::model::{DataType, Schema, SchemaType, TypeKind};
use crate::orion::{print_op, ChangeOp, ChangeScript, FeatureSelector, TypeFlavor};

use super::{CodegenError, GeneratedScript, Statement, Target};

pub fn generate_graph(
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
        target: Target::Graph,
        statements,
    })
}

/// `(n:T)` or `()-[r:T]->()` with the bound variable name.
fn pattern(kind: TypeKind, var: &str, label: &str) -> String {
    match kind {
        TypeKind::Entity => format!("({var}:{label})"),
        TypeKind::Relationship => format!("()-[{var}:{label}]->()"),
    }
}

fn kind_of(schema: &Schema, name: &str) -> TypeKind {
    schema
        .schema_type(name)
        .map(|t| t.kind)
        .unwrap_or(TypeKind::Entity)
}

fn emit(out: &mut Vec<Statement>, schema: &Schema, op: &ChangeOp, index: usize) {
    let op_text = print_op(op);
    let comment = format!("// {op_text}");
    let unsupported = |out: &mut Vec<Statement>| {
        out.push(Statement::unsupported(Target::Graph, index, &op_text));
    };

    match op {
        ChangeOp::AddType {
            flavor,
            name,
            features,
            ..
        } => {
            if *flavor == TypeFlavor::Relationship {
                // Creating a relationship type on its own is not expressible:
                // instances need concrete endpoints.
                return unsupported(out);
            }
            out.push(Statement::command(
                format!("{comment}\nCREATE (:{name});"),
                index,
            ));
            let sets = if features.is_empty() {
                format!("n:{name}")
            } else {
                features
                    .iter()
                    .map(|f| format!("n.{} = {}", f.name, cypher_literal(&feature_default(schema, f))))
                    .collect::<Vec<_>>()
                    .join(", ")
            };
            out.push(Statement::command(
                format!("{comment}\nMATCH (n:{name}) SET {sets};"),
                index,
            ));
        }
        ChangeOp::DeleteType { flavor, name } => {
            let stmt = match flavor {
                TypeFlavor::Entity => format!("MATCH (n:{name}) DETACH DELETE n;"),
                TypeFlavor::Relationship => format!("MATCH ()-[r:{name}]->() DELETE r;"),
            };
            out.push(Statement::command(format!("{comment}\n{stmt}"), index));
        }
        ChangeOp::RenameType {
            flavor,
            name,
            new_name,
        } => {
            let stmt = match flavor {
                TypeFlavor::Entity => {
                    format!("MATCH (n:{name}) SET n:{new_name} REMOVE n:{name};")
                }
                TypeFlavor::Relationship => format!(
                    "MATCH ()-[r:{name}]->() CALL apoc.refactor.setType(r, '{new_name}') YIELD output RETURN count(output);"
                ),
            };
            out.push(Statement::command(format!("{comment}\n{stmt}"), index));
        }
        ChangeOp::ExtractType {
            flavor,
            name,
            features,
            new_name,
        } => {
            let props = copy_props(features, "s");
            let stmt = match flavor {
                TypeFlavor::Entity => {
                    format!("MATCH (s:{name}) CREATE (:{new_name} {{{props}}});")
                }
                TypeFlavor::Relationship => format!(
                    "MATCH (a)-[s:{name}]->(b) CREATE (a)-[:{new_name} {{{props}}}]->(b);"
                ),
            };
            out.push(Statement::command(format!("{comment}\n{stmt}"), index));
        }
        ChangeOp::SplitType {
            flavor,
            name,
            first_name,
            first_features,
            second_name,
            second_features,
        } => {
            let p1 = copy_props(first_features, "s");
            let p2 = copy_props(second_features, "s");
            let stmt = match flavor {
                TypeFlavor::Entity => format!(
                    "MATCH (s:{name}) CREATE (:{first_name} {{{p1}}}) CREATE (:{second_name} {{{p2}}}) DETACH DELETE s;"
                ),
                TypeFlavor::Relationship => format!(
                    "MATCH (a)-[s:{name}]->(b) CREATE (a)-[:{first_name} {{{p1}}}]->(b) CREATE (a)-[:{second_name} {{{p2}}}]->(b) DELETE s;"
                ),
            };
            out.push(Statement::command(format!("{comment}\n{stmt}"), index));
        }
        ChangeOp::MergeTypes {
            flavor,
            first,
            second,
            new_name,
        } => {
            let (s1, s2) = match flavor {
                TypeFlavor::Entity => (
                    format!(
                        "MATCH (a:{first}) CREATE (n:{new_name}) SET n = properties(a) WITH a DETACH DELETE a;"
                    ),
                    format!(
                        "MATCH (b:{second}) MERGE (n:{new_name}) SET n += properties(b) WITH b DETACH DELETE b;"
                    ),
                ),
                TypeFlavor::Relationship => (
                    format!(
                        "MATCH (a)-[r:{first}]->(b) CREATE (a)-[m:{new_name}]->(b) SET m = properties(r) DELETE r;"
                    ),
                    format!(
                        "MATCH (a)-[r:{second}]->(b) MERGE (a)-[m:{new_name}]->(b) SET m += properties(r) DELETE r;"
                    ),
                ),
            };
            out.push(Statement::command(format!("{comment}\n{s1}"), index));
            out.push(Statement::command(format!("{comment}\n{s2}"), index));
        }
        ChangeOp::DeleteVariation {
            flavor,
            type_name,
            var_id,
        } => {
            let Some(t) = schema.schema_type(type_name) else {
                return unsupported(out);
            };
            let var = "x";
            let predicate = membership_predicate(t, *var_id, var);
            let stmt = match flavor {
                TypeFlavor::Entity => format!(
                    "MATCH (x:{type_name}) WHERE {predicate} DETACH DELETE x;"
                ),
                TypeFlavor::Relationship => {
                    format!("MATCH ()-[x:{type_name}]->() WHERE {predicate} DELETE x;")
                }
            };
            out.push(Statement::command(format!("{comment}\n{stmt}"), index));
        }
        ChangeOp::AdaptVariation {
            flavor,
            type_name,
            source,
            target,
        } => {
            let Some(t) = schema.schema_type(type_name) else {
                return unsupported(out);
            };
            let predicate = membership_predicate(t, *source, "x");
            let (removed, added) = adapt_sets(schema, t, *source, *target);
            let mut clauses = String::new();
            if !added.is_empty() {
                clauses.push_str(&format!(" SET {}", added.join(", ")));
            }
            if !removed.is_empty() {
                clauses.push_str(&format!(" REMOVE {}", removed.join(", ")));
            }
            let head = pattern(flavor_kind(*flavor), "x", type_name);
            out.push(Statement::command(
                format!("{comment}\nMATCH {head} WHERE {predicate}{clauses};"),
                index,
            ));
        }
        ChangeOp::UnionVariations { flavor, type_name } => {
            let Some(t) = schema.schema_type(type_name) else {
                return unsupported(out);
            };
            let sets: Vec<String> = t
                .all_features()
                .iter()
                .filter(|f| t.common_feature(&f.name).is_none())
                .map(|f| {
                    format!(
                        "x.{} = coalesce(x.{}, {})",
                        f.name,
                        f.name,
                        cypher_literal(&feature_default(schema, f))
                    )
                })
                .collect();
            let sets = if sets.is_empty() {
                match flavor {
                    TypeFlavor::Entity => format!("x:{type_name}"),
                    TypeFlavor::Relationship => "x.__union = null".to_string(),
                }
            } else {
                sets.join(", ")
            };
            let head = pattern(flavor_kind(*flavor), "x", type_name);
            out.push(Statement::command(
                format!("{comment}\nMATCH {head} SET {sets};"),
                index,
            ));
        }
        ChangeOp::DeleteFeature { selector } => {
            for (type_name, matches) in grouped_matches(schema, op, selector, FeatureKindTag::Any, out, index) {
                let kind = kind_of(schema, &type_name);
                let removes = matches
                    .iter()
                    .map(|m| format!("x.{}", m.feature))
                    .collect::<Vec<_>>()
                    .join(", ");
                let head = pattern(kind, "x", &type_name);
                let scope = scope_predicate(schema, &type_name, &matches[0].variations, "x");
                out.push(Statement::command(
                    format!("{comment}\nMATCH {head}{scope} REMOVE {removes};"),
                    index,
                ));
            }
        }
        ChangeOp::RenameFeature { selector, new_name } => {
            for (type_name, matches) in grouped_matches(schema, op, selector, FeatureKindTag::Any, out, index) {
                let kind = kind_of(schema, &type_name);
                let head = pattern(kind, "x", &type_name);
                let scope = scope_predicate(schema, &type_name, &matches[0].variations, "x");
                let old = &matches[0].feature;
                out.push(Statement::command(
                    format!(
                        "{comment}\nMATCH {head}{scope} SET x.{new_name} = x.{old} REMOVE x.{old};"
                    ),
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
            let head_s = pattern(kind_of(schema, source_type), "s", source_type);
            let head_d = pattern(kind_of(schema, dest_type), "d", dest_type);
            out.push(Statement::command(
                format!(
                    "{comment}\nMATCH {head_s} MATCH {head_d} WHERE s.{} = d.{} SET d.{dest_feature} = s.{source_feature};",
                    condition.source_feature, condition.target_feature
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
            let head_s = pattern(kind_of(schema, source_type), "s", source_type);
            let head_d = pattern(kind_of(schema, dest_type), "d", dest_type);
            out.push(Statement::command(
                format!(
                    "{comment}\nMATCH {head_s} MATCH {head_d} WHERE s.{} = d.{} SET d.{dest_feature} = s.{source_feature} REMOVE s.{source_feature};",
                    condition.source_feature, condition.target_feature
                ),
                index,
            ));
        }
        ChangeOp::NestFeatures { .. } | ChangeOp::UnnestFeatures { .. } => unsupported(out),
        ChangeOp::AddAttribute {
            type_name,
            name,
            data_type,
        } => {
            let head = pattern(kind_of(schema, type_name), "x", type_name);
            out.push(Statement::command(
                format!(
                    "{comment}\nMATCH {head} SET x.{name} = {};",
                    cypher_literal(&crate::data::default_value(data_type))
                ),
                index,
            ));
        }
        ChangeOp::CastAttribute { selector, to } => {
            for (type_name, matches) in
                grouped_matches(schema, op, selector, FeatureKindTag::Attribute, out, index)
            {
                let kind = kind_of(schema, &type_name);
                let head = pattern(kind, "x", &type_name);
                let scope = scope_predicate(schema, &type_name, &matches[0].variations, "x");
                let sets = matches
                    .iter()
                    .map(|m| {
                        format!("x.{} = {}", m.feature, cast_expr(&m.feature, to))
                    })
                    .collect::<Vec<_>>()
                    .join(", ");
                out.push(Statement::command(
                    format!("{comment}\nMATCH {head}{scope} SET {sets};"),
                    index,
                ));
            }
        }
        ChangeOp::PromoteAttribute { selector } => {
            for (type_name, matches) in
                grouped_matches(schema, op, selector, FeatureKindTag::Attribute, out, index)
            {
                if kind_of(schema, &type_name) != TypeKind::Entity {
                    continue;
                }
                let attr = &matches[0].feature;
                out.push(Statement::command(
                    format!(
                        "{comment}\nCREATE CONSTRAINT {}_{}_key IF NOT EXISTS FOR (n:{type_name}) REQUIRE n.{attr} IS UNIQUE;",
                        type_name.to_lowercase(),
                        attr.to_lowercase()
                    ),
                    index,
                ));
            }
        }
        ChangeOp::DemoteAttribute { selector } => {
            for (type_name, matches) in
                grouped_matches(schema, op, selector, FeatureKindTag::Attribute, out, index)
            {
                if kind_of(schema, &type_name) != TypeKind::Entity {
                    continue;
                }
                let attr = &matches[0].feature;
                out.push(Statement::command(
                    format!(
                        "{comment}\nDROP CONSTRAINT {}_{}_key IF EXISTS;",
                        type_name.to_lowercase(),
                        attr.to_lowercase()
                    ),
                    index,
                ));
            }
        }
        ChangeOp::AddReference {
            type_name,
            name,
            target,
            condition,
            ..
        } => {
            let where_clause = condition
                .as_ref()
                .map(|c| format!(" WHERE d.{} = s.{}", c.source_feature, c.target_feature))
                .unwrap_or_default();
            out.push(Statement::command(
                format!(
                    "{comment}\nMATCH (s:{type_name}) MATCH (d:{target}){where_clause} CREATE (s)-[:{name}]->(d);"
                ),
                index,
            ));
        }
        ChangeOp::CastReference { .. }
        | ChangeOp::MultReference { .. }
        | ChangeOp::MorphReference { .. }
        | ChangeOp::AddAggregate { .. }
        | ChangeOp::MultAggregate { .. }
        | ChangeOp::MorphAggregate { .. } => unsupported(out),
    }
}

// ---------------------------------------------------------------------------
// helpers
// ---------------------------------------------------------------------------

fn flavor_kind(flavor: TypeFlavor) -> TypeKind {
    match flavor {
        TypeFlavor::Entity => TypeKind::Entity,
        TypeFlavor::Relationship => TypeKind::Relationship,
    }
}

/// Selector matches grouped per type in schema order. Unlike the document
/// and columnar targets, relationship types are first-class here.
fn grouped_matches(
    schema: &Schema,
    op: &ChangeOp,
    selector: &FeatureSelector,
    kind: FeatureKindTag,
    out: &mut Vec<Statement>,
    index: usize,
) -> Vec<(String, Vec<SelectorMatch>)> {
    let matches = resolve_selector(schema, op, selector, kind).unwrap_or_default();
    let mut grouped: Vec<(String, Vec<SelectorMatch>)> = Vec::new();
    for m in matches {
        match grouped.iter_mut().find(|(t, _)| t == &m.type_name) {
            Some((_, list)) => list.push(m),
            None => grouped.push((m.type_name.clone(), vec![m])),
        }
    }
    if grouped.is_empty() {
        out.push(Statement::unsupported(Target::Graph, index, &print_op(op)));
    }
    grouped
}

fn copy_props(features: &[String], var: &str) -> String {
    features
        .iter()
        .map(|f| format!("{f}: {var}.{f}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Exact-membership predicate of one variation over property existence.
fn membership_predicate(t: &SchemaType, var_id: u32, var: &str) -> String {
    let mut member = Vec::new();
    for f in &t.common_features {
        member.push(f.name.as_str());
    }
    if let Some(v) = t.variation(var_id) {
        for f in &v.features {
            member.push(f.name.as_str());
        }
    }
    let mut clauses: Vec<String> = member
        .iter()
        .map(|f| format!("{var}.{f} IS NOT NULL"))
        .collect();
    for f in t.all_features() {
        if !member.contains(&f.name.as_str()) {
            clauses.push(format!("{var}.{} IS NULL", f.name));
        }
    }
    if clauses.is_empty() {
        "true".to_string()
    } else {
        clauses.join(" AND ")
    }
}

fn scope_predicate(
    schema: &Schema,
    type_name: &str,
    variations: &Option<Vec<u32>>,
    var: &str,
) -> String {
    let Some(ids) = variations else {
        return String::new();
    };
    let Some(t) = schema.schema_type(type_name) else {
        return String::new();
    };
    let per_variation: Vec<String> = ids
        .iter()
        .map(|id| format!("({})", membership_predicate(t, *id, var)))
        .collect();
    format!(" WHERE {}", per_variation.join(" OR "))
}

fn adapt_sets(
    schema: &Schema,
    t: &SchemaType,
    source: u32,
    target: u32,
) -> (Vec<String>, Vec<String>) {
    let source_names: Vec<String> = t
        .variation(source)
        .map(|v| v.features.iter().map(|f| f.name.clone()).collect())
        .unwrap_or_default();
    let target_features: Vec<&crate::model::Feature> = t
        .variation(target)
        .map(|v| v.features.iter().collect())
        .unwrap_or_default();
    let target_names: Vec<&str> = target_features.iter().map(|f| f.name.as_str()).collect();
    let removed = source_names
        .iter()
        .filter(|n| !target_names.contains(&n.as_str()))
        .map(|n| format!("x.{n}"))
        .collect();
    let added = target_features
        .iter()
        .filter(|f| !source_names.contains(&f.name))
        .map(|f| {
            format!(
                "x.{} = {}",
                f.name,
                cypher_literal(&feature_default(schema, f))
            )
        })
        .collect();
    (removed, added)
}

fn cast_expr(field: &str, to: &DataType) -> String {
    match to {
        DataType::String | DataType::Identifier => format!("toString(x.{field})"),
        DataType::Integer => format!("toInteger(x.{field})"),
        DataType::Double => format!("toFloat(x.{field})"),
        DataType::Boolean => format!("toBoolean(x.{field})"),
        DataType::Timestamp => format!("datetime(x.{field})"),
        _ => format!("x.{field}"),
    }
}

fn cypher_literal(value: &Value) -> String {
    match value {
        Value::Null => "null".to_string(),
        Value::Str(s) => format!("'{}'", s.replace('\'', "\\'")),
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
        Value::Timestamp(ms) => format!("datetime({{epochMillis: {ms}}})"),
        Value::List(items) | Value::Set(items) | Value::Tuple(items) => {
            format!(
                "[{}]",
                items.iter().map(cypher_literal).collect::<Vec<_>>().join(", ")
            )
        }
        Value::Map(_) | Value::Embedded(_) => "null".to_string(),
    }
}
