//! Canonical single-line rendering of change operations. Parsing the printed
//! text yields the original AST.

use std::fmt::Write;

use crate::athena::printer::feature_text;
use crate::model::Feature;

use super::{
    AggregateBody, ChangeOp, ChangeScript, FeatureSelector, JoinCondition, TypeTarget,
};

pub fn print(script: &ChangeScript) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} operations", script.name);
    out.push('\n');
    let _ = writeln!(out, "Using {}:{}", script.schema_name, script.schema_version);
    if !script.ops.is_empty() {
        out.push('\n');
        for op in &script.ops {
            let _ = writeln!(out, "{}", print_op(op));
        }
    }
    out
}

pub fn print_op(op: &ChangeOp) -> String {
    match op {
        ChangeOp::AddType {
            flavor,
            name,
            root,
            features,
        } => {
            let marker = if *flavor == super::TypeFlavor::Entity && !root {
                "NONROOT "
            } else {
                ""
            };
            format!(
                "ADD {} {}: {}{{ {} }}",
                flavor.keyword(),
                name,
                marker,
                feature_list_text(features)
            )
        }
        ChangeOp::DeleteType { flavor, name } => {
            format!("DELETE {} {}", flavor.keyword(), name)
        }
        ChangeOp::RenameType {
            flavor,
            name,
            new_name,
        } => format!("RENAME {} {} TO {}", flavor.keyword(), name, new_name),
        ChangeOp::ExtractType {
            flavor,
            name,
            features,
            new_name,
        } => format!(
            "EXTRACT {} {}::{} TO {}",
            flavor.keyword(),
            name,
            features.join(", "),
            new_name
        ),
        ChangeOp::SplitType {
            flavor,
            name,
            first_name,
            first_features,
            second_name,
            second_features,
        } => format!(
            "SPLIT {} {} TO {} {{ {} }} AND {} {{ {} }}",
            flavor.keyword(),
            name,
            first_name,
            first_features.join(", "),
            second_name,
            second_features.join(", ")
        ),
        ChangeOp::MergeTypes {
            flavor,
            first,
            second,
            new_name,
        } => format!(
            "MERGE {} {}, {} TO {}",
            flavor.plural_keyword(),
            first,
            second,
            new_name
        ),
        ChangeOp::DeleteVariation {
            flavor,
            type_name,
            var_id,
        } => format!("DELVAR {} {}::v{}", flavor.keyword(), type_name, var_id),
        ChangeOp::AdaptVariation {
            flavor,
            type_name,
            source,
            target,
        } => format!(
            "ADAPT {} {}::v{} TO v{}",
            flavor.keyword(),
            type_name,
            source,
            target
        ),
        ChangeOp::UnionVariations { flavor, type_name } => {
            format!("UNION {} {}", flavor.keyword(), type_name)
        }
        ChangeOp::DeleteFeature { selector } => {
            format!("DELETE {}", selector_text(selector))
        }
        ChangeOp::RenameFeature { selector, new_name } => {
            format!("RENAME {} TO {}", selector_text(selector), new_name)
        }
        ChangeOp::CopyFeature {
            source_type,
            source_feature,
            dest_type,
            dest_feature,
            condition,
        } => format!(
            "COPY {}::{} TO {}::{} WHERE {}",
            source_type,
            source_feature,
            dest_type,
            dest_feature,
            condition_text(condition)
        ),
        ChangeOp::MoveFeature {
            source_type,
            source_feature,
            dest_type,
            dest_feature,
            condition,
        } => format!(
            "MOVE {}::{} TO {}::{} WHERE {}",
            source_type,
            source_feature,
            dest_type,
            dest_feature,
            condition_text(condition)
        ),
        ChangeOp::NestFeatures {
            selector,
            aggregate,
        } => format!("NEST {} TO {}", selector_text(selector), aggregate),
        ChangeOp::UnnestFeatures { selector } => {
            format!("UNNEST {}", selector_text(selector))
        }
        ChangeOp::AddAttribute {
            type_name,
            name,
            data_type,
        } => format!("ADD ATTR {}::{}: {}", type_name, name, data_type),
        ChangeOp::CastAttribute { selector, to } => {
            format!("CAST ATTR {} TO {}", selector_text(selector), to)
        }
        ChangeOp::PromoteAttribute { selector } => {
            format!("PROMOTE ATTR {}", selector_text(selector))
        }
        ChangeOp::DemoteAttribute { selector } => {
            format!("DEMOTE ATTR {}", selector_text(selector))
        }
        ChangeOp::AddReference {
            type_name,
            name,
            value_type,
            attributes,
            cardinality,
            target,
            condition,
        } => {
            let mut s = format!("ADD REF {}::{}: ", type_name, name);
            match value_type {
                Some(vt) => {
                    let _ = write!(s, "{vt}");
                }
                None => {
                    s.push('{');
                    for (i, a) in attributes.iter().enumerate() {
                        if i > 0 {
                            s.push_str(", ");
                        }
                        let _ = write!(s, "{}: {}", a.name, a.data_type);
                    }
                    s.push('}');
                }
            }
            let _ = write!(s, "{} TO {}", cardinality.symbol(), target);
            if let Some(c) = condition {
                let _ = write!(s, " WHERE {}", condition_text(c));
            }
            s
        }
        ChangeOp::CastReference { selector, to } => {
            format!("CAST REF {} TO {}", selector_text(selector), to)
        }
        ChangeOp::MultReference {
            selector,
            cardinality,
        } => format!(
            "MULT REF {} TO {}",
            selector_text(selector),
            cardinality.symbol()
        ),
        ChangeOp::MorphReference { selector, new_name } => match new_name {
            Some(n) => format!("MORPH REF {} TO {}", selector_text(selector), n),
            None => format!("MORPH REF {}", selector_text(selector)),
        },
        ChangeOp::AddAggregate {
            type_name,
            name,
            body,
            cardinality,
        } => match body {
            AggregateBody::Inline { fields, type_name: new_type } => format!(
                "ADD AGGR {}::{}: {{{}}}{} AS {}",
                type_name,
                name,
                feature_list_text(fields),
                cardinality.symbol(),
                new_type
            ),
            AggregateBody::Existing { target } => format!(
                "ADD AGGR {}::{}: {}{}",
                type_name,
                name,
                target,
                cardinality.symbol()
            ),
        },
        ChangeOp::MultAggregate {
            selector,
            cardinality,
        } => format!(
            "MULT AGGR {} TO {}",
            selector_text(selector),
            cardinality.symbol()
        ),
        ChangeOp::MorphAggregate { selector, new_name } => match new_name {
            Some(n) => format!("MORPH AGGR {} TO {}", selector_text(selector), n),
            None => format!("MORPH AGGR {}", selector_text(selector)),
        },
    }
}

fn feature_list_text(features: &[Feature]) -> String {
    features
        .iter()
        .map(feature_text)
        .collect::<Vec<_>>()
        .join(", ")
}

fn selector_text(sel: &FeatureSelector) -> String {
    let mut s = String::new();
    match &sel.target {
        TypeTarget::Wildcard => s.push('*'),
        TypeTarget::Named(name) => s.push_str(name),
    }
    if let Some(vars) = &sel.variations {
        s.push('(');
        for (i, v) in vars.iter().enumerate() {
            if i > 0 {
                s.push_str(", ");
            }
            let _ = write!(s, "v{v}");
        }
        s.push(')');
    }
    s.push_str("::");
    s.push_str(&sel.features.join(", "));
    s
}

fn condition_text(c: &JoinCondition) -> String {
    format!("{}={}", c.source_feature, c.target_feature)
}
