//! Declared footprints: the set of type names an operation is allowed to
//! change. The frame condition asserts that everything outside the footprint
//! stays identical, so the prediction here is computed from the input schema
//! without applying the operation.

use std::collections::BTreeSet;

use crate::model::{FeatureKind, Schema};
use crate::orion::{ChangeOp, FeatureSelector, TypeTarget};

/// Type names `op` may touch when applied to `schema`. Rename and merge
/// include the types whose reference targets get rewritten; reference morph
/// includes the target when its root flag is demoted.
pub fn touched_types(schema: &Schema, op: &ChangeOp) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    match op {
        ChangeOp::AddType { name, .. } => {
            out.insert(name.clone());
        }
        ChangeOp::DeleteType { name, .. } => {
            out.insert(name.clone());
        }
        ChangeOp::RenameType { name, new_name, .. } => {
            out.insert(name.clone());
            out.insert(new_name.clone());
            out.extend(schema.referrers_of(name));
        }
        ChangeOp::ExtractType { new_name, .. } => {
            out.insert(new_name.clone());
        }
        ChangeOp::SplitType {
            name,
            first_name,
            second_name,
            ..
        } => {
            out.insert(name.clone());
            out.insert(first_name.clone());
            out.insert(second_name.clone());
        }
        ChangeOp::MergeTypes {
            first,
            second,
            new_name,
            ..
        } => {
            out.insert(first.clone());
            out.insert(second.clone());
            out.insert(new_name.clone());
            out.extend(schema.referrers_of(first));
            out.extend(schema.referrers_of(second));
        }
        ChangeOp::DeleteVariation { type_name, .. }
        | ChangeOp::AdaptVariation { type_name, .. }
        | ChangeOp::UnionVariations { type_name, .. } => {
            out.insert(type_name.clone());
        }
        ChangeOp::DeleteFeature { selector }
        | ChangeOp::RenameFeature { selector, .. }
        | ChangeOp::CastAttribute { selector, .. }
        | ChangeOp::PromoteAttribute { selector }
        | ChangeOp::DemoteAttribute { selector }
        | ChangeOp::CastReference { selector, .. }
        | ChangeOp::MultReference { selector, .. }
        | ChangeOp::MultAggregate { selector, .. }
        | ChangeOp::MorphAggregate { selector, .. } => {
            out.extend(selector_types(schema, selector));
        }
        ChangeOp::CopyFeature { dest_type, .. } => {
            out.insert(dest_type.clone());
        }
        ChangeOp::MoveFeature {
            source_type,
            dest_type,
            ..
        } => {
            out.insert(source_type.clone());
            out.insert(dest_type.clone());
        }
        ChangeOp::NestFeatures {
            selector,
            aggregate,
        } => {
            for type_name in selector_types(schema, selector) {
                if let Some(t) = schema.schema_type(&type_name) {
                    if let Some(ag) = t.feature(aggregate).and_then(|f| f.as_aggregate()) {
                        out.insert(type_name.clone());
                        out.insert(ag.target.clone());
                    }
                }
            }
        }
        ChangeOp::UnnestFeatures { selector } => {
            for type_name in selector_types(schema, selector) {
                if let Some(t) = schema.schema_type(&type_name) {
                    for dotted in &selector.features {
                        if let Some((aggregate, _)) = dotted.split_once('.') {
                            if let Some(ag) =
                                t.feature(aggregate).and_then(|f| f.as_aggregate())
                            {
                                out.insert(type_name.clone());
                                out.insert(ag.target.clone());
                            }
                        }
                    }
                }
            }
        }
        ChangeOp::AddAttribute { type_name, .. } => {
            out.insert(type_name.clone());
        }
        ChangeOp::AddReference { type_name, .. } => {
            out.insert(type_name.clone());
        }
        ChangeOp::MorphReference { selector, .. } => {
            for type_name in selector_types(schema, selector) {
                let Some(t) = schema.schema_type(&type_name) else {
                    continue;
                };
                for feature_name in &selector.features {
                    let Some(rf) = t.feature(feature_name).and_then(|f| f.as_reference())
                    else {
                        continue;
                    };
                    out.insert(type_name.clone());
                    let target_root = schema
                        .schema_type(&rf.target)
                        .is_some_and(|tt| tt.root);
                    if target_root {
                        out.insert(rf.target.clone());
                    }
                }
            }
        }
        ChangeOp::AddAggregate {
            type_name, body, ..
        } => {
            out.insert(type_name.clone());
            if let crate::orion::AggregateBody::Inline { type_name: new_type, .. } = body {
                out.insert(new_type.clone());
            }
        }
    }
    out
}

fn selector_types(schema: &Schema, selector: &FeatureSelector) -> Vec<String> {
    match &selector.target {
        TypeTarget::Named(name) => vec![name.clone()],
        TypeTarget::Wildcard => schema
            .types
            .iter()
            .filter(|t| {
                selector
                    .features
                    .iter()
                    .any(|name| wildcard_feature_present(t, name))
            })
            .map(|t| t.name.clone())
            .collect(),
    }
}

fn wildcard_feature_present(t: &crate::model::SchemaType, name: &str) -> bool {
    if let Some((aggregate, _)) = name.split_once('.') {
        if t.feature(aggregate)
            .is_some_and(|f| matches!(f.kind, FeatureKind::Aggregate(_)))
        {
            return true;
        }
    }
    t.has_feature(name)
}
