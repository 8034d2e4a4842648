//! Well-formedness checks for schemas, mirroring the model restrictions as
//! data rather than errors: `validate` returns every violated rule together
//! with the path of the offending element.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{Constraint, Feature, FeatureKind, Schema, SchemaType, TypeKind};

/// One violated well-formedness rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Short, stable identifier of the rule, e.g. "refsTo in entities".
    pub rule: &'static str,
    /// Path of the offending element, e.g. "Sale/exercises".
    pub path: String,
}

impl Violation {
    fn new(rule: &'static str, path: impl Into<String>) -> Violation {
        Violation {
            rule,
            path: path.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.rule)
    }
}

pub const RULE_SOME_TYPES: &str = "some entities or relationships";
pub const RULE_DISTINCT_TYPE_NAMES: &str = "distinct schema type names";
pub const RULE_SOME_ROOT: &str = "some entity is root";
pub const RULE_REFS_TO_ENTITIES: &str = "refsTo in entities";
pub const RULE_AGGREGATES_NON_ROOT: &str = "aggregates in non-root entities";
pub const RULE_VARIATIONS_NON_EMPTY: &str = "variations non-empty";
pub const RULE_DISTINCT_VARIATION_IDS: &str = "distinct positive variation ids";
pub const RULE_COMMON_VARIATION_DISJOINT: &str = "common and variation features disjoint";
pub const RULE_DISTINCT_FEATURE_NAMES: &str = "distinct feature names";
pub const RULE_FEATURE_SHAPE_CONSISTENT: &str = "same-named features structurally equal";
pub const RULE_RANGE_ORDERED: &str = "range min <= max";
pub const RULE_REFERENCE_VALUE_OR_ATTRS: &str = "reference carries valueType or attributes";
pub const RULE_RELATIONSHIP_NOT_ROOT: &str = "relationship types are never root";

/// Checks every schema invariant and returns the violations found. An empty
/// result means the schema is well-formed.
pub fn validate(schema: &Schema) -> Vec<Violation> {
    let mut out = Vec::new();

    if schema.types.is_empty() {
        out.push(Violation::new(RULE_SOME_TYPES, schema.name.clone()));
    }

    check_distinct_names(schema, TypeKind::Entity, &mut out);
    check_distinct_names(schema, TypeKind::Relationship, &mut out);

    let mut entities = schema.entity_types().peekable();
    if entities.peek().is_some() && !schema.entity_types().any(|e| e.root) {
        out.push(Violation::new(RULE_SOME_ROOT, schema.name.clone()));
    }

    for t in &schema.types {
        check_type(schema, t, &mut out);
    }

    out
}

fn check_distinct_names(schema: &Schema, kind: TypeKind, out: &mut Vec<Violation>) {
    let mut seen = BTreeSet::new();
    for t in schema.types.iter().filter(|t| t.kind == kind) {
        if !seen.insert(t.name.as_str()) {
            out.push(Violation::new(RULE_DISTINCT_TYPE_NAMES, t.name.clone()));
        }
    }
}

fn check_type(schema: &Schema, t: &SchemaType, out: &mut Vec<Violation>) {
    if t.kind == TypeKind::Relationship && t.root {
        out.push(Violation::new(RULE_RELATIONSHIP_NOT_ROOT, t.name.clone()));
    }

    if t.variations.is_empty() {
        out.push(Violation::new(RULE_VARIATIONS_NON_EMPTY, t.name.clone()));
    }

    let mut ids = BTreeSet::new();
    for v in &t.variations {
        if v.var_id == 0 || !ids.insert(v.var_id) {
            out.push(Violation::new(
                RULE_DISTINCT_VARIATION_IDS,
                format!("{}/v{}", t.name, v.var_id),
            ));
        }
    }

    check_feature_list(&t.common_features, &t.name, out);
    for v in &t.variations {
        check_feature_list(&v.features, &format!("{}/v{}", t.name, v.var_id), out);
    }

    let common_names: BTreeSet<&str> =
        t.common_features.iter().map(|f| f.name.as_str()).collect();
    for v in &t.variations {
        for f in &v.features {
            if common_names.contains(f.name.as_str()) {
                out.push(Violation::new(
                    RULE_COMMON_VARIATION_DISJOINT,
                    format!("{}/v{}/{}", t.name, v.var_id, f.name),
                ));
            }
        }
    }

    // Same-named features in different variations must be the same feature.
    let mut by_name: BTreeMap<&str, &Feature> = BTreeMap::new();
    for f in t
        .common_features
        .iter()
        .chain(t.variations.iter().flat_map(|v| v.features.iter()))
    {
        match by_name.get(f.name.as_str()) {
            Some(prev) if *prev != f => {
                out.push(Violation::new(
                    RULE_FEATURE_SHAPE_CONSISTENT,
                    format!("{}/{}", t.name, f.name),
                ));
            }
            _ => {
                by_name.insert(f.name.as_str(), f);
            }
        }
    }

    for f in t.all_features() {
        check_feature(schema, t, f, out);
    }
}

fn check_feature_list(features: &[Feature], path: &str, out: &mut Vec<Violation>) {
    let mut seen = BTreeSet::new();
    for f in features {
        if !seen.insert(f.name.as_str()) {
            out.push(Violation::new(
                RULE_DISTINCT_FEATURE_NAMES,
                format!("{path}/{}", f.name),
            ));
        }
    }
}

fn check_feature(schema: &Schema, t: &SchemaType, f: &Feature, out: &mut Vec<Violation>) {
    let path = format!("{}/{}", t.name, f.name);
    match &f.kind {
        FeatureKind::Attribute(at) => {
            if let Some(Constraint::Range(lo, hi)) = &at.constraint {
                if lo > hi {
                    out.push(Violation::new(RULE_RANGE_ORDERED, path));
                }
            }
        }
        FeatureKind::Reference(rf) => {
            let target_is_entity = schema
                .schema_type(&rf.target)
                .is_some_and(|tt| tt.kind == TypeKind::Entity);
            if !target_is_entity {
                out.push(Violation::new(RULE_REFS_TO_ENTITIES, path.clone()));
            }
            if rf.value_type.is_some() && !rf.attributes.is_empty() {
                out.push(Violation::new(RULE_REFERENCE_VALUE_OR_ATTRS, path));
            }
        }
        FeatureKind::Aggregate(ag) => {
            let target_non_root = schema
                .schema_type(&ag.target)
                .is_some_and(|tt| tt.kind == TypeKind::Entity && !tt.root);
            if !target_non_root {
                out.push(Violation::new(RULE_AGGREGATES_NON_ROOT, path));
            }
        }
    }
}
