//! Structural schema comparison with an exclusion set: the frame-condition
//! comparator used by the evolution engine and the property checks.

use std::collections::{BTreeMap, BTreeSet};

use super::{Feature, Schema, SchemaType, TypeKind};

/// True iff `a` and `b` agree on every schema type not named in `excluded`,
/// and neither schema has an extra non-excluded type.
///
/// Comparison is deep and structural: feature sets are order-insensitive,
/// variation lists are order-sensitive. Schema name and version are not
/// compared.
pub fn schemas_equal_except(a: &Schema, b: &Schema, excluded: &BTreeSet<String>) -> bool {
    fn index_types<'a>(
        s: &'a Schema,
        excluded: &BTreeSet<String>,
    ) -> BTreeMap<(TypeKind, &'a str), &'a SchemaType> {
        s.types
            .iter()
            .filter(|t| !excluded.contains(&t.name))
            .map(|t| ((t.kind, t.name.as_str()), t))
            .collect()
    }

    let left = index_types(a, excluded);
    let right = index_types(b, excluded);
    if left.len() != right.len() {
        return false;
    }
    left.iter().all(|(key, ta)| {
        right
            .get(key)
            .is_some_and(|tb| types_equal(ta, tb))
    })
}

fn types_equal(a: &SchemaType, b: &SchemaType) -> bool {
    a.name == b.name
        && a.kind == b.kind
        && a.root == b.root
        && feature_sets_equal(&a.common_features, &b.common_features)
        && a.variations.len() == b.variations.len()
        && a.variations.iter().zip(&b.variations).all(|(va, vb)| {
            va.var_id == vb.var_id
                && va.count == vb.count
                && feature_sets_equal(&va.features, &vb.features)
        })
}

fn feature_sets_equal(a: &[Feature], b: &[Feature]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut sa: Vec<&Feature> = a.iter().collect();
    let mut sb: Vec<&Feature> = b.iter().collect();
    sa.sort();
    sb.sort();
    sa == sb
}
