//! Application of individual change operations, one function per taxonomy
//! category. Every successful operation leaves the schema well-formed; the
//! final validate guard in [`apply_op`] turns any would-be invariant break
//! into a precondition violation.

use std::collections::BTreeSet;

use crate::model::{
    validate, Aggregate, Cardinality, Constraint, DataType, Feature, FeatureKind,
    Reference, Schema, SchemaType, StructuralVariation, TypeKind,
};
use crate::orion::{
    print_op, AggregateBody, ChangeOp, FeatureSelector, JoinCondition, TypeFlavor, TypeTarget,
};

use super::selector::{resolve_selector, FeatureKindTag, SelectorMatch};
use super::PreconditionViolation;

/// Field names reserved for graph relationship endpoints in datasets.
pub(crate) const RESERVED_FIELD_NAMES: [&str; 2] = ["_out", "_in"];

pub(crate) fn flavor_kind(flavor: TypeFlavor) -> TypeKind {
    match flavor {
        TypeFlavor::Entity => TypeKind::Entity,
        TypeFlavor::Relationship => TypeKind::Relationship,
    }
}

/// Applies one operation to `schema`, producing the updated schema or the
/// violated precondition. The input is never modified.
pub fn apply_op(schema: &Schema, op: &ChangeOp) -> Result<Schema, PreconditionViolation> {
    let next = match op {
        ChangeOp::AddType {
            flavor,
            name,
            root,
            features,
        } => add_type(schema, op, *flavor, name, *root, features)?,
        ChangeOp::DeleteType { flavor, name } => delete_type(schema, op, *flavor, name)?,
        ChangeOp::RenameType {
            flavor,
            name,
            new_name,
        } => rename_type(schema, op, *flavor, name, new_name)?,
        ChangeOp::ExtractType {
            flavor,
            name,
            features,
            new_name,
        } => extract_type(schema, op, *flavor, name, features, new_name)?,
        ChangeOp::SplitType {
            flavor,
            name,
            first_name,
            first_features,
            second_name,
            second_features,
        } => split_type(
            schema,
            op,
            *flavor,
            name,
            (first_name, first_features),
            (second_name, second_features),
        )?,
        ChangeOp::MergeTypes {
            flavor,
            first,
            second,
            new_name,
        } => merge_types(schema, op, *flavor, first, second, new_name)?,
        ChangeOp::DeleteVariation {
            flavor,
            type_name,
            var_id,
        } => delete_variation(schema, op, *flavor, type_name, *var_id)?,
        ChangeOp::AdaptVariation {
            flavor,
            type_name,
            source,
            target,
        } => adapt_variation(schema, op, *flavor, type_name, *source, *target)?,
        ChangeOp::UnionVariations { flavor, type_name } => {
            union_variations(schema, op, *flavor, type_name)?
        }
        ChangeOp::DeleteFeature { selector } => delete_feature(schema, op, selector)?,
        ChangeOp::RenameFeature { selector, new_name } => {
            rename_feature(schema, op, selector, new_name)?
        }
        ChangeOp::CopyFeature {
            source_type,
            source_feature,
            dest_type,
            dest_feature,
            condition,
        } => copy_move(
            schema,
            op,
            source_type,
            source_feature,
            dest_type,
            dest_feature,
            condition,
            false,
        )?,
        ChangeOp::MoveFeature {
            source_type,
            source_feature,
            dest_type,
            dest_feature,
            condition,
        } => copy_move(
            schema,
            op,
            source_type,
            source_feature,
            dest_type,
            dest_feature,
            condition,
            true,
        )?,
        ChangeOp::NestFeatures {
            selector,
            aggregate,
        } => nest_features(schema, op, selector, aggregate)?,
        ChangeOp::UnnestFeatures { selector } => unnest_features(schema, op, selector)?,
        ChangeOp::AddAttribute {
            type_name,
            name,
            data_type,
        } => add_attribute(schema, op, type_name, name, data_type)?,
        ChangeOp::CastAttribute { selector, to } => cast_attribute(schema, op, selector, to)?,
        ChangeOp::PromoteAttribute { selector } => set_key(schema, op, selector, true)?,
        ChangeOp::DemoteAttribute { selector } => set_key(schema, op, selector, false)?,
        ChangeOp::AddReference {
            type_name,
            name,
            value_type,
            attributes,
            cardinality,
            target,
            condition,
        } => add_reference(
            schema,
            op,
            type_name,
            name,
            value_type,
            attributes,
            *cardinality,
            target,
            condition,
        )?,
        ChangeOp::CastReference { selector, to } => cast_reference(schema, op, selector, to)?,
        ChangeOp::MultReference {
            selector,
            cardinality,
        } => mult_feature(schema, op, selector, FeatureKindTag::Reference, *cardinality)?,
        ChangeOp::MorphReference { selector, new_name } => {
            morph_reference(schema, op, selector, new_name)?
        }
        ChangeOp::AddAggregate {
            type_name,
            name,
            body,
            cardinality,
        } => add_aggregate(schema, op, type_name, name, body, *cardinality)?,
        ChangeOp::MultAggregate {
            selector,
            cardinality,
        } => mult_feature(schema, op, selector, FeatureKindTag::Aggregate, *cardinality)?,
        ChangeOp::MorphAggregate { selector, new_name } => {
            morph_aggregate(schema, op, selector, new_name)?
        }
    };

    let violations = validate(&next);
    if let Some(v) = violations.first() {
        return Err(PreconditionViolation::clause(
            op,
            format!("resulting schema stays well-formed ({v})"),
        ));
    }
    Ok(next)
}

// ---------------------------------------------------------------------------
// shared checks and edits
// ---------------------------------------------------------------------------

fn typed<'a>(
    schema: &'a Schema,
    op: &ChangeOp,
    name: &str,
    flavor: TypeFlavor,
) -> Result<&'a SchemaType, PreconditionViolation> {
    let set_name = match flavor {
        TypeFlavor::Entity => "E",
        TypeFlavor::Relationship => "R",
    };
    schema
        .schema_type(name)
        .filter(|t| t.kind == flavor_kind(flavor))
        .ok_or_else(|| PreconditionViolation::clause(op, format!("t ∈ {set_name} ({name})")))
}

fn check_fresh_type_name(
    schema: &Schema,
    op: &ChangeOp,
    name: &str,
) -> Result<(), PreconditionViolation> {
    if schema.has_type(name) {
        Err(PreconditionViolation::clause(
            op,
            format!("n ∉ T.names ({name})"),
        ))
    } else {
        Ok(())
    }
}

fn check_feature_name_free(
    t: &SchemaType,
    op: &ChangeOp,
    name: &str,
) -> Result<(), PreconditionViolation> {
    check_not_reserved(op, name)?;
    if t.has_feature(name) {
        Err(PreconditionViolation::clause(
            op,
            format!("n ∉ {}.features.names ({name})", t.name),
        ))
    } else {
        Ok(())
    }
}

fn check_not_reserved(op: &ChangeOp, name: &str) -> Result<(), PreconditionViolation> {
    if RESERVED_FIELD_NAMES.contains(&name) {
        Err(PreconditionViolation::clause(
            op,
            format!("`{name}` is reserved"),
        ))
    } else {
        Ok(())
    }
}

fn check_distinct_names(
    op: &ChangeOp,
    features: &[Feature],
) -> Result<(), PreconditionViolation> {
    let mut seen = BTreeSet::new();
    for f in features {
        check_not_reserved(op, &f.name)?;
        if !seen.insert(f.name.as_str()) {
            return Err(PreconditionViolation::clause(
                op,
                format!("feature names are distinct ({})", f.name),
            ));
        }
    }
    Ok(())
}

fn new_type(name: &str, kind: TypeKind, root: bool, features: Vec<Feature>) -> SchemaType {
    SchemaType {
        name: name.to_string(),
        kind,
        root,
        common_features: features,
        variations: vec![StructuralVariation::empty(1)],
    }
}

/// Rewrites every reference and aggregate target equal to `old` to `new`.
/// Returns the names of the types that changed.
fn rewrite_targets(schema: &mut Schema, old: &str, new: &str) -> BTreeSet<String> {
    let mut touched = BTreeSet::new();
    for t in &mut schema.types {
        let mut changed = false;
        let features = t
            .common_features
            .iter_mut()
            .chain(t.variations.iter_mut().flat_map(|v| v.features.iter_mut()));
        for f in features {
            match &mut f.kind {
                FeatureKind::Reference(rf) if rf.target == old => {
                    rf.target = new.to_string();
                    changed = true;
                }
                FeatureKind::Aggregate(ag) if ag.target == old => {
                    ag.target = new.to_string();
                    changed = true;
                }
                _ => {}
            }
        }
        if changed {
            touched.insert(t.name.clone());
        }
    }
    touched
}

/// Applies `edit` to every occurrence of feature `name` within `scope`
/// (listed variations, or common plus all variations when unscoped).
/// Returns the number of occurrences edited.
fn mutate_occurrences(
    t: &mut SchemaType,
    name: &str,
    scope: &Option<Vec<u32>>,
    mut edit: impl FnMut(&mut Feature),
) -> usize {
    let mut count = 0;
    match scope {
        None => {
            for f in t.common_features.iter_mut() {
                if f.name == name {
                    edit(f);
                    count += 1;
                }
            }
            for v in t.variations.iter_mut() {
                for f in v.features.iter_mut() {
                    if f.name == name {
                        edit(f);
                        count += 1;
                    }
                }
            }
        }
        Some(ids) => {
            for v in t.variations.iter_mut() {
                if ids.contains(&v.var_id) {
                    for f in v.features.iter_mut() {
                        if f.name == name {
                            edit(f);
                            count += 1;
                        }
                    }
                }
            }
        }
    }
    count
}

/// Removes every occurrence of feature `name` within `scope`. Emptied
/// variations are retained; variation identity is stable.
fn remove_occurrences(t: &mut SchemaType, name: &str, scope: &Option<Vec<u32>>) -> usize {
    let mut count = 0;
    match scope {
        None => {
            let before = t.common_features.len();
            t.common_features.retain(|f| f.name != name);
            count += before - t.common_features.len();
            for v in t.variations.iter_mut() {
                let before = v.features.len();
                v.features.retain(|f| f.name != name);
                count += before - v.features.len();
            }
        }
        Some(ids) => {
            for v in t.variations.iter_mut() {
                if ids.contains(&v.var_id) {
                    let before = v.features.len();
                    v.features.retain(|f| f.name != name);
                    count += before - v.features.len();
                }
            }
        }
    }
    count
}

/// Keeps only the matches whose per-type check passes; a named selector
/// propagates the failure, the wildcard skips it. Zero surviving matches is
/// itself a violation.
fn effective_matches<T>(
    op: &ChangeOp,
    selector: &FeatureSelector,
    matches: Vec<SelectorMatch>,
    mut check: impl FnMut(&SelectorMatch) -> Result<T, PreconditionViolation>,
) -> Result<Vec<(SelectorMatch, T)>, PreconditionViolation> {
    let wildcard = matches!(selector.target, TypeTarget::Wildcard);
    let mut kept = Vec::new();
    for m in matches {
        match check(&m) {
            Ok(v) => kept.push((m, v)),
            Err(_) if wildcard => {}
            Err(e) => return Err(e),
        }
    }
    if kept.is_empty() {
        return Err(PreconditionViolation::clause(
            op,
            "selector applies to at least one type",
        ));
    }
    Ok(kept)
}

fn entity_only(
    schema: &Schema,
    op: &ChangeOp,
    type_name: &str,
) -> Result<(), PreconditionViolation> {
    match schema.schema_type(type_name) {
        Some(t) if t.kind == TypeKind::Entity => Ok(()),
        _ => Err(PreconditionViolation::clause(
            op,
            format!("e ∈ E ({type_name})"),
        )),
    }
}

// ---------------------------------------------------------------------------
// schema type operations
// ---------------------------------------------------------------------------

fn add_type(
    schema: &Schema,
    op: &ChangeOp,
    flavor: TypeFlavor,
    name: &str,
    root: bool,
    features: &[Feature],
) -> Result<Schema, PreconditionViolation> {
    if schema.has_type(name) {
        return Err(PreconditionViolation::clause(op, format!("t ∉ T ({name})")));
    }
    check_distinct_names(op, features)?;
    for f in features {
        if let Some(target) = f.target() {
            if !schema.has_type(target) && target != name {
                return Err(PreconditionViolation::UnknownTargetType {
                    op: print_op(op),
                    target: target.to_string(),
                });
            }
        }
    }
    let root = match flavor {
        TypeFlavor::Entity => root,
        TypeFlavor::Relationship => false,
    };
    let mut next = schema.clone();
    next.types
        .push(new_type(name, flavor_kind(flavor), root, features.to_vec()));
    Ok(next)
}

fn delete_type(
    schema: &Schema,
    op: &ChangeOp,
    flavor: TypeFlavor,
    name: &str,
) -> Result<Schema, PreconditionViolation> {
    typed(schema, op, name, flavor)?;
    let mut referrers = schema.referrers_of(name);
    referrers.remove(name);
    if !referrers.is_empty() {
        return Err(PreconditionViolation::clause(
            op,
            format!(
                "t is not the target of other types' references or aggregates (referrers: {})",
                referrers.into_iter().collect::<Vec<_>>().join(", ")
            ),
        ));
    }
    let mut next = schema.clone();
    next.types.retain(|t| t.name != name);
    Ok(next)
}

fn rename_type(
    schema: &Schema,
    op: &ChangeOp,
    flavor: TypeFlavor,
    name: &str,
    new_name: &str,
) -> Result<Schema, PreconditionViolation> {
    typed(schema, op, name, flavor)?;
    check_fresh_type_name(schema, op, new_name)?;
    let mut next = schema.clone();
    next.schema_type_mut(name).unwrap().name = new_name.to_string();
    rewrite_targets(&mut next, name, new_name);
    Ok(next)
}

fn extract_type(
    schema: &Schema,
    op: &ChangeOp,
    flavor: TypeFlavor,
    name: &str,
    feature_names: &[String],
    new_name: &str,
) -> Result<Schema, PreconditionViolation> {
    let t = typed(schema, op, name, flavor)?;
    check_fresh_type_name(schema, op, new_name)?;
    let extracted = select_features(op, t, feature_names)?;
    let mut next = schema.clone();
    next.types.push(new_type(
        new_name,
        flavor_kind(flavor),
        flavor == TypeFlavor::Entity,
        extracted,
    ));
    Ok(next)
}

fn split_type(
    schema: &Schema,
    op: &ChangeOp,
    flavor: TypeFlavor,
    name: &str,
    first: (&String, &Vec<String>),
    second: (&String, &Vec<String>),
) -> Result<Schema, PreconditionViolation> {
    let t = typed(schema, op, name, flavor)?;
    if first.0 == second.0 {
        return Err(PreconditionViolation::clause(op, "n1 ≠ n2"));
    }
    check_fresh_type_name(schema, op, first.0)?;
    check_fresh_type_name(schema, op, second.0)?;
    let fs1 = select_features(op, t, first.1)?;
    let fs2 = select_features(op, t, second.1)?;

    let mut referrers = schema.referrers_of(name);
    referrers.remove(name);
    if !referrers.is_empty() {
        return Err(PreconditionViolation::clause(
            op,
            format!(
                "t is not the target of other types' references or aggregates (referrers: {})",
                referrers.into_iter().collect::<Vec<_>>().join(", ")
            ),
        ));
    }

    let kind = flavor_kind(flavor);
    let root = flavor == TypeFlavor::Entity;
    let position = schema.types.iter().position(|x| x.name == name).unwrap();
    let mut next = schema.clone();
    next.types.remove(position);
    next.types.insert(position, new_type(first.0, kind, root, fs1));
    next.types
        .insert(position + 1, new_type(second.0, kind, root, fs2));
    Ok(next)
}

fn merge_types(
    schema: &Schema,
    op: &ChangeOp,
    flavor: TypeFlavor,
    first: &str,
    second: &str,
    new_name: &str,
) -> Result<Schema, PreconditionViolation> {
    if first == second {
        return Err(PreconditionViolation::clause(op, "t1 ≠ t2"));
    }
    let t1 = typed(schema, op, first, flavor)?;
    let t2 = typed(schema, op, second, flavor)?;
    check_fresh_type_name(schema, op, new_name)?;

    // Union of the two feature sets; on a name collision the first type's
    // feature wins.
    let mut features: Vec<Feature> = t1.all_features().into_iter().cloned().collect();
    let taken: BTreeSet<String> = features.iter().map(|f| f.name.clone()).collect();
    for f in t2.all_features() {
        if !taken.contains(&f.name) {
            features.push(f.clone());
        }
    }

    let root = match flavor {
        TypeFlavor::Entity => t1.root || t2.root,
        TypeFlavor::Relationship => false,
    };
    let position = schema.types.iter().position(|x| x.name == first).unwrap();
    let mut next = schema.clone();
    next.types.insert(
        position,
        new_type(new_name, flavor_kind(flavor), root, features),
    );
    next.types.retain(|t| t.name != first && t.name != second);
    rewrite_targets(&mut next, first, new_name);
    rewrite_targets(&mut next, second, new_name);
    Ok(next)
}

fn select_features(
    op: &ChangeOp,
    t: &SchemaType,
    names: &[String],
) -> Result<Vec<Feature>, PreconditionViolation> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for name in names {
        if !seen.insert(name.as_str()) {
            return Err(PreconditionViolation::clause(
                op,
                format!("fs has distinct names ({name})"),
            ));
        }
        let f = t.feature(name).ok_or_else(|| {
            PreconditionViolation::clause(op, format!("fs ⊆ F^{} ({name})", t.name))
        })?;
        out.push(f.clone());
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// variation operations
// ---------------------------------------------------------------------------

fn variation_op_type<'a>(
    schema: &'a Schema,
    op: &ChangeOp,
    flavor: TypeFlavor,
    type_name: &str,
    var_id: u32,
) -> Result<&'a SchemaType, PreconditionViolation> {
    let t = typed(schema, op, type_name, flavor)?;
    if t.variation(var_id).is_none() {
        return Err(PreconditionViolation::UnknownVariation {
            op: print_op(op),
            type_name: type_name.to_string(),
            var_id,
        });
    }
    Ok(t)
}

fn delete_variation(
    schema: &Schema,
    op: &ChangeOp,
    flavor: TypeFlavor,
    type_name: &str,
    var_id: u32,
) -> Result<Schema, PreconditionViolation> {
    let t = variation_op_type(schema, op, flavor, type_name, var_id)?;
    if t.variations.len() < 2 {
        return Err(PreconditionViolation::clause(
            op,
            "V^t remains non-empty after removal",
        ));
    }
    let mut next = schema.clone();
    next.schema_type_mut(type_name)
        .unwrap()
        .variations
        .retain(|v| v.var_id != var_id);
    Ok(next)
}

fn adapt_variation(
    schema: &Schema,
    op: &ChangeOp,
    flavor: TypeFlavor,
    type_name: &str,
    source: u32,
    target: u32,
) -> Result<Schema, PreconditionViolation> {
    if source == target {
        return Err(PreconditionViolation::clause(op, "v1 ≠ v2"));
    }
    variation_op_type(schema, op, flavor, type_name, source)?;
    variation_op_type(schema, op, flavor, type_name, target)?;
    let mut next = schema.clone();
    next.schema_type_mut(type_name)
        .unwrap()
        .variations
        .retain(|v| v.var_id != source);
    Ok(next)
}

fn union_variations(
    schema: &Schema,
    op: &ChangeOp,
    flavor: TypeFlavor,
    type_name: &str,
) -> Result<Schema, PreconditionViolation> {
    let t = typed(schema, op, type_name, flavor)?;
    let var_id = t.variations.iter().map(|v| v.var_id).min().unwrap_or(1);

    let mut features: Vec<Feature> = Vec::new();
    let mut taken = BTreeSet::new();
    let mut count: Option<u64> = None;
    for v in &t.variations {
        for f in &v.features {
            if taken.insert(f.name.clone()) {
                features.push(f.clone());
            }
        }
        if let Some(c) = v.count {
            count = Some(count.unwrap_or(0) + c);
        }
    }

    let mut next = schema.clone();
    next.schema_type_mut(type_name).unwrap().variations = vec![StructuralVariation {
        var_id,
        features,
        count,
    }];
    Ok(next)
}

// ---------------------------------------------------------------------------
// feature operations
// ---------------------------------------------------------------------------

fn delete_feature(
    schema: &Schema,
    op: &ChangeOp,
    selector: &FeatureSelector,
) -> Result<Schema, PreconditionViolation> {
    let matches = resolve_selector(schema, op, selector, FeatureKindTag::Any)?;
    let mut next = schema.clone();
    for m in matches {
        let t = next.schema_type_mut(&m.type_name).unwrap();
        remove_occurrences(t, &m.feature, &m.variations);
    }
    Ok(next)
}

fn rename_feature(
    schema: &Schema,
    op: &ChangeOp,
    selector: &FeatureSelector,
    new_name: &str,
) -> Result<Schema, PreconditionViolation> {
    if new_name.contains('.') {
        return Err(PreconditionViolation::clause(op, "n is a plain name"));
    }
    check_not_reserved(op, new_name)?;
    let matches = resolve_selector(schema, op, selector, FeatureKindTag::Any)?;
    let kept = effective_matches(op, selector, matches, |m| {
        let t = schema.schema_type(&m.type_name).unwrap();
        if t.has_feature(new_name) {
            if m.variations.is_some() {
                Err(PreconditionViolation::AmbiguousSelector {
                    op: print_op(op),
                    detail: format!(
                        "renaming to `{new_name}` collides within {}",
                        m.type_name
                    ),
                })
            } else {
                Err(PreconditionViolation::clause(
                    op,
                    format!("n ∉ {}.features.names ({new_name})", m.type_name),
                ))
            }
        } else {
            Ok(())
        }
    })?;
    let mut next = schema.clone();
    for (m, ()) in kept {
        let t = next.schema_type_mut(&m.type_name).unwrap();
        mutate_occurrences(t, &m.feature, &m.variations, |f| {
            f.name = new_name.to_string();
        });
    }
    Ok(next)
}

#[allow(clippy::too_many_arguments)]
fn copy_move(
    schema: &Schema,
    op: &ChangeOp,
    source_type: &str,
    source_feature: &str,
    dest_type: &str,
    dest_feature: &str,
    condition: &JoinCondition,
    remove_source: bool,
) -> Result<Schema, PreconditionViolation> {
    let t1 = schema
        .schema_type(source_type)
        .ok_or_else(|| PreconditionViolation::clause(op, format!("t1 ∈ T ({source_type})")))?;
    let t2 = schema
        .schema_type(dest_type)
        .ok_or_else(|| PreconditionViolation::clause(op, format!("t2 ∈ T ({dest_type})")))?;
    let f = t1.feature(source_feature).ok_or_else(|| {
        PreconditionViolation::clause(op, format!("f ∈ F^{source_type} ({source_feature})"))
    })?;
    check_feature_name_free(t2, op, dest_feature)?;
    if t1.feature(&condition.source_feature).is_none() {
        return Err(PreconditionViolation::clause(
            op,
            format!(
                "join source ∈ F^{source_type} ({})",
                condition.source_feature
            ),
        ));
    }
    if t2.feature(&condition.target_feature).is_none() {
        return Err(PreconditionViolation::clause(
            op,
            format!("join target ∈ F^{dest_type} ({})", condition.target_feature),
        ));
    }

    let mut copied = f.clone();
    copied.name = dest_feature.to_string();
    let mut next = schema.clone();
    next.schema_type_mut(dest_type)
        .unwrap()
        .common_features
        .push(copied);
    if remove_source {
        let t = next.schema_type_mut(source_type).unwrap();
        remove_occurrences(t, source_feature, &None);
    }
    Ok(next)
}

fn nest_features(
    schema: &Schema,
    op: &ChangeOp,
    selector: &FeatureSelector,
    aggregate: &str,
) -> Result<Schema, PreconditionViolation> {
    let matches = resolve_selector(schema, op, selector, FeatureKindTag::Any)?;
    let kept = effective_matches(op, selector, matches, |m| {
        let t = schema.schema_type(&m.type_name).unwrap();
        if t.kind != TypeKind::Entity {
            return Err(PreconditionViolation::clause(
                op,
                format!("e1 ∈ E ({})", m.type_name),
            ));
        }
        let ag = t
            .feature(aggregate)
            .and_then(|f| f.as_aggregate())
            .ok_or_else(|| {
                PreconditionViolation::clause(
                    op,
                    format!("ag ∈ F^{} and ag is an aggregate ({aggregate})", m.type_name),
                )
            })?;
        if m.feature == aggregate {
            return Err(PreconditionViolation::clause(op, "f ≠ ag"));
        }
        let e2 = schema.schema_type(&ag.target).ok_or_else(|| {
            PreconditionViolation::UnknownTargetType {
                op: print_op(op),
                target: ag.target.clone(),
            }
        })?;
        if e2.has_feature(&m.feature) {
            return Err(PreconditionViolation::clause(
                op,
                format!("f ∉ F^{} ({})", e2.name, m.feature),
            ));
        }
        Ok(ag.target.clone())
    })?;

    let mut next = schema.clone();
    for (m, target) in kept {
        let t = next.schema_type_mut(&m.type_name).unwrap();
        let feature = t.feature(&m.feature).cloned();
        if let Some(feature) = feature {
            remove_occurrences(t, &m.feature, &m.variations);
            next.schema_type_mut(&target)
                .unwrap()
                .common_features
                .push(feature);
        }
    }
    Ok(next)
}

fn unnest_features(
    schema: &Schema,
    op: &ChangeOp,
    selector: &FeatureSelector,
) -> Result<Schema, PreconditionViolation> {
    if selector.variations.is_some() {
        return Err(PreconditionViolation::AmbiguousSelector {
            op: print_op(op),
            detail: "variation-scoped unnest is not expressible".to_string(),
        });
    }
    let type_names: Vec<String> = match &selector.target {
        TypeTarget::Named(n) => {
            if schema.schema_type(n).is_none() {
                return Err(PreconditionViolation::clause(op, format!("e1 ∈ E ({n})")));
            }
            vec![n.clone()]
        }
        TypeTarget::Wildcard => schema.types.iter().map(|t| t.name.clone()).collect(),
    };
    let wildcard = matches!(selector.target, TypeTarget::Wildcard);

    let mut edits: Vec<(String, String, String)> = Vec::new(); // (e1, e2, feature)
    for type_name in &type_names {
        for dotted in &selector.features {
            match unnest_check(schema, op, type_name, dotted) {
                Ok((target, feature)) => edits.push((type_name.clone(), target, feature)),
                Err(_) if wildcard => {}
                Err(e) => return Err(e),
            }
        }
    }
    if edits.is_empty() {
        return Err(PreconditionViolation::clause(
            op,
            "selector applies to at least one type",
        ));
    }

    let mut next = schema.clone();
    for (e1, e2, feature_name) in edits {
        let source = next.schema_type_mut(&e2).unwrap();
        let feature = source.feature(&feature_name).cloned();
        if let Some(feature) = feature {
            remove_occurrences(source, &feature_name, &None);
            next.schema_type_mut(&e1)
                .unwrap()
                .common_features
                .push(feature);
        }
    }
    Ok(next)
}

fn unnest_check(
    schema: &Schema,
    op: &ChangeOp,
    type_name: &str,
    dotted: &str,
) -> Result<(String, String), PreconditionViolation> {
    let (aggregate, feature) = dotted.split_once('.').ok_or_else(|| {
        PreconditionViolation::clause(op, format!("selector names aggregate.feature ({dotted})"))
    })?;
    if feature.contains('.') {
        return Err(PreconditionViolation::clause(
            op,
            format!("selector names aggregate.feature ({dotted})"),
        ));
    }
    let t = schema.schema_type(type_name).unwrap();
    if t.kind != TypeKind::Entity {
        return Err(PreconditionViolation::clause(
            op,
            format!("e1 ∈ E ({type_name})"),
        ));
    }
    let ag = t
        .feature(aggregate)
        .and_then(|f| f.as_aggregate())
        .ok_or_else(|| {
            PreconditionViolation::clause(
                op,
                format!("ag ∈ F^{type_name} and ag is an aggregate ({aggregate})"),
            )
        })?;
    let e2 = schema
        .schema_type(&ag.target)
        .ok_or_else(|| PreconditionViolation::UnknownTargetType {
            op: print_op(op),
            target: ag.target.clone(),
        })?;
    if !e2.has_feature(feature) {
        return Err(PreconditionViolation::clause(
            op,
            format!("f ∈ F^{} ({feature})", e2.name),
        ));
    }
    if t.has_feature(feature) {
        return Err(PreconditionViolation::clause(
            op,
            format!("f ∉ F^{type_name} ({feature})"),
        ));
    }
    Ok((ag.target.clone(), feature.to_string()))
}

// ---------------------------------------------------------------------------
// attribute operations
// ---------------------------------------------------------------------------

fn add_attribute(
    schema: &Schema,
    op: &ChangeOp,
    type_name: &str,
    name: &str,
    data_type: &DataType,
) -> Result<Schema, PreconditionViolation> {
    let t = schema
        .schema_type(type_name)
        .ok_or_else(|| PreconditionViolation::clause(op, format!("t ∈ T ({type_name})")))?;
    check_not_reserved(op, name)?;
    if t.has_feature(name) {
        return Err(PreconditionViolation::clause(
            op,
            format!("at ∉ C^{type_name} ({name})"),
        ));
    }
    let mut next = schema.clone();
    next.schema_type_mut(type_name)
        .unwrap()
        .common_features
        .push(Feature::attribute(name, data_type.clone()));
    Ok(next)
}

fn cast_attribute(
    schema: &Schema,
    op: &ChangeOp,
    selector: &FeatureSelector,
    to: &DataType,
) -> Result<Schema, PreconditionViolation> {
    if !to.is_scalar() {
        return Err(PreconditionViolation::NonScalarCastTarget {
            op: print_op(op),
            target: to.to_string(),
        });
    }
    let matches = resolve_selector(schema, op, selector, FeatureKindTag::Attribute)?;
    let mut next = schema.clone();
    for m in matches {
        let t = next.schema_type_mut(&m.type_name).unwrap();
        mutate_occurrences(t, &m.feature, &m.variations, |f| {
            if let FeatureKind::Attribute(at) = &mut f.kind {
                at.data_type = to.clone();
                // A constraint bound to the old type does not survive a cast
                // away from it.
                at.constraint = match (&at.constraint, to) {
                    (Some(Constraint::Regex(_)), DataType::String) => at.constraint.clone(),
                    (Some(Constraint::Range(_, _)), DataType::Integer) => at.constraint.clone(),
                    _ => None,
                };
            }
        });
    }
    Ok(next)
}

fn set_key(
    schema: &Schema,
    op: &ChangeOp,
    selector: &FeatureSelector,
    key: bool,
) -> Result<Schema, PreconditionViolation> {
    let matches = resolve_selector(schema, op, selector, FeatureKindTag::Attribute)?;
    let kept = effective_matches(op, selector, matches, |m| {
        entity_only(schema, op, &m.type_name)?;
        let t = schema.schema_type(&m.type_name).unwrap();
        let current = t
            .feature(&m.feature)
            .and_then(|f| f.as_attribute())
            .map(|at| at.key)
            .unwrap_or(false);
        if current == key {
            return Err(PreconditionViolation::clause(
                op,
                format!("at.key = {}", if key { "False" } else { "True" }),
            ));
        }
        Ok(())
    })?;
    let mut next = schema.clone();
    for (m, ()) in kept {
        let t = next.schema_type_mut(&m.type_name).unwrap();
        mutate_occurrences(t, &m.feature, &m.variations, |f| {
            if let FeatureKind::Attribute(at) = &mut f.kind {
                at.key = key;
            }
        });
    }
    Ok(next)
}

// ---------------------------------------------------------------------------
// reference operations
// ---------------------------------------------------------------------------

#[allow(clippy::too_many_arguments)]
fn add_reference(
    schema: &Schema,
    op: &ChangeOp,
    type_name: &str,
    name: &str,
    value_type: &Option<DataType>,
    attributes: &[crate::model::RefAttribute],
    cardinality: Cardinality,
    target: &str,
    condition: &Option<JoinCondition>,
) -> Result<Schema, PreconditionViolation> {
    let t = schema
        .schema_type(type_name)
        .ok_or_else(|| PreconditionViolation::clause(op, format!("t ∈ T ({type_name})")))?;
    check_feature_name_free(t, op, name)?;
    let target_type =
        schema
            .schema_type(target)
            .ok_or_else(|| PreconditionViolation::UnknownTargetType {
                op: print_op(op),
                target: target.to_string(),
            })?;
    if target_type.kind != TypeKind::Entity {
        return Err(PreconditionViolation::clause(
            op,
            format!("rf.type is an entity type ({target})"),
        ));
    }
    if let Some(cond) = condition {
        if target_type.feature(&cond.source_feature).is_none() {
            return Err(PreconditionViolation::clause(
                op,
                format!("join source ∈ F^{target} ({})", cond.source_feature),
            ));
        }
        if t.feature(&cond.target_feature).is_none() {
            return Err(PreconditionViolation::clause(
                op,
                format!("join target ∈ F^{type_name} ({})", cond.target_feature),
            ));
        }
    }
    if let Some(vt) = value_type {
        if !vt.is_scalar() {
            return Err(PreconditionViolation::NonScalarCastTarget {
                op: print_op(op),
                target: vt.to_string(),
            });
        }
    }
    let mut next = schema.clone();
    next.schema_type_mut(type_name)
        .unwrap()
        .common_features
        .push(Feature {
            name: name.to_string(),
            optional: false,
            kind: FeatureKind::Reference(Reference {
                target: target.to_string(),
                cardinality,
                value_type: value_type.clone(),
                attributes: attributes.to_vec(),
            }),
        });
    Ok(next)
}

fn cast_reference(
    schema: &Schema,
    op: &ChangeOp,
    selector: &FeatureSelector,
    to: &DataType,
) -> Result<Schema, PreconditionViolation> {
    if !to.is_scalar() {
        return Err(PreconditionViolation::NonScalarCastTarget {
            op: print_op(op),
            target: to.to_string(),
        });
    }
    let matches = resolve_selector(schema, op, selector, FeatureKindTag::Reference)?;
    let kept = effective_matches(op, selector, matches, |m| {
        let t = schema.schema_type(&m.type_name).unwrap();
        let rf = t.feature(&m.feature).and_then(|f| f.as_reference()).unwrap();
        if !rf.attributes.is_empty() {
            return Err(PreconditionViolation::clause(
                op,
                format!("rf carries no attributes ({})", m.feature),
            ));
        }
        Ok(())
    })?;
    let mut next = schema.clone();
    for (m, ()) in kept {
        let t = next.schema_type_mut(&m.type_name).unwrap();
        mutate_occurrences(t, &m.feature, &m.variations, |f| {
            if let FeatureKind::Reference(rf) = &mut f.kind {
                rf.value_type = Some(to.clone());
            }
        });
    }
    Ok(next)
}

fn mult_feature(
    schema: &Schema,
    op: &ChangeOp,
    selector: &FeatureSelector,
    kind: FeatureKindTag,
    cardinality: Cardinality,
) -> Result<Schema, PreconditionViolation> {
    let matches = resolve_selector(schema, op, selector, kind)?;
    let kept = effective_matches(op, selector, matches, |m| {
        if kind == FeatureKindTag::Aggregate {
            entity_only(schema, op, &m.type_name)?;
        }
        Ok(())
    })?;
    let mut next = schema.clone();
    for (m, ()) in kept {
        let t = next.schema_type_mut(&m.type_name).unwrap();
        mutate_occurrences(t, &m.feature, &m.variations, |f| match &mut f.kind {
            FeatureKind::Reference(rf) => rf.cardinality = cardinality,
            FeatureKind::Aggregate(ag) => ag.cardinality = cardinality,
            FeatureKind::Attribute(_) => {}
        });
    }
    Ok(next)
}

fn morph_reference(
    schema: &Schema,
    op: &ChangeOp,
    selector: &FeatureSelector,
    new_name: &Option<String>,
) -> Result<Schema, PreconditionViolation> {
    let matches = resolve_selector(schema, op, selector, FeatureKindTag::Reference)?;

    let mut next = schema.clone();
    let wildcard = matches!(selector.target, TypeTarget::Wildcard);
    let mut applied = 0usize;
    for m in matches {
        match morph_reference_one(&mut next, op, &m, new_name) {
            Ok(()) => applied += 1,
            Err(_) if wildcard => {}
            Err(e) => return Err(e),
        }
    }
    if applied == 0 {
        return Err(PreconditionViolation::clause(
            op,
            "selector applies to at least one type",
        ));
    }
    Ok(next)
}

fn morph_reference_one(
    schema: &mut Schema,
    op: &ChangeOp,
    m: &SelectorMatch,
    new_name: &Option<String>,
) -> Result<(), PreconditionViolation> {
    let t = schema.schema_type(&m.type_name).unwrap();
    let rf = t
        .feature(&m.feature)
        .and_then(|f| f.as_reference())
        .cloned()
        .ok_or_else(|| {
            PreconditionViolation::clause(op, format!("rf ∈ F^{} ({})", m.type_name, m.feature))
        })?;
    let optional = t.feature(&m.feature).map(|f| f.optional).unwrap_or(false);
    let name = new_name.clone().unwrap_or_else(|| m.feature.clone());
    if name != m.feature {
        check_feature_name_free(t, op, &name)?;
    }

    // The aggregate target must end up non-root. A root target is demoted
    // only when no other reference still points at it.
    let target = schema.schema_type(&rf.target).ok_or_else(|| {
        PreconditionViolation::UnknownTargetType {
            op: print_op(op),
            target: rf.target.clone(),
        }
    })?;
    let mut demote = false;
    if target.root {
        let other_refs = count_references_to(schema, &rf.target);
        if other_refs > 1 {
            return Err(PreconditionViolation::clause(
                op,
                format!(
                    "ag.type is demotable to non-root (`{}` is still referenced elsewhere)",
                    rf.target
                ),
            ));
        }
        demote = true;
    }

    let aggregate = Feature {
        name,
        optional: false,
        kind: FeatureKind::Aggregate(Aggregate {
            target: rf.target.clone(),
            cardinality: rf.cardinality,
        }),
    };
    replace_feature(
        schema.schema_type_mut(&m.type_name).unwrap(),
        &m.feature,
        &m.variations,
        aggregate,
        optional,
    );
    if demote {
        schema.schema_type_mut(&rf.target).unwrap().root = false;
    }
    Ok(())
}

fn schema_feature_optional(schema: &Schema, type_name: &str, feature: &str) -> bool {
    schema
        .schema_type(type_name)
        .and_then(|t| t.feature(feature))
        .map(|f| f.optional)
        .unwrap_or(false)
}

fn count_references_to(schema: &Schema, target: &str) -> usize {
    schema
        .types
        .iter()
        .flat_map(|t| t.all_features())
        .filter(|f| {
            matches!(&f.kind, FeatureKind::Reference(rf) if rf.target == target)
        })
        .count()
}

/// Replaces every occurrence of `name` within scope by `replacement`,
/// preserving the original optional flag.
fn replace_feature(
    t: &mut SchemaType,
    name: &str,
    scope: &Option<Vec<u32>>,
    replacement: Feature,
    optional: bool,
) {
    mutate_occurrences(t, name, scope, |f| {
        let mut r = replacement.clone();
        r.optional = optional;
        *f = r;
    });
}

// ---------------------------------------------------------------------------
// aggregate operations
// ---------------------------------------------------------------------------

fn add_aggregate(
    schema: &Schema,
    op: &ChangeOp,
    type_name: &str,
    name: &str,
    body: &AggregateBody,
    cardinality: Cardinality,
) -> Result<Schema, PreconditionViolation> {
    entity_only(schema, op, type_name)?;
    let t = schema.schema_type(type_name).unwrap();
    check_feature_name_free(t, op, name)?;

    let mut next = schema.clone();
    let target_name = match body {
        AggregateBody::Existing { target } => {
            let target_type = schema.schema_type(target).ok_or_else(|| {
                PreconditionViolation::UnknownTargetType {
                    op: print_op(op),
                    target: target.clone(),
                }
            })?;
            if target_type.kind != TypeKind::Entity || target_type.root {
                return Err(PreconditionViolation::clause(
                    op,
                    format!("ag.type is a non-root entity type ({target})"),
                ));
            }
            target.clone()
        }
        AggregateBody::Inline { fields, type_name: new_type_name } => {
            check_fresh_type_name(schema, op, new_type_name)?;
            check_distinct_names(op, fields)?;
            next.types.push(new_type(
                new_type_name,
                TypeKind::Entity,
                false,
                fields.clone(),
            ));
            new_type_name.clone()
        }
    };
    next.schema_type_mut(type_name)
        .unwrap()
        .common_features
        .push(Feature {
            name: name.to_string(),
            optional: false,
            kind: FeatureKind::Aggregate(Aggregate {
                target: target_name,
                cardinality,
            }),
        });
    Ok(next)
}

fn morph_aggregate(
    schema: &Schema,
    op: &ChangeOp,
    selector: &FeatureSelector,
    new_name: &Option<String>,
) -> Result<Schema, PreconditionViolation> {
    let matches = resolve_selector(schema, op, selector, FeatureKindTag::Aggregate)?;
    let kept = effective_matches(op, selector, matches, |m| {
        entity_only(schema, op, &m.type_name)?;
        let t = schema.schema_type(&m.type_name).unwrap();
        let ag = t.feature(&m.feature).and_then(|f| f.as_aggregate()).unwrap();
        let name = new_name.clone().unwrap_or_else(|| m.feature.clone());
        if name != m.feature {
            check_feature_name_free(t, op, &name)?;
        }
        Ok((ag.clone(), name))
    })?;
    let mut next = schema.clone();
    for (m, (ag, name)) in kept {
        let optional = schema_feature_optional(&next, &m.type_name, &m.feature);
        let reference = Feature {
            name,
            optional: false,
            kind: FeatureKind::Reference(Reference {
                target: ag.target.clone(),
                cardinality: ag.cardinality,
                value_type: None,
                attributes: Vec::new(),
            }),
        };
        replace_feature(
            next.schema_type_mut(&m.type_name).unwrap(),
            &m.feature,
            &m.variations,
            reference,
            optional,
        );
    }
    Ok(next)
}
