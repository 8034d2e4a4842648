//! Schema updater tests: the Sales_department refactoring end to end, plus
//! per-category positive and negative cases.

use std::collections::BTreeSet;

use uschema::athena;
use uschema::evolution::{apply_op, apply_script, touched_types, PreconditionViolation};
use uschema::model::{
    schemas_equal_except, validate, Cardinality, DataType, Schema, TypeKind,
};
use uschema::orion::{self, ChangeOp};

fn fixture(name: &str) -> String {
    let path = format!("{}/tests/fixtures/{}", env!("CARGO_MANIFEST_DIR"), name);
    std::fs::read_to_string(path).unwrap()
}

fn sales() -> Schema {
    athena::parse_str(&fixture("sales.athena")).unwrap()
}

fn ops(text: &str) -> Vec<ChangeOp> {
    orion::parse_str(&format!("X operations Using S:1\n{text}"))
        .unwrap()
        .ops
}

fn op(text: &str) -> ChangeOp {
    ops(text).remove(0)
}

/// Parses an op against an arbitrary schema and applies it.
fn apply(schema: &Schema, text: &str) -> Result<Schema, PreconditionViolation> {
    apply_op(schema, &op(text))
}

#[test]
fn sales_refactoring_applies_cleanly() {
    let schema = sales();
    let script = orion::parse_str(&fixture("sales_ops.orion")).unwrap();
    let outcome = apply_script(&schema, &script).unwrap();
    assert!(outcome.is_success(), "failed: {:?}", outcome.failed_at);
    assert_eq!(outcome.log.len(), 15);

    let result = outcome.schema;
    assert_eq!(result.version, 2);
    let names: BTreeSet<&str> = result.types.iter().map(|t| t.name.as_str()).collect();
    let expected: BTreeSet<&str> = [
        "Employee",
        "PersonalData",
        "Summary",
        "Sale",
        "SeasonExercise",
        "Company",
        "Address",
        "Media",
    ]
    .into_iter()
    .collect();
    assert_eq!(names, expected);
    assert_eq!(validate(&result), vec![]);

    // Salesperson became Employee with the single remaining variation and a
    // reference to PersonalData.
    let employee = result.schema_type("Employee").unwrap();
    assert_eq!(employee.variations.len(), 1);
    assert_eq!(employee.variations[0].var_id, 2);
    let private = employee.feature("privateData").unwrap();
    let rf = private.as_reference().unwrap();
    assert_eq!(rf.target, "PersonalData");
    assert_eq!(rf.cardinality, Cardinality::One);
    assert!(employee.feature("personalData").is_none());
    assert!(employee.feature("email").is_none());

    // PersonalData holds email (nested in) and the address aggregate; the
    // nested city/postcode/street moved into Address.
    let pd = result.schema_type("PersonalData").unwrap();
    assert!(pd.feature("email").is_some());
    let address = pd.feature("address").unwrap().as_aggregate().unwrap();
    assert_eq!(address.target, "Address");
    assert!(pd.feature("postcode").is_none());
    let addr = result.schema_type("Address").unwrap();
    assert!(!addr.root);
    for f in ["country", "city", "postcode", "street"] {
        assert!(addr.feature(f).is_some(), "Address lacks {f}");
    }
    assert_eq!(
        addr.feature("postcode").unwrap().as_attribute().unwrap().data_type,
        DataType::String
    );

    // Summary has the renamed boolean attribute.
    let summary = result.schema_type("Summary").unwrap();
    let is_completed = summary.feature("isCompleted").unwrap();
    assert_eq!(
        is_completed.as_attribute().unwrap().data_type,
        DataType::Boolean
    );
    assert!(summary.feature("completedAt").is_none());

    // profits is Double everywhere it exists.
    for type_name in ["Sale", "Employee", "Summary"] {
        let t = result.schema_type(type_name).unwrap();
        let profits = t.feature("profits").unwrap();
        assert_eq!(
            profits.as_attribute().unwrap().data_type,
            DataType::Double,
            "profits in {type_name}"
        );
    }
    assert!(result.schema_type("Sale").unwrap().feature("isActive").is_none());

    // Company with two keys and the media aggregate.
    let company = result.schema_type("Company").unwrap();
    assert!(company.root);
    assert!(company.feature("id").unwrap().is_key());
    assert!(company.feature("code").unwrap().is_key());
    let media = company.feature("media").unwrap().as_aggregate().unwrap();
    assert_eq!(media.target, "Media");
    assert!(!result.schema_type("Media").unwrap().root);
}

#[test]
fn empty_script_only_bumps_version() {
    let schema = sales();
    let script = orion::parse_str("X operations Using Sales_department:1").unwrap();
    let outcome = apply_script(&schema, &script).unwrap();
    assert!(outcome.is_success());
    assert_eq!(outcome.schema.version, 2);
    assert!(schemas_equal_except(
        &schema,
        &outcome.schema,
        &BTreeSet::new()
    ));
}

#[test]
fn using_mismatch_is_rejected() {
    let schema = sales();
    let script = orion::parse_str("X operations Using Sales_department:7").unwrap();
    assert!(apply_script(&schema, &script).is_err());
    let script = orion::parse_str("X operations Using Other:1").unwrap();
    assert!(apply_script(&schema, &script).is_err());
}

#[test]
fn rename_clash_fails_at_op_zero() {
    let schema = sales();
    let script =
        orion::parse_str("X operations Using Sales_department:1\nRENAME ENTITY Sale TO Salesperson")
            .unwrap();
    let outcome = apply_script(&schema, &script).unwrap();
    let (index, violation) = outcome.failed_at.expect("must fail");
    assert_eq!(index, 0);
    assert!(violation.clause_text().contains("n ∉ T.names"));
    assert!(schemas_equal_except(&schema, &outcome.schema, &BTreeSet::new()));
}

#[test]
fn rename_preserves_variations_and_rewrites_references() {
    let schema = sales();
    let result = apply(&schema, "RENAME ENTITY Sale TO Deal").unwrap();
    assert!(result.schema_type("Sale").is_none());
    let deal = result.schema_type("Deal").unwrap();
    assert_eq!(deal.all_features().len(), 8);
    // SaleSummary.saleId targeted Sale and follows the rename.
    let summary = result.schema_type("SaleSummary").unwrap();
    assert_eq!(
        summary.feature("saleId").unwrap().as_reference().unwrap().target,
        "Deal"
    );
    assert_eq!(validate(&result), vec![]);
}

#[test]
fn merge_of_disjoint_types_unions_features() {
    let schema = athena::parse_str(
        "Schema S:1 Root entity A { a1: String, a2: Integer } Root entity B { b1: Boolean, b2: Double }",
    )
    .unwrap();
    let result = apply(&schema, "MERGE ENTITIES A, B TO C").unwrap();
    assert!(result.schema_type("A").is_none());
    assert!(result.schema_type("B").is_none());
    let c = result.schema_type("C").unwrap();
    assert_eq!(c.all_features().len(), 4);
    assert_eq!(c.variations.len(), 1);
    assert!(c.common_features.len() == 4);
}

#[test]
fn split_partitions_features() {
    let schema = athena::parse_str(
        "Schema S:1 Root entity T { a: String, b: Integer, c: Boolean, d: Double }",
    )
    .unwrap();
    let result = apply(&schema, "SPLIT ENTITY T TO P { a, b } AND Q { c, d }").unwrap();
    assert!(result.schema_type("T").is_none());
    let p_names: BTreeSet<String> = result
        .features_of("P")
        .unwrap()
        .iter()
        .map(|f| f.name.clone())
        .collect();
    let q_names: BTreeSet<String> = result
        .features_of("Q")
        .unwrap()
        .iter()
        .map(|f| f.name.clone())
        .collect();
    let union: BTreeSet<String> = p_names.union(&q_names).cloned().collect();
    let original: BTreeSet<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
    assert_eq!(union, original);
}

#[test]
fn extract_leaves_source_intact() {
    let schema = sales();
    let result = apply(&schema, "EXTRACT ENTITY Sale::id, description TO SaleCore").unwrap();
    assert!(result.schema_type("Sale").is_some());
    let core = result.schema_type("SaleCore").unwrap();
    assert_eq!(core.all_features().len(), 2);
    assert!(core.root);
    let excluded: BTreeSet<String> = ["SaleCore".to_string()].into_iter().collect();
    assert!(schemas_equal_except(&schema, &result, &excluded));
}

#[test]
fn delete_of_referenced_type_is_rejected() {
    let schema = sales();
    // SaleSummary.saleId references Sale.
    let err = apply(&schema, "DELETE ENTITY Sale").unwrap_err();
    assert!(err.clause_text().contains("referrers"));
    // SeasonExercise is referenced by Sale.exercises.
    assert!(apply(&schema, "DELETE ENTITY SeasonExercise").is_err());
    // Company does not exist.
    assert!(apply(&schema, "DELETE ENTITY Company").is_err());
}

#[test]
fn adapt_removes_source_variation() {
    let schema = sales();
    let result = apply(&schema, "ADAPT ENTITY Salesperson::v1 TO v2").unwrap();
    let sp = result.schema_type("Salesperson").unwrap();
    assert_eq!(sp.variations.len(), 1);
    assert_eq!(sp.variations[0].var_id, 2);

    assert!(apply(&schema, "ADAPT ENTITY Salesperson::v1 TO v1").is_err());
    assert!(apply(&schema, "ADAPT ENTITY Salesperson::v9 TO v2").is_err());
}

#[test]
fn delvar_keeps_variation_ids_stable() {
    let schema = sales();
    let result = apply(&schema, "DELVAR ENTITY Salesperson::v1").unwrap();
    let sp = result.schema_type("Salesperson").unwrap();
    assert_eq!(sp.variations.len(), 1);
    assert_eq!(sp.variations[0].var_id, 2);

    // Deleting the last variation would leave V^t empty.
    let err = apply(&result, "DELVAR ENTITY Salesperson::v2").unwrap_err();
    assert!(err.clause_text().contains("non-empty"));
}

#[test]
fn union_on_single_variation_changes_nothing() {
    let schema = sales();
    let result = apply(&schema, "UNION ENTITY Sale").unwrap();
    assert!(schemas_equal_except(&schema, &result, &BTreeSet::new()));
}

#[test]
fn union_merges_variation_features() {
    let schema = athena::parse_str(&fixture("stackoverflow.athena")).unwrap();
    let result = apply(&schema, "UNION RELATIONSHIP Rel_Comments").unwrap();
    let rel = result.schema_type("Rel_Comments").unwrap();
    assert_eq!(rel.variations.len(), 1);
    assert_eq!(rel.variations[0].var_id, 1);
    let added: BTreeSet<&str> = rel.variations[0]
        .features
        .iter()
        .map(|f| f.name.as_str())
        .collect();
    let expected: BTreeSet<&str> = ["UserId", "Text", "UserDisplayName"].into_iter().collect();
    assert_eq!(added, expected);
    assert_eq!(rel.common_features.len(), 4);
}

#[test]
fn nest_moves_feature_into_aggregate_target() {
    let schema = sales();
    let result = apply(&schema, "NEST Salesperson::email TO personalData").unwrap();
    assert!(result.schema_type("Salesperson").unwrap().feature("email").is_none());
    assert!(result.schema_type("PersonalData").unwrap().feature("email").is_some());
}

#[test]
fn unnest_mirrors_nest() {
    let schema = sales();
    let nested = apply(&schema, "NEST Salesperson::email TO personalData").unwrap();
    let back = apply(&nested, "UNNEST Salesperson::personalData.email").unwrap();
    assert!(back.schema_type("Salesperson").unwrap().feature("email").is_some());
    assert!(back.schema_type("PersonalData").unwrap().feature("email").is_none());
}

#[test]
fn copy_then_delete_restores_schema() {
    let schema = sales();
    let copied = apply(
        &schema,
        "COPY Sale::description TO SeasonExercise::saleDescription WHERE id=id",
    )
    .unwrap();
    assert!(copied
        .schema_type("SeasonExercise")
        .unwrap()
        .feature("saleDescription")
        .is_some());
    let deleted = apply(&copied, "DELETE SeasonExercise::saleDescription").unwrap();
    assert!(schemas_equal_except(&schema, &deleted, &BTreeSet::new()));
}

#[test]
fn move_equals_copy_then_delete() {
    let schema = sales();
    let moved = apply(
        &schema,
        "MOVE Sale::description TO SeasonExercise::description2 WHERE id=id",
    )
    .unwrap();
    let copied = apply(
        &schema,
        "COPY Sale::description TO SeasonExercise::description2 WHERE id=id",
    )
    .unwrap();
    let then_deleted = apply(&copied, "DELETE Sale::description").unwrap();
    assert!(schemas_equal_except(&moved, &then_deleted, &BTreeSet::new()));
}

#[test]
fn split_equals_extract_extract_delete() {
    let schema = athena::parse_str(
        "Schema S:1 Root entity T { a: String, b: Integer, c: Boolean, d: Double }",
    )
    .unwrap();
    let split = apply(&schema, "SPLIT ENTITY T TO P { a, b } AND Q { c, d }").unwrap();

    let e1 = apply(&schema, "EXTRACT ENTITY T::a, b TO P").unwrap();
    let e2 = apply(&e1, "EXTRACT ENTITY T::c, d TO Q").unwrap();
    let composed = apply(&e2, "DELETE ENTITY T").unwrap();
    assert!(schemas_equal_except(&split, &composed, &BTreeSet::new()));
}

#[test]
fn promote_demote_round_trips() {
    let schema = sales();
    let promoted = apply(&schema, "PROMOTE ATTR Sale::description").unwrap();
    assert!(promoted
        .schema_type("Sale")
        .unwrap()
        .feature("description")
        .unwrap()
        .is_key());
    let demoted = apply(&promoted, "DEMOTE ATTR Sale::description").unwrap();
    assert!(schemas_equal_except(&schema, &demoted, &BTreeSet::new()));

    // Promote requires a non-key attribute and an entity type.
    assert!(apply(&schema, "PROMOTE ATTR Sale::id").is_err());
}

#[test]
fn wildcard_cast_skips_types_without_the_attribute() {
    let schema = sales();
    let result = apply(&schema, "CAST ATTR *::profits TO Double").unwrap();
    for type_name in ["Salesperson", "Sale", "SaleSummary"] {
        let t = result.schema_type(type_name).unwrap();
        assert_eq!(
            t.feature("profits").unwrap().as_attribute().unwrap().data_type,
            DataType::Double,
            "{type_name}"
        );
    }
    // PersonalData has no profits and stays untouched.
    let excluded: BTreeSet<String> = ["Salesperson", "Sale", "SaleSummary"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    assert!(schemas_equal_except(&schema, &result, &excluded));

    // A wildcard that matches nothing at all is an error.
    assert!(apply(&schema, "CAST ATTR *::soprofits TO Double").is_err());
}

#[test]
fn cast_drops_incompatible_constraints_and_keeps_key_flag() {
    let schema = sales();
    let result = apply(&schema, "CAST ATTR Sale::profits TO Double").unwrap();
    let profits = result
        .schema_type("Sale")
        .unwrap()
        .feature("profits")
        .unwrap()
        .as_attribute()
        .unwrap()
        .clone();
    assert_eq!(profits.data_type, DataType::Double);
    assert_eq!(profits.constraint, None);

    let keyed = apply(&schema, "CAST ATTR Sale::id TO Integer").unwrap();
    let id = keyed.schema_type("Sale").unwrap().feature("id").unwrap();
    assert!(id.is_key());
    assert_eq!(id.as_attribute().unwrap().data_type, DataType::Integer);
}

#[test]
fn mult_reference_changes_cardinality() {
    let schema = athena::parse_str(&fixture("stackoverflow.athena")).unwrap();
    let result = apply(&schema, "MULT REF Posts::Tags TO +").unwrap();
    let tags = result
        .schema_type("Posts")
        .unwrap()
        .feature("Tags")
        .unwrap()
        .as_reference()
        .unwrap()
        .clone();
    assert_eq!(tags.cardinality, Cardinality::OneOrMany);
    assert_eq!(tags.cardinality.lower(), 1);
    assert_eq!(tags.cardinality.upper(), None);
}

#[test]
fn morph_aggregate_to_reference_and_back() {
    let schema = sales();
    let morphed = apply(&schema, "MORPH AGGR Salesperson::personalData TO privateData").unwrap();
    let sp = morphed.schema_type("Salesperson").unwrap();
    assert!(sp.feature("personalData").is_none());
    let rf = sp.feature("privateData").unwrap().as_reference().unwrap().clone();
    assert_eq!(rf.target, "PersonalData");
    assert_eq!(rf.cardinality, Cardinality::One);

    let back = apply(&morphed, "MORPH REF Salesperson::privateData TO personalData").unwrap();
    let sp = back.schema_type("Salesperson").unwrap();
    let ag = sp.feature("personalData").unwrap().as_aggregate().unwrap();
    assert_eq!(ag.target, "PersonalData");
    assert_eq!(ag.cardinality, Cardinality::One);
}

#[test]
fn morph_reference_demotes_unreferenced_root_target() {
    let schema = athena::parse_str(
        "Schema S:1 Root entity A { r: Ref<B>& } Root entity B { b: String }",
    )
    .unwrap();
    let result = apply(&schema, "MORPH REF A::r").unwrap();
    let b = result.schema_type("B").unwrap();
    assert!(!b.root);
    assert!(result.schema_type("A").unwrap().feature("r").unwrap().as_aggregate().is_some());
    assert_eq!(validate(&result), vec![]);
}

#[test]
fn morph_reference_rejects_root_target_referenced_elsewhere() {
    let schema = athena::parse_str(
        "Schema S:1 Root entity A { r: Ref<B>& } Root entity C { s: Ref<B>* } Root entity B { b: String }",
    )
    .unwrap();
    let err = apply(&schema, "MORPH REF A::r").unwrap_err();
    assert!(err.clause_text().contains("demotable"));
}

#[test]
fn add_aggregate_with_inline_body_creates_non_root_type() {
    let schema = sales();
    let result = apply(
        &schema,
        "ADD AGGR PersonalData::address:{country:String}& AS Address",
    )
    .unwrap();
    let addr = result.schema_type("Address").unwrap();
    assert!(!addr.root);
    assert_eq!(addr.kind, TypeKind::Entity);
    assert_eq!(addr.all_features().len(), 1);
    let ag = result
        .schema_type("PersonalData")
        .unwrap()
        .feature("address")
        .unwrap()
        .as_aggregate()
        .unwrap()
        .clone();
    assert_eq!(ag.target, "Address");
    assert_eq!(ag.cardinality, Cardinality::One);
}

#[test]
fn aggregate_ops_reject_relationship_types() {
    let schema = athena::parse_str(&fixture("stackoverflow.athena")).unwrap();
    assert!(apply(&schema, "ADD AGGR Rel_Comments::x: {a: String}& AS X").is_err());
    // Reference and attribute ops on relationship types are fine.
    assert!(apply(&schema, "ADD ATTR Rel_Comments::note: String").is_ok());
    assert!(apply(&schema, "CAST ATTR Rel_Comments::Score TO Double").is_ok());
}

#[test]
fn add_attribute_collision_with_variation_feature_is_rejected() {
    let schema = sales();
    // profits lives in Salesperson variation 2; adding it as common would
    // break the disjointness invariant.
    assert!(apply(&schema, "ADD ATTR Salesperson::profits: Integer").is_err());
}

#[test]
fn intermediate_schemas_validate_after_every_op() {
    let schema = sales();
    let script = orion::parse_str(&fixture("sales_ops.orion")).unwrap();
    let mut current = schema;
    for op in &script.ops {
        current = apply_op(&current, op).unwrap();
        assert_eq!(validate(&current), vec![]);
    }
}

#[test]
fn frame_condition_holds_for_every_sales_op() {
    let schema = sales();
    let script = orion::parse_str(&fixture("sales_ops.orion")).unwrap();
    let mut current = schema;
    for op in &script.ops {
        let touched = touched_types(&current, op);
        let next = apply_op(&current, op).unwrap();
        assert!(
            schemas_equal_except(&current, &next, &touched),
            "frame violated by {op} (declared {touched:?})"
        );
        current = next;
    }
}

#[test]
fn sequential_application_matches_one_shot() {
    let schema = sales();
    let script = orion::parse_str(&fixture("sales_ops.orion")).unwrap();
    let whole = apply_script(&schema, &script).unwrap().schema;

    let mut stepped = schema.clone();
    for op in &script.ops {
        stepped = apply_op(&stepped, op).unwrap();
    }
    stepped.version += 1;
    assert_eq!(whole, stepped);
}

#[test]
fn variation_scoped_rename_renames_only_listed_variations() {
    let schema = athena::parse_str(
        "Schema S:1 Root entity T { Common { +id: String } Variation 1 { phone: String } Variation 2 { phone: String } Variation 3 {} }",
    )
    .unwrap();
    let result = apply(&schema, "RENAME T(v1)::phone TO cell").unwrap();
    let t = result.schema_type("T").unwrap();
    assert!(t.variation(1).unwrap().feature("cell").is_some());
    assert!(t.variation(1).unwrap().feature("phone").is_none());
    assert!(t.variation(2).unwrap().feature("phone").is_some());

    // Scoped rename of a common feature is ambiguous.
    let err = apply(&schema, "RENAME T(v1)::id TO key").unwrap_err();
    assert!(matches!(err, PreconditionViolation::AmbiguousSelector { .. }));
}
