//! Parser and printer tests for the Athena frontend, anchored on the
//! Sales_department fixture.

use std::collections::BTreeSet;

use uschema::athena::{self, AthenaError, AthenaSource};
use uschema::model::{
    schemas_equal_except, validate, Cardinality, Constraint, DataType, FeatureKind, TypeKind,
};

fn fixture(name: &str) -> String {
    let path = format!("{}/tests/fixtures/{}", env!("CARGO_MANIFEST_DIR"), name);
    std::fs::read_to_string(path).unwrap()
}

fn sales_schema() -> uschema::model::Schema {
    athena::parse_str(&fixture("sales.athena")).unwrap()
}

#[test]
fn parses_sales_department_header() {
    let schema = sales_schema();
    assert_eq!(schema.name, "Sales_department");
    assert_eq!(schema.version, 1);
    assert_eq!(schema.entity_types().count(), 5);
    assert_eq!(schema.relationship_types().count(), 0);
    assert_eq!(schema.entity_types().filter(|t| t.root).count(), 3);
}

#[test]
fn salesperson_has_two_variations_and_four_common_features() {
    let schema = sales_schema();
    let sp = schema.schema_type("Salesperson").unwrap();
    assert_eq!(sp.variations.len(), 2);
    assert_eq!(sp.common_features.len(), 4);
    assert!(sp.root);

    let v1 = sp.variation(1).unwrap();
    assert!(v1.features.is_empty());
    let v2 = sp.variation(2).unwrap();
    let names: Vec<&str> = v2.features.iter().map(|f| f.name.as_str()).collect();
    assert_eq!(names, ["sales", "profits"]);

    let email = sp.common_feature("email").unwrap();
    let at = email.as_attribute().unwrap();
    assert_eq!(
        at.constraint,
        Some(Constraint::Regex(r"^.+@.+\.com$".to_string()))
    );
}

#[test]
fn fset_features_are_inlined_into_sale() {
    let schema = sales_schema();
    let sale_features = schema.features_of("Sale").unwrap();
    let names: BTreeSet<&str> = sale_features.iter().map(|f| f.name.as_str()).collect();
    assert_eq!(sale_features.len(), 8);
    assert!(names.contains("createdAt"));
    assert!(names.contains("updatedAt"));
}

#[test]
fn sale_exercises_is_a_scalar_valued_reference() {
    let schema = sales_schema();
    let sale = schema.schema_type("Sale").unwrap();
    let exercises = sale.feature("exercises").unwrap();
    let rf = exercises.as_reference().unwrap();
    assert_eq!(rf.target, "SeasonExercise");
    assert_eq!(rf.cardinality, Cardinality::OneOrMany);
    assert_eq!(rf.value_type, Some(DataType::String));
    assert!(rf.attributes.is_empty());
}

#[test]
fn optional_marker_and_range_constraint() {
    let schema = sales_schema();
    let pd = schema.schema_type("PersonalData").unwrap();
    let postcode = pd.feature("postcode").unwrap();
    assert!(postcode.optional);

    let sale = schema.schema_type("Sale").unwrap();
    let profits = sale.feature("profits").unwrap();
    assert_eq!(
        profits.as_attribute().unwrap().constraint,
        Some(Constraint::Range(0, 9999))
    );
    match &sale.feature("types").unwrap().kind {
        FeatureKind::Attribute(at) => {
            assert_eq!(at.data_type, DataType::List(Box::new(DataType::String)));
        }
        other => panic!("expected attribute, got {other:?}"),
    }
}

#[test]
fn parsed_fixture_validates_clean() {
    assert_eq!(validate(&sales_schema()), vec![]);
}

#[test]
fn minimal_schema() {
    let schema = athena::parse_str("Schema S:1 Root entity E { +id: String }").unwrap();
    assert_eq!(schema.types.len(), 1);
    let e = &schema.types[0];
    assert!(e.root);
    assert_eq!(e.kind, TypeKind::Entity);
    assert_eq!(e.variations.len(), 1);
    assert!(e.feature("id").unwrap().is_key());
}

#[test]
fn relationship_types_parse() {
    let schema = athena::parse_str(&fixture("stackoverflow.athena")).unwrap();
    let rel = schema.schema_type("Rel_Comments").unwrap();
    assert_eq!(rel.kind, TypeKind::Relationship);
    assert!(!rel.root);
    assert_eq!(rel.variations.len(), 5);
    assert_eq!(rel.common_features.len(), 4);
    assert_eq!(validate(&schema), vec![]);
}

#[test]
fn round_trips_through_printer() {
    for name in ["sales.athena", "stackoverflow.athena", "reddit.athena"] {
        let schema = athena::parse_str(&fixture(name)).unwrap();
        let printed = athena::print(&schema).unwrap();
        let reparsed = athena::parse_str(&printed).unwrap();
        assert!(
            schemas_equal_except(&schema, &reparsed, &BTreeSet::new()),
            "round trip changed {name}:\n{printed}"
        );
        assert_eq!(schema.name, reparsed.name);
        assert_eq!(schema.version, reparsed.version);
    }
}

#[test]
fn printer_emits_variation_blocks() {
    let schema = sales_schema();
    let printed = athena::print(&schema).unwrap();
    assert!(printed.contains("Root entity Salesperson {"));
    assert!(printed.contains("Variation 1 {}"));
    assert!(printed.contains("Variation 2 {"));
    assert!(printed.contains("+id:"));
}

#[test]
fn syntax_error_carries_position() {
    let err = athena::parse_str("Schema S:1 Root entity E { +id String }").unwrap_err();
    match err {
        AthenaError::Syntax { line, column, .. } => {
            assert_eq!(line, 1);
            assert!(column > 0 && column < 41);
        }
        other => panic!("expected syntax error, got {other}"),
    }
}

#[test]
fn unknown_fset_is_reported() {
    let err = athena::parse_str("Schema S:1 Root entity E { +id: String } + nope").unwrap_err();
    assert!(matches!(err, AthenaError::UnknownFset { name, .. } if name == "nope"));
}

#[test]
fn unknown_target_type_is_reported() {
    let err =
        athena::parse_str("Schema S:1 Root entity E { +id: String, g: Ref<Ghost>& }").unwrap_err();
    assert!(matches!(err, AthenaError::UnknownTargetType { target, .. } if target == "Ghost"));
}

#[test]
fn duplicate_names_are_reported() {
    let err = athena::parse_str("Schema S:1 Root entity E { a: String, a: Integer }").unwrap_err();
    assert!(matches!(err, AthenaError::DuplicateName { .. }));

    let err =
        athena::parse_str("Schema S:1 Root entity E { a: String } Root entity E { b: String }")
            .unwrap_err();
    assert!(matches!(err, AthenaError::DuplicateName { .. }));
}

#[test]
fn aggregate_to_root_entity_is_invalid() {
    let err = athena::parse_str(
        "Schema S:1 Root entity E { a: Aggr<F>& } Root entity F { b: String }",
    )
    .unwrap_err();
    assert!(matches!(err, AthenaError::InvalidSchema(_)));
}

#[test]
fn parse_is_deterministic() {
    let text = fixture("sales.athena");
    let a = athena::parse(&AthenaSource::from_text(text.clone())).unwrap();
    let b = athena::parse(&AthenaSource::from_text(text)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn map_set_tuple_types_parse() {
    let schema = athena::parse_str(
        "Schema S:1 Root entity E { a: Map<String,Integer>, b: Set<Double>, c: Tuple<Integer,Boolean> }",
    )
    .unwrap();
    let e = &schema.types[0];
    match &e.feature("c").unwrap().kind {
        FeatureKind::Attribute(at) => assert_eq!(
            at.data_type,
            DataType::Tuple(vec![DataType::Integer, DataType::Boolean])
        ),
        _ => panic!(),
    }
}
