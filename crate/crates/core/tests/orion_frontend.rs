//! Parser and printer tests for the Orion frontend, anchored on the three
//! fixture scripts.

use uschema::model::{Cardinality, DataType};
use uschema::orion::{self, ChangeOp, OpKind, OrionError, TypeFlavor, TypeTarget};

fn fixture(name: &str) -> String {
    let path = format!("{}/tests/fixtures/{}", env!("CARGO_MANIFEST_DIR"), name);
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn parses_sales_ops_script() {
    let script = orion::parse_str(&fixture("sales_ops.orion")).unwrap();
    assert_eq!(script.name, "Sales_ops");
    assert_eq!(script.schema_name, "Sales_department");
    assert_eq!(script.schema_version, 1);
    assert_eq!(script.ops.len(), 15);

    match &script.ops[0] {
        ChangeOp::CastAttribute { selector, to } => {
            assert_eq!(selector.target, TypeTarget::Wildcard);
            assert_eq!(selector.features, ["profits"]);
            assert_eq!(*to, DataType::Double);
        }
        other => panic!("expected cast, got {other}"),
    }
    assert!(matches!(
        &script.ops[8],
        ChangeOp::RenameType { flavor: TypeFlavor::Entity, name, new_name }
            if name == "Salesperson" && new_name == "Employee"
    ));
    match &script.ops[14] {
        ChangeOp::AddAggregate {
            type_name,
            name,
            cardinality,
            body,
        } => {
            assert_eq!(type_name, "Company");
            assert_eq!(name, "media");
            assert_eq!(*cardinality, Cardinality::One);
            match body {
                orion::AggregateBody::Inline { fields, type_name } => {
                    assert_eq!(type_name, "Media");
                    assert_eq!(fields.len(), 4);
                }
                other => panic!("expected inline body, got {other:?}"),
            }
        }
        other => panic!("expected aggregate add, got {other}"),
    }
}

#[test]
fn number_aliases_integer_in_inline_bodies() {
    let script = orion::parse_str(&fixture("sales_ops.orion")).unwrap();
    match &script.ops[12] {
        ChangeOp::AddType { features, root, .. } => {
            assert!(root);
            let n = features.iter().find(|f| f.name == "numOfEmployees").unwrap();
            assert_eq!(n.as_attribute().unwrap().data_type, DataType::Integer);
        }
        other => panic!("expected entity add, got {other}"),
    }
}

#[test]
fn parses_reddit_migration_script() {
    let script = orion::parse_str(&fixture("reddit_migration.orion")).unwrap();
    assert_eq!(script.ops.len(), 15);
    let delvars = script
        .ops
        .iter()
        .filter(|op| op.kind() == OpKind::VariationDelvar)
        .count();
    let adapts = script
        .ops
        .iter()
        .filter(|op| op.kind() == OpKind::VariationAdapt)
        .count();
    assert_eq!(delvars, 4);
    assert_eq!(adapts, 11);
    assert!(matches!(
        &script.ops[0],
        ChangeOp::DeleteVariation { type_name, var_id: 1, .. } if type_name == "Comments"
    ));
    assert!(matches!(
        &script.ops[5],
        ChangeOp::AdaptVariation { source: 11, target: 5, .. }
    ));
}

#[test]
fn parses_stackoverflow_script() {
    let script = orion::parse_str(&fixture("stackoverflow_ops.orion")).unwrap();
    assert_eq!(script.ops.len(), 10);
    assert!(matches!(
        &script.ops[1],
        ChangeOp::MultReference { cardinality: Cardinality::OneOrMany, .. }
    ));
    match &script.ops[2] {
        ChangeOp::CopyFeature {
            source_type,
            source_feature,
            dest_type,
            dest_feature,
            condition,
        } => {
            assert_eq!(source_type, "Posts");
            assert_eq!(source_feature, "PostTypeId");
            assert_eq!(dest_type, "Rel_Comments");
            assert_eq!(dest_feature, "CommentTypeId");
            assert_eq!(condition.source_feature, "id");
            assert_eq!(condition.target_feature, "PostId");
        }
        other => panic!("expected copy, got {other}"),
    }
    assert!(matches!(
        &script.ops[4],
        ChangeOp::UnionVariations { flavor: TypeFlavor::Relationship, type_name }
            if type_name == "Rel_Comments"
    ));
    assert!(matches!(
        &script.ops[9],
        ChangeOp::RenameType { flavor: TypeFlavor::Relationship, new_name, .. }
            if new_name == "comments"
    ));
}

#[test]
fn empty_script_parses() {
    let script = orion::parse_str("X operations Using S:1").unwrap();
    assert_eq!(script.name, "X");
    assert!(script.ops.is_empty());
}

/// One statement per operation kind of the taxonomy: the parser reaches all
/// of them.
#[test]
fn grammar_covers_every_operation_kind() {
    let statements: &[(&str, OpKind)] = &[
        ("ADD ENTITY T: { +id: String }", OpKind::TypeAdd),
        ("ADD RELATIONSHIP R: { w: Double }", OpKind::TypeAdd),
        ("DELETE ENTITY T", OpKind::TypeDelete),
        ("DELETE RELATIONSHIP R", OpKind::TypeDelete),
        ("RENAME ENTITY T TO U", OpKind::TypeRename),
        ("RENAME RELATIONSHIP R TO S2", OpKind::TypeRename),
        ("EXTRACT ENTITY T::a, b TO U", OpKind::TypeExtract),
        ("SPLIT ENTITY T TO A { a, b } AND B { c, d }", OpKind::TypeSplit),
        ("MERGE ENTITIES T1, T2 TO U", OpKind::TypeMerge),
        ("MERGE RELATIONSHIPS R1, R2 TO R3", OpKind::TypeMerge),
        ("DELVAR ENTITY T::v1", OpKind::VariationDelvar),
        ("ADAPT ENTITY T::v1 TO v2", OpKind::VariationAdapt),
        ("UNION RELATIONSHIP R", OpKind::VariationUnion),
        ("DELETE T::a, b", OpKind::FeatureDelete),
        ("RENAME T::a TO b", OpKind::FeatureRename),
        ("COPY T::a TO U::b WHERE id=ref", OpKind::FeatureCopy),
        ("MOVE T::a TO U::b WHERE id=ref", OpKind::FeatureMove),
        ("NEST T::a, b TO agg", OpKind::FeatureNest),
        ("UNNEST T::agg.a", OpKind::FeatureUnnest),
        ("ADD ATTR T::a: List<String>", OpKind::AttributeAdd),
        ("CAST ATTR *::a TO Double", OpKind::AttributeCast),
        ("PROMOTE ATTR T::a", OpKind::AttributePromote),
        ("DEMOTE ATTR T::a", OpKind::AttributeDemote),
        ("ADD REF T::r: String& TO E WHERE a=b", OpKind::ReferenceAdd),
        ("ADD REF T::r: {x: String}* TO E", OpKind::ReferenceAdd),
        ("CAST REF T::r TO Integer", OpKind::ReferenceCast),
        ("MULT REF T::r TO +", OpKind::ReferenceMult),
        ("MORPH REF T::r TO s", OpKind::ReferenceMorph),
        ("MORPH REF T::r", OpKind::ReferenceMorph),
        ("ADD AGGR T::f: {x: String}& AS N", OpKind::AggregateAdd),
        ("ADD AGGR T::f: N?", OpKind::AggregateAdd),
        ("MULT AGGR T::f TO *", OpKind::AggregateMult),
        ("MORPH AGGR T::f TO g", OpKind::AggregateMorph),
    ];
    let mut covered = std::collections::BTreeSet::new();
    for (stmt, kind) in statements {
        let text = format!("X operations Using S:1\n{stmt}");
        let script = orion::parse_str(&text)
            .unwrap_or_else(|e| panic!("statement `{stmt}` failed: {e}"));
        assert_eq!(script.ops.len(), 1, "statement `{stmt}`");
        assert_eq!(script.ops[0].kind(), *kind, "statement `{stmt}`");
        covered.insert(*kind);
    }
    assert_eq!(covered.len(), OpKind::ALL.len());
}

#[test]
fn round_trips_through_printer() {
    for name in [
        "sales_ops.orion",
        "stackoverflow_ops.orion",
        "reddit_migration.orion",
    ] {
        let script = orion::parse_str(&fixture(name)).unwrap();
        let printed = orion::print(&script);
        let reparsed = orion::parse_str(&printed).unwrap();
        assert_eq!(script, reparsed, "round trip changed {name}:\n{printed}");
    }
}

#[test]
fn adapt_prints_canonically() {
    let script = orion::parse_str("X operations Using S:1\nADAPT ENTITY T::11 TO 5").unwrap();
    let printed = orion::print(&script);
    assert!(printed.contains("ADAPT ENTITY T::v11 TO v5"));
}

#[test]
fn variation_scoped_selector() {
    let script = orion::parse_str("X operations Using S:1\nRENAME T(v1, v3)::phone TO newPhone")
        .unwrap();
    match &script.ops[0] {
        ChangeOp::RenameFeature { selector, new_name } => {
            assert_eq!(selector.variations, Some(vec![1, 3]));
            assert_eq!(new_name, "newPhone");
        }
        other => panic!("expected rename, got {other}"),
    }
}

#[test]
fn wildcard_with_variation_list_is_rejected() {
    let err =
        orion::parse_str("X operations Using S:1\nRENAME *(v1, v3)::phone TO newPhone").unwrap_err();
    assert!(matches!(err, OrionError::Syntax { .. }));
}

#[test]
fn unknown_operation_keyword() {
    let err = orion::parse_str("X operations Using S:1\nFROB T::a").unwrap_err();
    match err {
        OrionError::UnknownOperationKeyword { word, line, .. } => {
            assert_eq!(word, "FROB");
            assert_eq!(line, 2);
        }
        other => panic!("expected unknown keyword, got {other}"),
    }
}

#[test]
fn comments_and_blank_lines_contribute_no_ops() {
    let text = "X operations\n\nUsing S:1\n\n// nothing here\n\nDELETE T::a\n// tail comment\n";
    let script = orion::parse_str(text).unwrap();
    assert_eq!(script.ops.len(), 1);
}
