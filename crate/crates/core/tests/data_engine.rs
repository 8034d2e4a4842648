//! Reference data engine tests: classification, defaults, casting, the
//! interchange files, and per-operation migration semantics including the
//! Reddit outlier scenario.

use std::collections::BTreeSet;

use uschema::athena;
use uschema::data::{
    cast_value, classify_variation, default_value, load_database, migrate, store_database,
    Database, Dataset, Mode, Record, StoreMode, Value,
};
use uschema::model::{DataType, Schema, SchemaType};
use uschema::orion;

fn fixture(name: &str) -> String {
    let path = format!("{}/tests/fixtures/{}", env!("CARGO_MANIFEST_DIR"), name);
    std::fs::read_to_string(path).unwrap()
}

fn reddit_schema() -> Schema {
    athena::parse_str(&fixture("reddit.athena")).unwrap()
}

/// A record conforming to the given variation, with synthetic field values.
fn record_for(t: &SchemaType, var_id: u32, salt: i64) -> Record {
    let mut record = Record::new();
    let variation = t.variation(var_id).unwrap();
    for f in t.common_features.iter().chain(variation.features.iter()) {
        let value = match f.as_attribute().map(|at| &at.data_type) {
            Some(DataType::String) => Value::Str(format!("s{salt}")),
            Some(DataType::Integer) => Value::Int(salt),
            Some(DataType::Double) => Value::Dbl(salt as f64),
            Some(DataType::Boolean) => Value::Bool(salt % 2 == 0),
            Some(DataType::Timestamp) => Value::Timestamp(salt * 1000),
            _ => Value::Null,
        };
        record.set(&f.name, value);
    }
    record
}

#[test]
fn classifies_by_exact_field_presence() {
    let schema = reddit_schema();
    let comments = schema.schema_type("Comments").unwrap();

    // The outlier pattern: archived, distinguished, downs, edited, name,
    // score_hidden present; both flair fields absent.
    let record = record_for(comments, 11, 1);
    assert_eq!(classify_variation(&record, comments), Some(11));

    // Only common fields present: no variation has an empty member set here
    // except none, so build a type where the empty variation exists.
    let schema2 =
        athena::parse_str("Schema S:1 Root entity T { Common { a: String } Variation 1 {} Variation 2 { b: Integer } }")
            .unwrap();
    let t2 = schema2.schema_type("T").unwrap();
    let mut r = Record::new();
    r.set("a", Value::Str("x".into()));
    assert_eq!(classify_variation(&r, t2), Some(1));

    // An extra unknown field prevents any match.
    r.set("zz", Value::Int(1));
    assert_eq!(classify_variation(&r, t2), None);

    // Null values still count as present.
    let mut r = Record::new();
    r.set("a", Value::Null);
    r.set("b", Value::Null);
    assert_eq!(classify_variation(&r, t2), Some(2));
}

#[test]
fn reserved_endpoint_fields_are_ignored_in_classification() {
    let schema = athena::parse_str(&fixture("stackoverflow.athena")).unwrap();
    let rel = schema.schema_type("Rel_Comments").unwrap();
    let mut record = record_for(rel, 4, 3);
    record.set("_out", Value::Str("u1".into()));
    record.set("_in", Value::Str("p1".into()));
    assert_eq!(classify_variation(&record, rel), Some(4));
}

#[test]
fn default_values() {
    assert_eq!(default_value(&DataType::Integer), Value::Int(0));
    assert_eq!(default_value(&DataType::String), Value::Str(String::new()));
    assert_eq!(
        default_value(&DataType::List(Box::new(DataType::String))),
        Value::List(vec![])
    );
    assert_eq!(
        default_value(&DataType::Tuple(vec![DataType::Integer, DataType::Boolean])),
        Value::Tuple(vec![Value::Int(0), Value::Bool(false)])
    );
    assert_eq!(default_value(&DataType::Timestamp), Value::Timestamp(0));
}

#[test]
fn casts_follow_the_conversion_table() {
    let mut warnings = 0;
    let cast = |v: &Value, to: &DataType| cast_value(v, to, Mode::Strict, &mut 0u64.clone());
    assert_eq!(
        cast(&Value::Str("42".into()), &DataType::Integer).unwrap(),
        Value::Int(42)
    );
    assert_eq!(
        cast(&Value::Int(7), &DataType::String).unwrap(),
        Value::Str("7".into())
    );
    // Round trip through text restores the value.
    let text = cast(&Value::Int(7), &DataType::String).unwrap();
    assert_eq!(cast(&text, &DataType::Integer).unwrap(), Value::Int(7));

    assert_eq!(
        cast(
            &Value::Str("2015-01-01T00:00:00Z".into()),
            &DataType::Timestamp
        )
        .unwrap(),
        Value::Timestamp(1420070400000)
    );
    assert_eq!(
        cast(&Value::Str("TRUE".into()), &DataType::Boolean).unwrap(),
        Value::Bool(true)
    );
    assert_eq!(
        cast(&Value::Int(0), &DataType::Boolean).unwrap(),
        Value::Bool(false)
    );
    assert_eq!(
        cast(&Value::Timestamp(1500), &DataType::Integer).unwrap(),
        Value::Int(1500)
    );
    assert_eq!(cast(&Value::Null, &DataType::Integer).unwrap(), Value::Null);
    assert_eq!(
        cast(&Value::Int(3), &DataType::Double).unwrap(),
        Value::Dbl(3.0)
    );

    // Strict failure vs lenient default substitution.
    assert!(cast(&Value::Str("nope".into()), &DataType::Integer).is_err());
    let substituted =
        cast_value(&Value::Str("nope".into()), &DataType::Integer, Mode::Lenient, &mut warnings)
            .unwrap();
    assert_eq!(substituted, Value::Int(0));
    assert_eq!(warnings, 1);
}

#[test]
fn store_then_load_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let mut db = Database::new(StoreMode::Aggregate);
    let mut ds = Dataset::new("Sale");
    let mut inner = Record::new();
    inner.set("street", Value::Str("main".into()));
    inner.set("number", Value::Int(4));
    let mut r1 = Record::new();
    r1.set("id", Value::Str("s1".into()));
    r1.set("when", Value::Timestamp(1420070400000));
    r1.set("tags", Value::List(vec![Value::Str("a".into()), Value::Str("b".into())]));
    r1.set("addr", Value::Embedded(inner));
    r1.set("dollar", Value::Str("$literal".into()));
    let mut r2 = Record::new();
    r2.set("id", Value::Str("s2".into()));
    r2.set("n", Value::Dbl(0.5));
    r2.set("flag", Value::Bool(true));
    r2.set("nothing", Value::Null);
    ds.records.push(r1);
    ds.records.push(r2);
    db.insert_dataset(ds);

    store_database(&db, dir.path()).unwrap();
    let loaded = load_database(dir.path()).unwrap();
    assert_eq!(db, loaded);

    // Storing the loaded database yields byte-identical files.
    let dir2 = tempfile::tempdir().unwrap();
    store_database(&loaded, dir2.path()).unwrap();
    let a = std::fs::read_to_string(dir.path().join("Sale.ndjson")).unwrap();
    let b = std::fs::read_to_string(dir2.path().join("Sale.ndjson")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn duplicate_field_names_are_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("manifest"), "AGGREGATE\nSale\n").unwrap();
    std::fs::write(
        dir.path().join("Sale.ndjson"),
        "{\"id\": \"a\", \"id\": \"b\"}\n",
    )
    .unwrap();
    let err = load_database(dir.path()).unwrap_err();
    assert!(err.to_string().contains("duplicate field name"));
}

#[test]
fn container_values_round_trip_through_sentinels() {
    let dir = tempfile::tempdir().unwrap();
    let mut db = Database::new(StoreMode::Aggregate);
    let mut ds = Dataset::new("T");
    let mut r = Record::new();
    r.set("s", Value::Set(vec![Value::Int(1), Value::Int(2)]));
    r.set("t", Value::Tuple(vec![Value::Int(0), Value::Bool(false)]));
    r.set(
        "m",
        Value::Map(vec![(Value::Str("k".into()), Value::Int(9))]),
    );
    ds.records.push(r);
    db.insert_dataset(ds);
    store_database(&db, dir.path()).unwrap();
    let loaded = load_database(dir.path()).unwrap();
    assert_eq!(db, loaded);
}

/// Builds the synthetic 20-variation Comments database: regular variations
/// v5..v9 hold the overwhelming majority of records.
fn reddit_database(schema: &Schema) -> (Database, Vec<u32>) {
    let comments = schema.schema_type("Comments").unwrap();
    let mut ds = Dataset::new("Comments");
    let mut counts = vec![0u32; 21];
    let mut salt = 0;
    for var_id in 1..=20u32 {
        let n = if (5..=9).contains(&var_id) { 300 } else { 1 };
        for _ in 0..n {
            salt += 1;
            ds.records.push(record_for(comments, var_id, salt));
            counts[var_id as usize] += 1;
        }
    }
    let mut db = Database::new(StoreMode::Aggregate);
    db.insert_dataset(ds);
    (db, counts)
}

#[test]
fn reddit_outlier_migration() {
    let schema = reddit_schema();
    let script = orion::parse_str(&fixture("reddit_migration.orion")).unwrap();
    let (db, counts) = reddit_database(&schema);
    let total_before = db.dataset("Comments").unwrap().len();

    let (migrated, report) = migrate(&db, &schema, &script, Mode::Strict).unwrap();

    // Delvar removed exactly the v1..v4 populations.
    let deleted_expected: u64 = (1..=4).map(|v| counts[v] as u64).sum();
    assert_eq!(report.total_deleted(), deleted_expected);
    let after = migrated.dataset("Comments").unwrap();
    assert_eq!(after.len(), total_before - deleted_expected as usize);

    // Survivors classify into at most the five regular variations.
    let outcome = uschema::evolution::apply_script(&schema, &script).unwrap();
    let updated_type = outcome.schema.schema_type("Comments").unwrap();
    let mut seen = BTreeSet::new();
    for record in &after.records {
        let v = classify_variation(record, updated_type)
            .expect("every surviving record classifies");
        seen.insert(v);
    }
    assert!(seen.len() <= 5, "classified into {seen:?}");
    for v in &seen {
        assert!((5..=9).contains(v), "non-regular variation {v}");
    }

    // The report carries one entry per operation: 4 delvars, 11 adapts.
    assert_eq!(report.ops.len(), 15);
    assert!(report.ops[..4].iter().all(|o| o.deleted > 0 && o.touched == 0));
    assert!(report.ops[4..].iter().all(|o| o.deleted == 0));
}

#[test]
fn adapt_v11_to_v5_unsets_distinguished_only() {
    let schema = reddit_schema();
    let comments = schema.schema_type("Comments").unwrap();
    let mut db = Database::new(StoreMode::Aggregate);
    let mut ds = Dataset::new("Comments");
    ds.records.push(record_for(comments, 11, 7));
    db.insert_dataset(ds);

    let script =
        orion::parse_str("R operations Using reddit:1\nADAPT ENTITY Comments::v11 TO v5").unwrap();
    let (migrated, report) = migrate(&db, &schema, &script, Mode::Strict).unwrap();
    let record = &migrated.dataset("Comments").unwrap().records[0];
    assert!(record.get("distinguished").is_none());
    for kept in ["archived", "downs", "edited", "name", "score_hidden"] {
        assert!(record.get(kept).is_some(), "{kept} must survive");
    }
    assert_eq!(report.ops[0].touched, 1);
    assert_eq!(classify_variation(record, comments), Some(5));
}

#[test]
fn empty_script_is_identity() {
    let schema = reddit_schema();
    let (db, _) = reddit_database(&schema);
    let script = orion::parse_str("R operations Using reddit:1").unwrap();
    let (migrated, report) = migrate(&db, &schema, &script, Mode::Strict).unwrap();
    assert_eq!(db, migrated);
    assert!(report.ops.is_empty());
}

#[test]
fn union_pads_missing_fields_with_defaults() {
    let schema = athena::parse_str(
        "Schema S:1 Root entity T { Common { a: String } Variation 1 { b: Integer } Variation 2 { c: Boolean } }",
    )
    .unwrap();
    let t = schema.schema_type("T").unwrap();
    let mut db = Database::new(StoreMode::Aggregate);
    let mut ds = Dataset::new("T");
    ds.records.push(record_for(t, 1, 1));
    ds.records.push(record_for(t, 2, 2));
    db.insert_dataset(ds);

    let script = orion::parse_str("X operations Using S:1\nUNION ENTITY T").unwrap();
    let (migrated, _) = migrate(&db, &schema, &script, Mode::Strict).unwrap();
    let updated = uschema::evolution::apply_script(&schema, &script)
        .unwrap()
        .schema;
    let ut = updated.schema_type("T").unwrap();
    for record in &migrated.dataset("T").unwrap().records {
        assert!(record.get("b").is_some());
        assert!(record.get("c").is_some());
        assert_eq!(classify_variation(record, ut), Some(ut.variations[0].var_id));
    }
    assert_eq!(migrated.dataset("T").unwrap().records[1].get("b"), Some(&Value::Int(0)));
}

#[test]
fn nest_moves_field_into_embedded_record() {
    let schema = athena::parse_str(
        "Schema S:1 Root entity P { name: String, city: String, addr: Aggr<A>& } Entity A { street: String }",
    )
    .unwrap();
    let mut db = Database::new(StoreMode::Aggregate);
    let mut ds = Dataset::new("P");
    let mut inner = Record::new();
    inner.set("street", Value::Str("main".into()));
    let mut r = Record::new();
    r.set("name", Value::Str("p1".into()));
    r.set("city", Value::Str("rome".into()));
    r.set("addr", Value::Embedded(inner));
    ds.records.push(r);
    db.insert_dataset(ds);

    let script = orion::parse_str("X operations Using S:1\nNEST P::city TO addr").unwrap();
    let (migrated, _) = migrate(&db, &schema, &script, Mode::Strict).unwrap();
    let record = &migrated.dataset("P").unwrap().records[0];
    assert!(record.get("city").is_none());
    match record.get("addr").unwrap() {
        Value::Embedded(inner) => {
            assert_eq!(inner.get("city"), Some(&Value::Str("rome".into())));
            assert_eq!(inner.get("street"), Some(&Value::Str("main".into())));
        }
        other => panic!("expected embedded record, got {other:?}"),
    }

    // Unnest restores the original shape.
    let updated = uschema::evolution::apply_script(&schema, &script)
        .unwrap()
        .schema;
    let back_script = format!(
        "Y operations Using S:{}\nUNNEST P::addr.city",
        updated.version
    );
    let back = orion::parse_str(&back_script).unwrap();
    let (restored, _) = migrate(&migrated, &updated, &back, Mode::Strict).unwrap();
    let record = &restored.dataset("P").unwrap().records[0];
    assert_eq!(record.get("city"), Some(&Value::Str("rome".into())));
    match record.get("addr").unwrap() {
        Value::Embedded(inner) => assert!(inner.get("city").is_none()),
        other => panic!("expected embedded record, got {other:?}"),
    }
}

#[test]
fn copy_joins_on_condition() {
    let schema = athena::parse_str(
        "Schema S:1 Root entity U { +id: String, rep: Integer } Root entity C { +cid: String, uid: String }",
    )
    .unwrap();
    let mut db = Database::new(StoreMode::Aggregate);
    let mut users = Dataset::new("U");
    for (id, rep) in [("u1", 10), ("u2", 20)] {
        let mut r = Record::new();
        r.set("id", Value::Str(id.into()));
        r.set("rep", Value::Int(rep));
        users.records.push(r);
    }
    let mut comments = Dataset::new("C");
    for (cid, uid) in [("c1", "u2"), ("c2", "u1"), ("c3", "zz")] {
        let mut r = Record::new();
        r.set("cid", Value::Str(cid.into()));
        r.set("uid", Value::Str(uid.into()));
        comments.records.push(r);
    }
    db.insert_dataset(users);
    db.insert_dataset(comments);

    let script =
        orion::parse_str("X operations Using S:1\nCOPY U::rep TO C::authorRep WHERE id=uid")
            .unwrap();
    let (migrated, _) = migrate(&db, &schema, &script, Mode::Strict).unwrap();
    let c = migrated.dataset("C").unwrap();
    assert_eq!(c.records[0].get("authorRep"), Some(&Value::Int(20)));
    assert_eq!(c.records[1].get("authorRep"), Some(&Value::Int(10)));
    // No matching user: the copied field is Null.
    assert_eq!(c.records[2].get("authorRep"), Some(&Value::Null));
    // Source records keep the feature on copy.
    assert!(migrated.dataset("U").unwrap().records[0].get("rep").is_some());
}

#[test]
fn strict_join_ambiguity_vs_lenient_first_match() {
    let schema = athena::parse_str(
        "Schema S:1 Root entity U { +id: String, rep: Integer } Root entity C { +cid: String, uid: String }",
    )
    .unwrap();
    let mut db = Database::new(StoreMode::Aggregate);
    let mut users = Dataset::new("U");
    for rep in [1, 2] {
        let mut r = Record::new();
        r.set("id", Value::Str("dup".into()));
        r.set("rep", Value::Int(rep));
        users.records.push(r);
    }
    let mut comments = Dataset::new("C");
    let mut r = Record::new();
    r.set("cid", Value::Str("c1".into()));
    r.set("uid", Value::Str("dup".into()));
    comments.records.push(r);
    db.insert_dataset(users);
    db.insert_dataset(comments);

    let script =
        orion::parse_str("X operations Using S:1\nCOPY U::rep TO C::r WHERE id=uid").unwrap();
    assert!(migrate(&db, &schema, &script, Mode::Strict).is_err());
    let (migrated, report) = migrate(&db, &schema, &script, Mode::Lenient).unwrap();
    assert_eq!(
        migrated.dataset("C").unwrap().records[0].get("r"),
        Some(&Value::Int(1))
    );
    assert_eq!(report.total_warnings(), 1);
}

#[test]
fn mult_widens_and_narrows() {
    let schema = athena::parse_str(
        "Schema S:1 Root entity T { r: Ref<E as String>& } Root entity E { +id: String }",
    )
    .unwrap();
    let mut db = Database::new(StoreMode::Aggregate);
    let mut ds = Dataset::new("T");
    let mut r = Record::new();
    r.set("r", Value::Str("e1".into()));
    ds.records.push(r);
    db.insert_dataset(ds);
    db.insert_dataset(Dataset::new("E"));

    let script = orion::parse_str("X operations Using S:1\nMULT REF T::r TO *").unwrap();
    let (widened, _) = migrate(&db, &schema, &script, Mode::Strict).unwrap();
    assert_eq!(
        widened.dataset("T").unwrap().records[0].get("r"),
        Some(&Value::List(vec![Value::Str("e1".into())]))
    );

    // Narrow back down.
    let updated = uschema::evolution::apply_script(&schema, &script)
        .unwrap()
        .schema;
    let narrow = orion::parse_str(&format!(
        "Y operations Using S:{}\nMULT REF T::r TO &",
        updated.version
    ))
    .unwrap();
    let (narrowed, _) = migrate(&widened, &updated, &narrow, Mode::Strict).unwrap();
    assert_eq!(
        narrowed.dataset("T").unwrap().records[0].get("r"),
        Some(&Value::Str("e1".into()))
    );
}

#[test]
fn narrowing_multiple_elements_is_strict_error() {
    let schema = athena::parse_str(
        "Schema S:1 Root entity T { r: Ref<E as String>* } Root entity E { +id: String }",
    )
    .unwrap();
    let mut db = Database::new(StoreMode::Aggregate);
    let mut ds = Dataset::new("T");
    let mut r = Record::new();
    r.set(
        "r",
        Value::List(vec![Value::Str("a".into()), Value::Str("b".into())]),
    );
    ds.records.push(r);
    db.insert_dataset(ds);

    let script = orion::parse_str("X operations Using S:1\nMULT REF T::r TO &").unwrap();
    assert!(migrate(&db, &schema, &script, Mode::Strict).is_err());
    let (narrowed, report) = migrate(&db, &schema, &script, Mode::Lenient).unwrap();
    assert_eq!(
        narrowed.dataset("T").unwrap().records[0].get("r"),
        Some(&Value::Str("a".into()))
    );
    assert_eq!(report.total_warnings(), 1);
}

#[test]
fn morph_reference_embeds_target_record() {
    let schema = athena::parse_str(
        "Schema S:1 Root entity T { r: Ref<E as String>& } Entity E { +id: String, v: Integer }",
    )
    .unwrap();
    let mut db = Database::new(StoreMode::Aggregate);
    let mut ts = Dataset::new("T");
    let mut r = Record::new();
    r.set("r", Value::Str("e1".into()));
    ts.records.push(r);
    let mut es = Dataset::new("E");
    let mut e = Record::new();
    e.set("id", Value::Str("e1".into()));
    e.set("v", Value::Int(9));
    es.records.push(e);
    db.insert_dataset(ts);
    db.insert_dataset(es);

    let script = orion::parse_str("X operations Using S:1\nMORPH REF T::r TO inner").unwrap();
    let (migrated, _) = migrate(&db, &schema, &script, Mode::Strict).unwrap();
    let record = &migrated.dataset("T").unwrap().records[0];
    assert!(record.get("r").is_none());
    match record.get("inner").unwrap() {
        Value::Embedded(e) => assert_eq!(e.get("v"), Some(&Value::Int(9))),
        other => panic!("expected embedded, got {other:?}"),
    }
}

#[test]
fn morph_aggregate_hoists_embedded_records() {
    let schema = athena::parse_str(
        "Schema S:1 Root entity T { a: Aggr<E>& } Entity E { +id: String, v: Integer }",
    )
    .unwrap();
    let mut db = Database::new(StoreMode::Aggregate);
    let mut ts = Dataset::new("T");
    for (id, v) in [("e1", 1), ("e2", 2), ("e1", 1)] {
        let mut inner = Record::new();
        inner.set("id", Value::Str(id.into()));
        inner.set("v", Value::Int(v));
        let mut r = Record::new();
        r.set("a", Value::Embedded(inner));
        ts.records.push(r);
    }
    db.insert_dataset(ts);

    let script = orion::parse_str("X operations Using S:1\nMORPH AGGR T::a").unwrap();
    let (migrated, report) = migrate(&db, &schema, &script, Mode::Strict).unwrap();
    let t = migrated.dataset("T").unwrap();
    assert_eq!(t.records[0].get("a"), Some(&Value::Str("e1".into())));
    assert_eq!(t.records[1].get("a"), Some(&Value::Str("e2".into())));
    assert_eq!(t.records[2].get("a"), Some(&Value::Str("e1".into())));
    // Hoisted records are deduplicated by key.
    let e = migrated.dataset("E").unwrap();
    assert_eq!(e.len(), 2);
    assert_eq!(report.ops[0].created, 2);
}

#[test]
fn morph_aggregate_generates_fresh_keys_when_missing() {
    let schema = athena::parse_str(
        "Schema S:1 Root entity T { a: Aggr<E>& } Entity E { +id: String, v: Integer }",
    )
    .unwrap();
    let mut db = Database::new(StoreMode::Aggregate);
    let mut ts = Dataset::new("T");
    let mut inner = Record::new();
    inner.set("v", Value::Int(5));
    let mut r = Record::new();
    r.set("a", Value::Embedded(inner));
    ts.records.push(r);
    db.insert_dataset(ts);

    let script = orion::parse_str("X operations Using S:1\nMORPH AGGR T::a").unwrap();
    assert!(migrate(&db, &schema, &script, Mode::Strict).is_err());
    let (migrated, report) = migrate(&db, &schema, &script, Mode::Lenient).unwrap();
    let key = migrated.dataset("T").unwrap().records[0].get("a").unwrap();
    assert!(matches!(key, Value::Str(s) if s.starts_with("T_gen_")));
    assert_eq!(migrated.dataset("E").unwrap().len(), 1);
    assert_eq!(report.total_warnings(), 1);
}

#[test]
fn promote_verifies_uniqueness() {
    let schema =
        athena::parse_str("Schema S:1 Root entity T { +id: String, code: String }").unwrap();
    let mut db = Database::new(StoreMode::Aggregate);
    let mut ds = Dataset::new("T");
    for (id, code) in [("a", "x"), ("b", "x")] {
        let mut r = Record::new();
        r.set("id", Value::Str(id.into()));
        r.set("code", Value::Str(code.into()));
        ds.records.push(r);
    }
    db.insert_dataset(ds);

    let script = orion::parse_str("X operations Using S:1\nPROMOTE ATTR T::code").unwrap();
    let err = migrate(&db, &schema, &script, Mode::Strict).unwrap_err();
    assert!(err.to_string().contains("not unique"));

    // Unique values pass and leave the data untouched.
    let mut db2 = Database::new(StoreMode::Aggregate);
    let mut ds2 = Dataset::new("T");
    for (id, code) in [("a", "x"), ("b", "y")] {
        let mut r = Record::new();
        r.set("id", Value::Str(id.into()));
        r.set("code", Value::Str(code.into()));
        ds2.records.push(r);
    }
    db2.insert_dataset(ds2.clone());
    let (migrated, _) = migrate(&db2, &schema, &script, Mode::Strict).unwrap();
    assert_eq!(migrated.dataset("T").unwrap(), &ds2);
}

#[test]
fn strict_cast_failure_carries_record_locator() {
    let schema = athena::parse_str("Schema S:1 Root entity T { +id: String, n: String }").unwrap();
    let mut db = Database::new(StoreMode::Aggregate);
    let mut ds = Dataset::new("T");
    for (id, n) in [("a", "1"), ("b", "oops"), ("c", "3")] {
        let mut r = Record::new();
        r.set("id", Value::Str(id.into()));
        r.set("n", Value::Str(n.into()));
        ds.records.push(r);
    }
    db.insert_dataset(ds);

    let script = orion::parse_str("X operations Using S:1\nCAST ATTR T::n TO Integer").unwrap();
    let err = migrate(&db, &schema, &script, Mode::Strict).unwrap_err();
    let text = err.to_string();
    assert!(text.contains("record 1"), "got: {text}");

    let (migrated, report) = migrate(&db, &schema, &script, Mode::Lenient).unwrap();
    assert_eq!(
        migrated.dataset("T").unwrap().records[1].get("n"),
        Some(&Value::Int(0))
    );
    assert_eq!(report.total_warnings(), 1);
}

#[test]
fn schema_type_data_ops() {
    let schema = athena::parse_str(
        "Schema S:1 Root entity A { a: String, b: Integer } Root entity B { c: Boolean }",
    )
    .unwrap();
    let a_type = schema.schema_type("A").unwrap();
    let b_type = schema.schema_type("B").unwrap();
    let mut db = Database::new(StoreMode::Aggregate);
    let mut a = Dataset::new("A");
    for i in 0..3 {
        a.records.push(record_for(a_type, 1, i));
    }
    let mut b = Dataset::new("B");
    for i in 0..2 {
        b.records.push(record_for(b_type, 1, i));
    }
    db.insert_dataset(a);
    db.insert_dataset(b);

    // Merge preserves record counts and order (A's records first).
    let script = orion::parse_str("X operations Using S:1\nMERGE ENTITIES A, B TO C").unwrap();
    let (merged, _) = migrate(&db, &schema, &script, Mode::Strict).unwrap();
    let c = merged.dataset("C").unwrap();
    assert_eq!(c.len(), 5);
    assert!(c.records[0].get("a").is_some());
    assert!(c.records[3].get("c").is_some());
    assert!(merged.dataset("A").is_none());

    // Split projects both halves and drops the source.
    let script =
        orion::parse_str("X operations Using S:1\nSPLIT ENTITY A TO L { a } AND R2 { b }").unwrap();
    let (split, _) = migrate(&db, &schema, &script, Mode::Strict).unwrap();
    assert!(split.dataset("A").is_none());
    assert_eq!(split.dataset("L").unwrap().len(), 3);
    assert_eq!(split.dataset("R2").unwrap().len(), 3);
    assert!(split.dataset("L").unwrap().records[0].get("b").is_none());

    // Extract keeps the source intact.
    let script =
        orion::parse_str("X operations Using S:1\nEXTRACT ENTITY A::a TO OnlyA").unwrap();
    let (extracted, _) = migrate(&db, &schema, &script, Mode::Strict).unwrap();
    assert_eq!(extracted.dataset("A").unwrap().len(), 3);
    assert_eq!(extracted.dataset("OnlyA").unwrap().len(), 3);

    // Rename re-keys; Add creates an empty dataset; Delete drops it.
    let script = orion::parse_str(
        "X operations Using S:1\nRENAME ENTITY A TO A2\nADD ENTITY NewOne: { +id: String }\nDELETE ENTITY B",
    )
    .unwrap();
    let (renamed, report) = migrate(&db, &schema, &script, Mode::Strict).unwrap();
    assert!(renamed.dataset("A").is_none());
    assert_eq!(renamed.dataset("A2").unwrap().len(), 3);
    assert_eq!(renamed.dataset("NewOne").unwrap().len(), 0);
    assert!(renamed.dataset("B").is_none());
    assert_eq!(report.ops[2].deleted, 2);
}

#[test]
fn graph_reference_add_creates_edge_dataset() {
    let schema = athena::parse_str(
        "Schema S:1 Root entity U { +id: String, pid: String } Root entity P { +id: String }",
    )
    .unwrap();
    let mut db = Database::new(StoreMode::Graph);
    let mut users = Dataset::new("U");
    let mut u = Record::new();
    u.set("id", Value::Str("u1".into()));
    u.set("pid", Value::Str("p1".into()));
    users.records.push(u);
    let mut posts = Dataset::new("P");
    let mut p = Record::new();
    p.set("id", Value::Str("p1".into()));
    posts.records.push(p);
    db.insert_dataset(users);
    db.insert_dataset(posts);

    let script =
        orion::parse_str("X operations Using S:1\nADD REF U::wrote: {}& TO P WHERE id=pid")
            .unwrap();
    let (migrated, report) = migrate(&db, &schema, &script, Mode::Strict).unwrap();
    let edges = migrated.dataset("wrote").unwrap();
    assert_eq!(edges.len(), 1);
    assert_eq!(edges.records[0].get("_out"), Some(&Value::Str("u1".into())));
    assert_eq!(edges.records[0].get("_in"), Some(&Value::Str("p1".into())));
    // In graph mode the in-record field is not populated.
    assert!(migrated.dataset("U").unwrap().records[0].get("wrote").is_none());
    assert_eq!(report.ops[0].created, 1);
}

#[test]
fn aggregate_mode_rejects_relationship_datasets() {
    let schema = athena::parse_str(&fixture("stackoverflow.athena")).unwrap();
    let mut db = Database::new(StoreMode::Aggregate);
    db.insert_dataset(Dataset::new("Rel_Comments"));
    let script = orion::parse_str("X operations Using stackoverflow:1").unwrap();
    let err = migrate(&db, &schema, &script, Mode::Strict).unwrap_err();
    assert!(err.to_string().contains("aggregate-based"));
}

#[test]
fn unknown_dataset_is_rejected() {
    let schema = athena::parse_str("Schema S:1 Root entity T { a: String }").unwrap();
    let mut db = Database::new(StoreMode::Aggregate);
    db.insert_dataset(Dataset::new("Ghost"));
    let script = orion::parse_str("X operations Using S:1").unwrap();
    assert!(migrate(&db, &schema, &script, Mode::Strict).is_err());
}
