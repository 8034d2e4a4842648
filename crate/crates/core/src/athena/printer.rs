//! Athena pretty-printer. Emits text that parses back to a structurally
//! equal schema; feature sets are always inlined.

use std::fmt::Write;

use crate::model::{
    validate, Cardinality, Constraint, Feature, FeatureKind, Schema, SchemaType, TypeKind,
};

use super::AthenaError;

pub fn print(schema: &Schema) -> Result<String, AthenaError> {
    let violations = validate(schema);
    if !violations.is_empty() {
        return Err(AthenaError::InvalidSchema(violations));
    }

    let mut out = String::new();
    let _ = writeln!(out, "Schema {}:{}", schema.name, schema.version);
    for t in &schema.types {
        out.push('\n');
        print_type(&mut out, t);
    }
    Ok(out)
}

fn print_type(out: &mut String, t: &SchemaType) {
    let header = match (t.kind, t.root) {
        (TypeKind::Entity, true) => "Root entity",
        (TypeKind::Entity, false) => "Entity",
        (TypeKind::Relationship, _) => "Relationship",
    };
    let plain = t.variations.len() == 1
        && t.variations[0].features.is_empty()
        && t.variations[0].var_id == 1;
    if plain {
        let _ = writeln!(out, "{header} {} {{", t.name);
        print_feature_lines(out, &t.common_features, "  ");
        out.push_str("}\n");
    } else {
        let _ = writeln!(out, "{header} {} {{", t.name);
        out.push_str("  Common {\n");
        print_feature_lines(out, &t.common_features, "    ");
        out.push_str("  }\n");
        for v in &t.variations {
            if v.features.is_empty() {
                let _ = writeln!(out, "  Variation {} {{}}", v.var_id);
            } else {
                let _ = writeln!(out, "  Variation {} {{", v.var_id);
                print_feature_lines(out, &v.features, "    ");
                out.push_str("  }\n");
            }
        }
        out.push_str("}\n");
    }
}

fn print_feature_lines(out: &mut String, features: &[Feature], indent: &str) {
    for (i, f) in features.iter().enumerate() {
        out.push_str(indent);
        out.push_str(&feature_text(f));
        if i + 1 < features.len() {
            out.push(',');
        }
        out.push('\n');
    }
}

pub(crate) fn feature_text(f: &Feature) -> String {
    let mut s = String::new();
    if f.optional {
        s.push_str("? ");
    }
    if f.is_key() {
        s.push('+');
    }
    let _ = write!(s, "{}: ", f.name);
    match &f.kind {
        FeatureKind::Attribute(at) => {
            let _ = write!(s, "{}", at.data_type);
            match &at.constraint {
                Some(Constraint::Regex(pattern)) => {
                    let _ = write!(s, " /{}/", pattern.replace('/', "\\/"));
                }
                Some(Constraint::Range(lo, hi)) => {
                    let _ = write!(s, " ({lo} .. {hi})");
                }
                None => {}
            }
        }
        FeatureKind::Reference(rf) => {
            match &rf.value_type {
                Some(vt) => {
                    let _ = write!(s, "Ref<{} as {}>", rf.target, vt);
                }
                None => {
                    let _ = write!(s, "Ref<{}>", rf.target);
                }
            }
            if !rf.attributes.is_empty() {
                s.push_str(" {");
                for (i, a) in rf.attributes.iter().enumerate() {
                    if i > 0 {
                        s.push_str(", ");
                    }
                    let _ = write!(s, "{}: {}", a.name, a.data_type);
                }
                s.push('}');
            }
            s.push(cardinality_symbol(rf.cardinality));
        }
        FeatureKind::Aggregate(ag) => {
            let _ = write!(s, "Aggr<{}>", ag.target);
            s.push(cardinality_symbol(ag.cardinality));
        }
    }
    s
}

fn cardinality_symbol(card: Cardinality) -> char {
    card.symbol()
}
