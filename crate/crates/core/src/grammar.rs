//! Grammar fragments shared by the Athena and Orion parsers: data types,
//! cardinality symbols, and feature declarations.

use crate::lex::{Cursor, Tok};
use crate::model::{
    Attribute, Cardinality, Constraint, DataType, Feature, FeatureKind, RefAttribute, Reference,
};

/// A localized "expected X" parse failure, mapped by each frontend into its
/// own error type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct GrammarError {
    pub line: u32,
    pub column: u32,
    pub expected: String,
}

pub(crate) fn fail<T>(cur: &Cursor, expected: impl Into<String>) -> Result<T, GrammarError> {
    let t = cur.peek();
    Err(GrammarError {
        line: t.line,
        column: t.column,
        expected: format!("{}, found {}", expected.into(), t.tok),
    })
}

pub(crate) fn expect(cur: &mut Cursor, tok: Tok, what: &str) -> Result<(), GrammarError> {
    if cur.eat(&tok) {
        Ok(())
    } else {
        fail(cur, what)
    }
}

pub(crate) fn expect_keyword(cur: &mut Cursor, word: &str) -> Result<(), GrammarError> {
    if cur.eat_ident(word) {
        Ok(())
    } else {
        fail(cur, format!("`{word}`"))
    }
}

pub(crate) fn ident(cur: &mut Cursor, what: &str) -> Result<String, GrammarError> {
    match &cur.peek().tok {
        Tok::Ident(s) => {
            let s = s.clone();
            cur.next();
            Ok(s)
        }
        _ => fail(cur, what),
    }
}

pub(crate) fn int(cur: &mut Cursor, what: &str) -> Result<i64, GrammarError> {
    match cur.peek().tok {
        Tok::Int(n) => {
            cur.next();
            Ok(n)
        }
        _ => fail(cur, what),
    }
}

fn signed_int(cur: &mut Cursor) -> Result<i64, GrammarError> {
    let negative = cur.eat(&Tok::Minus);
    let n = int(cur, "integer")?;
    Ok(if negative { -n } else { n })
}

/// Parses a data type. `Number` is accepted as an alias for `Integer`.
pub(crate) fn data_type(cur: &mut Cursor) -> Result<DataType, GrammarError> {
    let name = ident(cur, "a type")?;
    match name.as_str() {
        "String" => Ok(DataType::String),
        "Integer" | "Number" => Ok(DataType::Integer),
        "Double" => Ok(DataType::Double),
        "Boolean" => Ok(DataType::Boolean),
        "Timestamp" => Ok(DataType::Timestamp),
        "Identifier" => Ok(DataType::Identifier),
        "List" => {
            expect(cur, Tok::Lt, "`<`")?;
            let t = data_type(cur)?;
            expect(cur, Tok::Gt, "`>`")?;
            Ok(DataType::List(Box::new(t)))
        }
        "Set" => {
            expect(cur, Tok::Lt, "`<`")?;
            let t = data_type(cur)?;
            expect(cur, Tok::Gt, "`>`")?;
            Ok(DataType::Set(Box::new(t)))
        }
        "Map" => {
            expect(cur, Tok::Lt, "`<`")?;
            let k = data_type(cur)?;
            expect(cur, Tok::Comma, "`,`")?;
            let v = data_type(cur)?;
            expect(cur, Tok::Gt, "`>`")?;
            Ok(DataType::Map(Box::new(k), Box::new(v)))
        }
        "Tuple" => {
            expect(cur, Tok::Lt, "`<`")?;
            let mut parts = vec![data_type(cur)?];
            while cur.eat(&Tok::Comma) {
                parts.push(data_type(cur)?);
            }
            expect(cur, Tok::Gt, "`>`")?;
            Ok(DataType::Tuple(parts))
        }
        other => fail(cur, format!("a type, found `{other}`")),
    }
}

pub(crate) fn scalar_type(cur: &mut Cursor) -> Result<DataType, GrammarError> {
    let at = (cur.peek().line, cur.peek().column);
    let dt = data_type(cur)?;
    if dt.is_scalar() {
        Ok(dt)
    } else {
        Err(GrammarError {
            line: at.0,
            column: at.1,
            expected: format!("a scalar type, found `{dt}`"),
        })
    }
}

pub(crate) fn cardinality(cur: &mut Cursor) -> Result<Cardinality, GrammarError> {
    let card = match cur.peek().tok {
        Tok::Question => Cardinality::ZeroOrOne,
        Tok::Amp => Cardinality::One,
        Tok::Star => Cardinality::ZeroOrMany,
        Tok::Plus => Cardinality::OneOrMany,
        _ => return fail(cur, "cardinality symbol `?`, `&`, `*`, or `+`"),
    };
    cur.next();
    Ok(card)
}

pub(crate) fn at_feature_start(cur: &Cursor) -> bool {
    matches!(cur.peek().tok, Tok::Ident(_) | Tok::Plus | Tok::Question)
}

/// Parses a comma-separated feature list, stopping before the first token
/// that cannot start a feature.
pub(crate) fn feature_list(cur: &mut Cursor) -> Result<Vec<Feature>, GrammarError> {
    let mut features = Vec::new();
    if at_feature_start(cur) {
        features.push(feature(cur)?);
        while cur.eat(&Tok::Comma) {
            features.push(feature(cur)?);
        }
    }
    Ok(features)
}

/// Parses one feature declaration: `[?] [+] name: Type`.
pub(crate) fn feature(cur: &mut Cursor) -> Result<Feature, GrammarError> {
    let mut optional = false;
    let mut key = false;
    loop {
        if cur.eat(&Tok::Question) {
            optional = true;
        } else if cur.eat(&Tok::Plus) {
            key = true;
        } else {
            break;
        }
    }
    let name = ident(cur, "feature name")?;
    expect(cur, Tok::Colon, "`:` after feature name")?;
    let kind = feature_type(cur, key)?;
    if key && !matches!(kind, FeatureKind::Attribute(_)) {
        return fail(cur, "key modifier on an attribute");
    }
    Ok(Feature {
        name,
        optional,
        kind,
    })
}

fn feature_type(cur: &mut Cursor, key: bool) -> Result<FeatureKind, GrammarError> {
    if cur.at_ident("Aggr") {
        cur.next();
        expect(cur, Tok::Lt, "`<`")?;
        let target = ident(cur, "aggregate target type")?;
        expect(cur, Tok::Gt, "`>`")?;
        let cardinality = cardinality(cur)?;
        return Ok(FeatureKind::Aggregate(crate::model::Aggregate {
            target,
            cardinality,
        }));
    }
    if cur.at_ident("Ref") {
        cur.next();
        expect(cur, Tok::Lt, "`<`")?;
        let target = ident(cur, "reference target type")?;
        let value_type = if cur.eat_ident("as") {
            Some(scalar_type(cur)?)
        } else {
            None
        };
        expect(cur, Tok::Gt, "`>`")?;
        let mut attributes = Vec::new();
        if cur.peek().tok == Tok::LBrace {
            cur.next();
            if !cur.eat(&Tok::RBrace) {
                loop {
                    attributes.push(ref_attribute(cur)?);
                    if !cur.eat(&Tok::Comma) {
                        break;
                    }
                }
                expect(cur, Tok::RBrace, "`}`")?;
            }
        }
        if value_type.is_some() && !attributes.is_empty() {
            return fail(cur, "a reference with either `as` type or attributes, not both");
        }
        let cardinality = cardinality(cur)?;
        return Ok(FeatureKind::Reference(Reference {
            target,
            cardinality,
            value_type,
            attributes,
        }));
    }
    let data_type = data_type(cur)?;
    let constraint = constraint(cur, &data_type)?;
    Ok(FeatureKind::Attribute(Attribute {
        data_type,
        key,
        constraint,
    }))
}

pub(crate) fn ref_attribute(cur: &mut Cursor) -> Result<RefAttribute, GrammarError> {
    let name = ident(cur, "attribute name")?;
    expect(cur, Tok::Colon, "`:`")?;
    let data_type = data_type(cur)?;
    Ok(RefAttribute { name, data_type })
}

fn constraint(cur: &mut Cursor, dt: &DataType) -> Result<Option<Constraint>, GrammarError> {
    if let Tok::Regex(pattern) = &cur.peek().tok {
        if *dt != DataType::String {
            return fail(cur, "regex constraint only on String");
        }
        let pattern = pattern.clone();
        cur.next();
        return Ok(Some(Constraint::Regex(pattern)));
    }
    if cur.peek().tok == Tok::LParen {
        if *dt != DataType::Integer {
            return fail(cur, "range constraint only on Integer");
        }
        cur.next();
        let lo = signed_int(cur)?;
        expect(cur, Tok::DotDot, "`..`")?;
        let hi = signed_int(cur)?;
        expect(cur, Tok::RParen, "`)`")?;
        if lo > hi {
            return fail(cur, "range with min <= max");
        }
        return Ok(Some(Constraint::Range(lo, hi)));
    }
    Ok(None)
}
