//! Recursive-descent parser for Orion change scripts.
//!
//! Every statement starts with an upper-case operation keyword; the grammar
//! is newline-insensitive, so a statement simply ends where its last
//! argument does. Variation identifiers are written `v1` (the bare integer
//! form `1` is also accepted).

use crate::grammar::{self, GrammarError};
use crate::lex::{tokenize, Cursor, Tok};
use crate::model::{FeatureKind, RefAttribute};

use super::{
    AggregateBody, ChangeOp, ChangeScript, FeatureSelector, JoinCondition, OrionError, TypeFlavor,
    TypeTarget,
};

impl From<GrammarError> for OrionError {
    fn from(e: GrammarError) -> OrionError {
        OrionError::Syntax {
            line: e.line,
            column: e.column,
            expected: e.expected,
        }
    }
}

pub fn parse(text: &str) -> Result<ChangeScript, OrionError> {
    parse_str(text)
}

pub fn parse_str(text: &str) -> Result<ChangeScript, OrionError> {
    let tokens = tokenize(text, false).map_err(|e| OrionError::Syntax {
        line: e.line,
        column: e.column,
        expected: e.message,
    })?;
    let mut cur = Cursor::new(tokens);
    script(&mut cur)
}

fn script(cur: &mut Cursor) -> Result<ChangeScript, OrionError> {
    let name = grammar::ident(cur, "script name")?;
    grammar::expect_keyword(cur, "operations")?;
    grammar::expect_keyword(cur, "Using")?;
    let schema_name = grammar::ident(cur, "schema name")?;
    grammar::expect(cur, Tok::Colon, "`:` after schema name")?;
    let version = grammar::int(cur, "schema version")?;
    if version < 0 {
        grammar::fail::<()>(cur, "non-negative schema version")?;
    }

    let mut ops = Vec::new();
    while !cur.at_eof() {
        ops.push(statement(cur)?);
    }
    Ok(ChangeScript {
        name,
        schema_name,
        schema_version: version as u32,
        ops,
    })
}

fn statement(cur: &mut Cursor) -> Result<ChangeOp, OrionError> {
    let tok = cur.peek().clone();
    let word = match &tok.tok {
        Tok::Ident(w) => w.clone(),
        _ => {
            return Err(OrionError::Syntax {
                line: tok.line,
                column: tok.column,
                expected: format!("an operation keyword, found {}", tok.tok),
            })
        }
    };
    match word.as_str() {
        "ADD" => {
            cur.next();
            add_statement(cur)
        }
        "DELETE" => {
            cur.next();
            delete_statement(cur)
        }
        "RENAME" => {
            cur.next();
            rename_statement(cur)
        }
        "EXTRACT" => {
            cur.next();
            extract_statement(cur)
        }
        "SPLIT" => {
            cur.next();
            split_statement(cur)
        }
        "MERGE" => {
            cur.next();
            merge_statement(cur)
        }
        "DELVAR" => {
            cur.next();
            let flavor = flavor(cur)?;
            let type_name = grammar::ident(cur, "type name")?;
            grammar::expect(cur, Tok::DoubleColon, "`::`")?;
            let var_id = variation_id(cur)?;
            Ok(ChangeOp::DeleteVariation {
                flavor,
                type_name,
                var_id,
            })
        }
        "ADAPT" => {
            cur.next();
            let flavor = flavor(cur)?;
            let type_name = grammar::ident(cur, "type name")?;
            grammar::expect(cur, Tok::DoubleColon, "`::`")?;
            let source = variation_id(cur)?;
            grammar::expect_keyword(cur, "TO")?;
            let target = variation_id(cur)?;
            Ok(ChangeOp::AdaptVariation {
                flavor,
                type_name,
                source,
                target,
            })
        }
        "UNION" => {
            cur.next();
            let flavor = flavor(cur)?;
            let type_name = grammar::ident(cur, "type name")?;
            Ok(ChangeOp::UnionVariations { flavor, type_name })
        }
        "COPY" => {
            cur.next();
            copy_move_statement(cur, true)
        }
        "MOVE" => {
            cur.next();
            copy_move_statement(cur, false)
        }
        "NEST" => {
            cur.next();
            let selector = multi_selector(cur)?;
            grammar::expect_keyword(cur, "TO")?;
            let aggregate = qname(cur)?;
            Ok(ChangeOp::NestFeatures {
                selector,
                aggregate,
            })
        }
        "UNNEST" => {
            cur.next();
            let selector = multi_selector(cur)?;
            Ok(ChangeOp::UnnestFeatures { selector })
        }
        "CAST" => {
            cur.next();
            if cur.eat_ident("ATTR") {
                let selector = multi_selector(cur)?;
                grammar::expect_keyword(cur, "TO")?;
                let to = grammar::scalar_type(cur)?;
                Ok(ChangeOp::CastAttribute { selector, to })
            } else if cur.eat_ident("REF") {
                let selector = multi_selector(cur)?;
                grammar::expect_keyword(cur, "TO")?;
                let to = grammar::scalar_type(cur)?;
                Ok(ChangeOp::CastReference { selector, to })
            } else {
                Err(grammar::fail::<()>(cur, "`ATTR` or `REF`").unwrap_err().into())
            }
        }
        "PROMOTE" => {
            cur.next();
            grammar::expect_keyword(cur, "ATTR")?;
            let selector = multi_selector(cur)?;
            Ok(ChangeOp::PromoteAttribute { selector })
        }
        "DEMOTE" => {
            cur.next();
            grammar::expect_keyword(cur, "ATTR")?;
            let selector = multi_selector(cur)?;
            Ok(ChangeOp::DemoteAttribute { selector })
        }
        "MULT" => {
            cur.next();
            if cur.eat_ident("REF") {
                let selector = single_selector(cur)?;
                grammar::expect_keyword(cur, "TO")?;
                let cardinality = grammar::cardinality(cur)?;
                Ok(ChangeOp::MultReference {
                    selector,
                    cardinality,
                })
            } else if cur.eat_ident("AGGR") {
                let selector = single_selector(cur)?;
                grammar::expect_keyword(cur, "TO")?;
                let cardinality = grammar::cardinality(cur)?;
                Ok(ChangeOp::MultAggregate {
                    selector,
                    cardinality,
                })
            } else {
                Err(grammar::fail::<()>(cur, "`REF` or `AGGR`").unwrap_err().into())
            }
        }
        "MORPH" => {
            cur.next();
            if cur.eat_ident("REF") {
                let selector = single_selector(cur)?;
                let new_name = if cur.eat_ident("TO") {
                    Some(grammar::ident(cur, "new feature name")?)
                } else {
                    None
                };
                Ok(ChangeOp::MorphReference { selector, new_name })
            } else if cur.eat_ident("AGGR") {
                let selector = single_selector(cur)?;
                let new_name = if cur.eat_ident("TO") {
                    Some(grammar::ident(cur, "new feature name")?)
                } else {
                    None
                };
                Ok(ChangeOp::MorphAggregate { selector, new_name })
            } else {
                Err(grammar::fail::<()>(cur, "`REF` or `AGGR`").unwrap_err().into())
            }
        }
        other => Err(OrionError::UnknownOperationKeyword {
            word: other.to_string(),
            line: tok.line,
            column: tok.column,
        }),
    }
}

fn add_statement(cur: &mut Cursor) -> Result<ChangeOp, OrionError> {
    if cur.eat_ident("ENTITY") {
        return add_type(cur, TypeFlavor::Entity);
    }
    if cur.eat_ident("RELATIONSHIP") {
        return add_type(cur, TypeFlavor::Relationship);
    }
    if cur.eat_ident("ATTR") {
        let type_name = grammar::ident(cur, "type name")?;
        grammar::expect(cur, Tok::DoubleColon, "`::`")?;
        let name = grammar::ident(cur, "attribute name")?;
        grammar::expect(cur, Tok::Colon, "`:`")?;
        let data_type = grammar::data_type(cur)?;
        return Ok(ChangeOp::AddAttribute {
            type_name,
            name,
            data_type,
        });
    }
    if cur.eat_ident("REF") {
        return add_reference(cur);
    }
    if cur.eat_ident("AGGR") {
        return add_aggregate(cur);
    }
    Err(grammar::fail::<()>(cur, "`ENTITY`, `RELATIONSHIP`, `ATTR`, `REF`, or `AGGR`")
        .unwrap_err()
        .into())
}

fn add_type(cur: &mut Cursor, flavor: TypeFlavor) -> Result<ChangeOp, OrionError> {
    let name = grammar::ident(cur, "type name")?;
    grammar::expect(cur, Tok::Colon, "`:`")?;
    let mut root = flavor == TypeFlavor::Entity;
    if cur.eat_ident("NONROOT") {
        root = false;
    } else if cur.eat_ident("ROOT") {
        if flavor == TypeFlavor::Relationship {
            grammar::fail::<()>(cur, "relationship types cannot be root")?;
        }
        root = true;
    }
    grammar::expect(cur, Tok::LBrace, "`{`")?;
    let features = grammar::feature_list(cur)?;
    grammar::expect(cur, Tok::RBrace, "`}`")?;
    Ok(ChangeOp::AddType {
        flavor,
        name,
        root,
        features,
    })
}

fn add_reference(cur: &mut Cursor) -> Result<ChangeOp, OrionError> {
    let type_name = grammar::ident(cur, "type name")?;
    grammar::expect(cur, Tok::DoubleColon, "`::`")?;
    let name = grammar::ident(cur, "reference name")?;
    grammar::expect(cur, Tok::Colon, "`:`")?;
    let mut value_type = None;
    let mut attributes: Vec<RefAttribute> = Vec::new();
    if cur.peek().tok == Tok::LBrace {
        cur.next();
        if !cur.eat(&Tok::RBrace) {
            loop {
                attributes.push(grammar::ref_attribute(cur)?);
                if !cur.eat(&Tok::Comma) {
                    break;
                }
            }
            grammar::expect(cur, Tok::RBrace, "`}`")?;
        }
    } else {
        value_type = Some(grammar::scalar_type(cur)?);
    }
    let cardinality = grammar::cardinality(cur)?;
    grammar::expect_keyword(cur, "TO")?;
    let target = grammar::ident(cur, "target entity type")?;
    let condition = if cur.eat_ident("WHERE") {
        Some(join_condition(cur)?)
    } else {
        None
    };
    Ok(ChangeOp::AddReference {
        type_name,
        name,
        value_type,
        attributes,
        cardinality,
        target,
        condition,
    })
}

fn add_aggregate(cur: &mut Cursor) -> Result<ChangeOp, OrionError> {
    let type_name = grammar::ident(cur, "type name")?;
    grammar::expect(cur, Tok::DoubleColon, "`::`")?;
    let name = grammar::ident(cur, "aggregate name")?;
    grammar::expect(cur, Tok::Colon, "`:`")?;
    if cur.peek().tok == Tok::LBrace {
        cur.next();
        let fields = grammar::feature_list(cur)?;
        grammar::expect(cur, Tok::RBrace, "`}`")?;
        for f in &fields {
            if !matches!(f.kind, FeatureKind::Attribute(_)) {
                grammar::fail::<()>(cur, "attributes only in an inline aggregate body")?;
            }
        }
        let cardinality = grammar::cardinality(cur)?;
        // `AS NewType` names the created type; `TO NewType` is accepted as a
        // synonym.
        if !cur.eat_ident("AS") {
            grammar::expect_keyword(cur, "TO")?;
        }
        let new_type = grammar::ident(cur, "new entity type name")?;
        Ok(ChangeOp::AddAggregate {
            type_name,
            name,
            body: AggregateBody::Inline {
                fields,
                type_name: new_type,
            },
            cardinality,
        })
    } else {
        let target = grammar::ident(cur, "target entity type")?;
        let cardinality = grammar::cardinality(cur)?;
        Ok(ChangeOp::AddAggregate {
            type_name,
            name,
            body: AggregateBody::Existing { target },
            cardinality,
        })
    }
}

fn delete_statement(cur: &mut Cursor) -> Result<ChangeOp, OrionError> {
    if cur.eat_ident("ENTITY") {
        let name = grammar::ident(cur, "type name")?;
        return Ok(ChangeOp::DeleteType {
            flavor: TypeFlavor::Entity,
            name,
        });
    }
    if cur.eat_ident("RELATIONSHIP") {
        let name = grammar::ident(cur, "type name")?;
        return Ok(ChangeOp::DeleteType {
            flavor: TypeFlavor::Relationship,
            name,
        });
    }
    let selector = multi_selector(cur)?;
    Ok(ChangeOp::DeleteFeature { selector })
}

fn rename_statement(cur: &mut Cursor) -> Result<ChangeOp, OrionError> {
    if cur.eat_ident("ENTITY") {
        let name = grammar::ident(cur, "type name")?;
        grammar::expect_keyword(cur, "TO")?;
        let new_name = grammar::ident(cur, "new type name")?;
        return Ok(ChangeOp::RenameType {
            flavor: TypeFlavor::Entity,
            name,
            new_name,
        });
    }
    if cur.eat_ident("RELATIONSHIP") {
        let name = grammar::ident(cur, "type name")?;
        grammar::expect_keyword(cur, "TO")?;
        let new_name = grammar::ident(cur, "new type name")?;
        return Ok(ChangeOp::RenameType {
            flavor: TypeFlavor::Relationship,
            name,
            new_name,
        });
    }
    let selector = single_selector(cur)?;
    grammar::expect_keyword(cur, "TO")?;
    let new_name = qname(cur)?;
    Ok(ChangeOp::RenameFeature { selector, new_name })
}

fn extract_statement(cur: &mut Cursor) -> Result<ChangeOp, OrionError> {
    let fl = flavor(cur)?;
    let name = grammar::ident(cur, "type name")?;
    grammar::expect(cur, Tok::DoubleColon, "`::`")?;
    let features = qname_list(cur)?;
    grammar::expect_keyword(cur, "TO")?;
    let new_name = grammar::ident(cur, "new type name")?;
    Ok(ChangeOp::ExtractType {
        flavor: fl,
        name,
        features,
        new_name,
    })
}

fn split_statement(cur: &mut Cursor) -> Result<ChangeOp, OrionError> {
    let fl = flavor(cur)?;
    let name = grammar::ident(cur, "type name")?;
    grammar::expect_keyword(cur, "TO")?;
    let first_name = grammar::ident(cur, "first new type name")?;
    grammar::expect(cur, Tok::LBrace, "`{`")?;
    let first_features = qname_list(cur)?;
    grammar::expect(cur, Tok::RBrace, "`}`")?;
    grammar::expect_keyword(cur, "AND")?;
    let second_name = grammar::ident(cur, "second new type name")?;
    grammar::expect(cur, Tok::LBrace, "`{`")?;
    let second_features = qname_list(cur)?;
    grammar::expect(cur, Tok::RBrace, "`}`")?;
    Ok(ChangeOp::SplitType {
        flavor: fl,
        name,
        first_name,
        first_features,
        second_name,
        second_features,
    })
}

fn merge_statement(cur: &mut Cursor) -> Result<ChangeOp, OrionError> {
    let fl = if cur.eat_ident("ENTITIES") || cur.eat_ident("ENTITY") {
        TypeFlavor::Entity
    } else if cur.eat_ident("RELATIONSHIPS") || cur.eat_ident("RELATIONSHIP") {
        TypeFlavor::Relationship
    } else {
        return Err(grammar::fail::<()>(cur, "`ENTITIES` or `RELATIONSHIPS`")
            .unwrap_err()
            .into());
    };
    let first = grammar::ident(cur, "first type name")?;
    grammar::expect(cur, Tok::Comma, "`,`")?;
    let second = grammar::ident(cur, "second type name")?;
    grammar::expect_keyword(cur, "TO")?;
    let new_name = grammar::ident(cur, "merged type name")?;
    Ok(ChangeOp::MergeTypes {
        flavor: fl,
        first,
        second,
        new_name,
    })
}

fn copy_move_statement(cur: &mut Cursor, copy: bool) -> Result<ChangeOp, OrionError> {
    let source_type = grammar::ident(cur, "source type name")?;
    grammar::expect(cur, Tok::DoubleColon, "`::`")?;
    let source_feature = qname(cur)?;
    grammar::expect_keyword(cur, "TO")?;
    let dest_type = grammar::ident(cur, "destination type name")?;
    grammar::expect(cur, Tok::DoubleColon, "`::`")?;
    let dest_feature = qname(cur)?;
    grammar::expect_keyword(cur, "WHERE")?;
    let condition = join_condition(cur)?;
    Ok(if copy {
        ChangeOp::CopyFeature {
            source_type,
            source_feature,
            dest_type,
            dest_feature,
            condition,
        }
    } else {
        ChangeOp::MoveFeature {
            source_type,
            source_feature,
            dest_type,
            dest_feature,
            condition,
        }
    })
}

fn flavor(cur: &mut Cursor) -> Result<TypeFlavor, OrionError> {
    if cur.eat_ident("ENTITY") {
        Ok(TypeFlavor::Entity)
    } else if cur.eat_ident("RELATIONSHIP") {
        Ok(TypeFlavor::Relationship)
    } else {
        Err(grammar::fail::<()>(cur, "`ENTITY` or `RELATIONSHIP`")
            .unwrap_err()
            .into())
    }
}

/// Variation identifiers: `v3` or the bare integer `3`.
fn variation_id(cur: &mut Cursor) -> Result<u32, OrionError> {
    match &cur.peek().tok {
        Tok::Ident(word) => {
            if let Some(digits) = word.strip_prefix('v') {
                if let Ok(n) = digits.parse::<u32>() {
                    if n > 0 {
                        cur.next();
                        return Ok(n);
                    }
                }
            }
            Err(grammar::fail::<()>(cur, "a variation id like `v1`")
                .unwrap_err()
                .into())
        }
        Tok::Int(n) if *n > 0 => {
            let n = *n as u32;
            cur.next();
            Ok(n)
        }
        _ => Err(grammar::fail::<()>(cur, "a variation id like `v1`")
            .unwrap_err()
            .into()),
    }
}

fn join_condition(cur: &mut Cursor) -> Result<JoinCondition, OrionError> {
    let source_feature = qname(cur)?;
    grammar::expect(cur, Tok::Eq, "`=`")?;
    let target_feature = qname(cur)?;
    Ok(JoinCondition {
        source_feature,
        target_feature,
    })
}

/// A possibly dotted name, returned with dots intact.
fn qname(cur: &mut Cursor) -> Result<String, OrionError> {
    let mut name = grammar::ident(cur, "a name")?;
    while cur.peek().tok == Tok::Dot {
        cur.next();
        name.push('.');
        name.push_str(&grammar::ident(cur, "a name after `.`")?);
    }
    Ok(name)
}

fn qname_list(cur: &mut Cursor) -> Result<Vec<String>, OrionError> {
    let mut names = vec![qname(cur)?];
    while cur.eat(&Tok::Comma) {
        names.push(qname(cur)?);
    }
    Ok(names)
}

fn selector_head(cur: &mut Cursor) -> Result<(TypeTarget, Option<Vec<u32>>), OrionError> {
    if cur.eat(&Tok::Star) {
        // The wildcard never combines with a variation list.
        return Ok((TypeTarget::Wildcard, None));
    }
    let type_name = grammar::ident(cur, "type name or `*`")?;
    let mut variations = None;
    if cur.peek().tok == Tok::LParen {
        cur.next();
        let mut ids = vec![variation_id(cur)?];
        while cur.eat(&Tok::Comma) {
            ids.push(variation_id(cur)?);
        }
        grammar::expect(cur, Tok::RParen, "`)`")?;
        variations = Some(ids);
    }
    Ok((TypeTarget::Named(type_name), variations))
}

fn multi_selector(cur: &mut Cursor) -> Result<FeatureSelector, OrionError> {
    let (target, variations) = selector_head(cur)?;
    grammar::expect(cur, Tok::DoubleColon, "`::`")?;
    let features = qname_list(cur)?;
    Ok(FeatureSelector {
        target,
        variations,
        features,
    })
}

fn single_selector(cur: &mut Cursor) -> Result<FeatureSelector, OrionError> {
    let (target, variations) = selector_head(cur)?;
    grammar::expect(cur, Tok::DoubleColon, "`::`")?;
    let feature = qname(cur)?;
    Ok(FeatureSelector {
        target,
        variations,
        features: vec![feature],
    })
}
