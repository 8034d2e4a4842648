//! Recursive-descent parser for Athena texts.
//!
//! Keywords are contextual: `Common`, `Variation`, and the type names are
//! recognized by value, so features may reuse ordinary words like `name` or
//! `types`. Matching is case-sensitive.

use std::collections::BTreeSet;

use crate::grammar::{self, GrammarError};
use crate::lex::{tokenize, Cursor, Tok};
use crate::model::{validate, Feature, Schema, SchemaType, StructuralVariation, TypeKind};

use super::{AthenaError, AthenaSource};

impl From<GrammarError> for AthenaError {
    fn from(e: GrammarError) -> AthenaError {
        AthenaError::Syntax {
            line: e.line,
            column: e.column,
            expected: e.expected,
        }
    }
}

pub fn parse(src: &AthenaSource) -> Result<Schema, AthenaError> {
    parse_str(&src.text)
}

pub fn parse_str(text: &str) -> Result<Schema, AthenaError> {
    let tokens = tokenize(text, true).map_err(|e| AthenaError::Syntax {
        line: e.line,
        column: e.column,
        expected: e.message,
    })?;
    let mut cur = Cursor::new(tokens);
    schema(&mut cur)
}

struct FsetDecl {
    name: String,
    features: Vec<Feature>,
}

struct TypeDecl {
    ty: SchemaType,
    inlined_fsets: Vec<String>,
}

fn schema(cur: &mut Cursor) -> Result<Schema, AthenaError> {
    grammar::expect_keyword(cur, "Schema")?;
    let name = grammar::ident(cur, "schema name")?;
    grammar::expect(cur, Tok::Colon, "`:` after schema name")?;
    let version = grammar::int(cur, "schema version")?;
    if version < 0 {
        return Err(grammar::fail::<()>(cur, "non-negative schema version").unwrap_err().into());
    }

    let mut types: Vec<TypeDecl> = Vec::new();
    let mut fsets: Vec<FsetDecl> = Vec::new();
    while !cur.at_eof() {
        if cur.eat_ident("Root") {
            grammar::expect_keyword(cur, "entity")?;
            types.push(type_decl(cur, TypeKind::Entity, true)?);
        } else if cur.eat_ident("Entity") {
            types.push(type_decl(cur, TypeKind::Entity, false)?);
        } else if cur.eat_ident("Relationship") {
            types.push(type_decl(cur, TypeKind::Relationship, false)?);
        } else if cur.eat_ident("FSet") {
            let name = grammar::ident(cur, "feature set name")?;
            grammar::expect(cur, Tok::LBrace, "`{`")?;
            let features = grammar::feature_list(cur)?;
            grammar::expect(cur, Tok::RBrace, "`}`")?;
            check_distinct(&features, &name)?;
            fsets.push(FsetDecl { name, features });
        } else {
            grammar::fail::<()>(cur, "`Root entity`, `Entity`, `Relationship`, or `FSet`")?;
        }
    }

    build_schema(name, version as u32, types, fsets)
}

fn type_decl(cur: &mut Cursor, kind: TypeKind, root: bool) -> Result<TypeDecl, AthenaError> {
    let name = grammar::ident(cur, "type name")?;
    grammar::expect(cur, Tok::LBrace, "`{`")?;

    let common_features;
    let mut variations = Vec::new();

    // `Common` followed by `{` opens the variation form; anything else is a
    // plain feature list (a feature may itself be named Common).
    let common_form = cur.at_ident("Common") && cur.peek_at(1).tok == Tok::LBrace;
    if common_form {
        cur.next();
        cur.next();
        common_features = grammar::feature_list(cur)?;
        grammar::expect(cur, Tok::RBrace, "`}`")?;
        while cur.at_ident("Variation") && matches!(cur.peek_at(1).tok, Tok::Int(_)) {
            cur.next();
            let var_id = grammar::int(cur, "variation id")?;
            if var_id <= 0 {
                grammar::fail::<()>(cur, "positive variation id")?;
            }
            grammar::expect(cur, Tok::LBrace, "`{`")?;
            let features = grammar::feature_list(cur)?;
            grammar::expect(cur, Tok::RBrace, "`}`")?;
            variations.push(StructuralVariation {
                var_id: var_id as u32,
                features,
                count: None,
            });
        }
    } else {
        common_features = grammar::feature_list(cur)?;
    }
    grammar::expect(cur, Tok::RBrace, "`}`")?;
    if variations.is_empty() {
        variations.push(StructuralVariation::empty(1));
    }

    let mut inlined_fsets = Vec::new();
    while cur.peek().tok == Tok::Plus && matches!(cur.peek_at(1).tok, Tok::Ident(_)) {
        cur.next();
        inlined_fsets.push(grammar::ident(cur, "feature set name")?);
    }

    check_distinct(&common_features, &name)?;
    for v in &variations {
        check_distinct(&v.features, &format!("{name}/v{}", v.var_id))?;
    }
    let mut ids = BTreeSet::new();
    for v in &variations {
        if !ids.insert(v.var_id) {
            return Err(AthenaError::DuplicateName {
                path: format!("{name}/Variation {}", v.var_id),
            });
        }
    }

    Ok(TypeDecl {
        ty: SchemaType {
            name,
            kind,
            root,
            common_features,
            variations,
        },
        inlined_fsets,
    })
}

fn check_distinct(features: &[Feature], path: &str) -> Result<(), AthenaError> {
    let mut seen = BTreeSet::new();
    for f in features {
        if !seen.insert(f.name.as_str()) {
            return Err(AthenaError::DuplicateName {
                path: format!("{path}/{}", f.name),
            });
        }
    }
    Ok(())
}

fn build_schema(
    name: String,
    version: u32,
    decls: Vec<TypeDecl>,
    fsets: Vec<FsetDecl>,
) -> Result<Schema, AthenaError> {
    let mut seen = BTreeSet::new();
    for d in &decls {
        if !seen.insert(d.ty.name.clone()) {
            return Err(AthenaError::DuplicateName {
                path: d.ty.name.clone(),
            });
        }
    }

    let mut types = Vec::new();
    for decl in decls {
        let mut ty = decl.ty;
        for fset_name in &decl.inlined_fsets {
            let fset = fsets.iter().find(|f| &f.name == fset_name).ok_or_else(|| {
                AthenaError::UnknownFset {
                    name: fset_name.clone(),
                    used_by: ty.name.clone(),
                }
            })?;
            for f in &fset.features {
                let clash = ty.common_features.iter().any(|c| c.name == f.name)
                    || ty
                        .variations
                        .iter()
                        .any(|v| v.features.iter().any(|c| c.name == f.name));
                if clash {
                    return Err(AthenaError::DuplicateName {
                        path: format!("{}/{}", ty.name, f.name),
                    });
                }
                ty.common_features.push(f.clone());
            }
        }
        types.push(ty);
    }

    let schema = Schema {
        name,
        version,
        types,
    };

    // Undeclared targets get the dedicated error; everything else that can
    // still be wrong surfaces through validate.
    for t in &schema.types {
        for f in t.all_features() {
            if let Some(target) = f.target() {
                if !schema.has_type(target) {
                    return Err(AthenaError::UnknownTargetType {
                        path: format!("{}/{}", t.name, f.name),
                        target: target.to_string(),
                    });
                }
            }
        }
    }
    let violations = validate(&schema);
    if !violations.is_empty() {
        return Err(AthenaError::InvalidSchema(violations));
    }
    Ok(schema)
}
