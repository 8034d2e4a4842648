//! Parser and pretty-printer for the Athena schema definition language.
//!
//! An Athena text declares a schema header (`Schema Name:Version`) followed
//! by entity, relationship, and feature-set (`FSet`) declarations. Types
//! either list their features directly or split them into a `Common` block
//! plus numbered `Variation` blocks. A trailing `+ fsetName` after a type
//! body inlines a feature set into the type's common features; inclusion is
//! resolved at parse time and printing always emits the inlined form.

mod parser;
pub(crate) mod printer;

pub use parser::{parse, parse_str};
pub use printer::print;

use thiserror::Error;

use crate::model::Violation;

/// An Athena source text together with its origin for error reporting.
#[derive(Debug, Clone)]
pub struct AthenaSource {
    pub text: String,
    pub origin: String,
}

impl AthenaSource {
    pub fn from_text(text: impl Into<String>) -> AthenaSource {
        AthenaSource {
            text: text.into(),
            origin: "<memory>".to_string(),
        }
    }

    pub fn from_file(path: &std::path::Path) -> std::io::Result<AthenaSource> {
        Ok(AthenaSource {
            text: std::fs::read_to_string(path)?,
            origin: path.display().to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AthenaError {
    #[error("syntax error at {line}:{column}: expected {expected}")]
    Syntax {
        line: u32,
        column: u32,
        expected: String,
    },
    #[error("unknown feature set `{name}` inlined by `{used_by}`")]
    UnknownFset { name: String, used_by: String },
    #[error("`{path}` targets undeclared type `{target}`")]
    UnknownTargetType { path: String, target: String },
    #[error("duplicate name `{path}`")]
    DuplicateName { path: String },
    #[error("schema violates model invariants: {}", format_violations(.0))]
    InvalidSchema(Vec<Violation>),
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
