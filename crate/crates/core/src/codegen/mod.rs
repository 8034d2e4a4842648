//! Backend-native script generation: one generator per target dialect
//! (document shell, CQL, Cypher) plus the document-store stacking
//! optimization.
//!
//! Generators walk the change script against the evolving schema, emit zero
//! or more statements per operation, and tag every statement with the
//! operation indexes it came from. Operations a backend cannot execute
//! become explicit unsupported markers; nothing is silently dropped.

mod columnar;
mod document;
mod graph;
mod stack;

pub use columnar::generate_columnar;
pub use document::generate_document;
pub use graph::generate_graph;
pub use stack::stack_optimize;

use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::evolution::{PreconditionViolation, UsingMismatch};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Document,
    Columnar,
    Graph,
}

impl Target {
    pub fn file_suffix(self) -> &'static str {
        match self {
            Target::Document => "document.js",
            Target::Columnar => "columnar.cql",
            Target::Graph => "graph.cypher",
        }
    }

    pub(crate) fn comment_prefix(self) -> &'static str {
        match self {
            Target::Columnar => "--",
            Target::Document | Target::Graph => "//",
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Document => write!(f, "document"),
            Target::Columnar => write!(f, "columnar"),
            Target::Graph => write!(f, "graph"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StatementKind {
    Command,
    /// Marker for an operation the target cannot execute.
    Unsupported,
}

/// Parts of a stackable document-store update, kept so consecutive updates
/// on one collection can merge into a single bulk write.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UpdateParts {
    pub database: String,
    pub collection: String,
    pub filter: String,
    pub update: String,
    pub comment: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Statement {
    pub text: String,
    pub source_ops: Vec<usize>,
    pub kind: StatementKind,
    pub stack: Option<UpdateParts>,
}

impl Statement {
    pub(crate) fn command(text: impl Into<String>, op: usize) -> Statement {
        Statement {
            text: text.into(),
            source_ops: vec![op],
            kind: StatementKind::Command,
            stack: None,
        }
    }

    pub(crate) fn unsupported(target: Target, op: usize, op_text: &str) -> Statement {
        Statement {
            text: format!("{} unsupported: {}", target.comment_prefix(), op_text),
            source_ops: vec![op],
            kind: StatementKind::Unsupported,
            stack: None,
        }
    }

    pub(crate) fn stackable(parts: UpdateParts, op: usize) -> Statement {
        let text = format!(
            "{}\n{}.{}.updateMany({}, {})",
            parts.comment, parts.database, parts.collection, parts.filter, parts.update
        );
        Statement {
            text,
            source_ops: vec![op],
            kind: StatementKind::Command,
            stack: Some(parts),
        }
    }

    pub fn is_unsupported(&self) -> bool {
        self.kind == StatementKind::Unsupported
    }
}

/// An ordered backend-native command list with provenance links back to the
/// change operations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedScript {
    pub target: Target,
    pub statements: Vec<Statement>,
}

impl GeneratedScript {
    pub fn unsupported_count(&self) -> usize {
        self.statements.iter().filter(|s| s.is_unsupported()).count()
    }

    /// The full script text, one statement after another.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, statement) in self.statements.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            out.push_str(&statement.text);
            out.push('\n');
        }
        out
    }

    /// `opIndex TAB statementIndex` lines, one per provenance link.
    pub fn provenance_map(&self) -> String {
        let mut out = String::new();
        for (index, statement) in self.statements.iter().enumerate() {
            for op in &statement.source_ops {
                out.push_str(&format!("{op}\t{index}\n"));
            }
        }
        out
    }

    /// Writes `<name>.<target suffix>` and `<name>.map` under `dir`.
    pub fn write_files(&self, dir: &Path, name: &str) -> std::io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let script_path = dir.join(format!("{name}.{}", self.target.file_suffix()));
        std::fs::write(&script_path, self.render())?;
        let map_path = dir.join(format!("{name}.map"));
        std::fs::write(&map_path, self.provenance_map())?;
        Ok(vec![script_path, map_path])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodegenError {
    #[error(transparent)]
    Using(#[from] UsingMismatch),
    #[error(transparent)]
    Precondition(#[from] PreconditionViolation),
}
