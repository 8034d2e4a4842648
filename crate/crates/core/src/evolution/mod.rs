//! The schema updater: applies a change script to a schema sequentially,
//! checking every operation's precondition and keeping each intermediate
//! schema well-formed.
//!
//! Operations never mutate their input; each produces a fresh schema value.
//! A script is applied in source order and halts at the first violated
//! precondition; the outcome then carries the state after the last
//! successful operation.

mod apply;
mod footprint;
mod selector;

pub use apply::apply_op;
pub use footprint::touched_types;
pub(crate) use selector::{resolve_selector, FeatureKindTag, SelectorMatch};

use thiserror::Error;

use crate::model::Schema;
use crate::orion::{print_op, ChangeOp, ChangeScript};

/// Result of applying a script: the updated schema, a per-operation log, and
/// the first failure if one occurred.
#[derive(Debug, Clone)]
pub struct ApplyOutcome {
    /// On success the fully updated schema (version bumped by one); on
    /// failure the state after the last successful operation.
    pub schema: Schema,
    pub log: Vec<(usize, String)>,
    pub failed_at: Option<(usize, PreconditionViolation)>,
}

impl ApplyOutcome {
    pub fn is_success(&self) -> bool {
        self.failed_at.is_none()
    }
}

/// The script's `Using` header does not match the schema it is applied to.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("script uses {expected_name}:{expected_version}, schema is {found_name}:{found_version}")]
pub struct UsingMismatch {
    pub expected_name: String,
    pub expected_version: u32,
    pub found_name: String,
    pub found_version: u32,
}

/// A violated operation precondition, naming the clause that failed.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PreconditionViolation {
    #[error("{op}: precondition violated: {clause}")]
    Clause { op: String, clause: String },
    #[error("{op}: unknown variation v{var_id} of `{type_name}`")]
    UnknownVariation {
        op: String,
        type_name: String,
        var_id: u32,
    },
    #[error("{op}: ambiguous selector: {detail}")]
    AmbiguousSelector { op: String, detail: String },
    #[error("{op}: cast target `{target}` is not scalar")]
    NonScalarCastTarget { op: String, target: String },
    #[error("{op}: unknown target type `{target}`")]
    UnknownTargetType { op: String, target: String },
}

impl PreconditionViolation {
    pub(crate) fn clause(op: &ChangeOp, clause: impl Into<String>) -> PreconditionViolation {
        PreconditionViolation::Clause {
            op: print_op(op),
            clause: clause.into(),
        }
    }

    /// The violated clause in the taxonomy's notation, e.g. `n ∉ T.names`.
    pub fn clause_text(&self) -> String {
        match self {
            PreconditionViolation::Clause { clause, .. } => clause.clone(),
            PreconditionViolation::UnknownVariation {
                type_name, var_id, ..
            } => format!("v{var_id} ∈ V^{type_name}"),
            PreconditionViolation::AmbiguousSelector { detail, .. } => detail.clone(),
            PreconditionViolation::NonScalarCastTarget { target, .. } => {
                format!("st is scalar ({target})")
            }
            PreconditionViolation::UnknownTargetType { target, .. } => {
                format!("target `{target}` exists")
            }
        }
    }
}

/// Applies every operation of `script` to `schema` in order.
///
/// The `Using` header must name the schema and its current version. On
/// success the result schema's version is bumped by one; failure of any
/// operation halts application at that operation.
pub fn apply_script(
    schema: &Schema,
    script: &ChangeScript,
) -> Result<ApplyOutcome, UsingMismatch> {
    if script.schema_name != schema.name || script.schema_version != schema.version {
        return Err(UsingMismatch {
            expected_name: script.schema_name.clone(),
            expected_version: script.schema_version,
            found_name: schema.name.clone(),
            found_version: schema.version,
        });
    }

    let mut current = schema.clone();
    let mut log = Vec::new();
    for (index, op) in script.ops.iter().enumerate() {
        match apply_op(&current, op) {
            Ok(next) => {
                log.push((index, print_op(op)));
                current = next;
            }
            Err(violation) => {
                return Ok(ApplyOutcome {
                    schema: current,
                    log,
                    failed_at: Some((index, violation)),
                });
            }
        }
    }
    current.version += 1;
    Ok(ApplyOutcome {
        schema: current,
        log,
        failed_at: None,
    })
}
