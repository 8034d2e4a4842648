//! Feature selector resolution against a schema.
//!
//! A named selector is strict: the type, the listed variations, and every
//! feature must exist (with the required feature kind). The `*` wildcard
//! applies to every type where the precondition holds and silently skips the
//! rest; matching zero types in total violates the precondition.

use crate::model::{Feature, FeatureKind, Schema, SchemaType};
use crate::orion::{print_op, ChangeOp, FeatureSelector, TypeTarget};

use super::PreconditionViolation;

/// Filters selector matches by feature kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKindTag {
    Any,
    Attribute,
    Reference,
    Aggregate,
}

impl FeatureKindTag {
    fn matches(self, f: &Feature) -> bool {
        match self {
            FeatureKindTag::Any => true,
            FeatureKindTag::Attribute => matches!(f.kind, FeatureKind::Attribute(_)),
            FeatureKindTag::Reference => matches!(f.kind, FeatureKind::Reference(_)),
            FeatureKindTag::Aggregate => matches!(f.kind, FeatureKind::Aggregate(_)),
        }
    }

    fn noun(self) -> &'static str {
        match self {
            FeatureKindTag::Any => "feature",
            FeatureKindTag::Attribute => "attribute",
            FeatureKindTag::Reference => "reference",
            FeatureKindTag::Aggregate => "aggregate",
        }
    }
}

/// One (type, feature) pair a selector resolved to, with the variation scope
/// it is restricted to (`None` meaning the whole type).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectorMatch {
    pub type_name: String,
    pub variations: Option<Vec<u32>>,
    pub feature: String,
}

pub fn resolve_selector(
    schema: &Schema,
    op: &ChangeOp,
    selector: &FeatureSelector,
    kind: FeatureKindTag,
) -> Result<Vec<SelectorMatch>, PreconditionViolation> {
    match &selector.target {
        TypeTarget::Named(type_name) => {
            let t = schema.schema_type(type_name).ok_or_else(|| {
                PreconditionViolation::clause(op, format!("t ∈ T ({type_name})"))
            })?;
            if let Some(var_ids) = &selector.variations {
                for &var_id in var_ids {
                    if t.variation(var_id).is_none() {
                        return Err(PreconditionViolation::UnknownVariation {
                            op: print_op(op),
                            type_name: type_name.clone(),
                            var_id,
                        });
                    }
                }
            }
            let mut out = Vec::new();
            for feature_name in &selector.features {
                check_named_feature(op, t, feature_name, &selector.variations, kind)?;
                out.push(SelectorMatch {
                    type_name: type_name.clone(),
                    variations: selector.variations.clone(),
                    feature: feature_name.clone(),
                });
            }
            Ok(out)
        }
        TypeTarget::Wildcard => {
            let mut out = Vec::new();
            for t in &schema.types {
                for feature_name in &selector.features {
                    let present = t
                        .feature(feature_name)
                        .is_some_and(|f| kind.matches(f));
                    if present {
                        out.push(SelectorMatch {
                            type_name: t.name.clone(),
                            variations: None,
                            feature: feature_name.clone(),
                        });
                    }
                }
            }
            if out.is_empty() {
                return Err(PreconditionViolation::clause(
                    op,
                    format!(
                        "wildcard selector matches at least one type ({})",
                        selector.features.join(", ")
                    ),
                ));
            }
            Ok(out)
        }
    }
}

fn check_named_feature(
    op: &ChangeOp,
    t: &SchemaType,
    feature_name: &str,
    variations: &Option<Vec<u32>>,
    kind: FeatureKindTag,
) -> Result<(), PreconditionViolation> {
    match variations {
        None => match t.feature(feature_name) {
            Some(f) if kind.matches(f) => Ok(()),
            Some(_) => Err(PreconditionViolation::clause(
                op,
                format!("{} is a {} of {}", feature_name, kind.noun(), t.name),
            )),
            None => Err(PreconditionViolation::clause(
                op,
                format!("f ∈ F^{} ({feature_name})", t.name),
            )),
        },
        Some(var_ids) => {
            // A variation-scoped selector cannot address common features: a
            // partial change to a feature shared by all variations is not
            // expressible.
            if t.common_feature(feature_name).is_some() {
                return Err(PreconditionViolation::AmbiguousSelector {
                    op: print_op(op),
                    detail: format!(
                        "`{feature_name}` is a common feature of {}; variation-scoped selection is ambiguous",
                        t.name
                    ),
                });
            }
            let in_scope = var_ids.iter().any(|&id| {
                t.variation(id)
                    .and_then(|v| v.feature(feature_name))
                    .is_some_and(|f| kind.matches(f))
            });
            if in_scope {
                Ok(())
            } else {
                Err(PreconditionViolation::clause(
                    op,
                    format!(
                        "f ∈ v.features for some selected variation of {} ({feature_name})",
                        t.name
                    ),
                ))
            }
        }
    }
}
