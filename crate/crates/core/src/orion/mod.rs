//! Parser and printer for the Orion change-operation language.
//!
//! An Orion script names itself, binds to a schema version with a `Using`
//! statement, and lists change operations in execution order. Operations
//! cover six categories: schema types (add, delete, rename, extract, split,
//! merge; entity and relationship flavors), structural variations (delvar,
//! adapt, union), features (delete, rename, copy, move, nest, unnest),
//! attributes (add, cast, promote, demote), references (add, cast, mult,
//! morph), and aggregates (add, mult, morph).

mod parser;
mod printer;

pub use parser::{parse, parse_str};
pub use printer::{print, print_op};

use std::fmt;

use thiserror::Error;

use crate::model::{Cardinality, DataType, Feature, RefAttribute};

/// A parsed change script: ordered operations bound to a schema version.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangeScript {
    pub name: String,
    pub schema_name: String,
    pub schema_version: u32,
    pub ops: Vec<ChangeOp>,
}

/// Whether a schema-type-level operation targets entity or relationship
/// types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TypeFlavor {
    Entity,
    Relationship,
}

impl TypeFlavor {
    pub fn keyword(self) -> &'static str {
        match self {
            TypeFlavor::Entity => "ENTITY",
            TypeFlavor::Relationship => "RELATIONSHIP",
        }
    }

    pub fn plural_keyword(self) -> &'static str {
        match self {
            TypeFlavor::Entity => "ENTITIES",
            TypeFlavor::Relationship => "RELATIONSHIPS",
        }
    }
}

/// The schema types an operation applies to: one named type or every type
/// via the `*` wildcard.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeTarget {
    Named(String),
    Wildcard,
}

/// Selects features within one type (or all types), optionally restricted to
/// specific variations. The wildcard never combines with a variation list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSelector {
    pub target: TypeTarget,
    pub variations: Option<Vec<u32>>,
    /// Possibly dotted feature names (`aggregate.field`).
    pub features: Vec<String>,
}

impl FeatureSelector {
    pub fn named(type_name: &str, features: &[&str]) -> FeatureSelector {
        FeatureSelector {
            target: TypeTarget::Named(type_name.to_string()),
            variations: None,
            features: features.iter().map(|f| f.to_string()).collect(),
        }
    }

    pub fn wildcard(features: &[&str]) -> FeatureSelector {
        FeatureSelector {
            target: TypeTarget::Wildcard,
            variations: None,
            features: features.iter().map(|f| f.to_string()).collect(),
        }
    }
}

/// An equi-join condition `source = target`: the left name resolves against
/// the type the copied or referenced value originates from, the right name
/// against the destination type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinCondition {
    pub source_feature: String,
    pub target_feature: String,
}

/// The body of an aggregate addition: an inline field list creating a new
/// non-root entity type, or the name of an existing one.
#[derive(Debug, Clone, PartialEq)]
pub enum AggregateBody {
    Inline {
        fields: Vec<Feature>,
        type_name: String,
    },
    Existing {
        target: String,
    },
}

/// One change operation of the taxonomy.
#[derive(Debug, Clone, PartialEq)]
pub enum ChangeOp {
    AddType {
        flavor: TypeFlavor,
        name: String,
        root: bool,
        features: Vec<Feature>,
    },
    DeleteType {
        flavor: TypeFlavor,
        name: String,
    },
    RenameType {
        flavor: TypeFlavor,
        name: String,
        new_name: String,
    },
    ExtractType {
        flavor: TypeFlavor,
        name: String,
        features: Vec<String>,
        new_name: String,
    },
    SplitType {
        flavor: TypeFlavor,
        name: String,
        first_name: String,
        first_features: Vec<String>,
        second_name: String,
        second_features: Vec<String>,
    },
    MergeTypes {
        flavor: TypeFlavor,
        first: String,
        second: String,
        new_name: String,
    },
    DeleteVariation {
        flavor: TypeFlavor,
        type_name: String,
        var_id: u32,
    },
    AdaptVariation {
        flavor: TypeFlavor,
        type_name: String,
        source: u32,
        target: u32,
    },
    UnionVariations {
        flavor: TypeFlavor,
        type_name: String,
    },
    DeleteFeature {
        selector: FeatureSelector,
    },
    RenameFeature {
        selector: FeatureSelector,
        new_name: String,
    },
    CopyFeature {
        source_type: String,
        source_feature: String,
        dest_type: String,
        dest_feature: String,
        condition: JoinCondition,
    },
    MoveFeature {
        source_type: String,
        source_feature: String,
        dest_type: String,
        dest_feature: String,
        condition: JoinCondition,
    },
    NestFeatures {
        selector: FeatureSelector,
        aggregate: String,
    },
    UnnestFeatures {
        selector: FeatureSelector,
    },
    AddAttribute {
        type_name: String,
        name: String,
        data_type: DataType,
    },
    CastAttribute {
        selector: FeatureSelector,
        to: DataType,
    },
    PromoteAttribute {
        selector: FeatureSelector,
    },
    DemoteAttribute {
        selector: FeatureSelector,
    },
    AddReference {
        type_name: String,
        name: String,
        value_type: Option<DataType>,
        attributes: Vec<RefAttribute>,
        cardinality: Cardinality,
        target: String,
        condition: Option<JoinCondition>,
    },
    CastReference {
        selector: FeatureSelector,
        to: DataType,
    },
    MultReference {
        selector: FeatureSelector,
        cardinality: Cardinality,
    },
    MorphReference {
        selector: FeatureSelector,
        new_name: Option<String>,
    },
    AddAggregate {
        type_name: String,
        name: String,
        body: AggregateBody,
        cardinality: Cardinality,
    },
    MultAggregate {
        selector: FeatureSelector,
        cardinality: Cardinality,
    },
    MorphAggregate {
        selector: FeatureSelector,
        new_name: Option<String>,
    },
}

/// The operation kinds of the taxonomy, one per pre/postcondition row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OpKind {
    TypeAdd,
    TypeDelete,
    TypeRename,
    TypeExtract,
    TypeSplit,
    TypeMerge,
    VariationDelvar,
    VariationAdapt,
    VariationUnion,
    FeatureDelete,
    FeatureRename,
    FeatureCopy,
    FeatureMove,
    FeatureNest,
    FeatureUnnest,
    AttributeAdd,
    AttributeCast,
    AttributePromote,
    AttributeDemote,
    ReferenceAdd,
    ReferenceCast,
    ReferenceMult,
    ReferenceMorph,
    AggregateAdd,
    AggregateMult,
    AggregateMorph,
}

impl OpKind {
    pub const ALL: [OpKind; 26] = [
        OpKind::TypeAdd,
        OpKind::TypeDelete,
        OpKind::TypeRename,
        OpKind::TypeExtract,
        OpKind::TypeSplit,
        OpKind::TypeMerge,
        OpKind::VariationDelvar,
        OpKind::VariationAdapt,
        OpKind::VariationUnion,
        OpKind::FeatureDelete,
        OpKind::FeatureRename,
        OpKind::FeatureCopy,
        OpKind::FeatureMove,
        OpKind::FeatureNest,
        OpKind::FeatureUnnest,
        OpKind::AttributeAdd,
        OpKind::AttributeCast,
        OpKind::AttributePromote,
        OpKind::AttributeDemote,
        OpKind::ReferenceAdd,
        OpKind::ReferenceCast,
        OpKind::ReferenceMult,
        OpKind::ReferenceMorph,
        OpKind::AggregateAdd,
        OpKind::AggregateMult,
        OpKind::AggregateMorph,
    ];

    pub fn label(self) -> &'static str {
        match self {
            OpKind::TypeAdd => "type.add",
            OpKind::TypeDelete => "type.delete",
            OpKind::TypeRename => "type.rename",
            OpKind::TypeExtract => "type.extract",
            OpKind::TypeSplit => "type.split",
            OpKind::TypeMerge => "type.merge",
            OpKind::VariationDelvar => "variation.delvar",
            OpKind::VariationAdapt => "variation.adapt",
            OpKind::VariationUnion => "variation.union",
            OpKind::FeatureDelete => "feature.delete",
            OpKind::FeatureRename => "feature.rename",
            OpKind::FeatureCopy => "feature.copy",
            OpKind::FeatureMove => "feature.move",
            OpKind::FeatureNest => "feature.nest",
            OpKind::FeatureUnnest => "feature.unnest",
            OpKind::AttributeAdd => "attribute.add",
            OpKind::AttributeCast => "attribute.cast",
            OpKind::AttributePromote => "attribute.promote",
            OpKind::AttributeDemote => "attribute.demote",
            OpKind::ReferenceAdd => "reference.add",
            OpKind::ReferenceCast => "reference.cast",
            OpKind::ReferenceMult => "reference.mult",
            OpKind::ReferenceMorph => "reference.morph",
            OpKind::AggregateAdd => "aggregate.add",
            OpKind::AggregateMult => "aggregate.mult",
            OpKind::AggregateMorph => "aggregate.morph",
        }
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

impl ChangeOp {
    pub fn kind(&self) -> OpKind {
        match self {
            ChangeOp::AddType { .. } => OpKind::TypeAdd,
            ChangeOp::DeleteType { .. } => OpKind::TypeDelete,
            ChangeOp::RenameType { .. } => OpKind::TypeRename,
            ChangeOp::ExtractType { .. } => OpKind::TypeExtract,
            ChangeOp::SplitType { .. } => OpKind::TypeSplit,
            ChangeOp::MergeTypes { .. } => OpKind::TypeMerge,
            ChangeOp::DeleteVariation { .. } => OpKind::VariationDelvar,
            ChangeOp::AdaptVariation { .. } => OpKind::VariationAdapt,
            ChangeOp::UnionVariations { .. } => OpKind::VariationUnion,
            ChangeOp::DeleteFeature { .. } => OpKind::FeatureDelete,
            ChangeOp::RenameFeature { .. } => OpKind::FeatureRename,
            ChangeOp::CopyFeature { .. } => OpKind::FeatureCopy,
            ChangeOp::MoveFeature { .. } => OpKind::FeatureMove,
            ChangeOp::NestFeatures { .. } => OpKind::FeatureNest,
            ChangeOp::UnnestFeatures { .. } => OpKind::FeatureUnnest,
            ChangeOp::AddAttribute { .. } => OpKind::AttributeAdd,
            ChangeOp::CastAttribute { .. } => OpKind::AttributeCast,
            ChangeOp::PromoteAttribute { .. } => OpKind::AttributePromote,
            ChangeOp::DemoteAttribute { .. } => OpKind::AttributeDemote,
            ChangeOp::AddReference { .. } => OpKind::ReferenceAdd,
            ChangeOp::CastReference { .. } => OpKind::ReferenceCast,
            ChangeOp::MultReference { .. } => OpKind::ReferenceMult,
            ChangeOp::MorphReference { .. } => OpKind::ReferenceMorph,
            ChangeOp::AddAggregate { .. } => OpKind::AggregateAdd,
            ChangeOp::MultAggregate { .. } => OpKind::AggregateMult,
            ChangeOp::MorphAggregate { .. } => OpKind::AggregateMorph,
        }
    }
}

impl fmt::Display for ChangeOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", print_op(self))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrionError {
    #[error("syntax error at {line}:{column}: expected {expected}")]
    Syntax {
        line: u32,
        column: u32,
        expected: String,
    },
    #[error("unknown operation keyword `{word}` at {line}:{column}")]
    UnknownOperationKeyword { word: String, line: u32, column: u32 },
}
