//! The unified logical schema model.
//!
//! A [`Schema`] is a named, versioned collection of schema types. Each
//! [`SchemaType`] is either an entity type or a relationship type and owns a
//! non-empty list of structural variations plus a set of features common to
//! all variations. Features are attributes, references, or aggregates.
//!
//! All types here are plain values: operations never mutate a schema in
//! place, they build new ones.

mod equality;
mod validate;

pub use equality::schemas_equal_except;
pub use validate::{validate, Violation};

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// A complete logical schema: entity and relationship types in declaration
/// order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Schema {
    pub name: String,
    pub version: u32,
    pub types: Vec<SchemaType>,
}

/// Distinguishes entity types (domain objects) from relationship types
/// (typed edges in graph stores).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TypeKind {
    Entity,
    Relationship,
}

impl fmt::Display for TypeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeKind::Entity => write!(f, "entity"),
            TypeKind::Relationship => write!(f, "relationship"),
        }
    }
}

/// An entity or relationship type with its variations and common features.
///
/// `root` is only meaningful for entity types; relationship types are never
/// root. A type declared without explicit variations is represented with a
/// single variation whose added-feature set is empty.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SchemaType {
    pub name: String,
    pub kind: TypeKind,
    pub root: bool,
    pub common_features: Vec<Feature>,
    pub variations: Vec<StructuralVariation>,
}

/// One structural variation of a schema type: the features it adds on top of
/// the common ones. `count` is population metadata when known.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StructuralVariation {
    pub var_id: u32,
    pub features: Vec<Feature>,
    pub count: Option<u64>,
}

/// A named feature of a schema type.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Feature {
    pub name: String,
    pub optional: bool,
    pub kind: FeatureKind,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FeatureKind {
    Attribute(Attribute),
    Reference(Reference),
    Aggregate(Aggregate),
}

/// A value-holding feature. Only attributes may carry the key flag.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Attribute {
    pub data_type: DataType,
    pub key: bool,
    pub constraint: Option<Constraint>,
}

/// A feature holding identifiers of instances of another entity type.
///
/// `value_type` is the scalar type of the stored identifiers in
/// aggregate-based stores; `attributes` carries edge properties in graph
/// stores. At most one of the two is non-empty.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Reference {
    pub target: String,
    pub cardinality: Cardinality,
    pub value_type: Option<DataType>,
    pub attributes: Vec<RefAttribute>,
}

/// An edge property of a reference in a graph store.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RefAttribute {
    pub name: String,
    pub data_type: DataType,
}

/// A feature embedding instances of a non-root entity type.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Aggregate {
    pub target: String,
    pub cardinality: Cardinality,
}

/// Scalar and structured data types of attributes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DataType {
    String,
    Integer,
    Double,
    Boolean,
    Timestamp,
    Identifier,
    Set(Box<DataType>),
    List(Box<DataType>),
    Map(Box<DataType>, Box<DataType>),
    Tuple(Vec<DataType>),
}

impl DataType {
    pub fn is_scalar(&self) -> bool {
        matches!(
            self,
            DataType::String
                | DataType::Integer
                | DataType::Double
                | DataType::Boolean
                | DataType::Timestamp
                | DataType::Identifier
        )
    }
}

impl fmt::Display for DataType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataType::String => write!(f, "String"),
            DataType::Integer => write!(f, "Integer"),
            DataType::Double => write!(f, "Double"),
            DataType::Boolean => write!(f, "Boolean"),
            DataType::Timestamp => write!(f, "Timestamp"),
            DataType::Identifier => write!(f, "Identifier"),
            DataType::Set(t) => write!(f, "Set<{t}>"),
            DataType::List(t) => write!(f, "List<{t}>"),
            DataType::Map(k, v) => write!(f, "Map<{k},{v}>"),
            DataType::Tuple(ts) => {
                write!(f, "Tuple<")?;
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, ">")
            }
        }
    }
}

/// Lower/upper bound pair of references and aggregates. The four legal pairs
/// are (0,1), (1,1), (0,unbounded), (1,unbounded).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Cardinality {
    ZeroOrOne,
    One,
    ZeroOrMany,
    OneOrMany,
}

impl Cardinality {
    pub fn lower(self) -> u8 {
        match self {
            Cardinality::ZeroOrOne | Cardinality::ZeroOrMany => 0,
            Cardinality::One | Cardinality::OneOrMany => 1,
        }
    }

    /// Upper bound: `None` means unbounded.
    pub fn upper(self) -> Option<u8> {
        match self {
            Cardinality::ZeroOrOne | Cardinality::One => Some(1),
            Cardinality::ZeroOrMany | Cardinality::OneOrMany => None,
        }
    }

    pub fn is_many(self) -> bool {
        self.upper().is_none()
    }

    /// The symbol used by both language frontends: `?`, `&`, `*`, `+`.
    pub fn symbol(self) -> char {
        match self {
            Cardinality::ZeroOrOne => '?',
            Cardinality::One => '&',
            Cardinality::ZeroOrMany => '*',
            Cardinality::OneOrMany => '+',
        }
    }

    pub fn from_symbol(c: char) -> Option<Cardinality> {
        match c {
            '?' => Some(Cardinality::ZeroOrOne),
            '&' => Some(Cardinality::One),
            '*' => Some(Cardinality::ZeroOrMany),
            '+' => Some(Cardinality::OneOrMany),
            _ => None,
        }
    }
}

/// A value constraint on an attribute.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Constraint {
    Regex(String),
    Range(i64, i64),
}

/// Raised by lookups naming a schema type that does not exist.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown schema type `{0}`")]
pub struct UnknownType(pub String);

impl Feature {
    pub fn attribute(name: &str, data_type: DataType) -> Feature {
        Feature {
            name: name.to_string(),
            optional: false,
            kind: FeatureKind::Attribute(Attribute {
                data_type,
                key: false,
                constraint: None,
            }),
        }
    }

    pub fn key_attribute(name: &str, data_type: DataType) -> Feature {
        let mut f = Feature::attribute(name, data_type);
        if let FeatureKind::Attribute(at) = &mut f.kind {
            at.key = true;
        }
        f
    }

    pub fn reference(name: &str, target: &str, cardinality: Cardinality) -> Feature {
        Feature {
            name: name.to_string(),
            optional: false,
            kind: FeatureKind::Reference(Reference {
                target: target.to_string(),
                cardinality,
                value_type: None,
                attributes: Vec::new(),
            }),
        }
    }

    pub fn aggregate(name: &str, target: &str, cardinality: Cardinality) -> Feature {
        Feature {
            name: name.to_string(),
            optional: false,
            kind: FeatureKind::Aggregate(Aggregate {
                target: target.to_string(),
                cardinality,
            }),
        }
    }

    pub fn as_attribute(&self) -> Option<&Attribute> {
        match &self.kind {
            FeatureKind::Attribute(at) => Some(at),
            _ => None,
        }
    }

    pub fn as_reference(&self) -> Option<&Reference> {
        match &self.kind {
            FeatureKind::Reference(rf) => Some(rf),
            _ => None,
        }
    }

    pub fn as_aggregate(&self) -> Option<&Aggregate> {
        match &self.kind {
            FeatureKind::Aggregate(ag) => Some(ag),
            _ => None,
        }
    }

    pub fn is_key(&self) -> bool {
        self.as_attribute().is_some_and(|at| at.key)
    }

    /// The target type name for references and aggregates.
    pub fn target(&self) -> Option<&str> {
        match &self.kind {
            FeatureKind::Reference(rf) => Some(&rf.target),
            FeatureKind::Aggregate(ag) => Some(&ag.target),
            FeatureKind::Attribute(_) => None,
        }
    }
}

impl StructuralVariation {
    pub fn empty(var_id: u32) -> StructuralVariation {
        StructuralVariation {
            var_id,
            features: Vec::new(),
            count: None,
        }
    }

    pub fn feature(&self, name: &str) -> Option<&Feature> {
        self.features.iter().find(|f| f.name == name)
    }
}

impl SchemaType {
    pub fn new(name: &str, kind: TypeKind, root: bool) -> SchemaType {
        SchemaType {
            name: name.to_string(),
            kind,
            root,
            common_features: Vec::new(),
            variations: vec![StructuralVariation::empty(1)],
        }
    }

    pub fn variation(&self, var_id: u32) -> Option<&StructuralVariation> {
        self.variations.iter().find(|v| v.var_id == var_id)
    }

    pub fn variation_mut(&mut self, var_id: u32) -> Option<&mut StructuralVariation> {
        self.variations.iter_mut().find(|v| v.var_id == var_id)
    }

    pub fn common_feature(&self, name: &str) -> Option<&Feature> {
        self.common_features.iter().find(|f| f.name == name)
    }

    /// All features of the type (the union of common features and every
    /// variation's additions) in declaration order, without duplicates by
    /// name.
    pub fn all_features(&self) -> Vec<&Feature> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for f in self
            .common_features
            .iter()
            .chain(self.variations.iter().flat_map(|v| v.features.iter()))
        {
            if seen.insert(f.name.as_str()) {
                out.push(f);
            }
        }
        out
    }

    /// Looks up a feature anywhere in the type (common first, then
    /// variations in order).
    pub fn feature(&self, name: &str) -> Option<&Feature> {
        self.all_features().into_iter().find(|f| f.name == name)
    }

    pub fn has_feature(&self, name: &str) -> bool {
        self.feature(name).is_some()
    }

    /// The names of all features of the variation identified by `var_id`:
    /// common features plus the variation's additions.
    pub fn variation_member_names(&self, var_id: u32) -> Option<BTreeSet<String>> {
        let v = self.variation(var_id)?;
        let mut names: BTreeSet<String> =
            self.common_features.iter().map(|f| f.name.clone()).collect();
        names.extend(v.features.iter().map(|f| f.name.clone()));
        Some(names)
    }
}

impl Schema {
    pub fn new(name: &str, version: u32) -> Schema {
        Schema {
            name: name.to_string(),
            version,
            types: Vec::new(),
        }
    }

    pub fn schema_type(&self, name: &str) -> Option<&SchemaType> {
        self.types.iter().find(|t| t.name == name)
    }

    pub fn schema_type_mut(&mut self, name: &str) -> Option<&mut SchemaType> {
        self.types.iter_mut().find(|t| t.name == name)
    }

    pub fn entity_types(&self) -> impl Iterator<Item = &SchemaType> {
        self.types.iter().filter(|t| t.kind == TypeKind::Entity)
    }

    pub fn relationship_types(&self) -> impl Iterator<Item = &SchemaType> {
        self.types
            .iter()
            .filter(|t| t.kind == TypeKind::Relationship)
    }

    pub fn has_type(&self, name: &str) -> bool {
        self.schema_type(name).is_some()
    }

    pub fn type_names(&self) -> BTreeSet<String> {
        self.types.iter().map(|t| t.name.clone()).collect()
    }

    /// The set of features of the named type: common features united with
    /// every variation's additions. Set semantics: one entry per name.
    pub fn features_of(&self, type_name: &str) -> Result<Vec<&Feature>, UnknownType> {
        let t = self
            .schema_type(type_name)
            .ok_or_else(|| UnknownType(type_name.to_string()))?;
        Ok(t.all_features())
    }

    /// Names of types whose references or aggregates target `name`.
    pub fn referrers_of(&self, name: &str) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for t in &self.types {
            let refers = t
                .all_features()
                .iter()
                .any(|f| f.target() == Some(name));
            if refers {
                out.insert(t.name.clone());
            }
        }
        out
    }
}
