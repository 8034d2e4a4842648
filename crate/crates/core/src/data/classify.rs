//! Variation membership by exact field presence: a record belongs to the
//! variation whose common-plus-added feature names equal the record's field
//! names. Optional features stored as Null still count as present; absence
//! means the key is missing entirely.

use std::collections::BTreeSet;

use crate::model::SchemaType;

use super::Record;

/// The variation `record` belongs to, or `None` when no variation's feature
/// name set matches exactly. Reserved endpoint fields are ignored.
pub fn classify_variation(record: &Record, schema_type: &SchemaType) -> Option<u32> {
    let field_names: BTreeSet<&str> = record.data_field_names().collect();
    let common: BTreeSet<&str> = schema_type
        .common_features
        .iter()
        .map(|f| f.name.as_str())
        .collect();
    for v in &schema_type.variations {
        let mut member: BTreeSet<&str> = common.clone();
        member.extend(v.features.iter().map(|f| f.name.as_str()));
        if member == field_names {
            return Some(v.var_id);
        }
    }
    None
}
