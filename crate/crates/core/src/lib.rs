//! A toolchain for evolving NoSQL logical schemas.
//!
//! The crate is organized around a unified schema model ([`model`]) that
//! represents entity and relationship types together with their structural
//! variations. Two small languages front the model: Athena schema definitions
//! ([`athena`]) and Orion change scripts ([`orion`]). Change scripts are
//! executed against schemas by the evolution engine ([`evolution`]), against
//! in-memory datasets by the reference data engine ([`data`]), and translated
//! into backend-native update scripts by the generators ([`codegen`]). The
//! [`propcheck`] module provides randomized and bounded-exhaustive validation
//! of the operation semantics.

pub mod athena;
pub mod codegen;
pub mod data;
pub mod evolution;
pub mod lex;
pub mod model;
pub mod orion;
pub mod propcheck;
pub(crate) mod grammar;
