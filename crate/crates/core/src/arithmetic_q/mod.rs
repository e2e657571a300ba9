//! Arithmetic over k = Q: real subfields of cyclotomic fields, (S,T)-unit
//! lattices, logarithmic embeddings, reciprocity and Rubin–Stark elements.

pub mod finite_field;
pub mod field;
pub mod units;
pub mod reciprocity;
pub mod rubin_stark;

pub use field::{build_instance, ArithmeticError, FieldInstance, InstanceConfig, Level, LevelPlace, Place};
