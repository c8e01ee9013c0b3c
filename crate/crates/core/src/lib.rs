//! Validation of tabular configuration data against rules written in the B
//! mathematical language.
//!
//! The pipeline loads CSV columns as sequences, expands shared definitions
//! into the rules, and enumerates every counterexample of every rule.

pub mod eval;
pub mod ingest;
pub mod lang;
pub mod project;
pub mod report;
pub mod rules;
pub mod value;

pub use eval::{Env, EvalError, EvalErrorKind};
pub use value::Value;
