//! Finite-model checking for equational laws of effectful programs.
//!
//! Everything here lives in the category of finite sets: types are finite,
//! functions are lookup tables, and equality of two sides of a law is decided
//! by evaluating both over every (or a sampled subset of every) instance.
//! The crates build up in layers:
//!
//! * [`finite`] - finite types, values, canonical enumeration and indexing
//! * [`monoid`] - finite monoid presentations used as writer logs
//! * [`stack`] - transformer stack descriptions and carrier computation
//! * [`semantics`] - the operations of a stack (unit/bind plus the effect
//!   operations of exception, reader, writer and state layers)
//! * [`dsl`] - the little language laws are written in
//! * [`registry`] - the shipped law collection, grouped into suites
//! * [`engine`] - exhaustive/sampled checking, shrinking, reports
//! * [`report`] - report documents, serialization, re-verification

pub mod dsl;
pub mod engine;
pub mod finite;
pub mod monoid;
pub mod registry;
pub mod report;
pub mod semantics;
pub mod stack;

mod error;

pub use engine::{check_law, run_suite, Budget, CheckOutcome, CheckedLaw, Plan};
pub use error::Error;
pub use finite::{FinType, Value};
pub use monoid::MonoidSpec;
pub use report::{CheckReport, CheckStatus, RunDocument};
pub use semantics::{Model, Mutation};
pub use stack::{EffectKind, Layer, StackSpec};

pub type Result<T> = std::result::Result<T, Error>;
