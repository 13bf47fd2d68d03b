//! Crate-wide error type.

use thiserror::Error;

/// Anything that can go wrong while building models or checking laws.
///
/// The engine maps internal evaluation failures to `status = "error"` in
/// reports rather than panicking, so most variants here carry enough context
/// to diagnose the offending construction.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Error {
    /// Cardinality arithmetic left the 64-bit range.
    #[error("domain too large: cardinality of {ty} does not fit in 64 bits")]
    DomainTooLarge { ty: String },

    /// A structurally invalid type, e.g. an enumeration of zero elements.
    #[error("invalid type {ty}: {reason}")]
    InvalidType { ty: String, reason: String },

    /// A value did not have the shape an operation required.
    #[error("malformed value in {context}: expected {expected}, got {got}")]
    MalformedValue {
        context: &'static str,
        expected: &'static str,
        got: String,
    },

    /// A value does not inhabit the type it was indexed against.
    #[error("value {value} does not inhabit {ty}")]
    NotInhabitant { value: String, ty: String },

    /// A monoid presentation failed validation.
    #[error("monoid {name} rejected: {reason}")]
    BadMonoid { name: String, reason: String },

    /// A malformed stack description.
    #[error("bad stack: {0}")]
    BadStack(String),

    /// An operation needed an effect layer the stack does not provide.
    #[error("stack {stack} has no {kind} layer to target")]
    NoSuchEffect { stack: String, kind: &'static str },

    /// Lexical or syntactic error in law or type text.
    #[error("parse error at {line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    /// A law mentions an operation its stack cannot interpret.
    ///
    /// Distinct from `LawType` so suite runners can skip such laws with a
    /// notice instead of failing.
    #[error("law {law} needs {prim}, which is unavailable here: {why}")]
    Unavailable {
        law: String,
        prim: String,
        why: String,
    },

    /// A law failed to typecheck against a stack and type assignment.
    #[error("law {law} does not typecheck: {msg}")]
    LawType { law: String, msg: String },

    /// Lookup failed; carries near-miss suggestions.
    #[error("unknown {what} {name}{}", suggest(.suggestions))]
    NotFound {
        what: &'static str,
        name: String,
        suggestions: Vec<String>,
    },

    /// A report document that cannot be re-verified.
    #[error("invalid report: {0}")]
    BadReport(String),

    /// An internal invariant was violated; always a bug.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

fn suggest(suggestions: &[String]) -> String {
    if suggestions.is_empty() {
        String::new()
    } else {
        format!(" (did you mean {}?)", suggestions.join(", "))
    }
}

impl Error {
    pub(crate) fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }
}
