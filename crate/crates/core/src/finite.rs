//! Finite types, their values, and canonical enumeration.
//!
//! Every type here denotes a finite set, and every such set carries one
//! canonical total order, fixed once and used everywhere: exhaustive checking
//! walks it, sampling indexes into it, shrinking moves strictly earlier in
//! it, and reported counterexamples are minimal with respect to it.
//!
//! The orders are:
//!
//! * `Unit` has the single value `Star`.
//! * `Enum(n)` is `Elem(0) .. Elem(n-1)` ascending.
//! * `Sum(l, r)` lists every `InL` value (in `l` order) before every `InR`.
//! * `Prod(a, b)` is lexicographic with the first component most significant.
//! * `Fn(d, c)` lists lookup tables lexicographically by their entries in
//!   canonical domain order, the entry at the first domain value being most
//!   significant. So `Fn(Enum(2), Enum(2))` enumerates `[0,0]`, `[0,1]`,
//!   `[1,0]`, `[1,1]`.
//!
//! Cardinality arithmetic is checked 64-bit; types whose size leaves that
//! range are rejected with [`Error::DomainTooLarge`] instead of wrapping.

use std::fmt;
use std::sync::Arc;

use crate::{Error, Result};

/// A finite type.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FinType {
    /// The one-point type.
    Unit,
    /// An enumeration of `n` elements, `n >= 1`.
    Enum(u64),
    /// Tagged disjoint union.
    Sum(Arc<FinType>, Arc<FinType>),
    /// Binary product.
    Prod(Arc<FinType>, Arc<FinType>),
    /// The full function space from domain to codomain, as lookup tables.
    Fn(Arc<FinType>, Arc<FinType>),
}

impl FinType {
    pub fn sum(l: FinType, r: FinType) -> FinType {
        FinType::Sum(Arc::new(l), Arc::new(r))
    }

    pub fn prod(a: FinType, b: FinType) -> FinType {
        FinType::Prod(Arc::new(a), Arc::new(b))
    }

    pub fn func(dom: FinType, cod: FinType) -> FinType {
        FinType::Fn(Arc::new(dom), Arc::new(cod))
    }

    /// Number of values, or an error if it overflows 64 bits.
    pub fn cardinality(&self) -> Result<u64> {
        let too_large = || Error::DomainTooLarge {
            ty: self.to_string(),
        };
        match self {
            FinType::Unit => Ok(1),
            FinType::Enum(0) => Err(Error::InvalidType {
                ty: self.to_string(),
                reason: "enumerations must have at least one element".into(),
            }),
            FinType::Enum(n) => Ok(*n),
            FinType::Sum(l, r) => l
                .cardinality()?
                .checked_add(r.cardinality()?)
                .ok_or_else(too_large),
            FinType::Prod(a, b) => a
                .cardinality()?
                .checked_mul(b.cardinality()?)
                .ok_or_else(too_large),
            FinType::Fn(d, c) => {
                let dc = d.cardinality()?;
                let cc = c.cardinality()?;
                if cc == 1 {
                    Ok(1)
                } else if dc > 64 {
                    // cc >= 2, so the power certainly overflows.
                    Err(too_large())
                } else {
                    cc.checked_pow(dc as u32).ok_or_else(too_large)
                }
            }
        }
    }

    /// The value at position `idx` in canonical order.
    pub fn value_at(&self, idx: u64) -> Result<Value> {
        let card = self.cardinality()?;
        if idx >= card {
            return Err(Error::internal(format!(
                "index {idx} out of range for {self} (cardinality {card})"
            )));
        }
        match self {
            FinType::Unit => Ok(Value::Star),
            FinType::Enum(_) => Ok(Value::Elem(idx)),
            FinType::Sum(l, r) => {
                let lc = l.cardinality()?;
                if idx < lc {
                    Ok(Value::inl(l.value_at(idx)?))
                } else {
                    Ok(Value::inr(r.value_at(idx - lc)?))
                }
            }
            FinType::Prod(a, b) => {
                let bc = b.cardinality()?;
                Ok(Value::pair(a.value_at(idx / bc)?, b.value_at(idx % bc)?))
            }
            FinType::Fn(d, c) => {
                let dc = d.cardinality()? as usize;
                let cc = c.cardinality()?;
                let mut entries = vec![Value::Star; dc];
                let mut rem = idx;
                for slot in entries.iter_mut().rev() {
                    *slot = c.value_at(rem % cc)?;
                    rem /= cc;
                }
                Ok(Value::table(entries))
            }
        }
    }

    /// The canonical position of `v`, inverse to [`FinType::value_at`].
    pub fn index_of(&self, v: &Value) -> Result<u64> {
        let fail = || Error::NotInhabitant {
            value: v.to_string(),
            ty: self.to_string(),
        };
        match (self, v) {
            (FinType::Unit, Value::Star) => Ok(0),
            (FinType::Enum(n), Value::Elem(i)) if i < n => Ok(*i),
            (FinType::Sum(l, _), Value::InL(x)) => l.index_of(x),
            (FinType::Sum(l, r), Value::InR(y)) => Ok(l.cardinality()? + r.index_of(y)?),
            (FinType::Prod(a, b), Value::Pair(x, y)) => {
                Ok(a.index_of(x)? * b.cardinality()? + b.index_of(y)?)
            }
            (FinType::Fn(d, c), Value::Table(entries)) => {
                if entries.len() as u64 != d.cardinality()? {
                    return Err(fail());
                }
                let cc = c.cardinality()?;
                let mut acc = 0u64;
                for e in entries.iter() {
                    acc = acc * cc + c.index_of(e)?;
                }
                Ok(acc)
            }
            _ => Err(fail()),
        }
    }

    /// All values in canonical order. Intended for small types; the engine
    /// only materializes domains it is about to walk in full.
    pub fn values(&self) -> Result<Vec<Value>> {
        let card = self.cardinality()?;
        (0..card).map(|i| self.value_at(i)).collect()
    }

    /// Parse the notation produced by `Display`: `Unit`, `Enum(n)` (or a bare
    /// integer), `Sum(a, b)`, `Prod(a, b)`, `Fn(a, b)`.
    pub fn parse(text: &str) -> Result<FinType> {
        let mut p = TyCursor {
            src: text,
            pos: 0,
        };
        let ty = p.ty()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("trailing input after type"));
        }
        Ok(ty)
    }
}

/// All lookup tables from `dom` to `cod`, in canonical order.
pub fn enumerate_functions(dom: &FinType, cod: &FinType) -> Result<Vec<Value>> {
    FinType::func(dom.clone(), cod.clone()).values()
}

impl fmt::Display for FinType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FinType::Unit => write!(f, "Unit"),
            FinType::Enum(n) => write!(f, "Enum({n})"),
            FinType::Sum(l, r) => write!(f, "Sum({l}, {r})"),
            FinType::Prod(a, b) => write!(f, "Prod({a}, {b})"),
            FinType::Fn(d, c) => write!(f, "Fn({d}, {c})"),
        }
    }
}

struct TyCursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> TyCursor<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: 1,
            col: self.pos + 1,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(|c: char| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, ch: char) -> Result<()> {
        self.skip_ws();
        if self.src[self.pos..].starts_with(ch) {
            self.pos += ch.len_utf8();
            Ok(())
        } else {
            Err(self.err(format!("expected '{ch}'")))
        }
    }

    fn word(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        while self.src[self.pos..].starts_with(|c: char| c.is_ascii_alphanumeric()) {
            self.pos += 1;
        }
        self.src[start..self.pos].to_string()
    }

    fn ty(&mut self) -> Result<FinType> {
        let w = self.word();
        if let Ok(n) = w.parse::<u64>() {
            return Ok(FinType::Enum(n));
        }
        match w.as_str() {
            "Unit" => Ok(FinType::Unit),
            "Enum" => {
                self.eat('(')?;
                let n = self.word();
                let n: u64 = n
                    .parse()
                    .map_err(|_| self.err("expected a cardinality"))?;
                self.eat(')')?;
                Ok(FinType::Enum(n))
            }
            "Sum" | "Prod" | "Fn" => {
                self.eat('(')?;
                let a = self.ty()?;
                self.eat(',')?;
                let b = self.ty()?;
                self.eat(')')?;
                Ok(match w.as_str() {
                    "Sum" => FinType::sum(a, b),
                    "Prod" => FinType::prod(a, b),
                    _ => FinType::func(a, b),
                })
            }
            "" => Err(self.err("expected a type")),
            other => Err(self.err(format!("unknown type constructor {other}"))),
        }
    }
}

/// A value of some [`FinType`].
///
/// Values do not remember their type; the type travels alongside wherever it
/// is needed, which keeps tables small and cloning cheap.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Star,
    Elem(u64),
    InL(Arc<Value>),
    InR(Arc<Value>),
    Pair(Arc<Value>, Arc<Value>),
    /// Entries in canonical order of the domain.
    Table(Arc<[Value]>),
}

impl Value {
    pub fn inl(v: Value) -> Value {
        Value::InL(Arc::new(v))
    }

    pub fn inr(v: Value) -> Value {
        Value::InR(Arc::new(v))
    }

    pub fn pair(a: Value, b: Value) -> Value {
        Value::Pair(Arc::new(a), Arc::new(b))
    }

    pub fn table(entries: Vec<Value>) -> Value {
        Value::Table(entries.into())
    }

    /// Apply a table to an argument from its domain.
    pub fn apply(&self, dom: &FinType, arg: &Value) -> Result<Value> {
        let entries = self.as_table("function application")?;
        let idx = dom.index_of(arg)? as usize;
        entries.get(idx).cloned().ok_or_else(|| {
            Error::internal(format!("table of {} entries applied at index {idx}", entries.len()))
        })
    }

    pub fn as_pair(&self, context: &'static str) -> Result<(&Value, &Value)> {
        match self {
            Value::Pair(a, b) => Ok((a, b)),
            other => Err(malformed(context, "a pair", other)),
        }
    }

    pub fn as_table(&self, context: &'static str) -> Result<&[Value]> {
        match self {
            Value::Table(entries) => Ok(entries),
            other => Err(malformed(context, "a table", other)),
        }
    }

    pub fn as_elem(&self, context: &'static str) -> Result<u64> {
        match self {
            Value::Elem(i) => Ok(*i),
            other => Err(malformed(context, "an enum element", other)),
        }
    }
}

fn malformed(context: &'static str, expected: &'static str, got: &Value) -> Error {
    Error::MalformedValue {
        context,
        expected,
        got: got.to_string(),
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Star => write!(f, "Star"),
            Value::Elem(i) => write!(f, "Elem({i})"),
            Value::InL(v) => write!(f, "InL({v})"),
            Value::InR(v) => write!(f, "InR({v})"),
            Value::Pair(a, b) => write!(f, "Pair({a}, {b})"),
            Value::Table(entries) => {
                write!(f, "Table[")?;
                for (i, e) in entries.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{e}")?;
                }
                write!(f, "]")
            }
        }
    }
}
