//! Finite monoid presentations used as writer logs.
//!
//! A monoid is given concretely: an enumeration carrier, a unit element, and
//! a full multiplication table over element indices. Construction checks the
//! unit and associativity laws exhaustively and rejects anything broken, so
//! the rest of the crate can multiply without re-validating.

use std::fmt;

use crate::finite::{FinType, Value};
use crate::{Error, Result};

/// A validated finite monoid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonoidSpec {
    name: String,
    order: u64,
    unit: u64,
    /// Row-major: `mult[a * order + b]` is the product `a * b`.
    mult: Vec<u64>,
}

impl MonoidSpec {
    /// Build and validate a presentation.
    pub fn new(name: impl Into<String>, order: u64, unit: u64, mult: Vec<u64>) -> Result<Self> {
        let name = name.into();
        let reject = |reason: String| Error::BadMonoid {
            name: name.clone(),
            reason,
        };
        if order == 0 {
            return Err(reject("carrier must have at least one element".into()));
        }
        if unit >= order {
            return Err(reject(format!("unit {unit} outside carrier of {order}")));
        }
        if mult.len() as u64 != order * order {
            return Err(reject(format!(
                "multiplication table has {} entries, need {}",
                mult.len(),
                order * order
            )));
        }
        if let Some(bad) = mult.iter().find(|&&x| x >= order) {
            return Err(reject(format!("table entry {bad} outside carrier")));
        }
        let at = |a: u64, b: u64| mult[(a * order + b) as usize];
        for a in 0..order {
            if at(unit, a) != a || at(a, unit) != a {
                return Err(reject(format!("unit laws fail at element {a}")));
            }
        }
        for a in 0..order {
            for b in 0..order {
                for c in 0..order {
                    if at(at(a, b), c) != at(a, at(b, c)) {
                        return Err(reject(format!(
                            "associativity fails at ({a}, {b}, {c})"
                        )));
                    }
                }
            }
        }
        Ok(MonoidSpec {
            name,
            order,
            unit,
            mult,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of elements.
    pub fn order(&self) -> u64 {
        self.order
    }

    /// The carrier as a finite type.
    pub fn carrier(&self) -> FinType {
        FinType::Enum(self.order)
    }

    /// The unit, as a value of the carrier.
    pub fn unit_value(&self) -> Value {
        Value::Elem(self.unit)
    }

    pub fn unit_index(&self) -> u64 {
        self.unit
    }

    /// Multiply two carrier values.
    pub fn mult(&self, a: &Value, b: &Value) -> Result<Value> {
        let a = a.as_elem("monoid multiplication")?;
        let b = b.as_elem("monoid multiplication")?;
        if a >= self.order || b >= self.order {
            return Err(Error::internal(format!(
                "element outside {} carrier in multiplication",
                self.name
            )));
        }
        Ok(Value::Elem(self.mult[(a * self.order + b) as usize]))
    }

    /// All monoid endomorphisms of the carrier, as lookup tables in canonical
    /// order. A table `h` qualifies when `h(unit) = unit` and
    /// `h(a * b) = h(a) * h(b)` for all `a`, `b`.
    pub fn endomorphisms(&self) -> Result<Vec<Value>> {
        let carrier = self.carrier();
        let mut out = Vec::new();
        'tables: for h in crate::finite::enumerate_functions(&carrier, &carrier)? {
            let entries = h.as_table("endomorphism candidate")?;
            if entries[self.unit as usize] != Value::Elem(self.unit) {
                continue;
            }
            for a in 0..self.order {
                for b in 0..self.order {
                    let ab = self.mult[(a * self.order + b) as usize];
                    let lhs = &entries[ab as usize];
                    let rhs = self.mult(&entries[a as usize], &entries[b as usize])?;
                    if *lhs != rhs {
                        continue 'tables;
                    }
                }
            }
            out.push(h);
        }
        Ok(out)
    }

    /// Whether multiplication is commutative; builtin `T2` is not.
    pub fn is_commutative(&self) -> bool {
        (0..self.order).all(|a| {
            (0..self.order).all(|b| {
                self.mult[(a * self.order + b) as usize] == self.mult[(b * self.order + a) as usize]
            })
        })
    }

    /// The one-element monoid.
    pub fn trivial() -> MonoidSpec {
        MonoidSpec::new("Trivial", 1, 0, vec![0]).expect("builtin monoid")
    }

    /// Addition modulo 2.
    pub fn z2() -> MonoidSpec {
        MonoidSpec::new("Z2", 2, 0, vec![0, 1, 1, 0]).expect("builtin monoid")
    }

    /// Addition modulo 3.
    pub fn z3() -> MonoidSpec {
        let mut mult = Vec::with_capacity(9);
        for a in 0..3u64 {
            for b in 0..3u64 {
                mult.push((a + b) % 3);
            }
        }
        MonoidSpec::new("Z3", 3, 0, mult).expect("builtin monoid")
    }

    /// All self-maps of a two-point set under composition, the smallest
    /// non-commutative monoid. Element `i` is the table `[f(0), f(1)]` with
    /// `i = 2 * f(0) + f(1)`, and `a * b` is "apply `b`, then `a`".
    pub fn t2() -> MonoidSpec {
        let entry = |f: u64, x: u64| if x == 0 { f / 2 } else { f % 2 };
        let mut mult = Vec::with_capacity(16);
        for a in 0..4u64 {
            for b in 0..4u64 {
                let compose = |x: u64| entry(a, entry(b, x));
                mult.push(2 * compose(0) + compose(1));
            }
        }
        MonoidSpec::new("T2", 4, 1, mult).expect("builtin monoid")
    }

    /// Look up a builtin monoid by name.
    pub fn builtin(name: &str) -> Option<MonoidSpec> {
        match name {
            "Trivial" => Some(MonoidSpec::trivial()),
            "Z2" => Some(MonoidSpec::z2()),
            "Z3" => Some(MonoidSpec::z3()),
            "T2" => Some(MonoidSpec::t2()),
            _ => None,
        }
    }

    /// Names of all builtin monoids, in listing order.
    pub fn builtin_names() -> &'static [&'static str] {
        &["Trivial", "Z2", "Z3", "T2"]
    }
}

impl fmt::Display for MonoidSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_validate() {
        for name in MonoidSpec::builtin_names() {
            let m = MonoidSpec::builtin(name).unwrap();
            assert_eq!(m.name(), *name);
        }
    }

    #[test]
    fn broken_presentations_are_rejected() {
        // Left-zero "multiplication" a * b = a has no unit.
        let err = MonoidSpec::new("LeftZero", 2, 0, vec![0, 0, 1, 1]).unwrap_err();
        assert!(matches!(err, Error::BadMonoid { .. }));
        let err = MonoidSpec::new("Short", 2, 0, vec![0, 1, 1]).unwrap_err();
        assert!(matches!(err, Error::BadMonoid { .. }));
        let err = MonoidSpec::new("OutOfRange", 2, 0, vec![0, 1, 1, 5]).unwrap_err();
        assert!(matches!(err, Error::BadMonoid { .. }));
        let err = MonoidSpec::new("BadUnit", 2, 7, vec![0, 1, 1, 0]).unwrap_err();
        assert!(matches!(err, Error::BadMonoid { .. }));
    }

    #[test]
    fn rock_paper_scissors_is_not_associative() {
        // "winner of a and b" with an adjoined identity 0 is not associative:
        // (1*2)*3 vs 1*(2*3) style failures show up once the table is full.
        let table = vec![
            0, 1, 2, 3, //
            1, 1, 2, 1, //
            2, 2, 2, 3, //
            3, 1, 3, 3,
        ];
        let err = MonoidSpec::new("RPS", 4, 0, table).unwrap_err();
        let Error::BadMonoid { reason, .. } = err else {
            panic!("expected BadMonoid");
        };
        assert!(reason.contains("associativity"));
    }

    #[test]
    fn t2_composes_right_to_left() {
        let t2 = MonoidSpec::t2();
        // Elements: 0 = const 0, 1 = identity, 2 = swap, 3 = const 1.
        assert_eq!(t2.unit_value(), Value::Elem(1));
        let const0 = Value::Elem(0);
        let swap = Value::Elem(2);
        assert_eq!(t2.mult(&const0, &swap).unwrap(), Value::Elem(0));
        assert_eq!(t2.mult(&swap, &const0).unwrap(), Value::Elem(3));
        assert!(!t2.is_commutative());
    }

    #[test]
    fn z_monoids_are_commutative() {
        assert!(MonoidSpec::trivial().is_commutative());
        assert!(MonoidSpec::z2().is_commutative());
        assert!(MonoidSpec::z3().is_commutative());
    }

    #[test]
    fn z2_endomorphisms_are_constant_zero_and_identity() {
        let endos = MonoidSpec::z2().endomorphisms().unwrap();
        assert_eq!(
            endos,
            vec![
                Value::table(vec![Value::Elem(0), Value::Elem(0)]),
                Value::table(vec![Value::Elem(0), Value::Elem(1)]),
            ]
        );
    }

    #[test]
    fn trivial_has_one_endomorphism() {
        assert_eq!(MonoidSpec::trivial().endomorphisms().unwrap().len(), 1);
    }

    #[test]
    fn t2_endomorphisms_fix_the_identity() {
        for h in MonoidSpec::t2().endomorphisms().unwrap() {
            let entries = h.as_table("test").unwrap();
            assert_eq!(entries[1], Value::Elem(1));
        }
    }
}
