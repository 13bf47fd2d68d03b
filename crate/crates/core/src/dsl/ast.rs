//! Abstract syntax for laws, with a canonical printer.
//!
//! The printer and parser are inverse enough for round-tripping: printing a
//! parsed law and parsing it again yields a structurally identical tree.
//! Sequencing sugar (`>>=`, `>>`) is desugared to `bind` at parse time, so
//! printed laws mention `bind` explicitly.

use std::fmt;

/// Type variables usable in binder annotations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TyVar {
    X,
    X1,
    X2,
    E,
    E1,
    E2,
    R,
    W,
    S,
}

impl TyVar {
    pub fn as_str(self) -> &'static str {
        match self {
            TyVar::X => "X",
            TyVar::X1 => "X'",
            TyVar::X2 => "X''",
            TyVar::E => "E",
            TyVar::E1 => "E'",
            TyVar::E2 => "E''",
            TyVar::R => "R",
            TyVar::W => "W",
            TyVar::S => "S",
        }
    }

    pub fn parse(text: &str) -> Option<TyVar> {
        Some(match text {
            "X" => TyVar::X,
            "X'" => TyVar::X1,
            "X''" => TyVar::X2,
            "E" => TyVar::E,
            "E'" => TyVar::E1,
            "E''" => TyVar::E2,
            "R" => TyVar::R,
            "W" => TyVar::W,
            "S" => TyVar::S,
            _ => return None,
        })
    }

    pub fn all() -> &'static [TyVar] {
        &[
            TyVar::X,
            TyVar::X1,
            TyVar::X2,
            TyVar::E,
            TyVar::E1,
            TyVar::E2,
            TyVar::R,
            TyVar::W,
            TyVar::S,
        ]
    }
}

impl fmt::Display for TyVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Surface types in binder and lambda annotations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeExpr {
    Unit,
    Var(TyVar),
    /// Monoid endomorphisms of the writer log; a binder of this type ranges
    /// over homomorphic self-maps only.
    EndoW,
    Sum(Box<TypeExpr>, Box<TypeExpr>),
    Prod(Box<TypeExpr>, Box<TypeExpr>),
    Fun(Box<TypeExpr>, Box<TypeExpr>),
    /// Carrier of the full stack.
    M(Box<TypeExpr>),
    /// Carrier of the stack without its reader base.
    N(Box<TypeExpr>),
    /// Carrier with the exception slot replaced by the first argument.
    F(Box<TypeExpr>, Box<TypeExpr>),
    /// The inner writer story: `J t` is `Prod(t, W)`.
    J(Box<TypeExpr>),
}

impl TypeExpr {
    pub fn fun(d: TypeExpr, c: TypeExpr) -> TypeExpr {
        TypeExpr::Fun(Box::new(d), Box::new(c))
    }

    fn is_prefix_app(&self) -> bool {
        matches!(
            self,
            TypeExpr::M(_) | TypeExpr::N(_) | TypeExpr::J(_) | TypeExpr::F(_, _)
        )
    }
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeExpr::Unit => write!(f, "Unit"),
            TypeExpr::Var(v) => write!(f, "{v}"),
            TypeExpr::EndoW => write!(f, "EndoW"),
            TypeExpr::Sum(a, b) => write!(f, "Sum({a}, {b})"),
            TypeExpr::Prod(a, b) => write!(f, "Prod({a}, {b})"),
            TypeExpr::Fun(a, b) => write!(f, "Fn({a}, {b})"),
            TypeExpr::M(t) => write_prefix(f, "M", &[t]),
            TypeExpr::N(t) => write_prefix(f, "N", &[t]),
            TypeExpr::J(t) => write_prefix(f, "J", &[t]),
            TypeExpr::F(a, b) => write_prefix(f, "F", &[a, b]),
        }
    }
}

fn write_prefix(f: &mut fmt::Formatter<'_>, name: &str, args: &[&TypeExpr]) -> fmt::Result {
    write!(f, "{name}")?;
    for arg in args {
        if arg.is_prefix_app() {
            write!(f, " ({arg})")?;
        } else {
            write!(f, " {arg}")?;
        }
    }
    Ok(())
}

/// Expressions. Identifiers are held unresolved; the typechecker decides
/// which are binders and which are operation names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Var(String),
    Lam(String, Option<TypeExpr>, Box<Expr>),
    App(Box<Expr>, Box<Expr>),
    Compose(Box<Expr>, Box<Expr>),
    Pair(Box<Expr>, Box<Expr>),
    Star,
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn app(f: Expr, a: Expr) -> Expr {
        Expr::App(Box::new(f), Box::new(a))
    }

    pub fn lam(name: impl Into<String>, ann: Option<TypeExpr>, body: Expr) -> Expr {
        Expr::Lam(name.into(), ann, Box::new(body))
    }

    pub fn compose(f: Expr, g: Expr) -> Expr {
        Expr::Compose(Box::new(f), Box::new(g))
    }

    pub fn pair(a: Expr, b: Expr) -> Expr {
        Expr::Pair(Box::new(a), Box::new(b))
    }
}

// Precedence levels for printing: 0 admits anything, 1 is a composition
// operand, 2 an application head, 3 an application argument.
fn fmt_expr(e: &Expr, prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e {
        Expr::Var(name) => write!(f, "{name}"),
        Expr::Star => write!(f, "star"),
        Expr::Pair(a, b) => {
            write!(f, "(")?;
            fmt_expr(a, 0, f)?;
            write!(f, ", ")?;
            fmt_expr(b, 0, f)?;
            write!(f, ")")
        }
        Expr::Lam(name, ann, body) => {
            let parens = prec > 0;
            if parens {
                write!(f, "(")?;
            }
            write!(f, "\\{name}")?;
            if let Some(t) = ann {
                write!(f, ":{t}")?;
            }
            write!(f, ". ")?;
            fmt_expr(body, 0, f)?;
            if parens {
                write!(f, ")")?;
            }
            Ok(())
        }
        Expr::Compose(lhs, rhs) => {
            let parens = prec > 1;
            if parens {
                write!(f, "(")?;
            }
            fmt_expr(lhs, 2, f)?;
            write!(f, " ∘ ")?;
            fmt_expr(rhs, 1, f)?;
            if parens {
                write!(f, ")")?;
            }
            Ok(())
        }
        Expr::App(head, arg) => {
            let parens = prec > 2;
            if parens {
                write!(f, "(")?;
            }
            fmt_expr(head, 2, f)?;
            write!(f, " ")?;
            fmt_expr(arg, 3, f)?;
            if parens {
                write!(f, ")")?;
            }
            Ok(())
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_expr(self, 0, f)
    }
}

/// A named law: universally quantified binders and two sides.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LawExpr {
    pub name: String,
    pub binders: Vec<(String, TypeExpr)>,
    pub lhs: Expr,
    pub rhs: Expr,
}

impl fmt::Display for LawExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "law {}: forall ", self.name)?;
        for (i, (name, ty)) in self.binders.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{name}:{ty}")?;
        }
        if !self.binders.is_empty() {
            write!(f, " ")?;
        }
        write!(f, ". {} == {}", self.lhs, self.rhs)
    }
}
