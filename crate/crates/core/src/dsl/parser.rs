//! Recursive-descent parser for law files.
//!
//! A file is a sequence of `law` declarations and `suite` blocks:
//!
//! ```text
//! # comment
//! law Put-Put: forall s:S, s2:S . put(s) >> put(s2) == put(s2)
//! suite state-core { Put-Put }
//! ```
//!
//! Expressions use juxtaposition for application, `∘` for composition,
//! lambdas written `\x. e` or `λx:T. e`, pairs `(a, b)`, and the sequencing
//! sugar `>>=` / `>>`, which desugars to `bind` during parsing.

use super::ast::{Expr, LawExpr, TyVar, TypeExpr};
use super::lexer::{lex, Pos, Tok};
use crate::{Error, Result};

/// One top-level item of a law file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FileItem {
    Law(LawExpr),
    Suite(SuiteBlock),
}

/// A named group of law names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteBlock {
    pub name: String,
    pub laws: Vec<String>,
}

/// Parse a whole law file.
pub fn parse_law_file(text: &str) -> Result<Vec<FileItem>> {
    let mut p = Parser::new(lex(text)?);
    let mut items = Vec::new();
    loop {
        match p.peek() {
            None => break,
            Some(Tok::KwLaw) => items.push(FileItem::Law(p.law()?)),
            Some(Tok::KwSuite) => items.push(FileItem::Suite(p.suite()?)),
            Some(other) => {
                return Err(p.err_here(format!("expected 'law' or 'suite', found '{other}'")))
            }
        }
    }
    Ok(items)
}

/// Parse text containing exactly one law.
pub fn parse_law(text: &str) -> Result<LawExpr> {
    let items = parse_law_file(text)?;
    match items.as_slice() {
        [FileItem::Law(law)] => Ok(law.clone()),
        _ => Err(Error::Parse {
            line: 1,
            col: 1,
            msg: format!("expected exactly one law, found {} items", items.len()),
        }),
    }
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    pos: usize,
    fresh: usize,
}

impl Parser {
    fn new(toks: Vec<(Tok, Pos)>) -> Parser {
        Parser {
            toks,
            pos: 0,
            fresh: 0,
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|(t, _)| t)
    }

    fn here(&self) -> Pos {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|(_, p)| *p)
            .unwrap_or(Pos { line: 1, col: 1 })
    }

    fn err_here(&self, msg: impl Into<String>) -> Error {
        let pos = self.here();
        Error::Parse {
            line: pos.line,
            col: pos.col,
            msg: msg.into(),
        }
    }

    fn advance(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &Tok) -> Result<()> {
        if self.eat(t) {
            Ok(())
        } else {
            let found = self
                .peek()
                .map(|f| format!("'{f}'"))
                .unwrap_or_else(|| "end of input".into());
            Err(self.err_here(format!("expected '{t}', found {found}")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(_)) => {
                let Some(Tok::Ident(name)) = self.advance() else {
                    unreachable!()
                };
                Ok(name)
            }
            _ => Err(self.err_here(format!("expected {what}"))),
        }
    }

    fn law(&mut self) -> Result<LawExpr> {
        self.expect(&Tok::KwLaw)?;
        let name = self.ident("a law name")?;
        self.expect(&Tok::Colon)?;
        self.expect(&Tok::KwForall)?;
        let mut binders = Vec::new();
        if self.peek() != Some(&Tok::Dot) {
            loop {
                let binder = self.ident("a binder name")?;
                self.expect(&Tok::Colon)?;
                let ty = self.type_expr()?;
                binders.push((binder, ty));
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(&Tok::Dot)?;
        let lhs = self.expr()?;
        self.expect(&Tok::EqEq)?;
        let rhs = self.expr()?;
        Ok(LawExpr {
            name,
            binders,
            lhs,
            rhs,
        })
    }

    fn suite(&mut self) -> Result<SuiteBlock> {
        self.expect(&Tok::KwSuite)?;
        let name = self.ident("a suite name")?;
        self.expect(&Tok::LBrace)?;
        let mut laws = Vec::new();
        while self.peek() != Some(&Tok::RBrace) {
            laws.push(self.ident("a law name")?);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(&Tok::RBrace)?;
        Ok(SuiteBlock { name, laws })
    }

    // Expressions.

    fn expr(&mut self) -> Result<Expr> {
        if self.peek() == Some(&Tok::Lambda) {
            return self.lambda();
        }
        self.seq_expr()
    }

    fn lambda(&mut self) -> Result<Expr> {
        self.expect(&Tok::Lambda)?;
        let name = self.ident("a lambda binder")?;
        let ann = if self.eat(&Tok::Colon) {
            Some(self.type_expr()?)
        } else {
            None
        };
        self.expect(&Tok::Dot)?;
        let body = self.expr()?;
        Ok(Expr::lam(name, ann, body))
    }

    fn seq_expr(&mut self) -> Result<Expr> {
        let mut lhs = self.compose_expr()?;
        loop {
            if self.eat(&Tok::BindOp) {
                let k = self.seq_operand()?;
                lhs = Expr::app(Expr::app(Expr::var("bind"), k), lhs);
            } else if self.eat(&Tok::SeqOp) {
                let rhs = self.seq_operand()?;
                let fresh = format!("_seq{}", self.fresh);
                self.fresh += 1;
                lhs = Expr::app(
                    Expr::app(Expr::var("bind"), Expr::lam(fresh, None, rhs)),
                    lhs,
                );
            } else {
                return Ok(lhs);
            }
        }
    }

    fn seq_operand(&mut self) -> Result<Expr> {
        if self.peek() == Some(&Tok::Lambda) {
            self.lambda()
        } else {
            self.compose_expr()
        }
    }

    fn compose_expr(&mut self) -> Result<Expr> {
        let lhs = self.app_expr()?;
        if self.eat(&Tok::Compose) {
            let rhs = if self.peek() == Some(&Tok::Lambda) {
                self.lambda()?
            } else {
                self.compose_expr()?
            };
            return Ok(Expr::compose(lhs, rhs));
        }
        Ok(lhs)
    }

    fn app_expr(&mut self) -> Result<Expr> {
        let mut head = self.atom()?;
        while matches!(self.peek(), Some(Tok::Ident(_)) | Some(Tok::LParen)) {
            let arg = self.atom()?;
            head = Expr::app(head, arg);
        }
        Ok(head)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.advance() {
            Some(Tok::Ident(name)) => {
                if name == "star" {
                    Ok(Expr::Star)
                } else {
                    Ok(Expr::Var(name))
                }
            }
            Some(Tok::LParen) => {
                let first = self.expr()?;
                if self.eat(&Tok::Comma) {
                    let second = self.expr()?;
                    self.expect(&Tok::RParen)?;
                    Ok(Expr::pair(first, second))
                } else {
                    self.expect(&Tok::RParen)?;
                    Ok(first)
                }
            }
            Some(other) => Err(self.err_here(format!("expected an expression, found '{other}'"))),
            None => Err(self.err_here("expected an expression, found end of input")),
        }
    }

    // Types.

    fn type_expr(&mut self) -> Result<TypeExpr> {
        let lhs = self.ty_sum()?;
        if self.eat(&Tok::Arrow) {
            let rhs = self.type_expr()?;
            return Ok(TypeExpr::fun(lhs, rhs));
        }
        Ok(lhs)
    }

    fn ty_sum(&mut self) -> Result<TypeExpr> {
        let mut lhs = self.ty_prod()?;
        while self.eat(&Tok::Plus) {
            let rhs = self.ty_prod()?;
            lhs = TypeExpr::Sum(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn ty_prod(&mut self) -> Result<TypeExpr> {
        let mut lhs = self.ty_prefix()?;
        while self.eat(&Tok::Star) {
            let rhs = self.ty_prefix()?;
            lhs = TypeExpr::Prod(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn ty_prefix(&mut self) -> Result<TypeExpr> {
        let head = match self.peek() {
            Some(Tok::Ident(name)) => name.clone(),
            _ => return self.ty_atom(),
        };
        match head.as_str() {
            "M" | "N" | "J" => {
                self.advance();
                let arg = self.ty_prefix()?;
                Ok(match head.as_str() {
                    "M" => TypeExpr::M(Box::new(arg)),
                    "N" => TypeExpr::N(Box::new(arg)),
                    _ => TypeExpr::J(Box::new(arg)),
                })
            }
            "F" => {
                self.advance();
                let a = self.ty_atom()?;
                let b = self.ty_atom()?;
                Ok(TypeExpr::F(Box::new(a), Box::new(b)))
            }
            _ => self.ty_atom(),
        }
    }

    fn ty_atom(&mut self) -> Result<TypeExpr> {
        match self.advance() {
            Some(Tok::Ident(name)) => match name.as_str() {
                "Unit" => Ok(TypeExpr::Unit),
                "EndoW" => Ok(TypeExpr::EndoW),
                "Fn" | "Sum" | "Prod" => {
                    self.expect(&Tok::LParen)?;
                    let a = self.type_expr()?;
                    self.expect(&Tok::Comma)?;
                    let b = self.type_expr()?;
                    self.expect(&Tok::RParen)?;
                    Ok(match name.as_str() {
                        "Fn" => TypeExpr::fun(a, b),
                        "Sum" => TypeExpr::Sum(Box::new(a), Box::new(b)),
                        _ => TypeExpr::Prod(Box::new(a), Box::new(b)),
                    })
                }
                other => TyVar::parse(other)
                    .map(TypeExpr::Var)
                    .ok_or_else(|| self.err_here(format!("unknown type {other}"))),
            },
            Some(Tok::LParen) => {
                let inner = self.type_expr()?;
                self.expect(&Tok::RParen)?;
                Ok(inner)
            }
            Some(other) => Err(self.err_here(format!("expected a type, found '{other}'"))),
            None => Err(self.err_here("expected a type, found end of input")),
        }
    }
}

// peek2 keeps the lookahead used by future grammar growth from warning.
impl Parser {
    #[allow(dead_code)]
    fn lookahead_is(&self, t: &Tok) -> bool {
        self.peek2() == Some(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip(src: &str) -> LawExpr {
        let parsed = parse_law(src).unwrap();
        let printed = parsed.to_string();
        let reparsed = parse_law(&printed).unwrap();
        assert_eq!(parsed, reparsed, "printing {src:?} as {printed:?}");
        parsed
    }

    #[test]
    fn empty_binder_list_parses() {
        let law = roundtrip("law Fuse-Shift: forall . fuse ∘ shift == id");
        assert_eq!(law.name, "Fuse-Shift");
        assert!(law.binders.is_empty());
        assert_eq!(
            law.lhs,
            Expr::compose(Expr::var("fuse"), Expr::var("shift"))
        );
        assert_eq!(law.rhs, Expr::var("id"));
    }

    #[test]
    fn sequencing_sugar_desugars_to_bind() {
        let law = roundtrip("law Put-Put: forall s:S, s2:S . put(s) >> put(s2) == put(s2)");
        assert_eq!(law.binders.len(), 2);
        // put(s) >> put(s2) is bind (\_. put s2) (put s)
        let Expr::App(head, arg) = &law.lhs else {
            panic!("expected an application")
        };
        let Expr::App(bind, lam) = &**head else {
            panic!("expected bind applied to a continuation")
        };
        assert_eq!(**bind, Expr::var("bind"));
        assert!(matches!(&**lam, Expr::Lam(name, None, _) if name.starts_with("_seq")));
        assert_eq!(**arg, Expr::app(Expr::var("put"), Expr::var("s")));
    }

    #[test]
    fn bind_operator_is_left_associative() {
        let law = parse_law("law A: forall . t >>= k >>= l == t").unwrap();
        // (t >>= k) >>= l  is  bind l (bind k t)
        let expected = Expr::app(
            Expr::app(Expr::var("bind"), Expr::var("l")),
            Expr::app(
                Expr::app(Expr::var("bind"), Expr::var("k")),
                Expr::var("t"),
            ),
        );
        assert_eq!(law.lhs, expected);
    }

    #[test]
    fn lambda_after_bind_swallows_the_rest() {
        let law = roundtrip(
            "law Get-Get: forall k:Fn(S, Fn(S, M X)) . get >>= (\\s. get >>= k s) == get >>= (\\s. k s s)",
        );
        assert_eq!(law.binders[0].0, "k");
    }

    #[test]
    fn composition_is_right_associative_and_prints_back() {
        let law = roundtrip("law A: forall . fuse ∘ fmap g ∘ shift == mixmap g");
        let Expr::Compose(_, rhs) = &law.lhs else {
            panic!("expected composition")
        };
        assert!(matches!(&**rhs, Expr::Compose(_, _)));
    }

    #[test]
    fn types_parse_infix_and_constructor_forms() {
        let law = parse_law(
            "law A: forall k:Fn(E+X, F E' X'), h:EndoW, p:X*W, f:X->X' . k == k",
        )
        .unwrap();
        let (_, kty) = &law.binders[0];
        assert_eq!(kty.to_string(), "Fn(Sum(E, X), F E' X')");
        assert_eq!(law.binders[1].1, TypeExpr::EndoW);
        assert_eq!(law.binders[2].1.to_string(), "Prod(X, W)");
        assert_eq!(law.binders[3].1.to_string(), "Fn(X, X')");
    }

    #[test]
    fn pairs_group_and_nest() {
        let law = roundtrip("law A: forall w:W . pbnd (\\a. t) (star, w) == t");
        let Expr::App(_, arg) = &law.lhs else {
            panic!("expected application")
        };
        assert_eq!(**arg, Expr::pair(Expr::Star, Expr::var("w")));
    }

    #[test]
    fn suites_collect_law_names() {
        let items = parse_law_file(
            "law A: forall . x == x\nlaw B-C: forall . y == y\nsuite demo { A, B-C }",
        )
        .unwrap();
        let FileItem::Suite(block) = &items[2] else {
            panic!("expected a suite")
        };
        assert_eq!(block.name, "demo");
        assert_eq!(block.laws, vec!["A".to_string(), "B-C".to_string()]);
    }

    #[test]
    fn errors_carry_positions() {
        let err = parse_law("law A: forall .\n  x ==").unwrap_err();
        let Error::Parse { line, .. } = err else {
            panic!("expected a parse error")
        };
        assert_eq!(line, 2);
    }

    #[test]
    fn unknown_type_names_are_rejected() {
        assert!(parse_law("law A: forall x:Q . x == x").is_err());
    }
}
