//! Tokenizer for law files.
//!
//! `#` starts a comment running to end of line. Identifiers may contain
//! primes and internal hyphens (law names like `Fuse-Shift`); a hyphen is
//! only part of an identifier when a letter or digit follows, so `->` still
//! lexes as the arrow.

use std::fmt;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Colon,
    Comma,
    Dot,
    Lambda,
    EqEq,
    Compose,
    Arrow,
    Plus,
    Star,
    BindOp,
    SeqOp,
    KwLaw,
    KwForall,
    KwSuite,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(name) => return write!(f, "{name}"),
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Colon => ":",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::Lambda => "\\",
            Tok::EqEq => "==",
            Tok::Compose => "∘",
            Tok::Arrow => "->",
            Tok::Plus => "+",
            Tok::Star => "*",
            Tok::BindOp => ">>=",
            Tok::SeqOp => ">>",
            Tok::KwLaw => "law",
            Tok::KwForall => "forall",
            Tok::KwSuite => "suite",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

pub fn lex(text: &str) -> Result<Vec<(Tok, Pos)>> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = text.chars().peekable();

    macro_rules! bail {
        ($($arg:tt)*) => {
            return Err(Error::Parse {
                line,
                col,
                msg: format!($($arg)*),
            })
        };
    }

    while let Some(&c) = chars.peek() {
        let pos = Pos { line, col };
        let mut advance = |chars: &mut std::iter::Peekable<std::str::Chars<'_>>| {
            let c = chars.next().unwrap();
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        match c {
            '#' => {
                while let Some(&c) = chars.peek() {
                    advance(&mut chars);
                    if c == '\n' {
                        break;
                    }
                }
            }
            c if c.is_whitespace() => {
                advance(&mut chars);
            }
            '(' => {
                advance(&mut chars);
                out.push((Tok::LParen, pos));
            }
            ')' => {
                advance(&mut chars);
                out.push((Tok::RParen, pos));
            }
            '{' => {
                advance(&mut chars);
                out.push((Tok::LBrace, pos));
            }
            '}' => {
                advance(&mut chars);
                out.push((Tok::RBrace, pos));
            }
            ':' => {
                advance(&mut chars);
                out.push((Tok::Colon, pos));
            }
            ',' => {
                advance(&mut chars);
                out.push((Tok::Comma, pos));
            }
            '.' => {
                advance(&mut chars);
                out.push((Tok::Dot, pos));
            }
            '\\' | 'λ' => {
                advance(&mut chars);
                out.push((Tok::Lambda, pos));
            }
            '∘' => {
                advance(&mut chars);
                out.push((Tok::Compose, pos));
            }
            '+' => {
                advance(&mut chars);
                out.push((Tok::Plus, pos));
            }
            '*' => {
                advance(&mut chars);
                out.push((Tok::Star, pos));
            }
            '=' => {
                advance(&mut chars);
                if chars.peek() == Some(&'=') {
                    advance(&mut chars);
                    out.push((Tok::EqEq, pos));
                } else {
                    bail!("lone '='; equations use '=='");
                }
            }
            '>' => {
                advance(&mut chars);
                if chars.peek() != Some(&'>') {
                    bail!("lone '>'");
                }
                advance(&mut chars);
                if chars.peek() == Some(&'=') {
                    advance(&mut chars);
                    out.push((Tok::BindOp, pos));
                } else {
                    out.push((Tok::SeqOp, pos));
                }
            }
            '-' => {
                advance(&mut chars);
                if chars.peek() == Some(&'>') {
                    advance(&mut chars);
                    out.push((Tok::Arrow, pos));
                } else {
                    bail!("lone '-'");
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut word = String::new();
                loop {
                    match chars.peek() {
                        Some(&c) if c.is_ascii_alphanumeric() || c == '_' || c == '\'' => {
                            word.push(advance(&mut chars));
                        }
                        Some(&'-') => {
                            // Part of the identifier only when a word
                            // character follows; otherwise leave it for the
                            // arrow rule.
                            let mut ahead = chars.clone();
                            ahead.next();
                            match ahead.peek() {
                                Some(&c2) if c2.is_ascii_alphanumeric() || c2 == '_' => {
                                    word.push(advance(&mut chars));
                                }
                                _ => break,
                            }
                        }
                        _ => break,
                    }
                }
                let tok = match word.as_str() {
                    "law" => Tok::KwLaw,
                    "forall" => Tok::KwForall,
                    "suite" => Tok::KwSuite,
                    _ => Tok::Ident(word),
                };
                out.push((tok, pos));
            }
            other => bail!("unexpected character {other:?}"),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(text: &str) -> Vec<Tok> {
        lex(text).unwrap().into_iter().map(|(t, _)| t).collect()
    }

    #[test]
    fn operators_lex_greedily() {
        assert_eq!(
            kinds("t >>= k >> u"),
            vec![
                Tok::Ident("t".into()),
                Tok::BindOp,
                Tok::Ident("k".into()),
                Tok::SeqOp,
                Tok::Ident("u".into()),
            ]
        );
    }

    #[test]
    fn hyphenated_names_and_arrows_coexist() {
        assert_eq!(
            kinds("Fuse-Shift X->W"),
            vec![
                Tok::Ident("Fuse-Shift".into()),
                Tok::Ident("X".into()),
                Tok::Arrow,
                Tok::Ident("W".into()),
            ]
        );
    }

    #[test]
    fn primes_stay_in_identifiers() {
        assert_eq!(
            kinds("X'' k'"),
            vec![Tok::Ident("X''".into()), Tok::Ident("k'".into())]
        );
    }

    #[test]
    fn comments_are_skipped_and_positions_tracked() {
        let toks = lex("# intro\nlaw A: forall . x == x").unwrap();
        assert_eq!(toks[0].0, Tok::KwLaw);
        assert_eq!(toks[0].1, Pos { line: 2, col: 1 });
    }

    #[test]
    fn both_lambda_spellings_lex() {
        assert_eq!(kinds("\\x. x"), kinds("λx. x"));
    }

    #[test]
    fn stray_symbols_error_with_position() {
        let err = lex("a = b").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }
}
