//! Transformer stack descriptions.
//!
//! A stack is a list of effect layers, outermost first, over the identity
//! monad, optionally sitting on a reader base environment. The textual form
//! round-trips through [`StackSpec::parse`] and `Display`:
//!
//! ```text
//! Id
//! ExceptT(e=2).StateT(s=2).Id
//! ReaderBase(r=2, WriterT(Z2).Id)
//! ```
//!
//! Each effect operation targets one layer of its kind, the innermost by
//! default, overridable with an explicit designation. A reader base is the
//! distinguished environment of a reader model whose remaining layers are
//! stacked on top of it; it owns the reader operations, so explicit reader
//! designation is rejected alongside it.

use std::fmt;

use crate::finite::FinType;
use crate::monoid::MonoidSpec;
use crate::{Error, Result};

/// The four effect families a layer can contribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EffectKind {
    Exception,
    Reader,
    Writer,
    State,
}

impl EffectKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EffectKind::Exception => "exception",
            EffectKind::Reader => "reader",
            EffectKind::Writer => "writer",
            EffectKind::State => "state",
        }
    }

    pub fn parse(text: &str) -> Result<EffectKind> {
        match text {
            "exception" => Ok(EffectKind::Exception),
            "reader" => Ok(EffectKind::Reader),
            "writer" => Ok(EffectKind::Writer),
            "state" => Ok(EffectKind::State),
            other => Err(Error::BadStack(format!(
                "unknown effect kind {other}; expected exception, reader, writer or state"
            ))),
        }
    }
}

impl fmt::Display for EffectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One transformer layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Layer {
    ExceptT(FinType),
    ReaderT(FinType),
    WriterT(MonoidSpec),
    StateT(FinType),
}

impl Layer {
    pub fn kind(&self) -> EffectKind {
        match self {
            Layer::ExceptT(_) => EffectKind::Exception,
            Layer::ReaderT(_) => EffectKind::Reader,
            Layer::WriterT(_) => EffectKind::Writer,
            Layer::StateT(_) => EffectKind::State,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Layer::ExceptT(t) | Layer::ReaderT(t) | Layer::StateT(t) => {
                t.cardinality().map(|_| ())
            }
            Layer::WriterT(_) => Ok(()),
        }
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let short = |t: &FinType| match t {
            FinType::Enum(n) => n.to_string(),
            other => other.to_string(),
        };
        match self {
            Layer::ExceptT(t) => write!(f, "ExceptT(e={})", short(t)),
            Layer::ReaderT(t) => write!(f, "ReaderT(r={})", short(t)),
            Layer::WriterT(m) => write!(f, "WriterT({})", m.name()),
            Layer::StateT(t) => write!(f, "StateT(s={})", short(t)),
        }
    }
}

/// A validated stack description.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StackSpec {
    /// Written layers, outermost first.
    layers: Vec<Layer>,
    /// Environment of the reader base, if any.
    base: Option<FinType>,
    /// Explicit (kind, index into `layers`) designation.
    designated: Option<(EffectKind, usize)>,
    /// `layers`, with the base appended as an innermost reader layer.
    effective: Vec<Layer>,
}

impl StackSpec {
    pub fn new(
        layers: Vec<Layer>,
        base: Option<FinType>,
        designated: Option<(EffectKind, usize)>,
    ) -> Result<StackSpec> {
        for layer in &layers {
            layer.validate()?;
        }
        if let Some(b) = &base {
            b.cardinality()?;
        }
        if let Some((kind, idx)) = designated {
            let Some(layer) = layers.get(idx) else {
                return Err(Error::BadStack(format!(
                    "designated index {idx} outside a stack of {} layers",
                    layers.len()
                )));
            };
            if layer.kind() != kind {
                return Err(Error::BadStack(format!(
                    "designated layer {idx} is {}, not {kind}",
                    layer.kind()
                )));
            }
            if kind == EffectKind::Reader && base.is_some() {
                return Err(Error::BadStack(
                    "a reader base already owns the reader operations; \
                     explicit reader designation is not allowed"
                        .into(),
                ));
            }
        }
        let mut effective = layers.clone();
        if let Some(b) = &base {
            effective.push(Layer::ReaderT(b.clone()));
        }
        Ok(StackSpec {
            layers,
            base,
            designated,
            effective,
        })
    }

    pub fn parse(text: &str) -> Result<StackSpec> {
        let mut cur = StackCursor { src: text, pos: 0 };
        let spec = cur.stack(false)?;
        cur.skip_ws();
        if cur.pos != cur.src.len() {
            return Err(cur.err("trailing input after stack"));
        }
        Ok(spec)
    }

    /// Same stack with an explicit effect designation.
    pub fn with_designated(&self, kind: EffectKind, idx: usize) -> Result<StackSpec> {
        StackSpec::new(self.layers.clone(), self.base.clone(), Some((kind, idx)))
    }

    /// Written layers, outermost first.
    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Written layers plus the base reader layer, if any.
    pub fn effective_layers(&self) -> &[Layer] {
        &self.effective
    }

    pub fn reader_base(&self) -> Option<&FinType> {
        self.base.as_ref()
    }

    pub fn designated(&self) -> Option<(EffectKind, usize)> {
        self.designated
    }

    /// Index into [`Self::effective_layers`] of the layer owning `kind`, if
    /// the stack provides one: the explicit designation when present, the
    /// base for reader effects over a base, otherwise the innermost written
    /// layer of that kind.
    pub fn owner_index(&self, kind: EffectKind) -> Option<usize> {
        if let Some((k, idx)) = self.designated {
            if k == kind {
                return Some(idx);
            }
        }
        if kind == EffectKind::Reader && self.base.is_some() {
            return Some(self.effective.len() - 1);
        }
        self.layers.iter().rposition(|l| l.kind() == kind)
    }

    pub(crate) fn require_owner(&self, kind: EffectKind) -> Result<usize> {
        self.owner_index(kind).ok_or_else(|| Error::NoSuchEffect {
            stack: self.to_string(),
            kind: kind.as_str(),
        })
    }

    /// The carrier of this stack at result type `x`.
    pub fn carrier(&self, x: &FinType) -> Result<FinType> {
        carrier_of(&self.effective, x)
    }

    /// The carrier with the designated exception layer's error type replaced
    /// by `err`. This is how two-parameter exception types are formed: the
    /// operations never inspect the error type, only the carrier shape
    /// changes.
    pub fn carrier_with_err(&self, err: &FinType, x: &FinType) -> Result<FinType> {
        let owner = self.require_owner(EffectKind::Exception)?;
        let mut layers = self.effective.clone();
        layers[owner] = Layer::ExceptT(err.clone());
        carrier_of(&layers, x)
    }

    /// Error type of the designated exception layer.
    pub fn err_type(&self) -> Option<&FinType> {
        match self.effective.get(self.owner_index(EffectKind::Exception)?) {
            Some(Layer::ExceptT(e)) => Some(e),
            _ => None,
        }
    }

    /// Environment of the reader owner (base or designated layer).
    pub fn env_type(&self) -> Option<&FinType> {
        match self.effective.get(self.owner_index(EffectKind::Reader)?) {
            Some(Layer::ReaderT(r)) => Some(r),
            _ => None,
        }
    }

    /// Monoid of the designated writer layer.
    pub fn monoid(&self) -> Option<&MonoidSpec> {
        match self.effective.get(self.owner_index(EffectKind::Writer)?) {
            Some(Layer::WriterT(m)) => Some(m),
            _ => None,
        }
    }

    /// State type of the designated state layer.
    pub fn state_type(&self) -> Option<&FinType> {
        match self.effective.get(self.owner_index(EffectKind::State)?) {
            Some(Layer::StateT(s)) => Some(s),
            _ => None,
        }
    }

    /// Non-default designation in `kind@index` form, for reports.
    pub fn designation_text(&self) -> Option<String> {
        self.designated.map(|(k, i)| format!("{k}@{i}"))
    }
}

fn carrier_of(layers: &[Layer], x: &FinType) -> Result<FinType> {
    match layers.split_first() {
        None => Ok(x.clone()),
        Some((Layer::ExceptT(e), rest)) => {
            carrier_of(rest, &FinType::sum(e.clone(), x.clone()))
        }
        Some((Layer::ReaderT(r), rest)) => {
            Ok(FinType::func(r.clone(), carrier_of(rest, x)?))
        }
        Some((Layer::WriterT(m), rest)) => {
            carrier_of(rest, &FinType::prod(x.clone(), m.carrier()))
        }
        Some((Layer::StateT(s), rest)) => Ok(FinType::func(
            s.clone(),
            carrier_of(rest, &FinType::prod(x.clone(), s.clone()))?,
        )),
    }
}

impl fmt::Display for StackSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(b) = &self.base {
            let short = match b {
                FinType::Enum(n) => n.to_string(),
                other => other.to_string(),
            };
            write!(f, "ReaderBase(r={short}, ")?;
        }
        for layer in &self.layers {
            write!(f, "{layer}.")?;
        }
        write!(f, "Id")?;
        if self.base.is_some() {
            write!(f, ")")?;
        }
        Ok(())
    }
}

struct StackCursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> StackCursor<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::BadStack(format!("{} (at byte {})", msg.into(), self.pos))
    }

    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(|c: char| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek_word(&mut self) -> &'a str {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let end = rest
            .find(|c: char| !c.is_ascii_alphanumeric())
            .unwrap_or(rest.len());
        &rest[..end]
    }

    fn take_word(&mut self) -> &'a str {
        let w = self.peek_word();
        self.pos += w.len();
        w
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

    fn param_type(&mut self, tag: char) -> Result<FinType> {
        self.eat('(')?;
        self.eat(tag)?;
        self.eat('=')?;
        self.skip_ws();
        let start = self.pos;
        let mut depth = 0usize;
        for (off, c) in self.src[self.pos..].char_indices() {
            match c {
                '(' => depth += 1,
                ')' if depth == 0 => {
                    self.pos = start + off;
                    let ty = FinType::parse(&self.src[start..self.pos])?;
                    self.eat(')')?;
                    return Ok(ty);
                }
                ')' => depth -= 1,
                ',' if depth == 0 => break,
                _ => {}
            }
        }
        Err(self.err("unterminated layer parameter"))
    }

    fn stack(&mut self, inside_base: bool) -> Result<StackSpec> {
        self.skip_ws();
        if self.peek_word() == "ReaderBase" {
            if inside_base {
                return Err(self.err("a stack can have only one reader base"));
            }
            self.take_word();
            self.eat('(')?;
            self.eat('r')?;
            self.eat('=')?;
            self.skip_ws();
            let start = self.pos;
            let mut depth = 0usize;
            while self.pos < self.src.len() {
                match self.src.as_bytes()[self.pos] {
                    b'(' => depth += 1,
                    b')' => depth = depth.saturating_sub(1),
                    b',' if depth == 0 => break,
                    _ => {}
                }
                self.pos += 1;
            }
            let base = FinType::parse(&self.src[start..self.pos])?;
            self.eat(',')?;
            let inner = self.stack(true)?;
            self.eat(')')?;
            return StackSpec::new(inner.layers, Some(base), None);
        }
        let mut layers = Vec::new();
        loop {
            let word = self.take_word();
            match word {
                "Id" => break,
                "ExceptT" => layers.push(Layer::ExceptT(self.param_type('e')?)),
                "ReaderT" => layers.push(Layer::ReaderT(self.param_type('r')?)),
                "StateT" => layers.push(Layer::StateT(self.param_type('s')?)),
                "WriterT" => {
                    self.eat('(')?;
                    let name = self.take_word().to_string();
                    let monoid = MonoidSpec::builtin(&name).ok_or_else(|| {
                        Error::BadStack(format!(
                            "unknown monoid {name}; builtins are {}",
                            MonoidSpec::builtin_names().join(", ")
                        ))
                    })?;
                    self.eat(')')?;
                    layers.push(Layer::WriterT(monoid));
                }
                "" => return Err(self.err("expected a layer or Id")),
                other => {
                    return Err(self.err(format!(
                        "unknown layer {other}; expected ExceptT, ReaderT, WriterT, StateT or Id"
                    )))
                }
            }
            self.eat('.')?;
        }
        StackSpec::new(layers, None, None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: u64) -> FinType {
        FinType::Enum(n)
    }

    #[test]
    fn parse_display_round_trip() {
        let texts = [
            "Id",
            "ExceptT(e=2).Id",
            "ExceptT(e=2).WriterT(Z2).StateT(s=2).Id",
            "WriterT(T2).Id",
            "ReaderT(r=3).Id",
            "ReaderBase(r=2, Id)",
            "ReaderBase(r=2, StateT(s=2).Id)",
            "ReaderBase(r=3, ExceptT(e=2).ReaderT(r=2).Id)",
        ];
        for text in texts {
            let spec = StackSpec::parse(text).unwrap();
            assert_eq!(spec.to_string(), text);
            assert_eq!(StackSpec::parse(&spec.to_string()).unwrap(), spec);
        }
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(StackSpec::parse("ExceptT(e=2)").is_err());
        assert!(StackSpec::parse("ExceptT(e=2).").is_err());
        assert!(StackSpec::parse("MaybeT(2).Id").is_err());
        assert!(StackSpec::parse("WriterT(Z5).Id").is_err());
        assert!(StackSpec::parse("ReaderBase(r=2, ReaderBase(r=2, Id))").is_err());
        assert!(StackSpec::parse("Id.Id").is_err());
        assert!(StackSpec::parse("StateT(s=0).Id").is_err());
    }

    #[test]
    fn carriers_follow_layer_structure() {
        let x = e(3);
        let cases = [
            ("Id", "Enum(3)"),
            ("ExceptT(e=2).Id", "Sum(Enum(2), Enum(3))"),
            ("StateT(s=2).Id", "Fn(Enum(2), Prod(Enum(3), Enum(2)))"),
            ("ReaderT(r=2).Id", "Fn(Enum(2), Enum(3))"),
            ("WriterT(Z2).Id", "Prod(Enum(3), Enum(2))"),
            (
                "WriterT(Z2).ExceptT(e=2).Id",
                "Sum(Enum(2), Prod(Enum(3), Enum(2)))",
            ),
            (
                "ExceptT(e=2).StateT(s=2).Id",
                "Fn(Enum(2), Prod(Sum(Enum(2), Enum(3)), Enum(2)))",
            ),
            (
                "StateT(s=2).ExceptT(e=2).Id",
                "Fn(Enum(2), Sum(Enum(2), Prod(Enum(3), Enum(2))))",
            ),
            ("ReaderBase(r=2, WriterT(Z2).Id)", "Fn(Enum(2), Prod(Enum(3), Enum(2)))"),
        ];
        for (stack, expected) in cases {
            let spec = StackSpec::parse(stack).unwrap();
            assert_eq!(spec.carrier(&x).unwrap().to_string(), expected, "{stack}");
        }
    }

    #[test]
    fn reader_base_is_innermost_in_the_effective_stack() {
        let spec = StackSpec::parse("ReaderBase(r=2, StateT(s=3).Id)").unwrap();
        assert_eq!(spec.layers().len(), 1);
        assert_eq!(spec.effective_layers().len(), 2);
        assert_eq!(spec.effective_layers()[1], Layer::ReaderT(e(2)));
        assert_eq!(spec.owner_index(EffectKind::Reader), Some(1));
        assert_eq!(spec.owner_index(EffectKind::State), Some(0));
        assert_eq!(spec.env_type(), Some(&e(2)));
    }

    #[test]
    fn default_designation_is_innermost() {
        let spec = StackSpec::parse("ExceptT(e=2).StateT(s=2).ExceptT(e=3).Id").unwrap();
        assert_eq!(spec.owner_index(EffectKind::Exception), Some(2));
        assert_eq!(spec.err_type(), Some(&e(3)));
        let outer = spec.with_designated(EffectKind::Exception, 0).unwrap();
        assert_eq!(outer.owner_index(EffectKind::Exception), Some(0));
        assert_eq!(outer.err_type(), Some(&e(2)));
    }

    #[test]
    fn bad_designations_are_rejected() {
        let spec = StackSpec::parse("ExceptT(e=2).Id").unwrap();
        assert!(spec.with_designated(EffectKind::Writer, 0).is_err());
        assert!(spec.with_designated(EffectKind::Exception, 5).is_err());
        let based = StackSpec::parse("ReaderBase(r=2, ReaderT(r=2).Id)").unwrap();
        assert!(based.with_designated(EffectKind::Reader, 0).is_err());
    }

    #[test]
    fn error_type_substitution_reshapes_the_carrier() {
        let spec = StackSpec::parse("ExceptT(e=2).StateT(s=2).Id").unwrap();
        let carrier = spec.carrier_with_err(&e(3), &e(2)).unwrap();
        assert_eq!(
            carrier.to_string(),
            "Fn(Enum(2), Prod(Sum(Enum(3), Enum(2)), Enum(2)))"
        );
        let plain = StackSpec::parse("StateT(s=2).Id").unwrap();
        assert!(plain.carrier_with_err(&e(3), &e(2)).is_err());
    }
}
