//! Interpreting effect operations over a concrete stack.
//!
//! A [`Model`] pairs a [`StackSpec`] with an optional [`Mutation`] and
//! interprets the operation vocabulary: the monad structure (`unit`, `bind`,
//! `fmap`) plus the exception, reader, writer and state operations. Values
//! are plain [`Value`] trees shaped by the stack's carrier; functional
//! arguments arrive as closures so callers can hand in lookup tables or
//! computed maps alike.
//!
//! Every operation is defined by structural recursion on the effective layer
//! list, outermost first. The layer owning an effect interprets it; layers
//! outside the owner lift it:
//!
//! * point operations (`raise`, `get`, `put`, `tell`, `ask`, ...) lift
//!   through an outer reader as a constant table, through an outer state by
//!   pairing the untouched state back on, through an outer writer by logging
//!   the monoid unit, and through an outer exception by tagging success;
//! * `catch` runs its handler under the same environment and entry state as
//!   the guarded computation, and handler logs append to what the failed
//!   computation already wrote;
//! * `listen` and `pass` thread the surrounding layers' cells through
//!   unchanged, reordering pair components as they cross state and writer
//!   layers, and treating an outer exception's failures as logging nothing
//!   (`pass` keeps them untouched by pairing them with the identity
//!   self-map).
//!
//! The compound exception operations (`handle`, `mixmap`, `fusel`, `fuser`)
//! are built from `bimap`, `catch`, `raise` and `bind`; the compound writer
//! operations (`mixmap`, `shift`, `fuse`, `hdl`, `pbnd`) bottom out in
//! `listen`, `pass` and `bind`. Mutations are deliberate, localized bugs
//! used to demonstrate that the checker notices broken semantics.

use std::fmt;

use crate::finite::{FinType, Value};
use crate::monoid::MonoidSpec;
use crate::stack::{EffectKind, Layer, StackSpec};
use crate::{Error, Result};

/// Functional argument to an operation.
pub type VFn<'a> = dyn Fn(&Value) -> Result<Value> + 'a;

/// A deliberately broken variant of the semantics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mutation {
    #[default]
    None,
    /// Writer bind keeps only the first computation's log.
    WriterBindDropsSecondLog,
    /// `put` leaves the state untouched.
    PutIgnoresArgument,
    /// `catch` re-raises instead of running its handler.
    CatchNeverHandles,
}

impl Mutation {
    pub fn parse(name: &str) -> Result<Mutation> {
        match name {
            "none" => Ok(Mutation::None),
            "writer-bind-drops-log" => Ok(Mutation::WriterBindDropsSecondLog),
            "put-ignores-argument" => Ok(Mutation::PutIgnoresArgument),
            "catch-never-handles" => Ok(Mutation::CatchNeverHandles),
            other => Err(Error::NotFound {
                what: "mutation",
                name: other.to_string(),
                suggestions: Mutation::names().iter().map(|s| s.to_string()).collect(),
            }),
        }
    }

    pub fn names() -> &'static [&'static str] {
        &[
            "writer-bind-drops-log",
            "put-ignores-argument",
            "catch-never-handles",
        ]
    }
}

impl fmt::Display for Mutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Mutation::None => "none",
            Mutation::WriterBindDropsSecondLog => "writer-bind-drops-log",
            Mutation::PutIgnoresArgument => "put-ignores-argument",
            Mutation::CatchNeverHandles => "catch-never-handles",
        };
        f.write_str(name)
    }
}

/// A stack together with the interpretation of its operations.
#[derive(Debug, Clone)]
pub struct Model {
    stack: StackSpec,
    mutation: Mutation,
}

impl Model {
    pub fn new(stack: StackSpec) -> Model {
        Model {
            stack,
            mutation: Mutation::None,
        }
    }

    pub fn with_mutation(stack: StackSpec, mutation: Mutation) -> Model {
        Model { stack, mutation }
    }

    pub fn stack(&self) -> &StackSpec {
        &self.stack
    }

    pub fn mutation(&self) -> Mutation {
        self.mutation
    }

    fn eff(&self) -> &[Layer] {
        self.stack.effective_layers()
    }

    pub fn carrier(&self, x: &FinType) -> Result<FinType> {
        self.stack.carrier(x)
    }

    // Monad structure.

    pub fn unit(&self, v: &Value) -> Result<Value> {
        unit_at(self.eff(), v)
    }

    pub fn bind(&self, k: &VFn<'_>, t: &Value) -> Result<Value> {
        bind_at(self.eff(), self.mutation, k, t)
    }

    pub fn fmap(&self, f: &VFn<'_>, t: &Value) -> Result<Value> {
        fmap_at(self.eff(), f, t)
    }

    // Exception operations.

    fn exc_owner(&self) -> Result<usize> {
        self.stack.require_owner(EffectKind::Exception)
    }

    pub fn raise(&self, ev: &Value) -> Result<Value> {
        raise_at(self.eff(), self.exc_owner()?, ev)
    }

    pub fn catch(&self, h: &VFn<'_>, t: &Value) -> Result<Value> {
        catch_at(self.eff(), self.mutation, self.exc_owner()?, h, t)
    }

    /// Map the error and result cells of the designated exception layer.
    pub fn exc_bimap(&self, h: &VFn<'_>, f: &VFn<'_>, t: &Value) -> Result<Value> {
        exc_bimap_at(self.eff(), self.exc_owner()?, h, f, t)
    }

    /// Joint continuation over both outcomes: the continuation sees
    /// `InL(error)` or `InR(result)` and picks the rest of the computation.
    pub fn handle(&self, k: &VFn<'_>, t: &Value) -> Result<Value> {
        handle_at(self.eff(), self.mutation, self.exc_owner()?, k, t)
    }

    /// Rewire outcomes by a plain function on `error + result`.
    pub fn exc_mixmap(&self, g: &VFn<'_>, t: &Value) -> Result<Value> {
        let owner = self.exc_owner()?;
        mixmap_exc_at(self.eff(), self.mutation, owner, g, t)
    }

    /// Collapse a raised-or-returned error into the error slot.
    pub fn fusel(&self, t: &Value) -> Result<Value> {
        self.exc_mixmap(
            &|c| match c {
                Value::InL(_) => Ok(c.clone()),
                Value::InR(s) => Ok((**s).clone()),
                other => Err(sum_mismatch("fusel argument", other)),
            },
            t,
        )
    }

    /// Collapse a returned error-or-result into the result slot.
    pub fn fuser(&self, t: &Value) -> Result<Value> {
        self.exc_mixmap(
            &|c| match c {
                Value::InL(s) => Ok((**s).clone()),
                Value::InR(_) => Ok(c.clone()),
                other => Err(sum_mismatch("fuser argument", other)),
            },
            t,
        )
    }

    // Reader operations.

    fn rdr_owner(&self) -> Result<usize> {
        self.stack.require_owner(EffectKind::Reader)
    }

    fn env_type(&self) -> Result<&FinType> {
        self.stack
            .env_type()
            .ok_or_else(|| Error::NoSuchEffect {
                stack: self.stack.to_string(),
                kind: "reader",
            })
    }

    /// Embed an environment-indexed family of results.
    pub fn rho(&self, f: &VFn<'_>) -> Result<Value> {
        let owner = self.rdr_owner()?;
        lift_point(self.eff(), owner, &|sl| {
            let Some((Layer::ReaderT(r), rest)) = sl.split_first() else {
                return Err(Error::internal("reader owner is not a reader layer"));
            };
            let entries = r
                .values()?
                .into_iter()
                .map(|rv| unit_at(rest, &f(&rv)?))
                .collect::<Result<Vec<_>>>()?;
            Ok(Value::table(entries))
        })
    }

    pub fn ask(&self) -> Result<Value> {
        self.rho(&|rv| Ok(rv.clone()))
    }

    /// Run a computation under a modified environment.
    pub fn local(&self, h: &VFn<'_>, t: &Value) -> Result<Value> {
        local_at(self.eff(), self.rdr_owner()?, h, t)
    }

    fn require_base(&self) -> Result<&FinType> {
        self.stack.reader_base().ok_or_else(|| Error::NoSuchEffect {
            stack: self.stack.to_string(),
            kind: "reader base",
        })
    }

    /// View a computation over a reader base as an environment-indexed
    /// family of computations in the base-free stack.
    pub fn apply_reader(&self, t: &Value) -> Result<Value> {
        let base = self.require_base()?;
        let card = base.cardinality()? as usize;
        let entries = (0..card)
            .map(|i| apply_at(self.stack.layers(), t, i))
            .collect::<Result<Vec<_>>>()?;
        Ok(Value::table(entries))
    }

    /// Rebuild a computation over the base from such a family; inverse to
    /// [`Model::apply_reader`].
    pub fn abstr_reader(&self, u: &Value) -> Result<Value> {
        let base = self.require_base()?;
        let card = base.cardinality()? as usize;
        let entries = u.as_table("environment-indexed family")?;
        if entries.len() != card {
            return Err(Error::MalformedValue {
                context: "environment-indexed family",
                expected: "a table over the base environment",
                got: u.to_string(),
            });
        }
        abstr_at(self.stack.layers(), card, &|i| Ok(entries[i].clone()))
    }

    // Writer operations.

    fn wrt_owner(&self) -> Result<usize> {
        self.stack.require_owner(EffectKind::Writer)
    }

    /// Monoid of the designated writer layer.
    pub fn monoid(&self) -> Result<&MonoidSpec> {
        self.stack.monoid().ok_or_else(|| Error::NoSuchEffect {
            stack: self.stack.to_string(),
            kind: "writer",
        })
    }

    /// Embed a result-and-log pair.
    pub fn writer_embed(&self, p: &Value) -> Result<Value> {
        lift_point(self.eff(), self.wrt_owner()?, &|sl| {
            let Some((Layer::WriterT(_), rest)) = sl.split_first() else {
                return Err(Error::internal("writer owner is not a writer layer"));
            };
            unit_at(rest, p)
        })
    }

    pub fn tell(&self, w: &Value) -> Result<Value> {
        self.writer_embed(&Value::pair(Value::Star, w.clone()))
    }

    /// Surface the accumulated log next to the result.
    pub fn listen(&self, t: &Value) -> Result<Value> {
        listen_at(self.eff(), self.wrt_owner()?, t)
    }

    /// Apply a computed log transformer: the computation returns a result
    /// and a self-map of the monoid, which is applied to its own log.
    pub fn pass(&self, t: &Value) -> Result<Value> {
        let owner = self.wrt_owner()?;
        let w = self.monoid()?.carrier();
        pass_at(self.eff(), owner, &w, t)
    }

    /// Rewire result-and-log cells by a plain function on pairs.
    pub fn writer_mixmap(&self, g: &VFn<'_>, t: &Value) -> Result<Value> {
        let owner = self.wrt_owner()?;
        let monoid = self.monoid()?;
        let w = monoid.carrier();
        let n = monoid.order() as usize;
        let listened = listen_at(self.eff(), owner, t)?;
        let mapped = fmap_at(self.eff(), &|p| {
            let gp = g(p)?;
            let (b, wq) = gp.as_pair("mixmap image")?;
            // Freeze the image log as a constant self-map for pass.
            Ok(Value::pair(b.clone(), Value::table(vec![wq.clone(); n])))
        }, &listened)?;
        pass_at(self.eff(), owner, &w, &mapped)
    }

    /// Pair every result with the unit log, duplicating the story.
    pub fn shift(&self, t: &Value) -> Result<Value> {
        let unit = self.monoid()?.unit_value();
        self.writer_mixmap(&|p| Ok(Value::pair(p.clone(), unit.clone())), t)
    }

    /// Merge a two-story cell, the outer (earlier) log multiplying on the
    /// left.
    pub fn fuse(&self, t: &Value) -> Result<Value> {
        let monoid = self.monoid()?.clone();
        self.writer_mixmap(
            &|q| {
                let (inner, w_outer) = q.as_pair("two-story cell")?;
                let (a, w_inner) = inner.as_pair("two-story cell")?;
                Ok(Value::pair(a.clone(), monoid.mult(w_outer, w_inner)?))
            },
            t,
        )
    }

    /// Bind a continuation over result-and-log pairs.
    pub fn hdl(&self, k: &VFn<'_>, t: &Value) -> Result<Value> {
        let shifted = self.shift(t)?;
        self.bind(k, &shifted)
    }

    /// Run a continuation from an explicit result-and-log pair.
    pub fn pbnd(&self, k: &VFn<'_>, p: &Value) -> Result<Value> {
        let embedded = self.writer_embed(p)?;
        self.bind(k, &embedded)
    }

    /// Map the accumulated log by an arbitrary self-map.
    pub fn logmap(&self, h: &VFn<'_>, t: &Value) -> Result<Value> {
        logmap_at(self.eff(), self.wrt_owner()?, h, t)
    }

    // State operations.

    fn st_owner(&self) -> Result<usize> {
        self.stack.require_owner(EffectKind::State)
    }

    /// Run a state transition returning a result.
    pub fn state(&self, f: &VFn<'_>) -> Result<Value> {
        lift_point(self.eff(), self.st_owner()?, &|sl| {
            let Some((Layer::StateT(s), rest)) = sl.split_first() else {
                return Err(Error::internal("state owner is not a state layer"));
            };
            let entries = s
                .values()?
                .into_iter()
                .map(|sv| unit_at(rest, &f(&sv)?))
                .collect::<Result<Vec<_>>>()?;
            Ok(Value::table(entries))
        })
    }

    pub fn get(&self) -> Result<Value> {
        self.state(&|sv| Ok(Value::pair(sv.clone(), sv.clone())))
    }

    pub fn put(&self, s0: &Value) -> Result<Value> {
        if self.mutation == Mutation::PutIgnoresArgument {
            return self.state(&|sv| Ok(Value::pair(Value::Star, sv.clone())));
        }
        self.state(&|_| Ok(Value::pair(Value::Star, s0.clone())))
    }

    pub fn modify(&self, f: &VFn<'_>) -> Result<Value> {
        self.state(&|sv| Ok(Value::pair(Value::Star, f(sv)?)))
    }
}

fn sum_mismatch(context: &'static str, got: &Value) -> Error {
    Error::MalformedValue {
        context,
        expected: "a sum value",
        got: got.to_string(),
    }
}

fn not_a_layer(context: &'static str) -> Error {
    Error::internal(format!("ran out of layers interpreting {context}"))
}

fn unit_at(layers: &[Layer], v: &Value) -> Result<Value> {
    match layers.split_first() {
        None => Ok(v.clone()),
        Some((Layer::ExceptT(_), rest)) => unit_at(rest, &Value::inr(v.clone())),
        Some((Layer::ReaderT(r), rest)) => {
            let n = r.cardinality()? as usize;
            let cell = unit_at(rest, v)?;
            Ok(Value::table(vec![cell; n]))
        }
        Some((Layer::WriterT(m), rest)) => {
            unit_at(rest, &Value::pair(v.clone(), m.unit_value()))
        }
        Some((Layer::StateT(s), rest)) => {
            let entries = s
                .values()?
                .into_iter()
                .map(|sv| unit_at(rest, &Value::pair(v.clone(), sv)))
                .collect::<Result<Vec<_>>>()?;
            Ok(Value::table(entries))
        }
    }
}

fn fmap_at(layers: &[Layer], f: &VFn<'_>, t: &Value) -> Result<Value> {
    match layers.split_first() {
        None => f(t),
        Some((Layer::ExceptT(_), rest)) => fmap_at(
            rest,
            &|c| match c {
                Value::InL(_) => Ok(c.clone()),
                Value::InR(a) => Ok(Value::inr(f(a)?)),
                other => Err(sum_mismatch("exception cell", other)),
            },
            t,
        ),
        Some((Layer::ReaderT(_), rest)) => {
            let entries = t.as_table("reader computation")?;
            let out = entries
                .iter()
                .map(|e| fmap_at(rest, f, e))
                .collect::<Result<Vec<_>>>()?;
            Ok(Value::table(out))
        }
        Some((Layer::WriterT(_), rest)) => fmap_at(
            rest,
            &|c| {
                let (a, w) = c.as_pair("writer cell")?;
                Ok(Value::pair(f(a)?, w.clone()))
            },
            t,
        ),
        Some((Layer::StateT(_), rest)) => {
            let entries = t.as_table("state computation")?;
            let out = entries
                .iter()
                .map(|e| {
                    fmap_at(
                        rest,
                        &|c| {
                            let (a, s1) = c.as_pair("state cell")?;
                            Ok(Value::pair(f(a)?, s1.clone()))
                        },
                        e,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Value::table(out))
        }
    }
}

fn bind_at(layers: &[Layer], mu: Mutation, k: &VFn<'_>, t: &Value) -> Result<Value> {
    match layers.split_first() {
        None => k(t),
        Some((Layer::ExceptT(_), rest)) => bind_at(
            rest,
            mu,
            &|c| match c {
                Value::InL(_) => unit_at(rest, c),
                Value::InR(a) => k(a),
                other => Err(sum_mismatch("exception cell", other)),
            },
            t,
        ),
        Some((Layer::ReaderT(_), rest)) => {
            let entries = t.as_table("reader computation")?;
            let out = entries
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    bind_at(
                        rest,
                        mu,
                        &|a| {
                            let ka = k(a)?;
                            Ok(ka.as_table("reader continuation")?[i].clone())
                        },
                        e,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Value::table(out))
        }
        Some((Layer::WriterT(m), rest)) => bind_at(
            rest,
            mu,
            &|c| {
                let (a, w1) = c.as_pair("writer cell")?;
                let w1 = w1.clone();
                let ka = k(a)?;
                fmap_at(
                    rest,
                    &|c2| {
                        let (b, w2) = c2.as_pair("writer cell")?;
                        let log = if mu == Mutation::WriterBindDropsSecondLog {
                            w1.clone()
                        } else {
                            m.mult(&w1, w2)?
                        };
                        Ok(Value::pair(b.clone(), log))
                    },
                    &ka,
                )
            },
            t,
        ),
        Some((Layer::StateT(s), rest)) => {
            let entries = t.as_table("state computation")?;
            let out = entries
                .iter()
                .map(|e| {
                    bind_at(
                        rest,
                        mu,
                        &|c| {
                            let (a, s1) = c.as_pair("state cell")?;
                            let ka = k(a)?;
                            ka.apply(s, s1)
                        },
                        e,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Value::table(out))
        }
    }
}

/// Lift a point operation built at the owner through every outer layer.
fn lift_point(
    layers: &[Layer],
    owner: usize,
    mk: &dyn Fn(&[Layer]) -> Result<Value>,
) -> Result<Value> {
    if owner == 0 {
        return mk(layers);
    }
    let Some((outer, rest)) = layers.split_first() else {
        return Err(not_a_layer("a lifted operation"));
    };
    let inner = lift_point(rest, owner - 1, mk)?;
    match outer {
        Layer::ExceptT(_) => fmap_at(rest, &|a| Ok(Value::inr(a.clone())), &inner),
        Layer::ReaderT(r) => {
            let n = r.cardinality()? as usize;
            Ok(Value::table(vec![inner; n]))
        }
        Layer::WriterT(m) => fmap_at(
            rest,
            &|a| Ok(Value::pair(a.clone(), m.unit_value())),
            &inner,
        ),
        Layer::StateT(s) => {
            let entries = s
                .values()?
                .into_iter()
                .map(|sv| {
                    fmap_at(rest, &|a| Ok(Value::pair(a.clone(), sv.clone())), &inner)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Value::table(entries))
        }
    }
}

fn raise_at(layers: &[Layer], owner: usize, ev: &Value) -> Result<Value> {
    lift_point(layers, owner, &|sl| {
        let Some((Layer::ExceptT(_), rest)) = sl.split_first() else {
            return Err(Error::internal("exception owner is not an exception layer"));
        };
        unit_at(rest, &Value::inl(ev.clone()))
    })
}

fn catch_at(layers: &[Layer], mu: Mutation, owner: usize, h: &VFn<'_>, t: &Value) -> Result<Value> {
    if owner == 0 {
        let Some((Layer::ExceptT(_), rest)) = layers.split_first() else {
            return Err(Error::internal("exception owner is not an exception layer"));
        };
        return bind_at(
            rest,
            mu,
            &|c| match c {
                Value::InL(ev) => {
                    if mu == Mutation::CatchNeverHandles {
                        unit_at(rest, c)
                    } else {
                        h(ev)
                    }
                }
                Value::InR(_) => unit_at(rest, c),
                other => Err(sum_mismatch("exception cell", other)),
            },
            t,
        );
    }
    let Some((outer, rest)) = layers.split_first() else {
        return Err(not_a_layer("catch"));
    };
    match outer {
        Layer::ExceptT(_) | Layer::WriterT(_) => catch_at(rest, mu, owner - 1, h, t),
        Layer::ReaderT(_) | Layer::StateT(_) => {
            let entries = t.as_table("computation")?;
            let out = entries
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    // The handler runs under the same environment, or from
                    // the entry state, as the guarded computation.
                    catch_at(
                        rest,
                        mu,
                        owner - 1,
                        &|ev| Ok(h(ev)?.as_table("handler result")?[i].clone()),
                        e,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Value::table(out))
        }
    }
}

fn exc_bimap_at(
    layers: &[Layer],
    owner: usize,
    h: &VFn<'_>,
    f: &VFn<'_>,
    t: &Value,
) -> Result<Value> {
    if owner == 0 {
        let Some((Layer::ExceptT(_), rest)) = layers.split_first() else {
            return Err(Error::internal("exception owner is not an exception layer"));
        };
        return fmap_at(
            rest,
            &|c| match c {
                Value::InL(ev) => Ok(Value::inl(h(ev)?)),
                Value::InR(a) => Ok(Value::inr(f(a)?)),
                other => Err(sum_mismatch("exception cell", other)),
            },
            t,
        );
    }
    let Some((outer, rest)) = layers.split_first() else {
        return Err(not_a_layer("bimap"));
    };
    match outer {
        Layer::ExceptT(_) => exc_bimap_at(
            rest,
            owner - 1,
            h,
            &|c| match c {
                Value::InL(_) => Ok(c.clone()),
                Value::InR(a) => Ok(Value::inr(f(a)?)),
                other => Err(sum_mismatch("outer exception cell", other)),
            },
            t,
        ),
        Layer::WriterT(_) => exc_bimap_at(
            rest,
            owner - 1,
            h,
            &|c| {
                let (a, w) = c.as_pair("writer cell")?;
                Ok(Value::pair(f(a)?, w.clone()))
            },
            t,
        ),
        Layer::ReaderT(_) => {
            let entries = t.as_table("computation")?;
            let out = entries
                .iter()
                .map(|e| exc_bimap_at(rest, owner - 1, h, f, e))
                .collect::<Result<Vec<_>>>()?;
            Ok(Value::table(out))
        }
        Layer::StateT(_) => {
            let entries = t.as_table("computation")?;
            let out = entries
                .iter()
                .map(|e| {
                    exc_bimap_at(
                        rest,
                        owner - 1,
                        h,
                        &|c| {
                            let (a, s1) = c.as_pair("state cell")?;
                            Ok(Value::pair(f(a)?, s1.clone()))
                        },
                        e,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Value::table(out))
        }
    }
}

fn handle_at(
    layers: &[Layer],
    mu: Mutation,
    owner: usize,
    k: &VFn<'_>,
    t: &Value,
) -> Result<Value> {
    // Widen both outcomes into the error slot, resolve that slot with a
    // catch that re-raises genuine errors, then bind the joint continuation.
    let widened = exc_bimap_at(
        layers,
        owner,
        &|ev| Ok(Value::inr(Value::inl(ev.clone()))),
        &|a| Ok(Value::inr(a.clone())),
        t,
    )?;
    let squashed = catch_at(
        layers,
        mu,
        owner,
        &|c| match c {
            Value::InL(e2) => raise_at(layers, owner, e2),
            Value::InR(s) => unit_at(layers, s),
            other => Err(sum_mismatch("widened outcome", other)),
        },
        &widened,
    )?;
    bind_at(layers, mu, k, &squashed)
}

fn mixmap_exc_at(
    layers: &[Layer],
    mu: Mutation,
    owner: usize,
    g: &VFn<'_>,
    t: &Value,
) -> Result<Value> {
    handle_at(
        layers,
        mu,
        owner,
        &|s| match g(s)? {
            Value::InL(e2) => raise_at(layers, owner, &e2),
            Value::InR(a) => unit_at(layers, &a),
            other => Err(sum_mismatch("mixmap image", &other)),
        },
        t,
    )
}

fn local_at(layers: &[Layer], owner: usize, h: &VFn<'_>, t: &Value) -> Result<Value> {
    if owner == 0 {
        let Some((Layer::ReaderT(r), _)) = layers.split_first() else {
            return Err(Error::internal("reader owner is not a reader layer"));
        };
        let entries = t.as_table("reader computation")?;
        let out = r
            .values()?
            .into_iter()
            .map(|rv| {
                let idx = r.index_of(&h(&rv)?)? as usize;
                Ok(entries[idx].clone())
            })
            .collect::<Result<Vec<_>>>()?;
        return Ok(Value::table(out));
    }
    let Some((outer, rest)) = layers.split_first() else {
        return Err(not_a_layer("local"));
    };
    match outer {
        Layer::ExceptT(_) | Layer::WriterT(_) => local_at(rest, owner - 1, h, t),
        Layer::ReaderT(_) | Layer::StateT(_) => {
            let entries = t.as_table("computation")?;
            let out = entries
                .iter()
                .map(|e| local_at(rest, owner - 1, h, e))
                .collect::<Result<Vec<_>>>()?;
            Ok(Value::table(out))
        }
    }
}

fn apply_at(layers: &[Layer], t: &Value, r_idx: usize) -> Result<Value> {
    match layers.split_first() {
        None => Ok(t.as_table("reader base computation")?[r_idx].clone()),
        Some((Layer::ExceptT(_) | Layer::WriterT(_), rest)) => apply_at(rest, t, r_idx),
        Some((Layer::ReaderT(_) | Layer::StateT(_), rest)) => {
            let entries = t.as_table("computation")?;
            let out = entries
                .iter()
                .map(|e| apply_at(rest, e, r_idx))
                .collect::<Result<Vec<_>>>()?;
            Ok(Value::table(out))
        }
    }
}

fn abstr_at(
    layers: &[Layer],
    base_card: usize,
    u: &dyn Fn(usize) -> Result<Value>,
) -> Result<Value> {
    match layers.split_first() {
        None => {
            let entries = (0..base_card).map(u).collect::<Result<Vec<_>>>()?;
            Ok(Value::table(entries))
        }
        Some((Layer::ExceptT(_) | Layer::WriterT(_), rest)) => abstr_at(rest, base_card, u),
        Some((Layer::ReaderT(_) | Layer::StateT(_), rest)) => {
            let width = u(0)?.as_table("computation")?.len();
            let out = (0..width)
                .map(|j| {
                    abstr_at(rest, base_card, &|i| {
                        Ok(u(i)?.as_table("computation")?[j].clone())
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Value::table(out))
        }
    }
}

fn listen_at(layers: &[Layer], owner: usize, t: &Value) -> Result<Value> {
    if owner == 0 {
        let Some((Layer::WriterT(_), rest)) = layers.split_first() else {
            return Err(Error::internal("writer owner is not a writer layer"));
        };
        return fmap_at(
            rest,
            &|c| {
                let (a, wv) = c.as_pair("writer cell")?;
                Ok(Value::pair(
                    Value::pair(a.clone(), wv.clone()),
                    wv.clone(),
                ))
            },
            t,
        );
    }
    let Some((outer, rest)) = layers.split_first() else {
        return Err(not_a_layer("listen"));
    };
    match outer {
        Layer::ReaderT(_) => {
            let entries = t.as_table("computation")?;
            let out = entries
                .iter()
                .map(|e| listen_at(rest, owner - 1, e))
                .collect::<Result<Vec<_>>>()?;
            Ok(Value::table(out))
        }
        Layer::StateT(_) => {
            let entries = t.as_table("computation")?;
            let out = entries
                .iter()
                .map(|e| {
                    let inner = listen_at(rest, owner - 1, e)?;
                    // Swap the surfaced log inside the state cell.
                    fmap_at(
                        rest,
                        &|c| {
                            let (p, wv) = c.as_pair("listened cell")?;
                            let (a, s1) = p.as_pair("state cell")?;
                            Ok(Value::pair(
                                Value::pair(a.clone(), wv.clone()),
                                s1.clone(),
                            ))
                        },
                        &inner,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Value::table(out))
        }
        Layer::WriterT(_) => {
            let inner = listen_at(rest, owner - 1, t)?;
            fmap_at(
                rest,
                &|c| {
                    let (p, wv) = c.as_pair("listened cell")?;
                    let (a, w0) = p.as_pair("outer writer cell")?;
                    Ok(Value::pair(
                        Value::pair(a.clone(), wv.clone()),
                        w0.clone(),
                    ))
                },
                &inner,
            )
        }
        Layer::ExceptT(_) => {
            let inner = listen_at(rest, owner - 1, t)?;
            fmap_at(
                rest,
                &|c| {
                    let (s, wv) = c.as_pair("listened cell")?;
                    match s {
                        Value::InL(_) => Ok(s.clone()),
                        Value::InR(a) => {
                            Ok(Value::inr(Value::pair((**a).clone(), wv.clone())))
                        }
                        other => Err(sum_mismatch("exception cell", other)),
                    }
                },
                &inner,
            )
        }
    }
}

fn pass_at(layers: &[Layer], owner: usize, w: &FinType, t: &Value) -> Result<Value> {
    if owner == 0 {
        let Some((Layer::WriterT(_), rest)) = layers.split_first() else {
            return Err(Error::internal("writer owner is not a writer layer"));
        };
        return fmap_at(
            rest,
            &|c| {
                let (p, wv) = c.as_pair("pass cell")?;
                let (a, fv) = p.as_pair("pass cell")?;
                Ok(Value::pair(a.clone(), fv.apply(w, wv)?))
            },
            t,
        );
    }
    let Some((outer, rest)) = layers.split_first() else {
        return Err(not_a_layer("pass"));
    };
    match outer {
        Layer::ReaderT(_) => {
            let entries = t.as_table("computation")?;
            let out = entries
                .iter()
                .map(|e| pass_at(rest, owner - 1, w, e))
                .collect::<Result<Vec<_>>>()?;
            Ok(Value::table(out))
        }
        Layer::StateT(_) => {
            let entries = t.as_table("computation")?;
            let out = entries
                .iter()
                .map(|e| {
                    // Move the self-map outside the state cell, then pass.
                    let swapped = fmap_at(
                        rest,
                        &|c| {
                            let (p, s1) = c.as_pair("state cell")?;
                            let (a, fv) = p.as_pair("pass cell")?;
                            Ok(Value::pair(
                                Value::pair(a.clone(), s1.clone()),
                                fv.clone(),
                            ))
                        },
                        e,
                    )?;
                    pass_at(rest, owner - 1, w, &swapped)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Value::table(out))
        }
        Layer::WriterT(_) => {
            let swapped = fmap_at(
                rest,
                &|c| {
                    let (p, w0) = c.as_pair("outer writer cell")?;
                    let (a, fv) = p.as_pair("pass cell")?;
                    Ok(Value::pair(
                        Value::pair(a.clone(), w0.clone()),
                        fv.clone(),
                    ))
                },
                t,
            )?;
            pass_at(rest, owner - 1, w, &swapped)
        }
        Layer::ExceptT(_) => {
            let identity = identity_table(w)?;
            let swapped = fmap_at(
                rest,
                &|c| match c {
                    Value::InL(_) => Ok(Value::pair(c.clone(), identity.clone())),
                    Value::InR(p) => {
                        let (a, fv) = p.as_pair("pass cell")?;
                        Ok(Value::pair(Value::inr(a.clone()), fv.clone()))
                    }
                    other => Err(sum_mismatch("exception cell", other)),
                },
                t,
            )?;
            pass_at(rest, owner - 1, w, &swapped)
        }
    }
}

fn identity_table(dom: &FinType) -> Result<Value> {
    Ok(Value::table(dom.values()?))
}

fn logmap_at(layers: &[Layer], owner: usize, h: &VFn<'_>, t: &Value) -> Result<Value> {
    if owner == 0 {
        let Some((Layer::WriterT(_), rest)) = layers.split_first() else {
            return Err(Error::internal("writer owner is not a writer layer"));
        };
        return fmap_at(
            rest,
            &|c| {
                let (a, wv) = c.as_pair("writer cell")?;
                Ok(Value::pair(a.clone(), h(wv)?))
            },
            t,
        );
    }
    let Some((outer, rest)) = layers.split_first() else {
        return Err(not_a_layer("logmap"));
    };
    match outer {
        Layer::ExceptT(_) | Layer::WriterT(_) => logmap_at(rest, owner - 1, h, t),
        Layer::ReaderT(_) | Layer::StateT(_) => {
            let entries = t.as_table("computation")?;
            let out = entries
                .iter()
                .map(|e| logmap_at(rest, owner - 1, h, e))
                .collect::<Result<Vec<_>>>()?;
            Ok(Value::table(out))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(text: &str) -> Model {
        Model::new(StackSpec::parse(text).unwrap())
    }

    fn elem(i: u64) -> Value {
        Value::Elem(i)
    }

    #[test]
    fn identity_stack_is_transparent() {
        let m = model("Id");
        assert_eq!(m.unit(&elem(1)).unwrap(), elem(1));
        let doubled = m
            .bind(&|v| Ok(Value::pair(v.clone(), v.clone())), &elem(1))
            .unwrap();
        assert_eq!(doubled, Value::pair(elem(1), elem(1)));
        assert_eq!(m.fmap(&|v| Ok(Value::inl(v.clone())), &elem(0)).unwrap(), Value::inl(elem(0)));
    }

    #[test]
    fn plain_exception_semantics() {
        let m = model("ExceptT(e=2).Id");
        assert_eq!(m.unit(&elem(0)).unwrap(), Value::inr(elem(0)));
        assert_eq!(m.raise(&elem(1)).unwrap(), Value::inl(elem(1)));
        let k = |v: &Value| Ok(Value::inr(Value::pair(v.clone(), v.clone())));
        assert_eq!(
            m.bind(&k, &Value::inl(elem(0))).unwrap(),
            Value::inl(elem(0))
        );
        assert_eq!(
            m.bind(&k, &Value::inr(elem(1))).unwrap(),
            Value::inr(Value::pair(elem(1), elem(1)))
        );
        let h = |ev: &Value| Ok(Value::inr(ev.clone()));
        assert_eq!(
            m.catch(&h, &Value::inl(elem(1))).unwrap(),
            Value::inr(elem(1))
        );
        assert_eq!(
            m.catch(&h, &Value::inr(elem(0))).unwrap(),
            Value::inr(elem(0))
        );
    }

    #[test]
    fn raise_under_an_outer_writer_carries_no_log() {
        let m = model("WriterT(Z2).ExceptT(e=2).Id");
        assert_eq!(m.raise(&elem(1)).unwrap(), Value::inl(elem(1)));
        assert_eq!(
            m.unit(&elem(0)).unwrap(),
            Value::inr(Value::pair(elem(0), elem(0)))
        );
    }

    #[test]
    fn writer_embed_tags_success_when_failures_sit_outside() {
        let m = model("WriterT(Z2).ExceptT(e=2).Id");
        let p = Value::pair(elem(1), elem(1));
        assert_eq!(m.writer_embed(&p).unwrap(), Value::inr(p));
    }

    #[test]
    fn environment_family_threads_state_through() {
        let m = model("ReaderBase(r=2, StateT(s=2).Id)");
        let got = m.rho(&|rv| Ok(rv.clone())).unwrap();
        let expected = Value::table(vec![
            Value::table(vec![
                Value::pair(elem(0), elem(0)),
                Value::pair(elem(1), elem(0)),
            ]),
            Value::table(vec![
                Value::pair(elem(0), elem(1)),
                Value::pair(elem(1), elem(1)),
            ]),
        ]);
        assert_eq!(got, expected);
    }

    #[test]
    fn ask_reads_the_environment_and_local_shifts_it() {
        let m = model("ReaderT(r=3).Id");
        assert_eq!(
            m.ask().unwrap(),
            Value::table(vec![elem(0), elem(1), elem(2)])
        );
        let h = |rv: &Value| {
            let i = rv.as_elem("test")?;
            Ok(elem((i + 1) % 3))
        };
        assert_eq!(
            m.local(&h, &m.ask().unwrap()).unwrap(),
            Value::table(vec![elem(1), elem(2), elem(0)])
        );
    }

    #[test]
    fn state_operations_interlock() {
        let m = model("StateT(s=2).Id");
        assert_eq!(
            m.get().unwrap(),
            Value::table(vec![
                Value::pair(elem(0), elem(0)),
                Value::pair(elem(1), elem(1)),
            ])
        );
        assert_eq!(
            m.put(&elem(1)).unwrap(),
            Value::table(vec![Value::pair(Value::Star, elem(1)); 2])
        );
        let put1 = m.put(&elem(1)).unwrap();
        let lhs = m.bind(&|_| m.get(), &put1).unwrap();
        let rhs = m.bind(&|_| m.unit(&elem(1)), &put1).unwrap();
        assert_eq!(lhs, rhs);
        let modified = m.modify(&|sv| Ok(elem(1 - sv.as_elem("test")?))).unwrap();
        assert_eq!(
            modified,
            Value::table(vec![
                Value::pair(Value::Star, elem(1)),
                Value::pair(Value::Star, elem(0)),
            ])
        );
    }

    #[test]
    fn fmap_agrees_with_bind_after_unit() {
        let stacks = [
            "Id",
            "ExceptT(e=2).Id",
            "StateT(s=2).Id",
            "WriterT(Z2).ExceptT(e=2).Id",
            "ExceptT(e=2).StateT(s=2).Id",
            "ReaderBase(r=2, WriterT(Z2).Id)",
        ];
        let x = FinType::Enum(2);
        let f = |v: &Value| Ok(elem(1 - v.as_elem("test")?));
        for text in stacks {
            let m = model(text);
            let carrier = m.carrier(&x).unwrap();
            for t in carrier.values().unwrap() {
                let via_fmap = m.fmap(&f, &t).unwrap();
                let via_bind = m.bind(&|a| m.unit(&f(a)?), &t).unwrap();
                assert_eq!(via_fmap, via_bind, "{text}");
            }
        }
    }

    #[test]
    fn joint_continuation_collapses_on_the_plain_stack() {
        let m = model("ExceptT(e=2).Id");
        let k = |s: &Value| match s {
            Value::InL(ev) => Ok(Value::inr((**ev).clone())),
            Value::InR(a) => Ok(Value::inl((**a).clone())),
            other => Err(sum_mismatch("test", other)),
        };
        for t in m.carrier(&FinType::Enum(2)).unwrap().values().unwrap() {
            assert_eq!(m.handle(&k, &t).unwrap(), k(&t).unwrap());
        }
    }

    #[test]
    fn fuse_undoes_shift_under_an_exception() {
        let m = model("ExceptT(e=2).WriterT(Z2).Id");
        let carrier = m.carrier(&FinType::Enum(2)).unwrap();
        for t in carrier.values().unwrap() {
            let shifted = m.shift(&t).unwrap();
            assert_eq!(m.fuse(&shifted).unwrap(), t);
        }
    }

    #[test]
    fn two_story_merge_multiplies_the_later_log_on_the_right() {
        let m = model("WriterT(T2).Id");
        // Inner story logged const-0 first, outer swap was logged later:
        // merging applies swap after const-0, giving const-1.
        let q = Value::pair(Value::pair(Value::Star, elem(0)), elem(2));
        assert_eq!(m.fuse(&q).unwrap(), Value::pair(Value::Star, elem(3)));
    }

    #[test]
    fn pbnd_multiplies_the_explicit_log_on_the_left() {
        let m = model("WriterT(T2).Id");
        let k = |a: &Value| Ok(Value::pair(a.clone(), elem(2)));
        let p = Value::pair(Value::Star, elem(0));
        assert_eq!(m.pbnd(&k, &p).unwrap(), Value::pair(Value::Star, elem(0)));
    }

    #[test]
    fn collapsing_logs_before_or_after_a_continuation_differs() {
        // The classic failure: precomposing with the unit-log embedding does
        // not cancel a continuation that reads the log.
        let m = model("WriterT(Z2).Id");
        let h = |p: &Value| {
            let (a, _) = p.as_pair("test")?;
            Ok(Value::pair(a.clone(), elem(0)))
        };
        let eta = |a: &Value| Value::pair(a.clone(), elem(0));
        let p = Value::pair(Value::Star, elem(1));
        let lhs = m.pbnd(&|a| h(&eta(a)), &p).unwrap();
        let rhs = h(&p).unwrap();
        assert_eq!(lhs, Value::pair(Value::Star, elem(1)));
        assert_eq!(rhs, Value::pair(Value::Star, elem(0)));
    }

    #[test]
    fn listen_surfaces_the_designated_log_across_an_outer_writer() {
        let m = model("WriterT(Z2).WriterT(T2).Id");
        let v = Value::pair(Value::pair(elem(1), elem(1)), elem(2));
        let got = m.listen(&v).unwrap();
        let expected = Value::pair(
            Value::pair(Value::pair(elem(1), elem(2)), elem(1)),
            elem(2),
        );
        assert_eq!(got, expected);
    }

    #[test]
    fn dropping_the_surfaced_log_undoes_listen() {
        for text in [
            "WriterT(Z2).Id",
            "WriterT(Z2).WriterT(T2).Id",
            "ExceptT(e=2).WriterT(Z2).Id",
            "StateT(s=2).WriterT(Z2).Id",
            "ReaderT(r=2).WriterT(Z2).Id",
        ] {
            let m = model(text);
            let carrier = m.carrier(&FinType::Enum(2)).unwrap();
            for t in carrier.values().unwrap() {
                let listened = m.listen(&t).unwrap();
                let back = m
                    .fmap(&|c| Ok(c.as_pair("test")?.0.clone()), &listened)
                    .unwrap();
                assert_eq!(back, t, "{text}");
            }
        }
    }

    #[test]
    fn handler_restarts_from_the_entry_state() {
        let m = model("StateT(s=2).ExceptT(e=2).Id");
        let t = Value::table(vec![Value::inl(elem(0)), Value::inl(elem(0))]);
        let h = |_: &Value| m.get();
        assert_eq!(
            m.catch(&h, &t).unwrap(),
            Value::table(vec![
                Value::inr(Value::pair(elem(0), elem(0))),
                Value::inr(Value::pair(elem(1), elem(1))),
            ])
        );
    }

    #[test]
    fn failed_computations_keep_their_log_through_catch() {
        let m = model("ExceptT(e=2).WriterT(Z2).Id");
        let failed = Value::pair(Value::inl(elem(0)), elem(1));
        let h = |_: &Value| m.unit(&elem(0));
        assert_eq!(
            m.catch(&h, &failed).unwrap(),
            Value::pair(Value::inr(elem(0)), elem(1))
        );
    }

    #[test]
    fn base_view_and_rebuild_are_inverse() {
        for (stack, family) in [
            ("ReaderBase(r=2, ExceptT(e=2).Id)", "Fn(2, Sum(2, 2))"),
            ("ReaderBase(r=2, StateT(s=2).Id)", "Fn(2, Fn(2, Prod(2, 2)))"),
        ] {
            let m = model(stack);
            let carrier = m.carrier(&FinType::Enum(2)).unwrap();
            for t in carrier.values().unwrap() {
                let u = m.apply_reader(&t).unwrap();
                assert_eq!(m.abstr_reader(&u).unwrap(), t, "{stack}");
            }
            let family = FinType::parse(family).unwrap();
            for u in family.values().unwrap() {
                let t = m.abstr_reader(&u).unwrap();
                assert_eq!(m.apply_reader(&t).unwrap(), u, "{stack}");
            }
        }
    }

    #[test]
    fn fusel_and_fuser_collapse_the_right_side() {
        let m = model("ExceptT(e=2).Id");
        // fusel : raised-or-returned errors collapse into the error slot
        assert_eq!(
            m.fusel(&Value::inr(Value::inl(elem(1)))).unwrap(),
            Value::inl(elem(1))
        );
        assert_eq!(
            m.fusel(&Value::inr(Value::inr(elem(0)))).unwrap(),
            Value::inr(elem(0))
        );
        assert_eq!(m.fusel(&Value::inl(elem(0))).unwrap(), Value::inl(elem(0)));
        // fuser : a returned error-or-result collapses into the result slot
        assert_eq!(
            m.fuser(&Value::inr(Value::inl(elem(1)))).unwrap(),
            Value::inl(elem(1))
        );
        assert_eq!(
            m.fuser(&Value::inr(Value::inr(elem(0)))).unwrap(),
            Value::inr(elem(0))
        );
    }

    #[test]
    fn mutations_change_exactly_the_advertised_operation() {
        let spec = StackSpec::parse("WriterT(Z2).Id").unwrap();
        let clean = Model::new(spec.clone());
        let broken = Model::with_mutation(spec, Mutation::WriterBindDropsSecondLog);
        let tell_twice = |m: &Model| {
            let first = m.tell(&elem(1)).unwrap();
            m.bind(&|_| m.tell(&elem(1)), &first).unwrap()
        };
        assert_eq!(tell_twice(&clean), Value::pair(Value::Star, elem(0)));
        assert_eq!(tell_twice(&broken), Value::pair(Value::Star, elem(1)));

        let spec = StackSpec::parse("StateT(s=2).Id").unwrap();
        let clean = Model::new(spec.clone());
        let broken = Model::with_mutation(spec, Mutation::PutIgnoresArgument);
        assert_ne!(clean.put(&elem(1)).unwrap(), broken.put(&elem(1)).unwrap());
        assert_eq!(clean.get().unwrap(), broken.get().unwrap());

        let spec = StackSpec::parse("ExceptT(e=2).Id").unwrap();
        let clean = Model::new(spec.clone());
        let broken = Model::with_mutation(spec, Mutation::CatchNeverHandles);
        let h = |ev: &Value| Ok(Value::inr(ev.clone()));
        assert_eq!(
            clean.catch(&h, &Value::inl(elem(1))).unwrap(),
            Value::inr(elem(1))
        );
        assert_eq!(
            broken.catch(&h, &Value::inl(elem(1))).unwrap(),
            Value::inl(elem(1))
        );
    }

    #[test]
    fn operations_without_a_matching_layer_are_refused() {
        let m = model("StateT(s=2).Id");
        assert!(matches!(
            m.raise(&elem(0)),
            Err(Error::NoSuchEffect { .. })
        ));
        assert!(matches!(m.ask(), Err(Error::NoSuchEffect { .. })));
        assert!(matches!(
            m.tell(&elem(0)),
            Err(Error::NoSuchEffect { .. })
        ));
        let m = model("ReaderT(r=2).Id");
        assert!(matches!(
            m.apply_reader(&Value::table(vec![elem(0), elem(0)])),
            Err(Error::NoSuchEffect { .. })
        ));
    }
}
