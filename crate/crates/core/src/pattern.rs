//! Atom-pattern language shared by the schema ledger and the derived-rule file.
//!
//! A literal is `[!]PRED(arg[,arg])`. Arguments are `agent`, `x`, `y`, an
//! existential variable, or `*` (delete patterns only). Predicates are relation
//! kinds, state tokens, `prop:NAME`, `name:NAME`, or one of the builtins below.

use std::fmt;

use crate::env::{EnvironmentState, ObjectId, Relation, RelationKind, StateToken};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("bad pattern `{text}`: {reason}")]
pub struct PatternError {
    pub text: String,
    pub reason: String,
}

fn perr(text: &str, reason: impl Into<String>) -> PatternError {
    PatternError { text: text.to_string(), reason: reason.into() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Term {
    Agent,
    X,
    Y,
    /// Existential variable of the enclosing clause.
    Var,
    Any,
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Term::Agent => "agent",
            Term::X => "x",
            Term::Y => "y",
            Term::Var => "?",
            Term::Any => "*",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Pred {
    Rel(RelationKind),
    State(StateToken),
    Prop(String),
    Name(String),
    /// Either hand.
    Holds,
    /// Close to, or holding.
    Reach,
    FreeHand,
    /// Not inside a closed openable container.
    Accessible,
    Paired,
    /// Effect-only: first argument joins the room of the second.
    InRoom,
    /// Effect-only: agent becomes close to every object directly inside a room.
    NearContents,
}

impl Pred {
    fn arity(&self) -> usize {
        match self {
            Pred::Rel(_) | Pred::Holds | Pred::Reach | Pred::Paired | Pred::InRoom | Pred::NearContents => 2,
            Pred::State(_) | Pred::Prop(_) | Pred::Name(_) | Pred::FreeHand | Pred::Accessible => 1,
        }
    }

    fn effect_only(&self) -> bool {
        matches!(self, Pred::InRoom | Pred::NearContents)
    }
}

impl fmt::Display for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pred::Rel(k) => write!(f, "{k}"),
            Pred::State(t) => write!(f, "{t}"),
            Pred::Prop(p) => write!(f, "prop:{p}"),
            Pred::Name(n) => write!(f, "name:{n}"),
            Pred::Holds => f.write_str("HOLDS"),
            Pred::Reach => f.write_str("REACH"),
            Pred::FreeHand => f.write_str("FREE_HAND"),
            Pred::Accessible => f.write_str("ACCESSIBLE"),
            Pred::Paired => f.write_str("PAIRED"),
            Pred::InRoom => f.write_str("IN_ROOM"),
            Pred::NearContents => f.write_str("NEAR_CONTENTS"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Literal {
    pub negated: bool,
    pub pred: Pred,
    pub args: Vec<Term>,
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            f.write_str("!")?;
        }
        write!(f, "{}(", self.pred)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

/// Where a literal is used; controls which forms are legal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Context {
    Condition,
    AddEffect,
    DeleteEffect,
}

impl Literal {
    pub fn parse(text: &str, ctx: Context, var: Option<&str>) -> Result<Literal, PatternError> {
        let s = text.trim();
        let (negated, s) = match s.strip_prefix('!') {
            Some(rest) => (true, rest.trim_start()),
            None => (false, s),
        };
        let open = s.find('(').ok_or_else(|| perr(text, "missing `(`"))?;
        if !s.ends_with(')') {
            return Err(perr(text, "missing `)`"));
        }
        let head = s[..open].trim();
        let inner = &s[open + 1..s.len() - 1];
        let pred = if let Some(p) = head.strip_prefix("prop:") {
            Pred::Prop(p.to_string())
        } else if let Some(n) = head.strip_prefix("name:") {
            Pred::Name(n.to_string())
        } else {
            match head {
                "HOLDS" => Pred::Holds,
                "REACH" => Pred::Reach,
                "FREE_HAND" => Pred::FreeHand,
                "ACCESSIBLE" => Pred::Accessible,
                "PAIRED" => Pred::Paired,
                "IN_ROOM" => Pred::InRoom,
                "NEAR_CONTENTS" => Pred::NearContents,
                other => {
                    if let Ok(k) = other.parse::<RelationKind>() {
                        Pred::Rel(k)
                    } else if let Ok(t) = other.parse::<StateToken>() {
                        Pred::State(t)
                    } else {
                        return Err(perr(text, format!("unknown predicate `{other}`")));
                    }
                }
            }
        };
        let args = inner
            .split(',')
            .map(|a| match a.trim() {
                "agent" => Ok(Term::Agent),
                "x" => Ok(Term::X),
                "y" => Ok(Term::Y),
                "*" => Ok(Term::Any),
                v if Some(v) == var => Ok(Term::Var),
                other => Err(perr(text, format!("unknown argument `{other}`"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        if args.len() != pred.arity() {
            return Err(perr(text, format!("{pred} takes {} argument(s), got {}", pred.arity(), args.len())));
        }
        let lit = Literal { negated, pred, args };
        lit.validate(text, ctx)?;
        Ok(lit)
    }

    fn validate(&self, text: &str, ctx: Context) -> Result<(), PatternError> {
        let wildcard = self.args.contains(&Term::Any);
        match ctx {
            Context::Condition => {
                if wildcard {
                    return Err(perr(text, "`*` is only allowed in delete patterns"));
                }
                if self.pred.effect_only() {
                    return Err(perr(text, "effect-only predicate in a condition"));
                }
            }
            Context::AddEffect => {
                if self.negated || wildcard {
                    return Err(perr(text, "add effects must be positive and ground"));
                }
                if !matches!(self.pred, Pred::Rel(_) | Pred::State(_) | Pred::Holds | Pred::InRoom | Pred::NearContents)
                {
                    return Err(perr(text, "predicate cannot be added"));
                }
            }
            Context::DeleteEffect => {
                if self.negated {
                    return Err(perr(text, "delete patterns must be positive"));
                }
                if !matches!(self.pred, Pred::Rel(_) | Pred::State(_) | Pred::Holds) {
                    return Err(perr(text, "predicate cannot be deleted"));
                }
                if self.args.iter().all(|a| *a == Term::Any) {
                    return Err(perr(text, "delete pattern needs one bound argument"));
                }
                if wildcard && !matches!(self.pred, Pred::Rel(_)) {
                    return Err(perr(text, "`*` only applies to relations"));
                }
            }
        }
        Ok(())
    }

    /// Mentions `term` in any position.
    pub fn mentions(&self, term: Term) -> bool {
        self.args.contains(&term)
    }
}

/// A precondition clause.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Clause {
    /// Disjunction of literals; a single literal is the common case.
    AnyOf(Vec<Literal>),
    /// Some object satisfies every literal when bound to the clause variable.
    Exists(Vec<Literal>),
}

impl Clause {
    pub fn parse(text: &str) -> Result<Clause, PatternError> {
        let s = text.trim();
        if let Some(rest) = s.strip_prefix("exists ") {
            let (var, body) = rest.split_once(':').ok_or_else(|| perr(text, "expected `exists v: ...`"))?;
            let var = var.trim();
            if matches!(var, "agent" | "x" | "y" | "*" | "") {
                return Err(perr(text, "existential variable shadows a reserved name"));
            }
            let lits = body
                .split('&')
                .map(|l| Literal::parse(l, Context::Condition, Some(var)))
                .collect::<Result<Vec<_>, _>>()?;
            if !lits.iter().any(|l| l.mentions(Term::Var)) {
                return Err(perr(text, "existential variable is never used"));
            }
            return Ok(Clause::Exists(lits));
        }
        let lits = s.split('|').map(|l| Literal::parse(l, Context::Condition, None)).collect::<Result<Vec<_>, _>>()?;
        Ok(Clause::AnyOf(lits))
    }

    pub fn mentions(&self, term: Term) -> bool {
        match self {
            Clause::AnyOf(l) | Clause::Exists(l) => l.iter().any(|l| l.mentions(term)),
        }
    }

    /// The single static `prop:`/`name:` test this clause reduces to, if any.
    pub fn static_test(&self) -> Option<&Literal> {
        match self {
            Clause::AnyOf(l) if l.len() == 1 && matches!(l[0].pred, Pred::Prop(_) | Pred::Name(_)) => Some(&l[0]),
            _ => None,
        }
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Clause::AnyOf(lits) => {
                for (i, l) in lits.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" | ")?;
                    }
                    write!(f, "{l}")?;
                }
                Ok(())
            }
            Clause::Exists(lits) => {
                f.write_str("exists ?: ")?;
                for (i, l) in lits.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" & ")?;
                    }
                    write!(f, "{l}")?;
                }
                Ok(())
            }
        }
    }
}

/// Assignment of the pattern variables to concrete objects.
#[derive(Clone, Copy, Debug)]
pub struct Binding {
    pub agent: ObjectId,
    pub x: Option<ObjectId>,
    pub y: Option<ObjectId>,
    pub var: Option<ObjectId>,
}

impl Binding {
    pub fn new(agent: ObjectId) -> Self {
        Binding { agent, x: None, y: None, var: None }
    }

    pub fn resolve(&self, term: Term) -> Option<ObjectId> {
        match term {
            Term::Agent => Some(self.agent),
            Term::X => self.x,
            Term::Y => self.y,
            Term::Var => self.var,
            Term::Any => None,
        }
    }
}

pub(crate) fn holds(state: &EnvironmentState, a: ObjectId, b: ObjectId) -> bool {
    state.has_relation(a, RelationKind::HoldsRh, b) || state.has_relation(a, RelationKind::HoldsLh, b)
}

pub(crate) fn free_hand(state: &EnvironmentState, a: ObjectId) -> bool {
    state.relations_from(a, RelationKind::HoldsRh).is_empty()
        || state.relations_from(a, RelationKind::HoldsLh).is_empty()
}

pub(crate) fn accessible(state: &EnvironmentState, a: ObjectId) -> bool {
    state.relations_from(a, RelationKind::Inside).iter().all(|r| {
        let container = state.node(r.object);
        !(container.has_property("CAN_OPEN") && state.has_state(r.object, StateToken::Closed))
    })
}

/// Truth value of a ground literal. Unbound arguments evaluate to false.
pub fn eval_literal(lit: &Literal, state: &EnvironmentState, b: &Binding) -> bool {
    let arg = |i: usize| b.resolve(lit.args[i]);
    let value = (|| -> Option<bool> {
        Some(match &lit.pred {
            Pred::Rel(k) => state.has_relation(arg(0)?, *k, arg(1)?),
            Pred::State(t) => state.has_state(arg(0)?, *t),
            Pred::Prop(p) => state.node(arg(0)?).has_property(p),
            Pred::Name(n) => state.node(arg(0)?).name == *n,
            Pred::Holds => holds(state, arg(0)?, arg(1)?),
            Pred::Reach => {
                let (a, o) = (arg(0)?, arg(1)?);
                state.has_relation(a, RelationKind::Close, o) || holds(state, a, o)
            }
            Pred::FreeHand => free_hand(state, arg(0)?),
            Pred::Accessible => accessible(state, arg(0)?),
            Pred::Paired => state.paired(arg(0)?, arg(1)?),
            Pred::InRoom | Pred::NearContents => return None,
        })
    })();
    match value {
        Some(v) => v != lit.negated,
        None => false,
    }
}

pub fn eval_clause(clause: &Clause, state: &EnvironmentState, b: &Binding) -> bool {
    match clause {
        Clause::AnyOf(lits) => lits.iter().any(|l| eval_literal(l, state, b)),
        Clause::Exists(lits) => {
            // narrow candidates with a name/prop test on the variable when present
            let named = lits.iter().find_map(|l| match (&l.pred, l.negated, l.args.first()) {
                (Pred::Name(n), false, Some(Term::Var)) => Some(n.as_str()),
                _ => None,
            });
            let check = |v: ObjectId| {
                let b = Binding { var: Some(v), ..*b };
                lits.iter().all(|l| eval_literal(l, state, &b))
            };
            match named {
                Some(n) => state.objects_named(n).iter().any(|&v| check(v)),
                None => state.objects().any(|o| check(o.id())),
            }
        }
    }
}

/// Applies one add-effect literal. Returns whether the state changed.
pub(crate) fn apply_add(lit: &Literal, state: &mut EnvironmentState, b: &Binding) -> bool {
    let arg = |i: usize| b.resolve(lit.args[i]).expect("add effect arguments are bound");
    match &lit.pred {
        Pred::Rel(k) => state.insert_relation(Relation::new(arg(0), *k, arg(1))),
        Pred::State(t) => state.insert_state(arg(0), *t),
        Pred::Holds => {
            let (a, o) = (arg(0), arg(1));
            if holds(state, a, o) {
                return false;
            }
            let hand = if state.relations_from(a, RelationKind::HoldsRh).is_empty() {
                RelationKind::HoldsRh
            } else {
                RelationKind::HoldsLh
            };
            state.insert_relation(Relation::new(a, hand, o))
        }
        Pred::InRoom => {
            let (a, target) = (arg(0), arg(1));
            let rooms: Vec<ObjectId> =
                if state.node(target).is_room() { vec![target] } else { state.rooms_of(target).collect() };
            let mut changed = false;
            for r in rooms {
                if r != a {
                    changed |= state.insert_relation(Relation::new(a, RelationKind::Inside, r));
                }
            }
            changed
        }
        Pred::NearContents => {
            let (a, room) = (arg(0), arg(1));
            if !state.node(room).is_room() {
                return false;
            }
            let contents: Vec<ObjectId> =
                state.relations_to(room, RelationKind::Inside).map(|r| r.subject).filter(|o| *o != a).collect();
            let mut changed = false;
            for o in contents {
                changed |= state.insert_relation(Relation::new(a, RelationKind::Close, o));
            }
            changed
        }
        _ => unreachable!("validated add effect"),
    }
}

/// Applies one delete pattern, expanding `*`. Returns whether the state changed.
pub(crate) fn apply_delete(lit: &Literal, state: &mut EnvironmentState, b: &Binding) -> bool {
    let arg = |i: usize| b.resolve(lit.args[i]);
    match &lit.pred {
        Pred::Rel(k) => match (arg(0), arg(1)) {
            (Some(s), Some(o)) => state.remove_relation(&Relation::new(s, *k, o)),
            (Some(s), None) => state.retain_relations(|r| !(r.subject == s && r.kind == *k)),
            (None, Some(o)) => state.retain_relations(|r| !(r.object == o && r.kind == *k)),
            (None, None) => false,
        },
        Pred::State(t) => arg(0).map(|o| state.remove_state(o, *t)).unwrap_or(false),
        Pred::Holds => {
            let (Some(a), Some(o)) = (arg(0), arg(1)) else {
                return false;
            };
            let r = state.remove_relation(&Relation::new(a, RelationKind::HoldsRh, o));
            let l = state.remove_relation(&Relation::new(a, RelationKind::HoldsLh, o));
            r || l
        }
        _ => unreachable!("validated delete effect"),
    }
}
