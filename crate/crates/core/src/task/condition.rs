use std::fmt;
use std::str::FromStr;

use crate::env::{EnvironmentState, ObjectId, RelationKind, StateToken};

use super::TaskError;

/// Object reference inside a condition: a name, optionally pinned to one id (`name#id`).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NameRef {
    pub name: String,
    pub id: Option<ObjectId>,
}

impl fmt::Display for NameRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if let Some(id) = self.id {
            write!(f, "#{id}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AtomPredicate {
    State(StateToken),
    Relation(RelationKind),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ConditionAtom {
    pub negated: bool,
    pub predicate: AtomPredicate,
    pub args: Vec<NameRef>,
}

impl fmt::Display for ConditionAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            f.write_str("!")?;
        }
        let name = match self.predicate {
            AtomPredicate::State(t) => t.as_str(),
            AtomPredicate::Relation(k) => k.as_str(),
        };
        write!(f, "{}(", name.to_ascii_lowercase())?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

/// Conjunction of atoms, e.g. `heated(salmon) & !on(microwave)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Condition {
    pub atoms: Vec<ConditionAtom>,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(" & ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

fn parse_arg(text: &str, whole: &str) -> Result<NameRef, TaskError> {
    let text = text.trim();
    let (name, id) = match text.split_once('#') {
        Some((n, id)) => {
            let id = id.parse::<u32>().map_err(|_| TaskError::Syntax(format!("bad pinned id in `{whole}`")))?;
            (n, Some(ObjectId(id)))
        }
        None => (text, None),
    };
    let ok = !name.is_empty() && name.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_');
    if !ok {
        return Err(TaskError::Syntax(format!("bad object name `{text}` in `{whole}`")));
    }
    Ok(NameRef { name: name.to_string(), id })
}

impl FromStr for ConditionAtom {
    type Err = TaskError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let s = text.trim();
        let (negated, s) = match s.strip_prefix('!') {
            Some(r) => (true, r.trim_start()),
            None => (false, s),
        };
        let syntax = || TaskError::Syntax(format!("expected `name(arg[, arg])`, got `{}`", text.trim()));
        let (head, rest) = s.split_once('(').ok_or_else(syntax)?;
        let inner = rest.strip_suffix(')').ok_or_else(syntax)?;
        let head = head.trim();
        if head.is_empty() || inner.trim().is_empty() || inner.contains(['(', ')']) {
            return Err(syntax());
        }
        let args = inner.split(',').map(|a| parse_arg(a, text)).collect::<Result<Vec<_>, _>>()?;
        let predicate = match (head.to_ascii_lowercase().as_str(), args.len()) {
            ("on", 2) => AtomPredicate::Relation(RelationKind::OnTop),
            (h, _) => {
                if let Ok(t) = h.parse::<StateToken>() {
                    AtomPredicate::State(t)
                } else if let Ok(k) = h.parse::<RelationKind>() {
                    AtomPredicate::Relation(k)
                } else {
                    return Err(TaskError::UnknownPredicate(head.to_string()));
                }
            }
        };
        let expected = match predicate {
            AtomPredicate::State(_) => 1,
            AtomPredicate::Relation(_) => 2,
        };
        if args.len() != expected {
            return Err(TaskError::Arity { predicate: head.to_string(), expected, got: args.len() });
        }
        Ok(ConditionAtom { negated, predicate, args })
    }
}

impl FromStr for Condition {
    type Err = TaskError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        if text.trim().is_empty() {
            return Err(TaskError::Syntax("empty condition".into()));
        }
        let atoms = text.split('&').map(str::parse).collect::<Result<Vec<ConditionAtom>, _>>()?;
        Ok(Condition { atoms })
    }
}

pub fn parse_condition(text: &str) -> Result<Condition, TaskError> {
    text.parse()
}

/// A condition with every name resolved against one environment.
#[derive(Clone, Debug)]
pub struct CompiledCondition {
    atoms: Vec<(bool, AtomPredicate, Vec<Vec<ObjectId>>)>,
}

impl CompiledCondition {
    pub fn holds(&self, state: &EnvironmentState) -> bool {
        self.atoms.iter().all(|(negated, pred, ids)| {
            let witnessed = match pred {
                AtomPredicate::State(t) => ids[0].iter().any(|&o| state.has_state(o, *t)),
                AtomPredicate::Relation(k) => {
                    ids[0].iter().any(|&a| ids[1].iter().any(|&b| state.has_relation(a, *k, b)))
                }
            };
            witnessed != *negated
        })
    }
}

impl Condition {
    /// Resolves names; a name absent from the environment is an error, not `false`.
    pub fn compile(&self, state: &EnvironmentState) -> Result<CompiledCondition, TaskError> {
        let mut atoms = Vec::with_capacity(self.atoms.len());
        for atom in &self.atoms {
            let mut ids = Vec::with_capacity(atom.args.len());
            for arg in &atom.args {
                let named = state.objects_named(&arg.name);
                let resolved: Vec<ObjectId> = match arg.id {
                    Some(id) => named.iter().copied().filter(|o| *o == id).collect(),
                    None => named.to_vec(),
                };
                if resolved.is_empty() {
                    return Err(TaskError::UnknownName(arg.to_string()));
                }
                ids.push(resolved);
            }
            atoms.push((atom.negated, atom.predicate, ids));
        }
        Ok(CompiledCondition { atoms })
    }
}

/// True iff every positive atom has a witness and no negated atom does.
pub fn evaluate(cond: &Condition, state: &EnvironmentState) -> Result<bool, TaskError> {
    Ok(cond.compile(state)?.holds(state))
}
