use std::collections::BTreeSet;

use serde::Deserialize;

use super::{ActionArg, GroundedAction, Verb};
use crate::env::{EnvironmentState, ObjectId};
use crate::pattern::{
    apply_add, apply_delete, eval_clause, eval_literal, Binding, Clause, Context, Literal, PatternError, Term,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ApplyError {
    #[error("{action} is not applicable: precondition `{clause}` fails")]
    Inapplicable { action: String, clause: String },
    #[error("verb {0} is excluded in this experiment")]
    Excluded(Verb),
    #[error("object {0} does not exist")]
    UnknownObject(ObjectId),
    #[error("object {id} is named `{found}`, not `{expected}`")]
    NameMismatch { id: ObjectId, expected: String, found: String },
    #[error("the agent cannot be an action argument")]
    AgentArgument,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LedgerError {
    #[error("ledger json: {0}")]
    Json(String),
    #[error("{verb}: {source}")]
    Pattern { verb: String, source: PatternError },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConditional {
    #[serde(rename = "if")]
    cond: String,
    delete: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchema {
    verb: String,
    arity: usize,
    preconditions: Vec<String>,
    #[serde(default)]
    add: Vec<String>,
    #[serde(default)]
    delete: Vec<String>,
    #[serde(default)]
    conditional_deletes: Vec<RawConditional>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLedger {
    #[serde(default)]
    #[allow(dead_code)]
    grammar: String,
    schemas: Vec<RawSchema>,
}

/// Blueprint of one verb: preconditions and effects over `agent`, `x`, `y`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionSchema {
    pub verb: Verb,
    pub preconditions: Vec<Clause>,
    pub add: Vec<Literal>,
    pub delete: Vec<Literal>,
    /// Deletes that fire only when their condition holds before the action.
    pub conditional_deletes: Vec<(Clause, Vec<Literal>)>,
    // grounding plan: static tests per parameter, then dynamic clauses by scope
    x_static: Vec<Literal>,
    y_static: Vec<Literal>,
    x_clauses: Vec<usize>,
    xy_clauses: Vec<usize>,
}

impl ActionSchema {
    fn compile(raw: &RawSchema) -> Result<ActionSchema, LedgerError> {
        let verb: Verb = raw.verb.parse().map_err(|_| LedgerError::Invalid(format!("unknown verb `{}`", raw.verb)))?;
        if raw.arity != verb.arity() {
            return Err(LedgerError::Invalid(format!(
                "{verb} has arity {} in the inventory, ledger says {}",
                verb.arity(),
                raw.arity
            )));
        }
        let pat = |source| LedgerError::Pattern { verb: raw.verb.clone(), source };
        let preconditions =
            raw.preconditions.iter().map(|c| Clause::parse(c)).collect::<Result<Vec<_>, _>>().map_err(pat)?;
        let lits = |v: &[String], ctx| {
            v.iter().map(|l| Literal::parse(l, ctx, None)).collect::<Result<Vec<_>, _>>().map_err(pat)
        };
        let add = lits(&raw.add, Context::AddEffect)?;
        let delete = lits(&raw.delete, Context::DeleteEffect)?;
        let mut conditional_deletes = Vec::new();
        for c in &raw.conditional_deletes {
            let cond = Clause::parse(&c.cond).map_err(pat)?;
            conditional_deletes.push((cond, lits(&c.delete, Context::DeleteEffect)?));
        }

        let params: &[Term] = match verb.arity() {
            0 => &[],
            1 => &[Term::X],
            _ => &[Term::X, Term::Y],
        };
        let unbound = |t: Term| !params.contains(&t);
        for t in [Term::X, Term::Y] {
            let used = preconditions.iter().any(|c| c.mentions(t))
                || add.iter().chain(&delete).any(|l| l.mentions(t))
                || conditional_deletes.iter().any(|(c, d)| c.mentions(t) || d.iter().any(|l| l.mentions(t)));
            if used && unbound(t) {
                return Err(LedgerError::Invalid(format!("{verb} mentions {t} beyond its arity")));
            }
        }

        let mut x_static = Vec::new();
        let mut y_static = Vec::new();
        let mut x_clauses = Vec::new();
        let mut xy_clauses = Vec::new();
        for (i, c) in preconditions.iter().enumerate() {
            match c.static_test() {
                Some(l) if l.args == [Term::X] => x_static.push(l.clone()),
                Some(l) if l.args == [Term::Y] => y_static.push(l.clone()),
                _ if c.mentions(Term::Y) => xy_clauses.push(i),
                _ => x_clauses.push(i),
            }
        }
        Ok(ActionSchema {
            verb,
            preconditions,
            add,
            delete,
            conditional_deletes,
            x_static,
            y_static,
            x_clauses,
            xy_clauses,
        })
    }

    pub fn arity(&self) -> usize {
        self.verb.arity()
    }

    fn first_failure(&self, state: &EnvironmentState, b: &Binding) -> Option<&Clause> {
        self.preconditions.iter().find(|c| !eval_clause(c, state, b))
    }
}

/// Every verb schema, plus the verbs switched off for an experiment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchemaLedger {
    schemas: Vec<ActionSchema>,
    excluded: BTreeSet<Verb>,
}

impl SchemaLedger {
    pub fn from_json(text: &str) -> Result<SchemaLedger, LedgerError> {
        let raw: RawLedger = serde_json::from_str(text).map_err(|e| LedgerError::Json(e.to_string()))?;
        let mut schemas = raw.schemas.iter().map(ActionSchema::compile).collect::<Result<Vec<_>, _>>()?;
        schemas.sort_by_key(|s| s.verb);
        for pair in schemas.windows(2) {
            if pair[0].verb == pair[1].verb {
                return Err(LedgerError::Invalid(format!("{} declared twice", pair[0].verb)));
            }
        }
        if let Some(missing) = Verb::ALL.iter().find(|v| schemas.iter().all(|s| s.verb != **v)) {
            return Err(LedgerError::Invalid(format!("{missing} has no schema")));
        }
        Ok(SchemaLedger { schemas, excluded: BTreeSet::new() })
    }

    /// Same ledger with additional verbs disabled.
    pub fn with_exclusions(mut self, verbs: impl IntoIterator<Item = Verb>) -> SchemaLedger {
        self.excluded.extend(verbs);
        self
    }

    pub fn excluded(&self) -> &BTreeSet<Verb> {
        &self.excluded
    }

    pub fn is_included(&self, verb: Verb) -> bool {
        !self.excluded.contains(&verb)
    }

    /// Schema of an included verb.
    pub fn schema(&self, verb: Verb) -> Option<&ActionSchema> {
        if self.excluded.contains(&verb) {
            return None;
        }
        self.schemas.get(verb.index())
    }

    /// Included schemas in inventory order.
    pub fn schemas(&self) -> impl Iterator<Item = &ActionSchema> {
        self.schemas.iter().filter(|s| !self.excluded.contains(&s.verb))
    }
}

/// Id-only form of a grounded action.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) struct Ground {
    pub verb: Verb,
    pub x: Option<ObjectId>,
    pub y: Option<ObjectId>,
}

impl Ground {
    fn binding(&self, state: &EnvironmentState) -> Binding {
        Binding { x: self.x, y: self.y, ..Binding::new(state.agent_id()) }
    }

    pub(crate) fn to_action(self, state: &EnvironmentState) -> GroundedAction {
        let arg = |id: ObjectId| ActionArg { name: state.name_of(id).unwrap_or_default().to_string(), id };
        GroundedAction { verb: self.verb, args: self.x.into_iter().chain(self.y).map(arg).collect() }
    }

    fn from_action(action: &GroundedAction, state: &EnvironmentState) -> Result<Ground, ApplyError> {
        for a in &action.args {
            let found = state.name_of(a.id).ok_or(ApplyError::UnknownObject(a.id))?;
            if found != a.name {
                return Err(ApplyError::NameMismatch { id: a.id, expected: a.name.clone(), found: found.to_string() });
            }
            if a.id == state.agent_id() {
                return Err(ApplyError::AgentArgument);
            }
        }
        Ok(Ground { verb: action.verb, x: action.args.first().map(|a| a.id), y: action.args.get(1).map(|a| a.id) })
    }
}

/// Grounding plan for one ledger over one environment's static objects.
pub(crate) struct Grounder<'l> {
    plans: Vec<(&'l ActionSchema, Vec<ObjectId>, Vec<ObjectId>)>,
}

impl<'l> Grounder<'l> {
    pub(crate) fn new(ledger: &'l SchemaLedger, state: &EnvironmentState) -> Self {
        let agent = state.agent_id();
        let objects: Vec<ObjectId> = state.objects().map(|o| o.id()).filter(|id| *id != agent).collect();
        let pass = |tests: &[Literal]| -> Vec<ObjectId> {
            objects
                .iter()
                .copied()
                .filter(|&o| {
                    let b = Binding { x: Some(o), y: Some(o), ..Binding::new(agent) };
                    tests.iter().all(|l| eval_literal(l, state, &b))
                })
                .collect()
        };
        let plans = ledger
            .schemas()
            .map(|s| {
                let xs = if s.arity() >= 1 { pass(&s.x_static) } else { vec![] };
                let ys = if s.arity() == 2 { pass(&s.y_static) } else { vec![] };
                (s, xs, ys)
            })
            .collect();
        Grounder { plans }
    }

    /// Applicable groundings in inventory order, then ascending ids.
    pub(crate) fn ground(&self, state: &EnvironmentState) -> Vec<Ground> {
        let agent = state.agent_id();
        let mut out = Vec::new();
        for (schema, xs, ys) in &self.plans {
            let holds =
                |b: &Binding, idx: &[usize]| idx.iter().all(|&i| eval_clause(&schema.preconditions[i], state, b));
            match schema.arity() {
                0 => {
                    if holds(&Binding::new(agent), &schema.x_clauses) {
                        out.push(Ground { verb: schema.verb, x: None, y: None });
                    }
                }
                1 => {
                    for &x in xs {
                        let b = Binding { x: Some(x), ..Binding::new(agent) };
                        if holds(&b, &schema.x_clauses) {
                            out.push(Ground { verb: schema.verb, x: Some(x), y: None });
                        }
                    }
                }
                _ => {
                    for &x in xs {
                        let bx = Binding { x: Some(x), ..Binding::new(agent) };
                        if !holds(&bx, &schema.x_clauses) {
                            continue;
                        }
                        for &y in ys {
                            if y == x {
                                continue;
                            }
                            let b = Binding { y: Some(y), ..bx };
                            if holds(&b, &schema.xy_clauses) {
                                out.push(Ground { verb: schema.verb, x: Some(x), y: Some(y) });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

fn check_ground(state: &EnvironmentState, g: &Ground, ledger: &SchemaLedger) -> Result<(), ApplyError> {
    let schema = ledger.schema(g.verb).ok_or(ApplyError::Excluded(g.verb))?;
    if g.x == Some(state.agent_id()) || g.y == Some(state.agent_id()) {
        return Err(ApplyError::AgentArgument);
    }
    match schema.first_failure(state, &g.binding(state)) {
        None => Ok(()),
        Some(clause) => {
            Err(ApplyError::Inapplicable { action: g.to_action(state).to_string(), clause: clause.to_string() })
        }
    }
}

/// Effects of an action already known to be applicable.
pub(crate) fn apply_ground(state: &EnvironmentState, g: &Ground, ledger: &SchemaLedger) -> EnvironmentState {
    let schema = ledger.schema(g.verb).expect("checked verb");
    let b = g.binding(state);
    let mut next = state.clone();
    let fired: Vec<&Vec<Literal>> =
        schema.conditional_deletes.iter().filter(|(c, _)| eval_clause(c, state, &b)).map(|(_, d)| d).collect();
    for d in schema.delete.iter().chain(fired.into_iter().flatten()) {
        apply_delete(d, &mut next, &b);
    }
    for a in &schema.add {
        apply_add(a, &mut next, &b);
    }
    next.settle();
    next
}

/// All grounded actions whose preconditions hold, in inventory order then ascending ids.
pub fn applicable_actions(state: &EnvironmentState, ledger: &SchemaLedger) -> Vec<GroundedAction> {
    Grounder::new(ledger, state).ground(state).into_iter().map(|g| g.to_action(state)).collect()
}

pub fn check_applicable(
    state: &EnvironmentState,
    action: &GroundedAction,
    ledger: &SchemaLedger,
) -> Result<(), ApplyError> {
    check_ground(state, &Ground::from_action(action, state)?, ledger)
}

/// Transition function. Errors leave the input untouched.
pub fn apply(
    state: &EnvironmentState,
    action: &GroundedAction,
    ledger: &SchemaLedger,
) -> Result<EnvironmentState, ApplyError> {
    let g = Ground::from_action(action, state)?;
    check_ground(state, &g, ledger)?;
    Ok(apply_ground(state, &g, ledger))
}
