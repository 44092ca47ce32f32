use serde::Deserialize;

use super::state::EnvironmentState;
use super::vocab::ObjectId;
use super::EnvError;
use crate::pattern::{apply_add, eval_literal, Binding, Context, Literal, Pred, Term};

/// Declares that objects named `from` pair with co-located objects named `to`.
#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
pub struct PairingDecl {
    pub name: String,
    pub from: String,
    pub to: String,
}

/// Monotone inference rule: when every literal holds for some (x, y), add one state atom.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DerivedRule {
    pub name: String,
    pub when: Vec<Literal>,
    pub add: Literal,
}

#[derive(Deserialize)]
struct RawRule {
    name: String,
    when: Vec<String>,
    add: String,
}

#[derive(Deserialize)]
struct RawRuleSet {
    #[serde(default)]
    pairings: Vec<PairingDecl>,
    #[serde(default)]
    rules: Vec<RawRule>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RuleSet {
    pub pairings: Vec<PairingDecl>,
    pub rules: Vec<DerivedRule>,
}

impl DerivedRule {
    pub fn parse(name: &str, when: &[&str], add: &str) -> Result<DerivedRule, EnvError> {
        let when = when.iter().map(|w| Literal::parse(w, Context::Condition, None)).collect::<Result<Vec<_>, _>>()?;
        let add = Literal::parse(add, Context::AddEffect, None)?;
        if !matches!(add.pred, Pred::State(_)) {
            return Err(EnvError::Rules(format!("{name}: a rule may only add a state token")));
        }
        if !when.iter().any(|l| l.mentions(Term::X)) && !add.mentions(Term::X) {
            return Err(EnvError::Rules(format!("{name}: rule never mentions x")));
        }
        if add.mentions(Term::Y) && !when.iter().any(|l| l.mentions(Term::Y)) {
            return Err(EnvError::Rules(format!("{name}: y is unconstrained")));
        }
        Ok(DerivedRule { name: name.to_string(), when, add })
    }

    fn uses_y(&self) -> bool {
        self.when.iter().any(|l| l.mentions(Term::Y))
    }

    fn x_candidates(&self, state: &EnvironmentState) -> Vec<ObjectId> {
        for l in &self.when {
            if let (false, Pred::Name(n), [Term::X]) = (l.negated, &l.pred, l.args.as_slice()) {
                return state.objects_named(n).to_vec();
            }
        }
        state.objects().map(|o| o.id()).collect()
    }

    fn y_candidates(&self, state: &EnvironmentState, x: ObjectId) -> Vec<ObjectId> {
        for l in self.when.iter().filter(|l| !l.negated) {
            match (&l.pred, l.args.as_slice()) {
                (Pred::Rel(k), [Term::Y, Term::X]) => return state.relations_to(x, *k).map(|r| r.subject).collect(),
                (Pred::Rel(k), [Term::X, Term::Y]) => {
                    return state.relations_from(x, *k).iter().map(|r| r.object).collect()
                }
                (Pred::Paired, [Term::X, Term::Y]) => {
                    return state.pairings().iter().filter(|p| p.from == x).map(|p| p.to).collect()
                }
                _ => {}
            }
        }
        state.objects().map(|o| o.id()).collect()
    }

    /// Bindings under which the trigger holds but the consequence is missing.
    fn pending(&self, state: &EnvironmentState) -> Vec<Binding> {
        let mut out = Vec::new();
        for x in self.x_candidates(state) {
            let base = Binding { x: Some(x), ..Binding::new(state.agent_id()) };
            let ys: Vec<Option<ObjectId>> =
                if self.uses_y() { self.y_candidates(state, x).into_iter().map(Some).collect() } else { vec![None] };
            for y in ys {
                let b = Binding { y, ..base };
                if self.when.iter().all(|l| eval_literal(l, state, &b)) && !eval_literal(&self.add, state, &b) {
                    out.push(b);
                }
            }
        }
        out
    }
}

impl RuleSet {
    pub fn from_json(text: &str) -> Result<RuleSet, EnvError> {
        let raw: RawRuleSet = serde_json::from_str(text).map_err(|e| EnvError::Rules(e.to_string()))?;
        let rules = raw
            .rules
            .iter()
            .map(|r| {
                let when: Vec<&str> = r.when.iter().map(String::as_str).collect();
                DerivedRule::parse(&r.name, &when, &r.add)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RuleSet { pairings: raw.pairings, rules })
    }

    pub fn empty() -> RuleSet {
        RuleSet::default()
    }

    /// Runs every rule until nothing changes. Rules only add, so this terminates.
    pub(crate) fn settle(&self, state: &mut EnvironmentState) {
        loop {
            let mut changed = false;
            for rule in &self.rules {
                for b in rule.pending(state) {
                    changed |= apply_add(&rule.add, state, &b);
                }
            }
            if !changed {
                break;
            }
        }
    }
}

/// Least fixpoint of `rules` over `state`.
pub fn apply_derived_rules(state: &EnvironmentState, rules: &RuleSet) -> EnvironmentState {
    let mut next = state.clone();
    rules.settle(&mut next);
    next
}

impl EnvironmentState {
    /// Re-establishes the fixpoint of the rules this environment was loaded with.
    pub(crate) fn settle(&mut self) {
        let world = self.world.clone();
        world.rules.settle(self);
    }
}
