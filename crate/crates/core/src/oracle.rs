//! Exhaustive breadth-first plan search and plan replay, used to validate everything else.

use std::collections::HashSet;
use std::hash::{BuildHasherDefault, Hasher};

use serde::{Deserialize, Serialize};

use crate::action::{apply, apply_ground, Ground, GroundedAction, Grounder, SchemaLedger};
use crate::env::EnvironmentState;
use crate::task::{TaskDefinition, TaskError, TaskStatus};

/// Default cap on expanded states before a search gives up.
pub const DEFAULT_MAX_EXPANSIONS: u64 = 5_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchOutcome {
    Solved,
    /// Exhausted every state within the bound.
    Unsolvable,
    /// Hit the expansion cap; says nothing about solvability.
    ResourceLimit,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleReport {
    pub task: String,
    pub outcome: SearchOutcome,
    pub solvable_within_bound: bool,
    pub bound: usize,
    pub min_length: Option<usize>,
    pub witness_plan: Option<Vec<GroundedAction>>,
    pub states_expanded: u64,
    pub states_seen: u64,
    /// Reached states where goal and failure hold at once.
    pub goal_failure_overlaps: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error("not solvable within bound {bound}: {}", tasks.join(", "))]
    Unsolvable { bound: usize, tasks: Vec<String> },
}

pub fn min_plan_search(
    env: &EnvironmentState,
    task: &TaskDefinition,
    ledger: &SchemaLedger,
    bound: usize,
) -> Result<OracleReport, TaskError> {
    min_plan_search_capped(env, task, ledger, bound, DEFAULT_MAX_EXPANSIONS)
}

/// Breadth-first search with visited-state hashing. Failure states are never expanded.
pub fn min_plan_search_capped(
    env: &EnvironmentState,
    task: &TaskDefinition,
    ledger: &SchemaLedger,
    bound: usize,
    max_expansions: u64,
) -> Result<OracleReport, TaskError> {
    let compiled = task.compile(env)?;
    let mut report = OracleReport {
        task: task.name.clone(),
        outcome: SearchOutcome::Unsolvable,
        solvable_within_bound: false,
        bound,
        min_length: None,
        witness_plan: None,
        states_expanded: 0,
        states_seen: 1,
        goal_failure_overlaps: 0,
    };
    let both = |s: &EnvironmentState| compiled.goal.holds(s) && compiled.failure.as_ref().is_some_and(|f| f.holds(s));
    if both(env) {
        report.goal_failure_overlaps += 1;
    }
    match compiled.classify(env) {
        TaskStatus::Success => {
            report.outcome = SearchOutcome::Solved;
            report.solvable_within_bound = true;
            report.min_length = Some(0);
            report.witness_plan = Some(Vec::new());
            return Ok(report);
        }
        TaskStatus::FailureConditions => return Ok(report),
        TaskStatus::Ongoing => {}
    }

    let grounder = Grounder::new(ledger, env);
    // arena of (parent, action) for witness reconstruction; index 0 is the root
    let mut arena: Vec<(u32, Option<Ground>)> = vec![(0, None)];
    let mut visited: HashSet<u128, BuildHasherDefault<FoldHasher>> = HashSet::default();
    visited.insert(env.fingerprint());
    let mut layer: Vec<(u32, EnvironmentState)> = vec![(0, env.clone())];

    for depth in 1..=bound {
        let mut next_layer = Vec::new();
        for (node, state) in &layer {
            if report.states_expanded >= max_expansions {
                report.outcome = SearchOutcome::ResourceLimit;
                return Ok(report);
            }
            report.states_expanded += 1;
            for g in grounder.ground(state) {
                let next = apply_ground(state, &g, ledger);
                if !visited.insert(next.fingerprint()) {
                    continue;
                }
                report.states_seen += 1;
                if both(&next) {
                    report.goal_failure_overlaps += 1;
                }
                arena.push((*node, Some(g)));
                let id = (arena.len() - 1) as u32;
                match compiled.classify(&next) {
                    TaskStatus::Success => {
                        let plan = reconstruct(&arena, id, env);
                        debug_assert_eq!(plan.len(), depth);
                        report.outcome = SearchOutcome::Solved;
                        report.solvable_within_bound = true;
                        report.min_length = Some(depth);
                        report.witness_plan = Some(plan);
                        return Ok(report);
                    }
                    TaskStatus::FailureConditions => {}
                    TaskStatus::Ongoing => {
                        if depth < bound {
                            next_layer.push((id, next));
                        }
                    }
                }
            }
        }
        if next_layer.is_empty() {
            break;
        }
        layer = next_layer;
    }
    Ok(report)
}

/// Fingerprints are already uniformly mixed; hashing them again is wasted work.
#[derive(Default)]
struct FoldHasher(u64);

impl Hasher for FoldHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for chunk in bytes.chunks(8) {
            let mut word = [0u8; 8];
            word[..chunk.len()].copy_from_slice(chunk);
            self.0 ^= u64::from_le_bytes(word);
        }
    }

    fn write_u128(&mut self, v: u128) {
        self.0 ^= (v as u64) ^ ((v >> 64) as u64);
    }
}

fn reconstruct(arena: &[(u32, Option<Ground>)], mut id: u32, env: &EnvironmentState) -> Vec<GroundedAction> {
    let mut grounds = Vec::new();
    while let (parent, Some(g)) = arena[id as usize] {
        grounds.push(g);
        id = parent;
    }
    grounds.reverse();
    // names are static, so the initial state resolves every id
    grounds.into_iter().map(|g| g.to_action(env)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanValidation {
    pub executable: bool,
    pub failing_step: Option<usize>,
    pub error: Option<String>,
    pub steps_applied: usize,
    pub classification: TaskStatus,
}

/// Replays a plan, stopping at the first inapplicable action, and classifies where it ends.
pub fn validate_plan(
    env: &EnvironmentState,
    plan: &[GroundedAction],
    task: &TaskDefinition,
    ledger: &SchemaLedger,
) -> Result<PlanValidation, TaskError> {
    let compiled = task.compile(env)?;
    let mut state = env.clone();
    for (i, action) in plan.iter().enumerate() {
        match apply(&state, action, ledger) {
            Ok(next) => state = next,
            Err(e) => {
                return Ok(PlanValidation {
                    executable: false,
                    failing_step: Some(i),
                    error: Some(e.to_string()),
                    steps_applied: i,
                    classification: compiled.classify(&state),
                })
            }
        }
    }
    Ok(PlanValidation {
        executable: true,
        failing_step: None,
        error: None,
        steps_applied: plan.len(),
        classification: compiled.classify(&state),
    })
}

/// Stable sort of tasks by oracle minimum plan length.
pub fn order_tasks_by_min_length(
    tasks: &[TaskDefinition],
    env: &EnvironmentState,
    ledger: &SchemaLedger,
    bound: usize,
) -> Result<Vec<(TaskDefinition, OracleReport)>, OracleError> {
    let mut solved = Vec::new();
    let mut unsolvable = Vec::new();
    for t in tasks {
        let report = cached_min_plan_search(env, t, ledger, bound)?;
        match report.min_length {
            Some(_) => solved.push((t.clone(), report)),
            None => unsolvable.push(t.name.clone()),
        }
    }
    if !unsolvable.is_empty() {
        return Err(OracleError::Unsolvable { bound, tasks: unsolvable });
    }
    solved.sort_by_key(|(_, r)| r.min_length);
    Ok(solved)
}

type CacheKey = (u128, usize, String, String, Vec<crate::action::Verb>, usize);

/// Process-wide memo of [`min_plan_search`]; concurrent callers for the same key wait for one search.
pub fn cached_min_plan_search(
    env: &EnvironmentState,
    task: &TaskDefinition,
    ledger: &SchemaLedger,
    bound: usize,
) -> Result<OracleReport, TaskError> {
    use std::collections::HashMap;
    use std::sync::{Arc, Mutex, OnceLock};

    type Slot = Arc<OnceLock<Result<OracleReport, TaskError>>>;
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Slot>>> = OnceLock::new();
    let key = (
        env.fingerprint(),
        env.object_count(),
        task.goal.to_string(),
        task.failure.as_ref().map(ToString::to_string).unwrap_or_default(),
        ledger.excluded().iter().copied().collect(),
        bound,
    );
    let slot = CACHE.get_or_init(Default::default).lock().unwrap().entry(key).or_default().clone();
    let mut report = slot.get_or_init(|| min_plan_search(env, task, ledger, bound)).clone()?;
    report.task = task.name.clone();
    Ok(report)
}
