//! Selector-driven hill climbing: one action per step, chosen in two stages.

mod transcript;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::action::{applicable_actions, apply, GroundedAction, SchemaLedger};
use crate::env::EnvironmentState;
use crate::selector::{build_selection_prompt, parse_selection, Backend, BackendError, Guide, PromptDocument, Stage};
use crate::task::{CompiledTask, TaskDefinition, TaskError, TaskStatus};

pub use transcript::{
    read_jsonl, write_jsonl, CallRecord, CorrectionKind, GuideRecord, NoteRecord, SummaryRecord, TranscriptLine,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchLimits {
    #[serde(default = "default_length")]
    pub max_plan_length: usize,
    /// Cumulative over an episode; only final-stage repeats count.
    #[serde(default = "default_queries")]
    pub max_repeated_queries: usize,
    #[serde(default = "default_partition")]
    pub partition_size: usize,
}

fn default_length() -> usize {
    20
}
fn default_queries() -> usize {
    10
}
fn default_partition() -> usize {
    100
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            max_plan_length: default_length(),
            max_repeated_queries: default_queries(),
            partition_size: default_partition(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EpisodeStatus {
    Success,
    FailureConditions,
    LengthLimit,
    QueryLimit,
    BackendError,
    /// Guide-only mode: a guide line could not be executed.
    Inexecutable,
    /// Guide-only mode: every line ran but the task is still open.
    GuideExhausted,
}

impl EpisodeStatus {
    pub fn from_task(s: TaskStatus) -> Option<EpisodeStatus> {
        match s {
            TaskStatus::Success => Some(EpisodeStatus::Success),
            TaskStatus::FailureConditions => Some(EpisodeStatus::FailureConditions),
            TaskStatus::Ongoing => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EpisodeResult {
    pub status: EpisodeStatus,
    pub plan: Vec<GroundedAction>,
    pub transcript: Vec<TranscriptLine>,
    pub retries_used: usize,
    pub dead_end: bool,
    pub final_state: EnvironmentState,
}

impl EpisodeResult {
    /// Relabels every transcript line; the summary is the last one.
    pub fn set_episode_id(&mut self, id: &str) {
        for l in &mut self.transcript {
            l.set_episode_id(id);
        }
    }

    pub fn calls(&self) -> impl Iterator<Item = &CallRecord> {
        self.transcript.iter().filter_map(|l| match l {
            TranscriptLine::Call(c) => Some(c),
            _ => None,
        })
    }

    pub fn summary_mut(&mut self) -> Option<&mut SummaryRecord> {
        self.transcript.iter_mut().rev().find_map(|l| match l {
            TranscriptLine::Summary(s) => Some(s),
            _ => None,
        })
    }
}

/// Contiguous chunks of the applicable list, each action keeping its global index.
pub fn partition_options(actions: &[GroundedAction], size: usize) -> Vec<Vec<(usize, GroundedAction)>> {
    assert!(size >= 1, "partition size must be positive");
    actions.iter().cloned().enumerate().collect::<Vec<_>>().chunks(size).map(<[_]>::to_vec).collect()
}

/// Everything a selection query needs besides its options.
pub struct SelectionContext<'a> {
    pub description: String,
    pub guide: &'a Guide,
    pub taken: &'a [GroundedAction],
    pub full: &'a [GroundedAction],
    pub step: usize,
}

enum Abort {
    Backend(BackendError),
    QueryLimit,
}

fn call(
    backend: &dyn Backend,
    prompt: &PromptDocument,
    cx: &SelectionContext<'_>,
    stage: Stage,
    partition_index: Option<usize>,
    retries_so_far: usize,
    log: &mut Vec<TranscriptLine>,
) -> Result<CallRecord, BackendError> {
    let raw = backend.complete(prompt);
    let raw_text = match &raw {
        Ok(t) => t.clone(),
        Err(e) => format!("<backend error: {e}>"),
    };
    let parsed = parse_selection(&raw_text).parsed;
    let rec = CallRecord {
        episode_id: String::new(),
        step: cx.step,
        stage,
        partition_index,
        prompt_system: prompt.system_message.clone(),
        prompt_user: prompt.full_user_message(),
        raw_response: raw_text,
        parsed_index: parsed.as_ref().map(|p| p.0),
        parsed_action: parsed.map(|p| p.1),
        correction_kind: None,
        added: Vec::new(),
        retries_so_far,
    };
    if let Err(e) = raw {
        log.push(TranscriptLine::Call(rec));
        return Err(e);
    }
    Ok(rec)
}

/// One query per partition; replies are resolved against the full list. Never consumes budget.
pub fn select_candidates(
    cx: &SelectionContext<'_>,
    partitions: &[Vec<(usize, GroundedAction)>],
    backend: &dyn Backend,
    retries_so_far: usize,
    log: &mut Vec<TranscriptLine>,
) -> Result<Vec<(usize, GroundedAction)>, BackendError> {
    let mut found: BTreeMap<usize, GroundedAction> = BTreeMap::new();
    for (p, part) in partitions.iter().enumerate() {
        let prompt = build_selection_prompt(&cx.description, cx.guide, cx.taken, part, Stage::Candidate);
        let mut rec = call(backend, &prompt, cx, Stage::Candidate, Some(p), retries_so_far, log)?;
        match (rec.parsed_index, rec.parsed_action.clone()) {
            (Some(i), Some(a)) => {
                if cx.full.get(i).is_some_and(|f| f.to_ref() == a) {
                    rec.added.push(i);
                } else {
                    if i < cx.full.len() {
                        rec.added.push(i);
                    }
                    rec.added
                        .extend(cx.full.iter().enumerate().filter(|(j, f)| *j != i && f.to_ref() == a).map(|(j, _)| j));
                    rec.correction_kind = Some(if rec.added.is_empty() {
                        CorrectionKind::Unresolvable
                    } else {
                        CorrectionKind::Mismatch
                    });
                }
            }
            _ => rec.correction_kind = Some(CorrectionKind::Unparseable),
        }
        for &i in &rec.added {
            found.entry(i).or_insert_with(|| cx.full[i].clone());
        }
        log.push(TranscriptLine::Call(rec));
    }
    Ok(found.into_iter().collect())
}

/// Picks one candidate; rejected replies are repeated with the correction prefix,
/// one budget unit each. Returns the choice and the updated retry count.
fn select_final_inner(
    cx: &SelectionContext<'_>,
    candidates: &[(usize, GroundedAction)],
    backend: &dyn Backend,
    limits: &SearchLimits,
    mut retries: usize,
    log: &mut Vec<TranscriptLine>,
) -> (Result<GroundedAction, Abort>, usize) {
    let original = build_selection_prompt(&cx.description, cx.guide, cx.taken, candidates, Stage::Final);
    let mut prompt = original.clone();
    loop {
        let mut rec = match call(backend, &prompt, cx, Stage::Final, None, retries, log) {
            Ok(r) => r,
            Err(e) => return (Err(Abort::Backend(e)), retries),
        };
        let hit = match (rec.parsed_index, &rec.parsed_action) {
            (Some(i), Some(a)) => candidates.iter().find(|(j, c)| *j == i && c.to_ref() == *a),
            _ => None,
        };
        if let Some((_, action)) = hit {
            log.push(TranscriptLine::Call(rec));
            return (Ok(action.clone()), retries);
        }
        rec.correction_kind = Some(CorrectionKind::Repeat);
        let raw = rec.raw_response.clone();
        log.push(TranscriptLine::Call(rec));
        if retries >= limits.max_repeated_queries {
            return (Err(Abort::QueryLimit), retries);
        }
        retries += 1;
        prompt = original.repeated(&raw);
    }
}

/// Public wrapper: `Ok(None)` means the retry budget ran out.
pub fn select_final(
    cx: &SelectionContext<'_>,
    candidates: &[(usize, GroundedAction)],
    backend: &dyn Backend,
    limits: &SearchLimits,
    retries_so_far: usize,
    log: &mut Vec<TranscriptLine>,
) -> Result<(Option<GroundedAction>, usize), BackendError> {
    match select_final_inner(cx, candidates, backend, limits, retries_so_far, log) {
        (Ok(a), r) => Ok((Some(a), r)),
        (Err(Abort::QueryLimit), r) => Ok((None, r)),
        (Err(Abort::Backend(e)), _) => Err(e),
    }
}

fn terminal(compiled: &CompiledTask, state: &EnvironmentState) -> Option<EpisodeStatus> {
    EpisodeStatus::from_task(compiled.classify(state))
}

/// Runs one episode to a terminal status. Every appended action came from the applicable list.
pub fn run_episode(
    env: &EnvironmentState,
    task: &TaskDefinition,
    guide: &Guide,
    backend: &dyn Backend,
    ledger: &SchemaLedger,
    limits: &SearchLimits,
) -> Result<EpisodeResult, TaskError> {
    let compiled = task.compile(env)?;
    let description = task.prompt_description();
    let mut state = env.clone();
    let mut plan: Vec<GroundedAction> = Vec::new();
    let mut log = Vec::new();
    let mut retries = 0;
    let mut dead_end = false;
    let mut error = None;

    let status = loop {
        if let Some(s) = terminal(&compiled, &state) {
            break s;
        }
        if plan.len() >= limits.max_plan_length {
            break EpisodeStatus::LengthLimit;
        }
        let full = applicable_actions(&state, ledger);
        let cx =
            SelectionContext { description: description.clone(), guide, taken: &plan, full: &full, step: plan.len() };
        if full.is_empty() {
            dead_end = true;
            log.push(note(cx.step, "dead end: no applicable actions"));
            break EpisodeStatus::LengthLimit;
        }
        let partitions = partition_options(&full, limits.partition_size);
        let candidates = match select_candidates(&cx, &partitions, backend, retries, &mut log) {
            Ok(c) => c,
            Err(e) => {
                error = Some(e.to_string());
                break EpisodeStatus::BackendError;
            }
        };
        if candidates.is_empty() {
            dead_end = true;
            log.push(note(cx.step, "dead end: no candidates from any partition"));
            break EpisodeStatus::LengthLimit;
        }
        let (choice, r) = select_final_inner(&cx, &candidates, backend, limits, retries, &mut log);
        retries = r;
        let action = match choice {
            Ok(a) => a,
            Err(Abort::QueryLimit) => break EpisodeStatus::QueryLimit,
            Err(Abort::Backend(e)) => {
                error = Some(e.to_string());
                break EpisodeStatus::BackendError;
            }
        };
        state = apply(&state, &action, ledger).expect("chosen action comes from the applicable list");
        plan.push(action);
    };

    log.push(TranscriptLine::Summary(SummaryRecord {
        episode_id: String::new(),
        task: task.name.clone(),
        configuration: None,
        repetition: None,
        status,
        plan: plan.clone(),
        retries_used: retries,
        dead_end,
        guide_id: (guide.style != crate::selector::GuideStyle::None).then(|| guide.id()),
        error,
    }));
    Ok(EpisodeResult { status, plan, transcript: log, retries_used: retries, dead_end, final_state: state })
}

fn note(step: usize, text: &str) -> TranscriptLine {
    TranscriptLine::Note(NoteRecord { episode_id: String::new(), step, note: text.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::Verb;
    use crate::selector::{FirstOptionBackend, ScriptedBackend};

    fn walks(n: usize) -> Vec<GroundedAction> {
        (0..n).map(|i| GroundedAction::new(Verb::Walk, &[("floor", i as u32 + 1)])).collect()
    }

    #[test]
    fn partitions_keep_global_indices() {
        let p = partition_options(&walks(250), 100);
        assert_eq!(p.iter().map(Vec::len).collect::<Vec<_>>(), vec![100, 100, 50]);
        assert_eq!(p[1][0].0, 100);
        assert_eq!(p[2].last().unwrap().0, 249);
        assert_eq!(partition_options(&walks(100), 100).len(), 1);
        assert!(partition_options(&[], 100).is_empty());
    }

    #[test]
    fn mismatch_expands_by_name() {
        let mut full = walks(20);
        full[15] = GroundedAction::new(Verb::Walk, &[("ceiling", 40)]);
        full[3] = GroundedAction::new(Verb::Walk, &[("bottle", 7)]);
        full[12] = GroundedAction::new(Verb::Walk, &[("bottle", 8)]);
        let guide = Guide::none();
        let cx = SelectionContext { description: "x".into(), guide: &guide, taken: &[], full: &full, step: 0 };
        struct Fixed;
        impl Backend for Fixed {
            fn complete(&self, _: &PromptDocument) -> Result<String, BackendError> {
                Ok("{15 [WALK]<bottle>}".into())
            }
        }
        let mut log = Vec::new();
        let c = select_candidates(&cx, &partition_options(&full, 100), &Fixed, 0, &mut log).unwrap();
        assert_eq!(c.iter().map(|p| p.0).collect::<Vec<_>>(), vec![3, 12, 15]);
        let TranscriptLine::Call(r) = &log[0] else { panic!() };
        assert_eq!(r.correction_kind, Some(CorrectionKind::Mismatch));
    }

    #[test]
    fn scripted_oracle_witness_replays() {
        let env = crate::bundled::desk_environment();
        let ledger = crate::bundled::ledger();
        let task = crate::bundled::task_pack().task("watch_tv").unwrap().clone();
        let report = crate::oracle::min_plan_search(&env, &task, &ledger, 20).unwrap();
        let witness = report.witness_plan.unwrap();
        let b = ScriptedBackend::new(witness.clone());
        let r = run_episode(&env, &task, &Guide::none(), &b, &ledger, &SearchLimits::default()).unwrap();
        assert_eq!(r.status, EpisodeStatus::Success);
        assert_eq!(r.plan, witness);
        assert_eq!(r.retries_used, 0);
    }

    #[test]
    fn first_option_hits_length_limit() {
        let env = crate::bundled::desk_environment();
        let ledger = crate::bundled::ledger();
        let task = crate::bundled::task_pack().task("wash_plate").unwrap().clone();
        let limits = SearchLimits { max_plan_length: 5, ..SearchLimits::default() };
        let r = run_episode(&env, &task, &Guide::none(), &FirstOptionBackend, &ledger, &limits).unwrap();
        assert_eq!(r.status, EpisodeStatus::LengthLimit);
        assert_eq!(r.plan.len(), 5);
    }
}
