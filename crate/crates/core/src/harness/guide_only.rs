use crate::action::{applicable_actions, apply, parse_guide_line, GroundedAction, SchemaLedger};
use crate::env::{EnvironmentState, RelationKind};
use crate::search::{EpisodeResult, EpisodeStatus, NoteRecord, SummaryRecord, TranscriptLine};
use crate::selector::Guide;
use crate::task::{TaskDefinition, TaskError};

use super::GuidePolicy;

/// Among same-named matches, prefer objects the agent is close to, then the lowest ids.
fn resolve<'a>(state: &EnvironmentState, matches: &[&'a GroundedAction]) -> Option<&'a GroundedAction> {
    let agent = state.agent_id();
    let near = |a: &GroundedAction| a.ids().filter(|id| state.has_relation(agent, RelationKind::Close, *id)).count();
    let mut best: Option<&GroundedAction> = None;
    for m in matches {
        let better = match best {
            None => true,
            Some(b) => {
                (near(m), std::cmp::Reverse(m.ids().map(|i| i.0).collect::<Vec<_>>()))
                    > (near(b), std::cmp::Reverse(b.ids().map(|i| i.0).collect::<Vec<_>>()))
            }
        };
        if better {
            best = Some(m);
        }
    }
    best
}

/// Executes a low-level guide line by line as a plan; classification at the end decides the status.
pub fn run_guide_only(
    env: &EnvironmentState,
    task: &TaskDefinition,
    guide: &Guide,
    ledger: &SchemaLedger,
    policy: GuidePolicy,
) -> Result<EpisodeResult, TaskError> {
    let compiled = task.compile(env)?;
    let mut state = env.clone();
    let mut plan = Vec::new();
    let mut log = Vec::new();
    let mut broken = false;
    for (n, line) in guide.lines.iter().enumerate() {
        let resolved = match parse_guide_line(line) {
            Err(e) => Err(format!("line {}: `{line}` does not parse: {e}", n + 1)),
            Ok(r) => {
                let full = applicable_actions(&state, ledger);
                let matches: Vec<&GroundedAction> = full.iter().filter(|a| r.matches(a)).collect();
                resolve(&state, &matches).cloned().ok_or_else(|| format!("line {}: `{line}` is not applicable", n + 1))
            }
        };
        match resolved {
            Ok(action) => {
                state = apply(&state, &action, ledger).expect("resolved from the applicable list");
                plan.push(action);
            }
            Err(msg) => {
                let skip = policy == GuidePolicy::SkipInapplicable;
                log.push(TranscriptLine::Note(NoteRecord {
                    episode_id: String::new(),
                    step: plan.len(),
                    note: format!("{msg}; {}", if skip { "skipped" } else { "stopping" }),
                }));
                if !skip {
                    broken = true;
                    break;
                }
            }
        }
    }
    let status = if broken {
        EpisodeStatus::Inexecutable
    } else {
        EpisodeStatus::from_task(compiled.classify(&state)).unwrap_or(EpisodeStatus::GuideExhausted)
    };
    log.push(TranscriptLine::Summary(SummaryRecord {
        episode_id: String::new(),
        task: task.name.clone(),
        configuration: None,
        repetition: None,
        status,
        plan: plan.clone(),
        retries_used: 0,
        dead_end: false,
        guide_id: Some(guide.id()),
        error: None,
    }));
    Ok(EpisodeResult { status, plan, transcript: log, retries_used: 0, dead_end: false, final_state: state })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::InfoLevel;
    use crate::selector::GuideStyle;

    fn guide(text: &str) -> Guide {
        Guide::from_text(GuideStyle::LowLevel, InfoLevel::None, text)
    }

    #[test]
    fn table_guide_solves_coffeetable_task() {
        let env = crate::bundled::desk_environment();
        let ledger = crate::bundled::ledger();
        let task = crate::bundled::task_pack().task("bring_coffeepot_and_cupcake").unwrap().clone();
        let g = guide("walk | kitchen\ngrab | coffeepot\nwalk | livingroom\nplaceon | coffeepot | coffeetable\nwalk | kitchen\ngrab | cupcake\nwalk | livingroom\nplaceon | cupcake | coffeetable");
        let r = run_guide_only(&env, &task, &g, &ledger, GuidePolicy::Strict).unwrap();
        assert_eq!(r.status, EpisodeStatus::Success, "{:?}", r.transcript);
        assert_eq!(r.plan.len(), 8);
    }

    #[test]
    fn inapplicable_line_skipped_or_fatal() {
        let env = crate::bundled::desk_environment();
        let ledger = crate::bundled::ledger();
        let task = crate::bundled::task_pack().task("microwave_salmon").unwrap().clone();
        let g = guide("putin | salmon | microwave\nwalk | microwave");
        let r = run_guide_only(&env, &task, &g, &ledger, GuidePolicy::SkipInapplicable).unwrap();
        assert_eq!(r.plan.len(), 1);
        assert_eq!(r.status, EpisodeStatus::GuideExhausted);
        assert!(matches!(&r.transcript[0], TranscriptLine::Note(n) if n.note.contains("not applicable")));
        let r = run_guide_only(&env, &task, &g, &ledger, GuidePolicy::Strict).unwrap();
        assert_eq!(r.status, EpisodeStatus::Inexecutable);
        assert!(r.plan.is_empty());
    }

    #[test]
    fn empty_guide_classifies_initial_state() {
        let env = crate::bundled::desk_environment();
        let ledger = crate::bundled::ledger();
        let task = crate::bundled::task_pack().task("watch_tv").unwrap().clone();
        let r = run_guide_only(&env, &task, &guide(""), &ledger, GuidePolicy::Strict).unwrap();
        assert_eq!(r.status, EpisodeStatus::GuideExhausted);
        assert!(r.plan.is_empty());
    }
}
