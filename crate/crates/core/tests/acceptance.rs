//! End-to-end acceptance checks. Runs without the libtest harness so that one
//! PASS/FAIL line per criterion is always printed; exits nonzero if any fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use hillplan::action::{
    applicable_actions, apply, format_action, parse_action, parse_guide_line, GroundedAction, Verb,
};
use hillplan::bundled;
use hillplan::env::InfoLevel;
use hillplan::harness::{
    render_table, run_experiment, run_experiment_detailed, Configuration, ExecutionMode, ExperimentConfig, TableFormat,
};
use hillplan::oracle::{cached_min_plan_search, validate_plan};
use hillplan::search::{run_episode, CorrectionKind, EpisodeResult, EpisodeStatus, SearchLimits};
use hillplan::selector::{
    build_guide_prompt, build_selection_prompt, generate_guide, parse_selection, Backend, BackendConfig, BackendError,
    FaultKind, FaultSchedule, FaultStage, FaultyBackend, Guide, GuideStyle, PromptDocument, ScriptedBackend, Stage,
    UniformRandomBackend,
};
use hillplan::task::{TaskDefinition, TaskStatus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn tasks() -> Vec<TaskDefinition> {
    bundled::task_pack().tasks
}

fn witnesses() -> BTreeMap<String, Vec<GroundedAction>> {
    let env = bundled::desk_environment();
    let ledger = bundled::ledger();
    tasks()
        .iter()
        .map(|t| {
            let r = cached_min_plan_search(&env, t, &ledger, 20).unwrap();
            (t.name.clone(), r.witness_plan.unwrap())
        })
        .collect()
}

fn episode(env: &hillplan::env::EnvironmentState, task: &TaskDefinition, b: &dyn Backend) -> EpisodeResult {
    run_episode(env, task, &Guide::none(), b, &bundled::ledger(), &SearchLimits::default()).unwrap()
}

fn schedule(rng: &mut ChaCha8Rng) -> FaultSchedule {
    let kinds = [FaultKind::OffByOne, FaultKind::Garbage, FaultKind::OffList];
    let stage = [FaultStage::Candidate, FaultStage::Final, FaultStage::Any][rng.gen_range(0..3)];
    let faults = (0..rng.gen_range(0..8)).map(|_| kinds[rng.gen_range(0..3)]).collect();
    let permanent = rng.gen_bool(0.3).then(|| kinds[rng.gen_range(0..3)]);
    FaultSchedule { stage, faults, permanent }
}

fn executability() -> Check {
    let env = bundled::desk_environment();
    let ledger = bundled::ledger();
    let plans = witnesses();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let start = Instant::now();
    let mut n = 0;
    let mut statuses: BTreeMap<String, usize> = BTreeMap::new();
    for task in tasks() {
        let witness = &plans[&task.name];
        for k in 0..110u64 {
            let seed = rng.gen();
            let backend: Box<dyn Backend> = match k % 4 {
                0 => Box::new(UniformRandomBackend::new(seed)),
                1 => Box::new(FaultyBackend::new(UniformRandomBackend::new(seed), schedule(&mut rng))),
                2 => Box::new(FaultyBackend::new(ScriptedBackend::new(witness.clone()), schedule(&mut rng))),
                _ => Box::new(ScriptedBackend::new(witness.clone())),
            };
            let r = episode(&env, &task, backend.as_ref());
            let v = validate_plan(&env, &r.plan, &task, &ledger).unwrap();
            ensure!(v.executable, "{} episode {k}: step {:?} inapplicable: {:?}", task.name, v.failing_step, v.error);
            ensure!(r.plan.len() <= 20, "{} episode {k}: plan of {}", task.name, r.plan.len());
            *statuses.entry(format!("{:?}", r.status)).or_default() += 1;
            n += 1;
        }
    }
    let took = start.elapsed();
    ensure!(took < Duration::from_secs(120), "{n} episodes took {took:?}");
    Ok(format!("{n} episodes replayed in {:.1}s, {statuses:?}", took.as_secs_f64()))
}

fn solvability() -> Check {
    let env = bundled::desk_environment();
    let ledger = bundled::ledger();
    let start = Instant::now();
    let mut lengths = Vec::new();
    for t in tasks() {
        let r = cached_min_plan_search(&env, &t, &ledger, 20).map_err(|e| e.to_string())?;
        let Some(plan) = r.witness_plan else { return Err(format!("{} unsolved within 20", t.name)) };
        let v = validate_plan(&env, &plan, &t, &ledger).unwrap();
        ensure!(v.executable && v.classification == TaskStatus::Success, "{} witness does not validate", t.name);
        lengths.push(plan.len());
    }
    let took = start.elapsed();
    ensure!(took < Duration::from_secs(300), "oracle took {took:?}");
    Ok(format!("10/10 solved in {:.1}s, lengths {lengths:?}", took.as_secs_f64()))
}

fn ordering() -> Check {
    #[derive(serde::Deserialize)]
    struct Recorded {
        min_lengths: BTreeMap<String, usize>,
    }
    let rec: Recorded = serde_json::from_str(&fixture("min_lengths.json")).unwrap();
    let env = bundled::desk_environment();
    let ledger = bundled::ledger();
    let mut prev = 0;
    for t in tasks() {
        let len = cached_min_plan_search(&env, &t, &ledger, 20).unwrap().min_length.unwrap();
        ensure!(
            rec.min_lengths.get(&t.name) == Some(&len),
            "{}: {len} vs recorded {:?}",
            t.name,
            rec.min_lengths.get(&t.name)
        );
        ensure!(len >= prev, "{} ({len}) shorter than its predecessor ({prev})", t.name);
        prev = len;
    }
    Ok("bundled order is non-decreasing and matches the recorded lengths".into())
}

fn scripted_oracle() -> Check {
    let cfg = ExperimentConfig {
        name: "scripted".into(),
        backend: BackendConfig::ScriptedOracle,
        repetitions: 50,
        seed: 3,
        ..ExperimentConfig::default()
    };
    let report = run_experiment_detailed(&cfg).map_err(|e| e.to_string())?;
    ensure!(report.table.rows.len() == 10, "{} rows", report.table.rows.len());
    for row in &report.table.rows {
        ensure!(row.success_rate == 1.0, "{}: success rate {}", row.task, row.success_rate);
        ensure!(row.mean_retries == 0.0, "{}: mean retries {}", row.task, row.mean_retries);
    }
    // both stages really ran
    let e = &report.episodes[0];
    let stages: Vec<Stage> = e
        .transcript
        .iter()
        .filter_map(|l| match l {
            hillplan::search::TranscriptLine::Call(c) => Some(c.stage),
            _ => None,
        })
        .collect();
    ensure!(stages.contains(&Stage::Candidate) && stages.contains(&Stage::Final), "stages {stages:?}");
    Ok(format!("{} episodes, all 10 tasks at 1.00 with 0 retries", report.episodes.len()))
}

fn error_correction() -> Check {
    let env = bundled::desk_environment();
    let ledger = bundled::ledger();
    let task = bundled::task_pack().task("watch_tv").unwrap().clone();
    let plan = witnesses()["watch_tv"].clone();
    let faulty = |stage, faults: Vec<FaultKind>, permanent| {
        FaultyBackend::new(ScriptedBackend::new(plan.clone()), FaultSchedule { stage, faults, permanent })
    };

    // (a) shifted index and every name match land on the candidate list
    let r = episode(&env, &task, &faulty(FaultStage::Candidate, vec![], Some(FaultKind::OffByOne)));
    ensure!(r.status == EpisodeStatus::Success, "(a) status {:?}", r.status);
    let full = applicable_actions(&env, &ledger);
    let right = full.iter().position(|a| *a == plan[0]).unwrap();
    let first = r
        .calls()
        .find(|c| c.step == 0 && c.stage == Stage::Candidate && c.raw_response.contains(&plan[0].to_ref().to_string()))
        .ok_or("(a) no candidate call named the witness action")?;
    ensure!(first.correction_kind == Some(CorrectionKind::Mismatch), "(a) {:?}", first.correction_kind);
    let mut want: Vec<usize> =
        full.iter().enumerate().filter(|(_, a)| a.to_ref() == plan[0].to_ref()).map(|(j, _)| j).collect();
    if right + 1 < full.len() {
        want.push(right + 1);
    }
    want.sort();
    let mut got = first.added.clone();
    got.sort();
    ensure!(got == want, "(a) added {got:?}, expected {want:?}");

    // (b) a rejected final reply is repeated with the prefix embedding it
    let r = episode(&env, &task, &faulty(FaultStage::Final, vec![FaultKind::OffByOne], None));
    let finals: Vec<_> = r.calls().filter(|c| c.stage == Stage::Final).collect();
    ensure!(
        r.status == EpisodeStatus::Success && r.retries_used == 1,
        "(b) {:?} after {} retries",
        r.status,
        r.retries_used
    );
    ensure!(finals[1].is_repeat(), "(b) second final call is not a repeat");
    let expected =
        format!("This query is being repeated for you. Your previous response was {}", finals[0].raw_response);
    ensure!(
        finals[1].prompt_user.contains(&expected),
        "(b) prefix missing: {}",
        &finals[1].prompt_user[..200.min(finals[1].prompt_user.len())]
    );

    // (c) a permanently faulty final stage stops after exactly ten repeats
    let r = episode(&env, &task, &faulty(FaultStage::Final, vec![], Some(FaultKind::OffByOne)));
    let repeats = r.calls().filter(|c| c.is_repeat()).count();
    ensure!(r.status == EpisodeStatus::QueryLimit, "(c) status {:?}", r.status);
    ensure!(repeats == 10 && r.retries_used == 10, "(c) {repeats} repeats, {} retries", r.retries_used);
    Ok(format!(
        "candidates {got:?} for shifted index {}; repeat prefix present; QueryLimit after {repeats} repeats",
        right + 1
    ))
}

fn limits() -> Check {
    let env = bundled::desk_environment();
    let task = bundled::task_pack().task("microwave_salmon").unwrap().clone();
    let mut limited = 0;
    for seed in 0..10 {
        let r = episode(&env, &task, &UniformRandomBackend::new(seed));
        if r.status == EpisodeStatus::LengthLimit {
            ensure!(r.plan.len() == 20, "seed {seed}: LengthLimit at {} actions", r.plan.len());
            limited += 1;
        }
    }
    ensure!(limited > 0, "no random episode reached the length limit");
    let first = episode(&env, &task, &hillplan::selector::FirstOptionBackend);
    ensure!(
        first.status == EpisodeStatus::LengthLimit && first.plan.len() == 20,
        "first-option: {:?} / {}",
        first.status,
        first.plan.len()
    );

    let pack = bundled::task_pack();
    let adv = hillplan::env::apply_mutations(&env, &pack.preset("adversarial").unwrap().mutations).unwrap();
    let already = TaskDefinition::new("tv_on", "turn on the tv", "on(tv)", None).unwrap();
    let r = episode(&adv, &already, &UniformRandomBackend::new(0));
    ensure!(
        r.status == EpisodeStatus::Success && r.plan.is_empty(),
        "initial goal: {:?} with {} actions",
        r.status,
        r.plan.len()
    );
    Ok(format!("{limited}/10 random episodes stopped at exactly 20; initial goal solved with an empty plan"))
}

/// Options as listed in a golden prompt: `INDEX [WALK]<name>` lines.
fn listed_options(prompt: &str) -> Vec<(usize, GroundedAction)> {
    let body = prompt.split("**The list of actions available to you are:**\n").nth(1).unwrap();
    body.lines()
        .enumerate()
        .map(|(k, l)| {
            let (idx, rest) = l.split_once(' ').unwrap();
            let name = rest.strip_prefix("[WALK]<").unwrap().strip_suffix('>').unwrap();
            (idx.parse().unwrap(), GroundedAction::new(Verb::Walk, &[(name, 1000 + k as u32)]))
        })
        .collect()
}

struct Recorder(Mutex<Vec<PromptDocument>>);

impl Backend for Recorder {
    fn complete(&self, prompt: &PromptDocument) -> Result<String, BackendError> {
        self.0.lock().unwrap().push(prompt.clone());
        Ok(fixture("coffeetable_guide_low_level.txt"))
    }
}

fn golden_prompts() -> Check {
    let guide = Guide::from_text(
        GuideStyle::LowLevel,
        InfoLevel::None,
        "walk | microwave\nopen | microwave\nwalk | salmon\ngrab | salmon\nwalk | microwave\nputin | salmon | microwave\nclose | microwave\nswitchoff | microwave\n",
    );
    let taken = vec![
        GroundedAction::new(Verb::Walk, &[("microwave", 297)]),
        GroundedAction::new(Verb::Open, &[("microwave", 297)]),
    ];
    for (file, stage) in
        [("selection_prompt_partition.txt", Stage::Candidate), ("selection_prompt_candidates.txt", Stage::Final)]
    {
        let golden = fixture(file);
        let p = build_selection_prompt("microwave salmon", &guide, &taken, &listed_options(&golden), stage);
        ensure!(p.user_message == golden, "{file} differs");
    }
    let golden = fixture("selection_prompt_candidates.txt");
    let p = build_selection_prompt("microwave salmon", &guide, &taken, &listed_options(&golden), Stage::Final)
        .repeated("{15 [WALK]<bottle>}");
    ensure!(p.full_user_message() == fixture("retry_prompt_candidates.txt"), "retry prompt differs");

    let env = bundled::desk_environment();
    let task = TaskDefinition::new("cat", "put the cat in the bathtub", "off(tv)", None).unwrap();
    let rec = Recorder(Mutex::new(Vec::new()));
    generate_guide(&task, GuideStyle::HighLevel, InfoLevel::None, &env, &rec, 3).map_err(|e| e.to_string())?;
    let sent = rec.0.lock().unwrap()[0].clone();
    ensure!(sent.user_message == fixture("guide_high_level_none.txt"), "guide prompt differs");
    ensure!(
        sent == build_guide_prompt("put the cat in the bathtub", GuideStyle::HighLevel, &env, InfoLevel::None),
        "generate_guide sent a different prompt"
    );

    let listing = hillplan::env::render_environment_info(&env, InfoLevel::Dynamic);
    ensure!(
        listing.lines().all(|l| l.contains(": properties - {") && l.contains("} | states - {") && l.ends_with('}')),
        "listing line format"
    );
    ensure!(
        fixture("environment_info_dynamic.txt").contains("bathroom: properties - {ROOM} | states - {}"),
        "room line"
    );
    Ok("selection, retry and guide prompts byte-match their fixtures".into())
}

fn guide_as_plan() -> Check {
    let only = |preset: Option<&str>, task: &str, text: String| {
        let cfg = ExperimentConfig {
            name: "g".into(),
            tasks: vec![task.into()],
            preset: preset.map(str::to_string),
            configurations: vec![Configuration {
                label: Some("LLG".into()),
                guide_mode: GuideStyle::LowLevel,
                execution_mode: ExecutionMode::GuideOnly,
                info_level: InfoLevel::None,
            }],
            guide_text: Some(text),
            repetitions: 5,
            ..ExperimentConfig::default()
        };
        run_experiment(&cfg).map(|t| t.row(task, "LLG/G").unwrap().success_rate).map_err(|e| e.to_string())
    };
    let coffee = only(None, "bring_coffeepot_and_cupcake", fixture("coffeetable_guide_low_level.txt"))?;
    ensure!(coffee == 1.0, "coffeetable guide scored {coffee}");
    let tv = only(Some("adversarial"), "watch_tv", "walk | tv\nswitchon | tv\nwatch | tv\n".into())?;
    ensure!(tv == 0.0, "adversarial watch tv guide scored {tv}");
    Ok(format!("coffeetable guide {coffee:.2}; watch tv guide in the adversarial home {tv:.2}"))
}

fn parsers() -> Check {
    let env = bundled::desk_environment();
    let objs: Vec<(String, u32)> = env.objects().map(|o| (o.node.name.clone(), o.id().0)).collect();
    let mut n = 0;
    for &verb in Verb::ALL {
        let mut tuples: Vec<Vec<(&str, u32)>> = vec![vec![]];
        for _ in 0..verb.arity() {
            tuples = tuples
                .into_iter()
                .flat_map(|t| objs.iter().map(move |(m, i)| [t.clone(), vec![(m.as_str(), *i)]].concat()))
                .collect();
        }
        for t in tuples {
            let a = GroundedAction::new(verb, &t);
            let text = format_action(&a, true);
            ensure!(parse_action(&text).as_ref() == Ok(&a), "round trip failed for {text}");
            n += 1;
        }
    }
    let mut state = env.clone();
    let ledger = bundled::ledger();
    for _ in 0..5 {
        let opts = applicable_actions(&state, &ledger);
        for a in &opts {
            ensure!(parse_action(&a.to_string()).as_ref() == Ok(a), "applicable {a} failed");
        }
        state = apply(&state, &opts[opts.len() / 2], &ledger).unwrap();
    }
    let rows = fixture("coffeetable_guide_low_level.txt") + &fixture("coffeetable_guide_low_level_numbered.txt");
    let mut guide_rows = 0;
    for l in rows.lines() {
        parse_guide_line(l).map_err(|e| format!("guide row `{l}`: {e}"))?;
        guide_rows += 1;
    }
    #[derive(serde::Deserialize)]
    struct Case {
        raw: String,
        index: Option<usize>,
        action: Option<String>,
    }
    let cases: Vec<Case> = serde_json::from_str(&fixture("selection_corpus.json")).unwrap();
    ensure!(cases.len() == 50, "corpus has {} cases", cases.len());
    for (k, c) in cases.iter().enumerate() {
        let got = parse_selection(&c.raw).parsed.map(|(i, a)| (i, a.to_string()));
        let want = c.index.zip(c.action.clone());
        ensure!(got == want, "case {k}: got {got:?}, want {want:?}");
    }
    Ok(format!("{n} groundings round-trip; {guide_rows} guide rows; 50/50 selection cases"))
}

fn reproducibility() -> Check {
    let cfg = ExperimentConfig {
        name: "repro".into(),
        backend: BackendConfig::UniformRandom { seed: None },
        repetitions: 5,
        seed: 99,
        workers: 2,
        ..ExperimentConfig::default()
    };
    let a = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let b = run_experiment(&cfg).map_err(|e| e.to_string())?;
    for f in [TableFormat::Markdown, TableFormat::Csv, TableFormat::Json] {
        ensure!(render_table(&a, f) == render_table(&b, f), "{f:?} tables differ");
    }
    ensure!(a == b, "tables differ");
    Ok(format!("{} rows identical across two runs", a.rows.len()))
}

fn main() {
    type Criterion = (usize, &'static str, fn() -> Check);
    let criteria: [Criterion; 10] = [
        (2, "oracle solvability", solvability),
        (3, "ascending task order", ordering),
        (1, "executability under fuzzing", executability),
        (4, "scripted oracle end to end", scripted_oracle),
        (5, "error correction", error_correction),
        (6, "length and initial-goal limits", limits),
        (7, "golden prompts", golden_prompts),
        (8, "guide as plan", guide_as_plan),
        (9, "parser suite", parsers),
        (10, "reproducibility", reproducibility),
    ];
    // the oracle timing is measured first, before anything else warms its cache
    let mut results: Vec<(usize, &str, Check)> = criteria
        .iter()
        .map(|(n, name, f)| {
            let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
                Err(p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panicked".into()))
            });
            (*n, *name, r)
        })
        .collect();
    results.sort_by_key(|r| r.0);
    let mut failed = 0;
    for (n, name, r) in &results {
        match r {
            Ok(detail) => println!("criterion {n:>2} {name} ... PASS ({detail})"),
            Err(why) => {
                failed += 1;
                println!("criterion {n:>2} {name} ... FAIL ({why})");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
