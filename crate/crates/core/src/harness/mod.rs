//! Batch experiments: repetitions over tasks and configurations, aggregated into tables.

mod config;
mod guide_only;
mod table;

use std::collections::HashMap;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use crate::action::{GroundedAction, SchemaLedger};
use crate::bundled;
use crate::env::{apply_mutations, load_environment, EnvError, EnvironmentDocument, EnvironmentState, RuleSet};
use crate::oracle::cached_min_plan_search;
use crate::search::{
    run_episode, write_jsonl, EpisodeResult, EpisodeStatus, GuideRecord, SummaryRecord, TranscriptLine,
};
use crate::selector::{build_guide_prompt, generate_guide, Backend, BackendConfig, BackendError, Guide, GuideStyle};
use crate::task::{TaskDefinition, TaskError, TaskPack};

pub use config::{Configuration, ExecutionMode, ExperimentConfig, GuidePolicy};
pub use guide_only::run_guide_only;
pub use table::{render_table, AverageRow, ResultRow, ResultsTable, TableFormat, AVERAGES_LABEL};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("environment: {0}")]
    Environment(String),
    #[error("backend: {0}")]
    Backend(BackendError),
    #[error("io: {0}")]
    Io(std::io::Error),
}

impl From<BackendError> for HarnessError {
    fn from(e: BackendError) -> Self {
        HarnessError::Backend(e)
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e)
    }
}

impl From<EnvError> for HarnessError {
    fn from(e: EnvError) -> Self {
        HarnessError::Environment(e.to_string())
    }
}

impl From<TaskError> for HarnessError {
    fn from(e: TaskError) -> Self {
        HarnessError::Config(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
}

/// Everything loaded from disk (or the bundled data) before any episode runs.
#[derive(Clone, Debug)]
pub struct Workspace {
    pub env: EnvironmentState,
    pub ledger: SchemaLedger,
    pub pack: TaskPack,
}

impl Workspace {
    pub fn load(config: &ExperimentConfig) -> Result<Workspace, HarnessError> {
        let rules = match &config.rules {
            Some(p) => RuleSet::from_json(&read(p)?)?,
            None => bundled::rules(),
        };
        let env = load_named_environment(&config.environment, &rules)?;
        let ledger = match &config.ledger {
            Some(p) => SchemaLedger::from_json(&read(p)?).map_err(|e| HarnessError::Config(e.to_string()))?,
            None => bundled::ledger(),
        };
        let pack = match &config.task_pack {
            Some(p) => TaskPack::from_json(&read(p)?)?,
            None => bundled::task_pack(),
        };
        Ok(Workspace { env, ledger, pack })
    }
}

/// `desk`, `full`, or a path to an environment document.
pub fn load_named_environment(name: &str, rules: &RuleSet) -> Result<EnvironmentState, HarnessError> {
    let text = match name {
        "desk" => bundled::DESK_HOME.to_string(),
        "full" => bundled::FULL_HOME.to_string(),
        path => std::fs::read_to_string(path).map_err(|e| HarnessError::Environment(format!("{path}: {e}")))?,
    };
    Ok(load_environment(&EnvironmentDocument::from_json(&text)?, rules)?)
}

/// A task with its variant, mutations and exclusions applied.
#[derive(Clone, Debug)]
pub struct PreparedTask {
    pub task: TaskDefinition,
    pub env: EnvironmentState,
    pub ledger: SchemaLedger,
}

pub fn prepare_task(ws: &Workspace, config: &ExperimentConfig, name: &str) -> Result<PreparedTask, HarnessError> {
    let base = ws.pack.task(name)?;
    let mut mutations = Vec::new();
    if let Some(p) = &config.preset {
        mutations.extend(ws.pack.preset(p)?.mutations.iter().cloned());
    }
    let mut excluded = config.excluded_verbs.clone();
    let task = match &config.variant {
        Some(v) => {
            let variant = base.variant(v)?;
            mutations.extend(variant.mutations.iter().cloned());
            excluded.extend(variant.excluded_verbs.iter().copied());
            base.with_variant(variant)
        }
        None => base.clone(),
    };
    mutations.extend(config.mutations.iter().cloned());
    let env = apply_mutations(&ws.env, &mutations)?;
    task.compile(&env)?;
    Ok(PreparedTask { task, env, ledger: ws.ledger.clone().with_exclusions(excluded) })
}

/// One repetition of one configuration row.
#[derive(Clone, Debug)]
pub struct EpisodeOutcome {
    pub task: String,
    pub configuration: String,
    pub repetition: usize,
    pub status: EpisodeStatus,
    pub plan: Vec<GroundedAction>,
    pub retries_used: usize,
    pub guide_id: Option<String>,
    pub transcript: Vec<TranscriptLine>,
}

impl EpisodeOutcome {
    pub fn success(&self) -> bool {
        self.status == EpisodeStatus::Success
    }

    pub fn episode_id(&self) -> String {
        format!("{}/{}/{}", self.task, self.configuration, self.repetition)
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub table: ResultsTable,
    /// Sorted by task order, configuration order, repetition.
    pub episodes: Vec<EpisodeOutcome>,
}

fn derive_seed(base: u64, parts: &[&str], rep: usize) -> u64 {
    let mut h = DefaultHasher::new();
    base.hash(&mut h);
    parts.hash(&mut h);
    rep.hash(&mut h);
    h.finish()
}

/// Remote backends are built once so their in-flight cap is shared; the rest are per episode.
enum BackendSource {
    Shared(Arc<dyn Backend>),
    PerEpisode(BackendConfig),
}

impl BackendSource {
    fn new(config: &BackendConfig) -> Result<BackendSource, BackendError> {
        Ok(match config {
            BackendConfig::RemoteChat(_) => BackendSource::Shared(Arc::from(config.build(0, None)?)),
            other => BackendSource::PerEpisode(other.clone()),
        })
    }

    fn get(&self, seed: u64, witness: Option<&[GroundedAction]>) -> Result<Box<dyn Backend>, BackendError> {
        match self {
            BackendSource::Shared(b) => Ok(Box::new(b.clone())),
            BackendSource::PerEpisode(c) => c.build(seed, witness),
        }
    }
}

struct Job {
    task: usize,
    config: usize,
    rep: usize,
}

struct Plan<'a> {
    config: &'a ExperimentConfig,
    tasks: Vec<PreparedTask>,
    witnesses: Vec<Option<Vec<GroundedAction>>>,
    configurations: Vec<Configuration>,
    selection: BackendSource,
    guides: BackendSource,
    cached_guides: HashMap<(usize, usize), Result<(Guide, String), String>>,
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultsTable, HarnessError> {
    Ok(run_experiment_detailed(config)?.table)
}

pub fn run_experiment_detailed(config: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    config.validate()?;
    let ws = Workspace::load(config)?;
    run_experiment_in(&ws, config)
}

/// Runs an experiment against an already loaded workspace.
pub fn run_experiment_in(ws: &Workspace, config: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    config.validate()?;
    let names: Vec<String> = if config.tasks.is_empty() {
        ws.pack.tasks.iter().map(|t| t.name.clone()).collect()
    } else {
        config.tasks.clone()
    };
    let tasks = names.iter().map(|n| prepare_task(ws, config, n)).collect::<Result<Vec<_>, _>>()?;

    let guide_cfg = config.guide_backend.as_ref().unwrap_or(&config.backend);
    let wants_oracle = config.backend.needs_oracle() || guide_cfg.needs_oracle();
    let witnesses = tasks
        .iter()
        .map(|p| {
            if !wants_oracle {
                return Ok(None);
            }
            let r = cached_min_plan_search(&p.env, &p.task, &p.ledger, config.limits.max_plan_length)?;
            r.witness_plan.map(Some).ok_or_else(|| {
                HarnessError::Config(format!(
                    "scripted-oracle: task `{}` has no plan within {} steps",
                    p.task.name, config.limits.max_plan_length
                ))
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;

    let mut plan = Plan {
        config,
        tasks,
        witnesses,
        configurations: config.resolved_configurations(),
        selection: BackendSource::new(&config.backend)?,
        guides: BackendSource::new(guide_cfg)?,
        cached_guides: HashMap::new(),
    };
    if config.cache_guide {
        for t in 0..plan.tasks.len() {
            for c in 0..plan.configurations.len() {
                if plan.configurations[c].guide_mode != GuideStyle::None {
                    let g = plan.obtain_guide(t, c, 0);
                    plan.cached_guides.insert((t, c), g);
                }
            }
        }
    }

    let jobs: Vec<Job> = (0..plan.tasks.len())
        .flat_map(|task| {
            (0..plan.configurations.len())
                .flat_map(move |config| (0..plan.config.repetitions).map(move |rep| Job { task, config, rep }))
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let results: Vec<Result<Vec<EpisodeOutcome>, HarnessError>> =
        pool.install(|| jobs.par_iter().map(|j| plan.run_job(j)).collect());
    let mut episodes = Vec::new();
    for r in results {
        episodes.extend(r?);
    }

    if let Some(dir) = &config.transcripts_dir {
        for e in &episodes {
            persist(dir, e)?;
        }
    }
    let labels: Vec<String> = plan.configurations.iter().flat_map(Configuration::labels).collect();
    let table = aggregate(&episodes, &names, &labels);
    Ok(ExperimentReport { table, episodes })
}

impl Plan<'_> {
    fn guide_seed(&self, task: usize, config: usize, rep: usize) -> u64 {
        let c = &self.configurations[config];
        derive_seed(
            self.config.seed,
            &["guide", &self.tasks[task].task.name, &c.guide_mode.to_string(), c.info_level.as_str()],
            rep,
        )
    }

    /// The guide and the prompt that produced it (empty when supplied verbatim).
    fn obtain_guide(&self, task: usize, config: usize, rep: usize) -> Result<(Guide, String), String> {
        let c = &self.configurations[config];
        let p = &self.tasks[task];
        if let Some(text) = &self.config.guide_text {
            return Ok((Guide::from_text(c.guide_mode, c.info_level, text), String::new()));
        }
        let backend = self
            .guides
            .get(self.guide_seed(task, config, rep), self.witnesses[task].as_deref())
            .map_err(|e| e.to_string())?;
        let prompt = build_guide_prompt(&p.task.prompt_description(), c.guide_mode, &p.env, c.info_level);
        generate_guide(
            &p.task,
            c.guide_mode,
            c.info_level,
            &p.env,
            backend.as_ref(),
            self.config.limits.max_repeated_queries,
        )
        .map(|g| (g, prompt.user_message))
        .map_err(|e| e.to_string())
    }

    fn run_job(&self, job: &Job) -> Result<Vec<EpisodeOutcome>, HarnessError> {
        let c = &self.configurations[job.config];
        let p = &self.tasks[job.task];
        let labels = c.labels();
        let guide = if c.guide_mode == GuideStyle::None {
            Ok((Guide::none(), String::new()))
        } else if let Some(g) = self.cached_guides.get(&(job.task, job.config)) {
            g.clone()
        } else {
            self.obtain_guide(job.task, job.config, job.rep)
        };

        let mut out = Vec::new();
        for (k, label) in labels.iter().enumerate() {
            // paired runs list the guide-only half first
            let guide_only = match c.execution_mode {
                ExecutionMode::GuideOnly => true,
                ExecutionMode::Paired => k == 0,
                _ => false,
            };
            let result = match &guide {
                Err(msg) => Err(msg.clone()),
                Ok((g, _)) if guide_only => {
                    Ok(run_guide_only(&p.env, &p.task, g, &p.ledger, self.config.guide_policy)?)
                }
                Ok((g, _)) => {
                    let seed = derive_seed(self.config.seed, &["select", &p.task.name, label], job.rep);
                    match self.selection.get(seed, self.witnesses[job.task].as_deref()) {
                        Ok(b) => Ok(run_episode(&p.env, &p.task, g, b.as_ref(), &p.ledger, &self.config.limits)?),
                        Err(e) => Err(e.to_string()),
                    }
                }
            };
            out.push(self.finish(job, label, &guide, result));
        }
        Ok(out)
    }

    fn finish(
        &self,
        job: &Job,
        label: &str,
        guide: &Result<(Guide, String), String>,
        result: Result<EpisodeResult, String>,
    ) -> EpisodeOutcome {
        let task = self.tasks[job.task].task.name.clone();
        let mut outcome = EpisodeOutcome {
            task: task.clone(),
            configuration: label.to_string(),
            repetition: job.rep,
            status: EpisodeStatus::BackendError,
            plan: Vec::new(),
            retries_used: 0,
            guide_id: None,
            transcript: Vec::new(),
        };
        if let Ok((g, prompt)) = guide {
            if g.style != GuideStyle::None {
                outcome.guide_id = Some(g.id());
                outcome.transcript.push(TranscriptLine::Guide(GuideRecord {
                    episode_id: String::new(),
                    guide_id: g.id(),
                    guide: g.clone(),
                    prompt_user: prompt.clone(),
                }));
            }
        }
        match result {
            Ok(mut r) => {
                if let Some(s) = r.summary_mut() {
                    s.configuration = Some(label.to_string());
                    s.repetition = Some(job.rep);
                }
                outcome.status = r.status;
                outcome.plan = r.plan;
                outcome.retries_used = r.retries_used;
                outcome.transcript.extend(r.transcript);
            }
            Err(msg) => outcome.transcript.push(TranscriptLine::Summary(SummaryRecord {
                episode_id: String::new(),
                task,
                configuration: Some(label.to_string()),
                repetition: Some(job.rep),
                status: EpisodeStatus::BackendError,
                plan: Vec::new(),
                retries_used: 0,
                dead_end: false,
                guide_id: outcome.guide_id.clone(),
                error: Some(msg),
            })),
        }
        let id = outcome.episode_id();
        for l in &mut outcome.transcript {
            l.set_episode_id(&id);
        }
        outcome
    }
}

/// Transcript path for one repetition: `<dir>/<task>/<configuration>/rep-NNN.jsonl`.
pub fn transcript_path(dir: &Path, e: &EpisodeOutcome) -> PathBuf {
    let label: String = e
        .configuration
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-+_.".contains(c) { c } else { '_' })
        .collect();
    dir.join(&e.task).join(label).join(format!("rep-{:03}.jsonl", e.repetition))
}

fn persist(dir: &Path, e: &EpisodeOutcome) -> Result<(), HarnessError> {
    let path = transcript_path(dir, e);
    std::fs::create_dir_all(path.parent().expect("nested path"))?;
    let mut file = std::io::BufWriter::new(std::fs::File::create(&path)?);
    write_jsonl(&e.transcript, &mut file)?;
    std::io::Write::flush(&mut file)?;
    Ok(())
}

/// Folds episodes into rows, ordered by `tasks` then `labels`; unknown names go last, sorted.
pub fn aggregate(episodes: &[EpisodeOutcome], tasks: &[String], labels: &[String]) -> ResultsTable {
    let summaries: Vec<SummaryRecord> = episodes
        .iter()
        .map(|e| SummaryRecord {
            episode_id: e.episode_id(),
            task: e.task.clone(),
            configuration: Some(e.configuration.clone()),
            repetition: Some(e.repetition),
            status: e.status,
            plan: e.plan.clone(),
            retries_used: e.retries_used,
            dead_end: false,
            guide_id: e.guide_id.clone(),
            error: None,
        })
        .collect();
    table_from_summaries(&summaries, tasks, labels)
}

pub fn table_from_summaries(summaries: &[SummaryRecord], tasks: &[String], labels: &[String]) -> ResultsTable {
    // (task, label) -> (success, plan length, retries) per episode
    type Groups = HashMap<(String, String), Vec<(bool, usize, usize)>>;
    let mut groups: Groups = HashMap::new();
    for s in summaries {
        let label = s.configuration.clone().unwrap_or_default();
        groups.entry((s.task.clone(), label)).or_default().push((
            s.status == EpisodeStatus::Success,
            s.plan.len(),
            s.retries_used,
        ));
    }
    let rank = |order: &[String], name: &str| order.iter().position(|n| n == name).unwrap_or(usize::MAX);
    let mut keys: Vec<(String, String)> = groups.keys().cloned().collect();
    keys.sort_by(|a, b| {
        (rank(tasks, &a.0), &a.0, rank(labels, &a.1), &a.1).cmp(&(rank(tasks, &b.0), &b.0, rank(labels, &b.1), &b.1))
    });
    ResultsTable { rows: keys.iter().map(|k| ResultRow::from_outcomes(&k.0, &k.1, &groups[k])).collect() }
}

/// Reads every `*.jsonl` under `dir` and rebuilds the results table from the summary records.
pub fn table_from_transcripts(dir: &Path, tasks: &[String]) -> Result<ResultsTable, HarnessError> {
    let mut files = Vec::new();
    collect_jsonl(dir, &mut files)?;
    files.sort();
    let mut summaries = Vec::new();
    for f in files {
        let lines = crate::search::read_jsonl(std::io::BufReader::new(std::fs::File::open(&f)?))
            .map_err(|e| HarnessError::Config(format!("{}: {e}", f.display())))?;
        summaries.extend(lines.into_iter().filter_map(|l| match l {
            TranscriptLine::Summary(s) => Some(s),
            _ => None,
        }));
    }
    let mut labels: Vec<String> = summaries.iter().filter_map(|s| s.configuration.clone()).collect();
    labels.sort();
    labels.dedup();
    Ok(table_from_summaries(&summaries, tasks, &labels))
}

fn collect_jsonl(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), HarnessError> {
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_jsonl(&path, out)?;
        } else if path.extension().is_some_and(|e| e == "jsonl") {
            out.push(path);
        }
    }
    Ok(())
}
