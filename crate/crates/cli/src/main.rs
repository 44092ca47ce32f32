use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use hillplan::action::parse_action;
use hillplan::env::{load_environment, EnvironmentDocument, InfoLevel, RuleSet};
use hillplan::harness::{
    prepare_task, render_table, run_experiment_in, table_from_transcripts, ExperimentConfig, HarnessError, TableFormat,
    Workspace,
};
use hillplan::oracle::{min_plan_search, validate_plan};
use hillplan::selector::{generate_guide, BackendConfig, GuideStyle};

#[derive(Parser)]
#[command(name = "hillplan", version, about = "Selector-guided hill-climbing planner for a household domain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Where tasks run: environment, preset and variant.
#[derive(clap::Args, Clone)]
struct Setting {
    /// `desk`, `full`, or a path to an environment document.
    #[arg(long, default_value = "desk")]
    environment: String,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    variant: Option<String>,
    /// Task pack JSON (defaults to the bundled pack).
    #[arg(long)]
    tasks: Option<PathBuf>,
}

impl Setting {
    fn config(&self) -> ExperimentConfig {
        ExperimentConfig {
            environment: self.environment.clone(),
            preset: self.preset.clone(),
            variant: self.variant.clone(),
            task_pack: self.tasks.clone(),
            ..ExperimentConfig::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a TOML config and print the results table.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Replace the selection backend with a simple kind (scripted-oracle, first-option, uniform-random).
        #[arg(long)]
        backend: Option<String>,
        #[arg(long)]
        repetitions: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        /// Comma-separated task names.
        #[arg(long, value_delimiter = ',')]
        task: Vec<String>,
        #[arg(long)]
        transcripts: Option<PathBuf>,
        #[arg(long)]
        cache_guide: bool,
        #[arg(long, default_value = "md")]
        format: TableFormat,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Generate a guide for one task.
    GenGuide {
        #[arg(long)]
        task: String,
        #[arg(long, default_value = "low-level")]
        style: GuideStyle,
        #[arg(long, default_value = "none")]
        info_level: InfoLevel,
        /// Backend config file (TOML, one `kind = ...` table); defaults to first-option.
        #[arg(long)]
        backend_config: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        retries: usize,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        setting: Setting,
    },
    /// Exhaustive minimum-length plan search for one task.
    Oracle {
        #[arg(long)]
        task: String,
        #[arg(long, default_value_t = 20)]
        bound: usize,
        /// Also write the witness plan, one action per line.
        #[arg(long)]
        plan_out: Option<PathBuf>,
        #[command(flatten)]
        setting: Setting,
    },
    /// Replay a plan file (one `[VERB]<name>(id)...` per line) and classify the end state.
    Validate {
        #[arg(long)]
        task: String,
        #[arg(long)]
        plan: PathBuf,
        #[command(flatten)]
        setting: Setting,
    },
    /// Rebuild a results table from a transcript directory.
    Report {
        #[arg(long)]
        transcripts: PathBuf,
        #[arg(long, default_value = "md")]
        format: TableFormat,
    },
    /// Environment document tools.
    Env {
        #[command(subcommand)]
        command: EnvCommand,
    },
}

#[derive(Subcommand)]
enum EnvCommand {
    /// Load and lint an environment document.
    Check {
        path: PathBuf,
        #[arg(long)]
        rules: Option<PathBuf>,
    },
}

fn emit(text: &str, output: Option<&Path>) -> anyhow::Result<()> {
    match output {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
            Ok(())
        }
    }
}

fn simple_backend(kind: &str) -> Result<BackendConfig, HarnessError> {
    toml::from_str(&format!("kind = {kind:?}"))
        .map_err(|e| HarnessError::Config(format!("--backend `{kind}`: {}", e.message())))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run {
            config,
            backend,
            repetitions,
            seed,
            workers,
            task,
            transcripts,
            cache_guide,
            format,
            output,
        } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| HarnessError::Config(format!("{}: {e}", config.display())))?;
            let mut cfg = ExperimentConfig::from_toml(&text)?;
            if let Some(b) = backend {
                cfg.backend = simple_backend(&b)?;
            }
            if let Some(r) = repetitions {
                cfg.repetitions = r;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(w) = workers {
                cfg.workers = w;
            }
            if !task.is_empty() {
                cfg.tasks = task;
            }
            if transcripts.is_some() {
                cfg.transcripts_dir = transcripts;
            }
            cfg.cache_guide |= cache_guide;
            cfg.validate()?;
            let ws = Workspace::load(&cfg)?;
            let report = run_experiment_in(&ws, &cfg)?;
            emit(&render_table(&report.table, format), output.as_deref())
        }
        Command::GenGuide { task, style, info_level, backend_config, retries, output, setting } => {
            let cfg = setting.config();
            let ws = Workspace::load(&cfg)?;
            let prepared = prepare_task(&ws, &cfg, &task)?;
            let backend_cfg = match backend_config {
                Some(p) => {
                    let text = std::fs::read_to_string(&p)
                        .map_err(|e| HarnessError::Config(format!("{}: {e}", p.display())))?;
                    toml::from_str(&text).map_err(|e| HarnessError::Config(e.to_string()))?
                }
                None => BackendConfig::FirstOption,
            };
            let witness = if backend_cfg.needs_oracle() {
                min_plan_search(&prepared.env, &prepared.task, &prepared.ledger, 20)
                    .map_err(HarnessError::from)?
                    .witness_plan
            } else {
                None
            };
            let backend = backend_cfg.build(0, witness.as_deref()).map_err(HarnessError::from)?;
            let guide = generate_guide(&prepared.task, style, info_level, &prepared.env, backend.as_ref(), retries)
                .map_err(|e| match e {
                    hillplan::selector::GuideError::Backend(b) => HarnessError::Backend(b),
                    other => HarnessError::Config(other.to_string()),
                })?;
            emit(&guide.lines.join("\n"), output.as_deref())
        }
        Command::Oracle { task, bound, plan_out, setting } => {
            if bound == 0 {
                return Err(HarnessError::Config("--bound must be at least 1".into()).into());
            }
            let cfg = setting.config();
            let ws = Workspace::load(&cfg)?;
            let p = prepare_task(&ws, &cfg, &task)?;
            let report = min_plan_search(&p.env, &p.task, &p.ledger, bound).map_err(HarnessError::from)?;
            if let (Some(path), Some(plan)) = (plan_out, &report.witness_plan) {
                let text: String = plan.iter().map(|a| format!("{a}\n")).collect();
                std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            }
            emit(&serde_json::to_string_pretty(&report)?, None)
        }
        Command::Validate { task, plan, setting } => {
            let cfg = setting.config();
            let ws = Workspace::load(&cfg)?;
            let p = prepare_task(&ws, &cfg, &task)?;
            let text =
                std::fs::read_to_string(&plan).map_err(|e| HarnessError::Config(format!("{}: {e}", plan.display())))?;
            let actions = text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(|l| parse_action(l).map_err(|e| HarnessError::Config(format!("plan line `{l}`: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            let report = validate_plan(&p.env, &actions, &p.task, &p.ledger).map_err(HarnessError::from)?;
            emit(&serde_json::to_string_pretty(&report)?, None)
        }
        Command::Report { transcripts, format } => {
            let order: Vec<String> = hillplan::bundled::task_pack().tasks.into_iter().map(|t| t.name).collect();
            let table = table_from_transcripts(&transcripts, &order)?;
            emit(&render_table(&table, format), None)
        }
        Command::Env { command: EnvCommand::Check { path, rules } } => {
            let rules = match rules {
                Some(p) => {
                    let text = std::fs::read_to_string(&p)
                        .map_err(|e| HarnessError::Config(format!("{}: {e}", p.display())))?;
                    RuleSet::from_json(&text).map_err(HarnessError::from)?
                }
                None => hillplan::bundled::rules(),
            };
            let text = std::fs::read_to_string(&path)
                .map_err(|e| HarnessError::Environment(format!("{}: {e}", path.display())))?;
            let doc = EnvironmentDocument::from_json(&text).map_err(HarnessError::from)?;
            let env = load_environment(&doc, &rules).map_err(HarnessError::from)?;
            let summary = serde_json::json!({
                "ok": true,
                "objects": env.object_count(),
                "relations": env.relation_count(),
            });
            emit(&summary.to_string(), None)
        }
    }
}

fn classify(e: &anyhow::Error) -> (&'static str, u8) {
    match e.downcast_ref::<HarnessError>() {
        Some(HarnessError::Config(_)) => ("config", 2),
        Some(HarnessError::Environment(_)) => ("environment", 3),
        Some(HarnessError::Backend(_)) => ("backend", 4),
        Some(HarnessError::Io(_)) | None => ("io", 1),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (kind, code) = classify(&e);
            let line = serde_json::json!({ "error": kind, "message": format!("{e:#}") });
            eprintln!("{line}");
            ExitCode::from(code)
        }
    }
}
