use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::action::Verb;
use crate::env::{InfoLevel, StateMutation};
use crate::search::SearchLimits;
use crate::selector::{BackendConfig, GuideStyle};

use super::HarnessError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExecutionMode {
    /// Execute the low-level guide directly as a plan (G).
    GuideOnly,
    /// Local search that sees the guide in its prompts (G+S).
    GuidedSearch,
    /// Local search without a guide (NG).
    SearchOnly,
    /// G and G+S on the very same guide.
    Paired,
}

/// What guide-only mode does with a line it cannot execute.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GuidePolicy {
    /// Stop; the repetition fails.
    #[default]
    Strict,
    /// Note the line and carry on.
    SkipInapplicable,
}

/// One column of the results table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Configuration {
    #[serde(default)]
    pub label: Option<String>,
    pub guide_mode: GuideStyle,
    pub execution_mode: ExecutionMode,
    #[serde(default = "default_level")]
    pub info_level: InfoLevel,
}

impl Configuration {
    /// Row labels: paired runs yield a `/G` and a `/G+S` label.
    pub fn labels(&self) -> Vec<String> {
        let base = self.label.clone().unwrap_or_else(|| {
            let g = match self.guide_mode {
                GuideStyle::None => "NG",
                GuideStyle::LowLevel => "LLG",
                GuideStyle::HighLevel => "HLG",
            };
            format!("{g}-{}", self.info_level)
        });
        match self.execution_mode {
            ExecutionMode::Paired => vec![format!("{base}/G"), format!("{base}/G+S")],
            ExecutionMode::GuideOnly => vec![format!("{base}/G")],
            _ => vec![base],
        }
    }

    fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        match (self.execution_mode, self.guide_mode) {
            (ExecutionMode::GuideOnly | ExecutionMode::Paired, g) if g != GuideStyle::LowLevel => {
                bad("guide-only and paired execution need guide_mode = \"low-level\"")
            }
            (ExecutionMode::SearchOnly, g) if g != GuideStyle::None => {
                bad("search-only execution needs guide_mode = \"none\"")
            }
            (ExecutionMode::GuidedSearch, GuideStyle::None) => {
                bad("guided-search needs a guide; use execution_mode = \"search-only\"")
            }
            _ => Ok(()),
        }
    }
}

fn default_level() -> InfoLevel {
    InfoLevel::None
}
fn default_environment() -> String {
    "desk".to_string()
}
fn default_name() -> String {
    "experiment".to_string()
}
fn default_repetitions() -> usize {
    50
}
fn default_workers() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    /// Task names; empty selects every task in the pack, in pack order.
    #[serde(default)]
    pub tasks: Vec<String>,
    /// `desk`, `full`, or a path to an environment document.
    #[serde(default = "default_environment")]
    pub environment: String,
    #[serde(default)]
    pub task_pack: Option<PathBuf>,
    #[serde(default)]
    pub ledger: Option<PathBuf>,
    #[serde(default)]
    pub rules: Option<PathBuf>,
    #[serde(default)]
    pub preset: Option<String>,
    /// Named task variant, applied to every selected task.
    #[serde(default)]
    pub variant: Option<String>,
    #[serde(default)]
    pub mutations: Vec<StateMutation>,
    #[serde(default)]
    pub excluded_verbs: Vec<Verb>,

    /// Shorthand for a single configuration when `configurations` is empty.
    #[serde(default)]
    pub guide_mode: Option<GuideStyle>,
    #[serde(default)]
    pub execution_mode: Option<ExecutionMode>,
    #[serde(default)]
    pub info_level: Option<InfoLevel>,
    #[serde(default)]
    pub configurations: Vec<Configuration>,

    #[serde(default)]
    pub guide_policy: GuidePolicy,
    /// Fixed guide text used instead of generating one.
    #[serde(default)]
    pub guide_text: Option<String>,
    /// Generate one guide per task and configuration and reuse it for every repetition.
    #[serde(default)]
    pub cache_guide: bool,

    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub limits: SearchLimits,
    pub backend: BackendConfig,
    /// Backend for guide generation; defaults to `backend`.
    #[serde(default)]
    pub guide_backend: Option<BackendConfig>,
    #[serde(default)]
    pub transcripts_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        toml::from_str("[backend]\nkind = \"first-option\"\n").expect("default config parses")
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let c: ExperimentConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Configurations to run, with the top-level shorthand folded in.
    pub fn resolved_configurations(&self) -> Vec<Configuration> {
        if !self.configurations.is_empty() {
            return self.configurations.clone();
        }
        let guide_mode = self.guide_mode.unwrap_or(GuideStyle::None);
        let execution_mode = self.execution_mode.unwrap_or(match guide_mode {
            GuideStyle::None => ExecutionMode::SearchOnly,
            _ => ExecutionMode::GuidedSearch,
        });
        vec![Configuration {
            label: None,
            guide_mode,
            execution_mode,
            info_level: self.info_level.unwrap_or(InfoLevel::None),
        }]
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        if self.limits.max_plan_length == 0 || self.limits.partition_size == 0 {
            return bad("max_plan_length and partition_size must be positive".into());
        }
        if !self.configurations.is_empty()
            && (self.guide_mode.is_some() || self.execution_mode.is_some() || self.info_level.is_some())
        {
            return bad("use either top-level guide_mode/execution_mode/info_level or [[configurations]]".into());
        }
        let configs = self.resolved_configurations();
        let mut labels = Vec::new();
        for c in &configs {
            c.validate()?;
            for l in c.labels() {
                if labels.contains(&l) {
                    return bad(format!("duplicate configuration label `{l}`"));
                }
                labels.push(l);
            }
        }
        Ok(())
    }
}
