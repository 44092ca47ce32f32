//! Tasks: descriptions shown to the agent and hidden goal/failure conditions.

mod condition;

use serde::{Deserialize, Serialize};

use crate::action::Verb;
use crate::env::{EnvironmentState, StateMutation};

pub use condition::{evaluate, parse_condition, AtomPredicate, CompiledCondition, Condition, ConditionAtom, NameRef};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TaskError {
    #[error("condition syntax: {0}")]
    Syntax(String),
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("`{predicate}` takes {expected} argument(s), got {got}")]
    Arity { predicate: String, expected: usize, got: usize },
    #[error("no object named `{0}` in this environment")]
    UnknownName(String),
    #[error("task pack: {0}")]
    Pack(String),
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("task `{task}` has no variant `{variant}`")]
    UnknownVariant { task: String, variant: String },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaskStatus {
    Ongoing,
    Success,
    FailureConditions,
}

/// Named alternative setup of a task: hint text, forced states, disabled verbs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskVariant {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suffix: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mutations: Vec<StateMutation>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub excluded_verbs: Vec<Verb>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskDefinition {
    pub name: String,
    pub description: String,
    pub goal: Condition,
    pub failure: Option<Condition>,
    pub hint_suffix: Option<String>,
    pub variants: Vec<TaskVariant>,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawTask {
    name: String,
    description: String,
    goal: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    failure: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hint_suffix: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    variants: Vec<TaskVariant>,
}

impl TaskDefinition {
    pub fn new(name: &str, description: &str, goal: &str, failure: Option<&str>) -> Result<Self, TaskError> {
        if description.trim().is_empty() {
            return Err(TaskError::Pack(format!("task `{name}` has an empty description")));
        }
        Ok(TaskDefinition {
            name: name.to_string(),
            description: description.to_string(),
            goal: goal.parse()?,
            failure: failure.map(str::parse).transpose()?,
            hint_suffix: None,
            variants: Vec::new(),
        })
    }

    /// Description shown to the agent, hint included.
    pub fn prompt_description(&self) -> String {
        match &self.hint_suffix {
            Some(s) => format!("{}{}", self.description, s),
            None => self.description.clone(),
        }
    }

    pub fn variant(&self, name: &str) -> Result<&TaskVariant, TaskError> {
        self.variants
            .iter()
            .find(|v| v.name == name)
            .ok_or_else(|| TaskError::UnknownVariant { task: self.name.clone(), variant: name.to_string() })
    }

    /// The task as seen under a variant (hint applied); mutations and exclusions stay on the variant.
    pub fn with_variant(&self, variant: &TaskVariant) -> TaskDefinition {
        let mut t = self.clone();
        if let Some(s) = &variant.suffix {
            t.hint_suffix = Some(s.clone());
        }
        t
    }

    pub fn compile(&self, state: &EnvironmentState) -> Result<CompiledTask, TaskError> {
        Ok(CompiledTask {
            goal: self.goal.compile(state)?,
            failure: self.failure.as_ref().map(|f| f.compile(state)).transpose()?,
        })
    }
}

/// Goal and failure resolved against one environment, for repeated classification.
#[derive(Clone, Debug)]
pub struct CompiledTask {
    pub goal: CompiledCondition,
    pub failure: Option<CompiledCondition>,
}

impl CompiledTask {
    /// Goal first: a state meeting both counts as success.
    pub fn classify(&self, state: &EnvironmentState) -> TaskStatus {
        if self.goal.holds(state) {
            TaskStatus::Success
        } else if self.failure.as_ref().is_some_and(|f| f.holds(state)) {
            TaskStatus::FailureConditions
        } else {
            TaskStatus::Ongoing
        }
    }
}

pub fn classify(state: &EnvironmentState, task: &TaskDefinition) -> Result<TaskStatus, TaskError> {
    Ok(task.compile(state)?.classify(state))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preset {
    pub name: String,
    pub mutations: Vec<StateMutation>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskPack {
    pub presets: Vec<Preset>,
    pub tasks: Vec<TaskDefinition>,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawPack {
    #[serde(default)]
    presets: Vec<Preset>,
    tasks: Vec<RawTask>,
}

impl TaskPack {
    pub fn from_json(text: &str) -> Result<TaskPack, TaskError> {
        let raw: RawPack = serde_json::from_str(text).map_err(|e| TaskError::Pack(e.to_string()))?;
        let mut tasks = Vec::with_capacity(raw.tasks.len());
        for r in raw.tasks {
            if tasks.iter().any(|t: &TaskDefinition| t.name == r.name) {
                return Err(TaskError::Pack(format!("task `{}` declared twice", r.name)));
            }
            let mut t = TaskDefinition::new(&r.name, &r.description, &r.goal, r.failure.as_deref())?;
            t.hint_suffix = r.hint_suffix;
            t.variants = r.variants;
            tasks.push(t);
        }
        Ok(TaskPack { presets: raw.presets, tasks })
    }

    pub fn to_json(&self) -> String {
        let raw = RawPack {
            presets: self.presets.clone(),
            tasks: self
                .tasks
                .iter()
                .map(|t| RawTask {
                    name: t.name.clone(),
                    description: t.description.clone(),
                    goal: t.goal.to_string(),
                    failure: t.failure.as_ref().map(ToString::to_string),
                    hint_suffix: t.hint_suffix.clone(),
                    variants: t.variants.clone(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&raw).expect("task pack serializes")
    }

    pub fn task(&self, name: &str) -> Result<&TaskDefinition, TaskError> {
        self.tasks.iter().find(|t| t.name == name).ok_or_else(|| TaskError::UnknownTask(name.to_string()))
    }

    pub fn preset(&self, name: &str) -> Result<&Preset, TaskError> {
        self.presets.iter().find(|p| p.name == name).ok_or_else(|| TaskError::UnknownPreset(name.to_string()))
    }
}
