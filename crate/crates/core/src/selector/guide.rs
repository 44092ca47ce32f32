use std::hash::{DefaultHasher, Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::action::{parse_guide_line, ActionRef};
use crate::bundled;
use crate::env::{render_environment_info, EnvironmentState, InfoLevel};
use crate::task::TaskDefinition;

use super::backend::{Backend, BackendError};
use super::prompt::{PromptContext, PromptDocument};

const MARKER: &str = "[ENVIRONMENT INFO WOULD GO HERE]";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GuideStyle {
    None,
    LowLevel,
    HighLevel,
}

impl std::str::FromStr for GuideStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "none" | "ng" => Ok(GuideStyle::None),
            "low-level" | "low" | "llg" => Ok(GuideStyle::LowLevel),
            "high-level" | "high" | "hlg" => Ok(GuideStyle::HighLevel),
            other => Err(format!("unknown guide style `{other}`")),
        }
    }
}

impl std::fmt::Display for GuideStyle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GuideStyle::None => "none",
            GuideStyle::LowLevel => "low-level",
            GuideStyle::HighLevel => "high-level",
        })
    }
}

/// A solution estimate shown to the selector; low-level lines double as a plan.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Guide {
    pub style: GuideStyle,
    pub lines: Vec<String>,
    pub info_level: InfoLevel,
}

#[derive(Debug, thiserror::Error)]
pub enum GuideError {
    #[error("guide style `none` cannot be generated")]
    NoStyle,
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("low-level guide still unparseable after {attempts} attempt(s): line `{line}`")]
    Unparseable { attempts: usize, line: String },
}

impl Guide {
    pub fn none() -> Guide {
        Guide { style: GuideStyle::None, lines: Vec::new(), info_level: InfoLevel::None }
    }

    /// Splits a raw reply into trimmed, non-empty lines.
    pub fn from_text(style: GuideStyle, info_level: InfoLevel, text: &str) -> Guide {
        let lines = if style == GuideStyle::None {
            Vec::new()
        } else {
            text.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_string).collect()
        };
        Guide { style, lines, info_level }
    }

    /// Parsed low-level lines; the first failure is returned as the offending text.
    pub fn action_refs(&self) -> Result<Vec<ActionRef>, String> {
        self.lines.iter().map(|l| parse_guide_line(l).map_err(|_| l.clone())).collect()
    }

    /// Content hash, recorded in transcripts so paired runs can be matched up.
    pub fn id(&self) -> String {
        let mut h = DefaultHasher::new();
        self.style.hash(&mut h);
        self.info_level.as_str().hash(&mut h);
        self.lines.hash(&mut h);
        format!("{:016x}", h.finish())
    }
}

/// Guide-generation prompt: the template with the task and the environment listing spliced in.
pub fn build_guide_prompt(
    description: &str,
    style: GuideStyle,
    env: &EnvironmentState,
    level: InfoLevel,
) -> PromptDocument {
    let template = match style {
        GuideStyle::HighLevel => bundled::GUIDE_HIGH_LEVEL,
        _ => bundled::GUIDE_LOW_LEVEL,
    };
    let body = if level == InfoLevel::None {
        template.replacen(&format!("{MARKER}\n\n"), "", 1)
    } else {
        template.replacen(MARKER, &render_environment_info(env, level), 1)
    };
    PromptDocument {
        system_message: String::new(),
        user_message: body.replace("{task}", description),
        retry_prefix: None,
        context: Some(PromptContext::Guide { task: description.to_string(), style }),
    }
}

/// Asks the backend for a guide. Low-level replies are re-requested (up to `retries` more times)
/// until every line parses.
pub fn generate_guide(
    task: &TaskDefinition,
    style: GuideStyle,
    level: InfoLevel,
    env: &EnvironmentState,
    backend: &dyn Backend,
    retries: usize,
) -> Result<Guide, GuideError> {
    if style == GuideStyle::None {
        return Err(GuideError::NoStyle);
    }
    let prompt = build_guide_prompt(&task.prompt_description(), style, env, level);
    let mut attempts = 0;
    loop {
        attempts += 1;
        let raw = backend.complete(&prompt)?;
        let guide = Guide::from_text(style, level, &raw);
        if style == GuideStyle::HighLevel {
            return Ok(guide);
        }
        match guide.action_refs() {
            Ok(_) => return Ok(guide),
            Err(line) if attempts > retries => return Err(GuideError::Unparseable { attempts, line }),
            Err(_) => {}
        }
    }
}
