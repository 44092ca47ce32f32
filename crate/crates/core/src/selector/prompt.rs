use serde::{Deserialize, Serialize};

use crate::action::{format_action, GroundedAction};
use crate::bundled;

use super::guide::{Guide, GuideStyle};

/// Which half of the two-stage selection a prompt belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Candidate,
    Final,
    Guide,
}

/// Machine-readable companion of a prompt, used only by offline backends.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PromptContext {
    Selection { stage: Stage, task: String, taken: usize, options: Vec<(usize, GroundedAction)> },
    Guide { task: String, style: GuideStyle },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromptDocument {
    pub system_message: String,
    pub user_message: String,
    /// Present iff this is a repeated query.
    pub retry_prefix: Option<String>,
    pub context: Option<PromptContext>,
}

impl PromptDocument {
    /// User message as sent: the retry prefix, a blank line, then the original prompt.
    pub fn full_user_message(&self) -> String {
        match &self.retry_prefix {
            Some(p) => format!("{p}\n\n{}", self.user_message),
            None => self.user_message.clone(),
        }
    }

    pub fn is_retry(&self) -> bool {
        self.retry_prefix.is_some()
    }

    /// The same prompt repeated after `previous` was rejected.
    pub fn repeated(&self, previous: &str) -> PromptDocument {
        PromptDocument { retry_prefix: Some(retry_prefix(previous)), ..self.clone() }
    }
}

pub fn retry_prefix(previous: &str) -> String {
    bundled::RETRY_PREFIX.replace("[PREVIOUS RESPONSE]", previous)
}

/// Option line as shown to the selector, e.g. `296 [WALK]<microwave>`.
pub fn option_line(index: usize, action: &GroundedAction) -> String {
    format!("{index} {}", format_action(action, false))
}

/// Builds a selection prompt; `description` is the task text shown to the agent.
pub fn build_selection_prompt(
    description: &str,
    guide: &Guide,
    taken: &[GroundedAction],
    options: &[(usize, GroundedAction)],
    stage: Stage,
) -> PromptDocument {
    let mut lines: Vec<String> = Vec::new();
    let step = if taken.is_empty() { "first" } else { "next" };
    lines.push(format!("What is the {step} step to high-level goal '{description}'?"));
    if guide.style != GuideStyle::None {
        let level = match guide.style {
            GuideStyle::HighLevel => "high",
            _ => "low",
        };
        lines.push(format!(
            "**A pregenerated {level}-level plan estimate (might have missing, additional or impossible actions) has been provided:**"
        ));
        lines.extend(guide.lines.iter().map(|l| format!("{l}  ")));
        lines.push(String::new());
    }
    lines.push("**The actions you have already taken are**:".to_string());
    lines.extend(taken.iter().map(|a| format_action(a, false)));
    lines.push(String::new());
    lines.push("**The list of actions available to you are:**".to_string());
    lines.extend(options.iter().map(|(i, a)| option_line(*i, a)));

    PromptDocument {
        system_message: bundled::SELECTION_SYSTEM.to_string(),
        user_message: lines.join("\n"),
        retry_prefix: None,
        context: Some(PromptContext::Selection {
            stage,
            task: description.to_string(),
            taken: taken.len(),
            options: options.to_vec(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::Verb;
    use crate::env::InfoLevel;

    #[test]
    fn empty_guide_and_first_step() {
        let opts = vec![(0, GroundedAction::new(Verb::Walk, &[("kitchen", 100)]))];
        let p = build_selection_prompt("watch tv", &Guide::none(), &[], &opts, Stage::Candidate);
        assert_eq!(
            p.user_message,
            "What is the first step to high-level goal 'watch tv'?\n\
             **The actions you have already taken are**:\n\
             \n\
             **The list of actions available to you are:**\n\
             0 [WALK]<kitchen>"
        );
        assert!(!p.is_retry());
    }

    #[test]
    fn high_level_header() {
        let g = Guide {
            style: GuideStyle::HighLevel,
            lines: vec!["Walk to the kitchen".into()],
            info_level: InfoLevel::None,
        };
        let taken = vec![GroundedAction::new(Verb::Walk, &[("kitchen", 100)])];
        let p = build_selection_prompt("x", &g, &taken, &[(4, taken[0].clone())], Stage::Final);
        assert!(p
            .user_message
            .starts_with("What is the next step to high-level goal 'x'?\n**A pregenerated high-level plan estimate"));
        assert!(p.user_message.contains("Walk to the kitchen  \n\n"));
    }

    #[test]
    fn retry_wraps_previous_response() {
        let opts = vec![(12, GroundedAction::new(Verb::Walk, &[("bottle", 7)]))];
        let p = build_selection_prompt("x", &Guide::none(), &[], &opts, Stage::Final).repeated("{15 [WALK]<bottle>}");
        let full = p.full_user_message();
        assert!(full.starts_with(
            "This query is being repeated for you. Your previous response was {15 [WALK]<bottle>}, but this was not one of the options available to you."
        ));
        assert!(full.ends_with(&p.user_message));
        assert!(full.contains("correct format. \n\nWhat is the first step"));
    }
}
