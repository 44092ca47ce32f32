//! The selector side: prompts, guides, reply parsing and the backends that answer them.

mod backend;
mod guide;
mod parse;
mod prompt;

pub use backend::{
    Backend, BackendConfig, BackendError, FaultKind, FaultSchedule, FaultStage, FaultyBackend, FirstOptionBackend,
    RemoteChatBackend, RemoteChatConfig, ScriptedBackend, UniformRandomBackend, DEFAULT_TEMPERATURE,
};
pub use guide::{build_guide_prompt, generate_guide, Guide, GuideError, GuideStyle};
pub use parse::{format_selection, parse_selection, SelectionResponse};
pub use prompt::{build_selection_prompt, option_line, retry_prefix, PromptContext, PromptDocument, Stage};
