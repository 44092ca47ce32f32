use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::action::{ActionRef, GroundedAction};
use crate::selector::{Guide, Stage};

/// How a reply deviated from the options it was given.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectionKind {
    /// Index and action text disagree; candidates were expanded by name.
    Mismatch,
    /// Mismatched, and neither the index nor the name resolved to anything.
    Unresolvable,
    /// No selection block in the reply.
    Unparseable,
    /// Final-stage reply rejected; the query is repeated.
    Repeat,
}

/// One backend call.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallRecord {
    pub episode_id: String,
    pub step: usize,
    pub stage: Stage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition_index: Option<usize>,
    pub prompt_system: String,
    pub prompt_user: String,
    pub raw_response: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parsed_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parsed_action: Option<ActionRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correction_kind: Option<CorrectionKind>,
    /// Global indices this reply put on the candidate list.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub added: Vec<usize>,
    pub retries_so_far: usize,
}

impl CallRecord {
    pub fn is_repeat(&self) -> bool {
        self.prompt_user.starts_with("This query is being repeated for you.")
    }
}

/// Free-form event: dead ends, skipped guide lines and the like.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoteRecord {
    pub episode_id: String,
    pub step: usize,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub episode_id: String,
    pub task: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub configuration: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repetition: Option<usize>,
    pub status: super::EpisodeStatus,
    pub plan: Vec<GroundedAction>,
    pub retries_used: usize,
    pub dead_end: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guide_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// The guide an episode was given, and how it was obtained.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuideRecord {
    pub episode_id: String,
    pub guide_id: String,
    pub guide: Guide,
    /// Empty when the guide was supplied rather than generated.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub prompt_user: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TranscriptLine {
    Guide(GuideRecord),
    Call(CallRecord),
    Note(NoteRecord),
    Summary(SummaryRecord),
}

impl TranscriptLine {
    pub fn set_episode_id(&mut self, id: &str) {
        let slot = match self {
            TranscriptLine::Guide(r) => &mut r.episode_id,
            TranscriptLine::Call(r) => &mut r.episode_id,
            TranscriptLine::Note(r) => &mut r.episode_id,
            TranscriptLine::Summary(r) => &mut r.episode_id,
        };
        *slot = id.to_string();
    }
}

pub fn write_jsonl(lines: &[TranscriptLine], mut out: impl Write) -> io::Result<()> {
    for l in lines {
        serde_json::to_writer(&mut out, l)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl(input: impl BufRead) -> io::Result<Vec<TranscriptLine>> {
    let mut lines = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        lines.push(serde_json::from_str(&line).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?);
    }
    Ok(lines)
}
