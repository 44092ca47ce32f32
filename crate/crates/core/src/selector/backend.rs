use std::sync::{Condvar, Mutex};
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::action::GroundedAction;

use super::parse::{format_selection, parse_selection};
use super::prompt::{PromptContext, PromptDocument, Stage};

pub const DEFAULT_TEMPERATURE: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("HTTP status {code}: {body}")]
    Status { code: u16, body: String },
    #[error("authentication rejected ({code})")]
    Auth { code: u16 },
    #[error("request timed out")]
    Timeout,
    #[error("missing credentials: environment variable `{0}` is not set")]
    MissingCredentials(String),
    #[error("malformed reply: {0}")]
    Reply(String),
    #[error("backend cannot answer this prompt: {0}")]
    Unsupported(String),
}

/// Anything that turns a prompt into raw text. Must tolerate concurrent episodes.
pub trait Backend: Send + Sync {
    fn complete(&self, prompt: &PromptDocument) -> Result<String, BackendError>;
}

impl<B: Backend + ?Sized> Backend for Box<B> {
    fn complete(&self, prompt: &PromptDocument) -> Result<String, BackendError> {
        (**self).complete(prompt)
    }
}

impl<B: Backend + ?Sized> Backend for std::sync::Arc<B> {
    fn complete(&self, prompt: &PromptDocument) -> Result<String, BackendError> {
        (**self).complete(prompt)
    }
}

type Listed<'a> = &'a [(usize, GroundedAction)];

fn selection_context(prompt: &PromptDocument) -> Option<(Stage, usize, Listed<'_>)> {
    match &prompt.context {
        Some(PromptContext::Selection { stage, taken, options, .. }) => Some((*stage, *taken, options)),
        _ => None,
    }
}

fn answer(index: usize, action: &GroundedAction) -> String {
    format_selection(index, &action.to_ref())
}

/// Always picks the first listed option.
#[derive(Debug, Default, Clone)]
pub struct FirstOptionBackend;

impl Backend for FirstOptionBackend {
    fn complete(&self, prompt: &PromptDocument) -> Result<String, BackendError> {
        match selection_context(prompt) {
            Some((_, _, options)) => Ok(options.first().map(|(i, a)| answer(*i, a)).unwrap_or_default()),
            None => Ok(String::new()),
        }
    }
}

/// Uniformly random option; guides come back empty.
#[derive(Debug)]
pub struct UniformRandomBackend {
    rng: Mutex<ChaCha8Rng>,
}

impl UniformRandomBackend {
    pub fn new(seed: u64) -> Self {
        UniformRandomBackend { rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed)) }
    }
}

impl Backend for UniformRandomBackend {
    fn complete(&self, prompt: &PromptDocument) -> Result<String, BackendError> {
        match selection_context(prompt) {
            Some((_, _, options)) if !options.is_empty() => {
                let k = self.rng.lock().unwrap().gen_range(0..options.len());
                Ok(answer(options[k].0, &options[k].1))
            }
            _ => Ok(String::new()),
        }
    }
}

/// Replays a fixed plan: step `t` answers the plan's `t`-th action wherever it is listed.
#[derive(Debug, Clone)]
pub struct ScriptedBackend {
    plan: Vec<GroundedAction>,
    guide: String,
}

impl ScriptedBackend {
    pub fn new(plan: Vec<GroundedAction>) -> Self {
        ScriptedBackend { plan, guide: String::new() }
    }

    /// Text returned for guide-generation prompts.
    pub fn with_guide(mut self, text: &str) -> Self {
        self.guide = text.to_string();
        self
    }

    pub fn plan(&self) -> &[GroundedAction] {
        &self.plan
    }
}

impl Backend for ScriptedBackend {
    fn complete(&self, prompt: &PromptDocument) -> Result<String, BackendError> {
        let Some((_, taken, options)) = selection_context(prompt) else {
            return Ok(self.guide.clone());
        };
        let Some(want) = self.plan.get(taken) else {
            return Ok("The script has no further steps.".to_string());
        };
        let hit = options
            .iter()
            .find(|(_, a)| a == want)
            .or_else(|| options.iter().find(|(_, a)| a.to_ref() == want.to_ref()));
        Ok(match hit {
            Some((i, a)) => answer(*i, a),
            // not in this partition: any listed option; the final stage sorts it out
            None => options.first().map(|(i, a)| answer(*i, a)).unwrap_or_default(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaultKind {
    /// Right action text, index shifted by one.
    OffByOne,
    /// No selection block at all.
    Garbage,
    /// A block naming nothing on the list.
    OffList,
}

/// Which calls a fault schedule applies to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaultStage {
    Candidate,
    Final,
    Any,
}

impl FaultStage {
    fn covers(self, stage: Stage) -> bool {
        match self {
            FaultStage::Any => stage != Stage::Guide,
            FaultStage::Candidate => stage == Stage::Candidate,
            FaultStage::Final => stage == Stage::Final,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultSchedule {
    pub stage: FaultStage,
    /// Applied to the first matching calls, one each.
    #[serde(default)]
    pub faults: Vec<FaultKind>,
    /// Applied to every matching call after `faults` runs out.
    #[serde(default)]
    pub permanent: Option<FaultKind>,
}

/// Corrupts the inner backend's selections according to a schedule.
pub struct FaultyBackend<B> {
    inner: B,
    schedule: FaultSchedule,
    calls: Mutex<usize>,
}

impl<B: Backend> FaultyBackend<B> {
    pub fn new(inner: B, schedule: FaultSchedule) -> Self {
        FaultyBackend { inner, schedule, calls: Mutex::new(0) }
    }

    fn next_fault(&self, stage: Stage) -> Option<FaultKind> {
        if !self.schedule.stage.covers(stage) {
            return None;
        }
        let mut n = self.calls.lock().unwrap();
        let f = self.schedule.faults.get(*n).copied().or(self.schedule.permanent);
        *n += 1;
        f
    }
}

impl<B: Backend> Backend for FaultyBackend<B> {
    fn complete(&self, prompt: &PromptDocument) -> Result<String, BackendError> {
        let reply = self.inner.complete(prompt)?;
        let Some((stage, _, _)) = selection_context(prompt) else {
            return Ok(reply);
        };
        Ok(match self.next_fault(stage) {
            None => reply,
            Some(FaultKind::Garbage) => "I am not sure which action to take.".to_string(),
            Some(FaultKind::OffList) => "{999999 [WALK]<nowhere>}".to_string(),
            Some(FaultKind::OffByOne) => match parse_selection(&reply).parsed {
                Some((i, a)) => format_selection(i + 1, &a),
                None => reply,
            },
        })
    }
}

/// Counting gate for concurrent requests.
struct Gate {
    cap: usize,
    used: Mutex<usize>,
    freed: Condvar,
}

impl Gate {
    fn enter(&self) -> GateGuard<'_> {
        let mut used = self.used.lock().unwrap();
        while *used >= self.cap {
            used = self.freed.wait(used).unwrap();
        }
        *used += 1;
        GateGuard(self)
    }
}

struct GateGuard<'a>(&'a Gate);

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        *self.0.used.lock().unwrap() -= 1;
        self.0.freed.notify_one();
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemoteChatConfig {
    /// Base URL; `/chat/completions` is appended.
    pub endpoint: String,
    pub model: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    /// Name of the environment variable holding the API key.
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
}

fn default_temperature() -> f64 {
    DEFAULT_TEMPERATURE
}
fn default_timeout() -> u64 {
    60
}
fn default_key_env() -> String {
    "OPENAI_API_KEY".to_string()
}
fn default_in_flight() -> usize {
    4
}

/// Chat-completions client.
pub struct RemoteChatBackend {
    config: RemoteChatConfig,
    api_key: String,
    agent: ureq::Agent,
    gate: Gate,
}

impl RemoteChatBackend {
    pub fn new(config: RemoteChatConfig) -> Result<Self, BackendError> {
        let api_key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| BackendError::MissingCredentials(config.api_key_env.clone()))?;
        let agent = ureq::AgentBuilder::new().timeout(Duration::from_secs(config.timeout_secs)).build();
        Ok(RemoteChatBackend {
            gate: Gate { cap: config.max_in_flight.max(1), used: Mutex::new(0), freed: Condvar::new() },
            config,
            api_key,
            agent,
        })
    }
}

impl Backend for RemoteChatBackend {
    fn complete(&self, prompt: &PromptDocument) -> Result<String, BackendError> {
        let mut messages = Vec::new();
        if !prompt.system_message.is_empty() {
            messages.push(serde_json::json!({"role": "system", "content": prompt.system_message}));
        }
        messages.push(serde_json::json!({"role": "user", "content": prompt.full_user_message()}));
        let body = serde_json::json!({
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": messages,
        });
        let url = format!("{}/chat/completions", self.config.endpoint.trim_end_matches('/'));
        let _slot = self.gate.enter();
        let resp = self.agent.post(&url).set("Authorization", &format!("Bearer {}", self.api_key)).send_json(body);
        let resp = match resp {
            Ok(r) => r,
            Err(ureq::Error::Status(code @ (401 | 403), _)) => return Err(BackendError::Auth { code }),
            Err(ureq::Error::Status(code, r)) => {
                return Err(BackendError::Status { code, body: r.into_string().unwrap_or_default() })
            }
            Err(ureq::Error::Transport(t)) => {
                let msg = t.to_string();
                return Err(if msg.contains("timed out") {
                    BackendError::Timeout
                } else {
                    BackendError::Transport(msg)
                });
            }
        };
        let json: serde_json::Value = resp.into_json().map_err(|e| BackendError::Reply(e.to_string()))?;
        json["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| BackendError::Reply(json.to_string()))
    }
}

/// Serialized backend choice. `scripted-oracle` is resolved by the harness into a scripted
/// backend replaying the search oracle's witness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BackendConfig {
    RemoteChat(RemoteChatConfig),
    Scripted {
        plan: Vec<GroundedAction>,
        #[serde(default)]
        guide: Option<String>,
    },
    ScriptedOracle,
    FaultyWrapper {
        inner: Box<BackendConfig>,
        #[serde(flatten)]
        schedule: FaultSchedule,
    },
    UniformRandom {
        /// Overrides the experiment seed.
        #[serde(default)]
        seed: Option<u64>,
    },
    FirstOption,
}

impl BackendConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            BackendConfig::RemoteChat(_) => "remote-chat",
            BackendConfig::Scripted { .. } => "scripted",
            BackendConfig::ScriptedOracle => "scripted-oracle",
            BackendConfig::FaultyWrapper { .. } => "faulty-wrapper",
            BackendConfig::UniformRandom { .. } => "uniform-random",
            BackendConfig::FirstOption => "first-option",
        }
    }

    pub fn is_remote(&self) -> bool {
        match self {
            BackendConfig::RemoteChat(_) => true,
            BackendConfig::FaultyWrapper { inner, .. } => inner.is_remote(),
            _ => false,
        }
    }

    pub fn needs_oracle(&self) -> bool {
        match self {
            BackendConfig::ScriptedOracle => true,
            BackendConfig::FaultyWrapper { inner, .. } => inner.needs_oracle(),
            _ => false,
        }
    }

    /// Builds a fresh backend. `seed` feeds random kinds; `witness` feeds `scripted-oracle`.
    pub fn build(&self, seed: u64, witness: Option<&[GroundedAction]>) -> Result<Box<dyn Backend>, BackendError> {
        Ok(match self {
            BackendConfig::RemoteChat(c) => Box::new(RemoteChatBackend::new(c.clone())?),
            BackendConfig::Scripted { plan, guide } => {
                Box::new(ScriptedBackend::new(plan.clone()).with_guide(guide.as_deref().unwrap_or("")))
            }
            BackendConfig::ScriptedOracle => {
                let plan = witness
                    .ok_or_else(|| BackendError::Unsupported("scripted-oracle needs a witness plan".into()))?
                    .to_vec();
                let guide = plan.iter().map(|a| a.to_ref().to_guide_line()).collect::<Vec<_>>().join("\n");
                Box::new(ScriptedBackend::new(plan).with_guide(&guide))
            }
            BackendConfig::FaultyWrapper { inner, schedule } => {
                Box::new(FaultyBackend::new(inner.build(seed, witness)?, schedule.clone()))
            }
            BackendConfig::UniformRandom { seed: s } => Box::new(UniformRandomBackend::new(s.unwrap_or(seed))),
            BackendConfig::FirstOption => Box::new(FirstOptionBackend),
        })
    }
}
