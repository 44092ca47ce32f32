//! Data files and prompt templates compiled into the crate.

use crate::action::SchemaLedger;
use crate::env::{load_environment, EnvError, EnvironmentDocument, EnvironmentState, RuleSet};
use crate::task::TaskPack;

pub const DESK_HOME: &str = include_str!("../data/desk_home.json");
pub const FULL_HOME: &str = include_str!("../data/full_home.json");
pub const LEDGER: &str = include_str!("../data/ledger.json");
pub const RULES: &str = include_str!("../data/rules.json");
pub const TASKS: &str = include_str!("../data/tasks.json");

pub const SELECTION_SYSTEM: &str = include_str!("../templates/selection_system.txt");
pub const GUIDE_HIGH_LEVEL: &str = include_str!("../templates/guide_high_level.txt");
pub const GUIDE_LOW_LEVEL: &str = include_str!("../templates/guide_low_level.txt");
pub const RETRY_PREFIX: &str = include_str!("../templates/retry_prefix.txt");

pub fn rules() -> RuleSet {
    RuleSet::from_json(RULES).expect("bundled rules are valid")
}

fn load(text: &str) -> Result<EnvironmentState, EnvError> {
    load_environment(&EnvironmentDocument::from_json(text)?, &rules())
}

/// The reduced home (about sixty objects) used for exhaustive search.
pub fn desk_environment() -> EnvironmentState {
    load(DESK_HOME).expect("bundled desk home is valid")
}

/// The full-scale home (about 450 objects).
pub fn full_environment() -> EnvironmentState {
    load(FULL_HOME).expect("bundled full home is valid")
}

/// The full verb ledger with nothing excluded.
pub fn ledger() -> SchemaLedger {
    SchemaLedger::from_json(LEDGER).expect("bundled ledger is valid")
}

pub fn task_pack() -> TaskPack {
    TaskPack::from_json(TASKS).expect("bundled task pack is valid")
}
