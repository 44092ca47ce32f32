//! Household planning domain with selector-guided hill-climbing search.
//!
//! The crate is layered bottom-up: [`env`] holds world states, [`action`] the
//! schema ledger and transition function, [`task`] goal conditions,
//! [`selector`] everything prompt-facing, [`search`] the episode loop,
//! [`oracle`] exhaustive validation, and [`harness`] batch experiments.

pub mod action;
pub mod bundled;
pub mod env;
pub mod harness;
pub mod oracle;
pub mod pattern;
pub mod search;
pub mod selector;
pub mod task;
