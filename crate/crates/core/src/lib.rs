//! Soft-affinity scheduling from free-text allocation hints.
//!
//! A pod's `allocation_hint` annotation is turned into weighted intents
//! ([`parsers`]), scored against the cached cluster state ([`state`],
//! [`scoring`]) and served through scheduler-extender verbs ([`extender`]).
//! [`eval`] measures analyzer quality and [`sim`] replays placement scenarios
//! on a fixed topology.

pub mod error;
pub mod eval;
pub mod extender;
pub mod intent;
pub mod parsers;
pub mod scoring;
pub mod sim;
pub mod state;
