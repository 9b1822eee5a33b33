//! flocksim — a deterministic agent-based simulator of a microblogging
//! platform, plus a feature-based bot-detection pipeline.
//!
//! The crate is organized around a single-threaded discrete-event engine
//! ([`engine::Engine`]) that drives a simulated platform ([`platform::Platform`])
//! populated by human agents ([`agents::human`]) and scripted bot agents
//! ([`agents::bot`]). The [`detection`] module scores accounts from their
//! observable history alone, and [`experiment`] orchestrates the standard
//! two-phase scenario (network growth, coordinated hashtag push) together
//! with baseline sampling and rank-sum cohort statistics.
//!
//! Everything is reproducible: a single root seed derives labeled random
//! substreams ([`rng::derive_stream`]), and every platform mutation is an
//! engine event, so a persisted event log can be replayed against a fresh
//! platform to reproduce the final state exactly.

pub mod agents;
pub mod config;
pub mod content;
pub mod detection;
pub mod engine;
pub mod experiment;
pub mod export;
pub mod platform;
pub mod rng;
pub mod stats;
pub mod time;

pub use content::ContentDescriptor;
pub use engine::{Actor, Engine, EventRecord};
pub use platform::{AccountId, Archetype, Platform, PostId, PostKind};
pub use rng::{derive_stream, RandomStream};
pub use time::SimTime;
