//! Secret Mafia engine with a memory-driven social-reasoning agent.
//!
//! - [`game`]: the deterministic rules engine and its event log.
//! - [`graph`]: the social alignment graph built from discussion and votes.
//! - [`memory`]: per-agent player profiles, act extraction and contradiction detection.
//! - [`agent`]: reviewer, tone selector and action executor pipeline.
//! - [`benchmark`]: curated scenario cases and their two-metric scoring.
//! - [`arena`]: matches, tournaments, ratings, transcripts and replay.

pub mod agent;
pub mod arena;
pub mod benchmark;
pub mod game;
pub mod graph;
pub mod memory;

pub use game::{Alignment, Game, GameConfig, GameError, NightAction, Observation, Phase, PlayerId, Role};
pub use graph::{SocialAct, SocialAlignmentGraph};
pub use memory::RevacMemory;
