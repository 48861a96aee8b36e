//! Deterministic Secret Mafia engine.
//!
//! The game alternates Night(k) and Day(k) phases starting at Night(0). Every
//! state change is appended to an event log; private records carry the set of
//! seats allowed to read them.

mod engine;
mod event;
mod observation;
mod types;

use thiserror::Error;

pub use engine::{strict_plurality, Game};
pub use event::{EliminationCause, EndReason, Event, EventRecord, PublicSetup, Visibility};
pub use observation::Observation;
pub use types::{
    Alignment, DayStage, GameConfig, NightAction, NightActionBuffer, Phase, PlayerId, PlayerState,
    Role, MAX_PLAYERS,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("expected {expected} phase, game is in {actual}")]
    WrongPhase { expected: &'static str, actual: Phase },
    #[error("unknown player {0}")]
    UnknownPlayer(PlayerId),
    #[error("{0} is dead")]
    DeadPlayer(PlayerId),
    #[error("{actor} is {role} and cannot perform {action:?}")]
    RoleActionMismatch { actor: PlayerId, role: Role, action: NightAction },
    #[error("illegal target {target}: {reason}")]
    IllegalTarget { target: PlayerId, reason: &'static str },
}
