use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::types::{Alignment, NightAction, PlayerId, Role};
use crate::graph::SocialAct;

/// Public echo of the setup. The seed stays out of the log: it would let any
/// reader recompute the role shuffle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicSetup {
    pub num_players: usize,
    pub role_counts: BTreeMap<Role, usize>,
    pub discussion_rounds_per_day: usize,
    pub max_days: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EliminationCause {
    NightKill,
    Vote,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndReason {
    MafiaEliminated,
    Parity,
    DayLimit,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum Event {
    GameStarted(PublicSetup),
    RoleAssigned {
        player: PlayerId,
        role: Role,
    },
    MafiaTeam {
        members: Vec<PlayerId>,
    },
    NightActionSubmitted {
        day: u32,
        actor: PlayerId,
        action: NightAction,
    },
    NightResolved {
        day: u32,
        death: Option<PlayerId>,
    },
    ProtectionApplied {
        day: u32,
        target: PlayerId,
    },
    InvestigationResult {
        day: u32,
        detective: PlayerId,
        target: PlayerId,
        alignment: Alignment,
    },
    StatementMade {
        day: u32,
        turn: u32,
        speaker: PlayerId,
        text: String,
        acts: Vec<SocialAct>,
    },
    VotingOpened {
        day: u32,
    },
    VoteCast {
        day: u32,
        turn: u32,
        voter: PlayerId,
        target: PlayerId,
    },
    VotesTallied {
        day: u32,
        counts: BTreeMap<PlayerId, usize>,
        eliminated: Option<PlayerId>,
    },
    PlayerEliminated {
        day: u32,
        player: PlayerId,
        revealed_role: Role,
        cause: EliminationCause,
    },
    GameEnded {
        winner: Alignment,
        reason: EndReason,
    },
}

impl Event {
    pub fn kind(&self) -> &'static str {
        match self {
            Event::GameStarted(_) => "game_started",
            Event::RoleAssigned { .. } => "role_assigned",
            Event::MafiaTeam { .. } => "mafia_team",
            Event::NightActionSubmitted { .. } => "night_action_submitted",
            Event::NightResolved { .. } => "night_resolved",
            Event::ProtectionApplied { .. } => "protection_applied",
            Event::InvestigationResult { .. } => "investigation_result",
            Event::StatementMade { .. } => "statement_made",
            Event::VotingOpened { .. } => "voting_opened",
            Event::VoteCast { .. } => "vote_cast",
            Event::VotesTallied { .. } => "votes_tallied",
            Event::PlayerEliminated { .. } => "player_eliminated",
            Event::GameEnded { .. } => "game_ended",
        }
    }

    /// The player who performed the event, if it was a player action.
    pub fn actor(&self) -> Option<PlayerId> {
        match *self {
            Event::NightActionSubmitted { actor, .. } => Some(actor),
            Event::StatementMade { speaker, .. } => Some(speaker),
            Event::VoteCast { voter, .. } => Some(voter),
            _ => None,
        }
    }

    /// Every player id carried in the structured payload (not free text).
    pub fn players(&self) -> Vec<PlayerId> {
        let mut out = Vec::new();
        match self {
            Event::GameStarted(_) | Event::VotingOpened { .. } | Event::GameEnded { .. } => {}
            Event::RoleAssigned { player, .. } => out.push(*player),
            Event::MafiaTeam { members } => out.extend(members),
            Event::NightActionSubmitted { actor, action, .. } => {
                out.push(*actor);
                out.push(action.target());
            }
            Event::NightResolved { death, .. } => out.extend(death),
            Event::ProtectionApplied { target, .. } => out.push(*target),
            Event::InvestigationResult { detective, target, .. } => {
                out.push(*detective);
                out.push(*target);
            }
            Event::StatementMade { speaker, acts, .. } => {
                out.push(*speaker);
                for act in acts {
                    out.extend(act.kind.target());
                }
            }
            Event::VoteCast { voter, target, .. } => {
                out.push(*voter);
                out.push(*target);
            }
            Event::VotesTallied { counts, eliminated, .. } => {
                out.extend(counts.keys());
                out.extend(eliminated);
            }
            Event::PlayerEliminated { player, .. } => out.push(*player),
        }
        out.sort();
        out.dedup();
        out
    }

    /// Events produced by the engine itself rather than by a player's input.
    pub fn is_derived(&self) -> bool {
        matches!(
            self,
            Event::RoleAssigned { .. }
                | Event::MafiaTeam { .. }
                | Event::ProtectionApplied { .. }
                | Event::InvestigationResult { .. }
                | Event::PlayerEliminated { .. }
                | Event::GameEnded { .. }
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Visibility {
    Public,
    Players(Vec<PlayerId>),
}

impl Visibility {
    pub fn allows(&self, viewer: PlayerId) -> bool {
        match self {
            Visibility::Public => true,
            Visibility::Players(ids) => ids.contains(&viewer),
        }
    }

    pub fn is_public(&self) -> bool {
        matches!(self, Visibility::Public)
    }
}

/// One entry of the append-only game log.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub seq: u64,
    pub day: u32,
    pub phase: String,
    #[serde(flatten)]
    pub event: Event,
    pub visibility: Visibility,
}
