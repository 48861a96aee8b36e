use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::GameError;

/// Seat number of a player, rendered as `P0`, `P1`, ...
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct PlayerId(pub u8);

// Accepts a number or a numeric string, so ids also load as JSON map keys
// inside flattened records.
impl<'de> Deserialize<'de> for PlayerId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = PlayerId;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a player number")
            }

            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<PlayerId, E> {
                u8::try_from(v).map(PlayerId).map_err(|_| E::custom(format!("player number {v} out of range")))
            }

            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<PlayerId, E> {
                u64::try_from(v).map_err(|_| E::custom("negative player number")).and_then(|v| self.visit_u64(v))
            }

            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<PlayerId, E> {
                v.parse::<u8>().map(PlayerId).map_err(|_| E::custom(format!("invalid player number `{v}`")))
            }
        }
        d.deserialize_any(V)
    }
}

impl PlayerId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.0)
    }
}

impl From<u8> for PlayerId {
    fn from(v: u8) -> Self {
        PlayerId(v)
    }
}

/// Declaration order doubles as the tie-break order for role predictions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Villager,
    Doctor,
    Detective,
    Mafia,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::Villager, Role::Doctor, Role::Detective, Role::Mafia];

    pub fn alignment(self) -> Alignment {
        match self {
            Role::Mafia => Alignment::Mafia,
            Role::Villager | Role::Doctor | Role::Detective => Alignment::Village,
        }
    }

    /// Roles that at most one player may hold; a second claim is a counter-claim.
    pub fn is_unique(self) -> bool {
        matches!(self, Role::Doctor | Role::Detective)
    }

    pub fn name(self) -> &'static str {
        match self {
            Role::Villager => "Villager",
            Role::Doctor => "Doctor",
            Role::Detective => "Detective",
            Role::Mafia => "Mafia",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alignment {
    Village,
    Mafia,
}

impl fmt::Display for Alignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Alignment::Village => f.write_str("Village"),
            Alignment::Mafia => f.write_str("Mafia"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerState {
    pub id: PlayerId,
    pub role: Role,
    pub alive: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameConfig {
    pub num_players: usize,
    pub role_counts: BTreeMap<Role, usize>,
    #[serde(default = "default_rounds")]
    pub discussion_rounds_per_day: usize,
    #[serde(default = "default_max_days")]
    pub max_days: u32,
    #[serde(default)]
    pub seed: u64,
}

fn default_rounds() -> usize {
    2
}

fn default_max_days() -> u32 {
    10
}

pub const MAX_PLAYERS: usize = 64;

impl Default for GameConfig {
    /// Six seats: two Mafia, one Doctor, one Detective, two Villagers.
    fn default() -> Self {
        GameConfig::with_counts(2, 1, 1, 2)
    }
}

impl GameConfig {
    pub fn with_counts(mafia: usize, doctor: usize, detective: usize, villager: usize) -> Self {
        let role_counts = BTreeMap::from([
            (Role::Villager, villager),
            (Role::Doctor, doctor),
            (Role::Detective, detective),
            (Role::Mafia, mafia),
        ]);
        GameConfig {
            num_players: mafia + doctor + detective + villager,
            role_counts,
            discussion_rounds_per_day: default_rounds(),
            max_days: default_max_days(),
            seed: 0,
        }
    }

    pub fn seeded(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn count(&self, role: Role) -> usize {
        self.role_counts.get(&role).copied().unwrap_or(0)
    }

    pub fn mafia_count(&self) -> usize {
        self.count(Role::Mafia)
    }

    pub fn village_count(&self) -> usize {
        self.num_players - self.mafia_count().min(self.num_players)
    }

    pub fn validate(&self) -> Result<(), GameError> {
        let total: usize = self.role_counts.values().sum();
        let fail = |msg: String| Err(GameError::InvalidConfig(msg));
        if total != self.num_players {
            return fail(format!(
                "role counts sum to {total} but num_players is {}",
                self.num_players
            ));
        }
        if self.num_players > MAX_PLAYERS {
            return fail(format!("at most {MAX_PLAYERS} players are supported"));
        }
        let mafia = self.mafia_count();
        if mafia == 0 {
            return fail("at least one Mafia member is required".into());
        }
        if mafia >= self.num_players - mafia {
            return fail(format!(
                "{mafia} Mafia against {} village-aligned players already meets parity",
                self.num_players - mafia
            ));
        }
        for role in [Role::Doctor, Role::Detective] {
            if self.count(role) > 1 {
                return fail(format!("at most one {role} is allowed"));
            }
        }
        if self.max_days == 0 {
            return fail("max_days must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DayStage {
    Discussion,
    Voting,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
pub enum Phase {
    Night { day: u32 },
    Day { day: u32, stage: DayStage },
    Ended { winner: Alignment },
}

impl Phase {
    pub fn day(&self) -> Option<u32> {
        match *self {
            Phase::Night { day } | Phase::Day { day, .. } => Some(day),
            Phase::Ended { .. } => None,
        }
    }

    /// Short label used in transcript records.
    pub fn label(&self) -> &'static str {
        match self {
            Phase::Night { .. } => "night",
            Phase::Day { stage: DayStage::Discussion, .. } => "discussion",
            Phase::Day { stage: DayStage::Voting, .. } => "voting",
            Phase::Ended { .. } => "ended",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phase::Night { day } => write!(f, "N{day}"),
            Phase::Day { day, stage: DayStage::Discussion } => write!(f, "D{day} discussion"),
            Phase::Day { day, stage: DayStage::Voting } => write!(f, "D{day} voting"),
            Phase::Ended { winner } => write!(f, "ended ({winner} won)"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NightAction {
    Kill(PlayerId),
    Protect(PlayerId),
    Investigate(PlayerId),
}

impl NightAction {
    pub fn target(self) -> PlayerId {
        match self {
            NightAction::Kill(t) | NightAction::Protect(t) | NightAction::Investigate(t) => t,
        }
    }

    /// The only role allowed to perform this action.
    pub fn required_role(self) -> Role {
        match self {
            NightAction::Kill(_) => Role::Mafia,
            NightAction::Protect(_) => Role::Doctor,
            NightAction::Investigate(_) => Role::Detective,
        }
    }
}

/// Pending night choices. Every Mafia submission is kept; the lowest-id living
/// submitter decides the kill.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NightActionBuffer {
    pub kill_votes: BTreeMap<PlayerId, PlayerId>,
    pub doctor_target: Option<PlayerId>,
    pub detective_target: Option<PlayerId>,
}

impl NightActionBuffer {
    pub fn mafia_target(&self) -> Option<PlayerId> {
        self.kill_votes.values().next().copied()
    }

    pub fn clear(&mut self) {
        *self = NightActionBuffer::default();
    }
}
