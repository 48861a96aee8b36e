use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::event::EventRecord;
use super::types::{Alignment, Phase, PlayerId, Role};

/// What one seat is allowed to see: public records, records addressed to it,
/// its own role and, for Mafia, its teammates.
///
/// Produced by [`Game::observation_since`](super::Game::observation_since) the
/// event lists may cover only the tail of the log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub viewer: PlayerId,
    pub viewer_role: Role,
    pub phase: Phase,
    pub roster: Vec<PlayerId>,
    pub living_players: BTreeSet<PlayerId>,
    pub role_counts: BTreeMap<Role, usize>,
    pub mafia_partners: Vec<PlayerId>,
    pub public_events: Vec<EventRecord>,
    pub private_events: Vec<EventRecord>,
}

impl Observation {
    /// Public and private records merged back into log order.
    pub fn events(&self) -> Vec<&EventRecord> {
        let mut all: Vec<&EventRecord> =
            self.public_events.iter().chain(self.private_events.iter()).collect();
        all.sort_by_key(|r| r.seq);
        all
    }

    pub fn is_alive(&self, id: PlayerId) -> bool {
        self.living_players.contains(&id)
    }

    pub fn alignment(&self) -> Alignment {
        self.viewer_role.alignment()
    }
}
