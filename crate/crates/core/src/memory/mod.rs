//! Per-agent persistent memory: player profiles, the social alignment graph
//! and facts the owner knows first-hand.

mod contradiction;
mod extract;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{
    Alignment, EliminationCause, Event, EventRecord, Observation, PlayerId, Role,
};
use crate::graph::{ActKind, GraphError, SocialAct, SocialAlignmentGraph};

pub use contradiction::{verify_contradiction, ContradictionKind, ContradictionRecord};
pub use extract::{extract_acts, extract_mentions, referenced_ids, Ability, AbilityMention};

pub const DEFAULT_DIGEST_CAP: usize = 8;
const DIGEST_TEXT_LIMIT: usize = 160;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MemoryError {
    #[error("event seq {seq} is not after the last processed seq {last}")]
    OutOfOrder { seq: u64, last: u64 },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim {
    pub role: Role,
    pub day: u32,
    pub seq: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlayerProfile {
    pub player: PlayerId,
    pub claims: Vec<Claim>,
    pub votes_cast: Vec<(PlayerId, u32)>,
    pub statement_digest: VecDeque<String>,
    pub consistency_flags: Vec<ContradictionRecord>,
    pub last_updated: Option<(u32, u32)>,
}

impl PlayerProfile {
    fn new(player: PlayerId) -> Self {
        PlayerProfile {
            player,
            claims: Vec::new(),
            votes_cast: Vec::new(),
            statement_digest: VecDeque::new(),
            consistency_flags: Vec::new(),
            last_updated: None,
        }
    }

    pub fn latest_claim(&self) -> Option<Role> {
        self.claims.last().map(|c| c.role)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "fact", rename_all = "snake_case")]
pub enum Fact {
    OwnRole { role: Role },
    MafiaPartner { player: PlayerId },
    RoleRevealed { player: PlayerId, role: Role },
    Investigated { target: PlayerId, alignment: Alignment },
    /// The Mafia targeted this player and the owner's protection saved them.
    SurvivedAttack { player: PlayerId },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfirmedFact {
    pub fact: Fact,
    pub source_seq: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Death {
    pub role: Role,
    pub day: u32,
    pub cause: EliminationCause,
    pub seq: u64,
}

impl Death {
    /// True when the player was already dead as night `night` began.
    pub fn before_night(&self, night: u32) -> bool {
        // Night k precedes Day k, so both a Night(k) kill and a Day(k) vote
        // leave the player dead from Night(k + 1) on.
        self.day < night
    }
}

/// An ability mention together with the speaker's standing claim when it was made.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MentionRecord {
    pub speaker: PlayerId,
    pub mention: AbilityMention,
    pub day: u32,
    pub seq: u64,
    pub standing_claim: Option<Claim>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RevacMemory {
    pub owner: PlayerId,
    pub own_role: Option<Role>,
    pub roster: Vec<PlayerId>,
    pub role_counts: BTreeMap<Role, usize>,
    pub profiles: BTreeMap<PlayerId, PlayerProfile>,
    pub graph: SocialAlignmentGraph,
    pub confirmed_facts: Vec<ConfirmedFact>,
    pub deaths: BTreeMap<PlayerId, Death>,
    pub mentions: Vec<MentionRecord>,
    pub no_kill_nights: Vec<(u32, u64)>,
    /// Seqs of the public records each player acted in or was targeted by.
    pub involvement: BTreeMap<PlayerId, BTreeSet<u64>>,
    pub last_seq: Option<u64>,
    pub current_day: u32,
    pub digest_cap: usize,
}

impl RevacMemory {
    pub fn new(
        owner: PlayerId,
        roster: Vec<PlayerId>,
        role_counts: BTreeMap<Role, usize>,
    ) -> Self {
        RevacMemory {
            owner,
            own_role: None,
            profiles: roster.iter().map(|&p| (p, PlayerProfile::new(p))).collect(),
            graph: SocialAlignmentGraph::new(roster.iter().copied()),
            roster,
            role_counts,
            confirmed_facts: Vec::new(),
            deaths: BTreeMap::new(),
            mentions: Vec::new(),
            no_kill_nights: Vec::new(),
            involvement: BTreeMap::new(),
            last_seq: None,
            current_day: 0,
            digest_cap: DEFAULT_DIGEST_CAP,
        }
    }

    pub fn with_digest_cap(mut self, cap: usize) -> Self {
        self.digest_cap = cap;
        self
    }

    /// Memory seeded from everything in `obs`.
    pub fn from_observation(obs: &Observation) -> Result<Self, MemoryError> {
        let mut m = RevacMemory::new(obs.viewer, obs.roster.clone(), obs.role_counts.clone());
        m.own_role = Some(obs.viewer_role);
        let events: Vec<EventRecord> = obs.events().into_iter().cloned().collect();
        m.update(&events)?;
        Ok(m)
    }

    pub fn is_alive(&self, p: PlayerId) -> bool {
        self.roster.contains(&p) && !self.deaths.contains_key(&p)
    }

    pub fn living(&self) -> Vec<PlayerId> {
        self.roster.iter().copied().filter(|&p| self.is_alive(p)).collect()
    }

    pub fn revealed_role(&self, p: PlayerId) -> Option<Role> {
        self.deaths.get(&p).map(|d| d.role)
    }

    pub fn known_partners(&self) -> Vec<PlayerId> {
        self.confirmed_facts
            .iter()
            .filter_map(|f| match f.fact {
                Fact::MafiaPartner { player } => Some(player),
                _ => None,
            })
            .collect()
    }

    /// Alignment the owner has verified for `p` by investigation.
    pub fn investigated(&self, p: PlayerId) -> Option<Alignment> {
        self.confirmed_facts.iter().rev().find_map(|f| match f.fact {
            Fact::Investigated { target, alignment } if target == p => Some(alignment),
            _ => None,
        })
    }

    pub fn latest_claim(&self, p: PlayerId) -> Option<Role> {
        self.profiles.get(&p).and_then(|pr| pr.latest_claim())
    }

    /// Living Mafia and village-aligned counts, assuming the public setup.
    pub fn living_alignment_counts(&self) -> (usize, usize) {
        let total_mafia = self.role_counts.get(&Role::Mafia).copied().unwrap_or(0);
        let dead_mafia = self.deaths.values().filter(|d| d.role == Role::Mafia).count();
        let mafia = total_mafia.saturating_sub(dead_mafia);
        let living = self.living().len();
        (mafia, living.saturating_sub(mafia))
    }

    /// One more mislynch would hand the Mafia parity.
    pub fn is_lylo(&self) -> bool {
        let (mafia, village) = self.living_alignment_counts();
        mafia > 0 && village > mafia && mafia + 1 >= village
    }

    fn add_fact(&mut self, fact: Fact, source_seq: u64) {
        if !self.confirmed_facts.iter().any(|f| f.fact == fact) {
            self.confirmed_facts.push(ConfirmedFact { fact, source_seq });
        }
    }

    fn involve(&mut self, p: PlayerId, seq: u64) {
        if self.roster.contains(&p) {
            self.involvement.entry(p).or_default().insert(seq);
        }
    }

    /// Folds a batch of new records into memory. Records the owner may not see
    /// are skipped. The whole batch is rejected if any seq fails to advance.
    pub fn update(&mut self, events: &[EventRecord]) -> Result<(), MemoryError> {
        let mut last = self.last_seq;
        for rec in events {
            if let Some(l) = last {
                if rec.seq <= l {
                    return Err(MemoryError::OutOfOrder { seq: rec.seq, last: l });
                }
            }
            last = Some(rec.seq);
        }
        for rec in events {
            if rec.visibility.allows(self.owner) {
                self.apply(rec)?;
            }
            self.last_seq = Some(rec.seq);
        }
        if !events.is_empty() {
            self.refresh_flags();
        }
        Ok(())
    }

    fn apply(&mut self, rec: &EventRecord) -> Result<(), MemoryError> {
        let seq = rec.seq;
        self.current_day = self.current_day.max(rec.day);
        match &rec.event {
            Event::GameStarted(setup) => {
                if self.role_counts.is_empty() {
                    self.role_counts = setup.role_counts.clone();
                }
            }
            Event::RoleAssigned { player, role } => {
                if *player == self.owner {
                    self.own_role = Some(*role);
                    self.add_fact(Fact::OwnRole { role: *role }, seq);
                }
            }
            Event::MafiaTeam { members } => {
                if members.contains(&self.owner) {
                    let owner = self.owner;
                    for &m in members.iter().filter(|&&m| m != owner) {
                        self.add_fact(Fact::MafiaPartner { player: m }, seq);
                    }
                }
            }
            Event::NightResolved { day, death: None } => self.no_kill_nights.push((*day, seq)),
            Event::ProtectionApplied { target, .. } => {
                self.add_fact(Fact::SurvivedAttack { player: *target }, seq)
            }
            Event::InvestigationResult { detective, target, alignment, .. } => {
                if *detective == self.owner {
                    self.add_fact(Fact::Investigated { target: *target, alignment: *alignment }, seq);
                }
            }
            Event::StatementMade { day, turn, speaker, text, acts } => {
                self.apply_statement(seq, *day, *turn, *speaker, text, acts)?;
            }
            Event::VoteCast { day, turn, voter, target } => {
                self.graph
                    .record_act(SocialAct::at(ActKind::Vote { src: *voter, dst: *target }, *day, *turn))?;
                if let Some(pr) = self.profiles.get_mut(voter) {
                    pr.votes_cast.push((*target, *day));
                    pr.last_updated = Some((*day, *turn));
                }
                self.involve(*voter, seq);
                self.involve(*target, seq);
            }
            Event::PlayerEliminated { day, player, revealed_role, cause } => {
                self.deaths.insert(
                    *player,
                    Death { role: *revealed_role, day: *day, cause: *cause, seq },
                );
                self.graph.mark_dead(*player)?;
                self.add_fact(Fact::RoleRevealed { player: *player, role: *revealed_role }, seq);
                self.involve(*player, seq);
            }
            Event::NightResolved { .. }
            | Event::NightActionSubmitted { .. }
            | Event::VotingOpened { .. }
            | Event::VotesTallied { .. }
            | Event::GameEnded { .. } => {}
        }
        Ok(())
    }

    fn apply_statement(
        &mut self,
        seq: u64,
        day: u32,
        turn: u32,
        speaker: PlayerId,
        text: &str,
        acts: &[SocialAct],
    ) -> Result<(), MemoryError> {
        for act in acts {
            self.graph.record_act(*act)?;
            if let ActKind::ClaimRole { src, role } = act.kind {
                if let Some(pr) = self.profiles.get_mut(&src) {
                    pr.claims.push(Claim { role, day, seq });
                }
            }
            if let Some(t) = act.kind.target() {
                self.involve(t, seq);
            }
        }
        self.involve(speaker, seq);
        for id in referenced_ids(text) {
            if let Ok(id) = u8::try_from(id) {
                self.involve(PlayerId(id), seq);
            }
        }
        let standing_claim = self.profiles.get(&speaker).and_then(|p| p.claims.last().copied());
        for mention in extract_mentions(text, &self.roster) {
            self.mentions.push(MentionRecord { speaker, mention, day, seq, standing_claim });
        }
        let cap = self.digest_cap;
        if let Some(pr) = self.profiles.get_mut(&speaker) {
            let summary = if text.trim().is_empty() {
                format!("D{day}#{seq}: (silent)")
            } else {
                let clipped: String = text.chars().take(DIGEST_TEXT_LIMIT).collect();
                format!("D{day}#{seq}: {clipped}")
            };
            pr.statement_digest.push_back(summary);
            while pr.statement_digest.len() > cap {
                pr.statement_digest.pop_front();
            }
            pr.last_updated = Some((day, turn));
        }
        Ok(())
    }

    fn refresh_flags(&mut self) {
        let records = self.detect_contradictions();
        for pr in self.profiles.values_mut() {
            pr.consistency_flags.clear();
        }
        for r in records {
            if let Some(pr) = self.profiles.get_mut(&r.subject) {
                pr.consistency_flags.push(r);
            }
        }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}
