use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::event::{EliminationCause, EndReason, Event, EventRecord, PublicSetup, Visibility};
use super::observation::Observation;
use super::types::{
    Alignment, DayStage, GameConfig, NightAction, NightActionBuffer, Phase, PlayerId, PlayerState,
    Role,
};
use super::GameError;
use crate::graph::SocialAct;

/// Authoritative state of one Secret Mafia game.
///
/// All mutation goes through the phase-checked operations below, each of which
/// appends to the event log. Identical configs and identical operation
/// sequences produce identical logs.
#[derive(Clone, Debug, PartialEq)]
pub struct Game {
    config: GameConfig,
    players: Vec<PlayerState>,
    phase: Phase,
    log: Vec<EventRecord>,
    night: NightActionBuffer,
    votes: BTreeMap<PlayerId, PlayerId>,
    turn: u32,
}

impl Game {
    /// Starts a game with roles dealt by a shuffle seeded from `config.seed`.
    pub fn new(config: GameConfig) -> Result<Self, GameError> {
        config.validate()?;
        let mut deck: Vec<Role> = Role::ALL
            .iter()
            .flat_map(|&r| std::iter::repeat_n(r, config.count(r)))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        deck.shuffle(&mut rng);
        Self::start(config, deck)
    }

    /// Starts a game with an explicit seat → role assignment (fixtures, replays).
    pub fn with_roles(config: GameConfig, roles: Vec<Role>) -> Result<Self, GameError> {
        config.validate()?;
        if roles.len() != config.num_players {
            return Err(GameError::InvalidConfig(format!(
                "{} roles given for {} players",
                roles.len(),
                config.num_players
            )));
        }
        for role in Role::ALL {
            let have = roles.iter().filter(|&&r| r == role).count();
            if have != config.count(role) {
                return Err(GameError::InvalidConfig(format!(
                    "assignment has {have} {role} but config expects {}",
                    config.count(role)
                )));
            }
        }
        Self::start(config, roles)
    }

    fn start(config: GameConfig, roles: Vec<Role>) -> Result<Self, GameError> {
        let players: Vec<PlayerState> = roles
            .into_iter()
            .enumerate()
            .map(|(i, role)| PlayerState { id: PlayerId(i as u8), role, alive: true })
            .collect();
        let mut game = Game {
            players,
            phase: Phase::Night { day: 0 },
            log: Vec::new(),
            night: NightActionBuffer::default(),
            votes: BTreeMap::new(),
            turn: 0,
            config,
        };
        game.push(
            Event::GameStarted(PublicSetup {
                num_players: game.config.num_players,
                role_counts: game.config.role_counts.clone(),
                discussion_rounds_per_day: game.config.discussion_rounds_per_day,
                max_days: game.config.max_days,
            }),
            Visibility::Public,
        );
        for i in 0..game.players.len() {
            let p = &game.players[i];
            let (player, role) = (p.id, p.role);
            game.push(Event::RoleAssigned { player, role }, Visibility::Players(vec![player]));
        }
        let team = game.mafia_members(false);
        game.push(Event::MafiaTeam { members: team.clone() }, Visibility::Players(team));
        Ok(game)
    }

    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    pub fn players(&self) -> &[PlayerState] {
        &self.players
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn log(&self) -> &[EventRecord] {
        &self.log
    }

    pub fn night_buffer(&self) -> &NightActionBuffer {
        &self.night
    }

    pub fn current_votes(&self) -> &BTreeMap<PlayerId, PlayerId> {
        &self.votes
    }

    pub fn is_over(&self) -> bool {
        matches!(self.phase, Phase::Ended { .. })
    }

    pub fn winner(&self) -> Option<Alignment> {
        match self.phase {
            Phase::Ended { winner } => Some(winner),
            _ => None,
        }
    }

    pub fn player(&self, id: PlayerId) -> Result<&PlayerState, GameError> {
        self.players.get(id.index()).ok_or(GameError::UnknownPlayer(id))
    }

    pub fn role_of(&self, id: PlayerId) -> Result<Role, GameError> {
        self.player(id).map(|p| p.role)
    }

    pub fn is_alive(&self, id: PlayerId) -> bool {
        self.players.get(id.index()).is_some_and(|p| p.alive)
    }

    pub fn living(&self) -> Vec<PlayerId> {
        self.players.iter().filter(|p| p.alive).map(|p| p.id).collect()
    }

    pub fn roster(&self) -> Vec<PlayerId> {
        self.players.iter().map(|p| p.id).collect()
    }

    fn mafia_members(&self, living_only: bool) -> Vec<PlayerId> {
        self.players
            .iter()
            .filter(|p| p.role == Role::Mafia && (p.alive || !living_only))
            .map(|p| p.id)
            .collect()
    }

    fn living_with_role(&self, role: Role) -> Option<PlayerId> {
        self.players.iter().find(|p| p.role == role && p.alive).map(|p| p.id)
    }

    fn push(&mut self, event: Event, visibility: Visibility) {
        let record = EventRecord {
            seq: self.log.len() as u64,
            day: self.phase.day().unwrap_or_else(|| self.last_day()),
            phase: self.phase.label().to_string(),
            event,
            visibility,
        };
        self.log.push(record);
    }

    fn last_day(&self) -> u32 {
        self.log.last().map(|r| r.day).unwrap_or(0)
    }

    fn require_alive(&self, id: PlayerId) -> Result<&PlayerState, GameError> {
        let p = self.player(id)?;
        if !p.alive {
            return Err(GameError::DeadPlayer(id));
        }
        Ok(p)
    }

    fn wrong_phase(&self, expected: &'static str) -> GameError {
        GameError::WrongPhase { expected, actual: self.phase }
    }

    /// Records a private night choice. A later submission from the same role
    /// replaces the earlier one.
    pub fn submit_night_action(
        &mut self,
        actor: PlayerId,
        action: NightAction,
    ) -> Result<(), GameError> {
        let Phase::Night { day } = self.phase else {
            return Err(self.wrong_phase("night"));
        };
        let role = self.require_alive(actor)?.role;
        if role != action.required_role() {
            return Err(GameError::RoleActionMismatch { actor, role, action });
        }
        let target = action.target();
        let target_role = self.require_alive(target).map_err(|_| GameError::IllegalTarget {
            target,
            reason: "target must be a living player",
        })?.role;
        let visibility = match action {
            NightAction::Kill(_) => {
                if target_role == Role::Mafia {
                    return Err(GameError::IllegalTarget {
                        target,
                        reason: "Mafia cannot target a teammate",
                    });
                }
                self.night.kill_votes.insert(actor, target);
                Visibility::Players(self.mafia_members(true))
            }
            NightAction::Protect(_) => {
                self.night.doctor_target = Some(target);
                Visibility::Players(vec![actor])
            }
            NightAction::Investigate(_) => {
                if target == actor {
                    return Err(GameError::IllegalTarget {
                        target,
                        reason: "the Detective cannot investigate themself",
                    });
                }
                self.night.detective_target = Some(target);
                Visibility::Players(vec![actor])
            }
        };
        self.push(Event::NightActionSubmitted { day, actor, action }, visibility);
        Ok(())
    }

    /// Applies the buffered night actions and opens the day's discussion.
    /// Returns the records appended by this call.
    pub fn resolve_night(&mut self) -> Result<Vec<EventRecord>, GameError> {
        let Phase::Night { day } = self.phase else {
            return Err(self.wrong_phase("night"));
        };
        let start = self.log.len();
        let target = self.night.mafia_target();
        let saved = target.is_some() && target == self.night.doctor_target;
        let death = if saved { None } else { target };

        self.push(Event::NightResolved { day, death }, Visibility::Public);
        if let Some(victim) = death {
            self.eliminate(day, victim, EliminationCause::NightKill);
        }
        if let (true, Some(t)) = (saved, target) {
            if let Some(doctor) = self.living_with_role(Role::Doctor) {
                self.push(
                    Event::ProtectionApplied { day, target: t },
                    Visibility::Players(vec![doctor]),
                );
            }
        }
        if let Some(t) = self.night.detective_target {
            if let Some(det) = self.players.iter().find(|p| p.role == Role::Detective) {
                let det = det.id;
                let alignment = self.players[t.index()].role.alignment();
                self.push(
                    Event::InvestigationResult { day, detective: det, target: t, alignment },
                    Visibility::Players(vec![det]),
                );
            }
        }
        self.night.clear();

        if let Some((winner, reason)) = self.win_state() {
            self.end(winner, reason);
        } else {
            self.phase = Phase::Day { day, stage: DayStage::Discussion };
            self.turn = 0;
        }
        Ok(self.log[start..].to_vec())
    }

    /// Appends a discussion statement. Empty text is a pass. The acts are
    /// stamped with the current day and turn and stored as given otherwise.
    pub fn record_statement(
        &mut self,
        speaker: PlayerId,
        text: impl Into<String>,
        acts: Vec<SocialAct>,
    ) -> Result<(), GameError> {
        let Phase::Day { day, stage: DayStage::Discussion } = self.phase else {
            return Err(self.wrong_phase("day discussion"));
        };
        self.require_alive(speaker)?;
        let turn = self.turn;
        let acts = acts.into_iter().map(|a| a.stamped(day, turn)).collect();
        self.turn += 1;
        self.push(
            Event::StatementMade { day, turn, speaker, text: text.into(), acts },
            Visibility::Public,
        );
        Ok(())
    }

    pub fn open_voting(&mut self) -> Result<(), GameError> {
        let Phase::Day { day, stage: DayStage::Discussion } = self.phase else {
            return Err(self.wrong_phase("day discussion"));
        };
        self.phase = Phase::Day { day, stage: DayStage::Voting };
        self.votes.clear();
        self.push(Event::VotingOpened { day }, Visibility::Public);
        Ok(())
    }

    pub fn cast_vote(&mut self, voter: PlayerId, target: PlayerId) -> Result<(), GameError> {
        let Phase::Day { day, stage: DayStage::Voting } = self.phase else {
            return Err(self.wrong_phase("day voting"));
        };
        self.require_alive(voter)?;
        if self.require_alive(target).is_err() {
            return Err(GameError::IllegalTarget { target, reason: "target must be a living player" });
        }
        if voter == target {
            return Err(GameError::IllegalTarget { target, reason: "players cannot vote for themselves" });
        }
        let turn = self.turn;
        self.turn += 1;
        self.votes.insert(voter, target);
        self.push(Event::VoteCast { day, turn, voter, target }, Visibility::Public);
        Ok(())
    }

    /// Counts final votes; a strict plurality eliminates, a tie or no votes
    /// eliminates nobody. Advances to the next night or ends the game.
    pub fn tally_votes(&mut self) -> Result<Option<PlayerId>, GameError> {
        let Phase::Day { day, stage: DayStage::Voting } = self.phase else {
            return Err(self.wrong_phase("day voting"));
        };
        let counts = plurality_counts(&self.votes);
        let eliminated = strict_plurality(&counts);
        self.push(Event::VotesTallied { day, counts, eliminated }, Visibility::Public);
        if let Some(p) = eliminated {
            self.eliminate(day, p, EliminationCause::Vote);
        }
        self.votes.clear();

        if let Some((winner, reason)) = self.win_state() {
            self.end(winner, reason);
        } else if day + 1 >= self.config.max_days {
            self.end(Alignment::Mafia, EndReason::DayLimit);
        } else {
            self.phase = Phase::Night { day: day + 1 };
        }
        Ok(eliminated)
    }

    fn eliminate(&mut self, day: u32, player: PlayerId, cause: EliminationCause) {
        let p = &mut self.players[player.index()];
        debug_assert!(p.alive);
        p.alive = false;
        let revealed_role = p.role;
        self.push(Event::PlayerEliminated { day, player, revealed_role, cause }, Visibility::Public);
    }

    fn end(&mut self, winner: Alignment, reason: EndReason) {
        self.phase = Phase::Ended { winner };
        self.push(Event::GameEnded { winner, reason }, Visibility::Public);
    }

    fn win_state(&self) -> Option<(Alignment, EndReason)> {
        let (mafia, village) = self.living_alignment_counts();
        if mafia == 0 {
            Some((Alignment::Village, EndReason::MafiaEliminated))
        } else if mafia >= village {
            Some((Alignment::Mafia, EndReason::Parity))
        } else {
            None
        }
    }

    pub fn living_alignment_counts(&self) -> (usize, usize) {
        self.players.iter().filter(|p| p.alive).fold((0, 0), |(m, v), p| {
            match p.role.alignment() {
                Alignment::Mafia => (m + 1, v),
                Alignment::Village => (m, v + 1),
            }
        })
    }

    /// Winner implied by the living roles, if any.
    pub fn check_win(&self) -> Option<Alignment> {
        self.win_state().map(|(w, _)| w)
    }

    /// Full filtered view of the log for one seat.
    pub fn observation_for(&self, viewer: PlayerId) -> Result<Observation, GameError> {
        self.observation_since(viewer, None)
    }

    /// Filtered view containing only events with `seq > after`.
    pub fn observation_since(
        &self,
        viewer: PlayerId,
        after: Option<u64>,
    ) -> Result<Observation, GameError> {
        let me = self.player(viewer)?;
        let start = after.map(|s| s as usize + 1).unwrap_or(0).min(self.log.len());
        let mut public_events = Vec::new();
        let mut private_events = Vec::new();
        for rec in &self.log[start..] {
            match &rec.visibility {
                Visibility::Public => public_events.push(rec.clone()),
                v if v.allows(viewer) => private_events.push(rec.clone()),
                _ => {}
            }
        }
        let mafia_partners = if me.role == Role::Mafia {
            self.mafia_members(false).into_iter().filter(|&p| p != viewer).collect()
        } else {
            Vec::new()
        };
        Ok(Observation {
            viewer,
            viewer_role: me.role,
            phase: self.phase,
            roster: self.roster(),
            living_players: self.living().into_iter().collect::<BTreeSet<_>>(),
            role_counts: self.config.role_counts.clone(),
            mafia_partners,
            public_events,
            private_events,
        })
    }
}

fn plurality_counts(votes: &BTreeMap<PlayerId, PlayerId>) -> BTreeMap<PlayerId, usize> {
    let mut counts = BTreeMap::new();
    for target in votes.values() {
        *counts.entry(*target).or_insert(0) += 1;
    }
    counts
}

/// The unique most-voted player, if one exists.
pub fn strict_plurality(counts: &BTreeMap<PlayerId, usize>) -> Option<PlayerId> {
    let max = counts.values().copied().max()?;
    let mut top = counts.iter().filter(|(_, &c)| c == max);
    let first = top.next().map(|(p, _)| *p);
    if top.next().is_some() {
        None
    } else {
        first
    }
}
