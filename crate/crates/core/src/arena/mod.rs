//! Match and tournament orchestration: seats agents, drives the engine,
//! persists transcripts, replays them and keeps skill ratings.

pub mod config;
pub mod manifest;
pub mod rating;
pub mod spec;
pub mod tournament;
pub mod transcript;

use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{is_legal, Agent, AgentAction, AgentConfig, AgentStats, ScriptedPolicy};
use crate::game::{DayStage, Game, GameConfig, GameError, Observation, Phase, PlayerId, Role};
use crate::memory::extract_acts;

pub use config::{ArenaConfig, BackendConfig, Preset};
pub use manifest::Manifest;
pub use rating::{update_ratings, Leaderboard, LeaderboardEntry, Rating, RatingParams, RatingState};
pub use spec::{AgentKind, AgentSpec, BackendFactory, BackendRegistry};
pub use tournament::{run_tournament, TournamentConfig, TournamentResult};
pub use transcript::{replay, Divergence, ReplayReport, Transcript, TranscriptHeader, TranscriptRecord};

#[derive(Debug, Error)]
pub enum ArenaError {
    #[error("invalid agent spec {0}")]
    Spec(String),
    #[error("invalid match setup: {0}")]
    Setup(String),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("transcript: {0}")]
    Transcript(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl ArenaError {
    pub(crate) fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        ArenaError::Io { path: path.display().to_string(), message: e.to_string() }
    }
}

/// One game: engine setup, seat → agent assignment and the match seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    pub game: GameConfig,
    /// Seat-indexed.
    pub seats: Vec<AgentSpec>,
    pub seed: u64,
}

impl MatchConfig {
    pub fn new(game: GameConfig, seats: Vec<AgentSpec>, seed: u64) -> Self {
        MatchConfig { game, seats, seed }
    }

    /// The engine config with the role deal seeded from the match seed.
    pub fn game_config(&self) -> GameConfig {
        self.game.clone().seeded(self.seed)
    }

    pub fn validate(&self, registry: &BackendRegistry) -> Result<(), ArenaError> {
        self.game.validate()?;
        if self.seats.len() != self.game.num_players {
            return Err(ArenaError::Setup(format!(
                "{} seat assignments for {} players",
                self.seats.len(),
                self.game.num_players
            )));
        }
        for spec in &self.seats {
            if let Some(b) = &spec.backend {
                if !registry.contains(b) {
                    return Err(ArenaError::Spec(format!("`{spec}`: unknown backend `{b}`")));
                }
            }
        }
        Ok(())
    }
}

/// Seed for an independent substream of `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.next_u64()
}

/// What agents run with: backend registry and pipeline settings.
#[derive(Clone, Default)]
pub struct Arena {
    pub registry: BackendRegistry,
    pub agent_config: AgentConfig,
}

enum Seat {
    Pipeline(Box<Agent>),
    Scripted(ScriptedPolicy, ChaCha8Rng),
}

impl Seat {
    fn act(&mut self, obs: &Observation) -> AgentAction {
        match self {
            Seat::Pipeline(a) => a.step(obs),
            Seat::Scripted(p, rng) => p.act(obs, rng),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SeatReport {
    pub spec: String,
    pub actions: u64,
    /// Actions that were illegal for the phase and replaced by a pass.
    pub rejected: u64,
    /// Pipeline counters; absent for scripted seats.
    pub pipeline: Option<AgentStats>,
}

#[derive(Clone, Debug)]
pub struct MatchOutcome {
    pub transcript: Transcript,
    pub seats: Vec<SeatReport>,
}

impl Arena {
    pub fn new(registry: BackendRegistry, agent_config: AgentConfig) -> Self {
        Arena { registry, agent_config }
    }

    fn seat(&self, id: PlayerId, spec: &AgentSpec, match_seed: u64) -> Result<Seat, ArenaError> {
        let seed = derive_seed(match_seed, u64::from(id.0) + 1);
        Ok(match spec.kind {
            AgentKind::Scripted(p) => Seat::Scripted(p, ChaCha8Rng::seed_from_u64(seed)),
            AgentKind::Pipeline(v) => {
                let mut agent = Agent::new(id, v, self.agent_config.clone());
                if let Some(b) = &spec.backend {
                    agent = agent.with_backend(self.registry.build(b, seed)?, seed);
                }
                Seat::Pipeline(Box::new(agent))
            }
        })
    }

    /// Plays one game to completion. Illegal actions become passes, so the
    /// game always ends within the configured day limit.
    pub fn run_match(&self, config: &MatchConfig) -> Result<MatchOutcome, ArenaError> {
        config.validate(&self.registry)?;
        let mut game = Game::new(config.game_config())?;
        let mut seats = config
            .seats
            .iter()
            .enumerate()
            .map(|(i, s)| self.seat(PlayerId(i as u8), s, config.seed))
            .collect::<Result<Vec<_>, _>>()?;
        let mut reports: Vec<SeatReport> =
            config.seats.iter().map(|s| SeatReport { spec: s.label(), ..SeatReport::default() }).collect();
        let roster = game.roster();

        while !game.is_over() {
            match game.phase() {
                Phase::Night { .. } => {
                    for p in game.living() {
                        if game.role_of(p)? == Role::Villager {
                            continue;
                        }
                        let action = turn(&mut seats, &mut reports, &game, p)?;
                        if let AgentAction::Night { action } = action {
                            if game.submit_night_action(p, action).is_err() {
                                reports[p.index()].rejected += 1;
                            }
                        } else if action != AgentAction::Abstain {
                            reports[p.index()].rejected += 1;
                        }
                    }
                    game.resolve_night()?;
                }
                Phase::Day { stage: DayStage::Discussion, .. } => {
                    for _ in 0..game.config().discussion_rounds_per_day {
                        for p in game.living() {
                            let text = match turn(&mut seats, &mut reports, &game, p)? {
                                AgentAction::Say { text } => text,
                                AgentAction::Abstain => String::new(),
                                _ => {
                                    reports[p.index()].rejected += 1;
                                    String::new()
                                }
                            };
                            let acts = extract_acts(&text, &roster, p);
                            game.record_statement(p, text, acts)?;
                        }
                    }
                    game.open_voting()?;
                }
                Phase::Day { stage: DayStage::Voting, .. } => {
                    for p in game.living() {
                        match turn(&mut seats, &mut reports, &game, p)? {
                            AgentAction::Vote { target } => {
                                if game.cast_vote(p, target).is_err() {
                                    reports[p.index()].rejected += 1;
                                }
                            }
                            AgentAction::Abstain => {}
                            _ => reports[p.index()].rejected += 1,
                        }
                    }
                    game.tally_votes()?;
                }
                Phase::Ended { .. } => unreachable!("loop exits on game end"),
            }
        }

        for (r, s) in reports.iter_mut().zip(&seats) {
            if let Seat::Pipeline(a) = s {
                r.pipeline = Some(a.stats());
            }
        }
        Ok(MatchOutcome { transcript: Transcript::from_game(&game, Some(config.clone())), seats: reports })
    }
}

/// Asks seat `p` for an action, counting actions the viewer could not legally take.
fn turn(seats: &mut [Seat], reports: &mut [SeatReport], game: &Game, p: PlayerId) -> Result<AgentAction, ArenaError> {
    let obs = game.observation_for(p)?;
    let action = seats[p.index()].act(&obs);
    reports[p.index()].actions += 1;
    if !is_legal(&obs, &action) {
        reports[p.index()].rejected += 1;
        return Ok(AgentAction::Abstain);
    }
    Ok(action)
}

/// Plays one game with the default arena.
pub fn run_match(config: &MatchConfig) -> Result<MatchOutcome, ArenaError> {
    Arena::default().run_match(config)
}
