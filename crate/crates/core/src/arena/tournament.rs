use std::fs;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rating::{Leaderboard, RatingParams, RatingState};
use super::{derive_seed, Arena, ArenaError, AgentSpec, MatchConfig};
use crate::game::{Alignment, GameConfig, Role};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TournamentConfig {
    pub specs: Vec<AgentSpec>,
    pub games: usize,
    pub seed: u64,
    /// Matches run concurrently on at most this many threads.
    pub workers: usize,
    pub game: GameConfig,
    pub rating: RatingParams,
    /// Where per-game transcripts and the leaderboard are written.
    pub out_dir: Option<PathBuf>,
}

impl TournamentConfig {
    pub fn new(specs: Vec<AgentSpec>, games: usize, seed: u64) -> Self {
        TournamentConfig {
            specs,
            games,
            seed,
            workers: 1,
            game: GameConfig::default(),
            rating: RatingParams::default(),
            out_dir: None,
        }
    }

    /// Seat assignment and seed of game `index`: specs fill the seats
    /// round-robin from a rotating offset, then the seats are shuffled.
    pub fn match_config(&self, index: usize) -> MatchConfig {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, index as u64));
        let n = self.specs.len();
        let mut seats: Vec<AgentSpec> =
            (0..self.game.num_players).map(|j| self.specs[(index + j) % n].clone()).collect();
        seats.shuffle(&mut rng);
        MatchConfig::new(self.game.clone(), seats, rng.next_u64())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameSummary {
    pub index: usize,
    pub seed: u64,
    pub seats: Vec<String>,
    pub roles: Vec<Role>,
    pub winner: Alignment,
    /// Final digest of the transcript chain.
    pub digest: String,
    pub transcript: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TournamentResult {
    pub leaderboard: Leaderboard,
    pub ratings: RatingState,
    pub games: Vec<GameSummary>,
    /// Games that failed, with the reason; they are skipped for ratings.
    pub failures: Vec<(usize, String)>,
}

/// Plays `config.games` matches on a bounded pool and applies the ratings in
/// game order, so the result does not depend on the worker count.
pub fn run_tournament(arena: &Arena, config: &TournamentConfig) -> Result<TournamentResult, ArenaError> {
    let mut labels: Vec<String> = config.specs.iter().map(|s| s.label()).collect();
    labels.sort();
    labels.dedup();
    if labels.len() < 2 {
        return Err(ArenaError::Setup("a tournament needs at least two distinct agent specs".into()));
    }
    config.game.validate()?;
    let games_dir = config.out_dir.as_ref().map(|d| d.join("games"));
    if let Some(dir) = &games_dir {
        fs::create_dir_all(dir).map_err(|e| ArenaError::io(dir, e))?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.max(1))
        .build()
        .map_err(|e| ArenaError::Setup(format!("worker pool: {e}")))?;

    let play = |i: usize| -> Result<GameSummary, String> {
        let mc = config.match_config(i);
        let outcome = arena.run_match(&mc).map_err(|e| e.to_string())?;
        let t = &outcome.transcript;
        let winner = t.header.winner.ok_or("game did not finish")?;
        let path = match &games_dir {
            Some(dir) => {
                let p = dir.join(format!("game-{i:05}.jsonl"));
                t.save(&p).map_err(|e| e.to_string())?;
                Some(p)
            }
            None => None,
        };
        Ok(GameSummary {
            index: i,
            seed: mc.seed,
            seats: mc.seats.iter().map(|s| s.label()).collect(),
            roles: t.header.roles.clone(),
            winner,
            digest: t.records.last().map(|r| r.digest.clone()).unwrap_or_default(),
            transcript: path,
        })
    };
    let results: Vec<Result<GameSummary, String>> =
        pool.install(|| (0..config.games).into_par_iter().map(play).collect());

    let mut ratings = RatingState::new(config.rating);
    for l in &labels {
        ratings.ensure(l);
    }
    let mut games = Vec::new();
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(g) => {
                let village: Vec<bool> = g.roles.iter().map(|r| r.alignment() == Alignment::Village).collect();
                ratings.apply(&g.seats, &village, g.winner);
                games.push(g);
            }
            Err(e) => {
                tracing::warn!(game = i, error = %e, "game failed and was skipped");
                failures.push((i, e));
            }
        }
    }
    let leaderboard = ratings.leaderboard();
    if let Some(dir) = &config.out_dir {
        leaderboard.save(&dir.join("leaderboard.json"))?;
    }
    Ok(TournamentResult { leaderboard, ratings, games, failures })
}
