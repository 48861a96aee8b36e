use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::game::{Game, GameConfig, GameError, NightAction, Observation, PlayerId, Role};
use crate::memory::{extract_acts, ContradictionRecord, Fact, RevacMemory};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tag {
    ConflictingClaims,
    Hallucination,
    NoKillNight,
    StrategicDeception,
}

impl Tag {
    pub const ALL: [Tag; 4] =
        [Tag::ConflictingClaims, Tag::Hallucination, Tag::NoKillNight, Tag::StrategicDeception];
}

/// One scripted engine input. Statement acts are extracted at replay time.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case", deny_unknown_fields)]
pub enum Step {
    NightAction { actor: PlayerId, action: NightAction },
    ResolveNight,
    Say { speaker: PlayerId, text: String },
    OpenVoting,
    Vote { voter: PlayerId, target: PlayerId },
    Tally,
}

/// A case file as stored on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    pub id: String,
    /// Number of players; ids run from 0.
    pub roster: usize,
    /// The evaluated seat.
    pub seat: PlayerId,
    pub ground_truth: BTreeMap<PlayerId, Role>,
    pub events: Vec<Step>,
    /// Facts the evaluated seat must hold after replay.
    #[serde(default)]
    pub private_facts: Vec<Fact>,
    pub explanation: String,
    pub tags: Vec<Tag>,
}

/// A validated case: the replayed game and the seat's view of it.
#[derive(Clone, Debug)]
pub struct BenchmarkCase {
    pub file: CaseFile,
    pub game: Game,
    pub observation: Observation,
    /// Contradictions visible to the seat, for the judge.
    pub contradictions: Vec<ContradictionRecord>,
}

impl BenchmarkCase {
    pub fn id(&self) -> &str {
        &self.file.id
    }

    pub fn roster(&self) -> Vec<PlayerId> {
        self.game.roster()
    }

    pub fn ground_truth(&self) -> &BTreeMap<PlayerId, Role> {
        &self.file.ground_truth
    }

    pub fn seat(&self) -> PlayerId {
        self.file.seat
    }

    /// Memory of the evaluated seat built from the whole observation.
    pub fn seat_memory(&self) -> RevacMemory {
        RevacMemory::from_observation(&self.observation).expect("validated at load")
    }
}

fn schema(case: &str, field: &str, message: impl Into<String>) -> BenchError {
    BenchError::Schema { case: case.to_string(), field: field.to_string(), message: message.into() }
}

/// Replays `steps` through a fresh engine with the given role assignment.
pub fn replay_steps(config: GameConfig, roles: Vec<Role>, steps: &[Step]) -> Result<Game, (usize, GameError)> {
    let mut game = Game::with_roles(config, roles).map_err(|e| (0, e))?;
    let roster = game.roster();
    for (i, step) in steps.iter().enumerate() {
        let r = match step {
            Step::NightAction { actor, action } => game.submit_night_action(*actor, *action),
            Step::ResolveNight => game.resolve_night().map(|_| ()),
            Step::Say { speaker, text } => {
                let acts = extract_acts(text, &roster, *speaker);
                game.record_statement(*speaker, text, acts)
            }
            Step::OpenVoting => game.open_voting(),
            Step::Vote { voter, target } => game.cast_vote(*voter, *target),
            Step::Tally => game.tally_votes().map(|_| ()),
        };
        r.map_err(|e| (i, e))?;
    }
    Ok(game)
}

impl CaseFile {
    pub fn parse(text: &str, origin: &str) -> Result<CaseFile, BenchError> {
        serde_json::from_str(text).map_err(|e| BenchError::Parse { origin: origin.to_string(), message: e.to_string() })
    }

    /// Checks the schema, replays the events and checks the listed facts.
    pub fn validate(self) -> Result<BenchmarkCase, BenchError> {
        let id = self.id.clone();
        if id.trim().is_empty() {
            return Err(schema("<unnamed>", "id", "must not be empty"));
        }
        if self.roster == 0 || self.roster > usize::from(u8::MAX) {
            return Err(schema(&id, "roster", "must be between 1 and 255"));
        }
        for i in 0..self.roster {
            let p = PlayerId(i as u8);
            if !self.ground_truth.contains_key(&p) {
                return Err(schema(&id, "ground_truth", format!("missing entry for {p}")));
            }
        }
        if let Some(p) = self.ground_truth.keys().find(|p| p.index() >= self.roster) {
            return Err(schema(&id, "ground_truth", format!("{p} is not on the roster")));
        }
        if self.seat.index() >= self.roster {
            return Err(schema(&id, "seat", format!("{} is not on the roster", self.seat)));
        }
        if self.tags.is_empty() {
            return Err(schema(&id, "tags", "at least one tag is required"));
        }
        if self.explanation.trim().is_empty() {
            return Err(schema(&id, "explanation", "must not be empty"));
        }
        let roles: Vec<Role> = self.ground_truth.values().copied().collect();
        let count = |r: Role| roles.iter().filter(|&&x| x == r).count();
        let config = GameConfig::with_counts(
            count(Role::Mafia),
            count(Role::Doctor),
            count(Role::Detective),
            count(Role::Villager),
        );
        let game = replay_steps(config, roles, &self.events).map_err(|(step, e)| BenchError::Replay {
            case: id.clone(),
            step,
            message: e.to_string(),
        })?;
        let observation = game.observation_for(self.seat).map_err(|e| BenchError::Replay {
            case: id.clone(),
            step: self.events.len(),
            message: e.to_string(),
        })?;
        let memory = RevacMemory::from_observation(&observation)
            .map_err(|e| schema(&id, "events", e.to_string()))?;
        let held: BTreeSet<String> =
            memory.confirmed_facts.iter().map(|f| format!("{:?}", f.fact)).collect();
        for fact in &self.private_facts {
            if !held.contains(&format!("{fact:?}")) {
                return Err(schema(&id, "private_facts", format!("seat does not hold {fact:?}")));
            }
        }
        let contradictions = memory.detect_contradictions();
        Ok(BenchmarkCase { file: self, game, observation, contradictions })
    }
}

pub fn load_case(path: &Path) -> Result<BenchmarkCase, BenchError> {
    let origin = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| BenchError::Io { origin: origin.clone(), message: e.to_string() })?;
    CaseFile::parse(&text, &origin)?.validate()
}

/// Every `*.json` case in `dir`, ordered by id.
pub fn load_cases(dir: &Path) -> Result<Vec<BenchmarkCase>, BenchError> {
    let origin = dir.display().to_string();
    let io = |e: std::io::Error| BenchError::Io { origin: origin.clone(), message: e.to_string() };
    let mut paths: Vec<_> = fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let cases = paths.iter().map(|p| load_case(p)).collect::<Result<Vec<_>, _>>()?;
    sort_and_check(cases)
}

fn sort_and_check(mut cases: Vec<BenchmarkCase>) -> Result<Vec<BenchmarkCase>, BenchError> {
    cases.sort_by(|a, b| a.file.id.cmp(&b.file.id));
    for w in cases.windows(2) {
        if w[0].file.id == w[1].file.id {
            return Err(schema(&w[0].file.id, "id", "duplicate case id"));
        }
    }
    Ok(cases)
}

macro_rules! bundled {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/cases/", $name, ".json")))),*]
    };
}

const BUNDLED: &[(&str, &str)] = bundled!(
    "conflicting-claims-1",
    "conflicting-claims-2",
    "conflicting-claims-3",
    "conflicting-claims-4",
    "hallucination-1",
    "hallucination-2",
    "hallucination-3",
    "no-kill-night-1",
    "no-kill-night-2",
    "no-kill-night-3",
    "strategic-deception-1",
    "strategic-deception-2",
    "strategic-deception-3",
);

/// Directory holding the bundled case files in the source tree.
pub fn bundled_cases_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/cases"))
}

/// The bundled suite, compiled into the library.
pub fn bundled_cases() -> Result<Vec<BenchmarkCase>, BenchError> {
    let cases = BUNDLED
        .iter()
        .map(|(name, text)| CaseFile::parse(text, name)?.validate())
        .collect::<Result<Vec<_>, _>>()?;
    sort_and_check(cases)
}
