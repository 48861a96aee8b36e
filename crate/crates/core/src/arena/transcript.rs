use std::fmt;
use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ArenaError, MatchConfig};
use crate::game::{Alignment, Event, EventRecord, Game, GameConfig, Role};

pub const TRANSCRIPT_FORMAT: &str = "mafia-transcript/1";

/// First line of a transcript file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptHeader {
    pub format: String,
    /// The arena setup, absent for hand-authored fixtures.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub match_config: Option<MatchConfig>,
    pub game: GameConfig,
    /// Seat-indexed role reveal.
    pub roles: Vec<Role>,
    /// `None` when the log stops before the game ends.
    pub winner: Option<Alignment>,
}

/// One log record and the running digest over everything up to it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    #[serde(flatten)]
    pub record: EventRecord,
    pub digest: String,
}

/// Complete event log of one game, private events included.
#[derive(Clone, Debug, PartialEq)]
pub struct Transcript {
    pub header: TranscriptHeader,
    pub records: Vec<TranscriptRecord>,
}

fn header_digest(header: &TranscriptHeader) -> String {
    let json = serde_json::to_vec(header).expect("header serializes");
    hex::encode(Sha256::digest(&json))
}

fn chain(prev: &str, record: &EventRecord) -> String {
    let mut h = Sha256::new();
    h.update(prev.as_bytes());
    h.update(serde_json::to_vec(record).expect("record serializes"));
    hex::encode(h.finalize())
}

impl Transcript {
    /// Snapshot of `game`'s full log.
    pub fn from_game(game: &Game, match_config: Option<MatchConfig>) -> Transcript {
        let header = TranscriptHeader {
            format: TRANSCRIPT_FORMAT.to_string(),
            match_config,
            game: game.config().clone(),
            roles: game.players().iter().map(|p| p.role).collect(),
            winner: game.winner(),
        };
        let mut prev = header_digest(&header);
        let records = game
            .log()
            .iter()
            .map(|r| {
                prev = chain(&prev, r);
                TranscriptRecord { record: r.clone(), digest: prev.clone() }
            })
            .collect();
        Transcript { header, records }
    }

    pub fn events(&self) -> impl Iterator<Item = &EventRecord> {
        self.records.iter().map(|r| &r.record)
    }

    /// Seqs whose stored digest disagrees with the recomputed chain.
    pub fn digest_breaks(&self) -> Vec<u64> {
        let mut prev = header_digest(&self.header);
        let mut out = Vec::new();
        for r in &self.records {
            let expected = chain(&prev, &r.record);
            if expected != r.digest {
                out.push(r.record.seq);
            }
            prev = r.digest.clone();
        }
        out
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serializes");
        out.push('\n');
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(self.to_jsonl().as_bytes())
    }

    pub fn save(&self, path: &Path) -> Result<(), ArenaError> {
        fs::write(path, self.to_jsonl()).map_err(|e| ArenaError::io(path, e))
    }

    pub fn parse(text: &str) -> Result<Transcript, ArenaError> {
        Self::read_from(text.as_bytes())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Transcript, ArenaError> {
        let mut lines = r.lines().enumerate().filter(|(_, l)| !l.as_ref().is_ok_and(|l| l.trim().is_empty()));
        let bad = |line: usize, msg: String| ArenaError::Transcript(format!("line {}: {msg}", line + 1));
        let (n, first) = lines.next().ok_or_else(|| ArenaError::Transcript("empty transcript".into()))?;
        let first = first.map_err(|e| bad(n, e.to_string()))?;
        let header: TranscriptHeader = serde_json::from_str(&first).map_err(|e| bad(n, e.to_string()))?;
        if header.format != TRANSCRIPT_FORMAT {
            return Err(bad(n, format!("unsupported format `{}`", header.format)));
        }
        let mut records = Vec::new();
        for (n, line) in lines {
            let line = line.map_err(|e| bad(n, e.to_string()))?;
            records.push(serde_json::from_str(&line).map_err(|e| bad(n, e.to_string()))?);
        }
        Ok(Transcript { header, records })
    }

    pub fn load(path: &Path) -> Result<Transcript, ArenaError> {
        let file = fs::File::open(path).map_err(|e| ArenaError::io(path, e))?;
        Self::read_from(std::io::BufReader::new(file))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Divergence {
    /// Seq of the first record that differs, or the log length when records are missing.
    pub seq: u64,
    pub detail: String,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "seq {}: {}", self.seq, self.detail)
    }
}

/// Outcome of re-executing a transcript through the engine.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub records: usize,
    /// Records whose engine re-execution matched the stored record.
    pub records_matched: usize,
    pub digest_breaks: Vec<u64>,
    pub divergences: Vec<Divergence>,
    pub result_matches: bool,
}

impl ReplayReport {
    pub fn is_valid(&self) -> bool {
        self.digest_breaks.is_empty() && self.divergences.is_empty() && self.result_matches
    }

    /// Earliest seq at which anything disagrees.
    pub fn first_divergence(&self) -> Option<u64> {
        self.digest_breaks.iter().copied().chain(self.divergences.iter().map(|d| d.seq)).min()
    }
}

impl fmt::Display for ReplayReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return write!(f, "valid: {} records re-executed, result matches", self.records);
        }
        writeln!(f, "INVALID: {}/{} records matched", self.records_matched, self.records)?;
        for s in &self.digest_breaks {
            writeln!(f, "  digest break at seq {s}")?;
        }
        for d in &self.divergences {
            writeln!(f, "  divergence at {d}")?;
        }
        if !self.result_matches {
            writeln!(f, "  final result differs")?;
        }
        Ok(())
    }
}

/// Feeds one logged input back into the engine.
fn apply(game: &mut Game, event: &Event) -> Result<(), String> {
    let r = match event {
        Event::NightActionSubmitted { actor, action, .. } => game.submit_night_action(*actor, *action),
        Event::NightResolved { .. } => game.resolve_night().map(|_| ()),
        Event::StatementMade { speaker, text, acts, .. } => game.record_statement(*speaker, text.clone(), acts.clone()),
        Event::VotingOpened { .. } => game.open_voting(),
        Event::VoteCast { voter, target, .. } => game.cast_vote(*voter, *target),
        Event::VotesTallied { .. } => game.tally_votes().map(|_| ()),
        other => return Err(format!("{} is not an input event", other.kind())),
    };
    r.map_err(|e| e.to_string())
}

fn describe(r: &EventRecord) -> String {
    serde_json::to_string(&r.event).unwrap_or_else(|_| r.event.kind().to_string())
}

/// Re-executes every input event and compares each record the engine
/// produces with the stored one. Replay stops at the first state divergence.
pub fn replay(t: &Transcript) -> ReplayReport {
    let mut report = ReplayReport {
        records: t.records.len(),
        digest_breaks: t.digest_breaks(),
        ..ReplayReport::default()
    };
    let stored: Vec<&EventRecord> = t.events().collect();
    let mut game = match Game::with_roles(t.header.game.clone(), t.header.roles.clone()) {
        Ok(g) => g,
        Err(e) => {
            report.divergences.push(Divergence { seq: 0, detail: format!("setup rejected: {e}") });
            return report;
        }
    };
    let mut checked = 0;
    loop {
        // Compare whatever the engine has produced since the last check.
        let log = game.log();
        while checked < log.len() {
            match stored.get(checked) {
                Some(s) if **s == log[checked] => checked += 1,
                Some(s) => {
                    report.divergences.push(Divergence {
                        seq: s.seq,
                        detail: format!("stored {} but engine produced {}", describe(s), describe(&log[checked])),
                    });
                    report.records_matched = checked;
                    return report;
                }
                None => {
                    report.divergences.push(Divergence {
                        seq: checked as u64,
                        detail: format!("engine produced {} past the end of the transcript", describe(&log[checked])),
                    });
                    report.records_matched = checked;
                    return report;
                }
            }
        }
        let Some(next) = stored.get(checked) else { break };
        if let Err(e) = apply(&mut game, &next.event) {
            report.divergences.push(Divergence { seq: next.seq, detail: format!("engine rejected {}: {e}", describe(next)) });
            report.records_matched = checked;
            return report;
        }
    }
    report.records_matched = checked;
    report.result_matches = game.winner() == t.header.winner
        && t.header.match_config.as_ref().is_none_or(|m| m.game_config() == t.header.game);
    report
}
