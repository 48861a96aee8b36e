use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, LazyLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::case::BenchmarkCase;
use super::scoring::METRIC_B_MAX;
use crate::agent::backend::{
    call_with_retries, Backend, BackendRequest, GenerationParams, RetryPolicy, Segment, SegmentKind, Task,
};
use crate::game::{Event, PlayerId};
use crate::memory::referenced_ids;

const POINTS_PER_CRITERION: f64 = 1.25;

static EVENT_REF: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\[e(\d+)\]").expect("static pattern"));
static SCORE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)score\s*[:=]\s*([0-9]+(?:\.[0-9]+)?)").expect("static pattern"));

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checklist {
    /// Cites at least two events that exist in the case.
    pub cites_evidence: bool,
    /// Names a contradiction the case actually contains.
    pub names_contradiction: bool,
    /// Mentions no player or event outside the case.
    pub no_fabrication: bool,
    /// Everyone named in the conclusion appears in a cited event.
    pub consistent_conclusion: bool,
}

impl Checklist {
    pub fn score(&self) -> f64 {
        [self.cites_evidence, self.names_contradiction, self.no_fabrication, self.consistent_conclusion]
            .iter()
            .filter(|&&b| b)
            .count() as f64
            * POINTS_PER_CRITERION
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JudgeOutcome {
    pub raw: f64,
    /// The model judge failed and the stub score was used instead.
    pub fallback: bool,
    pub checklist: Option<Checklist>,
}

pub trait Judge: Send + Sync {
    fn name(&self) -> &str;
    fn judge(&self, explanation: &str, case: &BenchmarkCase) -> JudgeOutcome;
}

/// Rubric checklist scored from markers in the text.
#[derive(Clone, Copy, Debug, Default)]
pub struct StubJudge;

/// Players each visible record involves, free-text mentions included.
fn record_players(case: &BenchmarkCase) -> BTreeMap<u64, BTreeSet<PlayerId>> {
    case.observation
        .events()
        .into_iter()
        .map(|r| {
            let mut ps: BTreeSet<PlayerId> = r.event.players().into_iter().collect();
            if let Event::StatementMade { text, .. } = &r.event {
                ps.extend(referenced_ids(text).into_iter().filter_map(|n| u8::try_from(n).ok()).map(PlayerId));
            }
            (r.seq, ps)
        })
        .collect()
}

pub fn checklist(explanation: &str, case: &BenchmarkCase) -> Checklist {
    let records = record_players(case);
    let roster = case.roster();
    let cited: BTreeSet<u64> =
        EVENT_REF.captures_iter(explanation).filter_map(|c| c[1].parse().ok()).collect();
    let valid: BTreeSet<u64> = cited.iter().copied().filter(|s| records.contains_key(s)).collect();

    let lower = explanation.to_lowercase();
    let names_contradiction = case.contradictions.is_empty()
        || case.contradictions.iter().any(|c| {
            lower.lines().any(|l| {
                l.contains(c.kind.phrase()) && referenced_ids(l).contains(&u32::from(c.subject.0))
            })
        });

    let without_refs = EVENT_REF.replace_all(explanation, "");
    let players_ok = referenced_ids(&without_refs)
        .into_iter()
        .all(|n| u8::try_from(n).is_ok_and(|n| roster.contains(&PlayerId(n))));
    let no_fabrication = players_ok && valid.len() == cited.len();

    let conclusion = explanation
        .lines()
        .rev()
        .find(|l| l.trim_start().to_lowercase().starts_with("conclusion"));
    let consistent_conclusion = conclusion.is_some_and(|line| {
        let backed: BTreeSet<PlayerId> = valid.iter().flat_map(|s| records[s].iter().copied()).collect();
        referenced_ids(line)
            .into_iter()
            .all(|n| u8::try_from(n).is_ok_and(|n| backed.contains(&PlayerId(n))))
    });

    Checklist { cites_evidence: valid.len() >= 2, names_contradiction, no_fabrication, consistent_conclusion }
}

impl Judge for StubJudge {
    fn name(&self) -> &str {
        "stub"
    }

    fn judge(&self, explanation: &str, case: &BenchmarkCase) -> JudgeOutcome {
        if explanation.trim().is_empty() {
            return JudgeOutcome { raw: 0.0, fallback: false, checklist: Some(Checklist::default()) };
        }
        let c = checklist(explanation, case);
        JudgeOutcome { raw: c.score().clamp(0.0, METRIC_B_MAX), fallback: false, checklist: Some(c) }
    }
}

const RUBRIC: &str = "You grade a Secret Mafia player's explanation of who holds which role. \
Score 0-5 overall, weighing equally: logical soundness; use of concrete game evidence; \
detection of contradictions; avoidance of hallucinated players or events. \
Answer with a line `Score: <number>`.";

/// Model-backed judge. Unusable answers fall back to the stub, flagged.
pub struct ModelJudge {
    backend: Arc<dyn Backend>,
    retry: RetryPolicy,
}

impl ModelJudge {
    pub fn new(backend: Arc<dyn Backend>, retry: RetryPolicy) -> Self {
        ModelJudge { backend, retry }
    }
}

/// Reads `Score: x` from a judge reply, rejecting values outside [0, 5].
pub fn parse_score(text: &str) -> Option<f64> {
    let x: f64 = SCORE.captures(text)?[1].parse().ok()?;
    (0.0..=METRIC_B_MAX).contains(&x).then_some(x)
}

impl Judge for ModelJudge {
    fn name(&self) -> &str {
        self.backend.name()
    }

    fn judge(&self, explanation: &str, case: &BenchmarkCase) -> JudgeOutcome {
        if explanation.trim().is_empty() {
            return JudgeOutcome { raw: 0.0, fallback: false, checklist: None };
        }
        let transcript: Vec<String> = case
            .observation
            .events()
            .iter()
            .map(|r| serde_json::to_string(r).unwrap_or_default())
            .collect();
        let req = BackendRequest {
            task: Task::Judge,
            system: RUBRIC.into(),
            segments: vec![
                Segment { kind: SegmentKind::Instructions, text: format!("Scenario: {}", case.file.explanation) },
                Segment { kind: SegmentKind::PublicChat, text: transcript.join("\n") },
                Segment { kind: SegmentKind::Draft, text: explanation.to_string() },
            ],
            params: GenerationParams { temperature: 0.0, ..GenerationParams::default() },
            candidates: Vec::new(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (out, _) = call_with_retries(&*self.backend, &req, &self.retry, &mut rng);
        match out.ok().and_then(|r| parse_score(&r.text)) {
            Some(raw) => JudgeOutcome { raw, fallback: false, checklist: None },
            None => JudgeOutcome { fallback: true, ..StubJudge.judge(explanation, case) },
        }
    }
}
