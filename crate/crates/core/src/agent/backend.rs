//! Text-generation backends. Every call is self-contained; implementations
//! must tolerate concurrent requests from different games.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Mutex;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::review::RoleDistribution;
use crate::game::{PlayerId, Role};

#[derive(Debug, Error, Clone, PartialEq, Serialize, Deserialize)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("backend timed out")]
    Timeout,
    #[error("unusable backend response: {0}")]
    InvalidResponse(String),
    #[error("prompt needs {needed} tokens but the budget is {budget}")]
    BudgetExceeded { needed: usize, budget: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Review,
    Speak,
    Vote,
    Night,
    Judge,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Instructions,
    PrivateFacts,
    MemoryDigest,
    Review,
    ToneDirectives,
    Draft,
    PublicChat,
}

impl SegmentKind {
    /// Only public chat may be dropped to fit the budget.
    pub fn droppable(self) -> bool {
        self == SegmentKind::PublicChat
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub text: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub max_tokens: u32,
    pub temperature: f64,
    pub seed: u64,
}

impl Default for GenerationParams {
    fn default() -> Self {
        GenerationParams { max_tokens: 400, temperature: 0.2, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackendRequest {
    pub task: Task,
    pub system: String,
    pub segments: Vec<Segment>,
    pub params: GenerationParams,
    /// Legal targets, preferred first, when the task picks a player.
    pub candidates: Vec<PlayerId>,
}

impl BackendRequest {
    pub fn segment(&self, kind: SegmentKind) -> impl Iterator<Item = &str> {
        self.segments.iter().filter(move |s| s.kind == kind).map(|s| s.text.as_str())
    }

    /// Whole prompt as one string, segments in order.
    pub fn prompt(&self) -> String {
        let mut out = String::new();
        for s in &self.segments {
            out.push_str(&s.text);
            out.push('\n');
        }
        out
    }

    pub fn estimated_tokens(&self) -> usize {
        estimate_tokens(&self.system) + self.segments.iter().map(|s| estimate_tokens(&s.text)).sum::<usize>()
    }
}

/// Four characters per token, rounded up.
pub fn estimate_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(4)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackendResponse {
    pub text: String,
    pub usage: TokenUsage,
}

impl BackendResponse {
    pub fn new(req: &BackendRequest, text: impl Into<String>) -> Self {
        let text = text.into();
        let usage = TokenUsage {
            prompt_tokens: req.estimated_tokens() as u64,
            completion_tokens: estimate_tokens(&text) as u64,
        };
        BackendResponse { text, usage }
    }
}

pub trait Backend: Send + Sync {
    fn name(&self) -> &str;
    fn generate(&self, req: &BackendRequest) -> Result<BackendResponse, BackendError>;
}

/// Offline stand-in for a model: adopts the prior table it is shown, speaks
/// the draft it is given and picks the first candidate.
#[derive(Clone, Debug, Default)]
pub struct OfflineBackend;

impl Backend for OfflineBackend {
    fn name(&self) -> &str {
        "offline"
    }

    fn generate(&self, req: &BackendRequest) -> Result<BackendResponse, BackendError> {
        let text = match req.task {
            Task::Review => {
                let table = req.segment(SegmentKind::Review).collect::<Vec<_>>().join("\n");
                if !table.contains(BLOCK_START) {
                    return Err(BackendError::InvalidResponse("no prior table in prompt".into()));
                }
                table
            }
            Task::Speak => req.segment(SegmentKind::Draft).next().unwrap_or("").to_string(),
            Task::Vote | Task::Night => match req.candidates.first() {
                Some(p) => format!("I choose {p}."),
                None => "I abstain.".into(),
            },
            Task::Judge => return Err(BackendError::InvalidResponse("offline backend cannot judge".into())),
        };
        Ok(BackendResponse::new(req, text))
    }
}

/// Always fails.
#[derive(Clone, Debug)]
pub struct FailingBackend(pub BackendError);

impl Backend for FailingBackend {
    fn name(&self) -> &str {
        "failing"
    }

    fn generate(&self, _req: &BackendRequest) -> Result<BackendResponse, BackendError> {
        Err(self.0.clone())
    }
}

/// Replays canned responses in order, cycling when exhausted.
pub struct ScriptedBackend {
    responses: Vec<Result<String, BackendError>>,
    next: Mutex<usize>,
}

impl ScriptedBackend {
    pub fn new(responses: Vec<Result<String, BackendError>>) -> Self {
        ScriptedBackend { responses, next: Mutex::new(0) }
    }

    pub fn always(text: impl Into<String>) -> Self {
        Self::new(vec![Ok(text.into())])
    }

    pub fn calls(&self) -> usize {
        *self.next.lock().expect("poisoned")
    }
}

impl Backend for ScriptedBackend {
    fn name(&self) -> &str {
        "scripted"
    }

    fn generate(&self, req: &BackendRequest) -> Result<BackendResponse, BackendError> {
        if self.responses.is_empty() {
            return Err(BackendError::Unavailable("no scripted responses".into()));
        }
        let mut next = self.next.lock().expect("poisoned");
        let r = self.responses[*next % self.responses.len()].clone();
        *next += 1;
        r.map(|t| BackendResponse::new(req, t))
    }
}

/// Fails a seeded fraction of calls before they reach the inner backend.
pub struct FaultInjecting<B> {
    inner: B,
    rate: f64,
    rng: Mutex<ChaCha8Rng>,
}

impl<B: Backend> FaultInjecting<B> {
    pub fn new(inner: B, rate: f64, seed: u64) -> Self {
        FaultInjecting { inner, rate: rate.clamp(0.0, 1.0), rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed)) }
    }
}

impl<B: Backend> Backend for FaultInjecting<B> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn generate(&self, req: &BackendRequest) -> Result<BackendResponse, BackendError> {
        let fail = self.rng.lock().expect("poisoned").random_bool(self.rate);
        if fail {
            Err(BackendError::Unavailable("injected fault".into()))
        } else {
            self.inner.generate(req)
        }
    }
}

#[derive(Serialize)]
struct TraceLine<'a> {
    backend: &'a str,
    request: &'a BackendRequest,
    response: Option<&'a BackendResponse>,
    error: Option<String>,
}

/// Logs every request and its outcome as one JSON line.
pub struct Traced<B> {
    inner: B,
    sink: Mutex<Box<dyn Write + Send>>,
}

impl<B: Backend> Traced<B> {
    pub fn new(inner: B, sink: Box<dyn Write + Send>) -> Self {
        Traced { inner, sink: Mutex::new(sink) }
    }
}

impl<B: Backend> Backend for Traced<B> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn generate(&self, req: &BackendRequest) -> Result<BackendResponse, BackendError> {
        let out = self.inner.generate(req);
        let line = TraceLine {
            backend: self.inner.name(),
            request: req,
            response: out.as_ref().ok(),
            error: out.as_ref().err().map(|e| e.to_string()),
        };
        if let Ok(json) = serde_json::to_string(&line) {
            let mut sink = self.sink.lock().expect("poisoned");
            if writeln!(sink, "{json}").is_err() {
                tracing::warn!("trace sink write failed");
            }
        }
        out
    }
}

impl<B: Backend + ?Sized> Backend for std::sync::Arc<B> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn generate(&self, req: &BackendRequest) -> Result<BackendResponse, BackendError> {
        (**self).generate(req)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay_ms: u64,
    /// Each delay is stretched by a uniform factor in `[1, 1 + jitter]`.
    pub jitter: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_retries: 2, base_delay_ms: 200, jitter: 0.5 }
    }
}

impl RetryPolicy {
    pub fn immediate() -> Self {
        RetryPolicy { base_delay_ms: 0, ..Self::default() }
    }

    fn delay(&self, attempt: u32, rng: &mut impl Rng) -> Duration {
        if self.base_delay_ms == 0 {
            return Duration::ZERO;
        }
        let base = self.base_delay_ms.saturating_mul(1 << attempt.min(16)) as f64;
        let stretch = 1.0 + self.jitter.max(0.0) * rng.random::<f64>();
        Duration::from_secs_f64(base * stretch / 1000.0)
    }
}

/// Calls `backend`, retrying failures up to `policy.max_retries` times.
/// Returns the last error when every attempt fails, plus the attempt count.
pub fn call_with_retries(
    backend: &dyn Backend,
    req: &BackendRequest,
    policy: &RetryPolicy,
    rng: &mut impl Rng,
) -> (Result<BackendResponse, BackendError>, u32) {
    let mut attempt = 0;
    loop {
        let out = backend.generate(req);
        attempt += 1;
        match out {
            Ok(r) => return (Ok(r), attempt),
            Err(e) if attempt > policy.max_retries => return (Err(e), attempt),
            Err(e) => {
                tracing::debug!(backend = backend.name(), attempt, error = %e, "retrying backend call");
                let d = policy.delay(attempt - 1, rng);
                if !d.is_zero() {
                    std::thread::sleep(d);
                }
            }
        }
    }
}

pub const BLOCK_START: &str = "PROBABILITIES";
pub const BLOCK_END: &str = "END";

/// Renders a probability table in the block format models are asked to emit.
pub fn format_probability_block(table: &BTreeMap<PlayerId, RoleDistribution>) -> String {
    let mut out = String::from(BLOCK_START);
    out.push('\n');
    for (p, dist) in table {
        let cells: Vec<String> = Role::ALL
            .iter()
            .map(|r| format!("{}={:.4}", r.name().to_lowercase(), dist.get(r).copied().unwrap_or(0.0)))
            .collect();
        out.push_str(&format!("{p}: {}\n", cells.join(" ")));
    }
    out.push_str(BLOCK_END);
    out
}

/// Parses the first probability block in `text`. Rows for unknown players or
/// with no positive mass are rejected.
pub fn parse_probability_block(
    text: &str,
    roster: &[PlayerId],
) -> Result<BTreeMap<PlayerId, RoleDistribution>, BackendError> {
    let bad = |m: &str| BackendError::InvalidResponse(m.to_string());
    let start = text.find(BLOCK_START).ok_or_else(|| bad("missing probability block"))?;
    let body = &text[start + BLOCK_START.len()..];
    let end = body.find(BLOCK_END).ok_or_else(|| bad("unterminated probability block"))?;
    let row = Regex::new(r"(?i)^\s*p(\d{1,3})\s*:(.*)$").expect("static pattern");
    let cell = Regex::new(r"(?i)(villager|doctor|detective|mafia)\s*[=:]\s*([0-9]*\.?[0-9]+)").expect("static pattern");
    let mut out = BTreeMap::new();
    for line in body[..end].lines().filter(|l| !l.trim().is_empty()) {
        let caps = row.captures(line).ok_or_else(|| bad("malformed row"))?;
        let id: u8 = caps[1].parse().map_err(|_| bad("player id out of range"))?;
        let p = PlayerId(id);
        if !roster.contains(&p) {
            return Err(bad("row for a player not on the roster"));
        }
        let mut dist = RoleDistribution::new();
        for c in cell.captures_iter(&caps[2]) {
            let role = match c[1].to_lowercase().as_str() {
                "villager" => Role::Villager,
                "doctor" => Role::Doctor,
                "detective" => Role::Detective,
                _ => Role::Mafia,
            };
            let x: f64 = c[2].parse().map_err(|_| bad("bad probability"))?;
            dist.insert(role, x);
        }
        if dist.values().sum::<f64>() <= 0.0 {
            return Err(bad("row without positive mass"));
        }
        out.insert(p, dist);
    }
    if out.is_empty() {
        return Err(bad("empty probability block"));
    }
    Ok(out)
}

/// First roster player named in `text`, if any.
pub fn parse_target(text: &str, roster: &[PlayerId]) -> Option<PlayerId> {
    crate::memory::referenced_ids(text)
        .into_iter()
        .next()
        .and_then(|n| u8::try_from(n).ok())
        .map(PlayerId)
        .filter(|p| roster.contains(p))
}
