//! The reasoning pipeline: memory update, review, tone selection and action
//! execution, with a rule-based implementation of every stage and an optional
//! text-generation backend.

pub mod backend;
pub mod executor;
pub mod narrative;
pub mod prompt;
pub mod review;
pub mod scripted;
pub mod tone;

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::game::{DayStage, Event, EventRecord, Observation, Phase, PlayerId, Role, Visibility};
use crate::memory::RevacMemory;

pub use backend::{Backend, BackendError, BackendRequest, BackendResponse, RetryPolicy, Task};
pub use executor::{is_legal, repair, AgentAction};
pub use review::{rule_review, ActionKind, Review, RoleDistribution};
pub use scripted::ScriptedPolicy;
pub use tone::{select_tone, Tone, ToneContext, ToneProfile, ToneThresholds};

/// Pipeline variants as stage toggles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    /// No persistent memory and no tone stage.
    #[serde(rename = "revac")]
    Revac,
    /// Persistent memory, no tone stage.
    #[serde(rename = "revac2_1")]
    Revac2_1,
    /// Memory, reviewer, tone selector and executor.
    #[serde(rename = "revac8")]
    Revac8,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Revac, Variant::Revac2_1, Variant::Revac8];

    pub fn uses_memory(self) -> bool {
        self != Variant::Revac
    }

    pub fn uses_tone(self) -> bool {
        self == Variant::Revac8
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Revac => "revac",
            Variant::Revac2_1 => "revac2_1",
            Variant::Revac8 => "revac8",
        }
    }

    pub fn parse(s: &str) -> Option<Variant> {
        match s.to_ascii_lowercase().replace(['-', '.'], "_").as_str() {
            "revac" => Some(Variant::Revac),
            "revac2_1" | "revac21" => Some(Variant::Revac2_1),
            "revac8" | "revac_8" => Some(Variant::Revac8),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    /// Suspicion-to-Mafia-weight temperature.
    pub temperature: f64,
    /// Weight on the latest claimed village role.
    pub claim_factor: f64,
    pub contradiction_weight: f64,
    /// Added per unit of defense given to a pressured player.
    pub cover_weight: f64,
    pub collusion_weight: f64,
    pub tone: ToneThresholds,
    pub retry: RetryPolicy,
    pub prompt_budget_tokens: usize,
    pub generation: backend::GenerationParams,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            temperature: 1.0,
            claim_factor: 3.0,
            contradiction_weight: 1.0,
            cover_weight: 0.5,
            collusion_weight: 1.0,
            tone: ToneThresholds::default(),
            retry: RetryPolicy::default(),
            prompt_budget_tokens: 3000,
            generation: backend::GenerationParams::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentStats {
    pub steps: u64,
    pub backend_calls: u64,
    pub backend_failures: u64,
    /// Stages that fell back to the rule-based result.
    pub fallbacks: u64,
    /// Actions that had to be repaired into legal ones.
    pub repairs: u64,
}

/// One seat's pipeline.
pub struct Agent {
    seat: PlayerId,
    variant: Variant,
    config: AgentConfig,
    backend: Option<Arc<dyn Backend>>,
    memory: Option<RevacMemory>,
    rng: ChaCha8Rng,
    stats: AgentStats,
    last_review: Option<Review>,
    last_tone: Option<ToneProfile>,
}

impl Agent {
    pub fn new(seat: PlayerId, variant: Variant, config: AgentConfig) -> Self {
        Agent {
            seat,
            variant,
            config,
            backend: None,
            memory: None,
            rng: ChaCha8Rng::seed_from_u64(u64::from(seat.0)),
            stats: AgentStats::default(),
            last_review: None,
            last_tone: None,
        }
    }

    pub fn with_backend(mut self, backend: Arc<dyn Backend>, seed: u64) -> Self {
        self.backend = Some(backend);
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self
    }

    pub fn seat(&self) -> PlayerId {
        self.seat
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn stats(&self) -> AgentStats {
        self.stats
    }

    pub fn memory(&self) -> Option<&RevacMemory> {
        self.memory.as_ref()
    }

    pub fn last_review(&self) -> Option<&Review> {
        self.last_review.as_ref()
    }

    pub fn last_tone(&self) -> Option<&ToneProfile> {
        self.last_tone.as_ref()
    }

    /// Memory the reviewer works from for `obs`. Persistent variants fold in
    /// records they have not seen; the memoryless variant rebuilds a view
    /// from the current day only.
    pub fn observe(&mut self, obs: &Observation) -> RevacMemory {
        if !self.variant.uses_memory() {
            return ephemeral_memory(obs);
        }
        let fresh = || RevacMemory::from_observation(obs);
        let m = match self.memory.take() {
            Some(mut m) => {
                let last = m.last_seq;
                let new: Vec<EventRecord> = obs
                    .events()
                    .into_iter()
                    .filter(|r| last.is_none_or(|l| r.seq > l))
                    .cloned()
                    .collect();
                match m.update(&new) {
                    Ok(()) => Some(m),
                    Err(e) => {
                        tracing::warn!(seat = %self.seat, error = %e, "memory rebuild");
                        fresh().ok()
                    }
                }
            }
            None => fresh().ok(),
        };
        let m = m.unwrap_or_else(|| base_memory(obs));
        self.memory = Some(m.clone());
        m
    }

    /// Review stage: rule-based, or a backend review masked by the rule
    /// result's impossibilities, falling back to the rule result.
    pub fn review(&mut self, obs: &Observation, memory: &RevacMemory) -> Review {
        let rule = rule_review(memory, obs.phase, &self.config);
        let Some(backend) = self.backend.clone() else { return rule };
        let req = prompt::build_request(
            prompt::PromptInputs {
                task: Task::Review,
                observation: obs,
                memory,
                review: Some(&rule),
                tone: None,
                draft: None,
                candidates: Vec::new(),
                params: self.config.generation,
            },
            self.config.prompt_budget_tokens,
        );
        let text = req.and_then(|r| self.call(&*backend, &r));
        let parsed = text.and_then(|t| {
            backend::parse_probability_block(&t, &memory.roster).map(|table| (table, t))
        });
        match parsed {
            Ok((table, text)) => merge_review(rule, table, &text),
            Err(e) => {
                tracing::debug!(seat = %self.seat, error = %e, "review fallback");
                self.stats.fallbacks += 1;
                rule
            }
        }
    }

    fn call(&mut self, backend: &dyn Backend, req: &BackendRequest) -> Result<String, BackendError> {
        let (out, attempts) = backend::call_with_retries(backend, req, &self.config.retry, &mut self.rng);
        self.stats.backend_calls += u64::from(attempts);
        match out {
            Ok(r) => {
                self.stats.backend_failures += u64::from(attempts - 1);
                Ok(r.text)
            }
            Err(e) => {
                self.stats.backend_failures += u64::from(attempts);
                Err(e)
            }
        }
    }

    /// One full pipeline step. Always returns an action the engine accepts.
    pub fn step(&mut self, obs: &Observation) -> AgentAction {
        self.stats.steps += 1;
        if !obs.is_alive(self.seat) || matches!(obs.phase, Phase::Ended { .. }) {
            return AgentAction::Abstain;
        }
        let memory = self.observe(obs);
        let review = self.review(obs, &memory);
        let discussion = matches!(obs.phase, Phase::Day { stage: DayStage::Discussion, .. });
        let tone = (discussion && self.variant.uses_tone()).then(|| {
            let ctx = ToneContext {
                owner: self.seat,
                phase: obs.phase,
                is_lylo: memory.is_lylo(),
                own_alignment: obs.alignment(),
            };
            select_tone(&review, &memory, &ctx, &self.config.tone)
        });
        let action = self.execute(obs, &memory, &review, tone.as_ref());
        self.last_review = Some(review);
        self.last_tone = tone;
        action
    }

    fn execute(
        &mut self,
        obs: &Observation,
        memory: &RevacMemory,
        review: &Review,
        tone: Option<&ToneProfile>,
    ) -> AgentAction {
        let rule = executor::rule_action(obs, memory, review, tone);
        let Some(backend) = self.backend.clone() else { return rule };
        let task = match obs.phase {
            Phase::Day { stage: DayStage::Discussion, .. } => Task::Speak,
            Phase::Day { stage: DayStage::Voting, .. } => Task::Vote,
            Phase::Night { .. } if executor::night_kind(obs.viewer_role).is_some() => Task::Night,
            _ => return rule,
        };
        let draft = match &rule {
            AgentAction::Say { text } => Some(text.as_str()),
            _ => None,
        };
        let req = prompt::build_request(
            prompt::PromptInputs {
                task,
                observation: obs,
                memory,
                review: Some(review),
                tone,
                draft,
                candidates: executor::ranked_candidates(obs, review),
                params: self.config.generation,
            },
            self.config.prompt_budget_tokens,
        );
        let text = match req.and_then(|r| self.call(&*backend, &r)) {
            Ok(t) => t,
            Err(_) => {
                self.stats.fallbacks += 1;
                return rule;
            }
        };
        let proposed = match task {
            Task::Speak => AgentAction::Say { text: text.trim().to_string() },
            _ => backend::parse_target(&text, &obs.roster)
                .and_then(|t| executor::targeted_action(obs, t))
                .unwrap_or(AgentAction::Abstain),
        };
        if executor::is_legal(obs, &proposed) && !(task != Task::Speak && proposed == AgentAction::Abstain) {
            proposed
        } else {
            self.stats.repairs += 1;
            // An unusable target reply is replaced by the rule choice, which
            // is already the repaired argmax action.
            if proposed == AgentAction::Abstain {
                rule
            } else {
                executor::repair(obs, review, proposed)
            }
        }
    }
}

/// Combines a backend table with the rule review: point masses stay, roles the
/// rule result rules out are zeroed, and each row is renormalised. Rows that
/// end up empty keep the rule distribution.
pub fn merge_review(
    mut rule: Review,
    table: BTreeMap<PlayerId, RoleDistribution>,
    text: &str,
) -> Review {
    for (p, dist) in rule.role_probabilities.iter_mut() {
        let Some(proposed) = table.get(p) else { continue };
        if dist.values().any(|&x| x == 1.0) {
            continue;
        }
        let mut merged: RoleDistribution = Role::ALL
            .into_iter()
            .map(|r| {
                let allowed = dist.get(&r).copied().unwrap_or(0.0) > 0.0;
                let x = proposed.get(&r).copied().unwrap_or(0.0).max(0.0);
                (r, if allowed && x.is_finite() { x } else { 0.0 })
            })
            .collect();
        let sum: f64 = merged.values().sum();
        if sum > 0.0 && sum.is_finite() {
            merged.values_mut().for_each(|x| *x /= sum);
            *dist = merged;
        }
    }
    let prose = match text.find(backend::BLOCK_START) {
        Some(i) => text[..i].trim(),
        None => text.trim(),
    };
    if !prose.is_empty() {
        rule.narrative = prose.to_string();
    }
    rule
}

fn base_memory(obs: &Observation) -> RevacMemory {
    let mut m = RevacMemory::new(obs.viewer, obs.roster.clone(), obs.role_counts.clone());
    m.own_role = Some(obs.viewer_role);
    m
}

/// Memory built only from setup, private records, eliminations and the
/// current day's public records.
pub fn ephemeral_memory(obs: &Observation) -> RevacMemory {
    let today = obs.phase.day().unwrap_or(0);
    let keep = |r: &EventRecord| {
        !matches!(r.visibility, Visibility::Public)
            || r.day == today
            || matches!(
                r.event,
                Event::GameStarted(_) | Event::PlayerEliminated { .. } | Event::GameEnded { .. }
            )
    };
    let events: Vec<EventRecord> = obs.events().into_iter().filter(|r| keep(r)).cloned().collect();
    let mut m = base_memory(obs);
    if m.update(&events).is_err() {
        m = base_memory(obs);
    }
    m
}
