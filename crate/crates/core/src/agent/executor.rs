use serde::{Deserialize, Serialize};

use super::review::{vote_choice, ActionKind, Review};
use super::tone::{Tone, ToneProfile};
use crate::game::{Alignment, DayStage, NightAction, Observation, Phase, PlayerId, Role};
use crate::memory::{Fact, RevacMemory};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AgentAction {
    Say { text: String },
    Vote { target: PlayerId },
    Night { action: NightAction },
    /// Skip the turn: silence in discussion, no vote, or no night action.
    Abstain,
}

/// Whether the engine would accept `action` from the viewer of `obs`.
pub fn is_legal(obs: &Observation, action: &AgentAction) -> bool {
    let me = obs.viewer;
    let alive = obs.is_alive(me);
    match (obs.phase, action) {
        (_, AgentAction::Abstain) => true,
        (Phase::Day { stage: DayStage::Discussion, .. }, AgentAction::Say { .. }) => alive,
        (Phase::Day { stage: DayStage::Voting, .. }, AgentAction::Vote { target }) => {
            alive && *target != me && obs.is_alive(*target)
        }
        (Phase::Night { .. }, AgentAction::Night { action }) => {
            let t = action.target();
            alive
                && obs.viewer_role == action.required_role()
                && obs.is_alive(t)
                && match action {
                    NightAction::Kill(_) => t != me && !obs.mafia_partners.contains(&t),
                    NightAction::Investigate(_) => t != me,
                    NightAction::Protect(_) => true,
                }
        }
        _ => false,
    }
}

fn vote_candidates(obs: &Observation) -> Vec<PlayerId> {
    obs.living_players
        .iter()
        .copied()
        .filter(|&p| p != obs.viewer && !obs.mafia_partners.contains(&p))
        .collect()
}

/// Legal vote for the highest Mafia probability, or an abstention.
pub fn argmax_vote(obs: &Observation, review: &Review) -> AgentAction {
    match vote_choice(vote_candidates(obs), review) {
        Some(target) => AgentAction::Vote { target },
        None => AgentAction::Abstain,
    }
}

fn night_action(kind: ActionKind, target: PlayerId) -> Option<NightAction> {
    match kind {
        ActionKind::Kill => Some(NightAction::Kill(target)),
        ActionKind::Protect => Some(NightAction::Protect(target)),
        ActionKind::Investigate => Some(NightAction::Investigate(target)),
        ActionKind::Vote => None,
    }
}

/// The night ability kind the viewer holds, if any.
pub fn night_kind(role: Role) -> Option<ActionKind> {
    match role {
        Role::Mafia => Some(ActionKind::Kill),
        Role::Doctor => Some(ActionKind::Protect),
        Role::Detective => Some(ActionKind::Investigate),
        Role::Villager => None,
    }
}

/// The rule policy's night action.
pub fn rule_night(obs: &Observation, review: &Review) -> AgentAction {
    let Some(kind) = night_kind(obs.viewer_role) else { return AgentAction::Abstain };
    let planned = review
        .recommended_action
        .filter(|(_, k)| *k == kind)
        .and_then(|(t, k)| night_action(k, t))
        .map(|action| AgentAction::Night { action });
    if let Some(a) = planned.filter(|a| is_legal(obs, a)) {
        return a;
    }
    // Fall back to the vote ordering over legal targets.
    let mut pool = vote_candidates(obs);
    if kind == ActionKind::Protect {
        pool.push(obs.viewer);
    }
    pool.into_iter()
        .filter_map(|t| night_action(kind, t))
        .map(|action| AgentAction::Night { action })
        .filter(|a| is_legal(obs, a))
        .max_by(|a, b| {
            let t = |x: &AgentAction| match x {
                AgentAction::Night { action } => action.target(),
                _ => unreachable!(),
            };
            review
                .mafia_prob(t(a))
                .total_cmp(&review.mafia_prob(t(b)))
                .then(t(b).cmp(&t(a)))
        })
        .unwrap_or(AgentAction::Abstain)
}

/// Replaces an illegal action with the nearest legal one for the phase.
pub fn repair(obs: &Observation, review: &Review, action: AgentAction) -> AgentAction {
    if is_legal(obs, &action) {
        return action;
    }
    match obs.phase {
        Phase::Day { stage: DayStage::Voting, .. } => argmax_vote(obs, review),
        Phase::Night { .. } => rule_night(obs, review),
        Phase::Day { stage: DayStage::Discussion, .. } if obs.is_alive(obs.viewer) => {
            match action {
                AgentAction::Say { text } => AgentAction::Say { text },
                _ => AgentAction::Say { text: String::new() },
            }
        }
        _ => AgentAction::Abstain,
    }
}

fn mafia_check(memory: &RevacMemory, target: PlayerId) -> bool {
    memory.confirmed_facts.iter().any(|f| {
        matches!(f.fact, Fact::Investigated { target: t, alignment: Alignment::Mafia } if t == target)
    })
}

fn top_suspect(memory: &RevacMemory, review: &Review) -> Option<PlayerId> {
    let partners = memory.known_partners();
    review
        .suspicion_order
        .iter()
        .copied()
        .find(|&p| p != memory.owner && !partners.contains(&p))
        .filter(|p| review.suspicion_scores.get(p).copied().unwrap_or(0.0) > 0.0)
}

/// Statement text for `tone`, phrased so the act extractor reads it back.
pub fn tone_text(memory: &RevacMemory, review: &Review, tone: &ToneProfile) -> String {
    let focus = tone.focus;
    match (tone.tone, focus) {
        (Tone::AggressivePressuring, Some(t)) => {
            format!("I accuse {t}. Nobody has defended {t}, and the pressure is earned. Vote {t}.")
        }
        (Tone::WithdrawingPassive, _) => {
            "I hear the doubts about me. I'd rather everyone share their reads before we vote.".into()
        }
        (Tone::ContrarianSkeptical, Some(t)) => format!(
            "Slow down. The case on {t} is noise without evidence. {t} is town until someone shows a real contradiction."
        ),
        (Tone::LogicallyAnchoring, Some(t)) if mafia_check(memory, t) => format!(
            "I am the Detective. I checked {t} and {t} is mafia. Let's stay with what we know."
        ),
        (Tone::LogicallyAnchoring, Some(t)) => {
            match review.contradictions.iter().find(|c| c.subject == t) {
                Some(c) => format!("Stick to the record: {t} has a {}. {t} is suspicious.", c.kind.phrase()),
                None if top_suspect(memory, review) == Some(t) => {
                    format!("Let's stay with the evidence. On the record so far {t} is suspicious.")
                }
                None => "Let's stay with the evidence and not rush the vote.".into(),
            }
        }
        _ => "Let's stay with the evidence and not rush the vote.".into(),
    }
}

/// Statement text without a tone stage.
pub fn plain_text(memory: &RevacMemory, review: &Review) -> String {
    match top_suspect(memory, review) {
        Some(t) => format!("My read: {t} is suspicious."),
        None => "No strong read yet.".into(),
    }
}

/// The rule-based action for the current phase.
pub fn rule_action(
    obs: &Observation,
    memory: &RevacMemory,
    review: &Review,
    tone: Option<&ToneProfile>,
) -> AgentAction {
    let action = match obs.phase {
        Phase::Day { stage: DayStage::Discussion, .. } => AgentAction::Say {
            text: match tone {
                Some(t) => tone_text(memory, review, t),
                None => plain_text(memory, review),
            },
        },
        Phase::Day { stage: DayStage::Voting, .. } => argmax_vote(obs, review),
        Phase::Night { .. } => rule_night(obs, review),
        Phase::Ended { .. } => AgentAction::Abstain,
    };
    repair(obs, review, action)
}

/// Candidates for a targeted action, most preferred first.
pub fn ranked_candidates(obs: &Observation, review: &Review) -> Vec<PlayerId> {
    let mut pool = vote_candidates(obs);
    if obs.viewer_role == Role::Doctor && matches!(obs.phase, Phase::Night { .. }) {
        pool.push(obs.viewer);
    }
    let preferred = review.recommended_action.map(|(t, _)| t);
    pool.sort_by(|&a, &b| {
        (Some(b) == preferred)
            .cmp(&(Some(a) == preferred))
            .then(review.mafia_prob(b).total_cmp(&review.mafia_prob(a)))
            .then(review.suspicion_rank(a).cmp(&review.suspicion_rank(b)))
            .then(a.cmp(&b))
    });
    pool
}

/// Builds the action a backend's chosen target stands for.
pub fn targeted_action(obs: &Observation, target: PlayerId) -> Option<AgentAction> {
    match obs.phase {
        Phase::Day { stage: DayStage::Voting, .. } => Some(AgentAction::Vote { target }),
        Phase::Night { .. } => night_kind(obs.viewer_role)
            .and_then(|k| night_action(k, target))
            .map(|action| AgentAction::Night { action }),
        _ => None,
    }
}
