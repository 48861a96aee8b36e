//! Fixed policies without memory or review, used as opponents and in
//! property tests.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::executor::AgentAction;
use crate::game::{
    Alignment, DayStage, Event, NightAction, Observation, Phase, PlayerId, Role,
};
use crate::graph::ActKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptedPolicy {
    /// Uniformly random legal actions, abstentions included.
    Random,
    /// Never acts: silent, never votes, skips night actions.
    PassOnly,
    /// Mafia kill the lowest-id village target each night; otherwise passes.
    AlwaysKill,
    /// Coordinated play: the Detective reports checks, the town follows them.
    Strong,
}

const CHATTER: &[&str] = &[
    "",
    "Hmm.",
    "I am a villager.",
    "{t} is suspicious.",
    "I trust {t}.",
    "I accuse {t}.",
    "{t} is town.",
];

fn others(obs: &Observation) -> Vec<PlayerId> {
    obs.living_players.iter().copied().filter(|&p| p != obs.viewer).collect()
}

fn non_team(obs: &Observation) -> Vec<PlayerId> {
    others(obs).into_iter().filter(|p| !obs.mafia_partners.contains(p)).collect()
}

fn night(role: Role, target: PlayerId) -> Option<AgentAction> {
    let action = match role {
        Role::Mafia => NightAction::Kill(target),
        Role::Doctor => NightAction::Protect(target),
        Role::Detective => NightAction::Investigate(target),
        Role::Villager => return None,
    };
    Some(AgentAction::Night { action })
}

impl ScriptedPolicy {
    pub fn name(self) -> &'static str {
        match self {
            ScriptedPolicy::Random => "random",
            ScriptedPolicy::PassOnly => "pass-only",
            ScriptedPolicy::AlwaysKill => "always-kill",
            ScriptedPolicy::Strong => "strong",
        }
    }

    pub fn act(self, obs: &Observation, rng: &mut impl Rng) -> AgentAction {
        if !obs.is_alive(obs.viewer) {
            return AgentAction::Abstain;
        }
        match self {
            ScriptedPolicy::Random => random_action(obs, rng),
            ScriptedPolicy::PassOnly => pass(obs),
            ScriptedPolicy::AlwaysKill => match obs.phase {
                Phase::Night { .. } if obs.viewer_role == Role::Mafia => non_team(obs)
                    .first()
                    .and_then(|&t| night(Role::Mafia, t))
                    .unwrap_or(AgentAction::Abstain),
                _ => pass(obs),
            },
            ScriptedPolicy::Strong => strong_action(obs, rng),
        }
    }
}

fn pass(obs: &Observation) -> AgentAction {
    match obs.phase {
        Phase::Day { stage: DayStage::Discussion, .. } => AgentAction::Say { text: String::new() },
        _ => AgentAction::Abstain,
    }
}

fn random_action(obs: &Observation, rng: &mut impl Rng) -> AgentAction {
    match obs.phase {
        Phase::Night { .. } => {
            let pool = match obs.viewer_role {
                Role::Mafia => non_team(obs),
                Role::Doctor => obs.living_players.iter().copied().collect(),
                _ => others(obs),
            };
            if rng.random_bool(0.2) {
                return AgentAction::Abstain;
            }
            pool.choose(rng)
                .and_then(|&t| night(obs.viewer_role, t))
                .unwrap_or(AgentAction::Abstain)
        }
        Phase::Day { stage: DayStage::Discussion, .. } => {
            let line = CHATTER.choose(rng).copied().unwrap_or("");
            let text = match others(obs).choose(rng) {
                Some(t) => line.replace("{t}", &t.to_string()),
                None => String::new(),
            };
            AgentAction::Say { text }
        }
        Phase::Day { stage: DayStage::Voting, .. } => {
            if rng.random_bool(0.2) {
                return AgentAction::Abstain;
            }
            match others(obs).choose(rng) {
                Some(&target) => AgentAction::Vote { target },
                None => AgentAction::Abstain,
            }
        }
        Phase::Ended { .. } => AgentAction::Abstain,
    }
}

/// Public knowledge the strong policy reads off the log.
struct Board {
    /// Players a claimed Detective has called Mafia, in order.
    called_mafia: Vec<PlayerId>,
    /// Players a claimed Detective has cleared.
    cleared: BTreeSet<PlayerId>,
    detective_claims: Vec<PlayerId>,
    own_checks: Vec<(PlayerId, Alignment)>,
}

fn read_board(obs: &Observation) -> Board {
    let mut b = Board {
        called_mafia: Vec::new(),
        cleared: BTreeSet::new(),
        detective_claims: Vec::new(),
        own_checks: Vec::new(),
    };
    for rec in obs.events() {
        match &rec.event {
            Event::StatementMade { speaker, acts, .. } => {
                let claims_det = acts
                    .iter()
                    .any(|a| a.kind == ActKind::ClaimRole { src: *speaker, role: Role::Detective });
                if !claims_det {
                    continue;
                }
                if !b.detective_claims.contains(speaker) {
                    b.detective_claims.push(*speaker);
                }
                for a in acts {
                    match a.kind {
                        ActKind::Accuse { dst, .. } if !b.called_mafia.contains(&dst) => {
                            b.called_mafia.push(dst)
                        }
                        ActKind::Defend { dst, .. } => {
                            b.cleared.insert(dst);
                        }
                        _ => {}
                    }
                }
            }
            Event::InvestigationResult { detective, target, alignment, .. } if *detective == obs.viewer => {
                b.own_checks.push((*target, *alignment));
            }
            _ => {}
        }
    }
    b
}

fn strong_action(obs: &Observation, rng: &mut impl Rng) -> AgentAction {
    let board = read_board(obs);
    let me = obs.viewer;
    let living = |p: &PlayerId| obs.is_alive(*p);
    match obs.phase {
        Phase::Night { .. } => match obs.viewer_role {
            Role::Mafia => {
                let pool = non_team(obs);
                let target = board
                    .detective_claims
                    .iter()
                    .copied()
                    .find(|p| pool.contains(p))
                    .or_else(|| pool.choose(rng).copied());
                target.and_then(|t| night(Role::Mafia, t)).unwrap_or(AgentAction::Abstain)
            }
            Role::Doctor => {
                let target = board
                    .detective_claims
                    .iter()
                    .copied()
                    .find(|p| living(p) && *p != me)
                    .unwrap_or(me);
                night(Role::Doctor, target).unwrap_or(AgentAction::Abstain)
            }
            Role::Detective => {
                let checked: BTreeSet<PlayerId> = board.own_checks.iter().map(|c| c.0).collect();
                let pool: Vec<PlayerId> = others(obs).into_iter().filter(|p| !checked.contains(p)).collect();
                pool.choose(rng)
                    .and_then(|&t| night(Role::Detective, t))
                    .unwrap_or(AgentAction::Abstain)
            }
            Role::Villager => AgentAction::Abstain,
        },
        Phase::Day { stage: DayStage::Discussion, .. } => {
            if obs.viewer_role == Role::Detective {
                let found = board
                    .own_checks
                    .iter()
                    .rev()
                    .find(|(t, a)| *a == Alignment::Mafia && living(t))
                    .or_else(|| board.own_checks.last());
                if let Some(&(t, a)) = found {
                    let verdict = if a == Alignment::Mafia { "mafia" } else { "town" };
                    return AgentAction::Say {
                        text: format!("I am the Detective. I checked {t} and {t} is {verdict}."),
                    };
                }
            }
            AgentAction::Say { text: String::new() }
        }
        Phase::Day { stage: DayStage::Voting, .. } => {
            if obs.viewer_role == Role::Mafia {
                let pool = non_team(obs);
                return pool.choose(rng).map_or(AgentAction::Abstain, |&t| AgentAction::Vote { target: t });
            }
            let called = board.called_mafia.iter().copied().find(|p| living(p) && *p != me);
            if let Some(target) = called {
                return AgentAction::Vote { target };
            }
            // Nothing reported: vote among players nobody has cleared, but
            // never a claimed Detective.
            let pool: Vec<PlayerId> = others(obs)
                .into_iter()
                .filter(|p| !board.cleared.contains(p) && !board.detective_claims.contains(p))
                .collect();
            pool.choose(rng).map_or(AgentAction::Abstain, |&t| AgentAction::Vote { target: t })
        }
        Phase::Ended { .. } => AgentAction::Abstain,
    }
}
