//! Prompt assembly under a token budget. Public chat is dropped oldest first;
//! private facts and the other fixed segments are never dropped.

use super::backend::{
    format_probability_block, BackendError, BackendRequest, GenerationParams, Segment, SegmentKind,
    Task,
};
use super::review::Review;
use super::tone::ToneProfile;
use crate::game::{Event, Observation, PlayerId};
use crate::memory::{Fact, RevacMemory};

const SYSTEM: &str = "You are playing Secret Mafia. Roles: Villager, Doctor, Detective, Mafia. \
Night: Mafia kill, Doctor protects, Detective investigates. Day: discussion, then a plurality vote. \
Eliminated players reveal their role. Refer to players only as P<k>.";

fn instructions(task: Task) -> &'static str {
    match task {
        Task::Review => "Assess every player's role. Cite events as [e<seq>] and name any contradiction. \
Then output a block: a line PROBABILITIES, one line per player like \
`P0: villager=0.2 doctor=0.1 detective=0.1 mafia=0.6`, and a line END.",
        Task::Speak => "Write your next public statement (at most three sentences) following the tone directives.",
        Task::Vote => "Name the one player you vote to eliminate, as P<k>.",
        Task::Night => "Name the one player your night ability targets, as P<k>.",
        Task::Judge => "Score the explanation from 0 to 5 and answer with `Score: <x>`.",
    }
}

fn facts_segment(memory: &RevacMemory) -> String {
    let mut lines = vec![format!(
        "You are {}{}.",
        memory.owner,
        memory.own_role.map(|r| format!(", the {}", r.name())).unwrap_or_default()
    )];
    for f in &memory.confirmed_facts {
        let line = match f.fact {
            Fact::OwnRole { .. } | Fact::RoleRevealed { .. } => continue,
            Fact::MafiaPartner { player } => format!("{player} is your Mafia partner [e{}].", f.source_seq),
            Fact::Investigated { target, alignment } => {
                format!("Your investigation of {target}: {alignment:?} [e{}].", f.source_seq)
            }
            Fact::SurvivedAttack { player } => {
                format!("Your protection saved {player} from a kill [e{}].", f.source_seq)
            }
        };
        lines.push(line);
    }
    for (p, d) in &memory.deaths {
        lines.push(format!("{p} is dead, revealed {} [e{}].", d.role.name(), d.seq));
    }
    lines.join("\n")
}

fn digest_segment(memory: &RevacMemory) -> String {
    let mut lines = Vec::new();
    for pr in memory.profiles.values() {
        let claims: Vec<String> = pr.claims.iter().map(|c| format!("{}@D{}", c.role.name(), c.day)).collect();
        let votes: Vec<String> = pr.votes_cast.iter().map(|(t, d)| format!("{t}@D{d}")).collect();
        lines.push(format!(
            "{}: claims [{}] votes [{}] flags {}",
            pr.player,
            claims.join(", "),
            votes.join(", "),
            pr.consistency_flags.len()
        ));
    }
    lines.join("\n")
}

/// One line per public statement or vote, oldest first.
pub fn chat_lines(obs: &Observation) -> Vec<String> {
    obs.public_events
        .iter()
        .filter_map(|r| match &r.event {
            Event::StatementMade { speaker, text, .. } => {
                Some(format!("[e{}] {speaker}: {}", r.seq, if text.is_empty() { "(silent)" } else { text }))
            }
            Event::VoteCast { voter, target, .. } => Some(format!("[e{}] {voter} votes {target}", r.seq)),
            Event::PlayerEliminated { player, revealed_role, .. } => {
                Some(format!("[e{}] {player} eliminated ({})", r.seq, revealed_role.name()))
            }
            _ => None,
        })
        .collect()
}

pub struct PromptInputs<'a> {
    pub task: Task,
    pub observation: &'a Observation,
    pub memory: &'a RevacMemory,
    pub review: Option<&'a Review>,
    pub tone: Option<&'a ToneProfile>,
    pub draft: Option<&'a str>,
    pub candidates: Vec<PlayerId>,
    pub params: GenerationParams,
}

/// Builds the request and trims public chat until it fits `budget` tokens.
pub fn build_request(inputs: PromptInputs<'_>, budget: usize) -> Result<BackendRequest, BackendError> {
    let mut segments = vec![
        Segment { kind: SegmentKind::Instructions, text: instructions(inputs.task).into() },
        Segment { kind: SegmentKind::PrivateFacts, text: facts_segment(inputs.memory) },
        Segment { kind: SegmentKind::MemoryDigest, text: digest_segment(inputs.memory) },
    ];
    if let Some(review) = inputs.review {
        segments.push(Segment {
            kind: SegmentKind::Review,
            text: format_probability_block(&review.role_probabilities),
        });
    }
    if let Some(tone) = inputs.tone {
        segments.push(Segment {
            kind: SegmentKind::ToneDirectives,
            text: format!("Tone: {:?}\n{}", tone.tone, tone.directives.join("\n")),
        });
    }
    if let Some(draft) = inputs.draft {
        segments.push(Segment { kind: SegmentKind::Draft, text: draft.to_string() });
    }
    for line in chat_lines(inputs.observation) {
        segments.push(Segment { kind: SegmentKind::PublicChat, text: line });
    }
    let mut req = BackendRequest {
        task: inputs.task,
        system: SYSTEM.into(),
        segments,
        params: inputs.params,
        candidates: inputs.candidates,
    };
    fit_budget(&mut req, budget)?;
    Ok(req)
}

/// Drops droppable segments oldest first until the request fits.
pub fn fit_budget(req: &mut BackendRequest, budget: usize) -> Result<(), BackendError> {
    while req.estimated_tokens() > budget {
        let Some(i) = req.segments.iter().position(|s| s.kind.droppable()) else {
            return Err(BackendError::BudgetExceeded { needed: req.estimated_tokens(), budget });
        };
        req.segments.remove(i);
    }
    Ok(())
}
