//! Shared fixtures for the criterion benches.

use mafia_core::agent::{ScriptedPolicy, Variant};
use mafia_core::arena::{run_match, AgentSpec, MatchConfig, Transcript};
use mafia_core::graph::{ActKind, SocialAct};
use mafia_core::{GameConfig, PlayerId, SocialAlignmentGraph};

/// A finished six-seat game between scripted random players.
pub fn scripted_transcript(seed: u64) -> Transcript {
    let seats = (0..6).map(|_| AgentSpec::scripted(ScriptedPolicy::Random)).collect();
    run_match(&MatchConfig::new(GameConfig::default(), seats, seed)).expect("scripted match runs").transcript
}

/// Seats for a mixed pipeline match.
pub fn pipeline_seats() -> Vec<AgentSpec> {
    (0..6).map(|i| AgentSpec::pipeline(Variant::ALL[i % 3])).collect()
}

/// `edges` accuse/defend/vote acts spread over `n` players, in time order.
pub fn dense_acts(n: u8, edges: usize) -> Vec<SocialAct> {
    let mut acts = Vec::with_capacity(edges);
    let mut i = 0usize;
    while acts.len() < edges {
        let src = PlayerId((i % n as usize) as u8);
        let dst = PlayerId(((i * 7 + 3) % n as usize) as u8);
        i += 1;
        if src == dst {
            continue;
        }
        let kind = match i % 3 {
            0 => ActKind::Accuse { src, dst },
            1 => ActKind::Defend { src, dst },
            _ => ActKind::Vote { src, dst },
        };
        acts.push(SocialAct::at(kind, (acts.len() / 32) as u32, (acts.len() % 32) as u32));
    }
    acts
}

pub fn graph_from(n: u8, acts: &[SocialAct]) -> SocialAlignmentGraph {
    let mut g = SocialAlignmentGraph::new((0..n).map(PlayerId));
    for a in acts {
        g.record_act(*a).expect("fixture acts are valid");
    }
    g
}
