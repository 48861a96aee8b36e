use serde::{Deserialize, Serialize};

use super::review::Review;
use crate::game::{Alignment, Phase, PlayerId};
use crate::memory::{ContradictionRecord, Fact, RevacMemory};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tone {
    AggressivePressuring,
    WithdrawingPassive,
    LogicallyAnchoring,
    ContrarianSkeptical,
}

impl Tone {
    pub fn directives(self) -> Vec<String> {
        let d: &[&str] = match self {
            Tone::AggressivePressuring => &[
                "Name the top suspect directly and call for a vote.",
                "Point out that nobody has defended them.",
                "Keep it short and confident.",
            ],
            Tone::WithdrawingPassive => &[
                "Stay calm and do not argue back.",
                "Ask others to share their reads before acting.",
                "Avoid new accusations this turn.",
            ],
            Tone::LogicallyAnchoring => &[
                "Restate the strongest verified fact first.",
                "Tie every suspicion to a specific event.",
                "Ignore claims nobody can verify.",
            ],
            Tone::ContrarianSkeptical => &[
                "Question the consensus forming against one player.",
                "Ask what evidence supports the pile-on.",
                "Offer a plausible town reading of the target.",
            ],
        };
        d.iter().map(|s| s.to_string()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToneProfile {
    pub tone: Tone,
    pub directives: Vec<String>,
    pub rationale: String,
    /// The player the tone is aimed at, when there is one.
    pub focus: Option<PlayerId>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToneContext {
    pub owner: PlayerId,
    pub phase: Phase,
    pub is_lylo: bool,
    pub own_alignment: Alignment,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToneThresholds {
    /// Pressure strictly above this, with nothing backing it, is a bandwagon.
    pub bandwagon_pressure: f64,
    /// A suspect defended by less than this is weakly defended.
    pub weak_defense: f64,
    /// The owner is "under suspicion" inside this many top ranks.
    pub self_rank: usize,
}

impl Default for ToneThresholds {
    fn default() -> Self {
        ToneThresholds { bandwagon_pressure: 3.0, weak_defense: 1.0, self_rank: 2 }
    }
}

fn profile(tone: Tone, focus: Option<PlayerId>, rationale: String) -> ToneProfile {
    ToneProfile { tone, directives: tone.directives(), rationale, focus }
}

fn backed(p: PlayerId, memory: &RevacMemory, contradictions: &[ContradictionRecord]) -> bool {
    contradictions.iter().any(|c| c.subject == p)
        || memory.confirmed_facts.iter().any(|f| {
            matches!(f.fact, Fact::Investigated { target, alignment: Alignment::Mafia } if target == p)
        })
}

/// First matching rule wins; the last rule always matches.
pub fn select_tone(
    review: &Review,
    memory: &RevacMemory,
    ctx: &ToneContext,
    th: &ToneThresholds,
) -> ToneProfile {
    let owner = ctx.owner;
    let g = &memory.graph;

    let top = review.suspicion_order.iter().take(th.self_rank);
    if top.clone().any(|&p| p == owner)
        && review.suspicion_scores.get(&owner).copied().unwrap_or(0.0) > 0.0
    {
        let why = if ctx.own_alignment == Alignment::Mafia {
            "owner is heavily suspected while hiding a Mafia role"
        } else {
            "owner ranks among the top suspects"
        };
        return profile(Tone::WithdrawingPassive, None, why.into());
    }

    let anchor = memory.confirmed_facts.iter().find_map(|f| match f.fact {
        Fact::Investigated { target, alignment: Alignment::Mafia } if memory.is_alive(target) => {
            Some((target, f.source_seq))
        }
        _ => None,
    });
    if let Some((target, seq)) = anchor {
        return profile(
            Tone::LogicallyAnchoring,
            Some(target),
            format!("confirmed fact [e{seq}] implicates living {target}"),
        );
    }

    let bandwagon = memory.living().into_iter().find(|&p| {
        p != owner
            && g.pressure_score(p).score > th.bandwagon_pressure
            && !backed(p, memory, &review.contradictions)
    });
    if let Some(p) = bandwagon {
        let pr = g.pressure_score(p);
        return profile(
            Tone::ContrarianSkeptical,
            Some(p),
            format!("{p} carries pressure {:.1} from {} accusers with no fact or contradiction behind it", pr.score, pr.accusers),
        );
    }

    let top_suspect = review
        .suspicion_order
        .iter()
        .copied()
        .find(|&p| p != owner && !memory.known_partners().contains(&p));
    if let Some(t) = top_suspect {
        let pr = g.pressure_score(t);
        let support = g.support_in(t);
        if pr.score > 0.0 && support < th.weak_defense {
            return profile(
                Tone::AggressivePressuring,
                Some(t),
                format!("top suspect {t} has pressure {:.1} and defense {:.1}", pr.score, support),
            );
        }
    }

    let why = if ctx.is_lylo {
        "lylo: keep the vote tied to evidence"
    } else {
        "no strong social signal; stay with the evidence"
    };
    profile(Tone::LogicallyAnchoring, top_suspect, why.into())
}
