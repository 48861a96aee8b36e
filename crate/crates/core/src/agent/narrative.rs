//! Templated review prose. Every claim cites the record behind it as `[e<seq>]`.

use std::collections::BTreeSet;
use std::fmt::Write;

use super::review::Review;
use crate::game::{PlayerId, Role};
use crate::memory::{ContradictionKind, ContradictionRecord, Fact, RevacMemory};

const MAX_CONTRADICTIONS: usize = 4;
const MAX_SUSPECTS: usize = 3;

fn cite(seqs: &[u64]) -> String {
    seqs.iter().map(|s| format!("[e{s}]")).collect::<Vec<_>>().join(" ")
}

fn describe(c: &ContradictionRecord, memory: &RevacMemory) -> String {
    let subject = c.subject;
    match (c.kind, c.other) {
        (ContradictionKind::CounterClaim, Some(other)) => {
            let role = memory.latest_claim(other).map_or("a unique role", Role::name);
            format!("{subject} contests {other}'s {role} claim")
        }
        (ContradictionKind::SelfContradiction, _) => format!("{subject} has claimed two different roles"),
        (ContradictionKind::RoleAbilityMismatch, Some(t)) => {
            format!("{subject} describes a night action on {t} their claimed role cannot perform")
        }
        (ContradictionKind::ImpossibleReference, Some(t)) => {
            format!("{subject} describes acting on {t} after {t} was already dead")
        }
        (_, _) => format!("{subject} is inconsistent"),
    }
}

/// Builds the narrative for `review`, concluding on the likeliest hidden Mafia.
pub fn build_narrative(memory: &RevacMemory, review: &Review) -> String {
    let mafia_left = memory.living_alignment_counts().0.max(1);
    let partners = memory.known_partners();
    let mut candidates: Vec<PlayerId> = memory
        .living()
        .into_iter()
        .filter(|&p| p != memory.owner && !partners.contains(&p))
        .collect();
    candidates.sort_by(|&a, &b| {
        review
            .mafia_prob(b)
            .total_cmp(&review.mafia_prob(a))
            .then(review.suspicion_rank(a).cmp(&review.suspicion_rank(b)))
            .then(a.cmp(&b))
    });
    candidates.retain(|&p| review.mafia_prob(p) > 0.0);
    candidates.truncate(mafia_left);
    compose_narrative(memory, &review.contradictions, &review.suspicion_order, &candidates)
}

/// Narrative citing facts, contradictions and the named suspects. Suspects
/// with no citable record are left out of the conclusion.
pub fn compose_narrative(
    memory: &RevacMemory,
    contradictions: &[ContradictionRecord],
    suspicion_order: &[PlayerId],
    conclusion: &[PlayerId],
) -> String {
    let mut out = String::new();
    let mut cited: BTreeSet<PlayerId> = BTreeSet::new();
    let _ = writeln!(out, "Review by {} on day {}.", memory.owner, memory.current_day);

    let mut lines: Vec<String> = Vec::new();
    for f in &memory.confirmed_facts {
        let line = match f.fact {
            Fact::Investigated { target, alignment } => {
                cited.insert(target);
                format!("I checked {target} and the result was {alignment:?} {}.", cite(&[f.source_seq]))
            }
            Fact::SurvivedAttack { player } => {
                cited.insert(player);
                format!("My protection saved {player} from a kill {}.", cite(&[f.source_seq]))
            }
            Fact::RoleRevealed { player, role } => {
                cited.insert(player);
                format!("{player} was eliminated and revealed as {} {}.", role.name(), cite(&[f.source_seq]))
            }
            _ => continue,
        };
        lines.push(line);
    }
    for &(day, seq) in &memory.no_kill_nights {
        lines.push(format!("Night {day} ended with no kill {}.", cite(&[seq])));
    }
    for c in contradictions.iter().take(MAX_CONTRADICTIONS) {
        cited.insert(c.subject);
        if let Some(o) = c.other {
            cited.insert(o);
        }
        lines.push(format!(
            "{}: {} {}.",
            c.kind.phrase(),
            describe(c, memory),
            cite(&c.evidence)
        ));
    }
    let living: BTreeSet<PlayerId> = memory.living().into_iter().collect();
    for &p in suspicion_order.iter().filter(|p| living.contains(p)).take(MAX_SUSPECTS) {
        let pressure = memory.graph.pressure_score(p);
        if pressure.score <= 0.0 {
            continue;
        }
        let Some(&seq) = memory.involvement.get(&p).and_then(|s| s.last()) else { continue };
        cited.insert(p);
        lines.push(format!(
            "{p} is under pressure {:.1} from {} accuser(s) {}.",
            pressure.score,
            pressure.accusers,
            cite(&[seq])
        ));
    }
    let mut named = Vec::new();
    for &p in conclusion {
        if cited.contains(&p) {
            named.push(p);
            continue;
        }
        if let Some(&seq) = memory.involvement.get(&p).and_then(|s| s.last()) {
            cited.insert(p);
            lines.push(format!("{p} took part in {}.", cite(&[seq])));
            named.push(p);
        }
    }

    if lines.is_empty() {
        out.push_str("No hard evidence yet.\n");
    } else {
        out.push_str("Evidence:\n");
        for l in lines {
            let _ = writeln!(out, "- {l}");
        }
    }
    if named.is_empty() {
        out.push_str("Conclusion: nobody stands out yet.");
    } else {
        let names: Vec<String> = named.iter().map(|p| p.to_string()).collect();
        let _ = write!(out, "Conclusion: {} most likely Mafia.", names.join(" and "));
    }
    out
}
