use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{extract_mentions, RevacMemory};
use crate::game::{Event, EventRecord, PlayerId, Role};
use crate::graph::ActKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContradictionKind {
    /// Two living players claim the same unique role.
    CounterClaim,
    /// The claimed role cannot perform the night action the player describes.
    RoleAbilityMismatch,
    /// One player has claimed two different roles.
    SelfContradiction,
    /// A described night action targets someone already dead that night.
    ImpossibleReference,
}

impl ContradictionKind {
    /// Phrase used when citing the contradiction in prose.
    pub fn phrase(self) -> &'static str {
        match self {
            ContradictionKind::CounterClaim => "counter-claim",
            ContradictionKind::RoleAbilityMismatch => "role/ability mismatch",
            ContradictionKind::SelfContradiction => "self-contradiction",
            ContradictionKind::ImpossibleReference => "impossible reference",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ContradictionRecord {
    pub day: u32,
    pub kind: ContradictionKind,
    pub subject: PlayerId,
    /// The other player involved: the earlier claimant, or the referenced target.
    pub other: Option<PlayerId>,
    /// Seqs of the records that establish the contradiction, ascending.
    pub evidence: Vec<u64>,
}

fn evidence(mut seqs: Vec<u64>) -> Vec<u64> {
    seqs.sort_unstable();
    seqs.dedup();
    seqs
}

impl RevacMemory {
    /// Contradictions grounded in recorded claims, mentions and deaths.
    /// Sorted, with duplicates removed.
    pub fn detect_contradictions(&self) -> Vec<ContradictionRecord> {
        let mut out = BTreeSet::new();

        for role in Role::ALL.into_iter().filter(|r| r.is_unique()) {
            // (first seq claiming `role`, day, player), living players only
            let mut claimants: Vec<(u64, u32, PlayerId)> = self
                .profiles
                .values()
                .filter(|p| self.is_alive(p.player))
                .filter_map(|p| {
                    p.claims.iter().find(|c| c.role == role).map(|c| (c.seq, c.day, p.player))
                })
                .collect();
            claimants.sort();
            for (j, &(seq_j, day_j, later)) in claimants.iter().enumerate() {
                for &(seq_i, _, earlier) in &claimants[..j] {
                    out.insert(ContradictionRecord {
                        day: day_j,
                        kind: ContradictionKind::CounterClaim,
                        subject: later,
                        other: Some(earlier),
                        evidence: evidence(vec![seq_i, seq_j]),
                    });
                }
            }
        }

        for p in self.profiles.values() {
            let Some(first) = p.claims.first() else { continue };
            let mut reported = BTreeSet::new();
            for c in &p.claims[1..] {
                if c.role != first.role && reported.insert(c.role) {
                    out.insert(ContradictionRecord {
                        day: c.day,
                        kind: ContradictionKind::SelfContradiction,
                        subject: p.player,
                        other: None,
                        evidence: evidence(vec![first.seq, c.seq]),
                    });
                }
            }
        }

        for m in &self.mentions {
            if let Some(claim) = m.standing_claim {
                if claim.role != m.mention.ability.role() {
                    out.insert(ContradictionRecord {
                        day: m.day,
                        kind: ContradictionKind::RoleAbilityMismatch,
                        subject: m.speaker,
                        other: Some(m.mention.target),
                        evidence: evidence(vec![claim.seq, m.seq]),
                    });
                }
            }
            let night = m.mention.night.unwrap_or(m.day);
            if let Some(death) = self.deaths.get(&m.mention.target) {
                if death.before_night(night) && death.seq < m.seq {
                    out.insert(ContradictionRecord {
                        day: m.day,
                        kind: ContradictionKind::ImpossibleReference,
                        subject: m.speaker,
                        other: Some(m.mention.target),
                        evidence: evidence(vec![death.seq, m.seq]),
                    });
                }
            }
        }

        out.into_iter().collect()
    }
}

fn record(log: &[EventRecord], seq: u64) -> Option<&EventRecord> {
    log.iter().find(|r| r.seq == seq)
}

fn statement(rec: &EventRecord) -> Option<(PlayerId, &str, &[crate::graph::SocialAct], u32)> {
    match &rec.event {
        Event::StatementMade { speaker, text, acts, day, .. } => {
            Some((*speaker, text.as_str(), acts.as_slice(), *day))
        }
        _ => None,
    }
}

fn claims_in(acts: &[crate::graph::SocialAct], who: PlayerId) -> Vec<Role> {
    acts.iter()
        .filter_map(|a| match a.kind {
            ActKind::ClaimRole { src, role } if src == who => Some(role),
            _ => None,
        })
        .collect()
}

/// Re-reads the evidence of `rec` from the raw log and checks that it really
/// shows the stated kind of contradiction.
pub fn verify_contradiction(rec: &ContradictionRecord, log: &[EventRecord]) -> bool {
    if rec.evidence.is_empty() {
        return false;
    }
    let Some(evs) = rec.evidence.iter().map(|&s| record(log, s)).collect::<Option<Vec<_>>>() else {
        return false;
    };
    let roster: Vec<PlayerId> = (0..=u8::MAX).map(PlayerId).collect();
    match rec.kind {
        ContradictionKind::CounterClaim => {
            let Some(other) = rec.other else { return false };
            let by = |who: PlayerId| -> Vec<Role> {
                evs.iter()
                    .filter_map(|e| statement(e))
                    .filter(|s| s.0 == who)
                    .flat_map(|s| claims_in(s.2, who))
                    .collect()
            };
            let a = by(rec.subject);
            let b = by(other);
            a.iter().any(|r| r.is_unique() && b.contains(r))
        }
        ContradictionKind::SelfContradiction => {
            let roles: BTreeSet<Role> = evs
                .iter()
                .filter_map(|e| statement(e))
                .filter(|s| s.0 == rec.subject)
                .flat_map(|s| claims_in(s.2, rec.subject))
                .collect();
            roles.len() >= 2
        }
        ContradictionKind::RoleAbilityMismatch => {
            let Some(target) = rec.other else { return false };
            let stmts: Vec<_> =
                evs.iter().filter_map(|e| statement(e)).filter(|s| s.0 == rec.subject).collect();
            let abilities: Vec<Role> = stmts
                .iter()
                .flat_map(|s| extract_mentions(s.1, &roster))
                .filter(|m| m.target == target)
                .map(|m| m.ability.role())
                .collect();
            let claimed: Vec<Role> =
                stmts.iter().flat_map(|s| claims_in(s.2, rec.subject)).collect();
            abilities.iter().any(|a| claimed.iter().any(|c| c != a))
        }
        ContradictionKind::ImpossibleReference => {
            let Some(target) = rec.other else { return false };
            let death = evs.iter().find_map(|e| match e.event {
                Event::PlayerEliminated { player, day, .. } if player == target => {
                    Some((e.seq, day))
                }
                _ => None,
            });
            let mention = evs.iter().find_map(|e| {
                let (speaker, text, _, day) = statement(e)?;
                if speaker != rec.subject {
                    return None;
                }
                extract_mentions(text, &roster)
                    .into_iter()
                    .find(|m| m.target == target)
                    .map(|m| (e.seq, m.night.unwrap_or(day)))
            });
            match (death, mention) {
                (Some((dseq, dday)), Some((mseq, night))) => dseq < mseq && dday < night,
                _ => false,
            }
        }
    }
}
