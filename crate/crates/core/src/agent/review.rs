//! Rule-based reviewer: a role-probability table derived from role counts,
//! first-hand facts and social signals.
//!
//! Each hidden assignment of the remaining roles to unknown players is weighted
//! by `exp(s_i / T)` for every player `i` it makes Mafia and by the claim factor
//! for every player whose assigned role matches their latest public claim.
//! Marginals over those weights give the table. With no signals this is the
//! plain role-count prior.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::narrative::build_narrative;
use super::AgentConfig;
use crate::game::{Alignment, DayStage, Phase, PlayerId, Role};
use crate::graph::DEFAULT_COLLUSION_THRESHOLD;
use crate::memory::{ContradictionRecord, Fact, RevacMemory};

/// Above this many weighted assignments the reviewer switches to the
/// independent per-player approximation.
const MAX_ENUMERATION: f64 = 200_000.0;

pub type RoleDistribution = BTreeMap<Role, f64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Vote,
    Kill,
    Protect,
    Investigate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Review {
    pub role_probabilities: BTreeMap<PlayerId, RoleDistribution>,
    pub contradictions: Vec<ContradictionRecord>,
    /// Living players, most suspicious first.
    pub suspicion_order: Vec<PlayerId>,
    pub suspicion_scores: BTreeMap<PlayerId, f64>,
    pub recommended_action: Option<(PlayerId, ActionKind)>,
    pub narrative: String,
}

impl Review {
    pub fn prob(&self, p: PlayerId, role: Role) -> f64 {
        self.role_probabilities.get(&p).and_then(|d| d.get(&role)).copied().unwrap_or(0.0)
    }

    pub fn mafia_prob(&self, p: PlayerId) -> f64 {
        self.prob(p, Role::Mafia)
    }

    pub fn suspicion_rank(&self, p: PlayerId) -> usize {
        self.suspicion_order.iter().position(|&q| q == p).unwrap_or(usize::MAX)
    }

    /// Most likely role per player; ties go to the earlier role in `Role::ALL`.
    pub fn point_predictions(&self) -> BTreeMap<PlayerId, Role> {
        self.role_probabilities
            .iter()
            .map(|(&p, dist)| (p, argmax_role(dist)))
            .collect()
    }

    /// Checks the sum-to-one and range invariants for every player.
    pub fn check_probabilities(&self) -> Result<(), String> {
        for (p, dist) in &self.role_probabilities {
            let mut sum = 0.0;
            for (role, &x) in dist {
                if !(0.0..=1.0).contains(&x) || x.is_nan() {
                    return Err(format!("{p} {role:?} = {x}"));
                }
                sum += x;
            }
            if (sum - 1.0).abs() > 1e-9 {
                return Err(format!("{p} sums to {sum}"));
            }
        }
        Ok(())
    }
}

pub fn argmax_role(dist: &RoleDistribution) -> Role {
    let mut best = Role::ALL[0];
    let mut best_p = f64::NEG_INFINITY;
    for role in Role::ALL {
        let x = dist.get(&role).copied().unwrap_or(0.0);
        if x > best_p {
            best = role;
            best_p = x;
        }
    }
    best
}

fn point_mass(role: Role) -> RoleDistribution {
    Role::ALL.into_iter().map(|r| (r, if r == role { 1.0 } else { 0.0 })).collect()
}

/// Per-player suspicion: graph pressure minus defense (the owner's own edges
/// ignored), plus contradiction, cover and collusion terms.
pub fn suspicion_scores(
    memory: &RevacMemory,
    contradictions: &[ContradictionRecord],
    cfg: &AgentConfig,
) -> Vec<(PlayerId, f64)> {
    let g = &memory.graph;
    let mut scores: BTreeMap<PlayerId, f64> =
        g.suspicion_ranking(Some(memory.owner)).into_iter().collect();
    for c in contradictions {
        if let Some(s) = scores.get_mut(&c.subject) {
            *s += cfg.contradiction_weight;
        }
    }
    let pressured: BTreeSet<PlayerId> = memory
        .living()
        .into_iter()
        .filter(|&p| g.pressure_excluding(p, Some(memory.owner)).score > 0.0)
        .collect();
    for e in g.edges() {
        if e.weight > 0.0 && e.src != memory.owner && pressured.contains(&e.dst) {
            if let Some(s) = scores.get_mut(&e.src) {
                *s += cfg.cover_weight * e.weight;
            }
        }
    }
    for ((a, b), _) in g.collusion_pairs(DEFAULT_COLLUSION_THRESHOLD) {
        for p in [a, b] {
            if let Some(s) = scores.get_mut(&p) {
                *s += cfg.collusion_weight;
            }
        }
    }
    let mut ranked: Vec<(PlayerId, f64)> = scores.into_iter().collect();
    ranked.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    ranked
}

/// What the owner knows for certain about each player.
fn known_roles(memory: &RevacMemory) -> (BTreeMap<PlayerId, Role>, BTreeSet<PlayerId>) {
    let mut known = BTreeMap::new();
    let mut village = BTreeSet::new();
    if let Some(role) = memory.own_role {
        known.insert(memory.owner, role);
    }
    for (&p, d) in &memory.deaths {
        known.insert(p, d.role);
    }
    for f in &memory.confirmed_facts {
        match f.fact {
            Fact::MafiaPartner { player } => {
                known.insert(player, Role::Mafia);
            }
            Fact::Investigated { target, alignment: Alignment::Mafia } => {
                known.entry(target).or_insert(Role::Mafia);
            }
            Fact::Investigated { target, alignment: Alignment::Village } => {
                village.insert(target);
            }
            Fact::SurvivedAttack { player } => {
                village.insert(player);
            }
            Fact::OwnRole { .. } | Fact::RoleRevealed { .. } => {}
        }
    }
    // A Mafia owner knows the whole team, so everyone else is village.
    if memory.own_role == Some(Role::Mafia) {
        for &p in &memory.roster {
            if !known.contains_key(&p) {
                village.insert(p);
            }
        }
    }
    village.retain(|p| !known.contains_key(p));
    (known, village)
}

/// Role probabilities for every roster player.
pub fn role_probabilities(
    memory: &RevacMemory,
    suspicion: &BTreeMap<PlayerId, f64>,
    cfg: &AgentConfig,
) -> BTreeMap<PlayerId, RoleDistribution> {
    let (known, village_only) = known_roles(memory);
    let mut remaining: BTreeMap<Role, usize> = memory.role_counts.clone();
    for role in known.values() {
        if let Some(c) = remaining.get_mut(role) {
            *c = c.saturating_sub(1);
        }
    }
    let free: Vec<PlayerId> =
        memory.roster.iter().copied().filter(|p| !known.contains_key(p)).collect();

    let mut out: BTreeMap<PlayerId, RoleDistribution> =
        known.iter().map(|(&p, &r)| (p, point_mass(r))).collect();
    if free.is_empty() {
        return out;
    }
    let weights: Vec<PlayerWeights> = free
        .iter()
        .map(|&p| PlayerWeights {
            mafia: (suspicion.get(&p).copied().unwrap_or(0.0) / cfg.temperature).exp(),
            claim: memory.latest_claim(p).filter(|r| r.alignment() == Alignment::Village),
            village_only: village_only.contains(&p),
        })
        .collect();
    let counts: Vec<(Role, usize)> =
        Role::ALL.into_iter().map(|r| (r, remaining.get(&r).copied().unwrap_or(0))).collect();
    let total: usize = counts.iter().map(|c| c.1).sum();

    let marginals = if total != free.len() {
        // Inconsistent bookkeeping (e.g. a bad setup echo): fall back to the
        // independent approximation, which tolerates it.
        independent(&weights, &counts, cfg.claim_factor)
    } else if assignment_count(&counts) > MAX_ENUMERATION {
        independent(&weights, &counts, cfg.claim_factor)
    } else {
        enumerate(&weights, &counts, cfg.claim_factor)
            .unwrap_or_else(|| independent(&weights, &counts, cfg.claim_factor))
    };
    for (p, dist) in free.into_iter().zip(marginals) {
        out.insert(p, dist);
    }
    out
}

struct PlayerWeights {
    mafia: f64,
    claim: Option<Role>,
    village_only: bool,
}

impl PlayerWeights {
    fn weight(&self, role: Role, claim_factor: f64) -> f64 {
        if role == Role::Mafia {
            if self.village_only {
                0.0
            } else {
                self.mafia
            }
        } else if self.claim == Some(role) {
            claim_factor
        } else {
            1.0
        }
    }
}

fn assignment_count(counts: &[(Role, usize)]) -> f64 {
    let n: usize = counts.iter().map(|c| c.1).sum();
    let ln_fact = |k: usize| (1..=k).map(|i| (i as f64).ln()).sum::<f64>();
    (ln_fact(n) - counts.iter().map(|c| ln_fact(c.1)).sum::<f64>()).exp()
}

/// Exact weighted marginals over every assignment of `counts` to the players.
/// `None` when no assignment has positive weight.
fn enumerate(
    players: &[PlayerWeights],
    counts: &[(Role, usize)],
    claim_factor: f64,
) -> Option<Vec<RoleDistribution>> {
    let mut left: Vec<usize> = counts.iter().map(|c| c.1).collect();
    let mut acc = vec![vec![0.0; counts.len()]; players.len()];
    let mut chosen = vec![0usize; players.len()];
    let mut total = 0.0;

    #[allow(clippy::too_many_arguments)]
    fn go(
        i: usize,
        w: f64,
        players: &[PlayerWeights],
        counts: &[(Role, usize)],
        claim_factor: f64,
        left: &mut [usize],
        chosen: &mut [usize],
        acc: &mut [Vec<f64>],
        total: &mut f64,
    ) {
        if i == players.len() {
            *total += w;
            for (p, &r) in chosen.iter().enumerate() {
                acc[p][r] += w;
            }
            return;
        }
        for r in 0..counts.len() {
            if left[r] == 0 {
                continue;
            }
            let x = players[i].weight(counts[r].0, claim_factor);
            if x == 0.0 {
                continue;
            }
            left[r] -= 1;
            chosen[i] = r;
            go(i + 1, w * x, players, counts, claim_factor, left, chosen, acc, total);
            left[r] += 1;
        }
    }

    go(0, 1.0, players, counts, claim_factor, &mut left, &mut chosen, &mut acc, &mut total);
    if !(total > 0.0) || !total.is_finite() {
        return None;
    }
    Some(
        acc.into_iter()
            .map(|row| {
                let mut dist: RoleDistribution = counts
                    .iter()
                    .zip(row)
                    .map(|(&(role, _), x)| (role, x / total))
                    .collect();
                renormalize(&mut dist);
                dist
            })
            .collect(),
    )
}

/// Per-player prior from counts, then the same weights applied one player at
/// a time.
fn independent(
    players: &[PlayerWeights],
    counts: &[(Role, usize)],
    claim_factor: f64,
) -> Vec<RoleDistribution> {
    let n = players.len() as f64;
    let mafia_left = counts.iter().find(|c| c.0 == Role::Mafia).map_or(0, |c| c.1) as f64;
    let constrained = players.iter().filter(|p| p.village_only).count() as f64;
    let open = (n - constrained).max(1.0);
    let village_total: f64 =
        counts.iter().filter(|c| c.0 != Role::Mafia).map(|c| c.1 as f64).sum();
    players
        .iter()
        .map(|pw| {
            let p_mafia = if pw.village_only { 0.0 } else { (mafia_left / open).min(1.0) };
            let mut dist = RoleDistribution::new();
            for &(role, c) in counts {
                let prior = if role == Role::Mafia {
                    p_mafia
                } else if village_total > 0.0 {
                    (1.0 - p_mafia) * c as f64 / village_total
                } else {
                    0.0
                };
                dist.insert(role, prior * pw.weight(role, claim_factor));
            }
            if !renormalize(&mut dist) {
                dist = point_mass(Role::Villager);
            }
            dist
        })
        .collect()
}

fn renormalize(dist: &mut RoleDistribution) -> bool {
    let sum: f64 = dist.values().sum();
    if !(sum > 0.0) || !sum.is_finite() {
        return false;
    }
    for x in dist.values_mut() {
        *x /= sum;
    }
    for role in Role::ALL {
        dist.entry(role).or_insert(0.0);
    }
    true
}

/// The full rule-based review for the owner of `memory` in `phase`.
pub fn rule_review(memory: &RevacMemory, phase: Phase, cfg: &AgentConfig) -> Review {
    let contradictions = memory.detect_contradictions();
    let ranked = suspicion_scores(memory, &contradictions, cfg);
    let suspicion_scores: BTreeMap<PlayerId, f64> = ranked.iter().copied().collect();
    let role_probabilities = role_probabilities(memory, &suspicion_scores, cfg);
    let mut review = Review {
        role_probabilities,
        contradictions,
        suspicion_order: ranked.iter().map(|x| x.0).collect(),
        suspicion_scores,
        recommended_action: None,
        narrative: String::new(),
    };
    review.recommended_action = recommend(memory, &review, phase);
    review.narrative = build_narrative(memory, &review);
    review
}

fn pick(
    candidates: impl IntoIterator<Item = PlayerId>,
    review: &Review,
    key: impl Fn(PlayerId) -> f64,
) -> Option<PlayerId> {
    candidates.into_iter().max_by(|&a, &b| {
        key(a)
            .total_cmp(&key(b))
            .then(review.suspicion_rank(b).cmp(&review.suspicion_rank(a)))
            .then(b.cmp(&a))
    })
}

/// Highest Mafia probability among `candidates`, ties by suspicion then id.
pub fn vote_choice(
    candidates: impl IntoIterator<Item = PlayerId>,
    review: &Review,
) -> Option<PlayerId> {
    pick(candidates, review, |p| review.mafia_prob(p))
}

fn recommend(memory: &RevacMemory, review: &Review, phase: Phase) -> Option<(PlayerId, ActionKind)> {
    let me = memory.owner;
    if !memory.is_alive(me) {
        return None;
    }
    let partners = memory.known_partners();
    let others: Vec<PlayerId> = memory
        .living()
        .into_iter()
        .filter(|&p| p != me && !partners.contains(&p))
        .collect();
    match phase {
        Phase::Night { .. } => match memory.own_role? {
            Role::Mafia => {
                let threat = |p: PlayerId| review.prob(p, Role::Detective) + review.prob(p, Role::Doctor);
                pick(others, review, threat).map(|t| (t, ActionKind::Kill))
            }
            Role::Doctor => {
                let claimed_detective = others
                    .iter()
                    .copied()
                    .filter(|&p| memory.latest_claim(p) == Some(Role::Detective))
                    .filter(|&p| review.mafia_prob(p) < 0.5);
                let target = pick(claimed_detective, review, |p| -review.mafia_prob(p)).unwrap_or(me);
                Some((target, ActionKind::Protect))
            }
            Role::Detective => {
                let unchecked: Vec<PlayerId> =
                    others.iter().copied().filter(|&p| memory.investigated(p).is_none()).collect();
                let pool = if unchecked.is_empty() { others } else { unchecked };
                vote_choice(pool, review).map(|t| (t, ActionKind::Investigate))
            }
            Role::Villager => None,
        },
        Phase::Day { stage: DayStage::Voting, .. } | Phase::Day { stage: DayStage::Discussion, .. } => {
            vote_choice(others, review).map(|t| (t, ActionKind::Vote))
        }
        Phase::Ended { .. } => None,
    }
}
