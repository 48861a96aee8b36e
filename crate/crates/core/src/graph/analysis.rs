use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::SocialAlignmentGraph;
use crate::game::PlayerId;

/// Aggregate negative weight pointing at one player.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Pressure {
    pub score: f64,
    pub accusers: usize,
}

fn by_score_desc(a: &(PlayerId, f64), b: &(PlayerId, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

impl SocialAlignmentGraph {
    /// Sum of all edge weights from `src` to `dst`.
    pub fn net_weight(&self, src: PlayerId, dst: PlayerId) -> f64 {
        let t = self.pair(src, dst);
        t.negative + t.positive
    }

    /// Positive weight in both directions, taken as the weaker of the two.
    /// One-sided defense scores zero.
    pub fn mutual_support_score(&self, a: PlayerId, b: PlayerId) -> f64 {
        if a == b {
            return 0.0;
        }
        self.pair(a, b).positive.min(self.pair(b, a).positive)
    }

    pub fn pressure_score(&self, target: PlayerId) -> Pressure {
        self.pressure_excluding(target, None)
    }

    pub(crate) fn pressure_excluding(&self, target: PlayerId, skip: Option<PlayerId>) -> Pressure {
        let mut p = Pressure::default();
        for (&(src, dst), totals) in self.pairs() {
            if dst != target || src == target || Some(src) == skip || totals.negative >= 0.0 {
                continue;
            }
            p.score += -totals.negative;
            p.accusers += 1;
        }
        p
    }

    /// Total defense weight received by `target`.
    pub fn support_in(&self, target: PlayerId) -> f64 {
        self.support_excluding(target, None)
    }

    pub(crate) fn support_excluding(&self, target: PlayerId, skip: Option<PlayerId>) -> f64 {
        self.pairs()
            .filter(|(&(src, dst), _)| dst == target && src != target && Some(src) != skip)
            .map(|(_, t)| t.positive)
            .sum()
    }

    /// Unordered pairs whose mutual support reaches `threshold`, strongest first.
    pub fn collusion_pairs(&self, threshold: f64) -> Vec<((PlayerId, PlayerId), f64)> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for (&(a, b), totals) in self.pairs() {
            if totals.positive <= 0.0 {
                continue;
            }
            let key = (a.min(b), a.max(b));
            if !seen.insert(key) {
                continue;
            }
            let score = self.mutual_support_score(key.0, key.1);
            if score > 0.0 && score >= threshold {
                out.push((key, score));
            }
        }
        out.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
        out
    }

    /// Living players by pressure minus received defense, most suspicious first.
    ///
    /// With a viewer, edges the viewer authored are ignored so an agent does
    /// not read its own accusations back as evidence.
    pub fn suspicion_ranking(&self, viewer: Option<PlayerId>) -> Vec<(PlayerId, f64)> {
        let mut scores: BTreeMap<PlayerId, f64> = self
            .nodes()
            .iter()
            .filter(|(_, n)| n.alive)
            .map(|(&p, _)| (p, 0.0))
            .collect();
        for (&(src, dst), totals) in self.pairs() {
            if src == dst || Some(src) == viewer {
                continue;
            }
            if let Some(s) = scores.get_mut(&dst) {
                *s += -totals.negative - totals.positive;
            }
        }
        let mut ranked: Vec<(PlayerId, f64)> = scores.into_iter().collect();
        ranked.sort_by(by_score_desc);
        ranked
    }
}
