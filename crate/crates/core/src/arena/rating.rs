//! Two-team Gaussian skill ratings.
//!
//! Every seat is a player with its spec's current `(mu, sigma)`. A team
//! performs at the mean of its members' skills, so the four-strong village
//! and the two-strong Mafia are compared on the same scale. With `W` the
//! winning and `L` the losing team, `n_T` the size of seat i's team,
//!
//! ```text
//! c^2 = 2 * beta^2 + sum_W sigma^2 / n_W^2 + sum_L sigma^2 / n_L^2
//! t   = (mean_W mu - mean_L mu) / c
//! v   = pdf(t) / cdf(t)            w = v * (v + t)
//! mu    += +/- sigma^2 / (n_T * c) * v           (+ for winners)
//! sigma^2 *= 1 - sigma^2 / (n_T^2 * c^2) * w
//! ```
//!
//! A spec that fills several seats in one game moves by the mean of its
//! seats' mean deltas and the mean of their variance factors. `tau` adds
//! dynamics noise before the update and is zero by default, so deviations
//! never grow.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use super::transcript::Transcript;
use super::ArenaError;
use crate::game::Alignment;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RatingParams {
    pub mu0: f64,
    pub sigma0: f64,
    pub beta: f64,
    pub tau: f64,
    /// Leaderboard order is by `mu - k * sigma`.
    pub k: f64,
}

impl Default for RatingParams {
    fn default() -> Self {
        RatingParams { mu0: 25.0, sigma0: 25.0 / 3.0, beta: 25.0 / 6.0, tau: 0.0, k: 3.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rating {
    pub mu: f64,
    pub sigma: f64,
    pub games: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatingState {
    pub params: RatingParams,
    pub ratings: BTreeMap<String, Rating>,
}

/// Per-seat result of one update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeatDelta {
    pub mu: f64,
    pub variance_factor: f64,
}

fn v_w(t: f64) -> (f64, f64) {
    let n = Normal::standard();
    let cdf = n.cdf(t);
    // Far in the lower tail pdf/cdf tends to -t.
    let v = if cdf > 1e-300 { n.pdf(t) / cdf } else { -t };
    (v, v * (v + t))
}

/// Deltas for each winning and each losing player.
pub fn two_team_update(winners: &[Rating], losers: &[Rating], params: &RatingParams) -> (Vec<SeatDelta>, Vec<SeatDelta>) {
    let var = |r: &Rating| r.sigma * r.sigma + params.tau * params.tau;
    let (nw, nl) = (winners.len().max(1) as f64, losers.len().max(1) as f64);
    let mean = |team: &[Rating], n: f64| team.iter().map(|r| r.mu).sum::<f64>() / n;
    let c2 = 2.0 * params.beta * params.beta
        + winners.iter().map(var).sum::<f64>() / (nw * nw)
        + losers.iter().map(var).sum::<f64>() / (nl * nl);
    let c = c2.sqrt();
    let t = (mean(winners, nw) - mean(losers, nl)) / c;
    let (v, w) = v_w(t);
    let delta = |r: &Rating, sign: f64, n: f64| {
        let s2 = var(r);
        SeatDelta { mu: sign * s2 / (n * c) * v, variance_factor: (1.0 - s2 / (n * n * c2) * w).max(f64::EPSILON) }
    };
    (winners.iter().map(|r| delta(r, 1.0, nw)).collect(), losers.iter().map(|r| delta(r, -1.0, nl)).collect())
}

impl RatingState {
    pub fn new(params: RatingParams) -> Self {
        RatingState { params, ratings: BTreeMap::new() }
    }

    pub fn initial(&self) -> Rating {
        Rating { mu: self.params.mu0, sigma: self.params.sigma0, games: 0 }
    }

    /// Adds `name` at the initial rating if it is not rated yet.
    pub fn ensure(&mut self, name: &str) {
        let init = self.initial();
        self.ratings.entry(name.to_string()).or_insert(init);
    }

    pub fn get(&self, name: &str) -> Rating {
        self.ratings.get(name).copied().unwrap_or_else(|| self.initial())
    }

    /// Applies one finished game. `seats` names each seat's spec; `village`
    /// says whether each seat was on the village team.
    pub fn apply(&mut self, seats: &[String], village: &[bool], winner: Alignment) {
        let village_won = winner == Alignment::Village;
        let (mut w_idx, mut l_idx) = (Vec::new(), Vec::new());
        for (i, &v) in village.iter().enumerate() {
            if v == village_won {
                w_idx.push(i);
            } else {
                l_idx.push(i);
            }
        }
        let rating = |i: &usize| self.get(&seats[*i]);
        let winners: Vec<Rating> = w_idx.iter().map(rating).collect();
        let losers: Vec<Rating> = l_idx.iter().map(rating).collect();
        let (dw, dl) = two_team_update(&winners, &losers, &self.params);

        let mut per_spec: BTreeMap<&str, Vec<SeatDelta>> = BTreeMap::new();
        for (i, d) in w_idx.iter().zip(dw).chain(l_idx.iter().zip(dl)) {
            per_spec.entry(seats[*i].as_str()).or_default().push(d);
        }
        for (name, ds) in per_spec {
            let n = ds.len() as f64;
            let dmu = ds.iter().map(|d| d.mu).sum::<f64>() / n;
            let factor = ds.iter().map(|d| d.variance_factor).sum::<f64>() / n;
            let old = self.get(name);
            let var = (old.sigma * old.sigma + self.params.tau * self.params.tau) * factor;
            self.ratings.insert(name.to_string(), Rating { mu: old.mu + dmu, sigma: var.sqrt(), games: old.games + 1 });
        }
    }

    pub fn leaderboard(&self) -> Leaderboard {
        let k = self.params.k;
        let mut entries: Vec<LeaderboardEntry> = self
            .ratings
            .iter()
            .map(|(name, r)| LeaderboardEntry {
                name: name.clone(),
                mu: r.mu,
                sigma: r.sigma,
                games: r.games,
                conservative: r.mu - k * r.sigma,
            })
            .collect();
        entries.sort_by(|a, b| b.conservative.total_cmp(&a.conservative).then_with(|| a.name.cmp(&b.name)));
        Leaderboard { k, entries }
    }
}

/// Returns `ratings` after the game in `transcript`. Unfinished games and
/// transcripts without seat assignments leave the ratings unchanged.
pub fn update_ratings(ratings: &RatingState, transcript: &Transcript) -> RatingState {
    let mut next = ratings.clone();
    let (Some(winner), Some(m)) = (transcript.header.winner, &transcript.header.match_config) else {
        return next;
    };
    let seats: Vec<String> = m.seats.iter().map(|s| s.label()).collect();
    let village: Vec<bool> = transcript.header.roles.iter().map(|r| r.alignment() == Alignment::Village).collect();
    if seats.len() == village.len() {
        next.apply(&seats, &village, winner);
    }
    next
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    pub name: String,
    pub mu: f64,
    pub sigma: f64,
    pub games: u64,
    /// `mu - k * sigma`.
    pub conservative: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Leaderboard {
    pub k: f64,
    pub entries: Vec<LeaderboardEntry>,
}

impl Leaderboard {
    pub fn get(&self, name: &str) -> Option<&LeaderboardEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn save(&self, path: &Path) -> Result<(), ArenaError> {
        let json = serde_json::to_string_pretty(self).expect("leaderboard serializes");
        fs::write(path, json + "\n").map_err(|e| ArenaError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Leaderboard, ArenaError> {
        let text = fs::read_to_string(path).map_err(|e| ArenaError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| ArenaError::io(path, e))
    }

    /// Plain-text table.
    pub fn render(&self) -> String {
        let mut out = format!("{:<4} {:<28} {:>8} {:>8} {:>10} {:>6}\n", "#", "agent", "mu", "sigma", "mu-k*sigma", "games");
        for (i, e) in self.entries.iter().enumerate() {
            out.push_str(&format!(
                "{:<4} {:<28} {:>8.3} {:>8.3} {:>10.3} {:>6}\n",
                i + 1,
                e.name,
                e.mu,
                e.sigma,
                e.conservative,
                e.games
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(mu: f64, sigma: f64) -> Rating {
        Rating { mu, sigma, games: 0 }
    }

    #[test]
    fn winners_gain_losers_lose() {
        let p = RatingParams::default();
        let team = vec![r(25.0, 25.0 / 3.0); 3];
        let (w, l) = two_team_update(&team, &team, &p);
        assert!(w.iter().all(|d| d.mu > 0.0 && d.variance_factor < 1.0));
        assert!(l.iter().all(|d| d.mu < 0.0 && d.variance_factor < 1.0));
    }

    #[test]
    fn upset_moves_more_than_expected_win() {
        let p = RatingParams::default();
        let strong = vec![r(30.0, 5.0); 2];
        let weak = vec![r(20.0, 5.0); 2];
        let (fav, _) = two_team_update(&strong, &weak, &p);
        let (dog, _) = two_team_update(&weak, &strong, &p);
        assert!(dog[0].mu.abs() > fav[0].mu.abs());
    }

    #[test]
    fn lower_tail_is_finite() {
        let (v, w) = v_w(-60.0);
        assert!(v.is_finite() && w.is_finite() && v > 0.0);
    }
}
