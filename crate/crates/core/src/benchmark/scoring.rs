use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::game::{PlayerId, Role};

pub const METRIC_B_MAX: f64 = 5.0;

/// Share of roster players whose predicted role matches the truth. Missing
/// predictions count as wrong. With `alignment_only`, a prediction is right
/// when it has the true role's alignment.
pub fn metric_a(
    prediction: &BTreeMap<PlayerId, Role>,
    truth: &BTreeMap<PlayerId, Role>,
    alignment_only: bool,
) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let correct = truth
        .iter()
        .filter(|(p, &t)| {
            prediction.get(p).is_some_and(|&r| {
                if alignment_only {
                    r.alignment() == t.alignment()
                } else {
                    r == t
                }
            })
        })
        .count();
    correct as f64 / truth.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub metric_a: f64,
    pub metric_b_raw: f64,
    pub metric_b_norm: f64,
    pub final_score: f64,
}

/// Normalises Metric B and combines it with Metric A at equal weight.
pub fn final_score(metric_a: f64, metric_b_raw: f64) -> Result<Scores, BenchError> {
    if !(0.0..=1.0).contains(&metric_a) {
        return Err(BenchError::Score(format!("metric A {metric_a} outside [0, 1]")));
    }
    if !(0.0..=METRIC_B_MAX).contains(&metric_b_raw) {
        return Err(BenchError::Score(format!("metric B {metric_b_raw} outside [0, 5]")));
    }
    let metric_b_norm = metric_b_raw / METRIC_B_MAX;
    Ok(Scores { metric_a, metric_b_raw, metric_b_norm, final_score: combine(metric_a, metric_b_norm) })
}

/// The combined score from Metric A and normalised Metric B.
pub fn combine(metric_a: f64, metric_b_norm: f64) -> f64 {
    0.5 * metric_a + 0.5 * metric_b_norm
}
