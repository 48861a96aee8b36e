//! Scenario benchmark: curated cases with ground-truth roles, role accuracy
//! (Metric A), judged explanation quality (Metric B) and their combination.

pub mod case;
pub mod judge;
pub mod scoring;

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::narrative::compose_narrative;
use crate::agent::{Agent, AgentConfig, Backend, Variant};
use crate::game::{PlayerId, Role};

pub use case::{bundled_cases, bundled_cases_dir, load_case, load_cases, BenchmarkCase, CaseFile, Step, Tag};
pub use judge::{Checklist, Judge, JudgeOutcome, ModelJudge, StubJudge};
pub use scoring::{combine, final_score, metric_a, Scores};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error("{origin}: {message}")]
    Io { origin: String, message: String },
    #[error("{origin}: cannot parse case: {message}")]
    Parse { origin: String, message: String },
    #[error("case {case}: field `{field}`: {message}")]
    Schema { case: String, field: String, message: String },
    #[error("case {case}: replay failed at step {step}: {message}")]
    Replay { case: String, step: usize, message: String },
    #[error("scoring error: {0}")]
    Score(String),
}

/// Point predictions plus the explanation to be judged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub roles: BTreeMap<PlayerId, Role>,
    pub explanation: String,
}

pub trait Predictor: Send + Sync {
    fn name(&self) -> String;
    fn predict(&self, case: &BenchmarkCase) -> Result<Prediction, String>;
}

/// A pipeline variant's reviewer, read off as per-player argmax predictions.
pub struct PipelinePredictor {
    pub variant: Variant,
    pub config: AgentConfig,
    pub backend: Option<Arc<dyn Backend>>,
}

impl PipelinePredictor {
    pub fn new(variant: Variant) -> Self {
        PipelinePredictor { variant, config: AgentConfig::default(), backend: None }
    }
}

impl Predictor for PipelinePredictor {
    fn name(&self) -> String {
        match &self.backend {
            Some(b) => format!("{}+{}", self.variant.name(), b.name()),
            None => self.variant.name().to_string(),
        }
    }

    fn predict(&self, case: &BenchmarkCase) -> Result<Prediction, String> {
        let mut agent = Agent::new(case.seat(), self.variant, self.config.clone());
        if let Some(b) = &self.backend {
            agent = agent.with_backend(b.clone(), 0);
        }
        let memory = agent.observe(&case.observation);
        let review = agent.review(&case.observation, &memory);
        review.check_probabilities()?;
        Ok(Prediction { roles: review.point_predictions(), explanation: review.narrative })
    }
}

/// Reads the ground truth and explains it from the seat's evidence.
pub struct OraclePredictor;

impl Predictor for OraclePredictor {
    fn name(&self) -> String {
        "oracle".into()
    }

    fn predict(&self, case: &BenchmarkCase) -> Result<Prediction, String> {
        let memory = case.seat_memory();
        let mafia: Vec<PlayerId> = case
            .ground_truth()
            .iter()
            .filter(|(p, r)| **r == Role::Mafia && memory.is_alive(**p) && **p != case.seat())
            .map(|(p, _)| *p)
            .collect();
        let order = memory.graph.suspicion_ranking(Some(memory.owner)).into_iter().map(|x| x.0).collect::<Vec<_>>();
        Ok(Prediction {
            roles: case.ground_truth().clone(),
            explanation: compose_narrative(&memory, &case.contradictions, &order, &mafia),
        })
    }
}

/// Predicts the same role for everyone and explains nothing.
pub struct ConstantPredictor(pub Role);

impl Predictor for ConstantPredictor {
    fn name(&self) -> String {
        format!("constant-{}", self.0.name().to_lowercase())
    }

    fn predict(&self, case: &BenchmarkCase) -> Result<Prediction, String> {
        Ok(Prediction {
            roles: case.roster().into_iter().map(|p| (p, self.0)).collect(),
            explanation: String::new(),
        })
    }
}

/// Fails on the listed case ids and defers to `inner` elsewhere.
pub struct FailingPredictor<P> {
    pub inner: P,
    pub fail_on: Vec<String>,
}

impl<P: Predictor> Predictor for FailingPredictor<P> {
    fn name(&self) -> String {
        format!("{}-failing", self.inner.name())
    }

    fn predict(&self, case: &BenchmarkCase) -> Result<Prediction, String> {
        if self.fail_on.iter().any(|id| id == case.id()) {
            return Err("predictor failed".into());
        }
        self.inner.predict(case)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub case_id: String,
    pub prediction: BTreeMap<PlayerId, Role>,
    pub explanation: String,
    pub metric_a: f64,
    pub metric_b_raw: f64,
    pub metric_b_norm: f64,
    pub final_score: f64,
    pub judge_fallback: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub agent: String,
    pub judge: String,
    pub cases: usize,
    pub failures: usize,
    pub judge_fallbacks: usize,
    pub metric_a: f64,
    pub metric_b_norm: f64,
    pub final_score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub cases: Vec<CaseResult>,
    pub aggregate: Aggregate,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteOptions {
    /// Score Metric A on alignments instead of exact roles.
    pub alignment_only: bool,
}

fn score_case(
    predictor: &dyn Predictor,
    case: &BenchmarkCase,
    judge: &dyn Judge,
    opts: SuiteOptions,
) -> CaseResult {
    let failed = |error: String| CaseResult {
        case_id: case.id().to_string(),
        prediction: BTreeMap::new(),
        explanation: String::new(),
        metric_a: 0.0,
        metric_b_raw: 0.0,
        metric_b_norm: 0.0,
        final_score: 0.0,
        judge_fallback: false,
        error: Some(error),
    };
    let prediction = match predictor.predict(case) {
        Ok(p) => p,
        Err(e) => return failed(e),
    };
    let a = metric_a(&prediction.roles, case.ground_truth(), opts.alignment_only);
    let verdict = judge.judge(&prediction.explanation, case);
    match final_score(a, verdict.raw) {
        Ok(s) => CaseResult {
            case_id: case.id().to_string(),
            prediction: prediction.roles,
            explanation: prediction.explanation,
            metric_a: s.metric_a,
            metric_b_raw: s.metric_b_raw,
            metric_b_norm: s.metric_b_norm,
            final_score: s.final_score,
            judge_fallback: verdict.fallback,
            error: None,
        },
        Err(e) => failed(e.to_string()),
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Scores every case (in parallel) and aggregates in case order.
pub fn run_suite(
    predictor: &dyn Predictor,
    cases: &[BenchmarkCase],
    judge: &dyn Judge,
    opts: SuiteOptions,
) -> SuiteResult {
    let results: Vec<CaseResult> =
        cases.par_iter().map(|c| score_case(predictor, c, judge, opts)).collect();
    let aggregate = Aggregate {
        agent: predictor.name(),
        judge: judge.name().to_string(),
        cases: results.len(),
        failures: results.iter().filter(|r| r.error.is_some()).count(),
        judge_fallbacks: results.iter().filter(|r| r.judge_fallback).count(),
        metric_a: mean(results.iter().map(|r| r.metric_a)),
        metric_b_norm: mean(results.iter().map(|r| r.metric_b_norm)),
        final_score: mean(results.iter().map(|r| r.final_score)),
    };
    SuiteResult { cases: results, aggregate }
}

#[derive(Serialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum ResultLine<'a> {
    Case(&'a CaseResult),
    Aggregate(&'a Aggregate),
}

impl SuiteResult {
    /// One JSON line per case, then the aggregate.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for c in &self.cases {
            serde_json::to_writer(&mut out, &ResultLine::Case(c))?;
            out.write_all(b"\n")?;
        }
        serde_json::to_writer(&mut out, &ResultLine::Aggregate(&self.aggregate))?;
        out.write_all(b"\n")
    }
}
