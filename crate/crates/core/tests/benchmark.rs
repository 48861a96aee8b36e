mod common;

use std::collections::BTreeMap;
use std::fs;

use common::{FINAL_SCORE_ROWS, FINAL_TOLERANCE};
use mafia_core::agent::Variant;
use mafia_core::benchmark::{
    bundled_cases, bundled_cases_dir, combine, final_score, load_cases, run_suite, BenchError, CaseFile,
    ConstantPredictor, FailingPredictor, OraclePredictor, PipelinePredictor, Predictor, StubJudge, SuiteOptions,
};
use mafia_core::benchmark::judge::checklist;
use mafia_core::Role;
use proptest::prelude::*;
use serde_json::Value;

/// Villager share of each case's ground truth, read straight from the JSON.
fn villager_fractions() -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(bundled_cases_dir()).unwrap() {
        let path = entry.unwrap().path();
        let v: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        let truth = v["ground_truth"].as_object().unwrap();
        let villagers = truth.values().filter(|r| r.as_str() == Some("villager")).count();
        out.insert(v["id"].as_str().unwrap().to_string(), villagers as f64 / truth.len() as f64);
    }
    out
}

#[test]
fn reported_final_scores_follow_equal_weighting() {
    for (row, a, b, reported) in FINAL_SCORE_ROWS {
        let got = combine(a, b);
        assert!((got - reported).abs() <= FINAL_TOLERANCE, "{row}: {got} vs {reported}");
    }
}

#[test]
fn thirteen_cases_cover_every_tag() {
    let cases = bundled_cases().unwrap();
    assert_eq!(cases.len(), 13);
    for tag in mafia_core::benchmark::Tag::ALL {
        assert!(cases.iter().filter(|c| c.file.tags.contains(&tag)).count() >= 3, "{tag:?}");
    }
    for c in &cases {
        assert_eq!(c.ground_truth().len(), c.roster().len());
        assert!(!c.contradictions.is_empty(), "{} has nothing to detect", c.id());
    }
    let from_disk = load_cases(bundled_cases_dir()).unwrap();
    assert_eq!(from_disk.iter().map(|c| c.file.clone()).collect::<Vec<_>>(), cases.iter().map(|c| c.file.clone()).collect::<Vec<_>>());
}

#[test]
fn oracle_scores_exactly_one() {
    let cases = bundled_cases().unwrap();
    let r = run_suite(&OraclePredictor, &cases, &StubJudge, SuiteOptions::default());
    for c in &r.cases {
        assert_eq!((c.metric_a, c.metric_b_raw), (1.0, 5.0), "{}: {}", c.case_id, c.explanation);
    }
    assert_eq!(r.aggregate.final_score, 1.0);
}

#[test]
fn constant_villager_scores_the_villager_share() {
    let cases = bundled_cases().unwrap();
    let fractions = villager_fractions();
    let r = run_suite(&ConstantPredictor(Role::Villager), &cases, &StubJudge, SuiteOptions::default());
    let mut sum = 0.0;
    for c in &r.cases {
        assert_eq!(c.metric_a, fractions[&c.case_id], "{}", c.case_id);
        assert_eq!(c.metric_b_raw, 0.0);
        sum += fractions[&c.case_id];
    }
    assert_eq!(r.aggregate.metric_a, sum / r.cases.len() as f64);
}

#[test]
fn alignment_scoring_is_never_stricter() {
    let cases = bundled_cases().unwrap();
    for v in Variant::ALL {
        let exact = run_suite(&PipelinePredictor::new(v), &cases, &StubJudge, SuiteOptions::default());
        let loose = run_suite(&PipelinePredictor::new(v), &cases, &StubJudge, SuiteOptions { alignment_only: true });
        for (e, l) in exact.cases.iter().zip(&loose.cases) {
            assert!(l.metric_a >= e.metric_a, "{v:?} {}", e.case_id);
        }
    }
}

#[test]
fn a_failing_case_scores_zero_and_spares_the_rest() {
    let cases = bundled_cases().unwrap();
    let base = run_suite(&OraclePredictor, &cases, &StubJudge, SuiteOptions::default());
    let failing = FailingPredictor { inner: OraclePredictor, fail_on: vec!["hallucination-2".into()] };
    let r = run_suite(&failing, &cases, &StubJudge, SuiteOptions::default());
    assert_eq!(r.aggregate.failures, 1);
    for (b, c) in base.cases.iter().zip(&r.cases) {
        if c.case_id == "hallucination-2" {
            assert_eq!(c.final_score, 0.0);
            assert!(c.error.is_some());
        } else {
            assert_eq!(b, c);
        }
    }
    assert_eq!(r.aggregate.final_score, 12.0 / 13.0);
}

#[test]
fn results_stream_as_json_lines() {
    let cases = bundled_cases().unwrap();
    let r = run_suite(&PipelinePredictor::new(Variant::Revac8), &cases, &StubJudge, SuiteOptions::default());
    let mut buf = Vec::new();
    r.write_jsonl(&mut buf).unwrap();
    let lines: Vec<Value> = String::from_utf8(buf).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 14);
    assert_eq!(lines[13]["record"], "aggregate");
    assert!(lines[..13].iter().all(|l| l["record"] == "case"));
}

#[test]
fn stub_judge_penalises_invented_players() {
    let case = bundled_cases().unwrap().into_iter().find(|c| c.id() == "conflicting-claims-1").unwrap();
    let honest = OraclePredictor.predict(&case).unwrap().explanation;
    assert!(checklist(&honest, &case).no_fabrication);
    let invented = format!("{honest}\nP9 was also seen at night.");
    assert!(!checklist(&invented, &case).no_fabrication);
    let bad_ref = honest.replacen("[e", "[e9999] [e", 1);
    assert!(!checklist(&bad_ref, &case).no_fabrication);
}

fn case_json(edit: impl FnOnce(&mut Value)) -> String {
    let text = fs::read_to_string(bundled_cases_dir().join("hallucination-1.json")).unwrap();
    let mut v: Value = serde_json::from_str(&text).unwrap();
    edit(&mut v);
    v.to_string()
}

#[test]
fn malformed_cases_are_rejected() {
    let missing_truth = case_json(|v| {
        v["ground_truth"].as_object_mut().unwrap().remove("5");
    });
    let illegal_step = case_json(|v| {
        v["events"].as_array_mut().unwrap().insert(0, serde_json::json!({"step": "vote", "voter": 0, "target": 1}));
    });
    let unknown_field = case_json(|v| {
        v["source"] = Value::from("somewhere");
    });
    for (name, text) in [("missing", missing_truth), ("illegal", illegal_step), ("unknown", unknown_field)] {
        let r = CaseFile::parse(&text, name).and_then(|c| c.validate());
        assert!(r.is_err(), "{name} loaded");
    }

    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.json"), case_json(|_| {})).unwrap();
    fs::write(dir.path().join("b.json"), case_json(|_| {})).unwrap();
    assert!(matches!(load_cases(dir.path()), Err(BenchError::Schema { .. })));
}

proptest! {
    #[test]
    fn final_score_is_bounded_and_monotone(a in 0.0..=1.0f64, b in 0.0..=5.0f64, da in 0.0..=1.0f64, db in 0.0..=5.0f64) {
        let s = final_score(a, b).unwrap();
        prop_assert!((0.0..=1.0).contains(&s.final_score));
        prop_assert_eq!(s.metric_b_norm, b / 5.0);
        let a2 = (a + da).min(1.0);
        let b2 = (b + db).min(5.0);
        prop_assert!(final_score(a2, b2).unwrap().final_score >= s.final_score);
    }

    #[test]
    fn out_of_range_inputs_are_errors(a in 1.0001..10.0f64, b in 5.0001..50.0f64) {
        prop_assert!(final_score(a, 1.0).is_err());
        prop_assert!(final_score(0.5, b).is_err());
        prop_assert!(final_score(-a, 1.0).is_err());
    }
}
