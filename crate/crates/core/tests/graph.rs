mod common;

use common::{p, random_stream, ActStream};
use mafia_core::graph::{ActKind, EdgeKind, GraphError};
use mafia_core::{SocialAct, SocialAlignmentGraph};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn stream(seed: u64) -> ActStream {
    random_stream(&mut ChaCha8Rng::seed_from_u64(seed))
}

#[test]
fn thousand_streams_match_rescans() {
    for seed in 0..1000 {
        stream(seed).check_against_oracles().unwrap_or_else(|e| panic!("seed {seed}: {e}"));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn oracles_agree(seed in any::<u64>()) {
        stream(seed).check_against_oracles().map_err(TestCaseError::fail)?;
    }

    #[test]
    fn edges_carry_their_kind_sign(seed in any::<u64>()) {
        let g = stream(seed).graph();
        for e in g.edges() {
            let ok = match e.kind {
                EdgeKind::Accusation => e.weight == -1.0,
                EdgeKind::Defense => e.weight == 1.0,
                EdgeKind::VoteAlignment => e.weight == -2.0,
            };
            prop_assert!(ok, "{:?}", e);
            prop_assert_ne!(e.src, e.dst);
        }
    }

    #[test]
    fn recording_is_append_only_and_additive(seed in any::<u64>()) {
        let s = stream(seed);
        let mut g = SocialAlignmentGraph::new(s.players());
        for act in &s.acts {
            let before = g.clone();
            g.record_act(*act).unwrap();
            prop_assert_eq!(&g.edges()[..before.edges().len()], before.edges());
            let target = act.kind.target();
            let w = match act.kind {
                ActKind::Accuse { .. } => -1.0,
                ActKind::Defend { .. } => 1.0,
                ActKind::Vote { .. } => -2.0,
                ActKind::ClaimRole { .. } => 0.0,
            };
            for a in s.players() {
                for b in s.players() {
                    let hit = a == act.kind.source() && Some(b) == target;
                    let expected = before.net_weight(a, b) + if hit { w } else { 0.0 };
                    prop_assert_eq!(g.net_weight(a, b), expected);
                }
            }
        }
    }

    #[test]
    fn json_round_trip_is_identity(seed in any::<u64>()) {
        let g = stream(seed).graph();
        let back = SocialAlignmentGraph::from_json(&g.to_json().unwrap()).unwrap();
        prop_assert_eq!(back.nodes(), g.nodes());
        prop_assert_eq!(back.edges(), g.edges());
        for a in g.roster() {
            prop_assert_eq!(back.pressure_score(a), g.pressure_score(a));
        }
        prop_assert_eq!(back, g);
    }
}

fn graph(n: u8) -> SocialAlignmentGraph {
    SocialAlignmentGraph::new((0..n).map(p))
}

fn act(kind: ActKind, turn: u32) -> SocialAct {
    SocialAct::at(kind, 1, turn)
}

#[test]
fn net_weight_sums_accusation_and_vote() {
    let mut g = graph(6);
    g.record_act(act(ActKind::Accuse { src: p(1), dst: p(2) }, 0)).unwrap();
    g.record_act(act(ActKind::Vote { src: p(1), dst: p(2) }, 1)).unwrap();
    assert_eq!(g.net_weight(p(1), p(2)), -3.0);
    assert_eq!(g.net_weight(p(2), p(1)), 0.0);
    let pr = g.pressure_score(p(2));
    assert_eq!((pr.score, pr.accusers), (3.0, 1));
}

#[test]
fn one_sided_defense_is_not_mutual() {
    let mut g = graph(4);
    g.record_act(act(ActKind::Defend { src: p(0), dst: p(1) }, 0)).unwrap();
    g.record_act(act(ActKind::Defend { src: p(0), dst: p(1) }, 1)).unwrap();
    assert_eq!(g.mutual_support_score(p(0), p(1)), 0.0);
    assert!(g.collusion_pairs(0.0).is_empty());
}

#[test]
fn mutual_defense_pair_is_reported() {
    let mut g = graph(6);
    for (turn, (a, b)) in [(3, 4), (4, 3), (3, 4), (4, 3)].into_iter().enumerate() {
        g.record_act(act(ActKind::Defend { src: p(a), dst: p(b) }, turn as u32)).unwrap();
    }
    assert_eq!(g.collusion_pairs(1.5), vec![((p(3), p(4)), 2.0)]);
    assert!(g.collusion_pairs(2.5).is_empty());
}

#[test]
fn untouched_players_rank_by_id() {
    let g = graph(5);
    let ranking = g.suspicion_ranking(None);
    assert_eq!(ranking, (0..5).map(|i| (p(i), 0.0)).collect::<Vec<_>>());
}

#[test]
fn invalid_acts_are_rejected() {
    let mut g = graph(3);
    assert_eq!(g.record_act(act(ActKind::Accuse { src: p(1), dst: p(1) }, 0)), Err(GraphError::SelfReference(p(1))));
    assert_eq!(g.record_act(act(ActKind::Accuse { src: p(1), dst: p(7) }, 0)), Err(GraphError::UnknownPlayer(p(7))));
    g.record_act(act(ActKind::Accuse { src: p(0), dst: p(1) }, 5)).unwrap();
    assert!(matches!(g.record_act(act(ActKind::Accuse { src: p(0), dst: p(2) }, 4)), Err(GraphError::OutOfOrder { .. })));
    assert_eq!(g.edges().len(), 1);
}
