mod common;

use common::{checked_playout, p, Checker};
use mafia_core::game::{DayStage, Event, GameError};
use mafia_core::{Alignment, Game, GameConfig, NightAction, Phase, Role};
use proptest::prelude::*;

fn six() -> Vec<Role> {
    vec![Role::Villager, Role::Villager, Role::Mafia, Role::Mafia, Role::Doctor, Role::Detective]
}

#[test]
fn seeded_playouts_hold_every_invariant() {
    for seed in 0..300 {
        let stats = checked_playout(seed).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        assert!(stats.winner.is_some());
    }
}

#[test]
fn playouts_are_reproducible() {
    for seed in [3, 17, 99] {
        let a = checked_playout(seed).unwrap();
        let b = checked_playout(seed).unwrap();
        assert_eq!((a.days, a.records, a.winner), (b.days, b.records, b.winner));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn any_seed_terminates_soundly(seed in any::<u64>()) {
        let stats = checked_playout(seed).map_err(TestCaseError::fail)?;
        prop_assert!(stats.winner.is_some());
    }

    #[test]
    fn same_seed_same_roles(seed in any::<u64>()) {
        let cfg = GameConfig::default().seeded(seed);
        let a = Game::new(cfg.clone()).unwrap();
        let b = Game::new(cfg).unwrap();
        prop_assert_eq!(a.log(), b.log());
    }
}

#[test]
fn day_limit_ends_for_mafia_on_last_day() {
    let mut cfg = GameConfig::with_counts(2, 1, 1, 2);
    cfg.max_days = 2;
    let mut g = Game::with_roles(cfg, six()).unwrap();
    let mut checker = Checker::new(&g);
    for _ in 0..2 {
        g.resolve_night().unwrap();
        g.open_voting().unwrap();
        g.tally_votes().unwrap();
        checker.check(&g).unwrap();
    }
    assert_eq!(g.winner(), Some(Alignment::Mafia));
    assert!(matches!(g.log().last().unwrap().event, Event::GameEnded { .. }));
    assert_eq!(g.log().last().unwrap().day, 1);
}

#[test]
fn protected_target_survives_and_doctor_learns_it() {
    let mut g = Game::with_roles(GameConfig::with_counts(2, 1, 1, 2), six()).unwrap();
    g.submit_night_action(p(2), NightAction::Kill(p(0))).unwrap();
    g.submit_night_action(p(4), NightAction::Protect(p(0))).unwrap();
    g.resolve_night().unwrap();
    assert!(g.is_alive(p(0)));
    let doc = g.observation_for(p(4)).unwrap();
    assert!(doc.private_events.iter().any(|r| matches!(r.event, Event::ProtectionApplied { target, .. } if target == p(0))));
    let other = g.observation_for(p(1)).unwrap();
    assert!(!other.events().iter().any(|r| matches!(r.event, Event::ProtectionApplied { .. })));
}

#[test]
fn dead_players_cannot_act() {
    let mut g = Game::with_roles(GameConfig::with_counts(2, 1, 1, 2), six()).unwrap();
    g.submit_night_action(p(2), NightAction::Kill(p(0))).unwrap();
    g.resolve_night().unwrap();
    assert!(!g.is_alive(p(0)));
    let len = g.log().len();
    assert_eq!(g.record_statement(p(0), "hello", Vec::new()), Err(GameError::DeadPlayer(p(0))));
    g.open_voting().unwrap();
    assert!(g.cast_vote(p(0), p(2)).is_err());
    assert!(g.cast_vote(p(1), p(0)).is_err());
    assert_eq!(g.log().len(), len + 1);
    assert_eq!(g.phase(), Phase::Day { day: 0, stage: DayStage::Voting });
}

#[test]
fn tie_vote_eliminates_nobody() {
    let mut g = Game::with_roles(GameConfig::with_counts(2, 1, 1, 2), six()).unwrap();
    g.resolve_night().unwrap();
    g.open_voting().unwrap();
    g.cast_vote(p(0), p(2)).unwrap();
    g.cast_vote(p(1), p(3)).unwrap();
    assert_eq!(g.tally_votes().unwrap(), None);
    assert_eq!(g.living().len(), 6);
    assert_eq!(g.phase(), Phase::Night { day: 1 });
}

#[test]
fn lynching_last_mafia_gives_village_the_win() {
    let roles = vec![Role::Villager, Role::Villager, Role::Villager, Role::Mafia];
    let mut g = Game::with_roles(GameConfig::with_counts(1, 0, 0, 3), roles).unwrap();
    g.resolve_night().unwrap();
    g.open_voting().unwrap();
    for v in 0..3 {
        g.cast_vote(p(v), p(3)).unwrap();
    }
    assert_eq!(g.tally_votes().unwrap(), Some(p(3)));
    assert_eq!(g.winner(), Some(Alignment::Village));
    Checker::new(&g).check(&g).unwrap();
}
