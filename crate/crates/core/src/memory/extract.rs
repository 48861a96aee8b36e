//! Deterministic lexical extraction of social acts from chat text.
//!
//! Text is lowercased and split into clauses at sentence punctuation. Each
//! clause is matched against fixed pattern classes; player references resolve
//! only through `P<k>` or `Player <k>` tokens naming a roster member.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::game::{PlayerId, Role};
use crate::graph::{ActKind, SocialAct};

const PLAYER: &str = r"\b(?:p|player\s*#?\s*)(\d{1,3})\b";
const HEDGE: &str = r"(?:(?:really|very|super|kind\s+of|kinda|pretty|so|definitely|probably|likely|clearly|obviously)\s+)?";
const FIRST_PERSON: &str = r"\bi(?:'ve|'d|'m)?\s+(?:[a-z']+\s+){0,3}?";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ability {
    Investigate,
    Protect,
}

impl Ability {
    pub fn role(self) -> Role {
        match self {
            Ability::Investigate => Role::Detective,
            Ability::Protect => Role::Doctor,
        }
    }
}

/// A first-person description of a night action found in a statement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbilityMention {
    pub ability: Ability,
    pub target: PlayerId,
    /// Night explicitly named in the clause (`N1`, `night 1`), if any.
    pub night: Option<u32>,
}

struct Pattern {
    re: Regex,
    build: fn(PlayerId, PlayerId) -> Vec<ActKind>,
}

fn pat(src: &str, build: fn(PlayerId, PlayerId) -> Vec<ActKind>) -> Pattern {
    let src = src.replace("{P}", PLAYER).replace("{H}", HEDGE).replace("{I}", FIRST_PERSON);
    Pattern { re: Regex::new(&src).expect("static pattern"), build }
}

fn accuse(src: PlayerId, dst: PlayerId) -> Vec<ActKind> {
    vec![ActKind::Accuse { src, dst }]
}

fn defend(src: PlayerId, dst: PlayerId) -> Vec<ActKind> {
    vec![ActKind::Defend { src, dst }]
}

fn checked_mafia(src: PlayerId, dst: PlayerId) -> Vec<ActKind> {
    vec![ActKind::Accuse { src, dst }, ActKind::ClaimRole { src, role: Role::Detective }]
}

fn checked_town(src: PlayerId, dst: PlayerId) -> Vec<ActKind> {
    vec![ActKind::Defend { src, dst }, ActKind::ClaimRole { src, role: Role::Detective }]
}

fn protected(src: PlayerId, dst: PlayerId) -> Vec<ActKind> {
    vec![ActKind::Defend { src, dst }, ActKind::ClaimRole { src, role: Role::Doctor }]
}

fn checked(src: PlayerId, _dst: PlayerId) -> Vec<ActKind> {
    vec![ActKind::ClaimRole { src, role: Role::Detective }]
}

static TARGETED: LazyLock<Vec<Pattern>> = LazyLock::new(|| {
    vec![
        pat(r"\bi\s+(?:accuse|suspect)\s+{P}", accuse),
        pat(r"\b(?:vote|voting|lynch|lynching|eliminate|hammer)\s+(?:for\s+|on\s+|out\s+)?{P}", accuse),
        pat(
            r"{P}\s+(?:is|seems|looks|sounds|feels|'s)\s+{H}(?:the\s+|a\s+)?(?:mafia|sus|suspicious|scum|scummy|lying|liar|fake|evil)\b",
            accuse,
        ),
        pat(r"\b(?:don't|do\s+not|can't|cannot)\s+trust\s+{P}", accuse),
        pat(r"\bi\s+(?:trust|believe|defend|support|vouch\s+for)\s+{P}", defend),
        pat(
            r"{P}\s+(?:is|seems|looks|'s)\s+{H}(?:a\s+|confirmed\s+)?(?:town|innocent|clear|cleared|trustworthy|villager|village)\b",
            defend,
        ),
        pat(r"{P}\s+(?:is|'s)\s+not\s+(?:the\s+|a\s+)?(?:mafia|sus|suspicious|scum|lying)\b", defend),
        pat(
            r"\bi\s+(?:have\s+|had\s+)?(?:checked|investigated)\s+{P}[^.]*?\b(?:as|is|was|came\s+back|:)\s*(?:a\s+)?(?:mafia|scum|evil)\b",
            checked_mafia,
        ),
        pat(
            r"\bi\s+(?:have\s+|had\s+)?(?:checked|investigated)\s+{P}[^.]*?\b(?:as|is|was|came\s+back|:)\s*(?:a\s+)?(?:town|innocent|village|clear|good)\b",
            checked_town,
        ),
        pat(r"\bi\s+(?:have\s+|had\s+)?(?:checked|investigated)\s+{P}", checked),
        pat(r"\bi\s+(?:have\s+|had\s+)?(?:protected|saved|healed)\s+{P}", protected),
    ]
});

static CLAIMS: LazyLock<Vec<Regex>> = LazyLock::new(|| {
    let roles = r"(villager|doctor|detective|mafia|cop|medic)";
    [
        format!(r"\bi\s*(?:am|'m)\s+(?:just\s+)?(?:the\s+|a\s+|an\s+)?(?:just\s+)?(?:(?:normal|regular|simple|plain|real|actual|true)\s+)?{roles}\b"),
        format!(r"\bi\s+(?:claim|full[-\s]?claim)\s+(?:to\s+be\s+)?(?:the\s+|a\s+)?{roles}\b"),
        format!(r"\bas\s+(?:the|a)\s+{roles}\s*,?\s+i\b"),
    ]
    .iter()
    .map(|s| Regex::new(s).expect("static pattern"))
    .collect()
});

static SELF_PROTECT: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\bi\s+(?:have\s+|had\s+)?(?:protected|saved|healed)\s+(?:myself|me)\b")
        .expect("static pattern")
});

static MENTIONS: LazyLock<Vec<(Regex, Ability)>> = LazyLock::new(|| {
    let inv = format!(r"{FIRST_PERSON}(?:investigat(?:e|ed|ing)|check(?:ed|ing)?)\s+{PLAYER}");
    let prot = format!(r"{FIRST_PERSON}(?:protect(?:ed|ing)?|sav(?:e|ed|ing)|heal(?:ed|ing)?)\s+{PLAYER}");
    vec![
        (Regex::new(&inv).expect("static pattern"), Ability::Investigate),
        (Regex::new(&prot).expect("static pattern"), Ability::Protect),
    ]
});

static NIGHT_TOKEN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\b(?:n|night\s*)(\d{1,3})\b").expect("static pattern"));

static PLAYER_TOKEN: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(&format!(r"(?i){PLAYER}")).expect("static pattern")
});

fn normalize(text: &str) -> String {
    text.to_lowercase().replace(['\u{2019}', '\u{2018}'], "'")
}

fn clauses(text: &str) -> impl Iterator<Item = &str> {
    text.split(['.', '!', '?', ';', '\n']).filter(|c| !c.trim().is_empty())
}

fn resolve(digits: &str, roster: &[PlayerId]) -> Option<PlayerId> {
    let n: u8 = digits.parse().ok()?;
    roster.contains(&PlayerId(n)).then_some(PlayerId(n))
}

fn role_word(w: &str) -> Option<Role> {
    match w {
        "villager" => Some(Role::Villager),
        "doctor" | "medic" => Some(Role::Doctor),
        "detective" | "cop" => Some(Role::Detective),
        "mafia" => Some(Role::Mafia),
        _ => None,
    }
}

/// Social acts asserted by `speaker` in `text`, in order of appearance.
/// Unresolvable references produce nothing.
pub fn extract_acts(text: &str, roster: &[PlayerId], speaker: PlayerId) -> Vec<SocialAct> {
    if !roster.contains(&speaker) {
        return Vec::new();
    }
    let lowered = normalize(text);
    // (clause, byte offset, order within a match, act)
    let mut found: Vec<(usize, usize, usize, ActKind)> = Vec::new();
    for (ci, clause) in clauses(&lowered).enumerate() {
        for p in TARGETED.iter() {
            for caps in p.re.captures_iter(clause) {
                let Some(dst) = resolve(&caps[1], roster) else { continue };
                let at = caps.get(0).map_or(0, |m| m.start());
                for (k, kind) in (p.build)(speaker, dst).into_iter().enumerate() {
                    if kind.target() == Some(speaker) {
                        continue;
                    }
                    found.push((ci, at, k, kind));
                }
            }
        }
        for re in CLAIMS.iter() {
            for caps in re.captures_iter(clause) {
                if let Some(role) = role_word(&caps[1]) {
                    let at = caps.get(0).map_or(0, |m| m.start());
                    found.push((ci, at, 0, ActKind::ClaimRole { src: speaker, role }));
                }
            }
        }
        if let Some(m) = SELF_PROTECT.find(clause) {
            found.push((ci, m.start(), 0, ActKind::ClaimRole { src: speaker, role: Role::Doctor }));
        }
    }
    found.sort_by_key(|(c, at, k, _)| (*c, *at, *k));
    let mut acts: Vec<ActKind> = Vec::new();
    for (_, _, _, kind) in found {
        if !acts.contains(&kind) {
            acts.push(kind);
        }
    }
    acts.into_iter().map(SocialAct::new).collect()
}

/// First-person night-action descriptions ("I checked P3 on N0").
pub fn extract_mentions(text: &str, roster: &[PlayerId]) -> Vec<AbilityMention> {
    let lowered = normalize(text);
    let mut out = Vec::new();
    for clause in clauses(&lowered) {
        let night = NIGHT_TOKEN.captures(clause).and_then(|c| c[1].parse().ok());
        let mut hits: Vec<(usize, AbilityMention)> = Vec::new();
        for (re, ability) in MENTIONS.iter() {
            for caps in re.captures_iter(clause) {
                if let Some(target) = resolve(&caps[1], roster) {
                    let at = caps.get(0).map_or(0, |m| m.start());
                    hits.push((at, AbilityMention { ability: *ability, target, night }));
                }
            }
        }
        hits.sort_by_key(|(at, _)| *at);
        for (_, m) in hits {
            if !out.contains(&m) {
                out.push(m);
            }
        }
    }
    out
}

/// Every player id written in the text, resolved or not, in order.
pub fn referenced_ids(text: &str) -> Vec<u32> {
    PLAYER_TOKEN
        .captures_iter(text)
        .filter_map(|c| c[1].parse().ok())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roster(n: u8) -> Vec<PlayerId> {
        (0..n).map(PlayerId).collect()
    }

    fn kinds(text: &str, speaker: u8) -> Vec<ActKind> {
        extract_acts(text, &roster(6), PlayerId(speaker)).into_iter().map(|a| a.kind).collect()
    }

    fn p(i: u8) -> PlayerId {
        PlayerId(i)
    }

    #[test]
    fn canonical_accusation() {
        assert_eq!(kinds("I accuse Player 2", 1), vec![ActKind::Accuse { src: p(1), dst: p(2) }]);
    }

    #[test]
    fn protection_claim_defends_and_claims_doctor() {
        assert_eq!(
            kinds("I protected P3", 4),
            vec![
                ActKind::Defend { src: p(4), dst: p(3) },
                ActKind::ClaimRole { src: p(4), role: Role::Doctor }
            ]
        );
    }

    #[test]
    fn small_talk_yields_nothing() {
        assert!(kinds("nice weather today", 0).is_empty());
        assert!(kinds("", 0).is_empty());
    }

    #[test]
    fn unresolvable_and_self_references_are_dropped() {
        assert!(kinds("I vote Player 99", 1).is_empty());
        assert!(kinds("P1 is sus", 1).is_empty());
    }

    #[test]
    fn detective_result_and_claims() {
        assert_eq!(
            kinds("I am the Detective. I checked P3 last night and P3 is mafia.", 0),
            vec![
                ActKind::ClaimRole { src: p(0), role: Role::Detective },
                ActKind::Accuse { src: p(0), dst: p(3) },
            ]
        );
        assert_eq!(
            kinds("I investigated P2, P2 came back town", 1),
            vec![
                ActKind::Defend { src: p(1), dst: p(2) },
                ActKind::ClaimRole { src: p(1), role: Role::Detective },
            ]
        );
    }

    #[test]
    fn hedged_and_negated_forms() {
        assert_eq!(kinds("P5 is kind of sus", 0), vec![ActKind::Accuse { src: p(0), dst: p(5) }]);
        assert_eq!(kinds("P5 is not mafia", 0), vec![ActKind::Defend { src: p(0), dst: p(5) }]);
        assert_eq!(kinds("I don't trust p4", 0), vec![ActKind::Accuse { src: p(0), dst: p(4) }]);
        assert_eq!(kinds("I'm not the doctor", 0), vec![]);
    }

    #[test]
    fn self_save_claims_doctor_without_edge() {
        assert_eq!(
            kinds("I'm the Doctor. I saved myself, that's why nobody died.", 5),
            vec![ActKind::ClaimRole { src: p(5), role: Role::Doctor }]
        );
    }

    #[test]
    fn mentions_pick_up_gerunds_and_night_tokens() {
        let m = extract_mentions("I'm a villager. I've been investigating P0 all along", &roster(6));
        assert_eq!(m, vec![AbilityMention { ability: Ability::Investigate, target: p(0), night: None }]);
        let m = extract_mentions("I checked P2 on N0", &roster(6));
        assert_eq!(m[0].night, Some(0));
        let m = extract_mentions("P4 says P4 protected P3", &roster(6));
        assert!(m.is_empty());
    }

    #[test]
    fn referenced_ids_include_out_of_roster() {
        assert_eq!(referenced_ids("P9 and player 2 and p1"), vec![9, 2, 1]);
    }
}
