use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use shapes_core::bundled;
use shapes_core::episodic::{EpisodicStore, Frequency, PlanSource, Trigger};
use shapes_core::kr::{parse_kb, Filler, Frame, InstanceRef};
use shapes_core::ontology::ConceptStore;

const LOU: &str = include_str!("../../../data/memory/lou-tools.kb");

fn store(text: &str) -> EpisodicStore {
    EpisodicStore::parse(text).unwrap()
}

/// Brute-force habit finder: every (agent, concept) pair drawn from the whole
/// store, membership decided by rescanning raw frames.
fn oracle(frames: &[Frame], ont: &ConceptStore, min: usize) -> BTreeSet<(String, String, String)> {
    let by_name: BTreeMap<String, &Frame> = frames.iter().map(|f| (f.head.to_string(), f)).collect();
    let agents: BTreeSet<String> = frames.iter().filter_map(|f| f.value("AGENT")).map(|a| a.to_string()).collect();
    let concepts: BTreeSet<String> = frames.iter().filter_map(|f| f.head.concept_name()).map(|c| c.to_string()).collect();
    let mut out = BTreeSet::new();
    for a in &agents {
        for c in &concepts {
            if !ont.subsumes("EVENT", c) {
                continue;
            }
            let members: Vec<&Frame> = frames
                .iter()
                .filter(|f| f.head.concept_name() == Some(c.as_str()))
                .filter(|f| f.value("AGENT").map(|x| x.to_string()) == Some(a.clone()))
                .filter(|f| {
                    let theme = f.value("THEME");
                    f.all_fillers("AFTER").iter().any(|u| {
                        let Some(uf) = by_name.get(&u.to_string()) else { return false };
                        ont.subsumes("USE", uf.head.concept_name().unwrap()) && theme.is_some() && uf.value("THEME") == theme
                    })
                })
                .collect();
            if members.len() < min {
                continue;
            }
            let themes: Vec<String> = members.iter().filter_map(|f| f.value("THEME")).map(|t| t.concept_name().unwrap().to_string()).collect();
            if themes.len() != members.len() {
                continue;
            }
            let mut common: Option<BTreeSet<String>> = None;
            for t in &themes {
                let anc: BTreeSet<String> = ont.ancestors(t).unwrap().into_iter().collect();
                common = Some(match common {
                    None => anc,
                    Some(c) => c.intersection(&anc).cloned().collect(),
                });
            }
            let common = common.unwrap();
            let deepest = common.iter().find(|x| common.iter().all(|y| ont.subsumes(y, x))).cloned().unwrap();
            if deepest != "ALL" {
                out.insert((a.clone(), c.clone(), deepest));
            }
        }
    }
    out
}

fn habits_of(text: &str, ont: &ConceptStore, min: usize) -> BTreeSet<(String, String, String)> {
    store(text)
        .identify_habits(ont, min)
        .into_iter()
        .filter(|h| h.trigger == Trigger::AfterUse)
        .map(|h| (Filler::Anchor(h.agent).to_string(), h.event, h.theme))
        .collect()
}

fn frames(text: &str) -> Vec<Frame> {
    parse_kb(text).unwrap().into_iter().map(|b| b.frame).collect()
}

#[test]
fn lou_returns_tools_habitually() {
    let ont = bundled::ontology();
    let hs = store(LOU).identify_habits(&ont, 3);
    assert_eq!(hs.len(), 1);
    let h = &hs[0];
    assert_eq!((h.event.as_str(), h.theme.as_str(), h.trigger, h.frequency), ("RETURN-OBJECT", "TOOL", Trigger::AfterUse, Frequency::Always));
    assert_eq!(h.agent, InstanceRef::new("HUMAN", 5));
    assert_eq!(h.support.len(), 3);
    assert_eq!(habits_of(LOU, &ont, 3), oracle(&frames(LOU), &ont, 3));
}

#[test]
fn two_instances_are_not_a_habit() {
    let ont = bundled::ontology();
    let cut = LOU.split("instance USE-#3").next().unwrap();
    assert!(store(cut).identify_habits(&ont, 3).is_empty());
    assert!(oracle(&frames(cut), &ont, 3).is_empty());
}

#[test]
fn mixed_agents_are_not_a_habit() {
    let ont = bundled::ontology();
    let mixed = format!("{}\ninstance HUMAN-#6\n  HAS-NAME value Hal\n\ninstance HUMAN-#7\n  HAS-NAME value Phil\n", LOU)
        .replace("RETURN-OBJECT-#2\n  AGENT value HUMAN-#5", "RETURN-OBJECT-#2\n  AGENT value HUMAN-#6")
        .replace("RETURN-OBJECT-#3\n  AGENT value HUMAN-#5", "RETURN-OBJECT-#3\n  AGENT value HUMAN-#7");
    assert!(store(&mixed).identify_habits(&ont, 3).is_empty());
    assert!(oracle(&frames(&mixed), &ont, 3).is_empty());
}

fn script() -> Frame {
    frames("concept FILL-GAS-TANK\n  HAS-EVENT-AS-PART value REMOVE-1, INSERT-1, PUMP-LIQUID-1, REMOVE-2, RETURN-OBJECT-1, CLOSE-CONTAINER-1, PAY-1\n  OPTIONAL-PART value PAY-1\n")
        .remove(0)
}

fn steps(s: &str) -> Vec<Filler> {
    s.split_whitespace().map(|t| shapes_core::kr::parse_atom(t).unwrap()).collect()
}

#[test]
fn each_collaborator_gets_their_own_path() {
    let mut s = EpisodicStore::new();
    let (hal, phil) = (InstanceRef::new("HUMAN", 6), InstanceRef::new("HUMAN", 7));
    let a = steps("REMOVE-1 INSERT-1 PUMP-LIQUID-1 REMOVE-2 RETURN-OBJECT-1 CLOSE-CONTAINER-1 PAY-1");
    let b = steps("REMOVE-1 INSERT-1 PUMP-LIQUID-1 REMOVE-2 CLOSE-CONTAINER-1 RETURN-OBJECT-1");
    s.record_preference(&hal, &script(), a.clone()).unwrap();
    s.record_preference(&phil, &script(), b.clone()).unwrap();
    let ctx = BTreeSet::new();
    assert_eq!(s.plan_with_preference(&hal, &script(), &ctx).unwrap().steps, a);
    assert_eq!(s.plan_with_preference(&phil, &script(), &ctx).unwrap().steps, b);
    let other = s.plan_with_preference(&InstanceRef::new("HUMAN", 8), &script(), &ctx).unwrap();
    assert_eq!(other.source, PlanSource::Default);
    assert_eq!(other.steps.len(), 6);
    let back = EpisodicStore::parse(&s.serialize()).unwrap();
    assert_eq!(back.plan_with_preference(&phil, &script(), &ctx).unwrap().steps, b);
}

#[test]
fn stencil_over_missing_branch_is_invalid() {
    let mut s = EpisodicStore::new();
    let bad = steps("REMOVE-1 INSERT-1 PUMP-LIQUID-1 REMOVE-2 RETURN-OBJECT-1 CLOSE-CONTAINER-1 WASH-WINDSHIELD-1");
    assert!(s.record_preference(&InstanceRef::new("HUMAN", 6), &script(), bad).is_err());
    let short = steps("REMOVE-1 INSERT-1");
    assert!(s.record_preference(&InstanceRef::new("HUMAN", 6), &script(), short).is_err());
}

#[test]
fn only_the_last_working_plan_is_copied() {
    let mut s = EpisodicStore::new();
    let ctx: BTreeSet<String> = ["card-accepted".to_string()].into_iter().collect();
    assert_eq!(s.instantiate_plan(&script(), &ctx).source, PlanSource::Default);
    let old = steps("REMOVE-1 INSERT-1 PUMP-LIQUID-1 REMOVE-2 RETURN-OBJECT-1 CLOSE-CONTAINER-1 PAY-1");
    s.record_plan("FILL-GAS-TANK", old.clone(), vec!["card-accepted".into()], true);
    let p = s.instantiate_plan(&script(), &ctx);
    assert_eq!((p.source, p.steps.clone()), (PlanSource::Reused, old));
    s.record_plan("FILL-GAS-TANK", steps("REMOVE-1"), vec!["cash-on-hand".into()], true);
    let p = s.instantiate_plan(&script(), &ctx);
    assert_eq!(p.source, PlanSource::Default);
    assert!(p.trace[0].rejected[0].1.contains("cash-on-hand"));
}

proptest! {
    #[test]
    fn habit_finder_matches_brute_force(events in proptest::collection::vec((0usize..2, 0usize..5, any::<bool>(), 0usize..2), 0..9)) {
        let ont = bundled::ontology();
        let agents = ["HUMAN-#1", "HUMAN-#2"];
        let themes = ["HAMMER", "WRENCH", "SCREWDRIVER", "TOOLBOX", "CUP"];
        let kinds = ["RETURN-OBJECT", "INSERT"];
        let mut text = String::new();
        for (i, (a, t, used, k)) in events.iter().enumerate() {
            let n = i + 1;
            text.push_str(&format!("instance {}-#{}\n\n", themes[*t], n));
            text.push_str(&format!("instance USE-#{}\n  AGENT value {}\n  THEME value {}-#{}\n\n", n, agents[*a], themes[*t], n));
            text.push_str(&format!("instance {}-#{}\n  AGENT value {}\n  THEME value {}-#{}\n", kinds[*k], n, agents[*a], themes[*t], n));
            if *used {
                text.push_str(&format!("  AFTER value USE-#{}\n", n));
            }
            text.push('\n');
        }
        prop_assert_eq!(habits_of(&text, &ont, 3), oracle(&frames(&text), &ont, 3));
    }

    #[test]
    fn minted_indices_strictly_increase(concepts in proptest::collection::vec(0usize..3, 1..30)) {
        let names = ["TIGER", "HUMAN", "DOG"];
        let mut s = EpisodicStore::parse("instance TIGER-#4\n").unwrap();
        let mut last: BTreeMap<&str, u32> = BTreeMap::new();
        for c in concepts {
            let r = s.mint(names[c]);
            if let Some(prev) = last.get(names[c]) {
                prop_assert!(r.index > *prev);
            }
            last.insert(names[c], r.index);
        }
    }
}
