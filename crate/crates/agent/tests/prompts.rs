use std::path::PathBuf;

use arena_agent::prompt::{executor_prompt, plan_examples, planner_prompt, verifier_prompt};
use arena_agent::rules::{active_rules, Condition, Rule, RuleBase, RuleKind};
use arena_core::obs::fixture::{showcase_history, showcase_state};
use arena_core::obs::render_observation;
use arena_core::sim::{create_match, Faction, MatchConfig, PlayerId, Pos, UnitId, UnitKind, UnitRecord};
use proptest::prelude::*;

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn ids(rules: &[&Rule]) -> Vec<u32> {
    rules.iter().map(|r| r.id).collect()
}

#[test]
fn planner_prompt_matches_golden() {
    let state = showcase_state();
    let obs = render_observation(&state, PlayerId::ONE, &showcase_history());
    let base = RuleBase::for_faction(Faction::Protoss);
    let rules = active_rules(&state, PlayerId::ONE, &base);
    let prompt = planner_prompt(&obs, &rules, plan_examples(Faction::Protoss));
    let path = golden("planner_showcase.txt");
    if std::env::var_os("ARENA_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, &prompt).unwrap();
    }
    let expected = std::fs::read_to_string(&path).expect("golden present; regenerate with ARENA_BLESS=1");
    assert_eq!(prompt, expected);
    assert!(prompt.starts_with("As a top-tier StarCraft II strategist"));
    assert!(prompt.contains("Current Game State\n# Round state\nTime: 04:18\n"));
    assert!(prompt.contains("Examples\nFollowing are some examples:\n- Do nothing and just wait;"));
    assert_eq!(planner_prompt(&obs, &rules, plan_examples(Faction::Protoss)), prompt);
}

#[test]
fn showcase_rules() {
    let state = showcase_state();
    let base = RuleBase::for_faction(Faction::Protoss);
    let active = ids(&active_rules(&state, PlayerId::ONE, &base));
    // Supply 3 left, Nexus at 53 energy, five Zealots against two Stalkers.
    for id in [1, 2, 3, 11, 14, 23] {
        assert!(active.contains(&id), "rule {id} missing from {active:?}");
    }
    // Pylon, Assimilator, Gateway and Cybernetics Core all exist.
    for id in [13, 15, 16, 17, 24] {
        assert!(!active.contains(&id), "rule {id} should be inactive");
    }
}

#[test]
fn empty_rule_list_leaves_empty_section() {
    let state = showcase_state();
    let obs = render_observation(&state, PlayerId::ONE, &showcase_history());
    let prompt = planner_prompt(&obs, &[], "");
    assert!(prompt.contains("\n\nRules\n\n\nExamples\n\n\nThink step by step"));
}

fn supply_rule(base: &RuleBase) -> u32 {
    base.rules
        .iter()
        .find(|r| r.text.starts_with("Supply is low!"))
        .map(|r| r.id)
        .unwrap()
}

#[test]
fn supply_rule_tracks_unused_supply() {
    for faction in [Faction::Terran, Faction::Protoss, Faction::Zerg] {
        let mut state = create_match(MatchConfig::mirror(faction, 5)).unwrap();
        let base = RuleBase::for_faction(faction);
        let id = supply_rule(&base);
        state.player_mut(PlayerId::ONE).supply_unused = 6;
        assert!(ids(&active_rules(&state, PlayerId::ONE, &base)).contains(&id));
        state.player_mut(PlayerId::ONE).supply_unused = 7;
        assert!(!ids(&active_rules(&state, PlayerId::ONE, &base)).contains(&id));
    }
}

#[test]
fn static_rules_at_game_start() {
    for faction in [Faction::Terran, Faction::Protoss, Faction::Zerg] {
        let state = create_match(MatchConfig::mirror(faction, 9)).unwrap();
        let base = RuleBase::for_faction(faction);
        let active = ids(&active_rules(&state, PlayerId::ONE, &base));
        assert_eq!(&active[..3], [1, 2, 3]);
    }
}

#[test]
fn chrono_rule_follows_energy() {
    let mut state = create_match(MatchConfig::mirror(Faction::Protoss, 3)).unwrap();
    let base = RuleBase::for_faction(Faction::Protoss);
    let id = base
        .rules
        .iter()
        .find(|r| r.text.contains("Chrono Boost"))
        .map(|r| r.id)
        .unwrap();
    let nexus = state.primary_headquarters(PlayerId::ONE).unwrap().id;
    state.units.get_mut(&nexus).unwrap().energy.current = 49;
    assert!(!ids(&active_rules(&state, PlayerId::ONE, &base)).contains(&id));
    state.units.get_mut(&nexus).unwrap().energy.current = 50;
    assert!(ids(&active_rules(&state, PlayerId::ONE, &base)).contains(&id));
}

#[test]
fn unpowered_rule() {
    let mut state = create_match(MatchConfig::mirror(Faction::Protoss, 3)).unwrap();
    let base = RuleBase::for_faction(Faction::Protoss);
    let id = base.rules.iter().find(|r| r.text.contains("unpowered")).map(|r| r.id).unwrap();
    assert!(!ids(&active_rules(&state, PlayerId::ONE, &base)).contains(&id));
    let hq = state.primary_headquarters(PlayerId::ONE).unwrap().pos;
    let far = Pos::new(hq.x + if hq.x < 30 { 12 } else { -12 }, hq.y);
    state.insert_unit(UnitRecord::new(UnitId(9000), UnitKind::Gateway, Some(PlayerId::ONE), far));
    assert!(ids(&active_rules(&state, PlayerId::ONE, &base)).contains(&id));
}

#[test]
fn verifier_and_executor_embed_commands() {
    let state = showcase_state();
    let obs = render_observation(&state, PlayerId::ONE, &showcase_history());
    let commands = vec!["Build a Pylon".to_string(), "Train 1 Zealot at Gateway [554]".to_string()];
    let v = verifier_prompt(&obs, &commands, &[]);
    assert!(v.contains("Given Commands\n```\n[\n    \"Build a Pylon\",\n"));
    assert!(v.contains("\"error_number\": 0/1/2/..."));
    let e = executor_prompt(&obs, &commands);
    assert!(e.contains("Given Tasks\n```\n["));
    assert!(e.contains("5. If resource is not enough, just complete the most important part of the task."));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Adding a conditional rule that does not hold never changes the prompt.
    #[test]
    fn inactive_rules_do_not_change_bytes(at in 0usize..25, text in "[A-Za-z ]{1,40}") {
        let state = showcase_state();
        let obs = render_observation(&state, PlayerId::ONE, &showcase_history());
        let base = RuleBase::for_faction(Faction::Protoss);
        let before = planner_prompt(&obs, &active_rules(&state, PlayerId::ONE, &base), "");
        let mut grown = base.clone();
        let at = at.min(grown.rules.len());
        grown.rules.insert(at, Rule {
            id: 99,
            text,
            kind: RuleKind::Conditional,
            when: Condition::SupplyUnusedBelow(0),
        });
        let after = planner_prompt(&obs, &active_rules(&state, PlayerId::ONE, &grown), "");
        prop_assert_eq!(before, after);
    }
}
