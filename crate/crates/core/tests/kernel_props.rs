use std::collections::BTreeSet;

use arena_core::protocol::ActionRequest;
use arena_core::sim::{
    auto_micro, builtin_policy, catalog, create_match, step, Faction, GameState, MatchConfig,
    PlayerId, UnitId,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Builtin orders mixed with random, often illegal, requests.
fn noisy_actions(state: &GameState, player: PlayerId, level: u8, rng: &mut ChaCha8Rng) -> Vec<ActionRequest> {
    let mut actions = builtin_policy(state, player, level);
    actions.extend(auto_micro(state, player));
    if rng.gen_bool(0.05) {
        let abilities = catalog().abilities();
        let ability = &abilities[rng.gen_range(0..abilities.len())];
        let ids: Vec<u32> = state.units.keys().map(|id| id.0).collect();
        let unit = ids[rng.gen_range(0..ids.len())];
        let mut req = ActionRequest::new(ability.name.clone(), [unit]);
        match rng.gen_range(0..3) {
            0 => req = req.on_unit(ids[rng.gen_range(0..ids.len())]),
            1 => req = req.at(rng.gen_range(-2..50), rng.gen_range(-2..50)),
            _ => {}
        }
        actions.push(req);
    }
    actions
}

fn check_invariants(s: &GameState, seen: &mut BTreeSet<UnitId>, max_seen: &mut u32) {
    for p in PlayerId::both() {
        let ps = s.player(p);
        assert_eq!(ps.minerals as u64, 50 + ps.collected_minerals - ps.spent_minerals);
        assert_eq!(ps.vespene as u64, ps.collected_vespene - ps.spent_vespene);
        assert_eq!(
            ps.supply_unused,
            ps.supply_cap.saturating_sub(ps.supply_army + ps.supply_workers)
        );
    }
    let mut fresh = Vec::new();
    for (id, u) in &s.units {
        assert_eq!(*id, u.id);
        assert!(u.health.current <= u.health.max);
        assert!(u.queue.len() <= 5);
        assert!(s.in_bounds(u.pos), "{:?} at {}", u.kind, u.pos);
        if !seen.contains(id) {
            fresh.push(*id);
        }
    }
    for id in fresh {
        assert!(id.0 > *max_seen, "id {} reused", id.0);
        *max_seen = id.0;
        seen.insert(id);
    }
    for p in PlayerId::both() {
        for u in s.units.values().filter(|u| u.owner == Some(p.opponent())) {
            let visible = s.is_visible_to(p, u);
            let in_sight = s.own_units(p).any(|o| {
                let r = o.kind.def().sight as i64;
                u.footprint().any(|c| s.in_bounds(c) && c.dist2(o.pos) <= r * r)
            });
            assert_eq!(visible, in_sight, "fog mismatch for {:?}", u.id);
        }
    }
}

fn run(faction: Faction, seed: u64, levels: (u8, u8), ticks: u64) -> (GameState, Vec<String>) {
    let mut s = create_match(MatchConfig::mirror(faction, seed)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut seen = BTreeSet::new();
    let mut max_seen = 0;
    let mut digests = Vec::new();
    check_invariants(&s, &mut seen, &mut max_seen);
    for _ in 0..ticks {
        let a = noisy_actions(&s, PlayerId::ONE, levels.0, &mut rng);
        let b = noisy_actions(&s, PlayerId::TWO, levels.1, &mut rng);
        step(&mut s, [&a, &b]);
        check_invariants(&s, &mut seen, &mut max_seen);
        digests.push(s.digest_hex());
    }
    (s, digests)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn kernel_invariants_hold(
        seed in any::<u64>(),
        faction in 0usize..3,
        l1 in 1u8..=7,
        l2 in 1u8..=7,
    ) {
        run(Faction::ALL[faction], seed, (l1, l2), 900);
    }
}

#[test]
fn same_seed_same_digests() {
    for f in Faction::ALL {
        let (a, da) = run(f, 11, (4, 6), 600);
        let (b, db) = run(f, 11, (4, 6), 600);
        assert_eq!(da, db);
        assert_eq!(a.digest(), b.digest());
    }
}
