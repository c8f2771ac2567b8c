//! A hand-staged mid-game Protoss position used as the observation golden.

use crate::obs::ActionHistory;
use crate::protocol::ActionRequest;
use crate::sim::data::{Faction, UnitKind};
use crate::sim::state::{empty_match, GameState, MatchConfig};
use crate::sim::types::{
    Order, PlayerId, Pos, Product, Progress, QueueItem, UnitId, UnitRecord,
};

const P1: Option<PlayerId> = Some(PlayerId::ONE);
const P2: Option<PlayerId> = Some(PlayerId::TWO);

const COLLECTING_PROBES: [u32; 17] = [
    9, 809, 953, 569, 665, 857, 721, 529, 281, 385, 818, 145, 105, 129, 521, 697, 97,
];

fn rec(id: u32, kind: UnitKind, owner: Option<PlayerId>, x: i32, y: i32) -> UnitRecord {
    UnitRecord::new(UnitId(id), kind, owner, Pos::new(x, y))
}

fn queued(kinds: &[UnitKind]) -> Vec<QueueItem> {
    kinds
        .iter()
        .enumerate()
        .map(|(i, k)| QueueItem {
            product: Product::Unit(*k),
            progress: if i == 0 { k.def().build_time / 3 } else { 0 },
            total: k.def().build_time,
            started: i == 0,
        })
        .collect()
}

fn attacking(mut u: UnitRecord, target: u32) -> UnitRecord {
    u.order = Order::Attack {
        target: UnitId(target),
    };
    u
}

/// 64x64 Protoss mirror at 04:18 with an attack on the enemy main under way.
pub fn showcase_state() -> GameState {
    let config = MatchConfig {
        map_width: 64,
        map_height: 64,
        factions: vec![Faction::Protoss, Faction::Protoss],
        seed: 7,
        ..MatchConfig::default()
    };
    let mut s = empty_match(config).expect("fixture config is valid");
    s.tick = 4128;

    // Neutral nodes.
    let minerals = [
        (301, 53, 16),
        (302, 53, 17),
        (303, 53, 18),
        (304, 53, 19),
        (305, 53, 20),
        (306, 53, 21),
        (307, 53, 22),
        (308, 53, 23),
    ];
    for (id, x, y) in minerals {
        s.insert_unit(rec(id, UnitKind::MineralField, None, x, y));
    }
    for (id, x, y) in [(321, 54, 27), (729, 43, 15), (193, 54, 42), (625, 43, 53)] {
        s.insert_unit(rec(id, UnitKind::VespeneGeyser, None, x, y));
    }

    // Own base.
    let mut nexus = rec(377, UnitKind::Nexus, P1, 47, 22);
    nexus.energy.current = 53;
    s.insert_unit(nexus);
    s.insert_unit(rec(265, UnitKind::Pylon, P1, 48, 18));
    let mut gate = rec(273, UnitKind::Gateway, P1, 43, 19);
    gate.queue = queued(&[UnitKind::Stalker; 4]);
    s.insert_unit(gate);
    let mut pylon = rec(713, UnitKind::Pylon, P1, 41, 19);
    pylon.health.current = 136;
    s.insert_unit(pylon);
    let mut gate = rec(554, UnitKind::Gateway, P1, 40, 15);
    gate.queue = queued(&[UnitKind::Zealot; 2]);
    s.insert_unit(gate);
    s.insert_unit(rec(978, UnitKind::Pylon, P1, 42, 12));
    s.insert_unit(rec(289, UnitKind::CyberneticsCore, P1, 46, 13));
    let mut assimilator = rec(841, UnitKind::Assimilator, P1, 54, 27);
    assimilator.resources = 1890;
    s.insert_unit(assimilator);
    let mut pending = rec(612, UnitKind::Pylon, P1, 43, 25);
    pending.construction = Some(Progress {
        done: 120,
        total: UnitKind::Pylon.def().build_time,
    });
    pending.health.current = 80;
    pending.shield.current = 80;
    s.insert_unit(pending);

    for (i, id) in COLLECTING_PROBES.into_iter().enumerate() {
        let (x, y, node) = if i < 14 {
            let field = i as i32 / 2;
            (52, 16 + field, 301 + field as u32)
        } else {
            (52, 25 + i as i32 - 14, 841)
        };
        let mut p = rec(id, UnitKind::Probe, P1, x, y);
        p.order = Order::Gather { node: UnitId(node) };
        s.insert_unit(p);
    }
    let mut builder = rec(611, UnitKind::Probe, P1, 44, 24);
    builder.order = Order::Construct {
        structure: UnitId(612),
    };
    s.insert_unit(builder);

    // Own army.
    s.insert_unit(rec(399, UnitKind::Stalker, P1, 43, 17));
    s.insert_unit(rec(539, UnitKind::Zealot, P1, 40, 13));
    s.insert_unit(attacking(rec(434, UnitKind::Stalker, P1, 44, 36), 249));
    s.insert_unit(attacking(rec(260, UnitKind::Zealot, P1, 50, 38), 705));
    s.insert_unit(attacking(rec(986, UnitKind::Zealot, P1, 46, 42), 249));
    s.insert_unit(attacking(rec(122, UnitKind::Zealot, P1, 49, 48), 249));
    s.insert_unit(attacking(rec(2, UnitKind::Zealot, P1, 48, 48), 249));

    // Enemy main, partly in sight.
    let mut gate = rec(705, UnitKind::Gateway, P2, 50, 40);
    gate.shield.current = 487;
    s.insert_unit(gate);
    s.insert_unit(rec(561, UnitKind::Assimilator, P2, 54, 42));
    let mut nexus = rec(249, UnitKind::Nexus, P2, 47, 45);
    nexus.shield.current = 136;
    nexus.energy.current = 53;
    s.insert_unit(nexus);
    s.insert_unit(rec(429, UnitKind::Pylon, P2, 40, 50));
    // Out of sight.
    s.insert_unit(rec(880, UnitKind::Pylon, P2, 20, 58));
    for (id, x) in [(881, 12), (882, 13), (883, 14)] {
        s.insert_unit(rec(id, UnitKind::Zealot, P2, x, 58));
    }

    let p = s.player_mut(PlayerId::ONE);
    p.minerals = 175;
    p.vespene = 154;
    let p = s.player_mut(PlayerId::TWO);
    p.minerals = 240;
    p.vespene = 60;
    s.recompute_supply();
    s.update_fog();
    s
}

/// The ten most recent actions of player one in the showcase.
pub fn showcase_history() -> ActionHistory {
    let mut h = ActionHistory::default();
    let actions = [
        ActionRequest::new("GATEWAYTRAIN_STALKER", [273]),
        ActionRequest::new("GATEWAYTRAIN_ZEALOT", [554]),
        ActionRequest::new("ATTACK_ATTACK", [434]).on_unit(418),
        ActionRequest::new("ATTACK_ATTACK", [986]).on_unit(242),
        ActionRequest::new("GATEWAYTRAIN_STALKER", [273]),
        ActionRequest::new("MOVE_MOVE", [2]).at(47, 45),
        ActionRequest::new("GATEWAYTRAIN_STALKER", [273]),
        ActionRequest::new("ATTACK_ATTACK", [434]).on_unit(249),
        ActionRequest::new("ATTACK_ATTACK", [986]).on_unit(249),
        ActionRequest::new("GATEWAYTRAIN_STALKER", [273]),
    ];
    h.extend(&actions);
    h
}
