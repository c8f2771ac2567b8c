//! One simulation tick.

use std::collections::{BTreeMap, BTreeSet};

use super::check::{addon_position, check_action, ActionError, Resolved, Target};
use super::data::{Effect, Faction, Role, UnitKind};
use super::state::{GameState, DROP_OFF_RANGE, GAS_SATURATION, MINERAL_SATURATION};
use super::types::{Event, Order, PlayerId, Pos, Product, QueueItem, UnitId};
use crate::protocol::ActionRequest;

pub const MINERAL_TRIP: u32 = 85;
pub const MINERAL_LOAD: u32 = 5;
pub const GAS_TRIP: u32 = 90;
pub const GAS_LOAD: u32 = 4;
pub const ENERGY_PERIOD: u64 = 20;
pub const SHIELD_DELAY: u64 = 160;
pub const SHIELD_PERIOD: u64 = 8;
pub const LARVA_PERIOD: u32 = 176;
pub const LARVA_NATURAL_CAP: u32 = 3;
pub const LARVA_CAP: u32 = 19;
pub const INJECT_DELAY: u64 = 464;
pub const INJECT_LARVA: u32 = 3;
pub const CHRONO_DURATION: u64 = 320;
/// Reach of workers and melee-range interactions with a footprint.
const CONTACT: f64 = 1.5;

const NEIGHBOURS: [(i32, i32); 8] = [
    (0, -1),
    (1, 0),
    (0, 1),
    (-1, 0),
    (1, -1),
    (1, 1),
    (-1, 1),
    (-1, -1),
];

/// Advance the match by one tick. `actions[0]` belongs to player 1.
/// Returns the events emitted during this tick; they are also appended to
/// the state's event log.
pub fn step(state: &mut GameState, actions: [&[ActionRequest]; 2]) -> Vec<Event> {
    let mut events = Vec::new();
    for p in PlayerId::both() {
        apply_actions(state, p, actions[p.index()], &mut events);
    }
    production(state, &mut events);
    construction(state, &mut events);
    regeneration(state);
    movement_and_combat(state, &mut events);
    collection(state, &mut events);
    state.recompute_supply();
    state.update_fog();
    let tick = state.tick;
    state
        .event_log
        .extend(events.iter().cloned().map(|e| (tick, e)));
    state.tick += 1;
    events
}

fn apply_actions(state: &mut GameState, p: PlayerId, actions: &[ActionRequest], events: &mut Vec<Event>) {
    let mut used = BTreeSet::new();
    for (index, req) in actions.iter().enumerate() {
        let checked = check_action(state, p, req).and_then(|r| {
            if let Some(&u) = r.units.iter().find(|u| used.contains(*u)) {
                return Err(vec![ActionError::DuplicateUnit(u)]);
            }
            let ps = state.player(p);
            if r.minerals > ps.minerals {
                return Err(vec![ActionError::NotEnoughMinerals]);
            }
            if r.vespene > ps.vespene {
                return Err(vec![ActionError::NotEnoughVespene]);
            }
            if r.supply > 0 && ps.supply_used() + ps.supply_pending + r.supply > ps.supply_cap {
                return Err(vec![ActionError::NotEnoughSupply]);
            }
            Ok(r)
        });
        match checked {
            Ok(r) => {
                used.extend(r.units.iter().copied());
                execute(state, p, &r, events);
            }
            Err(errors) => events.push(Event::ActionRejected {
                player: p,
                index,
                action: req.action.clone(),
                reason: errors[0].to_string(),
            }),
        }
    }
}

fn target_pos(state: &GameState, target: Target) -> Option<Pos> {
    match target {
        Target::Point(p) => Some(p),
        Target::Unit(t) => state.unit(t).map(|u| u.pos),
        Target::None => None,
    }
}

fn execute(state: &mut GameState, p: PlayerId, r: &Resolved, events: &mut Vec<Event>) {
    let tick = state.tick;
    if r.minerals > 0 || r.vespene > 0 {
        let ps = state.player_mut(p);
        ps.minerals -= r.minerals;
        ps.vespene -= r.vespene;
        ps.spent_minerals += r.minerals as u64;
        ps.spent_vespene += r.vespene as u64;
        events.push(Event::Cost {
            player: p,
            ability: r.ability.name.clone(),
            minerals: r.minerals,
            vespene: r.vespene,
        });
    }
    match &r.ability.effect {
        Effect::Move => {
            let goal = target_pos(state, r.target).expect("move has a target");
            for &u in &r.units {
                state.unit_mut(u).order = Order::Move { goal };
            }
        }
        Effect::Attack => {
            let order = match r.target {
                Target::Unit(target) => Order::Attack { target },
                Target::Point(goal) => Order::AttackMove { goal, target: None },
                Target::None => unreachable!("attack has a target"),
            };
            for &u in &r.units {
                state.unit_mut(u).order = order.clone();
            }
        }
        Effect::Gather => {
            let Target::Unit(node) = r.target else { unreachable!() };
            for &u in &r.units {
                let w = state.unit_mut(u);
                w.order = Order::Gather { node };
                w.gather_timer = 0;
            }
        }
        Effect::Repair => {
            let Target::Unit(target) = r.target else { unreachable!() };
            for &u in &r.units {
                state.unit_mut(u).order = Order::Repair { target };
            }
        }
        Effect::ChronoBoost => {
            let Target::Unit(target) = r.target else { unreachable!() };
            state.unit_mut(r.units[0]).energy.current -= r.ability.energy;
            state.unit_mut(target).boost_until = tick + CHRONO_DURATION;
        }
        Effect::InjectLarva => {
            let Target::Unit(target) = r.target else { unreachable!() };
            state.unit_mut(r.units[0]).energy.current -= r.ability.energy;
            let h = state.unit_mut(target);
            if h.inject_ready_at.is_none() {
                h.inject_ready_at = Some(tick + INJECT_DELAY);
            }
        }
        Effect::Build(kind) => {
            let worker = r.units[0];
            let pos = match r.geyser {
                Some(g) => state.unit(g).expect("checked geyser").pos,
                None => target_pos(state, r.target).expect("build has a target"),
            };
            let id = state.spawn_construction(*kind, p, pos);
            if let Some(g) = r.geyser {
                let remaining = state.unit(g).map(|g| g.resources).unwrap_or(0);
                state.unit_mut(g).addon = Some(id);
                state.unit_mut(id).resources = remaining;
            }
            events.push(Event::ConstructionStarted {
                id,
                kind: *kind,
                owner: p,
            });
            match state.player(p).faction {
                Faction::Terran => state.unit_mut(worker).order = Order::Construct { structure: id },
                // Drones turn into the structure.
                Faction::Zerg => {
                    state.remove_unit(worker);
                }
                // Probes warp the structure in and carry on.
                Faction::Protoss => {}
            }
        }
        Effect::Train(kind) => {
            for &u in &r.units {
                state.unit_mut(u).queue.push(QueueItem {
                    product: Product::Unit(*kind),
                    progress: 0,
                    total: kind.def().build_time,
                    started: false,
                });
            }
            state.player_mut(p).supply_pending += r.supply;
        }
        Effect::Larva(kind) => {
            for &h in &r.units {
                state.unit_mut(h).larva -= 1;
                let pos = free_cell_near(state, h);
                let egg = state.spawn(UnitKind::Egg, Some(p), pos);
                state.unit_mut(egg).queue.push(QueueItem {
                    product: Product::Unit(*kind),
                    progress: 0,
                    total: kind.def().build_time,
                    started: true,
                });
                let s = kind.def().supply;
                let ps = state.player_mut(p);
                if kind.is_worker() {
                    ps.supply_workers += s;
                } else {
                    ps.supply_army += s;
                }
            }
        }
        Effect::Addon(kind) => {
            for &b in &r.units {
                let pos = addon_position(state.unit(b).expect("checked host"));
                let id = state.spawn_construction(*kind, p, pos);
                state.unit_mut(b).addon = Some(id);
                events.push(Event::ConstructionStarted {
                    id,
                    kind: *kind,
                    owner: p,
                });
            }
        }
        Effect::Research(res) => {
            state.unit_mut(r.units[0]).queue.push(QueueItem {
                product: Product::Research(res.tech.clone()),
                progress: 0,
                total: res.time,
                started: true,
            });
        }
    }
}

/// A free cell next to a unit's footprint, preferring the side facing the
/// map centre.
pub(crate) fn free_cell_near(state: &GameState, id: UnitId) -> Pos {
    let u = state.unit(id).expect("live unit");
    let centre = Pos::new(state.width() / 2, state.height() / 2);
    let r = if u.kind.blocks_cells() { u.radius() } else { 0 };
    for d in (r + 1)..(r + 8) {
        let mut best: Option<(i64, (i32, i32), Pos)> = None;
        for dy in -d..=d {
            for dx in -d..=d {
                if dx.abs() != d && dy.abs() != d {
                    continue;
                }
                let c = Pos::new(u.pos.x + dx, u.pos.y + dy);
                if state.is_blocked(c) {
                    continue;
                }
                let key = (c.dist2(centre), state.oriented(u.owner, c), c);
                if best.is_none_or(|b| key < b) {
                    best = Some(key);
                }
            }
        }
        if let Some((_, _, p)) = best {
            return p;
        }
    }
    state.clamp(u.pos)
}

fn production(state: &mut GameState, events: &mut Vec<Event>) {
    let tick = state.tick;
    let ids: Vec<UnitId> = state
        .units
        .values()
        .filter(|u| !u.queue.is_empty() && u.is_complete())
        .map(|u| u.id)
        .collect();
    for id in ids {
        let u = state.unit(id).expect("live unit");
        let owner = u.owner.expect("producers are owned");
        if u.kind.def().needs_power && !state.is_powered(owner, u.pos) {
            continue;
        }
        let warp = u.kind == UnitKind::Gateway && state.player(owner).tech_flags.contains("WarpGate");
        let boosted = u.boost_until > tick;
        let head = &u.queue[0];
        if !head.started {
            if let Product::Unit(k) = head.product {
                let need = k.def().supply;
                let ps = state.player(owner);
                if need > 0 && ps.supply_used() + need > ps.supply_cap {
                    continue;
                }
                let ps = state.player_mut(owner);
                ps.supply_pending = ps.supply_pending.saturating_sub(need);
                if k.is_worker() {
                    ps.supply_workers += need;
                } else {
                    ps.supply_army += need;
                }
            }
            state.unit_mut(id).queue[0].started = true;
        }
        let mut gain = 1;
        if boosted && tick % 2 == 0 {
            gain += 1;
        }
        if warp && tick % 4 == 0 {
            gain += 1;
        }
        let u = state.unit_mut(id);
        u.queue[0].progress += gain;
        if u.queue[0].progress < u.queue[0].total {
            continue;
        }
        let done = u.queue.remove(0);
        match done.product {
            Product::Unit(kind) => {
                if u.kind == UnitKind::Egg {
                    let pos = u.pos;
                    state.remove_unit(id);
                    let nu = state.spawn(kind, Some(owner), pos);
                    events.push(Event::UnitSpawned { id: nu, kind, owner });
                } else {
                    let pos = free_cell_near(state, id);
                    let nu = state.spawn(kind, Some(owner), pos);
                    events.push(Event::UnitSpawned { id: nu, kind, owner });
                }
            }
            Product::Research(tech) => {
                state.player_mut(owner).tech_flags.insert(tech.clone());
                events.push(Event::ResearchComplete {
                    player: owner,
                    tech,
                });
            }
        }
    }
}

fn construction(state: &mut GameState, events: &mut Vec<Event>) {
    let sites: Vec<UnitId> = state
        .units
        .values()
        .filter(|u| u.construction.is_some())
        .map(|u| u.id)
        .collect();
    for id in sites {
        let site = state.unit(id).expect("live unit");
        let def = site.kind.def();
        if def.faction == Some(Faction::Terran) && !def.addon {
            let attended = state.units.values().any(|w| {
                w.order == Order::Construct { structure: id } && site.distance_from(w.pos) <= CONTACT
            });
            if !attended {
                continue;
            }
        }
        let owner = site.owner.expect("structures are owned");
        let kind = site.kind;
        let u = state.unit_mut(id);
        let mut prog = u.construction.expect("filtered");
        prog.done += 1;
        let max = u.health.max;
        let base = max / 10;
        let before = base + (max - base) * (prog.done - 1) / prog.total;
        let after = base + (max - base) * prog.done / prog.total;
        u.health.add(after - before);
        let smax = u.shield.max;
        let sbase = smax / 10;
        let sb = sbase + (smax - sbase) * (prog.done - 1) / prog.total;
        let sa = sbase + (smax - sbase) * prog.done / prog.total;
        u.shield.add(sa - sb);
        if prog.done < prog.total {
            u.construction = Some(prog);
            continue;
        }
        u.construction = None;
        if kind == UnitKind::Hatchery {
            u.larva = 1;
        }
        events.push(Event::ConstructionComplete { id, kind, owner });
        for w in state.units.values_mut() {
            if w.order == (Order::Construct { structure: id }) {
                w.order = Order::Idle;
            }
        }
    }
}

fn regeneration(state: &mut GameState) {
    let tick = state.tick;
    for u in state.units.values_mut() {
        if !u.is_complete() {
            continue;
        }
        if u.energy.max > 0 && tick % ENERGY_PERIOD == 0 {
            u.energy.add(1);
        }
        if u.shield.current < u.shield.max
            && tick % SHIELD_PERIOD == 0
            && u.last_damaged.is_none_or(|t| tick >= t + SHIELD_DELAY)
        {
            u.shield.add(1);
        }
        if u.kind == UnitKind::Hatchery {
            if u.larva < LARVA_NATURAL_CAP {
                u.larva_timer += 1;
                if u.larva_timer >= LARVA_PERIOD {
                    u.larva += 1;
                    u.larva_timer = 0;
                }
            } else {
                u.larva_timer = 0;
            }
            if u.inject_ready_at.is_some_and(|t| t <= tick) {
                u.larva = (u.larva + INJECT_LARVA).min(LARVA_CAP);
                u.inject_ready_at = None;
            }
        }
    }
}

/// Enemy candidates seen by one player this tick.
#[derive(Clone, Copy)]
struct Contact {
    id: UnitId,
    armed: bool,
    structure: bool,
    durability: u32,
}

fn contacts_of(state: &GameState, viewer: PlayerId) -> Vec<Contact> {
    state
        .units
        .values()
        .filter(|u| u.owner == Some(viewer.opponent()) && state.is_visible_to(viewer, u))
        .map(|u| Contact {
            id: u.id,
            armed: u.kind.def().weapon.is_some(),
            structure: u.kind.is_structure(),
            durability: u.health.current + u.shield.current,
        })
        .collect()
}

/// Lowest-durability enemy in weapon range, ties by lowest id.
fn target_in_range(state: &GameState, from: Pos, range: f64, contacts: &[Contact]) -> Option<UnitId> {
    contacts
        .iter()
        .filter(|c| state.unit(c.id).is_some_and(|t| t.distance_from(from) <= range))
        .min_by_key(|c| (c.durability, c.id))
        .map(|c| c.id)
}

/// Enemy to engage while attack-moving: armed units, then other units, then
/// structures; nearest first; ties by lowest id.
fn acquire(state: &GameState, from: Pos, sight: f64, contacts: &[Contact]) -> Option<UnitId> {
    contacts
        .iter()
        .filter_map(|c| {
            let t = state.unit(c.id)?;
            let d = t.distance_from(from);
            (d <= sight).then(|| {
                let class = if c.structure { 2 } else if c.armed { 0 } else { 1 };
                (class, (d * 1000.0) as i64, c.id)
            })
        })
        .min()
        .map(|(_, _, id)| id)
}

fn step_toward(state: &mut GameState, id: UnitId, goal: Pos) {
    let u = state.unit(id).expect("live unit");
    let period = u.kind.def().move_period;
    if period == 0 || u.pos == goal {
        return;
    }
    let from = u.pos;
    let prev = u.prev_pos;
    let from_blocked = state.is_blocked(from);
    let flip = if u.owner == Some(PlayerId::TWO) { -1 } else { 1 };
    let mut best: Option<(i64, Pos)> = None;
    for (dx, dy) in NEIGHBOURS.map(|(x, y)| (x * flip, y * flip)) {
        let c = Pos::new(from.x + dx, from.y + dy);
        if !state.in_bounds(c) || Some(c) == prev {
            continue;
        }
        if state.is_blocked(c) && !from_blocked {
            continue;
        }
        let d = c.dist2(goal);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, c));
        }
    }
    let u = state.unit_mut(id);
    u.move_timer += 1;
    if u.move_timer < period {
        return;
    }
    u.move_timer = 0;
    if let Some((_, c)) = best {
        u.prev_pos = Some(from);
        u.pos = c;
    }
}

fn arrived(state: &GameState, pos: Pos, goal: Pos) -> bool {
    if pos == goal {
        return true;
    }
    match state.blocker_at(goal).and_then(|b| state.unit(b)) {
        Some(b) => b.distance_from(pos) <= CONTACT,
        None => false,
    }
}

fn movement_and_combat(state: &mut GameState, events: &mut Vec<Event>) {
    let tick = state.tick;
    let contacts = [
        contacts_of(state, PlayerId::ONE),
        contacts_of(state, PlayerId::TWO),
    ];
    let mobile: Vec<UnitId> = state
        .units
        .values()
        .filter(|u| u.owner.is_some() && !u.kind.blocks_cells() && u.kind.role() != Role::Egg)
        .map(|u| u.id)
        .collect();
    let mut shots: Vec<(UnitId, u32)> = Vec::new();

    for id in mobile {
        let u = state.unit_mut(id);
        u.weapon_cooldown = u.weapon_cooldown.saturating_sub(1);
        let u = state.unit(id).expect("live unit");
        let owner = u.owner.expect("filtered");
        let seen = &contacts[owner.index()];
        let weapon = u.kind.def().weapon;
        let sight = u.kind.def().sight as f64;
        let pos = u.pos;
        let ready = u.weapon_cooldown == 0;
        let mut fire_at = None;
        let mut new_order = None;
        let visible = |t: UnitId| seen.iter().any(|c| c.id == t);

        match u.order.clone() {
            Order::Idle => {
                if let Some(w) = weapon {
                    fire_at = target_in_range(state, pos, w.range, seen);
                }
            }
            Order::Move { goal } => {
                if arrived(state, pos, goal) {
                    new_order = Some(Order::Idle);
                } else {
                    step_toward(state, id, goal);
                }
            }
            Order::Attack { target } => match (weapon, state.unit(target)) {
                (Some(w), Some(t)) if visible(target) => {
                    if t.distance_from(pos) <= w.range {
                        fire_at = Some(target);
                    } else {
                        let goal = t.pos;
                        step_toward(state, id, goal);
                    }
                }
                _ => new_order = Some(Order::Idle),
            },
            Order::AttackMove { goal, target } => {
                let w = weapon.expect("attack users are armed");
                let current = target.filter(|&t| visible(t) && state.unit(t).is_some());
                let engaged = current.or_else(|| acquire(state, pos, sight, seen));
                if engaged != target {
                    new_order = Some(Order::AttackMove {
                        goal,
                        target: engaged,
                    });
                }
                match engaged.and_then(|t| state.unit(t)) {
                    Some(t) if t.distance_from(pos) <= w.range => {
                        fire_at = Some(t.id);
                    }
                    Some(t) => {
                        // Prefer anything already in range over walking.
                        if let Some(near) = target_in_range(state, pos, w.range, seen) {
                            fire_at = Some(near);
                        } else {
                            let tp = t.pos;
                            step_toward(state, id, tp);
                        }
                    }
                    None => {
                        if arrived(state, pos, goal) {
                            new_order = Some(Order::Idle);
                        } else {
                            step_toward(state, id, goal);
                        }
                    }
                }
            }
            Order::Gather { node } => match state.unit(node) {
                Some(n) if n.distance_from(pos) > CONTACT => {
                    let np = n.pos;
                    step_toward(state, id, np);
                }
                Some(_) => {}
                None => new_order = Some(Order::Idle),
            },
            Order::Construct { structure } => match state.unit(structure) {
                Some(s) if !s.is_complete() => {
                    if s.distance_from(pos) > CONTACT {
                        let sp = s.pos;
                        step_toward(state, id, sp);
                    }
                }
                _ => new_order = Some(Order::Idle),
            },
            Order::Repair { target } => match state.unit(target) {
                Some(t) if t.owner == Some(owner) && t.health.current < t.health.max => {
                    if t.distance_from(pos) > CONTACT {
                        let tp = t.pos;
                        step_toward(state, id, tp);
                    } else {
                        let def = t.kind.def();
                        let rate = def.health.div_ceil(def.build_time.max(1));
                        state.unit_mut(target).health.add(rate);
                    }
                }
                _ => new_order = Some(Order::Idle),
            },
        }

        if let (Some(t), Some(w)) = (fire_at, weapon) {
            if ready {
                shots.push((t, w.damage));
                state.unit_mut(id).weapon_cooldown = w.cooldown;
            }
        }
        if let Some(o) = new_order {
            state.unit_mut(id).order = o;
        }
    }

    // Damage is applied only after every unit has chosen its shot.
    for (target, damage) in shots {
        let Some(t) = state.units.get_mut(&target) else { continue };
        let absorbed = damage.min(t.shield.current);
        t.shield.current -= absorbed;
        t.health.current = t.health.current.saturating_sub(damage - absorbed);
        t.last_damaged = Some(tick);
    }
    let dead: Vec<UnitId> = state
        .units
        .values()
        .filter(|u| u.owner.is_some() && u.health.current == 0)
        .map(|u| u.id)
        .collect();
    for id in dead {
        destroy(state, id, events);
    }
}

fn destroy(state: &mut GameState, id: UnitId, events: &mut Vec<Event>) {
    let Some(rec) = state.remove_unit(id) else { return };
    for u in state.units.values_mut() {
        if u.addon == Some(id) {
            u.addon = None;
        }
    }
    events.push(Event::UnitDestroyed {
        id,
        kind: rec.kind,
        owner: rec.owner,
    });
}

fn collection(state: &mut GameState, events: &mut Vec<Event>) {
    let mut at_node: BTreeMap<UnitId, Vec<UnitId>> = BTreeMap::new();
    for u in state.units.values() {
        if let Order::Gather { node } = u.order {
            if state.unit(node).is_some_and(|n| n.distance_from(u.pos) <= CONTACT) {
                at_node.entry(node).or_default().push(u.id);
            }
        }
    }
    for (node, workers) in at_node {
        let n = state.unit(node).expect("checked above");
        let mineral = n.kind == UnitKind::MineralField;
        let (cap, trip, load) = if mineral {
            (MINERAL_SATURATION, MINERAL_TRIP, MINERAL_LOAD)
        } else {
            (GAS_SATURATION, GAS_TRIP, GAS_LOAD)
        };
        let node_pos = n.pos;
        let gas_ready = !mineral && n.is_complete();
        for w in workers.into_iter().take(cap) {
            let owner = state.unit(w).and_then(|u| u.owner).expect("workers are owned");
            if !mineral && (!gas_ready || state.unit(node).and_then(|n| n.owner) != Some(owner)) {
                continue;
            }
            let has_drop_off = state.own_units(owner).any(|h| {
                h.kind.def().headquarters && h.is_complete() && h.pos.dist(node_pos) <= DROP_OFF_RANGE
            });
            if !has_drop_off {
                continue;
            }
            let wu = state.unit_mut(w);
            wu.gather_timer += 1;
            if wu.gather_timer < trip {
                continue;
            }
            wu.gather_timer = 0;
            let n = state.unit_mut(node);
            let amount = load.min(n.resources);
            n.resources -= amount;
            let ps = state.player_mut(owner);
            if mineral {
                ps.minerals += amount;
                ps.collected_minerals += amount as u64;
            } else {
                ps.vespene += amount;
                ps.collected_vespene += amount as u64;
            }
        }
        if mineral && state.unit(node).is_some_and(|n| n.resources == 0) {
            state.remove_unit(node);
            events.push(Event::ResourceDepleted { id: node });
        }
    }
}
