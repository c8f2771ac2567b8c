//! Scripted play: the built-in opponent at seven difficulty levels and the
//! automatic worker/combat housekeeping shared with model-driven agents.
//!
//! The built-in policy reads the full state (it knows where enemy
//! structures are, as the stock game AI knows start locations) but only
//! reacts to enemy units its own units can see.

use std::collections::{BTreeMap, BTreeSet};

use super::check::structure_cells;
use super::data::{catalog, Faction, UnitKind};
use super::state::{GameState, DROP_OFF_RANGE, GAS_SATURATION, MINERAL_SATURATION};
use super::types::{Order, PlayerId, Pos, Product, UnitId, UnitRecord};
use crate::protocol::ActionRequest;

/// Tuning knobs of one difficulty level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelParams {
    pub level: u8,
    /// Worker count to reach per headquarters.
    pub workers: u32,
    /// Production structures to own.
    pub production: u32,
    /// Army supply at which the army attacks.
    pub attack_supply: u32,
    /// Ticks between decisions.
    pub period: u64,
    /// Gas structures to build.
    pub gas: u32,
    /// Focus fire on the weakest enemy in range.
    pub focus_fire: bool,
    /// Take the natural expansion.
    pub expand: bool,
    /// Build the tech structure and switch to the advanced unit.
    pub tech: bool,
    /// Use Chrono Boost / Queens with injects.
    pub boost: bool,
}

pub const LEVELS: [LevelParams; 7] = [
    LevelParams { level: 1, workers: 13, production: 1, attack_supply: 40, period: 64, gas: 0, focus_fire: false, expand: false, tech: false, boost: false },
    LevelParams { level: 2, workers: 14, production: 1, attack_supply: 32, period: 48, gas: 0, focus_fire: false, expand: false, tech: false, boost: false },
    LevelParams { level: 3, workers: 16, production: 2, attack_supply: 26, period: 32, gas: 0, focus_fire: false, expand: false, tech: false, boost: false },
    LevelParams { level: 4, workers: 18, production: 2, attack_supply: 22, period: 24, gas: 1, focus_fire: false, expand: false, tech: true, boost: true },
    LevelParams { level: 5, workers: 20, production: 3, attack_supply: 20, period: 16, gas: 1, focus_fire: true, expand: true, tech: true, boost: true },
    LevelParams { level: 6, workers: 20, production: 3, attack_supply: 18, period: 8, gas: 2, focus_fire: true, expand: true, tech: true, boost: true },
    LevelParams { level: 7, workers: 20, production: 4, attack_supply: 18, period: 4, gas: 2, focus_fire: true, expand: true, tech: true, boost: true },
];

pub fn level_params(level: u8) -> &'static LevelParams {
    &LEVELS[(level.clamp(1, 7) - 1) as usize]
}

struct Roster {
    worker: &'static str,
    supply: &'static str,
    gas: &'static str,
    headquarters: &'static str,
    production: Option<(&'static str, UnitKind)>,
    tech: (&'static str, UnitKind),
    basic: &'static str,
    advanced: &'static str,
}

fn roster(f: Faction) -> Roster {
    match f {
        Faction::Terran => Roster {
            worker: "COMMANDCENTERTRAIN_SCV",
            supply: "TERRANBUILD_SUPPLYDEPOT",
            gas: "TERRANBUILD_REFINERY",
            headquarters: "TERRANBUILD_COMMANDCENTER",
            production: Some(("TERRANBUILD_BARRACKS", UnitKind::Barracks)),
            tech: ("BUILD_TECHLAB_BARRACKS", UnitKind::BarracksTechLab),
            basic: "BARRACKSTRAIN_MARINE",
            advanced: "BARRACKSTRAIN_MARAUDER",
        },
        Faction::Zerg => Roster {
            worker: "LARVATRAIN_DRONE",
            supply: "LARVATRAIN_OVERLORD",
            gas: "ZERGBUILD_EXTRACTOR",
            headquarters: "ZERGBUILD_HATCHERY",
            production: None,
            tech: ("ZERGBUILD_ROACHWARREN", UnitKind::RoachWarren),
            basic: "LARVATRAIN_ZERGLING",
            advanced: "LARVATRAIN_ROACH",
        },
        Faction::Protoss => Roster {
            worker: "NEXUSTRAIN_PROBE",
            supply: "PROTOSSBUILD_PYLON",
            gas: "PROTOSSBUILD_ASSIMILATOR",
            headquarters: "PROTOSSBUILD_NEXUS",
            production: Some(("PROTOSSBUILD_GATEWAY", UnitKind::Gateway)),
            tech: ("PROTOSSBUILD_CYBERNETICSCORE", UnitKind::CyberneticsCore),
            basic: "GATEWAYTRAIN_ZEALOT",
            advanced: "GATEWAYTRAIN_STALKER",
        },
    }
}

fn cost(ability: &str) -> (u32, u32, u32) {
    let a = catalog().ability(ability).expect("roster abilities exist");
    (a.cost_minerals(), a.cost_vespene(), a.supply_delta())
}

/// Working set for one decision: remaining budget and units already used.
struct Ctx<'a> {
    state: &'a GameState,
    player: PlayerId,
    minerals: u32,
    vespene: u32,
    supply_free: u32,
    used: BTreeSet<UnitId>,
    reserved: BTreeSet<Pos>,
    out: Vec<ActionRequest>,
}

impl<'a> Ctx<'a> {
    fn new(state: &'a GameState, player: PlayerId) -> Self {
        let ps = state.player(player);
        Ctx {
            state,
            player,
            minerals: ps.minerals,
            vespene: ps.vespene,
            supply_free: ps.supply_cap.saturating_sub(ps.supply_used() + ps.supply_pending),
            used: BTreeSet::new(),
            reserved: BTreeSet::new(),
            out: Vec::new(),
        }
    }

    fn own(&self) -> impl Iterator<Item = &'a UnitRecord> + 'a {
        self.state.own_units(self.player)
    }

    fn afford(&self, ability: &str) -> bool {
        let (m, v, s) = cost(ability);
        self.minerals >= m && self.vespene >= v && (s == 0 || self.supply_free >= s)
    }

    fn spend(&mut self, ability: &str) {
        let (m, v, s) = cost(ability);
        self.minerals -= m;
        self.vespene -= v;
        self.supply_free -= s;
    }

    fn push(&mut self, req: ActionRequest) {
        self.used.extend(req.units.iter().map(|&u| UnitId(u)));
        self.out.push(req);
    }

    fn free(&self, id: UnitId) -> bool {
        !self.used.contains(&id)
    }

    /// A worker that is gathering minerals, lowest id first.
    fn builder(&self) -> Option<UnitId> {
        let state = self.state;
        self.own()
            .filter(|u| u.kind.is_worker() && self.free(u.id))
            .filter(|u| match u.order {
                Order::Gather { node } => state.unit(node).is_some_and(|n| n.kind == UnitKind::MineralField),
                Order::Idle => true,
                _ => false,
            })
            .map(|u| u.id)
            .min()
    }

    fn count_kind(&self, kind: UnitKind) -> u32 {
        self.own().filter(|u| u.kind == kind).count() as u32
    }

    fn queued(&self, kind: UnitKind) -> u32 {
        self.own()
            .flat_map(|u| u.queue.iter())
            .filter(|q| q.product == Product::Unit(kind))
            .count() as u32
    }

    fn base_anchor(&self) -> Option<Pos> {
        let hq = self.state.primary_headquarters(self.player)?;
        let c = Pos::new(self.state.width() / 2, self.state.height() / 2);
        let dx = (c.x - hq.pos.x).signum();
        let dy = (c.y - hq.pos.y).signum();
        Some(Pos::new(hq.pos.x + dx * 6, hq.pos.y + dy * 6))
    }

    /// Nearest free site around `anchor` for a `kind` structure, keeping a
    /// one-cell lane around every footprint and staying off mining lines.
    fn find_site(&self, kind: UnitKind, anchor: Pos) -> Option<Pos> {
        let state = self.state;
        let r = kind.def().radius;
        let nodes: Vec<Pos> = state
            .units
            .values()
            .filter(|u| u.kind.is_resource())
            .map(|u| u.pos)
            .collect();
        let mut candidates = Vec::new();
        for dy in -10..=10 {
            for dx in -10..=10 {
                let p = Pos::new(anchor.x + dx, anchor.y + dy);
                candidates.push((p.dist2(anchor), state.oriented(Some(self.player), p), p));
            }
        }
        candidates.sort();
        candidates.into_iter().map(|(_, _, p)| p).find(|&p| {
            let lane = (-(r + 1)..=(r + 1)).flat_map(|oy| (-(r + 1)..=(r + 1)).map(move |ox| Pos::new(p.x + ox, p.y + oy)));
            let clear = lane.clone().all(|c| state.in_bounds(c) && !state.is_blocked(c) && !self.reserved.contains(&c));
            clear
                && nodes.iter().all(|n| n.dist2(p) > 16)
                && (!kind.def().needs_power || state.is_powered(self.player, p))
                // Leave room for a Barracks add-on.
                && (kind != UnitKind::Barracks || state.in_bounds(Pos::new(p.x + 3, p.y)))
        })
    }

    fn build_at(&mut self, ability: &str, kind: UnitKind, anchor: Pos) -> bool {
        if !self.afford(ability) {
            return false;
        }
        let Some(worker) = self.builder() else { return false };
        let Some(site) = self.find_site(kind, anchor) else { return false };
        let r = kind.def().radius + 1;
        for oy in -r..=r {
            for ox in -r..=r {
                self.reserved.insert(Pos::new(site.x + ox, site.y + oy));
            }
        }
        self.spend(ability);
        self.push(ActionRequest::new(ability, [worker.0]).at(site.x, site.y));
        true
    }
}

/// Nodes an idle worker can be sent to, with current assignment counts.
struct NodeBook {
    minerals: Vec<(UnitId, Pos, usize)>,
    gas: Vec<(UnitId, Pos, usize)>,
}

fn node_book(state: &GameState, player: PlayerId) -> NodeBook {
    let mut assigned: BTreeMap<UnitId, usize> = BTreeMap::new();
    for u in state.own_units(player) {
        if let Order::Gather { node } = u.order {
            *assigned.entry(node).or_default() += 1;
        }
    }
    let hqs: Vec<Pos> = state
        .own_units(player)
        .filter(|u| u.kind.def().headquarters && u.is_complete())
        .map(|u| u.pos)
        .collect();
    let near_hq = |p: Pos| hqs.iter().any(|h| h.dist(p) <= DROP_OFF_RANGE);
    let mut book = NodeBook {
        minerals: Vec::new(),
        gas: Vec::new(),
    };
    for u in state.units.values() {
        let n = assigned.get(&u.id).copied().unwrap_or(0);
        if u.kind == UnitKind::MineralField && near_hq(u.pos) {
            book.minerals.push((u.id, u.pos, n));
        } else if u.owner == Some(player) && u.kind.def().extractor && u.is_complete() && u.resources > 0 && near_hq(u.pos) {
            book.gas.push((u.id, u.pos, n));
        }
    }
    book
}

fn assign_idle_workers(ctx: &mut Ctx<'_>) {
    let state = ctx.state;
    let mut book = node_book(state, ctx.player);
    let idle: Vec<&UnitRecord> = ctx
        .own()
        .filter(|u| u.kind.is_worker() && u.order == Order::Idle && ctx.free(u.id))
        .collect();
    let ps = state.player(ctx.player);
    let mut batches: BTreeMap<UnitId, Vec<u32>> = BTreeMap::new();
    for w in idle {
        let open_min = book.minerals.iter_mut().filter(|n| n.2 < MINERAL_SATURATION);
        let best_min = open_min.min_by_key(|n| (n.1.dist2(w.pos), n.0)).map(|n| n.0);
        let best_gas = book
            .gas
            .iter()
            .filter(|n| n.2 < GAS_SATURATION)
            .min_by_key(|n| (n.1.dist2(w.pos), n.0))
            .map(|n| n.0);
        let want_gas = ps.vespene * 2 < ps.minerals || best_min.is_none();
        let pick = match (best_min, best_gas) {
            (_, Some(g)) if want_gas => Some(g),
            (Some(m), _) => Some(m),
            (None, g) => g,
        };
        let Some(node) = pick else { continue };
        for n in book.minerals.iter_mut().chain(book.gas.iter_mut()) {
            if n.0 == node {
                n.2 += 1;
            }
        }
        batches.entry(node).or_default().push(w.id.0);
    }
    for (node, units) in batches {
        ctx.push(ActionRequest::new("HARVEST_GATHER", units).on_unit(node.0));
    }
}

/// Enemy units visible to `player`.
fn visible_enemies<'a>(state: &'a GameState, player: PlayerId) -> Vec<&'a UnitRecord> {
    state
        .units
        .values()
        .filter(|u| u.owner == Some(player.opponent()) && state.is_visible_to(player, u))
        .collect()
}

fn durability(u: &UnitRecord) -> u32 {
    u.health.current + u.shield.current
}

fn idle_combat_attacks(ctx: &mut Ctx<'_>) {
    let state = ctx.state;
    let enemies = visible_enemies(state, ctx.player);
    if enemies.is_empty() {
        return;
    }
    let mut by_target: BTreeMap<UnitId, Vec<u32>> = BTreeMap::new();
    for u in ctx.own() {
        if u.order != Order::Idle || !ctx.free(u.id) || u.kind.def().weapon.is_none() || u.kind.is_structure() {
            continue;
        }
        let sight = u.kind.def().sight as f64;
        let target = enemies
            .iter()
            .filter(|e| e.distance_from(u.pos) <= sight)
            .min_by_key(|e| (durability(e), e.id));
        if let Some(t) = target {
            by_target.entry(t.id).or_default().push(u.id.0);
        }
    }
    for (t, units) in by_target {
        ctx.push(ActionRequest::new("ATTACK_ATTACK", units).on_unit(t.0));
    }
}

/// Housekeeping run for every agent: idle workers go to the nearest
/// under-saturated resource node, and idle armed units in contact attack
/// the weakest visible enemy.
pub fn auto_micro(state: &GameState, player: PlayerId) -> Vec<ActionRequest> {
    let mut ctx = Ctx::new(state, player);
    assign_idle_workers(&mut ctx);
    idle_combat_attacks(&mut ctx);
    ctx.out
}

/// Scripted opponent. Deterministic given the state; build-order variety
/// comes from the per-player variant drawn from the match rng.
pub fn builtin_policy(state: &GameState, player: PlayerId, level: u8) -> Vec<ActionRequest> {
    if state.tick % level_params(level).period != 0 {
        return Vec::new();
    }
    policy_round(state, player, level)
}

/// One round of the scripted opponent regardless of its own cadence.
pub fn policy_round(state: &GameState, player: PlayerId, level: u8) -> Vec<ActionRequest> {
    let params = level_params(level);
    let mut ctx = Ctx::new(state, player);
    if state.primary_headquarters(player).is_none() {
        army(&mut ctx, params);
        return ctx.out;
    }
    assign_idle_workers(&mut ctx);
    staff_gas(&mut ctx);
    economy(&mut ctx, params);
    army(&mut ctx, params);
    ctx.out
}

fn staff_gas(ctx: &mut Ctx<'_>) {
    let book = node_book(ctx.state, ctx.player);
    for (gas, pos, n) in book.gas {
        for _ in n..GAS_SATURATION {
            let Some(w) = ctx
                .own()
                .filter(|u| u.kind.is_worker() && ctx.free(u.id))
                .filter(|u| matches!(u.order, Order::Gather { node } if ctx.state.unit(node).is_some_and(|n| n.kind == UnitKind::MineralField)))
                .min_by_key(|u| (u.pos.dist2(pos), u.id))
                .map(|u| u.id)
            else {
                return;
            };
            ctx.push(ActionRequest::new("HARVEST_GATHER", [w.0]).on_unit(gas.0));
        }
    }
}

fn economy(ctx: &mut Ctx<'_>, params: &LevelParams) {
    let state = ctx.state;
    let player = ctx.player;
    let faction = state.player(player).faction;
    let r = roster(faction);
    let variant = state.player(player).build_variant;
    let Some(anchor) = ctx.base_anchor() else { return };
    let hqs: Vec<&UnitRecord> = ctx.own().filter(|u| u.kind.def().headquarters).collect();
    let worker_kind = faction.worker();
    let workers = ctx.count_kind(worker_kind) + ctx.queued(worker_kind);
    let worker_goal = params.workers * hqs.len() as u32 + variant;
    let ps = state.player(player);

    // Supply first: a blocked player cannot do anything else.
    let provider = faction.supply_provider();
    let providers_pending = ctx.own().filter(|u| u.kind == provider && !u.is_complete()).count() as u32
        + ctx.queued(provider);
    let production_count = match r.production {
        Some((_, k)) => ctx.count_kind(k),
        None => hqs.len() as u32,
    };
    let buffer = 2 + 2 * production_count + hqs.len() as u32;
    let headroom = ps.supply_cap.saturating_sub(ps.supply_used() + ps.supply_pending) + 8 * providers_pending;
    let needs_supply = ps.supply_cap + 8 * providers_pending < 200 && headroom < buffer;
    if needs_supply && providers_pending < 1 + production_count / 3 {
        if faction == Faction::Zerg {
            if let Some(h) = hqs.iter().find(|h| h.is_complete() && h.larva > 0 && ctx.free(h.id)) {
                if ctx.afford(r.supply) {
                    ctx.spend(r.supply);
                    ctx.push(ActionRequest::new(r.supply, [h.id.0]));
                } else {
                    return;
                }
            }
        } else if !ctx.build_at(r.supply, provider, anchor) {
            return;
        }
    }

    // Workers.
    let mut made = workers;
    for h in &hqs {
        if made >= worker_goal || !h.is_complete() || !ctx.free(h.id) {
            continue;
        }
        let ready = if faction == Faction::Zerg { h.larva > 0 } else { h.queue.len() < 2 };
        if ready && ctx.afford(r.worker) {
            ctx.spend(r.worker);
            ctx.push(ActionRequest::new(r.worker, [h.id.0]));
            made += 1;
        }
    }
    let saturated = workers + 2 >= worker_goal.min(params.workers);

    // Build order: production, gas, tech, expansion. The variant rotates
    // which of the first two comes first.
    let mut steps: Vec<u8> = vec![0, 1, 2, 3];
    if variant == 1 {
        steps.swap(0, 1);
    }
    for step in steps {
        let saved = match step {
            0 => production_step(ctx, params, &r, anchor),
            1 => gas_step(ctx, params, &r, faction),
            2 => tech_step(ctx, params, &r, anchor),
            _ => expand_step(ctx, params, &r, saturated),
        };
        if saved {
            // Keep minerals for the pending structure.
            return;
        }
    }

    if params.boost {
        boosts(ctx, faction);
    }
}

/// Each step returns true when it wants the remaining minerals saved.
fn production_step(ctx: &mut Ctx<'_>, params: &LevelParams, r: &Roster, anchor: Pos) -> bool {
    let faction = ctx.state.player(ctx.player).faction;
    match r.production {
        Some((ability, kind)) => {
            let have = ctx.count_kind(kind);
            if have >= params.production {
                return false;
            }
            if faction == Faction::Protoss && !ctx.state.has_completed(ctx.player, UnitKind::Pylon) {
                return false;
            }
            if faction == Faction::Terran && !ctx.state.has_completed(ctx.player, UnitKind::SupplyDepot) {
                return false;
            }
            let anchor = if faction == Faction::Protoss {
                ctx.own()
                    .filter(|u| u.kind == UnitKind::Pylon && u.is_complete())
                    .map(|u| u.pos)
                    .min_by_key(|p| p.dist2(anchor))
                    .unwrap_or(anchor)
            } else {
                anchor
            };
            !ctx.build_at(ability, kind, anchor) && have == 0
        }
        None => {
            // Zerg: one Spawning Pool, extra Hatcheries act as production.
            if ctx.count_kind(UnitKind::SpawningPool) == 0 {
                return !ctx.build_at("ZERGBUILD_SPAWNINGPOOL", UnitKind::SpawningPool, anchor);
            }
            let hatcheries = ctx.count_kind(UnitKind::Hatchery);
            if hatcheries < params.production.div_ceil(2) && ctx.minerals >= 300 + 50 {
                ctx.build_at("ZERGBUILD_HATCHERY", UnitKind::Hatchery, anchor);
            }
            false
        }
    }
}

fn gas_step(ctx: &mut Ctx<'_>, params: &LevelParams, r: &Roster, faction: Faction) -> bool {
    let extractor = faction.extractor();
    let have = ctx.count_kind(extractor);
    let prod_ready = match r.production {
        Some((_, k)) => ctx.count_kind(k) > 0,
        None => ctx.count_kind(UnitKind::SpawningPool) > 0,
    };
    if have >= params.gas || !prod_ready || !ctx.afford(r.gas) {
        return false;
    }
    let Some(hq) = ctx.state.primary_headquarters(ctx.player) else { return false };
    let hq_pos = hq.pos;
    let geyser = ctx
        .state
        .units
        .values()
        .filter(|u| u.kind == UnitKind::VespeneGeyser && u.addon.is_none() && u.pos.dist(hq_pos) <= DROP_OFF_RANGE)
        .min_by_key(|u| (u.pos.dist2(hq_pos), u.id))
        .map(|u| u.id);
    let (Some(g), Some(w)) = (geyser, ctx.builder()) else { return false };
    ctx.spend(r.gas);
    ctx.push(ActionRequest::new(r.gas, [w.0]).on_unit(g.0));
    false
}

fn tech_step(ctx: &mut Ctx<'_>, params: &LevelParams, r: &Roster, anchor: Pos) -> bool {
    if !params.tech || ctx.count_kind(ctx.state.player(ctx.player).faction.extractor()) == 0 {
        return false;
    }
    let (ability, kind) = r.tech;
    let state = ctx.state;
    match kind {
        UnitKind::BarracksTechLab => {
            let hosts: Vec<UnitId> = ctx
                .own()
                .filter(|u| u.kind == UnitKind::Barracks && u.is_complete() && u.addon.is_none() && u.queue.is_empty())
                .filter(|u| !state.is_blocked(Pos::new(u.pos.x + 2, u.pos.y)))
                .map(|u| u.id)
                .collect();
            for h in hosts {
                if ctx.free(h) && ctx.afford(ability) {
                    ctx.spend(ability);
                    ctx.push(ActionRequest::new(ability, [h.0]));
                }
            }
            false
        }
        _ => {
            if ctx.count_kind(kind) > 0 {
                if kind == UnitKind::CyberneticsCore && params.level >= 7 {
                    let core = ctx.own().find(|u| u.kind == kind && u.is_complete() && u.queue.is_empty()).map(|u| u.id);
                    let done = state.player(ctx.player).tech_flags.contains("WarpGate");
                    if let (Some(c), false) = (core, done) {
                        if ctx.afford("RESEARCH_WARPGATE") && ctx.free(c) {
                            ctx.spend("RESEARCH_WARPGATE");
                            ctx.push(ActionRequest::new("RESEARCH_WARPGATE", [c.0]));
                        }
                    }
                }
                return false;
            }
            let prereq_ok = match kind {
                UnitKind::CyberneticsCore => state.has_completed(ctx.player, UnitKind::Gateway),
                UnitKind::RoachWarren => state.has_completed(ctx.player, UnitKind::SpawningPool),
                _ => true,
            };
            if !prereq_ok {
                return false;
            }
            let anchor = if kind.def().needs_power {
                ctx.own()
                    .filter(|u| u.kind == UnitKind::Pylon && u.is_complete())
                    .map(|u| u.pos)
                    .min_by_key(|p| p.dist2(anchor))
                    .unwrap_or(anchor)
            } else {
                anchor
            };
            ctx.build_at(ability, kind, anchor);
            false
        }
    }
}

fn expand_step(ctx: &mut Ctx<'_>, params: &LevelParams, r: &Roster, saturated: bool) -> bool {
    if !params.expand || !saturated {
        return false;
    }
    let state = ctx.state;
    let hqs = ctx.own().filter(|u| u.kind.def().headquarters).count();
    if hqs >= 2 {
        return false;
    }
    let Some(main) = state.primary_headquarters(ctx.player) else { return false };
    let site = state
        .bases
        .iter()
        .filter(|b| b.start_of.is_none())
        .filter(|b| !state.units.values().any(|u| u.kind.is_structure() && u.pos.dist(b.hq) < 5.0))
        .min_by_key(|b| b.hq.dist2(main.pos))
        .map(|b| b.hq);
    let Some(site) = site else { return false };
    let kind = state.player(ctx.player).faction.headquarters();
    if structure_cells(kind, site).iter().any(|c| state.is_blocked(*c)) {
        return false;
    }
    if !ctx.afford(r.headquarters) {
        return true;
    }
    let Some(w) = ctx.builder() else { return false };
    ctx.spend(r.headquarters);
    ctx.push(ActionRequest::new(r.headquarters, [w.0]).at(site.x, site.y));
    false
}

fn boosts(ctx: &mut Ctx<'_>, faction: Faction) {
    let state = ctx.state;
    match faction {
        Faction::Protoss => {
            let nexus = ctx
                .own()
                .find(|u| u.kind == UnitKind::Nexus && u.is_complete() && u.energy.current >= 50 && ctx.free(u.id))
                .map(|u| u.id);
            let target = ctx
                .own()
                .filter(|u| u.is_complete() && !u.queue.is_empty() && u.boost_until <= state.tick)
                .min_by_key(|u| (u.kind != UnitKind::Gateway, u.id))
                .map(|u| u.id);
            if let (Some(n), Some(t)) = (nexus, target) {
                ctx.push(ActionRequest::new("EFFECT_CHRONOBOOSTENERGYCOST", [n.0]).on_unit(t.0));
            }
        }
        Faction::Zerg => {
            let hatcheries: Vec<&UnitRecord> = ctx.own().filter(|u| u.kind == UnitKind::Hatchery && u.is_complete()).collect();
            let queens = ctx.count_kind(UnitKind::Queen) + ctx.queued(UnitKind::Queen);
            if state.has_completed(ctx.player, UnitKind::SpawningPool) && (queens as usize) < hatcheries.len() {
                if let Some(h) = hatcheries.iter().find(|h| h.queue.is_empty() && ctx.free(h.id)) {
                    if ctx.afford("HATCHERYTRAIN_QUEEN") {
                        ctx.spend("HATCHERYTRAIN_QUEEN");
                        ctx.push(ActionRequest::new("HATCHERYTRAIN_QUEEN", [h.id.0]));
                    }
                }
            }
            let ready: Vec<UnitId> = ctx
                .own()
                .filter(|u| u.kind == UnitKind::Queen && u.energy.current >= 25 && ctx.free(u.id))
                .map(|u| u.id)
                .collect();
            for q in ready {
                let qpos = state.unit(q).expect("own unit").pos;
                let target = hatcheries
                    .iter()
                    .filter(|h| h.inject_ready_at.is_none())
                    .min_by_key(|h| (h.pos.dist2(qpos), h.id))
                    .map(|h| h.id);
                if let Some(h) = target {
                    ctx.push(ActionRequest::new("EFFECT_INJECTLARVA", [q.0]).on_unit(h.0));
                    break;
                }
            }
        }
        Faction::Terran => {
            let damaged = ctx
                .own()
                .filter(|u| u.kind.is_structure() && u.is_complete() && u.health.current * 2 < u.health.max)
                .map(|u| u.id)
                .min();
            if let (Some(d), Some(w)) = (damaged, ctx.builder()) {
                ctx.push(ActionRequest::new("EFFECT_REPAIR_SCV", [w.0]).on_unit(d.0));
            }
        }
    }
}

fn army(ctx: &mut Ctx<'_>, params: &LevelParams) {
    let state = ctx.state;
    let player = ctx.player;
    let faction = state.player(player).faction;
    let r = roster(faction);

    // Production.
    let advanced_ready = match faction {
        Faction::Terran => true,
        Faction::Zerg => state.has_completed(player, UnitKind::RoachWarren),
        Faction::Protoss => state.has_completed(player, UnitKind::CyberneticsCore),
    };
    let producers: Vec<&UnitRecord> = match faction {
        Faction::Zerg => ctx
            .own()
            .filter(|u| u.kind == UnitKind::Hatchery && u.is_complete() && u.larva > 0)
            .collect(),
        _ => {
            let k = if faction == Faction::Terran { UnitKind::Barracks } else { UnitKind::Gateway };
            ctx.own()
                .filter(|u| u.kind == k && u.is_complete() && u.queue.len() < 2)
                .filter(|u| !u.addon.and_then(|a| state.unit(a)).is_some_and(|a| !a.is_complete()))
                .collect()
        }
    };
    let basic_ok = match faction {
        Faction::Zerg => state.has_completed(player, UnitKind::SpawningPool),
        _ => true,
    };
    for p in producers {
        if !ctx.free(p.id) {
            continue;
        }
        let can_advanced = advanced_ready
            && params.tech
            && match faction {
                Faction::Terran => p.addon.and_then(|a| state.unit(a)).is_some_and(|a| a.is_complete()),
                _ => true,
            };
        let choice = if can_advanced && ctx.afford(r.advanced) {
            Some(r.advanced)
        } else if basic_ok && ctx.afford(r.basic) {
            Some(r.basic)
        } else {
            None
        };
        if let Some(a) = choice {
            ctx.spend(a);
            ctx.push(ActionRequest::new(a, [p.id.0]));
        }
    }

    // Orders.
    let soldiers: Vec<&UnitRecord> = ctx
        .own()
        .filter(|u| u.kind.is_army() && u.kind != UnitKind::Queen && ctx.free(u.id))
        .collect();
    let army_supply: u32 = soldiers.iter().map(|u| u.kind.def().supply).sum();
    let enemies = visible_enemies(state, player);

    if params.focus_fire {
        let mut by_target: BTreeMap<UnitId, Vec<u32>> = BTreeMap::new();
        for s in &soldiers {
            let w = s.kind.def().weapon.expect("army units are armed");
            let pick = enemies
                .iter()
                .filter(|e| e.distance_from(s.pos) <= w.range)
                .min_by_key(|e| (e.kind.is_structure(), e.kind.def().weapon.is_none(), durability(e), e.id));
            if let Some(t) = pick {
                if s.order != (Order::Attack { target: t.id }) {
                    by_target.entry(t.id).or_default().push(s.id.0);
                }
            }
        }
        for (t, units) in by_target {
            ctx.push(ActionRequest::new("ATTACK_ATTACK", units).on_unit(t.0));
        }
    }

    let own_structures: Vec<Pos> = ctx.own().filter(|u| u.kind.is_structure()).map(|u| u.pos).collect();
    let threat = enemies
        .iter()
        .filter(|e| !e.kind.is_structure() && own_structures.iter().any(|p| p.dist(e.pos) <= 14.0))
        .min_by_key(|e| e.id)
        .map(|e| e.pos);
    let home = ctx.base_anchor();
    let target = if let Some(t) = threat {
        Some(t)
    } else if army_supply >= params.attack_supply {
        let from = home.unwrap_or(Pos::new(0, 0));
        state
            .own_units(player.opponent())
            .filter(|u| u.kind.is_structure())
            .min_by_key(|u| (u.pos.dist2(from), u.id))
            .map(|u| u.pos)
    } else {
        None
    };
    let Some(goal) = target else { return };
    let movers: Vec<u32> = soldiers
        .iter()
        .filter(|s| ctx.free(s.id))
        .filter(|s| match s.order {
            Order::Idle => true,
            Order::AttackMove { goal: g, .. } => g != goal && threat.is_some(),
            _ => false,
        })
        .map(|s| s.id.0)
        .collect();
    if !movers.is_empty() {
        ctx.push(ActionRequest::new("ATTACK_ATTACK", movers).at(goal.x, goal.y));
    }
}
