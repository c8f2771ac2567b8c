use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::data::{Faction, Role, UnitKind};
use super::types::{Event, Order, PlayerId, PlayerState, Pos, Progress, UnitId, UnitRecord};

pub const KERNEL_VERSION: &str = "arena-kernel/1";

/// Workers on one mineral field that actually gather; extra workers wait.
pub const MINERAL_SATURATION: usize = 2;
/// Workers on one gas structure that actually gather.
pub const GAS_SATURATION: usize = 3;
/// Radius of a Pylon power field.
pub const POWER_RADIUS: f64 = 6.5;
/// Maximum distance between a resource node and the headquarters it feeds.
pub const DROP_OFF_RANGE: f64 = 12.0;
pub const MAX_SUPPLY: u32 = 200;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("map must be at least 16x16 cells, got {width}x{height}")]
    MapTooSmall { width: u32, height: u32 },
    #[error("a match needs exactly 2 players, got {0}")]
    PlayerCount(usize),
    #[error("max_ticks must be positive")]
    ZeroMaxTicks,
    #[error("ticks_per_game_second must be positive")]
    ZeroTickRate,
    #[error("built-in difficulty must be within 1..=7, got {0}")]
    Difficulty(u8),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchConfig {
    pub map_width: u32,
    pub map_height: u32,
    pub factions: Vec<Faction>,
    pub builtin_difficulty: Vec<Option<u8>>,
    pub seed: u64,
    pub max_ticks: u64,
    pub ticks_per_game_second: u32,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            map_width: 48,
            map_height: 48,
            factions: vec![Faction::Protoss, Faction::Protoss],
            builtin_difficulty: vec![None, None],
            seed: 0,
            max_ticks: 16 * 60 * 15,
            ticks_per_game_second: 16,
        }
    }
}

impl MatchConfig {
    pub fn mirror(faction: Faction, seed: u64) -> MatchConfig {
        MatchConfig {
            factions: vec![faction, faction],
            seed,
            ..MatchConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.map_width < 16 || self.map_height < 16 {
            return Err(ConfigError::MapTooSmall {
                width: self.map_width,
                height: self.map_height,
            });
        }
        if self.factions.len() != 2 {
            return Err(ConfigError::PlayerCount(self.factions.len()));
        }
        if self.builtin_difficulty.len() > 2 {
            return Err(ConfigError::PlayerCount(self.builtin_difficulty.len()));
        }
        if let Some(&bad) = self
            .builtin_difficulty
            .iter()
            .flatten()
            .find(|l| !(1..=7).contains(*l))
        {
            return Err(ConfigError::Difficulty(bad));
        }
        if self.max_ticks == 0 {
            return Err(ConfigError::ZeroMaxTicks);
        }
        if self.ticks_per_game_second == 0 {
            return Err(ConfigError::ZeroTickRate);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "result", content = "player")]
pub enum Outcome {
    Ongoing,
    Win(PlayerId),
    Tie,
}

/// A resource cluster with a headquarters slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaseSite {
    pub hq: Pos,
    pub start_of: Option<PlayerId>,
}

/// Full authoritative simulation state for one match.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameState {
    pub config: MatchConfig,
    pub tick: u64,
    pub players: [PlayerState; 2],
    pub units: BTreeMap<UnitId, UnitRecord>,
    pub next_id: u32,
    pub bases: Vec<BaseSite>,
    /// Per-player visibility mask, row-major.
    pub fog: [Vec<bool>; 2],
    pub rng: ChaCha8Rng,
    pub event_log: Vec<(u64, Event)>,
    /// Blocking footprint owner for each cell.
    pub(crate) occupancy: Vec<Option<UnitId>>,
}

const MINERAL_OFFSETS: [(i32, i32); 8] = [
    (5, 3),
    (5, 1),
    (5, -1),
    (5, -3),
    (3, 5),
    (1, 5),
    (-1, 5),
    (-3, 5),
];
const GEYSER_OFFSETS: [(i32, i32); 2] = [(-5, 4), (4, -5)];
const COMPACT_MINERAL_OFFSETS: [(i32, i32); 4] = [(3, 1), (3, -1), (1, 3), (-1, 3)];
const COMPACT_GEYSER_OFFSETS: [(i32, i32); 1] = [(-3, 3)];

struct SiteLayout {
    hq: Pos,
    dir: (i32, i32),
    start_of: Option<PlayerId>,
    compact: bool,
}

fn site_layouts(w: i32, h: i32) -> Vec<SiteLayout> {
    if w.min(h) < 32 {
        return vec![
            SiteLayout {
                hq: Pos::new(4, 4),
                dir: (-1, -1),
                start_of: Some(PlayerId::ONE),
                compact: true,
            },
            SiteLayout {
                hq: Pos::new(w - 5, h - 5),
                dir: (1, 1),
                start_of: Some(PlayerId::TWO),
                compact: true,
            },
        ];
    }
    let mut sites = vec![
        SiteLayout {
            hq: Pos::new(9, 9),
            dir: (-1, -1),
            start_of: Some(PlayerId::ONE),
            compact: false,
        },
        SiteLayout {
            hq: Pos::new(w - 10, h - 10),
            dir: (1, 1),
            start_of: Some(PlayerId::TWO),
            compact: false,
        },
    ];
    if w.min(h) >= 40 {
        let ny = h / 2 + 3;
        sites.push(SiteLayout {
            hq: Pos::new(9, ny),
            dir: (-1, 1),
            start_of: None,
            compact: false,
        });
        sites.push(SiteLayout {
            hq: Pos::new(w - 10, h - 1 - ny),
            dir: (1, -1),
            start_of: None,
            compact: false,
        });
    }
    sites
}

/// A match with no units and no bases, for staging scenarios by hand.
pub fn empty_match(config: MatchConfig) -> Result<GameState, ConfigError> {
    config.validate()?;
    let cells = (config.map_width * config.map_height) as usize;
    let players = [
        PlayerState::new(config.factions[0]),
        PlayerState::new(config.factions[1]),
    ];
    let rng = ChaCha8Rng::seed_from_u64(config.seed);
    Ok(GameState {
        config,
        tick: 0,
        players,
        units: BTreeMap::new(),
        next_id: 1,
        bases: Vec::new(),
        fog: [vec![false; cells], vec![false; cells]],
        rng,
        event_log: Vec::new(),
        occupancy: vec![None; cells],
    })
}

pub fn create_match(config: MatchConfig) -> Result<GameState, ConfigError> {
    let mut state = empty_match(config)?;
    let (w, h) = (state.width(), state.height());
    for site in site_layouts(w, h) {
        let (dx, dy) = site.dir;
        let (minerals, geysers): (&[(i32, i32)], &[(i32, i32)]) = if site.compact {
            (&COMPACT_MINERAL_OFFSETS, &COMPACT_GEYSER_OFFSETS)
        } else {
            (&MINERAL_OFFSETS, &GEYSER_OFFSETS)
        };
        for &(ox, oy) in minerals {
            let p = Pos::new(site.hq.x + dx * ox, site.hq.y + dy * oy);
            state.spawn(UnitKind::MineralField, None, p);
        }
        for &(ox, oy) in geysers {
            let p = Pos::new(site.hq.x + dx * ox, site.hq.y + dy * oy);
            state.spawn(UnitKind::VespeneGeyser, None, p);
        }
        state.bases.push(BaseSite {
            hq: site.hq,
            start_of: site.start_of,
        });
        if let Some(player) = site.start_of {
            state.seed_start(player, site.hq, site.dir);
        }
    }

    for p in PlayerId::both() {
        let variant = state.rng.gen_range(0..3);
        state.players[p.index()].minerals = 50;
        state.players[p.index()].build_variant = variant;
    }
    state.recompute_supply();
    state.update_fog();
    Ok(state)
}

impl GameState {
    fn seed_start(&mut self, player: PlayerId, hq_pos: Pos, dir: (i32, i32)) {
        let faction = self.players[player.index()].faction;
        let hq = self.spawn(faction.headquarters(), Some(player), hq_pos);
        if faction == Faction::Zerg {
            self.unit_mut(hq).larva = 3;
            let ov = Pos::new(hq_pos.x - dir.0 * 4, hq_pos.y - dir.1 * 4);
            self.spawn(UnitKind::Overlord, Some(player), self.clamp(ov));
        }
        let nodes = self.mineral_fields_near(hq_pos);
        let worker_pos = self.clamp(Pos::new(hq_pos.x + dir.0 * 3, hq_pos.y + dir.1 * 3));
        for i in 0..12 {
            let w = self.spawn(faction.worker(), Some(player), worker_pos);
            if !nodes.is_empty() {
                let node = nodes[i % nodes.len()];
                self.unit_mut(w).order = Order::Gather { node };
            }
        }
    }

    /// Mineral fields within drop-off range of `pos`, nearest first.
    pub fn mineral_fields_near(&self, pos: Pos) -> Vec<UnitId> {
        let mut fields: Vec<(i64, UnitId)> = self
            .units
            .values()
            .filter(|u| u.kind == UnitKind::MineralField && u.pos.dist(pos) <= DROP_OFF_RANGE)
            .map(|u| (u.pos.dist2(pos), u.id))
            .collect();
        fields.sort();
        fields.into_iter().map(|(_, id)| id).collect()
    }

    pub fn width(&self) -> i32 {
        self.config.map_width as i32
    }

    pub fn height(&self) -> i32 {
        self.config.map_height as i32
    }

    /// Tie-break key for positions that treats both players alike: player 2
    /// sees the map rotated by 180 degrees.
    pub fn oriented(&self, player: Option<PlayerId>, p: Pos) -> (i32, i32) {
        if player == Some(PlayerId::TWO) {
            (-p.y, -p.x)
        } else {
            (p.y, p.x)
        }
    }

    pub fn in_bounds(&self, p: Pos) -> bool {
        p.x >= 0 && p.y >= 0 && p.x < self.width() && p.y < self.height()
    }

    pub fn clamp(&self, p: Pos) -> Pos {
        Pos::new(p.x.clamp(0, self.width() - 1), p.y.clamp(0, self.height() - 1))
    }

    fn cell(&self, p: Pos) -> usize {
        (p.y * self.width() + p.x) as usize
    }

    pub fn player(&self, p: PlayerId) -> &PlayerState {
        &self.players[p.index()]
    }

    pub fn player_mut(&mut self, p: PlayerId) -> &mut PlayerState {
        &mut self.players[p.index()]
    }

    pub fn unit(&self, id: UnitId) -> Option<&UnitRecord> {
        self.units.get(&id)
    }

    pub(crate) fn unit_mut(&mut self, id: UnitId) -> &mut UnitRecord {
        self.units.get_mut(&id).expect("unit id must be live")
    }

    pub fn game_seconds(&self) -> u64 {
        self.tick / self.config.ticks_per_game_second as u64
    }

    /// Insert a new complete unit and register its footprint.
    pub(crate) fn spawn(&mut self, kind: UnitKind, owner: Option<PlayerId>, pos: Pos) -> UnitId {
        let rec = UnitRecord::new(UnitId(self.next_id), kind, owner, pos);
        self.insert_unit(rec)
    }

    /// Insert a prepared record, keeping its id. Used to stage scenarios;
    /// later spawns continue above the highest id seen.
    pub fn insert_unit(&mut self, rec: UnitRecord) -> UnitId {
        let id = rec.id;
        assert!(!self.units.contains_key(&id), "unit id {} already live", id.0);
        self.next_id = self.next_id.max(id.0 + 1);
        // Gas structures sit on top of the geyser, which already blocks.
        if rec.kind.blocks_cells() && !rec.kind.def().extractor {
            for c in rec.footprint().collect::<Vec<_>>() {
                if self.in_bounds(c) {
                    let i = self.cell(c);
                    self.occupancy[i] = Some(id);
                }
            }
        }
        self.units.insert(id, rec);
        id
    }

    /// Insert a structure under construction.
    pub(crate) fn spawn_construction(
        &mut self,
        kind: UnitKind,
        owner: PlayerId,
        pos: Pos,
    ) -> UnitId {
        let id = self.spawn(kind, Some(owner), pos);
        let total = kind.def().build_time;
        let u = self.unit_mut(id);
        u.construction = Some(Progress { done: 0, total });
        // Structures start at a tenth of their health and grow while building.
        u.health.current = (u.health.max / 10).max(1);
        u.shield.current = u.shield.max / 10;
        u.energy.current = 0;
        id
    }

    pub(crate) fn remove_unit(&mut self, id: UnitId) -> Option<UnitRecord> {
        let rec = self.units.remove(&id)?;
        for c in rec.footprint() {
            if self.in_bounds(c) {
                let i = self.cell(c);
                if self.occupancy[i] == Some(id) {
                    self.occupancy[i] = None;
                }
            }
        }
        Some(rec)
    }

    pub fn is_blocked(&self, p: Pos) -> bool {
        !self.in_bounds(p) || self.occupancy[self.cell(p)].is_some()
    }

    pub fn blocker_at(&self, p: Pos) -> Option<UnitId> {
        if self.in_bounds(p) {
            self.occupancy[self.cell(p)]
        } else {
            None
        }
    }

    pub fn cell_visible(&self, player: PlayerId, p: Pos) -> bool {
        self.in_bounds(p) && self.fog[player.index()][self.cell(p)]
    }

    /// Whether `player` can currently see `unit`. Own units and neutral
    /// resource nodes are always visible.
    pub fn is_visible_to(&self, player: PlayerId, unit: &UnitRecord) -> bool {
        match unit.owner {
            None => true,
            Some(o) if o == player => true,
            Some(_) => unit.footprint().any(|c| self.cell_visible(player, c)),
        }
    }

    pub fn update_fog(&mut self) {
        let (w, h) = (self.width(), self.height());
        for mask in self.fog.iter_mut() {
            mask.iter_mut().for_each(|c| *c = false);
        }
        for u in self.units.values() {
            let Some(owner) = u.owner else { continue };
            let sight = u.kind.def().sight as i32;
            let r2 = (sight * sight) as i64;
            let mask = &mut self.fog[owner.index()];
            for y in (u.pos.y - sight).max(0)..=(u.pos.y + sight).min(h - 1) {
                let dy = (y - u.pos.y) as i64;
                let half = (((r2 - dy * dy) as f64).sqrt() as i32).min(sight);
                let x0 = (u.pos.x - half).max(0);
                let x1 = (u.pos.x + half).min(w - 1);
                if x0 <= x1 {
                    mask[(y * w + x0) as usize..=(y * w + x1) as usize].fill(true);
                }
            }
        }
    }

    pub fn own_units(&self, player: PlayerId) -> impl Iterator<Item = &UnitRecord> {
        self.units.values().filter(move |u| u.owner == Some(player))
    }

    pub fn structure_count(&self, player: PlayerId) -> usize {
        self.own_units(player)
            .filter(|u| u.kind.is_structure())
            .count()
    }

    pub fn has_completed(&self, player: PlayerId, kind: UnitKind) -> bool {
        self.own_units(player)
            .any(|u| u.kind == kind && u.is_complete())
    }

    /// Primary headquarters: the lowest-id completed headquarters.
    pub fn primary_headquarters(&self, player: PlayerId) -> Option<&UnitRecord> {
        self.own_units(player)
            .filter(|u| u.kind.def().headquarters)
            .min_by_key(|u| (!u.is_complete(), u.id))
    }

    /// Whether a Protoss structure at `pos` is inside a completed Pylon field.
    pub fn is_powered(&self, player: PlayerId, pos: Pos) -> bool {
        self.own_units(player).any(|u| {
            u.kind == UnitKind::Pylon && u.is_complete() && u.pos.dist(pos) <= POWER_RADIUS
        })
    }

    /// Recompute supply totals from the unit set and production lists.
    pub fn recompute_supply(&mut self) {
        for p in PlayerId::both() {
            let mut cap = 0;
            let mut army = 0;
            let mut workers = 0;
            let mut pending = 0;
            let mut stalled = false;
            for u in self.own_units(p) {
                let def = u.kind.def();
                if u.is_complete() {
                    cap += def.supply_provided;
                }
                if def.role == Role::Worker {
                    workers += def.supply;
                } else {
                    army += def.supply;
                }
                for (i, item) in u.queue.iter().enumerate() {
                    if let super::types::Product::Unit(k) = item.product {
                        let s = k.def().supply;
                        if item.started {
                            if k.is_worker() {
                                workers += s;
                            } else {
                                army += s;
                            }
                        } else {
                            pending += s;
                            if i == 0 && s > 0 {
                                stalled = true;
                            }
                        }
                    }
                }
            }
            let cap = cap.min(MAX_SUPPLY);
            let ps = self.player_mut(p);
            ps.supply_cap = cap;
            ps.supply_army = army;
            ps.supply_workers = workers;
            ps.supply_pending = pending;
            ps.supply_unused = cap.saturating_sub(army + workers);
            ps.supply_capped = ps.supply_unused == 0 || stalled;
        }
    }

    /// Stable 64-bit digest of the simulation state (event log excluded).
    pub fn digest(&self) -> u64 {
        let mut d = StateDigest::new();
        d.u64(self.tick);
        d.u64(self.next_id as u64);
        d.u64(self.rng.get_word_pos() as u64);
        for p in &self.players {
            d.u64(p.faction as u64);
            for v in [
                p.minerals,
                p.vespene,
                p.supply_army,
                p.supply_workers,
                p.supply_cap,
                p.supply_unused,
                p.supply_pending,
                p.supply_capped as u32,
                p.build_variant,
            ] {
                d.u64(v as u64);
            }
            for v in [
                p.collected_minerals,
                p.collected_vespene,
                p.spent_minerals,
                p.spent_vespene,
            ] {
                d.u64(v);
            }
            d.u64(p.tech_flags.len() as u64);
            for t in &p.tech_flags {
                d.bytes(t.as_bytes());
            }
        }
        for u in self.units.values() {
            d.u64(u.id.0 as u64);
            d.u64(u.kind as u64);
            d.u64(u.owner.map(|o| o.0 as u64).unwrap_or(0));
            d.i64(u.pos.x as i64);
            d.i64(u.pos.y as i64);
            for pool in [u.health, u.shield, u.energy] {
                d.u64(pool.current as u64);
                d.u64(pool.max as u64);
            }
            match &u.order {
                Order::Idle => d.u64(0),
                Order::Move { goal } => {
                    d.u64(1);
                    d.pos(*goal);
                }
                Order::Attack { target } => {
                    d.u64(2);
                    d.u64(target.0 as u64);
                }
                Order::AttackMove { goal, target } => {
                    d.u64(3);
                    d.pos(*goal);
                    d.u64(target.map(|t| t.0 as u64 + 1).unwrap_or(0));
                }
                Order::Gather { node } => {
                    d.u64(4);
                    d.u64(node.0 as u64);
                }
                Order::Construct { structure } => {
                    d.u64(5);
                    d.u64(structure.0 as u64);
                }
                Order::Repair { target } => {
                    d.u64(6);
                    d.u64(target.0 as u64);
                }
            }
            d.u64(u.queue.len() as u64);
            for q in &u.queue {
                match &q.product {
                    super::types::Product::Unit(k) => d.u64(*k as u64),
                    super::types::Product::Research(t) => d.bytes(t.as_bytes()),
                }
                d.u64(q.progress as u64);
                d.u64(q.total as u64);
                d.u64(q.started as u64);
            }
            match u.construction {
                Some(c) => {
                    d.u64(1 + c.done as u64);
                    d.u64(c.total as u64);
                }
                None => d.u64(0),
            }
            for v in [
                u.resources,
                u.addon.map(|a| a.0 + 1).unwrap_or(0),
                u.larva,
                u.larva_timer,
                u.weapon_cooldown,
                u.move_timer,
                u.gather_timer,
            ] {
                d.u64(v as u64);
            }
            d.u64(u.inject_ready_at.map(|t| t + 1).unwrap_or(0));
            d.u64(u.boost_until);
            d.u64(u.last_damaged.map(|t| t + 1).unwrap_or(0));
            match u.prev_pos {
                Some(p) => {
                    d.u64(1);
                    d.pos(p);
                }
                None => d.u64(0),
            }
        }
        d.finish()
    }

    pub fn digest_hex(&self) -> String {
        format!("{:016x}", self.digest())
    }
}

/// FNV-1a over a canonical little-endian field encoding.
struct StateDigest(u64);

impl StateDigest {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;

    fn new() -> Self {
        StateDigest(Self::OFFSET)
    }

    fn bytes(&mut self, bytes: &[u8]) {
        self.u64(bytes.len() as u64);
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(Self::PRIME);
        }
    }

    fn u64(&mut self, v: u64) {
        for b in v.to_le_bytes() {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(Self::PRIME);
        }
    }

    fn i64(&mut self, v: i64) {
        self.u64(v as u64);
    }

    fn pos(&mut self, p: Pos) {
        self.i64(p.x as i64);
        self.i64(p.y as i64);
    }

    fn finish(self) -> u64 {
        self.0
    }
}

/// Win when the opponent has no structures left; tie on simultaneous
/// elimination or when the tick budget runs out.
pub fn outcome(state: &GameState) -> Outcome {
    let alive = |p| state.structure_count(p) > 0;
    match (alive(PlayerId::ONE), alive(PlayerId::TWO)) {
        (false, false) => Outcome::Tie,
        (true, false) => Outcome::Win(PlayerId::ONE),
        (false, true) => Outcome::Win(PlayerId::TWO),
        (true, true) if state.tick >= state.config.max_ticks => Outcome::Tie,
        (true, true) => Outcome::Ongoing,
    }
}
