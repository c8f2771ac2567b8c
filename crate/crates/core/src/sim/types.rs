use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::data::{Faction, UnitKind};

/// Unit identifier. Allocated from a per-match counter and never reused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnitId(pub u32);

impl fmt::Display for UnitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Player number, 1 or 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PlayerId(pub u8);

impl PlayerId {
    pub const ONE: PlayerId = PlayerId(1);
    pub const TWO: PlayerId = PlayerId(2);

    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn opponent(self) -> PlayerId {
        if self.0 == 1 {
            PlayerId::TWO
        } else {
            PlayerId::ONE
        }
    }

    pub fn both() -> [PlayerId; 2] {
        [PlayerId::ONE, PlayerId::TWO]
    }
}

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Cell coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pos {
    pub x: i32,
    pub y: i32,
}

impl Pos {
    pub const fn new(x: i32, y: i32) -> Pos {
        Pos { x, y }
    }

    pub fn dist2(self, other: Pos) -> i64 {
        let dx = (self.x - other.x) as i64;
        let dy = (self.y - other.y) as i64;
        dx * dx + dy * dy
    }

    pub fn dist(self, other: Pos) -> f64 {
        (self.dist2(other) as f64).sqrt()
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// A bounded quantity such as health, shield or energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Pool {
    pub current: u32,
    pub max: u32,
}

impl Pool {
    pub fn full(max: u32) -> Pool {
        Pool { current: max, max }
    }

    pub fn new(current: u32, max: u32) -> Pool {
        Pool {
            current: current.min(max),
            max,
        }
    }

    pub fn add(&mut self, amount: u32) {
        self.current = (self.current + amount).min(self.max);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "order", rename_all = "snake_case")]
pub enum Order {
    Idle,
    Move { goal: Pos },
    Attack { target: UnitId },
    AttackMove { goal: Pos, target: Option<UnitId> },
    Gather { node: UnitId },
    Construct { structure: UnitId },
    Repair { target: UnitId },
}

/// Coarse state label shown in observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitState {
    Idle,
    Moving,
    Attacking(Option<UnitId>),
    Collecting,
    Constructing,
    Producing,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Product {
    Unit(UnitKind),
    Research(String),
}

impl fmt::Display for Product {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Product::Unit(k) => f.write_str(k.name()),
            Product::Research(t) => write!(f, "Research {t}"),
        }
    }
}

/// One entry of a production list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueueItem {
    pub product: Product,
    pub progress: u32,
    pub total: u32,
    /// Supply is reserved when the item starts; only the head ever starts.
    pub started: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub done: u32,
    pub total: u32,
}

impl Progress {
    pub fn percent(self) -> u32 {
        if self.total == 0 {
            100
        } else {
            self.done * 100 / self.total
        }
    }
}

pub const QUEUE_CAPACITY: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitRecord {
    pub id: UnitId,
    pub kind: UnitKind,
    pub owner: Option<PlayerId>,
    pub pos: Pos,
    pub health: Pool,
    pub shield: Pool,
    pub energy: Pool,
    pub order: Order,
    /// Production list (capacity 5). Eggs carry their single morph here.
    pub queue: Vec<QueueItem>,
    /// Present while a structure is being built.
    pub construction: Option<Progress>,
    /// Remaining minerals/vespene for resource nodes and gas structures.
    pub resources: u32,
    pub addon: Option<UnitId>,
    pub larva: u32,
    pub larva_timer: u32,
    pub inject_ready_at: Option<u64>,
    pub boost_until: u64,
    pub weapon_cooldown: u32,
    pub move_timer: u32,
    pub gather_timer: u32,
    pub last_damaged: Option<u64>,
    pub prev_pos: Option<Pos>,
}

impl UnitRecord {
    pub fn new(id: UnitId, kind: UnitKind, owner: Option<PlayerId>, pos: Pos) -> UnitRecord {
        let def = kind.def();
        UnitRecord {
            id,
            kind,
            owner,
            pos,
            health: Pool::full(def.health),
            shield: Pool::full(def.shield),
            energy: Pool::new(def.start_energy, def.energy),
            order: Order::Idle,
            queue: Vec::new(),
            construction: None,
            resources: def.resources,
            addon: None,
            larva: 0,
            larva_timer: 0,
            inject_ready_at: None,
            boost_until: 0,
            weapon_cooldown: 0,
            move_timer: 0,
            gather_timer: 0,
            last_damaged: None,
            prev_pos: None,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.construction.is_none()
    }

    pub fn radius(&self) -> i32 {
        self.kind.def().radius
    }

    /// Cells covered by this unit's footprint.
    pub fn footprint(&self) -> impl Iterator<Item = Pos> {
        let r = if self.kind.blocks_cells() { self.radius() } else { 0 };
        let c = self.pos;
        (-r..=r).flat_map(move |dx| (-r..=r).map(move |dy| Pos::new(c.x + dx, c.y + dy)))
    }

    /// Euclidean distance from `from` to the nearest footprint cell.
    pub fn distance_from(&self, from: Pos) -> f64 {
        let r = if self.kind.blocks_cells() { self.radius() } else { 0 };
        let nx = from.x.clamp(self.pos.x - r, self.pos.x + r);
        let ny = from.y.clamp(self.pos.y - r, self.pos.y + r);
        from.dist(Pos::new(nx, ny))
    }

    pub fn state(&self) -> UnitState {
        if self.construction.is_some() {
            return UnitState::Constructing;
        }
        if !self.queue.is_empty() {
            return UnitState::Producing;
        }
        match &self.order {
            Order::Idle => UnitState::Idle,
            Order::Move { .. } => UnitState::Moving,
            Order::Attack { target } => UnitState::Attacking(Some(*target)),
            Order::AttackMove { target, .. } => UnitState::Attacking(*target),
            Order::Gather { .. } => UnitState::Collecting,
            Order::Construct { .. } | Order::Repair { .. } => UnitState::Constructing,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerState {
    pub faction: Faction,
    pub minerals: u32,
    pub vespene: u32,
    pub supply_army: u32,
    pub supply_workers: u32,
    pub supply_cap: u32,
    pub supply_unused: u32,
    /// Supply reserved by queued items that have not started yet.
    pub supply_pending: u32,
    /// Production is halted by the supply cap this tick.
    pub supply_capped: bool,
    pub tech_flags: BTreeSet<String>,
    pub collected_minerals: u64,
    pub collected_vespene: u64,
    pub spent_minerals: u64,
    pub spent_vespene: u64,
    /// Build-order variant drawn from the match rng for scripted play.
    pub build_variant: u32,
}

impl PlayerState {
    pub fn new(faction: Faction) -> PlayerState {
        PlayerState {
            faction,
            minerals: 0,
            vespene: 0,
            supply_army: 0,
            supply_workers: 0,
            supply_cap: 0,
            supply_unused: 0,
            supply_pending: 0,
            supply_capped: false,
            tech_flags: BTreeSet::new(),
            collected_minerals: 0,
            collected_vespene: 0,
            spent_minerals: 0,
            spent_vespene: 0,
            build_variant: 0,
        }
    }

    pub fn supply_used(&self) -> u32 {
        self.supply_army + self.supply_workers
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    ActionRejected {
        player: PlayerId,
        index: usize,
        action: String,
        reason: String,
    },
    Cost {
        player: PlayerId,
        ability: String,
        minerals: u32,
        vespene: u32,
    },
    UnitSpawned {
        id: UnitId,
        kind: UnitKind,
        owner: PlayerId,
    },
    ConstructionStarted {
        id: UnitId,
        kind: UnitKind,
        owner: PlayerId,
    },
    ConstructionComplete {
        id: UnitId,
        kind: UnitKind,
        owner: PlayerId,
    },
    ResearchComplete {
        player: PlayerId,
        tech: String,
    },
    UnitDestroyed {
        id: UnitId,
        kind: UnitKind,
        owner: Option<PlayerId>,
    },
    ResourceDepleted {
        id: UnitId,
    },
}
