//! Text observations: a per-player, fog-filtered view of the match rendered
//! as the ten-section layout agents read.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use serde::Serialize;

use crate::protocol::ActionRequest;
use crate::sim::check::unit_abilities;
use crate::sim::data::{catalog, UnitKind};
use crate::sim::state::{GameState, DROP_OFF_RANGE, GAS_SATURATION, MINERAL_SATURATION};
use crate::sim::types::{Order, PlayerId, Pos, UnitId, UnitRecord, UnitState};

pub mod fixture;

pub const SECTION_NAMES: [&str; 10] = [
    "Round state",
    "Own units",
    "Unit abilities",
    "Own structures",
    "Structure abilities",
    "Visible enemy units",
    "Visible enemy structures",
    "Action history",
    "Map information",
    "Ability description",
];

pub const HISTORY_LEN: usize = 10;
const EMPTY: &str = "[Empty]";
const NEAREST_NODES: usize = 4;
const COLLECTING: &str = "collecting resources automatically";

/// The last executed actions of one player, oldest first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionHistory {
    lines: VecDeque<String>,
    capacity: usize,
}

impl Default for ActionHistory {
    fn default() -> Self {
        ActionHistory::with_capacity(HISTORY_LEN)
    }
}

impl ActionHistory {
    pub fn with_capacity(capacity: usize) -> Self {
        ActionHistory {
            lines: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn push(&mut self, action: &ActionRequest) {
        if self.capacity == 0 {
            return;
        }
        if self.lines.len() == self.capacity {
            self.lines.pop_front();
        }
        self.lines.push_back(action.to_canonical());
    }

    pub fn extend<'a>(&mut self, actions: impl IntoIterator<Item = &'a ActionRequest>) {
        for a in actions {
            self.push(a);
        }
    }

    pub fn lines(&self) -> impl Iterator<Item = &str> {
        self.lines.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }
}

/// Everything one player may see, already filtered by fog.
#[derive(Debug, Clone, Serialize)]
pub struct FoggedView {
    pub player: PlayerId,
    pub tick: u64,
    pub own: Vec<UnitRecord>,
    pub enemy: Vec<UnitRecord>,
    pub resources: Vec<UnitRecord>,
}

impl FoggedView {
    pub fn of(state: &GameState, player: PlayerId) -> FoggedView {
        let mut view = FoggedView {
            player,
            tick: state.tick,
            own: Vec::new(),
            enemy: Vec::new(),
            resources: Vec::new(),
        };
        for u in state.units.values() {
            match u.owner {
                None => view.resources.push(u.clone()),
                Some(o) if o == player => view.own.push(u.clone()),
                Some(_) if state.is_visible_to(player, u) => view.enemy.push(u.clone()),
                Some(_) => {}
            }
        }
        view
    }

    pub fn contains(&self, id: UnitId) -> bool {
        self.own
            .iter()
            .chain(&self.enemy)
            .chain(&self.resources)
            .any(|u| u.id == id)
    }

    fn find(&self, id: UnitId) -> Option<&UnitRecord> {
        self.own
            .iter()
            .chain(&self.enemy)
            .chain(&self.resources)
            .find(|u| u.id == id)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TextObservation {
    pub sections: Vec<(String, String)>,
    pub full_text: String,
    pub source: FoggedView,
}

impl TextObservation {
    pub fn section(&self, name: &str) -> Option<&str> {
        self.sections
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, body)| body.as_str())
    }
}

/// Greedy nearest-neighbour chain starting from `anchor`. Ties go to the
/// lowest id.
pub fn order_units<'a, I>(units: I, anchor: Pos) -> Vec<&'a UnitRecord>
where
    I: IntoIterator<Item = &'a UnitRecord>,
{
    let mut left: Vec<&UnitRecord> = units.into_iter().collect();
    let mut out = Vec::with_capacity(left.len());
    let mut at = anchor;
    while !left.is_empty() {
        let (i, _) = left
            .iter()
            .enumerate()
            .min_by_key(|(_, u)| (u.pos.dist2(at), u.id))
            .expect("non-empty");
        let next = left.swap_remove(i);
        at = next.pos;
        out.push(next);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WorkerGroup {
    pub kind: UnitKind,
    pub ids: Vec<UnitId>,
}

/// Splits off collecting workers into one group per worker kind, keeping
/// input order inside each group. Everything else stays individual.
pub fn aggregate_workers<'a, I>(units: I) -> (Vec<WorkerGroup>, Vec<&'a UnitRecord>)
where
    I: IntoIterator<Item = &'a UnitRecord>,
{
    let mut groups: Vec<WorkerGroup> = Vec::new();
    let mut individuals = Vec::new();
    for u in units {
        if u.kind.is_worker() && u.state() == UnitState::Collecting {
            match groups.iter_mut().find(|g| g.kind == u.kind) {
                Some(g) => g.ids.push(u.id),
                None => groups.push(WorkerGroup {
                    kind: u.kind,
                    ids: vec![u.id],
                }),
            }
        } else {
            individuals.push(u);
        }
    }
    (groups, individuals)
}

/// Ordering anchor: the primary headquarters, else the centre of own
/// structures, else the centre of own units.
pub fn anchor_of(state: &GameState, player: PlayerId) -> Pos {
    if let Some(hq) = state.primary_headquarters(player) {
        return hq.pos;
    }
    let structures: Vec<Pos> = state
        .own_units(player)
        .filter(|u| u.kind.is_structure())
        .map(|u| u.pos)
        .collect();
    if !structures.is_empty() {
        return centroid(&structures);
    }
    let units: Vec<Pos> = state.own_units(player).map(|u| u.pos).collect();
    if units.is_empty() {
        Pos::new(state.width() / 2, state.height() / 2)
    } else {
        centroid(&units)
    }
}

fn centroid(points: &[Pos]) -> Pos {
    let n = points.len() as i64;
    let sx: i64 = points.iter().map(|p| p.x as i64).sum();
    let sy: i64 = points.iter().map(|p| p.y as i64).sum();
    Pos::new(sx.div_euclid(n) as i32, sy.div_euclid(n) as i32)
}

fn id_list<I: IntoIterator<Item = UnitId>>(ids: I) -> String {
    let parts: Vec<String> = ids.into_iter().map(|id| id.0.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

fn percent(current: u32, max: u32) -> u32 {
    if max == 0 {
        100
    } else {
        (current as u64 * 100 / max as u64) as u32
    }
}

fn game_clock(state: &GameState) -> String {
    let secs = state.game_seconds();
    format!("{:02}:{:02}", secs / 60, secs % 60)
}

struct Renderer<'a> {
    state: &'a GameState,
    view: &'a FoggedView,
}

impl Renderer<'_> {
    fn label(&self, id: UnitId) -> String {
        match self.view.find(id) {
            Some(u) => format!("[{}] {}", id.0, u.kind),
            None => format!("[{}]", id.0),
        }
    }

    fn state_line(&self, u: &UnitRecord) -> String {
        if let Some(p) = u.construction {
            return format!("under construction ({}%)", p.percent());
        }
        match &u.order {
            Order::Idle => "idle".to_string(),
            Order::Move { goal } => format!("moving to {goal}"),
            Order::Attack { target } => format!("attacking {}", self.label(*target)),
            Order::AttackMove {
                target: Some(t), ..
            } => format!("attacking {}", self.label(*t)),
            Order::AttackMove { goal, target: None } => format!("attack-moving to {goal}"),
            Order::Gather { node } => format!("collecting resources from {}", self.label(*node)),
            Order::Construct { structure } => format!("building {}", self.label(*structure)),
            Order::Repair { target } => format!("repairing {}", self.label(*target)),
        }
    }

    fn vitals(&self, out: &mut String, u: &UnitRecord) {
        let _ = writeln!(out, "[{}] {}", u.id.0, u.kind);
        let _ = writeln!(out, "Position: {}", u.pos);
        let _ = writeln!(
            out,
            "Health: {}/{} ({}%)",
            u.health.current,
            u.health.max,
            percent(u.health.current, u.health.max)
        );
        if u.shield.max > 0 {
            let _ = writeln!(out, "Shield: {}/{}", u.shield.current, u.shield.max);
        }
        if u.energy.max > 0 {
            let _ = writeln!(out, "Energy: {}/{}", u.energy.current, u.energy.max);
        }
    }

    fn harvesters(&self, u: &UnitRecord) -> Option<String> {
        if !u.is_complete() {
            return None;
        }
        let def = u.kind.def();
        let gathering = |node: &dyn Fn(UnitId) -> bool| {
            self.view
                .own
                .iter()
                .filter(|w| matches!(w.order, Order::Gather { node: n } if node(n)))
                .count()
        };
        if def.headquarters {
            let fields: BTreeSet<UnitId> = self
                .view
                .resources
                .iter()
                .filter(|r| {
                    r.kind == UnitKind::MineralField && r.pos.dist(u.pos) <= DROP_OFF_RANGE
                })
                .map(|r| r.id)
                .collect();
            let current = gathering(&|n| fields.contains(&n));
            Some(format!("Harvesters: {current}/{}", fields.len() * MINERAL_SATURATION))
        } else if def.extractor {
            let current = gathering(&|n| n == u.id);
            let suffix = if current >= GAS_SATURATION {
                " (no more harvesters accepted)"
            } else {
                ""
            };
            Some(format!("Harvesters: {current}/{GAS_SATURATION}{suffix}"))
        } else {
            None
        }
    }

    fn own_block(&self, out: &mut String, u: &UnitRecord) {
        self.vitals(out, u);
        if u.kind == UnitKind::Hatchery && u.is_complete() {
            let _ = writeln!(out, "Larva: {}", u.larva);
        }
        if let Some(addon) = u.addon {
            let _ = writeln!(out, "Add-on: {}", self.label(addon));
        }
        if u.is_complete() && !u.queue.is_empty() {
            let items: Vec<String> = u.queue.iter().map(|q| q.product.to_string()).collect();
            let _ = writeln!(out, "Production list: {}", items.join(", "));
        } else {
            let _ = writeln!(out, "State: {}", self.state_line(u));
        }
        if let Some(h) = self.harvesters(u) {
            let _ = writeln!(out, "{h}");
        }
    }

    fn ability_groups(&self, units: &[&UnitRecord]) -> String {
        let mut groups: Vec<(UnitKind, Vec<String>, Vec<UnitId>)> = Vec::new();
        for u in units {
            let names: Vec<String> = unit_abilities(self.state, u)
                .into_iter()
                .map(|a| a.name.clone())
                .collect();
            if names.is_empty() {
                continue;
            }
            match groups
                .iter_mut()
                .find(|(k, n, _)| *k == u.kind && *n == names)
            {
                Some(g) => g.2.push(u.id),
                None => groups.push((u.kind, names, vec![u.id])),
            }
        }
        if groups.is_empty() {
            return format!("{EMPTY}\n");
        }
        let mut out = String::new();
        for (kind, names, ids) in groups {
            let _ = writeln!(out, "{kind}{}: {}", id_list(ids), names.join(", "));
        }
        out
    }
}

/// Render the observation `player` receives at the current tick.
pub fn render_observation(
    state: &GameState,
    player: PlayerId,
    history: &ActionHistory,
) -> TextObservation {
    let view = FoggedView::of(state, player);
    let r = Renderer {
        state,
        view: &view,
    };
    let anchor = anchor_of(state, player);
    let ps = state.player(player);

    let (structures, mobile): (Vec<&UnitRecord>, Vec<&UnitRecord>) =
        view.own.iter().partition(|u| u.kind.is_structure());
    let structures = order_units(structures, anchor);
    let mobile_anchor = structures.last().map(|u| u.pos).unwrap_or(anchor);
    let mobile = order_units(mobile, mobile_anchor);
    let (groups, individuals) = aggregate_workers(mobile.iter().copied());

    let mut sections: Vec<(String, String)> = Vec::with_capacity(SECTION_NAMES.len());

    let mut round = String::new();
    let _ = writeln!(round, "Time: {}", game_clock(state));
    let _ = writeln!(round, "Race: {}", ps.faction.name());
    let _ = writeln!(round, "Minerals: {}", ps.minerals);
    let _ = writeln!(round, "Vespene: {}", ps.vespene);
    let _ = writeln!(round, "Supply army: {}", ps.supply_army);
    let _ = writeln!(round, "Supply workers: {}", ps.supply_workers);
    let _ = writeln!(round, "Supply unused: {}", ps.supply_unused);
    let _ = writeln!(round, "Map size: {}x{}", state.width(), state.height());
    sections.push((SECTION_NAMES[0].into(), round));

    let mut own_units = String::new();
    for g in &groups {
        let _ = writeln!(own_units, "{} {}", id_list(g.ids.iter().copied()), g.kind);
        let _ = writeln!(own_units, "State: {COLLECTING}");
    }
    for u in &individuals {
        r.own_block(&mut own_units, u);
    }
    if own_units.is_empty() {
        own_units = format!("{EMPTY}\n");
    }
    sections.push((SECTION_NAMES[1].into(), own_units));
    sections.push((SECTION_NAMES[2].into(), r.ability_groups(&mobile)));

    let mut own_structures = String::new();
    for u in &structures {
        r.own_block(&mut own_structures, u);
    }
    if own_structures.is_empty() {
        own_structures = format!("{EMPTY}\n");
    }
    sections.push((SECTION_NAMES[3].into(), own_structures));
    sections.push((SECTION_NAMES[4].into(), r.ability_groups(&structures)));

    let (enemy_structures, enemy_units): (Vec<&UnitRecord>, Vec<&UnitRecord>) =
        view.enemy.iter().partition(|u| u.kind.is_structure());
    for (i, list) in [enemy_units, enemy_structures].into_iter().enumerate() {
        let mut body = String::new();
        for u in order_units(list, anchor) {
            r.vitals(&mut body, u);
        }
        if body.is_empty() {
            body = format!("{EMPTY}\n");
        }
        sections.push((SECTION_NAMES[5 + i].into(), body));
    }

    let mut hist = String::new();
    for line in history.lines() {
        let _ = writeln!(hist, "{line}");
    }
    if hist.is_empty() {
        hist = format!("{EMPTY}\n");
    }
    sections.push((SECTION_NAMES[7].into(), hist));

    sections.push((SECTION_NAMES[8].into(), map_information(&view, anchor)));
    sections.push((SECTION_NAMES[9].into(), ability_descriptions(state, &view)));

    let mut full_text = String::new();
    for (i, (name, body)) in sections.iter().enumerate() {
        if i > 0 {
            full_text.push('\n');
        }
        let _ = writeln!(full_text, "# {name}");
        full_text.push_str(body);
    }
    TextObservation {
        sections,
        full_text,
        source: view,
    }
}

/// Nearest free resource nodes: every mineral field, and geysers without a
/// gas structure on top.
fn map_information(view: &FoggedView, anchor: Pos) -> String {
    let taken: BTreeSet<Pos> = view
        .own
        .iter()
        .chain(&view.enemy)
        .filter(|u| u.kind.def().extractor)
        .map(|u| u.pos)
        .collect();
    let mut out = String::new();
    for (kind, plural) in [
        (UnitKind::MineralField, "mineral fields"),
        (UnitKind::VespeneGeyser, "vespene geysers"),
    ] {
        let mut nodes: Vec<&UnitRecord> = view
            .resources
            .iter()
            .filter(|u| u.kind == kind && !taken.contains(&u.pos))
            .collect();
        nodes.sort_by_key(|u| (u.pos.dist2(anchor), u.id));
        if nodes.is_empty() {
            let _ = writeln!(out, "No {plural} found");
            continue;
        }
        let parts: Vec<String> = nodes
            .iter()
            .take(NEAREST_NODES)
            .map(|u| format!("[{}]{}", u.id.0, u.pos))
            .collect();
        let _ = writeln!(out, "Closest {plural}: {}", parts.join(", "));
    }
    out
}

fn ability_descriptions(state: &GameState, view: &FoggedView) -> String {
    let mut legal: BTreeSet<usize> = BTreeSet::new();
    for u in &view.own {
        for a in unit_abilities(state, u) {
            if let Some(i) = catalog().ability_index(&a.name) {
                legal.insert(i);
            }
        }
    }
    if legal.is_empty() {
        return format!("{EMPTY}\n");
    }
    let mut out = String::new();
    for &i in &legal {
        let a = &catalog().abilities()[i];
        let _ = write!(out, "{}(target: {}): {}", a.name, a.target.label(), a.description);
        if let Some(cost) = a.cost_text() {
            let _ = write!(out, " {cost}");
        }
        out.push('\n');
    }
    out
}
