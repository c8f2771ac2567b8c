//! Action legality checks shared by the protocol validator and the kernel.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::data::{catalog, AbilityDef, Effect, Faction, Prerequisite, TargetKind, UnitKind};
use super::state::GameState;
use super::types::{PlayerId, Pos, Product, UnitId, UnitRecord, QUEUE_CAPACITY};
use crate::protocol::ActionRequest;

/// Validation stage, in pipeline order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Syntax,
    Semantics,
    Feasibility,
}

/// Reasons an action (or a whole batch) cannot be executed.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ActionError {
    #[error("unknown ability {0}")]
    UnknownAbility(String),
    #[error("{ability} is not available to {faction}")]
    WrongFaction { ability: String, faction: Faction },
    #[error("units must be non-empty")]
    NoUnits,
    #[error("unit {0} does not exist or is not alive")]
    NoSuchUnit(UnitId),
    #[error("unit {0} is not owned by you")]
    NotOwned(UnitId),
    #[error("unit {0} is used by more than one action")]
    DuplicateUnit(UnitId),
    #[error("unit {id} ({kind}) cannot use {ability}")]
    CannotUse {
        id: UnitId,
        kind: UnitKind,
        ability: String,
    },
    #[error("unit {0} is still under construction")]
    UnderConstruction(UnitId),
    #[error("{ability} requires {requirement}")]
    MissingPrerequisite { ability: String, requirement: String },
    #[error("{ability} takes exactly one unit")]
    SingleUnit { ability: String },
    #[error("{ability} requires a target {expected}")]
    MissingTarget { ability: String, expected: &'static str },
    #[error("{ability} takes no target")]
    UnexpectedTarget { ability: String },
    #[error("{ability} requires a target unit, not a position")]
    PositionNotAllowed { ability: String },
    #[error("{ability} requires a target position, not a unit")]
    UnitNotAllowed { ability: String },
    #[error("target unit {0} does not exist or is not visible")]
    TargetNotFound(UnitId),
    #[error("target unit {target} is not a valid target for {ability}: {reason}")]
    InvalidTarget {
        target: UnitId,
        ability: String,
        reason: &'static str,
    },
    #[error("target position {pos} is outside the {width}x{height} map")]
    OutOfBounds { pos: Pos, width: i32, height: i32 },
    #[error("cannot place {kind} at {pos}: cells are occupied or off the map")]
    PlacementBlocked { kind: UnitKind, pos: Pos },
    #[error("cannot place {kind} at {pos}: not within a powered Pylon field")]
    Unpowered { kind: UnitKind, pos: Pos },
    #[error("cannot place {kind} at {pos}: overlaps another action in this batch")]
    PlacementConflict { kind: UnitKind, pos: Pos },
    #[error("vespene geyser {0} already has a gas structure")]
    GeyserTaken(UnitId),
    #[error("production list of unit {0} is full ({QUEUE_CAPACITY}/{QUEUE_CAPACITY})")]
    QueueFull(UnitId),
    #[error("Hatchery {0} has no larva")]
    NoLarva(UnitId),
    #[error("Barracks {0} already has an add-on")]
    AddonExists(UnitId),
    #[error("Barracks {0} is busy building an add-on")]
    AddonInProgress(UnitId),
    #[error("{0} is already researched or in progress")]
    ResearchDone(String),
    #[error("unit {id} has {have} energy, {ability} needs {need}")]
    NotEnoughEnergy {
        id: UnitId,
        ability: String,
        have: u32,
        need: u32,
    },
    #[error("minerals is not enough for executing all actions")]
    NotEnoughMinerals,
    #[error("vespene is not enough for executing all actions")]
    NotEnoughVespene,
    #[error("supply is not enough for executing all actions")]
    NotEnoughSupply,
}

impl ActionError {
    pub fn stage(&self) -> Stage {
        use ActionError::*;
        match self {
            PlacementBlocked { .. }
            | Unpowered { .. }
            | PlacementConflict { .. }
            | GeyserTaken(_)
            | QueueFull(_)
            | NoLarva(_)
            | AddonExists(_)
            | AddonInProgress(_)
            | ResearchDone(_)
            | NotEnoughEnergy { .. }
            | NotEnoughMinerals
            | NotEnoughVespene
            | NotEnoughSupply => Stage::Feasibility,
            _ => Stage::Semantics,
        }
    }

    /// Batch-level resource errors are reported once for the whole batch.
    pub fn is_total(&self) -> bool {
        matches!(
            self,
            ActionError::NotEnoughMinerals
                | ActionError::NotEnoughVespene
                | ActionError::NotEnoughSupply
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    None,
    Point(Pos),
    Unit(UnitId),
}

/// An action that passed the per-action checks, with its resolved costs.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub ability: &'static AbilityDef,
    pub units: Vec<UnitId>,
    pub target: Target,
    pub minerals: u32,
    pub vespene: u32,
    pub supply: u32,
    /// Cells claimed by a structure placement.
    pub cells: Vec<Pos>,
    pub geyser: Option<UnitId>,
    /// Research technology claimed by this action.
    pub tech: Option<String>,
}

fn prerequisite_met(state: &GameState, unit: &UnitRecord, req: &Prerequisite) -> bool {
    let owner = unit.owner.expect("commanded units are owned");
    match req {
        Prerequisite::Structure(k) => state.has_completed(owner, *k),
        Prerequisite::Addon(k) => unit
            .addon
            .and_then(|a| state.unit(a))
            .is_some_and(|a| a.kind == *k && a.is_complete()),
        Prerequisite::Tech(t) => state.player(owner).tech_flags.contains(t),
    }
}

fn prerequisite_text(req: &Prerequisite) -> String {
    match req {
        Prerequisite::Structure(k) => format!("a completed {k}"),
        Prerequisite::Addon(k) => format!("a completed {k} add-on"),
        Prerequisite::Tech(t) => format!("{t} research"),
    }
}

fn research_claimed(state: &GameState, player: PlayerId, tech: &str) -> bool {
    state.player(player).tech_flags.contains(tech)
        || state.own_units(player).any(|u| {
            u.queue
                .iter()
                .any(|q| matches!(&q.product, Product::Research(t) if t == tech))
        })
}

/// Whether `unit` may use `ability` right now, ignoring costs, energy and
/// targets. This is the set printed in observations.
pub fn ability_usable(state: &GameState, unit: &UnitRecord, ability: &AbilityDef) -> bool {
    let Some(owner) = unit.owner else {
        return false;
    };
    if !ability.users.contains(&unit.kind)
        || !ability.available_to(state.player(owner).faction)
        || !unit.is_complete()
    {
        return false;
    }
    if let Some(req) = &ability.requires {
        if !prerequisite_met(state, unit, req) {
            return false;
        }
    }
    match &ability.effect {
        Effect::Research(r) => !research_claimed(state, owner, &r.tech),
        Effect::Addon(_) => unit.addon.is_none(),
        _ => true,
    }
}

/// Printed abilities of one unit, in table order.
pub fn unit_abilities(state: &GameState, unit: &UnitRecord) -> Vec<&'static AbilityDef> {
    catalog()
        .abilities()
        .iter()
        .filter(|a| !a.automation && ability_usable(state, unit, a))
        .collect()
}

/// For every living own unit, the abilities it can use now.
pub fn legal_abilities(state: &GameState, player: PlayerId) -> BTreeMap<UnitId, Vec<String>> {
    state
        .own_units(player)
        .map(|u| {
            (
                u.id,
                unit_abilities(state, u)
                    .into_iter()
                    .map(|a| a.name.clone())
                    .collect(),
            )
        })
        .collect()
}

/// Footprint cells of a `kind` structure centred on `pos`.
pub fn structure_cells(kind: UnitKind, pos: Pos) -> Vec<Pos> {
    let r = kind.def().radius;
    (-r..=r)
        .flat_map(|dy| (-r..=r).map(move |dx| Pos::new(pos.x + dx, pos.y + dy)))
        .collect()
}

/// Position of the add-on attached to a structure at `pos`.
pub fn addon_position(host: &UnitRecord) -> Pos {
    Pos::new(host.pos.x + host.radius() + 1, host.pos.y)
}

/// Per-action checks. Resource and supply totals are checked by the caller.
pub fn check_action(
    state: &GameState,
    player: PlayerId,
    req: &ActionRequest,
) -> Result<Resolved, Vec<ActionError>> {
    let mut errors = Vec::new();
    let faction = state.player(player).faction;
    let Some(ability) = catalog().ability(&req.action) else {
        return Err(vec![ActionError::UnknownAbility(req.action.clone())]);
    };
    if !ability.available_to(faction) {
        return Err(vec![ActionError::WrongFaction {
            ability: ability.name.clone(),
            faction,
        }]);
    }
    if req.units.is_empty() {
        errors.push(ActionError::NoUnits);
    }

    let mut commanded: Vec<&UnitRecord> = Vec::new();
    for &raw in &req.units {
        let id = UnitId(raw);
        match state.unit(id) {
            None => errors.push(ActionError::NoSuchUnit(id)),
            Some(u) if u.owner != Some(player) => errors.push(ActionError::NotOwned(id)),
            Some(u) if !ability.users.contains(&u.kind) => errors.push(ActionError::CannotUse {
                id,
                kind: u.kind,
                ability: ability.name.clone(),
            }),
            Some(u) if !u.is_complete() => errors.push(ActionError::UnderConstruction(id)),
            Some(u) => commanded.push(u),
        }
    }
    let mut seen = BTreeSet::new();
    for &raw in &req.units {
        if !seen.insert(raw) {
            errors.push(ActionError::DuplicateUnit(UnitId(raw)));
        }
    }

    if let Some(req_) = &ability.requires {
        if commanded.iter().any(|u| !prerequisite_met(state, u, req_)) {
            errors.push(ActionError::MissingPrerequisite {
                ability: ability.name.clone(),
                requirement: prerequisite_text(req_),
            });
        }
    }

    let single = matches!(ability.effect, Effect::Build(_) | Effect::Research(_))
        || matches!(ability.effect, Effect::ChronoBoost | Effect::InjectLarva);
    if single && req.units.len() > 1 {
        errors.push(ActionError::SingleUnit {
            ability: ability.name.clone(),
        });
    }

    // Target signature.
    let target = match (ability.target, req.target_unit, req.target_position) {
        (TargetKind::None, None, None) => Some(Target::None),
        (TargetKind::None, _, _) => {
            errors.push(ActionError::UnexpectedTarget {
                ability: ability.name.clone(),
            });
            None
        }
        (TargetKind::Unit, Some(t), None) | (TargetKind::PointOrUnit, Some(t), None) => {
            Some(Target::Unit(UnitId(t)))
        }
        (TargetKind::Point, None, Some(p)) | (TargetKind::PointOrUnit, None, Some(p)) => {
            Some(Target::Point(Pos::new(p[0], p[1])))
        }
        (TargetKind::Unit, None, Some(_)) => {
            errors.push(ActionError::PositionNotAllowed {
                ability: ability.name.clone(),
            });
            None
        }
        (TargetKind::Point, Some(_), None) => {
            errors.push(ActionError::UnitNotAllowed {
                ability: ability.name.clone(),
            });
            None
        }
        (kind, _, _) => {
            errors.push(ActionError::MissingTarget {
                ability: ability.name.clone(),
                expected: match kind {
                    TargetKind::Unit => "unit",
                    TargetKind::Point => "position",
                    _ => "unit or position",
                },
            });
            None
        }
    };

    let mut cells = Vec::new();
    let mut geyser = None;
    let mut tech = None;
    if let Some(target) = target {
        match target {
            Target::Unit(t) => match state.unit(t) {
                Some(tu) if state.is_visible_to(player, tu) => {
                    if let Some(reason) = target_problem(player, ability, tu) {
                        errors.push(ActionError::InvalidTarget {
                            target: t,
                            ability: ability.name.clone(),
                            reason,
                        });
                    } else if matches!(ability.effect, Effect::Build(_)) {
                        if tu.addon.is_some() {
                            errors.push(ActionError::GeyserTaken(t));
                        }
                        geyser = Some(t);
                    }
                }
                _ => errors.push(ActionError::TargetNotFound(t)),
            },
            Target::Point(p) => {
                if !state.in_bounds(p) {
                    errors.push(ActionError::OutOfBounds {
                        pos: p,
                        width: state.width(),
                        height: state.height(),
                    });
                } else if let Effect::Build(kind) = ability.effect {
                    let fp = structure_cells(kind, p);
                    if fp.iter().any(|c| state.is_blocked(*c)) {
                        errors.push(ActionError::PlacementBlocked { kind, pos: p });
                    } else if kind.def().needs_power && !state.is_powered(player, p) {
                        errors.push(ActionError::Unpowered { kind, pos: p });
                    }
                    cells = fp;
                }
            }
            Target::None => {}
        }
    }

    // Per-unit feasibility.
    let mut supply = 0;
    let mut count = 0u32;
    for u in &commanded {
        count += 1;
        match &ability.effect {
            Effect::Train(k) => {
                supply += k.def().supply;
                if u.queue.len() >= QUEUE_CAPACITY {
                    errors.push(ActionError::QueueFull(u.id));
                }
                if addon_under_construction(state, u) {
                    errors.push(ActionError::AddonInProgress(u.id));
                }
            }
            Effect::Larva(k) => {
                supply += k.def().supply;
                if u.larva == 0 {
                    errors.push(ActionError::NoLarva(u.id));
                }
            }
            Effect::Addon(k) => {
                if u.addon.is_some() {
                    errors.push(ActionError::AddonExists(u.id));
                } else if !u.queue.is_empty() {
                    errors.push(ActionError::QueueFull(u.id));
                } else {
                    let p = addon_position(u);
                    if state.is_blocked(p) {
                        errors.push(ActionError::PlacementBlocked { kind: *k, pos: p });
                    }
                    cells.push(p);
                }
            }
            Effect::Research(r) => {
                if research_claimed(state, player, &r.tech) {
                    errors.push(ActionError::ResearchDone(r.tech.clone()));
                }
                if u.queue.len() >= QUEUE_CAPACITY {
                    errors.push(ActionError::QueueFull(u.id));
                }
                tech = Some(r.tech.clone());
            }
            _ => {}
        }
        if ability.energy > 0 && u.energy.current < ability.energy {
            errors.push(ActionError::NotEnoughEnergy {
                id: u.id,
                ability: ability.name.clone(),
                have: u.energy.current,
                need: ability.energy,
            });
        }
    }

    if !errors.is_empty() {
        return Err(errors);
    }
    let per = match ability.effect {
        Effect::Build(_) | Effect::Research(_) => 1,
        _ => count,
    };
    Ok(Resolved {
        ability,
        units: req.units.iter().map(|&u| UnitId(u)).collect(),
        target: target.unwrap_or(Target::None),
        minerals: ability.cost_minerals() * per,
        vespene: ability.cost_vespene() * per,
        supply,
        cells,
        geyser,
        tech,
    })
}

fn addon_under_construction(state: &GameState, u: &UnitRecord) -> bool {
    u.addon
        .and_then(|a| state.unit(a))
        .is_some_and(|a| !a.is_complete())
}

fn target_problem(
    player: PlayerId,
    ability: &AbilityDef,
    target: &UnitRecord,
) -> Option<&'static str> {
    let own = target.owner == Some(player);
    match &ability.effect {
        Effect::Attack => (target.owner != Some(player.opponent())).then_some("not an enemy unit"),
        Effect::Move => None,
        Effect::Gather => {
            let ok = target.kind == UnitKind::MineralField
                || own && target.kind.def().extractor && target.is_complete();
            (!ok).then_some("not a mineral field or own completed gas structure")
        }
        Effect::Repair => {
            if !own || !target.kind.is_structure() {
                Some("not an own structure")
            } else if !target.is_complete() {
                Some("structure is under construction")
            } else if target.health.current >= target.health.max {
                Some("structure is not damaged")
            } else {
                None
            }
        }
        Effect::ChronoBoost => {
            (!(own && target.kind.is_structure() && target.is_complete()))
                .then_some("not an own completed structure")
        }
        Effect::InjectLarva => {
            (!(own && target.kind == UnitKind::Hatchery && target.is_complete()))
                .then_some("not an own completed Hatchery")
        }
        Effect::Build(k) if k.def().extractor => {
            (target.kind != UnitKind::VespeneGeyser).then_some("not a vespene geyser")
        }
        _ => Some("this ability does not target units"),
    }
}

/// Conflicts between individually valid actions of one batch: overlapping
/// placements, one geyser claimed twice, one research started twice.
pub fn batch_conflicts(resolved: &[(usize, &Resolved)]) -> Vec<(usize, ActionError)> {
    let mut errors = Vec::new();
    let mut cells = BTreeSet::new();
    let mut geysers = BTreeSet::new();
    let mut techs = BTreeSet::new();
    for &(i, r) in resolved {
        if r.cells.iter().any(|c| cells.contains(c)) {
            if let (Some(kind), Some(&pos)) = (r.ability.produces(), r.cells.first()) {
                errors.push((i, ActionError::PlacementConflict { kind, pos }));
            }
        }
        cells.extend(r.cells.iter().copied());
        if let Some(g) = r.geyser {
            if !geysers.insert(g) {
                errors.push((i, ActionError::GeyserTaken(g)));
            }
        }
        if let Some(t) = &r.tech {
            if !techs.insert(t.clone()) {
                errors.push((i, ActionError::ResearchDone(t.clone())));
            }
        }
    }
    errors
}

/// Cost of one request as (minerals, vespene, supply), priced from the
/// ability table whether or not the request is otherwise valid.
pub fn request_cost(req: &ActionRequest) -> (u64, u64, u64) {
    let Some(a) = catalog().ability(&req.action) else {
        return (0, 0, 0);
    };
    let n = match a.effect {
        Effect::Build(_) | Effect::Research(_) => 1,
        _ => req.units.len() as u64,
    };
    (
        a.cost_minerals() as u64 * n,
        a.cost_vespene() as u64 * n,
        a.supply_delta() as u64 * n,
    )
}

/// Summed resource and supply feasibility of a whole batch.
pub fn batch_totals(state: &GameState, player: PlayerId, actions: &[ActionRequest]) -> Vec<ActionError> {
    let (mut minerals, mut vespene, mut supply) = (0, 0, 0);
    for a in actions {
        let (m, v, s) = request_cost(a);
        minerals += m;
        vespene += v;
        supply += s;
    }
    let ps = state.player(player);
    let mut errors = Vec::new();
    if minerals > ps.minerals as u64 {
        errors.push(ActionError::NotEnoughMinerals);
    }
    if vespene > ps.vespene as u64 {
        errors.push(ActionError::NotEnoughVespene);
    }
    if supply > 0 && (ps.supply_used() + ps.supply_pending) as u64 + supply > ps.supply_cap as u64 {
        errors.push(ActionError::NotEnoughSupply);
    }
    errors
}

/// Duplicate unit ids across actions of one batch, reported at the later action.
pub fn duplicate_units(actions: &[ActionRequest]) -> Vec<(usize, ActionError)> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, a) in actions.iter().enumerate() {
        let mut local = BTreeSet::new();
        for &u in &a.units {
            if local.insert(u) && !seen.insert(u) {
                out.push((i, ActionError::DuplicateUnit(UnitId(u))));
            }
        }
    }
    out
}
