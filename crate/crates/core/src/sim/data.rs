//! Static unit and ability tables.
//!
//! The tables live in `data/factions.toml` and are parsed once on first use.

use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

const FACTIONS_TOML: &str = include_str!("../../data/factions.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Faction {
    #[serde(alias = "F1")]
    Terran,
    #[serde(alias = "F2")]
    Zerg,
    #[serde(alias = "F3")]
    Protoss,
}

impl Faction {
    pub const ALL: [Faction; 3] = [Faction::Terran, Faction::Zerg, Faction::Protoss];

    pub fn name(self) -> &'static str {
        match self {
            Faction::Terran => "Terran",
            Faction::Zerg => "Zerg",
            Faction::Protoss => "Protoss",
        }
    }

    /// Short faction id (`F1`..`F3`).
    pub fn code(self) -> &'static str {
        match self {
            Faction::Terran => "F1",
            Faction::Zerg => "F2",
            Faction::Protoss => "F3",
        }
    }

    pub fn worker(self) -> UnitKind {
        match self {
            Faction::Terran => UnitKind::SCV,
            Faction::Zerg => UnitKind::Drone,
            Faction::Protoss => UnitKind::Probe,
        }
    }

    pub fn headquarters(self) -> UnitKind {
        match self {
            Faction::Terran => UnitKind::CommandCenter,
            Faction::Zerg => UnitKind::Hatchery,
            Faction::Protoss => UnitKind::Nexus,
        }
    }

    /// The unit or structure that raises the supply cap.
    pub fn supply_provider(self) -> UnitKind {
        match self {
            Faction::Terran => UnitKind::SupplyDepot,
            Faction::Zerg => UnitKind::Overlord,
            Faction::Protoss => UnitKind::Pylon,
        }
    }

    pub fn extractor(self) -> UnitKind {
        match self {
            Faction::Terran => UnitKind::Refinery,
            Faction::Zerg => UnitKind::Extractor,
            Faction::Protoss => UnitKind::Assimilator,
        }
    }
}

impl fmt::Display for Faction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[allow(clippy::upper_case_acronyms)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UnitKind {
    MineralField,
    VespeneGeyser,
    SCV,
    Marine,
    Marauder,
    CommandCenter,
    SupplyDepot,
    Refinery,
    Barracks,
    BarracksTechLab,
    Drone,
    Overlord,
    Zergling,
    Roach,
    Queen,
    Egg,
    Hatchery,
    Extractor,
    SpawningPool,
    RoachWarren,
    Probe,
    Zealot,
    Stalker,
    Sentry,
    Adept,
    Nexus,
    Pylon,
    Assimilator,
    Gateway,
    CyberneticsCore,
}

impl UnitKind {
    pub const COUNT: usize = 30;

    pub fn def(self) -> &'static UnitDef {
        &catalog().units[self as usize]
    }

    pub fn name(self) -> &'static str {
        match self {
            UnitKind::MineralField => "MineralField",
            UnitKind::VespeneGeyser => "VespeneGeyser",
            UnitKind::SCV => "SCV",
            UnitKind::Marine => "Marine",
            UnitKind::Marauder => "Marauder",
            UnitKind::CommandCenter => "CommandCenter",
            UnitKind::SupplyDepot => "SupplyDepot",
            UnitKind::Refinery => "Refinery",
            UnitKind::Barracks => "Barracks",
            UnitKind::BarracksTechLab => "BarracksTechLab",
            UnitKind::Drone => "Drone",
            UnitKind::Overlord => "Overlord",
            UnitKind::Zergling => "Zergling",
            UnitKind::Roach => "Roach",
            UnitKind::Queen => "Queen",
            UnitKind::Egg => "Egg",
            UnitKind::Hatchery => "Hatchery",
            UnitKind::Extractor => "Extractor",
            UnitKind::SpawningPool => "SpawningPool",
            UnitKind::RoachWarren => "RoachWarren",
            UnitKind::Probe => "Probe",
            UnitKind::Zealot => "Zealot",
            UnitKind::Stalker => "Stalker",
            UnitKind::Sentry => "Sentry",
            UnitKind::Adept => "Adept",
            UnitKind::Nexus => "Nexus",
            UnitKind::Pylon => "Pylon",
            UnitKind::Assimilator => "Assimilator",
            UnitKind::Gateway => "Gateway",
            UnitKind::CyberneticsCore => "CyberneticsCore",
        }
    }

    pub fn role(self) -> Role {
        self.def().role
    }

    pub fn is_structure(self) -> bool {
        self.def().role == Role::Structure
    }

    pub fn is_resource(self) -> bool {
        self.def().role == Role::Resource
    }

    pub fn is_worker(self) -> bool {
        self.def().role == Role::Worker
    }

    pub fn is_army(self) -> bool {
        self.def().role == Role::Army
    }

    /// Structures and resource nodes occupy cells; everything else is mobile.
    pub fn blocks_cells(self) -> bool {
        matches!(self.def().role, Role::Structure | Role::Resource)
    }
}

impl fmt::Display for UnitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Worker,
    Army,
    Support,
    Structure,
    Resource,
    Egg,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weapon {
    pub damage: u32,
    pub range: f64,
    pub cooldown: u32,
}

#[derive(Debug, Clone, Deserialize)]
pub struct UnitDef {
    pub kind: UnitKind,
    #[serde(default)]
    pub faction: Option<Faction>,
    pub role: Role,
    #[serde(default)]
    pub headquarters: bool,
    #[serde(default)]
    pub extractor: bool,
    #[serde(default)]
    pub addon: bool,
    #[serde(default)]
    pub needs_power: bool,
    pub health: u32,
    #[serde(default)]
    pub shield: u32,
    #[serde(default)]
    pub energy: u32,
    #[serde(default)]
    pub start_energy: u32,
    #[serde(default)]
    pub weapon: Option<Weapon>,
    #[serde(default)]
    pub move_period: u32,
    pub sight: u32,
    #[serde(default)]
    pub radius: i32,
    #[serde(default)]
    pub supply: u32,
    #[serde(default)]
    pub supply_provided: u32,
    #[serde(default)]
    pub minerals: u32,
    #[serde(default)]
    pub vespene: u32,
    #[serde(default)]
    pub build_time: u32,
    #[serde(default)]
    pub resources: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    None,
    Point,
    Unit,
    PointOrUnit,
}

impl TargetKind {
    /// Signature name as printed in ability descriptions.
    pub fn label(self) -> &'static str {
        match self {
            TargetKind::None => "None",
            TargetKind::Point => "Point",
            TargetKind::Unit => "Unit",
            TargetKind::PointOrUnit => "PointOrUnit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Research {
    pub tech: String,
    pub minerals: u32,
    pub vespene: u32,
    pub time: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Effect {
    Move,
    Attack,
    Gather,
    Repair,
    ChronoBoost,
    InjectLarva,
    Build(UnitKind),
    Train(UnitKind),
    Larva(UnitKind),
    Addon(UnitKind),
    Research(Research),
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prerequisite {
    /// A completed structure of this kind owned by the player.
    Structure(UnitKind),
    /// A completed add-on of this kind attached to the commanded structure.
    Addon(UnitKind),
    /// A researched technology flag.
    Tech(String),
}

#[derive(Debug, Clone, Deserialize)]
pub struct AbilityDef {
    pub name: String,
    #[serde(default)]
    pub faction: Option<Faction>,
    pub target: TargetKind,
    pub effect: Effect,
    pub users: Vec<UnitKind>,
    #[serde(default)]
    pub requires: Option<Prerequisite>,
    #[serde(default)]
    pub energy: u32,
    /// Automation-only abilities are accepted but never printed.
    #[serde(default)]
    pub automation: bool,
    pub description: String,
}

impl AbilityDef {
    pub fn cost_minerals(&self) -> u32 {
        match &self.effect {
            Effect::Build(k) | Effect::Train(k) | Effect::Larva(k) | Effect::Addon(k) => {
                k.def().minerals
            }
            Effect::Research(r) => r.minerals,
            _ => 0,
        }
    }

    pub fn cost_vespene(&self) -> u32 {
        match &self.effect {
            Effect::Build(k) | Effect::Train(k) | Effect::Larva(k) | Effect::Addon(k) => {
                k.def().vespene
            }
            Effect::Research(r) => r.vespene,
            _ => 0,
        }
    }

    /// Supply consumed once the produced unit starts.
    pub fn supply_delta(&self) -> u32 {
        match &self.effect {
            Effect::Train(k) | Effect::Larva(k) => k.def().supply,
            _ => 0,
        }
    }

    pub fn produces(&self) -> Option<UnitKind> {
        match &self.effect {
            Effect::Build(k) | Effect::Train(k) | Effect::Larva(k) | Effect::Addon(k) => Some(*k),
            _ => None,
        }
    }

    pub fn build_time(&self) -> u32 {
        match &self.effect {
            Effect::Research(r) => r.time,
            _ => self.produces().map(|k| k.def().build_time).unwrap_or(0),
        }
    }

    pub fn available_to(&self, faction: Faction) -> bool {
        self.faction.is_none_or(|f| f == faction)
    }

    /// Rendered cost suffix, e.g. `Cost: 125 minerals, 50 vespene.`
    pub fn cost_text(&self) -> Option<String> {
        let (m, v) = (self.cost_minerals(), self.cost_vespene());
        match (m, v) {
            (0, 0) => None,
            (m, 0) => Some(format!("Cost: {m} minerals.")),
            (0, v) => Some(format!("Cost: {v} vespene.")),
            (m, v) => Some(format!("Cost: {m} minerals, {v} vespene.")),
        }
    }
}

#[derive(Debug, Deserialize)]
struct RawCatalog {
    unit: Vec<UnitDef>,
    ability: Vec<AbilityDef>,
}

/// Parsed unit and ability tables.
#[derive(Debug)]
pub struct Catalog {
    units: Vec<UnitDef>,
    abilities: Vec<AbilityDef>,
    by_name: HashMap<String, usize>,
}

impl Catalog {
    fn load() -> Catalog {
        let raw: RawCatalog =
            toml::from_str(FACTIONS_TOML).expect("data/factions.toml must parse");
        let mut units: Vec<Option<UnitDef>> = vec![None; UnitKind::COUNT];
        for def in raw.unit {
            let idx = def.kind as usize;
            assert!(units[idx].is_none(), "duplicate unit kind {:?}", def.kind);
            units[idx] = Some(def);
        }
        let units: Vec<UnitDef> = units
            .into_iter()
            .enumerate()
            .map(|(i, d)| d.unwrap_or_else(|| panic!("unit kind #{i} missing from table")))
            .collect();
        let mut by_name = HashMap::new();
        for (i, a) in raw.ability.iter().enumerate() {
            let prev = by_name.insert(a.name.clone(), i);
            assert!(prev.is_none(), "duplicate ability {}", a.name);
        }
        Catalog {
            units,
            abilities: raw.ability,
            by_name,
        }
    }

    pub fn ability(&self, name: &str) -> Option<&AbilityDef> {
        self.by_name.get(name).map(|&i| &self.abilities[i])
    }

    /// All abilities in table order.
    pub fn abilities(&self) -> &[AbilityDef] {
        &self.abilities
    }

    pub fn ability_index(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn units(&self) -> &[UnitDef] {
        &self.units
    }
}

pub fn catalog() -> &'static Catalog {
    static CATALOG: OnceLock<Catalog> = OnceLock::new();
    CATALOG.get_or_init(Catalog::load)
}

/// Ability names usable by `kind` for `faction`, in table order, ignoring
/// prerequisites.
pub fn abilities_of(kind: UnitKind) -> impl Iterator<Item = &'static AbilityDef> {
    catalog()
        .abilities()
        .iter()
        .filter(move |a| a.users.contains(&kind))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_kind_has_a_definition() {
        let cat = catalog();
        for (i, def) in cat.units().iter().enumerate() {
            assert_eq!(def.kind as usize, i);
        }
    }

    #[test]
    fn protoss_costs_match_printed_values() {
        let cat = catalog();
        let cost = |n: &str| {
            let a = cat.ability(n).unwrap();
            (a.cost_minerals(), a.cost_vespene())
        };
        assert_eq!(cost("NEXUSTRAIN_PROBE"), (50, 0));
        assert_eq!(cost("GATEWAYTRAIN_ZEALOT"), (100, 0));
        assert_eq!(cost("GATEWAYTRAIN_STALKER"), (125, 50));
        assert_eq!(cost("GATEWAYTRAIN_SENTRY"), (50, 100));
        assert_eq!(cost("TRAIN_ADEPT"), (100, 25));
        assert_eq!(cost("PROTOSSBUILD_PYLON"), (100, 0));
        assert_eq!(cost("PROTOSSBUILD_GATEWAY"), (150, 0));
        assert_eq!(cost("PROTOSSBUILD_NEXUS"), (400, 0));
        assert_eq!(cost("PROTOSSBUILD_ASSIMILATOR"), (75, 0));
        assert_eq!(cost("PROTOSSBUILD_CYBERNETICSCORE"), (150, 0));
    }

    #[test]
    fn cost_text_formats() {
        let cat = catalog();
        assert_eq!(
            cat.ability("GATEWAYTRAIN_STALKER").unwrap().cost_text().as_deref(),
            Some("Cost: 125 minerals, 50 vespene.")
        );
        assert_eq!(cat.ability("ATTACK_ATTACK").unwrap().cost_text(), None);
    }

    #[test]
    fn ability_users_belong_to_the_ability_faction() {
        for a in catalog().abilities() {
            for u in &a.users {
                if let Some(f) = a.faction {
                    assert_eq!(u.def().faction, Some(f), "{} used by {u}", a.name);
                }
            }
        }
    }

    #[test]
    fn faction_aliases_parse() {
        let f: Faction = serde_json::from_str("\"F3\"").unwrap();
        assert_eq!(f, Faction::Protoss);
        let f: Faction = serde_json::from_str("\"zerg\"").unwrap();
        assert_eq!(f, Faction::Zerg);
    }
}
