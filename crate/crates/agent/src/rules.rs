//! Expert knowledge base for the planner and its verifier.

use arena_core::sim::data::{catalog, Effect};
use arena_core::sim::{Faction, GameState, PlayerId, Product, UnitKind, UnitRecord};
use serde::Deserialize;

const TERRAN: &str = include_str!("../data/rules_terran.toml");
const PROTOSS: &str = include_str!("../data/rules_protoss.toml");
const ZERG: &str = include_str!("../data/rules_zerg.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    Static,
    Conditional,
}

/// Predicate over the deciding player's view of the game.
///
/// Counts used by `fewer` include units under construction and queued
/// products, so a rule stops firing once its suggestion is under way.
/// `at_least` and `outnumbers` only count finished units.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Always,
    /// The rule refers to something the kernel does not model.
    Never,
    SupplyUnusedBelow(u32),
    MineralsAtLeast(u32),
    Fewer { kind: UnitKind, n: usize },
    AtLeast { kind: UnitKind, n: usize },
    FewerThan { kind: UnitKind, other: UnitKind },
    Outnumbers {
        kind: UnitKind,
        other: UnitKind,
        factor: usize,
        min: usize,
    },
    Idle(UnitKind),
    IdleWithoutAddon(UnitKind),
    /// Some finished production structure has an empty production list.
    IdleProduction,
    /// Some finished structure that needs power sits outside every field.
    Unpowered,
    EnergyFor(String),
    Morphing(UnitKind),
    NotResearched(String),
    All(Vec<Condition>),
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct Rule {
    pub id: u32,
    pub text: String,
    pub kind: RuleKind,
    #[serde(default = "always")]
    pub when: Condition,
}

fn always() -> Condition {
    Condition::Always
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct RuleBase {
    #[serde(rename = "rule")]
    pub rules: Vec<Rule>,
}

#[derive(Debug, thiserror::Error)]
pub enum RuleError {
    #[error("rule file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("rule {0}: static rules cannot carry a condition")]
    ConditionalStatic(u32),
}

impl RuleBase {
    pub fn parse(text: &str) -> Result<RuleBase, RuleError> {
        let base: RuleBase = toml::from_str(text)?;
        if let Some(r) = base
            .rules
            .iter()
            .find(|r| r.kind == RuleKind::Static && r.when != Condition::Always)
        {
            return Err(RuleError::ConditionalStatic(r.id));
        }
        Ok(base)
    }

    /// The bundled rule set of a faction.
    pub fn for_faction(faction: Faction) -> RuleBase {
        let text = match faction {
            Faction::Terran => TERRAN,
            Faction::Protoss => PROTOSS,
            Faction::Zerg => ZERG,
        };
        RuleBase::parse(text).expect("bundled rule files are valid")
    }
}

struct View<'a> {
    state: &'a GameState,
    player: PlayerId,
}

impl View<'_> {
    fn own(&self) -> impl Iterator<Item = &UnitRecord> {
        self.state.own_units(self.player)
    }

    fn finished(&self, kind: UnitKind) -> usize {
        self.own()
            .filter(|u| u.kind == kind && u.construction.is_none())
            .count()
    }

    fn planned(&self, kind: UnitKind) -> usize {
        let live = self.own().filter(|u| u.kind == kind).count();
        let queued = self
            .own()
            .flat_map(|u| &u.queue)
            .filter(|q| q.product == Product::Unit(kind))
            .count();
        live + queued
    }

    fn idle(&self, kind: UnitKind, need_no_addon: bool) -> bool {
        self.own().any(|u| {
            u.kind == kind
                && u.construction.is_none()
                && u.queue.is_empty()
                && (!need_no_addon || u.addon.is_none())
        })
    }

    fn holds(&self, c: &Condition) -> bool {
        match c {
            Condition::Always => true,
            Condition::Never => false,
            Condition::SupplyUnusedBelow(n) => self.state.player(self.player).supply_unused < *n,
            Condition::MineralsAtLeast(n) => self.state.player(self.player).minerals >= *n,
            Condition::Fewer { kind, n } => self.planned(*kind) < *n,
            Condition::AtLeast { kind, n } => self.finished(*kind) >= *n,
            Condition::FewerThan { kind, other } => self.planned(*kind) < self.finished(*other),
            Condition::Outnumbers {
                kind,
                other,
                factor,
                min,
            } => {
                let a = self.finished(*kind);
                a >= *min && a >= factor * self.finished(*other)
            }
            Condition::Idle(kind) => self.idle(*kind, false),
            Condition::IdleWithoutAddon(kind) => self.idle(*kind, true),
            Condition::IdleProduction => {
                let producers: Vec<UnitKind> = catalog()
                    .abilities()
                    .iter()
                    .filter(|a| matches!(a.effect, Effect::Train(_)))
                    .flat_map(|a| a.users.iter().copied())
                    .filter(|k| k.is_structure())
                    .collect();
                self.own().any(|u| {
                    producers.contains(&u.kind) && u.construction.is_none() && u.queue.is_empty()
                })
            }
            Condition::Unpowered => self.own().any(|u| {
                u.construction.is_none()
                    && u.kind.def().needs_power
                    && !self.state.is_powered(self.player, u.pos)
            }),
            Condition::EnergyFor(name) => {
                let Some(ability) = catalog().ability(name) else {
                    return false;
                };
                self.own().any(|u| {
                    ability.users.contains(&u.kind)
                        && u.construction.is_none()
                        && u.energy.current >= ability.energy
                })
            }
            Condition::Morphing(kind) => self.own().any(|u| {
                u.kind == UnitKind::Egg && u.queue.iter().any(|q| q.product == Product::Unit(*kind))
            }),
            Condition::NotResearched(tech) => {
                let done = self.state.player(self.player).tech_flags.contains(tech);
                let pending = self
                    .own()
                    .flat_map(|u| &u.queue)
                    .any(|q| matches!(&q.product, Product::Research(t) if t == tech));
                !done && !pending
            }
            Condition::All(cs) => cs.iter().all(|c| self.holds(c)),
        }
    }
}

pub fn condition_holds(state: &GameState, player: PlayerId, condition: &Condition) -> bool {
    View { state, player }.holds(condition)
}

/// Static rules plus the conditional rules that currently hold, in rule
/// base order.
pub fn active_rules<'a>(state: &GameState, player: PlayerId, base: &'a RuleBase) -> Vec<&'a Rule> {
    let view = View { state, player };
    base.rules
        .iter()
        .filter(|r| r.kind == RuleKind::Static || view.holds(&r.when))
        .collect()
}

/// Numbered list for the prompt; numbering follows the active list.
pub fn format_rules<'a>(rules: impl IntoIterator<Item = &'a Rule>) -> String {
    rules
        .into_iter()
        .enumerate()
        .map(|(i, r)| format!("{}. {}", i + 1, r.text))
        .collect::<Vec<_>>()
        .join("\n")
}
