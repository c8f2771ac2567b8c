//! Deterministic two-player real-time strategy kernel.

pub mod check;
pub mod data;
pub mod policy;
pub mod state;
pub mod step;
pub mod types;

pub use check::{legal_abilities, ActionError, Stage};
pub use data::{catalog, AbilityDef, Faction, Role, TargetKind, UnitKind};
pub use policy::{auto_micro, builtin_policy, policy_round};
pub use state::{create_match, empty_match, outcome, ConfigError, GameState, MatchConfig, Outcome, KERNEL_VERSION};
pub use step::step;
pub use types::{Event, Order, PlayerId, PlayerState, Pos, Product, UnitId, UnitRecord, UnitState};
