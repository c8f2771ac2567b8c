//! Match runner, round-robin tournaments, replay verification and the
//! reporting commands behind the `arena` binary.

pub mod config;
pub mod error;
pub mod replay;
pub mod report;
pub mod runner;
pub mod tournament;

pub use config::{AgentKind, AgentSpec, BackendSpec, Mode, RunConfig};
pub use error::ArenaError;
pub use replay::{replay_verify, ReplayReport};
pub use runner::{run_match, run_match_to_dir, MatchSpec, MatchSummary, Seat};
pub use tournament::{run_tournament, TournamentReport};
