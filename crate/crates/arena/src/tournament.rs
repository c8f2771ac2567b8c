//! Round-robin tournaments over faction mirrors, rated with Elo.

use std::path::Path;

use arena_core::metrics::{EloTable, MetricsSummary};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{AgentSpec, RunConfig};
use crate::error::ArenaError;
use crate::report::{summarize, Reports};
use crate::runner::{run_match_to_dir, MatchSpec, MatchSummary};

/// Seed of one game, mixed from the run seed and the game's key.
pub fn game_seed(base: u64, pairing: usize, mirror: usize, rep: u32) -> u64 {
    let mut z = base
        ^ (pairing as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (mirror as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
        ^ (rep as u64).wrapping_mul(0x1656_67B1_9E37_79F9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Every game of the round robin, in key order. Seats alternate between
/// repetitions.
pub fn schedule(cfg: &RunConfig) -> Vec<MatchSpec> {
    let mut games = Vec::new();
    let n = cfg.agents.len();
    let pairs = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b)));
    for (pairing, (a, b)) in pairs.enumerate() {
        for (m, &faction) in cfg.mirrors.iter().enumerate() {
            for rep in 0..cfg.repetitions {
                let (first, second) = if rep % 2 == 0 { (a, b) } else { (b, a) };
                let seat = |i: usize| -> AgentSpec { cfg.agents[i].clone().with_faction(faction) };
                let mut game = cfg.game.clone();
                game.seed = game_seed(cfg.seed, pairing, m, rep);
                let id = format!(
                    "{}-vs-{}-{}-r{rep}",
                    cfg.agents[first].name,
                    cfg.agents[second].name,
                    faction.code()
                );
                games.push(MatchSpec::new(id, game, [seat(first), seat(second)]));
            }
        }
    }
    games
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TournamentReport {
    pub games: Vec<MatchSummary>,
    pub elo: EloTable,
    pub metrics: Vec<MetricsSummary>,
}

impl TournamentReport {
    pub fn leaderboard(&self) -> Vec<(String, f64)> {
        self.elo.ranking()
    }
}

/// Play the whole schedule on `jobs` threads. Results are merged in
/// schedule order, so the thread count never changes the outcome.
pub fn run_tournament(cfg: &RunConfig, dir: &Path) -> Result<TournamentReport, ArenaError> {
    if cfg.agents.len() < 2 {
        return Err(ArenaError::Config(format!(
            "a tournament needs at least 2 agents, got {}",
            cfg.agents.len()
        )));
    }
    let games = schedule(cfg);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| ArenaError::Config(format!("cannot start {} workers: {e}", cfg.jobs)))?;
    let traj_dir = dir.join("trajectories");
    let results: Vec<Result<MatchSummary, ArenaError>> =
        pool.install(|| games.par_iter().map(|g| run_match_to_dir(g, &traj_dir)).collect());
    let games = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let records: Vec<_> = games.iter().map(|g| g.record.clone()).collect();
    let Reports { metrics, elo } = summarize(&records, cfg.seed)?;
    Ok(TournamentReport { games, elo, metrics })
}
