//! Output files shared by the subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use arena_core::metrics::{
    compute_metrics, metrics_csv, metrics_json, metrics_table, ranking_table, run_rating_pass, EloTable, MatchRecord,
    MetricsSummary,
};
use arena_core::trace::read_trajectory;

use crate::error::ArenaError;

pub fn write_file(path: &Path, body: &str) -> Result<(), ArenaError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| ArenaError::io(dir, e))?;
    }
    fs::write(path, body).map_err(|e| ArenaError::io(path, e))
}

/// `path` itself if it is a file, else the `*.jsonl` files below it.
pub fn trajectory_files(path: &Path) -> Result<Vec<PathBuf>, ArenaError> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut out = Vec::new();
    let mut stack = vec![path.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).map_err(|e| ArenaError::io(&dir, e))? {
            let p = entry.map_err(|e| ArenaError::io(&dir, e))?.path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x == "jsonl") {
                out.push(p);
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Match records of every finished trajectory under `path`.
pub fn load_records(path: &Path) -> Result<Vec<MatchRecord>, ArenaError> {
    let mut records = Vec::new();
    for p in trajectory_files(path)? {
        let file = fs::File::open(&p).map_err(|e| ArenaError::io(&p, e))?;
        let traj = read_trajectory(std::io::BufReader::new(file))
            .map_err(|e| ArenaError::Trajectory(format!("{}: {e}", p.display())))?;
        match traj.result {
            Some(r) => records.push(r.record),
            None => tracing::warn!(file = %p.display(), "trajectory has no result line, skipped"),
        }
    }
    Ok(records)
}

pub fn agents_of(records: &[MatchRecord]) -> Vec<String> {
    let mut names: Vec<String> = records.iter().flat_map(|r| r.agents.iter().cloned()).collect();
    names.sort();
    names.dedup();
    names
}

pub struct Reports {
    pub metrics: Vec<MetricsSummary>,
    pub elo: EloTable,
}

pub fn summarize(records: &[MatchRecord], seed: u64) -> Result<Reports, ArenaError> {
    let sim = |e: arena_core::metrics::MetricsError| ArenaError::Sim(e.to_string());
    let metrics = agents_of(records)
        .iter()
        .map(|a| compute_metrics(records, a))
        .collect::<Result<Vec<_>, _>>()
        .map_err(sim)?;
    let elo = run_rating_pass(records, seed).map_err(sim)?;
    Ok(Reports { metrics, elo })
}

/// Write metrics and leaderboard files into `dir`; returns the text shown
/// on the terminal.
pub fn write_reports(dir: &Path, metrics: &[MetricsSummary], elo: &EloTable) -> Result<String, ArenaError> {
    write_file(&dir.join("metrics.csv"), &metrics_csv(metrics))?;
    write_file(&dir.join("metrics.json"), &(metrics_json(metrics) + "\n"))?;
    write_file(&dir.join("leaderboard.csv"), &ranking_table(elo))?;
    let board = serde_json::to_string_pretty(&elo.ranking()).expect("ranking serializes");
    write_file(&dir.join("leaderboard.json"), &(board + "\n"))?;
    Ok(format!("{}\n{}", metrics_table(metrics), ranking_table(elo)))
}
