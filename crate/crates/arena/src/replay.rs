//! Re-simulate a trajectory and compare state digests tick by tick.

use std::io::BufRead;
use std::path::Path;

use arena_core::sim::{create_match, outcome, step, KERNEL_VERSION};
use arena_core::trace::{read_trajectory, Trajectory};
use serde::{Deserialize, Serialize};

use crate::error::ArenaError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Divergence {
    pub tick: u64,
    pub expected: String,
    pub actual: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub match_id: String,
    pub ticks_checked: u64,
    pub divergence: Option<Divergence>,
}

impl ReplayReport {
    pub fn is_ok(&self) -> bool {
        self.divergence.is_none()
    }
}

pub fn replay_trajectory(traj: &Trajectory) -> Result<ReplayReport, ArenaError> {
    if traj.kernel != KERNEL_VERSION {
        tracing::warn!(recorded = %traj.kernel, running = KERNEL_VERSION, "kernel version differs");
    }
    let mut state = create_match(traj.config.clone()).map_err(|e| ArenaError::Trajectory(e.to_string()))?;
    let mut report = ReplayReport {
        match_id: traj.match_id.clone(),
        ticks_checked: 0,
        divergence: None,
    };
    for line in &traj.ticks {
        if line.tick != state.tick {
            report.divergence = Some(Divergence {
                tick: state.tick,
                expected: format!("tick {}", state.tick),
                actual: format!("tick {}", line.tick),
            });
            return Ok(report);
        }
        step(&mut state, [&line.actions[0], &line.actions[1]]);
        let actual = state.digest_hex();
        if actual != line.digest {
            report.divergence = Some(Divergence {
                tick: line.tick,
                expected: line.digest.clone(),
                actual,
            });
            return Ok(report);
        }
        report.ticks_checked += 1;
    }
    if let Some(result) = &traj.result {
        // A forfeit ends a game that the kernel still sees as running.
        let replayed = outcome(&state);
        if result.record.ticks != state.tick {
            report.divergence = Some(Divergence {
                tick: state.tick,
                expected: format!("{} ticks", result.record.ticks),
                actual: format!("{} ticks", state.tick),
            });
        } else if replayed != arena_core::sim::Outcome::Ongoing && replayed != result.outcome {
            report.divergence = Some(Divergence {
                tick: state.tick,
                expected: format!("{:?}", result.outcome),
                actual: format!("{replayed:?}"),
            });
        }
    }
    Ok(report)
}

pub fn replay_reader(input: impl BufRead) -> Result<ReplayReport, ArenaError> {
    let traj = read_trajectory(input).map_err(|e| ArenaError::Trajectory(e.to_string()))?;
    replay_trajectory(&traj)
}

pub fn replay_verify(path: &Path) -> Result<ReplayReport, ArenaError> {
    let file = std::fs::File::open(path).map_err(|e| ArenaError::io(path, e))?;
    replay_reader(std::io::BufReader::new(file))
}
