//! Trajectory files: one JSON object per line, a header, one line per tick
//! and a closing result line.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::dataset::MetricVector;
use crate::metrics::MatchRecord;
use crate::protocol::{ActionRequest, ValidationReport};
use crate::sim::{Faction, MatchConfig, Outcome, PlayerId};

pub const TRACE_FORMAT: &str = "arena-trajectory/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentInfo {
    pub name: String,
    pub kind: String,
    pub faction: Faction,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub tokens_in: u64,
    pub tokens_out: u64,
}

/// Parsed answer of the plan verifier.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanReport {
    pub analysis: String,
    pub errors: Vec<String>,
    pub error_number: usize,
    /// Set when the verifier answer could not be read and was waved through.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl PlanReport {
    pub fn is_accepted(&self) -> bool {
        self.error_number == 0
    }

    pub fn feedback(&self) -> String {
        self.errors.join("\n")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanRound {
    pub prompt: String,
    pub output: String,
    /// Absent when no command list could be extracted.
    pub commands: Option<Vec<String>>,
    pub verifier_output: Option<String>,
    pub report: PlanReport,
    pub usage: Vec<Usage>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecRound {
    pub prompt: String,
    pub output: String,
    pub report: ValidationReport,
    pub usage: Vec<Usage>,
}

/// Everything one agent decision produced.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionTrace {
    pub tick: u64,
    pub observation: String,
    pub planner: Vec<PlanRound>,
    pub executor: Vec<ExecRound>,
    /// Batch submitted for this decision: the last executor output.
    pub actions: Vec<ActionRequest>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl DecisionTrace {
    pub fn tokens_out(&self) -> u64 {
        let plan = self.planner.iter().flat_map(|r| &r.usage);
        let exec = self.executor.iter().flat_map(|r| &r.usage);
        plan.chain(exec).map(|u| u.tokens_out).sum()
    }

    pub fn final_plan(&self) -> Option<&PlanRound> {
        self.planner.last()
    }

    pub fn final_execution(&self) -> Option<&ExecRound> {
        self.executor.last()
    }

    /// A decision is valid when its submitted batch passed validation. An
    /// accepted empty plan needs no executor round and counts as valid.
    pub fn is_valid(&self) -> bool {
        match self.executor.last() {
            Some(r) => r.report.is_accepted(),
            None => self
                .planner
                .last()
                .is_some_and(|p| {
                    p.report.is_accepted() && p.commands.as_ref().is_some_and(Vec::is_empty)
                }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeatDecision {
    pub player: PlayerId,
    /// Scoring metrics of the deciding player at this tick.
    pub metrics: MetricVector,
    pub trace: DecisionTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TraceLine {
    Header {
        format: String,
        kernel: String,
        match_id: String,
        config: MatchConfig,
        agents: [AgentInfo; 2],
    },
    Tick {
        tick: u64,
        actions: [Vec<ActionRequest>; 2],
        /// State digest after the tick was applied.
        digest: String,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        decisions: Vec<SeatDecision>,
    },
    Result {
        outcome: Outcome,
        record: MatchRecord,
        #[serde(default)]
        degraded: [bool; 2],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickLine {
    pub tick: u64,
    pub actions: [Vec<ActionRequest>; 2],
    pub digest: String,
    pub decisions: Vec<SeatDecision>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub outcome: Outcome,
    pub record: MatchRecord,
    pub degraded: [bool; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub match_id: String,
    pub kernel: String,
    pub config: MatchConfig,
    pub agents: [AgentInfo; 2],
    pub ticks: Vec<TickLine>,
    pub result: Option<MatchResult>,
}

impl Trajectory {
    /// Decisions of one seat in tick order.
    pub fn decisions_of(&self, player: PlayerId) -> impl Iterator<Item = &SeatDecision> {
        self.ticks
            .iter()
            .flat_map(|t| &t.decisions)
            .filter(move |d| d.player == player)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

fn parse_error(line: usize, message: impl Into<String>) -> TraceError {
    TraceError::Parse {
        line,
        message: message.into(),
    }
}

/// Streams trajectory lines to any writer.
pub struct TrajectoryWriter<W: Write> {
    out: W,
}

impl<W: Write> TrajectoryWriter<W> {
    pub fn new(out: W) -> Self {
        TrajectoryWriter { out }
    }

    pub fn write(&mut self, line: &TraceLine) -> std::io::Result<()> {
        serde_json::to_writer(&mut self.out, line)?;
        self.out.write_all(b"\n")
    }

    pub fn flush(&mut self) -> std::io::Result<()> {
        self.out.flush()
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

/// Parse a whole trajectory. Line numbers in errors are 1-based.
pub fn read_trajectory(input: impl BufRead) -> Result<Trajectory, TraceError> {
    let mut header = None;
    let mut ticks = Vec::new();
    let mut result = None;
    for (i, line) in input.lines().enumerate() {
        let n = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: TraceLine =
            serde_json::from_str(&line).map_err(|e| parse_error(n, e.to_string()))?;
        match parsed {
            TraceLine::Header {
                format,
                kernel,
                match_id,
                config,
                agents,
            } => {
                if header.is_some() {
                    return Err(parse_error(n, "second header"));
                }
                if format != TRACE_FORMAT {
                    return Err(parse_error(n, format!("unsupported format {format}")));
                }
                header = Some((match_id, kernel, config, agents));
            }
            TraceLine::Tick {
                tick,
                actions,
                digest,
                decisions,
            } => {
                if header.is_none() {
                    return Err(parse_error(n, "tick before header"));
                }
                if result.is_some() {
                    return Err(parse_error(n, "tick after result"));
                }
                if let Some(prev) = ticks.last().map(|t: &TickLine| t.tick) {
                    if tick <= prev {
                        return Err(parse_error(n, format!("tick {tick} does not follow {prev}")));
                    }
                }
                ticks.push(TickLine {
                    tick,
                    actions,
                    digest,
                    decisions,
                });
            }
            TraceLine::Result {
                outcome,
                record,
                degraded,
            } => {
                if header.is_none() {
                    return Err(parse_error(n, "result before header"));
                }
                result = Some(MatchResult {
                    outcome,
                    record,
                    degraded,
                });
            }
        }
    }
    let (match_id, kernel, config, agents) =
        header.ok_or_else(|| parse_error(1, "missing header"))?;
    Ok(Trajectory {
        match_id,
        kernel,
        config,
        agents,
        ticks,
        result,
    })
}
