//! One match from setup to result, streamed to a trajectory file.

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use arena_agent::backend::{ChatBackend, HttpBackend, MockBackend, OfflineBackend, Retrying};
use arena_agent::{DecisionClock, LlmAgent, Pipeline, ScriptedModel, TickActions};
use arena_core::dataset::metric_values;
use arena_core::metrics::{DecisionStat, MatchRecord, SeatSeries, Winner};
use arena_core::sim::{
    auto_micro, builtin_policy, create_match, outcome, policy_round, step, Event, GameState, MatchConfig, Outcome,
    PlayerId, KERNEL_VERSION,
};
use arena_core::trace::{AgentInfo, SeatDecision, TraceLine, TrajectoryWriter, TRACE_FORMAT};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{AgentKind, AgentSpec, BackendSpec};
use crate::error::ArenaError;

pub fn make_backend(spec: &BackendSpec) -> Result<Arc<dyn ChatBackend>, ArenaError> {
    Ok(match spec {
        BackendSpec::Scripted => Arc::new(ScriptedModel),
        BackendSpec::Offline => Arc::new(OfflineBackend),
        BackendSpec::Mock { path, scripted_fallback } => {
            let mock = MockBackend::load(path)
                .map_err(|e| ArenaError::Backend(format!("cannot load canned answers {}: {e}", path.display())))?;
            if *scripted_fallback {
                Arc::new(mock.with_fallback(ScriptedModel))
            } else {
                Arc::new(mock)
            }
        }
        BackendSpec::Http(h) => Arc::new(Retrying::new(HttpBackend::new(h.http.clone()), h.retry)),
    })
}

/// Whoever occupies one seat.
pub enum Seat {
    Builtin { level: u8 },
    Scripted { level: u8, clock: DecisionClock },
    Model(LlmAgent),
}

impl Seat {
    pub fn new(spec: &AgentSpec, player: PlayerId, state: &GameState) -> Result<Seat, ArenaError> {
        let pipeline = match spec.kind {
            AgentKind::Builtin => return Ok(Seat::Builtin { level: spec.level }),
            AgentKind::Scripted => {
                return Ok(Seat::Scripted {
                    level: spec.level,
                    clock: DecisionClock::default(),
                })
            }
            AgentKind::Hierarchical => Pipeline::Hierarchical,
            AgentKind::Naive => Pipeline::Naive,
        };
        let backend = make_backend(&spec.backend)?;
        let agent = LlmAgent::new(pipeline, player, state, backend, spec.params.clone()).with_max_rounds(spec.max_rounds);
        Ok(Seat::Model(agent))
    }

    pub fn act(&mut self, state: &GameState, player: PlayerId) -> TickActions {
        let actions = match self {
            Seat::Model(agent) => return agent.act(state),
            Seat::Builtin { level } => builtin_policy(state, player, *level),
            Seat::Scripted { level, clock } => {
                if clock.poll(state.tick, state.player(player).minerals) {
                    policy_round(state, player, *level)
                } else {
                    auto_micro(state, player)
                }
            }
        };
        TickActions {
            actions,
            decision: None,
        }
    }

    pub fn degraded(&self) -> bool {
        matches!(self, Seat::Model(a) if a.degraded())
    }
}

/// Everything needed to play one game.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchSpec {
    pub match_id: String,
    pub config: MatchConfig,
    pub agents: [AgentSpec; 2],
}

impl MatchSpec {
    /// Per-seat factions and built-in levels come from the agents.
    pub fn new(match_id: impl Into<String>, mut config: MatchConfig, agents: [AgentSpec; 2]) -> MatchSpec {
        config.factions = agents
            .iter()
            .zip(config.factions.iter().copied().chain(std::iter::repeat(arena_core::sim::Faction::Protoss)))
            .map(|(a, f)| a.faction.unwrap_or(f))
            .collect();
        config.builtin_difficulty = agents
            .iter()
            .map(|a| (a.kind == AgentKind::Builtin).then_some(a.level))
            .collect();
        MatchSpec {
            match_id: match_id.into(),
            config,
            agents,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchSummary {
    pub match_id: String,
    pub outcome: Outcome,
    pub record: MatchRecord,
    pub degraded: [bool; 2],
    /// Seat that crashed and forfeited the game.
    pub forfeit: Option<PlayerId>,
    /// SHA-256 of the trajectory bytes.
    pub trajectory_sha256: String,
    pub final_digest: String,
}

/// Forwards writes and hashes everything that passes through.
struct Hashing<W> {
    inner: W,
    hasher: Sha256,
}

impl<W: Write> Write for Hashing<W> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.hasher.update(&buf[..n]);
        Ok(n)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

fn winner_of(outcome: Outcome) -> Winner {
    match outcome {
        Outcome::Win(p) if p == PlayerId::ONE => Winner::First,
        Outcome::Win(_) => Winner::Second,
        _ => Winner::Tie,
    }
}

fn panic_text(payload: &(dyn std::any::Any + Send)) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".into())
}

/// Play one match and stream its trajectory to `out`. A seat that panics
/// forfeits; the game ends on the spot with the other seat as winner.
pub fn run_match<W: Write>(spec: &MatchSpec, out: W) -> Result<MatchSummary, ArenaError> {
    let (state, seats) = seat_up(spec)?;
    play(spec, state, seats, out)
}

fn seat_up(spec: &MatchSpec) -> Result<(GameState, [Seat; 2]), ArenaError> {
    let state = create_match(spec.config.clone()).map_err(|e| ArenaError::Config(e.to_string()))?;
    let seats = [
        Seat::new(&spec.agents[0], PlayerId::ONE, &state)?,
        Seat::new(&spec.agents[1], PlayerId::TWO, &state)?,
    ];
    Ok((state, seats))
}

/// The game loop over already seated agents.
pub fn play<W: Write>(
    spec: &MatchSpec,
    mut state: GameState,
    mut seats: [Seat; 2],
    out: W,
) -> Result<MatchSummary, ArenaError> {
    let mut writer = TrajectoryWriter::new(Hashing {
        inner: out,
        hasher: Sha256::new(),
    });
    let io = |e: std::io::Error| ArenaError::Io {
        path: format!("<trajectory {}>", spec.match_id).into(),
        source: e,
    };
    let agents = [0, 1].map(|i| AgentInfo {
        name: spec.agents[i].name.clone(),
        kind: spec.agents[i].kind.name().to_string(),
        faction: state.config.factions[i],
    });
    writer
        .write(&TraceLine::Header {
            format: TRACE_FORMAT.to_string(),
            kernel: KERNEL_VERSION.to_string(),
            match_id: spec.match_id.clone(),
            config: state.config.clone(),
            agents,
        })
        .map_err(io)?;

    let mut series: [SeatSeries; 2] = Default::default();
    let mut forfeit = None;
    'game: while outcome(&state) == Outcome::Ongoing {
        let mut batches: [Vec<_>; 2] = Default::default();
        let mut decisions = Vec::new();
        for p in PlayerId::both() {
            let i = p.index();
            let acted = catch_unwind(AssertUnwindSafe(|| seats[i].act(&state, p)));
            let acted = match acted {
                Ok(a) => a,
                Err(payload) => {
                    tracing::error!(
                        match_id = %spec.match_id,
                        agent = %spec.agents[i].name,
                        tick = state.tick,
                        "agent crashed, game forfeited: {}",
                        panic_text(payload.as_ref())
                    );
                    forfeit = Some(p);
                    break 'game;
                }
            };
            if let Some(trace) = acted.decision {
                series[i].decisions.push(DecisionStat {
                    tokens_out: trace.tokens_out(),
                    valid: trace.is_valid(),
                });
                decisions.push(SeatDecision {
                    player: p,
                    metrics: metric_values(&state, p),
                    trace,
                });
            }
            batches[i] = acted.actions;
        }
        let tick = state.tick;
        let events = step(&mut state, [&batches[0], &batches[1]]);
        let mut spent = [(0u32, 0u32); 2];
        for e in &events {
            if let Event::Cost {
                player,
                minerals,
                vespene,
                ..
            } = e
            {
                let s = &mut spent[player.index()];
                s.0 += minerals;
                s.1 += vespene;
            }
        }
        for p in PlayerId::both() {
            let s = &mut series[p.index()];
            s.minerals_spent.push(spent[p.index()].0);
            s.vespene_spent.push(spent[p.index()].1);
            s.supply_capped.push(state.player(p).supply_capped);
        }
        writer
            .write(&TraceLine::Tick {
                tick,
                actions: batches,
                digest: state.digest_hex(),
                decisions,
            })
            .map_err(io)?;
    }

    let outcome = match forfeit {
        Some(p) => Outcome::Win(p.opponent()),
        None => outcome(&state),
    };
    let record = MatchRecord {
        agents: [spec.agents[0].name.clone(), spec.agents[1].name.clone()],
        winner: winner_of(outcome),
        ticks: state.tick,
        ticks_per_game_second: state.config.ticks_per_game_second,
        seats: series,
    };
    let degraded = [seats[0].degraded(), seats[1].degraded()];
    for (i, d) in degraded.iter().enumerate() {
        if *d {
            tracing::warn!(match_id = %spec.match_id, agent = %spec.agents[i].name, "match played in degraded mode");
        }
    }
    writer
        .write(&TraceLine::Result {
            outcome,
            record: record.clone(),
            degraded,
        })
        .map_err(io)?;
    writer.flush().map_err(io)?;
    let hashing = writer.into_inner();
    Ok(MatchSummary {
        match_id: spec.match_id.clone(),
        outcome,
        record,
        degraded,
        forfeit,
        trajectory_sha256: hex::encode(hashing.hasher.finalize()),
        final_digest: state.digest_hex(),
    })
}

/// Run a match into `dir/<match_id>.jsonl`. Nothing is written if the
/// seats cannot be set up.
pub fn run_match_to_dir(spec: &MatchSpec, dir: &std::path::Path) -> Result<MatchSummary, ArenaError> {
    let (state, seats) = seat_up(spec)?;
    std::fs::create_dir_all(dir).map_err(|e| ArenaError::io(dir, e))?;
    let path = dir.join(format!("{}.jsonl", spec.match_id));
    let file = std::fs::File::create(&path).map_err(|e| ArenaError::io(&path, e))?;
    play(spec, state, seats, std::io::BufWriter::new(file))
}
