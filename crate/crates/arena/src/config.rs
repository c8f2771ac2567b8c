//! Run configuration, read from a single TOML file.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use arena_agent::backend::{ChatParams, HttpConfig, RetryPolicy};
use arena_core::sim::{Faction, MatchConfig};
use serde::{Deserialize, Serialize};

use crate::error::ArenaError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Match,
    Tournament,
    Metrics,
    Dataset,
    ReplayVerify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    /// Planner, plan verifier, executor and action validator.
    Hierarchical,
    /// One model call straight to actions.
    Naive,
    /// The built-in policy run on the model agents' decision cadence.
    Scripted,
    /// The built-in policy on its own cadence.
    Builtin,
}

impl AgentKind {
    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Hierarchical => "hierarchical",
            AgentKind::Naive => "naive",
            AgentKind::Scripted => "scripted",
            AgentKind::Builtin => "builtin",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpSpec {
    #[serde(flatten)]
    pub http: HttpConfig,
    #[serde(default)]
    pub retry: RetryPolicy,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendSpec {
    /// Deterministic offline stand-in model.
    #[default]
    Scripted,
    /// Canned answers keyed by prompt hash, from a JSONL file.
    Mock {
        path: PathBuf,
        /// Answer unknown prompts with the scripted model instead of failing.
        #[serde(default)]
        scripted_fallback: bool,
    },
    /// An OpenAI-compatible chat-completions endpoint.
    Http(HttpSpec),
    /// Always unavailable.
    Offline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub name: String,
    pub kind: AgentKind,
    /// Falls back to the faction in `[match]` for this seat.
    #[serde(default)]
    pub faction: Option<Faction>,
    /// Built-in difficulty for `builtin` and `scripted` agents.
    #[serde(default = "default_level")]
    pub level: u8,
    #[serde(default)]
    pub backend: BackendSpec,
    #[serde(default)]
    pub params: ChatParams,
    #[serde(default = "default_rounds")]
    pub max_rounds: usize,
}

fn default_level() -> u8 {
    3
}

fn default_rounds() -> usize {
    3
}

impl AgentSpec {
    pub fn builtin(name: &str, level: u8) -> AgentSpec {
        AgentSpec {
            name: name.to_string(),
            kind: AgentKind::Builtin,
            faction: None,
            level,
            backend: BackendSpec::Scripted,
            params: ChatParams::default(),
            max_rounds: default_rounds(),
        }
    }

    pub fn with_kind(mut self, kind: AgentKind) -> AgentSpec {
        self.kind = kind;
        self
    }

    pub fn with_faction(mut self, faction: Faction) -> AgentSpec {
        self.faction = Some(faction);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub seed: u64,
    pub out: PathBuf,
    /// Worker threads for tournaments; 0 uses every core.
    pub jobs: usize,
    /// Games per pairing and faction mirror.
    pub repetitions: u32,
    /// Faction mirrors played in a tournament.
    pub mirrors: Vec<Faction>,
    /// Trajectory file or directory for the reporting modes.
    pub input: Option<PathBuf>,
    #[serde(rename = "match")]
    pub game: MatchConfig,
    #[serde(rename = "agent")]
    pub agents: Vec<AgentSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Match,
            seed: 0,
            out: PathBuf::from("arena-out"),
            jobs: 0,
            repetitions: 1,
            mirrors: vec![Faction::Terran, Faction::Zerg, Faction::Protoss],
            input: None,
            game: MatchConfig::default(),
            agents: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, ArenaError> {
        toml::from_str(text).map_err(|e| ArenaError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<RunConfig, ArenaError> {
        let text = std::fs::read_to_string(path).map_err(|e| ArenaError::io(path, e))?;
        toml::from_str(&text).map_err(|e| ArenaError::Config(format!("{}: {e}", path.display())))
    }

    /// Faction of seat `i` in a single match.
    pub fn seat_faction(&self, i: usize) -> Faction {
        self.agents[i]
            .faction
            .or_else(|| self.game.factions.get(i).copied())
            .unwrap_or(Faction::Protoss)
    }

    pub fn validate(&self) -> Result<(), ArenaError> {
        let bad = |m: String| Err(ArenaError::Config(m));
        match self.mode {
            Mode::Match if self.agents.len() != 2 => {
                return bad(format!("match mode needs exactly 2 agents, got {}", self.agents.len()))
            }
            Mode::Tournament if self.agents.len() < 2 => {
                return bad(format!("a tournament needs at least 2 agents, got {}", self.agents.len()))
            }
            Mode::Tournament if self.repetitions == 0 || self.mirrors.is_empty() => {
                return bad("a tournament needs repetitions >= 1 and at least one mirror".into())
            }
            Mode::Metrics | Mode::Dataset | Mode::ReplayVerify if self.input.is_none() => {
                return bad(format!("{:?} mode needs an input path", self.mode))
            }
            _ => {}
        }
        let mut names = BTreeSet::new();
        for a in &self.agents {
            if a.name.trim().is_empty() || a.name.contains(',') {
                return bad(format!("agent name {:?} must be non-empty and free of commas", a.name));
            }
            if !names.insert(&a.name) {
                return bad(format!("duplicate agent name {}", a.name));
            }
            if !(1..=7).contains(&a.level) {
                return bad(format!("agent {}: level must be within 1..=7, got {}", a.name, a.level));
            }
            if a.max_rounds == 0 {
                return bad(format!("agent {}: max_rounds must be at least 1", a.name));
            }
        }
        let mut game = self.game.clone();
        game.factions = vec![Faction::Protoss; 2];
        game.builtin_difficulty.clear();
        game.validate().map_err(|e| ArenaError::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
mode = "tournament"
seed = 42
repetitions = 2
mirrors = ["terran", "zerg"]

[match]
max_ticks = 4000

[[agent]]
name = "llm"
kind = "hierarchical"
backend = { kind = "http", endpoint = "http://localhost:8000/v1/chat/completions", model = "m", retry = { max_retries = 5 } }
params = { temperature = 0.3 }

[[agent]]
name = "bot"
kind = "builtin"
level = 6
"#;

    #[test]
    fn parses_a_tournament() {
        let cfg = RunConfig::parse(SAMPLE).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.mode, Mode::Tournament);
        assert_eq!(cfg.game.max_ticks, 4000);
        assert_eq!(cfg.game.map_width, 48);
        assert_eq!(cfg.agents[1].level, 6);
        assert_eq!(cfg.agents[0].params.temperature, 0.3);
        assert_eq!(cfg.agents[0].params.top_k, 20);
        let BackendSpec::Http(h) = &cfg.agents[0].backend else {
            panic!("expected http backend");
        };
        assert_eq!(h.retry.max_retries, 5);
        assert_eq!(h.http.api_key_env, "ARENA_API_KEY");
    }

    #[test]
    fn agent_counts() {
        let mut cfg = RunConfig::parse(SAMPLE).unwrap();
        cfg.agents.truncate(1);
        assert!(matches!(cfg.validate(), Err(ArenaError::Config(_))));
        cfg.mode = Mode::Match;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rejects_unknown_fields_and_levels() {
        assert!(RunConfig::parse("mdoe = \"match\"").is_err());
        let mut cfg = RunConfig::parse(SAMPLE).unwrap();
        cfg.agents[1].level = 9;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn reporting_modes_need_input() {
        let cfg = RunConfig {
            mode: Mode::Metrics,
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
