//! Model-driven agents bound to one seat of one match.

use std::collections::BTreeSet;
use std::sync::Arc;

use arena_core::obs::{render_observation, ActionHistory, TextObservation};
use arena_core::protocol::{verify_response, ActionRequest};
use arena_core::sim::{auto_micro, GameState, PlayerId};
use arena_core::trace::{DecisionTrace, ExecRound};

use crate::backend::{ChatBackend, ChatParams};
use crate::pipeline::{execute_with_feedback, plan_with_feedback, MAX_ROUNDS};
use crate::prompt::{naive_prompt, plan_examples, planner_prompt};
use crate::rules::{active_rules, RuleBase};
use crate::trigger::DecisionClock;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pipeline {
    /// Planner, plan verifier, executor and action validator.
    Hierarchical,
    /// One call straight to actions, no feedback loop.
    Naive,
}

/// What one seat submits on one tick.
#[derive(Debug, Clone, PartialEq)]
pub struct TickActions {
    pub actions: Vec<ActionRequest>,
    pub decision: Option<DecisionTrace>,
}

/// Decision actions first, then automation for units they leave alone.
pub fn merge_with_micro(decided: Vec<ActionRequest>, micro: Vec<ActionRequest>) -> Vec<ActionRequest> {
    let busy: BTreeSet<u32> = decided.iter().flat_map(|a| a.units.iter().copied()).collect();
    let mut out = decided;
    out.extend(
        micro
            .into_iter()
            .filter(|a| a.units.iter().all(|u| !busy.contains(u))),
    );
    out
}

pub struct LlmAgent {
    pub player: PlayerId,
    pipeline: Pipeline,
    backend: Arc<dyn ChatBackend>,
    params: ChatParams,
    rules: RuleBase,
    max_rounds: usize,
    history: ActionHistory,
    clock: DecisionClock,
    degraded: bool,
}

impl LlmAgent {
    pub fn new(
        pipeline: Pipeline,
        player: PlayerId,
        state: &GameState,
        backend: Arc<dyn ChatBackend>,
        params: ChatParams,
    ) -> LlmAgent {
        let faction = state.player(player).faction;
        LlmAgent {
            player,
            pipeline,
            backend,
            params,
            rules: RuleBase::for_faction(faction),
            max_rounds: MAX_ROUNDS,
            history: ActionHistory::default(),
            clock: DecisionClock::default(),
            degraded: false,
        }
    }

    pub fn with_max_rounds(mut self, max_rounds: usize) -> Self {
        self.max_rounds = max_rounds.max(1);
        self
    }

    /// Set once any backend call failed beyond its retries.
    pub fn degraded(&self) -> bool {
        self.degraded
    }

    pub fn history(&self) -> &ActionHistory {
        &self.history
    }

    /// Automation every tick; a full decision when the clock fires.
    pub fn act(&mut self, state: &GameState) -> TickActions {
        let minerals = state.player(self.player).minerals;
        if self.clock.poll(state.tick, minerals) {
            let (actions, trace) = self.decide(state);
            TickActions {
                actions,
                decision: Some(trace),
            }
        } else {
            TickActions {
                actions: auto_micro(state, self.player),
                decision: None,
            }
        }
    }

    /// Run the pipeline once. The returned batch holds the decision's actions
    /// only if they passed validation, merged with automation.
    pub fn decide(&mut self, state: &GameState) -> (Vec<ActionRequest>, DecisionTrace) {
        let obs = render_observation(state, self.player, &self.history);
        let mut trace = match self.pipeline {
            Pipeline::Hierarchical => self.hierarchical(state, &obs),
            Pipeline::Naive => self.naive(state, &obs),
        };
        trace.tick = state.tick;
        trace.observation = obs.full_text;
        let decided = if trace.is_valid() {
            self.history.extend(&trace.actions);
            trace.actions.clone()
        } else {
            if !trace.actions.is_empty() || !trace.executor.is_empty() {
                let msg = "final action batch failed validation and was dropped".to_string();
                tracing::info!(player = %self.player, tick = state.tick, "{msg}");
                trace.warnings.push(msg);
            }
            Vec::new()
        };
        (merge_with_micro(decided, auto_micro(state, self.player)), trace)
    }

    fn hierarchical(&mut self, state: &GameState, obs: &TextObservation) -> DecisionTrace {
        let rules = active_rules(state, self.player, &self.rules);
        let faction = state.player(self.player).faction;
        let base = planner_prompt(obs, &rules, plan_examples(faction));
        let mut trace = DecisionTrace::default();
        let backend = self.backend.as_ref();
        match plan_with_feedback(backend, obs, &rules, &base, &self.params, self.max_rounds) {
            Ok(rounds) => trace.planner = rounds,
            Err((rounds, e)) => {
                trace.planner = rounds;
                self.degrade(&mut trace, &e.to_string());
                return trace;
            }
        }
        trace
            .warnings
            .extend(trace.planner.iter().filter_map(|r| r.report.warning.clone()));
        let commands = trace
            .final_plan()
            .and_then(|p| p.commands.clone())
            .unwrap_or_default();
        match execute_with_feedback(
            backend,
            state,
            self.player,
            obs,
            &commands,
            &self.params,
            self.max_rounds,
        ) {
            Ok((rounds, actions)) => {
                trace.executor = rounds;
                trace.actions = actions;
            }
            Err((rounds, e)) => {
                trace.executor = rounds;
                self.degrade(&mut trace, &e.to_string());
            }
        }
        trace
    }

    fn naive(&mut self, state: &GameState, obs: &TextObservation) -> DecisionTrace {
        let rules = active_rules(state, self.player, &self.rules);
        let prompt = naive_prompt(obs, &rules);
        let mut trace = DecisionTrace::default();
        match self.backend.chat(&prompt, &self.params) {
            Ok(reply) => {
                let (actions, report) = verify_response(state, self.player, &reply.text);
                trace.actions = actions.unwrap_or_default();
                trace.executor.push(ExecRound {
                    prompt,
                    output: reply.text,
                    report,
                    usage: vec![reply.usage],
                });
            }
            Err(e) => self.degrade(&mut trace, &e.to_string()),
        }
        trace
    }

    fn degrade(&mut self, trace: &mut DecisionTrace, error: &str) {
        let msg = format!("backend failed, automation only this decision: {error}");
        tracing::warn!(player = %self.player, "{msg}");
        trace.warnings.push(msg);
        trace.actions.clear();
        self.degraded = true;
    }
}
