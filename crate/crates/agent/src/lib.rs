//! Model-driven agents: planner, plan verifier, executor, rule engine and
//! chat backends.

pub mod agent;
pub mod backend;
pub mod parse;
pub mod pipeline;
pub mod prompt;
pub mod rules;
pub mod scripted;
pub mod trigger;

pub use agent::{merge_with_micro, LlmAgent, Pipeline, TickActions};
pub use backend::{
    BackendError, ChatBackend, ChatParams, ChatReply, ErrorCategory, HttpBackend, HttpConfig,
    MockBackend, OfflineBackend, RetryPolicy, Retrying,
};
pub use parse::{parse_plan, parse_plan_report, CommandPlan};
pub use rules::{active_rules, Rule, RuleBase};
pub use scripted::ScriptedModel;
pub use trigger::{should_decide, DecisionClock};
