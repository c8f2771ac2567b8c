use std::sync::{Arc, Mutex};

use arena_agent::backend::{BackendError, ChatBackend, ChatParams, ChatReply, ErrorCategory, MockBackend, OfflineBackend};
use arena_agent::parse::{parse_plan, parse_plan_report};
use arena_agent::pipeline::{plan_with_feedback, verify_plan};
use arena_agent::prompt::{executor_prompt, plan_examples, planner_prompt, verifier_prompt};
use arena_agent::rules::{active_rules, RuleBase};
use arena_agent::{LlmAgent, Pipeline, ScriptedModel};
use arena_core::obs::fixture::{showcase_history, showcase_state};
use arena_core::obs::{render_observation, ActionHistory};
use arena_core::protocol::{verify_response, ActionRequest};
use arena_core::sim::{auto_micro, Faction, GameState, PlayerId};
use arena_core::trace::Usage;

const PLANNER_OUT: &str = include_str!("fixtures/planner_output.txt");
const VERIFIER_OUT: &str = include_str!("fixtures/verifier_output.txt");
const EXECUTOR_OUT: &str = include_str!("fixtures/executor_output.txt");

const ACCEPT: &str = "All commands are consistent with the rules.\n```\n{\"errors\": [], \"error_number\": 0}\n```";

fn p1() -> PlayerId {
    PlayerId::ONE
}

/// Answers with a fixed script, in call order, and records every prompt.
struct Script {
    replies: Mutex<Vec<Result<String, ErrorCategory>>>,
    prompts: Mutex<Vec<String>>,
}

impl Script {
    fn new(replies: Vec<Result<&str, ErrorCategory>>) -> Arc<Script> {
        let mut replies: Vec<_> = replies.into_iter().map(|r| r.map(str::to_string)).collect();
        replies.reverse();
        Arc::new(Script {
            replies: Mutex::new(replies),
            prompts: Mutex::new(Vec::new()),
        })
    }

    fn calls(&self) -> usize {
        self.prompts.lock().unwrap().len()
    }
}

impl ChatBackend for Script {
    fn chat(&self, prompt: &str, _params: &ChatParams) -> Result<ChatReply, BackendError> {
        self.prompts.lock().unwrap().push(prompt.to_string());
        match self.replies.lock().unwrap().pop() {
            Some(Ok(text)) => Ok(ChatReply {
                usage: Usage {
                    tokens_in: 10,
                    tokens_out: text.len() as u64,
                },
                text,
                retries: 0,
            }),
            Some(Err(c)) => Err(BackendError::new(c, "scripted failure")),
            None => Err(BackendError::new(ErrorCategory::Unavailable, "script exhausted")),
        }
    }
}

fn rich_showcase() -> GameState {
    let mut s = showcase_state();
    let me = s.player_mut(p1());
    me.minerals = 400;
    me.supply_cap += 20;
    s
}

/// The canned executor answer with the Pylon moved off the Nexus, which
/// sits further out on this map.
fn executor_answer() -> String {
    EXECUTOR_OUT.replace("[45, 20]", "[36, 22]")
}

#[test]
fn planner_example_yields_five_commands() {
    let plan = parse_plan(PLANNER_OUT).unwrap();
    assert_eq!(plan.commands.len(), 5);
    assert_eq!(plan.commands[0], "Use Chrono Boost on Gateway [273]");
    assert!(plan.reasoning.starts_with("Let me analyze the current game state"));
}

#[test]
fn verifier_example_reports_two_errors() {
    let report = parse_plan_report(VERIFIER_OUT).unwrap();
    assert_eq!(report.error_number, 2);
    assert!(!report.is_accepted());
    assert!(report.errors[0].starts_with("Error 1: Insufficient minerals to train both Stalker and Zealot"));
    assert!(report.errors[0].contains("(175 minerals available but need 275)"));
}

#[test]
fn executor_example_parses_and_overdraws_showcase() {
    let state = showcase_state();
    let (actions, report) = verify_response(&state, p1(), EXECUTOR_OUT);
    let actions = actions.unwrap();
    assert_eq!(actions.len(), 3);
    assert_eq!(actions[0], ActionRequest::new("PROTOSSBUILD_PYLON", [9]).at(45, 20));
    assert_eq!(actions[1], ActionRequest::new("EFFECT_CHRONOBOOSTENERGYCOST", [377]).on_unit(273));
    assert!(!report.is_accepted());
    assert!(
        report.errors.iter().any(|e| e.starts_with(">>>> Total actions error: minerals")),
        "{:?}",
        report.errors
    );
}

#[test]
fn malformed_verifier_answer_is_waved_through() {
    let state = showcase_state();
    let obs = render_observation(&state, p1(), &showcase_history());
    let backend = Script::new(vec![Ok("The plan looks fine, {errors: none")]);
    let check = verify_plan(backend.as_ref(), &obs, &["Build a Pylon".into()], &[], &ChatParams::default());
    assert!(check.report.is_accepted());
    assert!(check.report.warning.is_some());
}

#[test]
fn prose_only_plan_is_rejected_with_feedback() {
    let state = showcase_state();
    let obs = render_observation(&state, p1(), &showcase_history());
    let base = planner_prompt(&obs, &[], "");
    let backend = Script::new(vec![Ok("I would wait."), Ok("```\n[]\n```")]);
    let rounds = plan_with_feedback(backend.as_ref(), &obs, &[], &base, &ChatParams::default(), 3).unwrap();
    assert_eq!(rounds.len(), 2);
    assert_eq!(rounds[0].report.errors, ["Error 1: output was not a valid command list"]);
    assert!(rounds[1].prompt.contains("Verifier feedback\nError 1: output was not a valid command list"));
    assert_eq!(rounds[1].commands.as_deref(), Some(&[][..]));
    // The wait needs no verifier call.
    assert_eq!(backend.calls(), 2);
}

/// Canned answers for the showcase decision, keyed by exact prompt.
fn canned_showcase(state: &GameState) -> MockBackend {
    let obs = render_observation(state, p1(), &ActionHistory::default());
    let base = RuleBase::for_faction(Faction::Protoss);
    let rules = active_rules(state, p1(), &base);
    let plan = parse_plan(PLANNER_OUT).unwrap().commands;
    let mut mock = MockBackend::new();
    mock.insert(&planner_prompt(&obs, &rules, plan_examples(Faction::Protoss)), PLANNER_OUT);
    mock.insert(&verifier_prompt(&obs, &plan, &rules), ACCEPT);
    mock.insert(&executor_prompt(&obs, &plan), &executor_answer());
    mock
}

#[test]
fn mock_decision_end_to_end() {
    let state = rich_showcase();
    let mock = canned_showcase(&state);
    let mut agent = LlmAgent::new(Pipeline::Hierarchical, p1(), &state, Arc::new(mock), ChatParams::default());
    let (batch, trace) = agent.decide(&state);
    assert_eq!(trace.planner.len(), 1);
    assert_eq!(trace.executor.len(), 1);
    assert_eq!(trace.actions.len(), 3, "{:?}", trace.executor[0].report);
    assert!(trace.is_valid(), "{:?}", trace.executor[0].report.errors);
    assert_eq!(&batch[..3], &trace.actions[..]);
    assert_eq!(trace.actions[0], ActionRequest::new("PROTOSSBUILD_PYLON", [9]).at(36, 22));
    assert!(agent.history().lines().any(|l| l.contains("PROTOSSBUILD_PYLON")));
}

#[test]
fn backend_down_means_automation_only() {
    let state = showcase_state();
    let mut agent = LlmAgent::new(Pipeline::Hierarchical, p1(), &state, Arc::new(OfflineBackend), ChatParams::default());
    let (batch, trace) = agent.decide(&state);
    assert_eq!(batch, auto_micro(&state, p1()));
    assert!(agent.degraded());
    assert!(!trace.is_valid());
    assert!(trace.warnings.iter().any(|w| w.contains("backend failed")));
}

#[test]
fn three_rejected_batches_are_dropped() {
    let state = showcase_state();
    let bad = "```\n[{\"action\": \"GATEWAYTRAIN_ZEALOT\", \"units\": [4242]}]\n```";
    let backend = Script::new(vec![
        Ok("```\n[\"Train a Zealot\"]\n```"),
        Ok(ACCEPT),
        Ok(bad),
        Ok(bad),
        Ok(bad),
    ]);
    let mut agent = LlmAgent::new(Pipeline::Hierarchical, p1(), &state, backend.clone(), ChatParams::default());
    let (batch, trace) = agent.decide(&state);
    assert_eq!(trace.executor.len(), 3);
    assert!(trace.executor.iter().all(|r| !r.report.is_accepted()));
    // The trace keeps the last batch even though it is not applied.
    assert_eq!(trace.actions, [ActionRequest::new("GATEWAYTRAIN_ZEALOT", [4242])]);
    assert!(!trace.is_valid());
    assert_eq!(batch, auto_micro(&state, p1()));
    assert!(trace.warnings.iter().any(|w| w.contains("dropped")));
    let retry = &backend.prompts.lock().unwrap()[3];
    assert!(retry.contains("Verifier feedback\n>>>> Action 0 error:"));
}

#[test]
fn dead_unit_reference_is_rejected() {
    let state = showcase_state();
    // Enemy zealot 881 is hidden and unit 418 from the history is long dead.
    let backend = Script::new(vec![
        Ok("```\n[\"Attack with Zealot [418]\"]\n```"),
        Ok(ACCEPT),
        Ok("```\n[{\"action\": \"ATTACK_ATTACK\", \"units\": [418], \"target_unit\": 249}]\n```"),
        Ok("```\n[]\n```"),
    ]);
    let mut agent = LlmAgent::new(Pipeline::Hierarchical, p1(), &state, backend, ChatParams::default());
    let (_, trace) = agent.decide(&state);
    let first = &trace.executor[0].report;
    assert!(!first.is_accepted());
    assert!(first.errors.iter().any(|e| e.contains("418")), "{:?}", first.errors);
    assert_eq!(trace.executor.len(), 2);
    assert!(trace.is_valid());
}

#[test]
fn empty_plan_makes_no_executor_call() {
    let state = showcase_state();
    let backend = Script::new(vec![Ok("Nothing to do.\n```\n[]\n```")]);
    let mut agent = LlmAgent::new(Pipeline::Hierarchical, p1(), &state, backend.clone(), ChatParams::default());
    let (batch, trace) = agent.decide(&state);
    assert_eq!(backend.calls(), 1);
    assert!(trace.executor.is_empty());
    assert!(trace.is_valid());
    assert_eq!(batch, auto_micro(&state, p1()));
}

#[test]
fn naive_agent_validates_once() {
    let state = rich_showcase();
    let good = "```\n[{\"action\": \"GATEWAYTRAIN_ZEALOT\", \"units\": [554]}]\n```";
    let bad = "```\n[{\"action\": \"GATEWAYTRAIN_ZEALOT\", \"units\": [1]}]\n```";
    let backend = Script::new(vec![Ok(good), Ok(bad)]);
    let mut agent = LlmAgent::new(Pipeline::Naive, p1(), &state, backend.clone(), ChatParams::default());
    let (batch, trace) = agent.decide(&state);
    assert!(trace.is_valid());
    assert!(trace.planner.is_empty());
    assert_eq!(batch[0], ActionRequest::new("GATEWAYTRAIN_ZEALOT", [554]));
    let (batch, trace) = agent.decide(&state);
    assert!(!trace.is_valid());
    assert_eq!(trace.executor.len(), 1);
    assert_eq!(batch, auto_micro(&state, p1()));
    assert!(backend.prompts.lock().unwrap()[0].contains("Give an action JSON"));
}

#[test]
fn naive_agent_is_deterministic_under_mock() {
    let state = showcase_state();
    let run = || {
        let mut agent = LlmAgent::new(Pipeline::Naive, p1(), &state, Arc::new(ScriptedModel), ChatParams::default());
        agent.decide(&state).0
    };
    assert_eq!(run(), run());
}

#[test]
fn scripted_model_plays_valid_decisions() {
    use arena_core::sim::{builtin_policy, create_match, step, MatchConfig};
    for faction in [Faction::Terran, Faction::Protoss, Faction::Zerg] {
        let mut state = create_match(MatchConfig::mirror(faction, 11)).unwrap();
        let mut agent = LlmAgent::new(Pipeline::Hierarchical, p1(), &state, Arc::new(ScriptedModel), ChatParams::default());
        let (mut decisions, mut valid) = (0, 0);
        for _ in 0..1500 {
            let mine = agent.act(&state);
            if let Some(t) = &mine.decision {
                decisions += 1;
                valid += t.is_valid() as usize;
                assert!((1..=3).contains(&t.planner.len()));
                assert!(t.executor.len() <= 3);
            }
            let theirs = builtin_policy(&state, PlayerId::TWO, 1);
            step(&mut state, [&mine.actions, &theirs]);
        }
        assert!(decisions > 10, "{faction}: {decisions}");
        assert!(valid * 10 >= decisions * 9, "{faction}: {valid}/{decisions} valid");
    }
}
