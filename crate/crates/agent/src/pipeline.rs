//! Planner, verifiers, executor and the bounded self-correction loop.

use arena_core::obs::TextObservation;
use arena_core::protocol::{verify_response, ActionRequest, ValidationReport};
use arena_core::sim::{GameState, PlayerId};
use arena_core::trace::{ExecRound, PlanReport, PlanRound, Usage};

use crate::backend::{BackendError, ChatBackend, ChatParams};
use crate::parse::{parse_plan, parse_plan_report, CommandPlan, NOT_A_COMMAND_LIST};
use crate::prompt::{executor_prompt, retry_prompt, verifier_prompt};
use crate::rules::Rule;

pub const MAX_ROUNDS: usize = 3;

/// A verdict that can send a round back for another attempt.
pub trait Feedback {
    fn is_accepted(&self) -> bool;
    fn feedback(&self) -> String;
}

impl Feedback for PlanReport {
    fn is_accepted(&self) -> bool {
        PlanReport::is_accepted(self)
    }

    fn feedback(&self) -> String {
        PlanReport::feedback(self)
    }
}

impl Feedback for ValidationReport {
    fn is_accepted(&self) -> bool {
        ValidationReport::is_accepted(self)
    }

    fn feedback(&self) -> String {
        ValidationReport::feedback(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Round<O, R> {
    pub prompt: String,
    pub output: O,
    pub report: R,
}

/// A round in which generation itself failed.
#[derive(Debug)]
pub struct Aborted<O, R, E> {
    pub rounds: Vec<Round<O, R>>,
    pub error: E,
}

/// Generate and verify until a round is accepted or `max_rounds` is used up.
/// Retries see the base prompt with the previous output and its feedback
/// appended.
pub fn self_correct<O, R, E>(
    base_prompt: &str,
    max_rounds: usize,
    mut generate: impl FnMut(&str) -> Result<O, E>,
    mut verify: impl FnMut(&O) -> R,
) -> Result<Vec<Round<O, R>>, Aborted<O, R, E>>
where
    O: AsRef<str>,
    R: Feedback,
{
    assert!(max_rounds >= 1, "self-correction needs at least one round");
    let mut rounds: Vec<Round<O, R>> = Vec::with_capacity(max_rounds);
    while rounds.len() < max_rounds {
        let prompt = match rounds.last() {
            None => base_prompt.to_string(),
            Some(prev) => retry_prompt(base_prompt, prev.output.as_ref(), &prev.report.feedback()),
        };
        let output = match generate(&prompt) {
            Ok(o) => o,
            Err(error) => return Err(Aborted { rounds, error }),
        };
        let report = verify(&output);
        let done = report.is_accepted();
        rounds.push(Round {
            prompt,
            output,
            report,
        });
        if done {
            break;
        }
    }
    Ok(rounds)
}

/// Raw model answer with its accounting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Draft {
    pub text: String,
    pub usage: Usage,
}

impl AsRef<str> for Draft {
    fn as_ref(&self) -> &str {
        &self.text
    }
}

fn draft(backend: &dyn ChatBackend, prompt: &str, params: &ChatParams) -> Result<Draft, BackendError> {
    let reply = backend.chat(prompt, params)?;
    Ok(Draft {
        text: reply.text,
        usage: reply.usage,
    })
}

/// One planner call.
pub fn plan(
    backend: &dyn ChatBackend,
    prompt: &str,
    params: &ChatParams,
) -> Result<(Draft, Option<CommandPlan>), BackendError> {
    let d = draft(backend, prompt, params)?;
    let plan = parse_plan(&d.text);
    Ok((d, plan))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanCheck {
    pub report: PlanReport,
    pub raw: Option<String>,
    pub usage: Option<Usage>,
}

impl Feedback for PlanCheck {
    fn is_accepted(&self) -> bool {
        self.report.is_accepted()
    }

    fn feedback(&self) -> String {
        self.report.feedback()
    }
}

fn waved_through(warning: String) -> PlanReport {
    tracing::warn!("{warning}");
    PlanReport {
        warning: Some(warning),
        ..PlanReport::default()
    }
}

/// One verifier call. An unreadable or unreachable verifier accepts the
/// plan with a warning so it can never stall the agent.
pub fn verify_plan(
    backend: &dyn ChatBackend,
    obs: &TextObservation,
    commands: &[String],
    rules: &[&Rule],
    params: &ChatParams,
) -> PlanCheck {
    let prompt = verifier_prompt(obs, commands, rules);
    match backend.chat(&prompt, params) {
        Ok(reply) => {
            let report = parse_plan_report(&reply.text).unwrap_or_else(|| {
                waved_through("plan verifier answer had no readable summary; plan accepted".into())
            });
            PlanCheck {
                report,
                raw: Some(reply.text),
                usage: Some(reply.usage),
            }
        }
        Err(e) => PlanCheck {
            report: waved_through(format!("plan verifier unavailable ({e}); plan accepted")),
            raw: None,
            usage: None,
        },
    }
}

/// Rejection used when the planner answer has no command list.
pub fn unreadable_plan() -> PlanReport {
    PlanReport {
        analysis: String::new(),
        errors: vec![format!("Error 1: {NOT_A_COMMAND_LIST}")],
        error_number: 1,
        warning: None,
    }
}

pub struct PlannerDraft {
    pub draft: Draft,
    pub plan: Option<CommandPlan>,
}

impl AsRef<str> for PlannerDraft {
    fn as_ref(&self) -> &str {
        &self.draft.text
    }
}

/// The planner chain: plan, verify, revise.
pub fn plan_with_feedback(
    backend: &dyn ChatBackend,
    obs: &TextObservation,
    rules: &[&Rule],
    base_prompt: &str,
    params: &ChatParams,
    max_rounds: usize,
) -> Result<Vec<PlanRound>, (Vec<PlanRound>, BackendError)> {
    let result = self_correct(
        base_prompt,
        max_rounds,
        |prompt| plan(backend, prompt, params).map(|(draft, plan)| PlannerDraft { draft, plan }),
        |out| match &out.plan {
            None => PlanCheck {
                report: unreadable_plan(),
                raw: None,
                usage: None,
            },
            // An empty plan is an explicit wait and has nothing to check.
            Some(p) if p.commands.is_empty() => PlanCheck {
                report: PlanReport::default(),
                raw: None,
                usage: None,
            },
            Some(p) => verify_plan(backend, obs, &p.commands, rules, params),
        },
    );
    let convert = |rounds: Vec<Round<PlannerDraft, PlanCheck>>| -> Vec<PlanRound> {
        rounds
            .into_iter()
            .map(|r| PlanRound {
                prompt: r.prompt,
                output: r.output.draft.text,
                commands: r.output.plan.map(|p| p.commands),
                verifier_output: r.report.raw,
                report: r.report.report,
                usage: std::iter::once(r.output.draft.usage).chain(r.report.usage).collect(),
            })
            .collect()
    };
    match result {
        Ok(rounds) => Ok(convert(rounds)),
        Err(a) => Err((convert(a.rounds), a.error)),
    }
}

/// One executor call. An empty plan makes no call.
pub fn execute(
    backend: &dyn ChatBackend,
    prompt: &str,
    commands: &[String],
    params: &ChatParams,
) -> Result<Option<Draft>, BackendError> {
    if commands.is_empty() {
        return Ok(None);
    }
    draft(backend, prompt, params).map(Some)
}

pub struct ExecCheck {
    pub actions: Option<Vec<ActionRequest>>,
    pub report: ValidationReport,
}

impl Feedback for ExecCheck {
    fn is_accepted(&self) -> bool {
        self.report.is_accepted()
    }

    fn feedback(&self) -> String {
        self.report.feedback()
    }
}

/// The executor chain, checked by the deterministic action validator.
/// Returns the rounds and the actions of the last one.
pub fn execute_with_feedback(
    backend: &dyn ChatBackend,
    state: &GameState,
    player: PlayerId,
    obs: &TextObservation,
    commands: &[String],
    params: &ChatParams,
    max_rounds: usize,
) -> Result<(Vec<ExecRound>, Vec<ActionRequest>), (Vec<ExecRound>, BackendError)> {
    if commands.is_empty() {
        return Ok((Vec::new(), Vec::new()));
    }
    let base = executor_prompt(obs, commands);
    let result = self_correct(
        &base,
        max_rounds,
        |prompt| draft(backend, prompt, params),
        |out| {
            let (actions, report) = verify_response(state, player, &out.text);
            ExecCheck { actions, report }
        },
    );
    let convert = |rounds: Vec<Round<Draft, ExecCheck>>| -> (Vec<ExecRound>, Vec<ActionRequest>) {
        let last = rounds
            .last()
            .and_then(|r| r.report.actions.clone())
            .unwrap_or_default();
        let rounds = rounds
            .into_iter()
            .map(|r| ExecRound {
                prompt: r.prompt,
                output: r.output.text,
                report: r.report.report,
                usage: vec![r.output.usage],
            })
            .collect();
        (rounds, last)
    };
    match result {
        Ok(rounds) => Ok(convert(rounds)),
        Err(a) => Err((convert(a.rounds).0, a.error)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug)]
    struct Verdict(bool, &'static str);

    impl Feedback for Verdict {
        fn is_accepted(&self) -> bool {
            self.0
        }

        fn feedback(&self) -> String {
            self.1.into()
        }
    }

    fn run(verdicts: &[bool]) -> Vec<Round<String, Verdict>> {
        let mut n = 0;
        let mut v = verdicts.iter().copied();
        self_correct::<_, _, ()>(
            "base",
            MAX_ROUNDS,
            |_| {
                n += 1;
                Ok(format!("out{n}"))
            },
            |_| Verdict(v.next().unwrap_or(false), "bad"),
        )
        .unwrap()
    }

    #[test]
    fn first_round_accepted() {
        assert_eq!(run(&[true]).len(), 1);
    }

    #[test]
    fn three_rejections() {
        let rounds = run(&[false, false, false]);
        assert_eq!(rounds.len(), 3);
        assert_eq!(rounds[2].output, "out3");
    }

    #[test]
    fn reject_then_accept() {
        let rounds = run(&[false, true]);
        assert_eq!(rounds.len(), 2);
        assert_eq!(rounds[1].output, "out2");
        assert_eq!(rounds[1].prompt, "base\n\nPrevious attempt\nout1\n\nVerifier feedback\nbad\n");
    }

    #[test]
    fn retry_carries_only_the_latest_attempt() {
        let rounds = run(&[false, false, false]);
        assert!(rounds[2].prompt.contains("out2"));
        assert!(!rounds[2].prompt.contains("out1"));
    }
}
