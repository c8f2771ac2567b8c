//! Prompt templates and their instantiation.

use arena_core::obs::TextObservation;
use arena_core::sim::Faction;

use crate::rules::{format_rules, Rule};

pub const PLANNER_TEMPLATE: &str = include_str!("../data/planner.txt");
pub const VERIFIER_TEMPLATE: &str = include_str!("../data/verifier.txt");
pub const EXECUTOR_TEMPLATE: &str = include_str!("../data/executor.txt");
pub const NAIVE_TEMPLATE: &str = include_str!("../data/naive.txt");

/// Heading that opens the retry tail of a prompt.
pub const PREVIOUS_ATTEMPT: &str = "Previous attempt";
pub const VERIFIER_FEEDBACK: &str = "Verifier feedback";

pub fn plan_examples(faction: Faction) -> &'static str {
    match faction {
        Faction::Terran => include_str!("../data/examples_terran.txt"),
        Faction::Protoss => include_str!("../data/examples_protoss.txt"),
        Faction::Zerg => include_str!("../data/examples_zerg.txt"),
    }
    .trim_end()
}

/// Replace `{name}` slots in one pass, so slot values are never rescanned.
/// Braces that do not name a known slot are copied through.
pub fn fill(template: &str, slots: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len() + slots.iter().map(|(_, v)| v.len()).sum::<usize>());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open..];
        let hit = slots.iter().find(|(name, _)| {
            tail.len() > name.len() + 1
                && tail[1..].starts_with(name)
                && tail.as_bytes()[name.len() + 1] == b'}'
        });
        match hit {
            Some((name, value)) => {
                out.push_str(value);
                rest = &tail[name.len() + 2..];
            }
            None => {
                out.push('{');
                rest = &tail[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

/// Commands as the fenced JSON list the planner produced them in.
pub fn format_commands(commands: &[String]) -> String {
    use serde::Serialize;
    let mut buf = Vec::new();
    let fmt = serde_json::ser::PrettyFormatter::with_indent(b"    ");
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, fmt);
    commands.serialize(&mut ser).expect("strings serialize");
    format!("```\n{}\n```", String::from_utf8(buf).expect("json is utf-8"))
}

pub fn planner_prompt(obs: &TextObservation, rules: &[&Rule], examples: &str) -> String {
    let rules = format_rules(rules.iter().copied());
    fill(
        PLANNER_TEMPLATE,
        &[
            ("obs_text", &obs.full_text),
            ("rules_list", &rules),
            ("plan_example", examples),
        ],
    )
}

pub fn verifier_prompt(obs: &TextObservation, commands: &[String], rules: &[&Rule]) -> String {
    let rules = format_rules(rules.iter().copied());
    fill(
        VERIFIER_TEMPLATE,
        &[
            ("obs_text", &obs.full_text),
            ("given_command", &format_commands(commands)),
            ("rule_list", &rules),
        ],
    )
}

pub fn executor_prompt(obs: &TextObservation, commands: &[String]) -> String {
    fill(
        EXECUTOR_TEMPLATE,
        &[("obs_text", &obs.full_text), ("plan_text", &format_commands(commands))],
    )
}

pub fn naive_prompt(obs: &TextObservation, rules: &[&Rule]) -> String {
    let rules = format_rules(rules.iter().copied());
    fill(NAIVE_TEMPLATE, &[("obs_text", &obs.full_text), ("rules_list", &rules)])
}

/// Base prompt followed by the last rejected output and its feedback.
pub fn retry_prompt(base: &str, previous: &str, feedback: &str) -> String {
    format!(
        "{}\n\n{PREVIOUS_ATTEMPT}\n{}\n\n{VERIFIER_FEEDBACK}\n{}\n",
        base.trim_end(),
        previous.trim_end(),
        feedback.trim_end()
    )
}
