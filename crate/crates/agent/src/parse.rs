//! Reading planner and verifier answers.

use arena_core::protocol::{extract_last, fenced_blocks};
use arena_core::trace::PlanReport;
use serde_json::Value;

/// Commands extracted from a planner answer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandPlan {
    /// Prose before the command list.
    pub reasoning: String,
    pub commands: Vec<String>,
}

pub const NOT_A_COMMAND_LIST: &str = "output was not a valid command list";

fn is_string_array(v: &Value) -> bool {
    v.as_array().is_some_and(|a| a.iter().all(Value::is_string))
}

/// The last JSON array of strings in the answer. `[]` is a valid, empty plan.
pub fn parse_plan(text: &str) -> Option<CommandPlan> {
    let value = extract_last(text, b'[', is_string_array)?;
    let commands = value
        .as_array()?
        .iter()
        .filter_map(|v| v.as_str())
        .map(|s| s.trim().to_string())
        .collect();
    let reasoning = match text.rfind("```") {
        Some(_) => text.split("```").next().unwrap_or("").trim().to_string(),
        None => String::new(),
    };
    Some(CommandPlan {
        reasoning,
        commands,
    })
}

/// Models sometimes wrap long strings over several lines. Inside string
/// literals, fold a raw line break and the indentation after it into one
/// space so the block parses.
fn fold_string_breaks(block: &str) -> String {
    let mut out = String::with_capacity(block.len());
    let mut in_str = false;
    let mut escaped = false;
    let mut chars = block.chars().peekable();
    while let Some(c) = chars.next() {
        if in_str {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_str = false;
            } else if c == '\n' || c == '\r' {
                while chars.peek().is_some_and(|n| n.is_whitespace()) {
                    chars.next();
                }
                if !out.ends_with(' ') {
                    out.push(' ');
                }
                continue;
            }
        } else if c == '"' {
            in_str = true;
        }
        out.push(c);
    }
    out
}

fn is_report(v: &Value) -> bool {
    v.get("errors").is_some_and(Value::is_array) || v.get("error_number").is_some()
}

fn report_value(text: &str) -> Option<Value> {
    for block in fenced_blocks(text).into_iter().rev() {
        if let Ok(v) = serde_json::from_str::<Value>(&fold_string_breaks(block.trim())) {
            if is_report(&v) {
                return Some(v);
            }
        }
    }
    extract_last(text, b'{', is_report)
}

fn with_prefix(k: usize, error: &str) -> String {
    let e = error.trim();
    let numbered = e
        .strip_prefix("Error ")
        .and_then(|r| r.split_once(':'))
        .is_some_and(|(n, _)| n.trim().parse::<usize>().is_ok());
    if numbered {
        e.to_string()
    } else {
        format!("Error {k}: {e}")
    }
}

/// Parse the verifier's summary. `None` when no summary can be read.
///
/// The error count follows the list when the two disagree; a positive count
/// with no listed errors gets one placeholder entry.
pub fn parse_plan_report(text: &str) -> Option<PlanReport> {
    let v = report_value(text)?;
    let mut errors: Vec<String> = v
        .get("errors")
        .and_then(Value::as_array)
        .map(|a| {
            a.iter()
                .map(|e| match e {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .enumerate()
                .map(|(i, e)| with_prefix(i + 1, &e))
                .collect()
        })
        .unwrap_or_default();
    let claimed = v.get("error_number").and_then(Value::as_u64);
    if errors.is_empty() && claimed.is_some_and(|n| n > 0) {
        errors.push(format!(
            "Error 1: the verifier counted {} error(s) without describing them",
            claimed.unwrap_or(0)
        ));
    }
    let analysis = match text.rfind("```") {
        Some(_) => text.split("```").next().unwrap_or("").trim().to_string(),
        None => String::new(),
    };
    Some(PlanReport {
        analysis,
        error_number: errors.len(),
        errors,
        warning: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_list_is_a_wait() {
        let p = parse_plan("Nothing to do.\n```\n[]\n```").unwrap();
        assert!(p.commands.is_empty());
        assert_eq!(p.reasoning, "Nothing to do.");
    }

    #[test]
    fn prose_only_is_not_a_plan() {
        assert_eq!(parse_plan("I would build a Pylon next."), None);
    }

    #[test]
    fn action_objects_are_not_commands() {
        assert_eq!(parse_plan("```\n[{\"action\": \"MOVE_MOVE\"}]\n```"), None);
    }

    #[test]
    fn folded_strings_parse() {
        let text = "```\n{\n  \"errors\": [\"Error 1: too\n        expensive\"],\n  \"error_number\": 1\n}\n```";
        let r = parse_plan_report(text).unwrap();
        assert_eq!(r.errors, ["Error 1: too expensive"]);
    }

    #[test]
    fn count_follows_list() {
        let r = parse_plan_report("```\n{\"errors\": [\"a\", \"b\"], \"error_number\": 1}\n```").unwrap();
        assert_eq!(r.error_number, 2);
        assert_eq!(r.errors, ["Error 1: a", "Error 2: b"]);
        let r = parse_plan_report("```\n{\"errors\": [], \"error_number\": 3}\n```").unwrap();
        assert_eq!(r.error_number, 1);
        assert!(!r.is_accepted());
    }

    #[test]
    fn empty_errors_accept() {
        let r = parse_plan_report("All good.\n```\n{\"errors\": [], \"error_number\": 0}\n```").unwrap();
        assert!(r.is_accepted());
        assert_eq!(r.analysis, "All good.");
    }
}
