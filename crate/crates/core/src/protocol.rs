//! Action JSON protocol: extraction from model text, schema parsing,
//! canonical serialization and batch validation.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::sim::check::{self, Stage};
use crate::sim::{GameState, PlayerId};

/// One command: an ability applied by a group of own units.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionRequest {
    pub action: String,
    pub units: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_unit: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_position: Option<[i32; 2]>,
}

impl ActionRequest {
    pub fn new(action: impl Into<String>, units: impl IntoIterator<Item = u32>) -> Self {
        ActionRequest {
            action: action.into(),
            units: units.into_iter().collect(),
            target_unit: None,
            target_position: None,
        }
    }

    pub fn on_unit(mut self, target: u32) -> Self {
        self.target_unit = Some(target);
        self
    }

    pub fn at(mut self, x: i32, y: i32) -> Self {
        self.target_position = Some([x, y]);
        self
    }

    /// Canonical single-line form, e.g.
    /// `{"action": "ATTACK_ATTACK", "units": [1, 2], "target_unit": 9}`.
    pub fn to_canonical(&self) -> String {
        to_spaced_json(self)
    }
}

impl fmt::Display for ActionRequest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_canonical())
    }
}

/// JSON with `", "` and `": "` separators on one line.
struct Spaced;

impl serde_json::ser::Formatter for Spaced {
    fn begin_array_value<W: ?Sized + std::io::Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        if first {
            Ok(())
        } else {
            w.write_all(b", ")
        }
    }

    fn begin_object_key<W: ?Sized + std::io::Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        if first {
            Ok(())
        } else {
            w.write_all(b", ")
        }
    }

    fn begin_object_value<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        w.write_all(b": ")
    }
}

/// Serialize any value on one line with spaced separators.
pub fn to_spaced_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Spaced);
    value.serialize(&mut ser).expect("in-memory serialization");
    String::from_utf8(out).expect("serde_json emits UTF-8")
}

/// Canonical serialization of a batch as a JSON array.
pub fn serialize_actions(actions: &[ActionRequest]) -> String {
    to_spaced_json(actions)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct SyntaxError(pub String);

/// Bodies of triple-backtick fenced blocks, in order of appearance.
pub fn fenced_blocks(text: &str) -> Vec<&str> {
    let mut blocks = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find("```") {
        let after = &rest[open + 3..];
        // Skip an info string such as `json` up to the end of the line.
        let body_start = after.find('\n').map(|i| i + 1).unwrap_or(after.len());
        let info = &after[..body_start];
        let body_start = if info.trim().chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            body_start
        } else {
            0
        };
        let body = &after[body_start..];
        match body.find("```") {
            Some(close) => {
                blocks.push(&body[..close]);
                rest = &body[close + 3..];
            }
            None => break,
        }
    }
    blocks
}

/// End index (exclusive) of the bracket group opened at `start`.
fn matching_close(text: &[u8], start: usize) -> Option<usize> {
    let (open, close) = match text[start] {
        b'[' => (b'[', b']'),
        b'{' => (b'{', b'}'),
        _ => return None,
    };
    let mut depth = 0usize;
    let mut in_str = false;
    let mut escaped = false;
    for (i, &c) in text.iter().enumerate().skip(start) {
        if in_str {
            match c {
                _ if escaped => escaped = false,
                b'\\' => escaped = true,
                b'"' => in_str = false,
                _ => {}
            }
            continue;
        }
        match c {
            b'"' => in_str = true,
            c if c == open => depth += 1,
            c if c == close => {
                depth -= 1;
                if depth == 0 {
                    return Some(i + 1);
                }
            }
            _ => {}
        }
    }
    None
}

/// The last JSON value in `text` accepted by `want`: fenced blocks first,
/// then bare bracket-balanced substrings opened by `opener`.
pub fn extract_last(text: &str, opener: u8, want: impl Fn(&Value) -> bool) -> Option<Value> {
    for block in fenced_blocks(text).into_iter().rev() {
        if let Ok(v) = serde_json::from_str::<Value>(block.trim()) {
            if want(&v) {
                return Some(v);
            }
        }
    }
    let bytes = text.as_bytes();
    let mut best: Option<(usize, usize, Value)> = None;
    for start in (0..bytes.len()).filter(|&i| bytes[i] == opener) {
        let Some(end) = matching_close(bytes, start) else { continue };
        if best.as_ref().is_some_and(|(bs, be, _)| end < *be || end == *be && start > *bs) {
            continue;
        }
        if let Ok(v) = serde_json::from_str::<Value>(&text[start..end]) {
            if want(&v) {
                best = Some((start, end, v));
            }
        }
    }
    best.map(|(_, _, v)| v)
}

/// Pull the action array out of free-form model output.
pub fn extract_json(model_text: &str) -> Result<Value, SyntaxError> {
    if model_text.trim().is_empty() {
        return Err(SyntaxError("the response is empty; expected a JSON array of actions".into()));
    }
    extract_last(model_text, b'[', Value::is_array).ok_or_else(|| {
        SyntaxError("no parseable JSON array of actions found in the response".into())
    })
}

/// A schema violation in one element of the action array.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error(">>>> Action {index} error: {message}")]
pub struct SchemaError {
    pub index: usize,
    pub message: String,
}

const KNOWN_KEYS: [&str; 4] = ["action", "units", "target_unit", "target_position"];

fn as_id(v: &Value) -> Option<u32> {
    v.as_u64().and_then(|n| u32::try_from(n).ok())
}

/// Map a raw JSON array onto requests, collecting every schema violation.
pub fn parse_actions(raw: &Value) -> Result<Vec<ActionRequest>, Vec<SchemaError>> {
    let Some(items) = raw.as_array() else {
        return Err(vec![SchemaError {
            index: 0,
            message: "the top-level value must be a JSON array".into(),
        }]);
    };
    let mut out = Vec::new();
    let mut errors = Vec::new();
    for (index, item) in items.iter().enumerate() {
        let Some(obj) = item.as_object() else {
            errors.push(SchemaError {
                index,
                message: "each action must be a JSON object".into(),
            });
            continue;
        };
        let mut local: Vec<String> = Vec::new();
        let mut err = |m: String| local.push(m);
        for k in obj.keys() {
            if !KNOWN_KEYS.contains(&k.as_str()) {
                err(format!("unknown key \"{k}\""));
            }
        }
        let action = match obj.get("action") {
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => {
                err("action must be a string".into());
                None
            }
            None => {
                err("missing key \"action\"".into());
                None
            }
        };
        let units = match obj.get("units") {
            Some(Value::Array(a)) => {
                let ids: Vec<Option<u32>> = a.iter().map(as_id).collect();
                if a.is_empty() {
                    err("units must be non-empty".into());
                    None
                } else if ids.iter().any(Option::is_none) {
                    err("units must be a list of unit ids (non-negative integers)".into());
                    None
                } else {
                    Some(ids.into_iter().flatten().collect::<Vec<_>>())
                }
            }
            Some(_) => {
                err("units must be a list of unit ids".into());
                None
            }
            None => {
                err("missing key \"units\"".into());
                None
            }
        };
        let target_unit = match obj.get("target_unit") {
            None | Some(Value::Null) => None,
            Some(v) => {
                let id = as_id(v);
                if id.is_none() {
                    err("target_unit must be a unit id (non-negative integer)".into());
                }
                id
            }
        };
        let target_position = match obj.get("target_position") {
            None | Some(Value::Null) => None,
            Some(v) => {
                let pos = v.as_array().filter(|a| a.len() == 2).and_then(|a| {
                    let x = a[0].as_i64().and_then(|n| i32::try_from(n).ok())?;
                    let y = a[1].as_i64().and_then(|n| i32::try_from(n).ok())?;
                    Some([x, y])
                });
                if pos.is_none() {
                    err("target_position must be a list of two integers [x, y]".into());
                }
                pos
            }
        };
        if obj.get("target_unit").is_some_and(|v| !v.is_null())
            && obj.get("target_position").is_some_and(|v| !v.is_null())
        {
            err("use either target_unit or target_position, not both".into());
        }
        if local.is_empty() {
            out.push(ActionRequest {
                action: action.expect("checked"),
                units: units.expect("checked"),
                target_unit,
                target_position,
            });
        }
        errors.extend(local.into_iter().map(|message| SchemaError { index, message }));
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(errors)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accepted,
    Rejected,
}

/// Outcome of checking one executor response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub verdict: Verdict,
    pub errors: Vec<String>,
    /// Earliest failing stage; absent when accepted.
    pub stage: Option<Stage>,
}

impl ValidationReport {
    pub fn accepted() -> Self {
        ValidationReport {
            verdict: Verdict::Accepted,
            errors: Vec::new(),
            stage: None,
        }
    }

    pub fn rejected(stage: Stage, errors: Vec<String>) -> Self {
        ValidationReport {
            verdict: Verdict::Rejected,
            errors,
            stage: Some(stage),
        }
    }

    pub fn is_accepted(&self) -> bool {
        self.verdict == Verdict::Accepted
    }

    /// Feedback text handed back to the model on rejection.
    pub fn feedback(&self) -> String {
        self.errors.join("\n")
    }
}

/// Check a schema-valid batch against the current state. Any violation
/// rejects the whole batch.
pub fn validate_actions(state: &GameState, player: PlayerId, actions: &[ActionRequest]) -> ValidationReport {
    let mut errors: Vec<(Stage, String)> = Vec::new();
    let mut resolved = Vec::new();
    for (i, a) in actions.iter().enumerate() {
        match check::check_action(state, player, a) {
            Ok(r) => resolved.push((i, r)),
            Err(es) => errors.extend(
                es.into_iter()
                    .map(|e| (e.stage(), format!(">>>> Action {i} error: {e}"))),
            ),
        }
    }
    for (i, e) in check::duplicate_units(actions) {
        errors.push((e.stage(), format!(">>>> Action {i} error: {e}")));
    }
    let refs: Vec<(usize, &check::Resolved)> = resolved.iter().map(|(i, r)| (*i, r)).collect();
    for (i, e) in check::batch_conflicts(&refs) {
        errors.push((e.stage(), format!(">>>> Action {i} error: {e}")));
    }
    for e in check::batch_totals(state, player, actions) {
        errors.push((e.stage(), format!(">>>> Total actions error: {e}")));
    }
    match errors.iter().map(|(s, _)| *s).min() {
        None => ValidationReport::accepted(),
        Some(stage) => ValidationReport::rejected(stage, errors.into_iter().map(|(_, m)| m).collect()),
    }
}

/// Full executor-output check: extraction, schema, then state validation.
pub fn verify_response(
    state: &GameState,
    player: PlayerId,
    model_text: &str,
) -> (Option<Vec<ActionRequest>>, ValidationReport) {
    let raw = match extract_json(model_text) {
        Ok(v) => v,
        Err(e) => {
            return (
                None,
                ValidationReport::rejected(Stage::Syntax, vec![format!(">>>> JSON error: {e}")]),
            )
        }
    };
    let actions = match parse_actions(&raw) {
        Ok(a) => a,
        Err(es) => {
            return (
                None,
                ValidationReport::rejected(Stage::Syntax, es.iter().map(ToString::to_string).collect()),
            )
        }
    };
    let report = validate_actions(state, player, &actions);
    (Some(actions), report)
}

/// Machine-readable schema of the action array.
pub const ACTION_SCHEMA: &str = include_str!("../data/action.schema.json");
