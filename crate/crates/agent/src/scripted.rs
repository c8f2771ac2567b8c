//! A deterministic stand-in for a chat model.
//!
//! It reads the observation embedded in each prompt and answers in the
//! format the template asks for: commands for the planner, a JSON summary
//! for the plan verifier, action JSON for the executor and the naive agent.
//! Retry prompts are honoured by dropping whatever the feedback flagged.
//! Used for offline matches and tests.

use std::collections::{BTreeSet, HashMap};

use arena_core::obs::SECTION_NAMES;
use arena_core::protocol::{extract_last, serialize_actions, ActionRequest};
use arena_core::sim::state::POWER_RADIUS;
use arena_core::sim::{catalog, Faction, Pos, UnitKind};
use arena_core::trace::Usage;
use serde_json::Value;

use crate::backend::{estimate_tokens, BackendError, ChatBackend, ChatParams, ChatReply};
use crate::prompt::{PREVIOUS_ATTEMPT, VERIFIER_FEEDBACK};

const WORKER_TARGET: usize = 22;
const ATTACK_ARMY: usize = 10;
const QUEUE_DEPTH: usize = 2;

#[derive(Debug, Clone, Default)]
struct Block {
    ids: Vec<u32>,
    kind: String,
    pos: Option<Pos>,
    state: String,
    production: Vec<String>,
    larva: u32,
}

impl Block {
    fn id(&self) -> u32 {
        self.ids[0]
    }

    fn idle(&self) -> bool {
        self.state == "idle"
    }

    fn under_construction(&self) -> bool {
        self.state.starts_with("under construction")
    }
}

#[derive(Debug, Default)]
struct Facts {
    faction: Option<Faction>,
    minerals: u32,
    vespene: u32,
    supply_unused: u32,
    map: (i32, i32),
    units: Vec<Block>,
    structures: Vec<Block>,
    enemies: Vec<Block>,
    abilities: HashMap<u32, Vec<String>>,
    costs: HashMap<String, (u32, u32)>,
    nodes: Vec<Pos>,
}

fn ids_and_kind(line: &str) -> Option<(Vec<u32>, String)> {
    let rest = line.strip_prefix('[')?;
    let (ids, kind) = rest.split_once(']')?;
    let ids = ids
        .split(',')
        .map(|s| s.trim().parse().ok())
        .collect::<Option<Vec<u32>>>()?;
    Some((ids, kind.trim().to_string()))
}

fn parse_pair(s: &str) -> Option<Pos> {
    let inner = s.trim().strip_prefix('(')?.split(')').next()?;
    let (x, y) = inner.split_once(',')?;
    Some(Pos::new(x.trim().parse().ok()?, y.trim().parse().ok()?))
}

fn blocks(section: &str) -> Vec<Block> {
    let mut out: Vec<Block> = Vec::new();
    for line in section.lines() {
        if let Some((ids, kind)) = ids_and_kind(line) {
            out.push(Block {
                ids,
                kind,
                ..Block::default()
            });
            continue;
        }
        let Some(b) = out.last_mut() else { continue };
        if let Some(p) = line.strip_prefix("Position: ") {
            b.pos = parse_pair(p);
        } else if let Some(s) = line.strip_prefix("State: ") {
            b.state = s.to_string();
        } else if let Some(s) = line.strip_prefix("Production list: ") {
            b.production = s.split(", ").map(str::to_string).collect();
        } else if let Some(s) = line.strip_prefix("Larva: ") {
            b.larva = s.trim().parse().unwrap_or(0);
        }
    }
    out
}

fn sections(obs: &str) -> HashMap<&'static str, String> {
    let mut out: HashMap<&'static str, String> = HashMap::new();
    let mut current: Option<&'static str> = None;
    for line in obs.lines() {
        if let Some(name) = line
            .strip_prefix("# ")
            .and_then(|n| SECTION_NAMES.iter().find(|s| **s == n))
        {
            current = Some(name);
            out.entry(name).or_default();
            continue;
        }
        if let Some(name) = current {
            let s = out.entry(name).or_default();
            s.push_str(line);
            s.push('\n');
        }
    }
    out
}

fn cost_of(line: &str) -> (u32, u32) {
    let Some((_, cost)) = line.rsplit_once("Cost: ") else {
        return (0, 0);
    };
    let mut m = 0;
    let mut v = 0;
    for part in cost.trim_end_matches('.').split(", ") {
        let mut it = part.split_whitespace();
        let n: u32 = it.next().and_then(|n| n.parse().ok()).unwrap_or(0);
        match it.next() {
            Some("minerals") => m = n,
            Some("vespene") => v = n,
            _ => {}
        }
    }
    (m, v)
}

impl Facts {
    fn parse(obs: &str) -> Facts {
        let s = sections(obs);
        let mut f = Facts::default();
        let get = |k: &str| s.get(k).map(String::as_str).unwrap_or("");
        for line in get(SECTION_NAMES[0]).lines() {
            let Some((k, v)) = line.split_once(": ") else { continue };
            match k {
                "Race" => f.faction = serde_json::from_value(Value::String(v.to_lowercase())).ok(),
                "Minerals" => f.minerals = v.parse().unwrap_or(0),
                "Vespene" => f.vespene = v.parse().unwrap_or(0),
                "Supply unused" => f.supply_unused = v.parse().unwrap_or(0),
                "Map size" => {
                    if let Some((w, h)) = v.split_once('x') {
                        f.map = (w.parse().unwrap_or(0), h.parse().unwrap_or(0));
                    }
                }
                _ => {}
            }
        }
        f.units = blocks(get(SECTION_NAMES[1]));
        f.structures = blocks(get(SECTION_NAMES[3]));
        f.enemies = blocks(get(SECTION_NAMES[5]));
        f.enemies.extend(blocks(get(SECTION_NAMES[6])));
        for line in get(SECTION_NAMES[2]).lines().chain(get(SECTION_NAMES[4]).lines()) {
            let Some((head, names)) = line.split_once(": ") else { continue };
            let Some(open) = head.find('[') else { continue };
            let Some((ids, _)) = ids_and_kind(&head[open..]) else { continue };
            let names: Vec<String> = names.split(", ").map(str::to_string).collect();
            for id in ids {
                f.abilities.insert(id, names.clone());
            }
        }
        for line in get(SECTION_NAMES[9]).lines() {
            if let Some((name, _)) = line.split_once('(') {
                f.costs.insert(name.to_string(), cost_of(line));
            }
        }
        for line in get(SECTION_NAMES[8]).lines() {
            for chunk in line.split("](").skip(1) {
                if let Some(p) = parse_pair(&format!("({chunk}")) {
                    f.nodes.push(p);
                }
            }
        }
        f
    }

    fn kind(name: &str) -> Option<UnitKind> {
        serde_json::from_value(Value::String(name.to_string())).ok()
    }

    fn headquarters(&self) -> Option<&Block> {
        let hq = self.faction?.headquarters();
        self.structures
            .iter()
            .find(|b| Self::kind(&b.kind) == Some(hq) && !b.under_construction())
    }

    fn count(&self, kind: UnitKind) -> usize {
        let live: usize = self
            .units
            .iter()
            .chain(&self.structures)
            .filter(|b| Self::kind(&b.kind) == Some(kind))
            .map(|b| b.ids.len())
            .sum();
        let queued = self
            .units
            .iter()
            .chain(&self.structures)
            .flat_map(|b| &b.production)
            .filter(|p| Self::kind(p) == Some(kind))
            .count();
        live + queued
    }

    fn workers(&self) -> impl Iterator<Item = u32> + '_ {
        self.units
            .iter()
            .filter(|b| Self::kind(&b.kind).is_some_and(UnitKind::is_worker))
            .flat_map(|b| b.ids.iter().copied())
    }

    fn occupied(&self) -> Vec<(Pos, i32)> {
        let mut out: Vec<(Pos, i32)> = self
            .structures
            .iter()
            .chain(&self.enemies)
            .filter_map(|b| {
                let k = Self::kind(&b.kind)?;
                Some((b.pos?, if k.blocks_cells() { k.def().radius } else { 0 }))
            })
            .collect();
        out.extend(self.nodes.iter().map(|p| (*p, 1)));
        out
    }

    /// A free spot for `kind` near `around`, scanning rings outward.
    fn site(&self, kind: UnitKind, around: Pos, reserved: &[(Pos, i32)], powered: bool) -> Option<Pos> {
        let r = kind.def().radius;
        let mut taken = self.occupied();
        taken.extend_from_slice(reserved);
        let pylons: Vec<Pos> = self
            .structures
            .iter()
            .filter(|b| b.kind == "Pylon" && !b.under_construction())
            .filter_map(|b| b.pos)
            .collect();
        let (w, h) = self.map;
        for ring in 3i32..10 {
            for dy in -ring..=ring {
                for dx in -ring..=ring {
                    if dx.abs().max(dy.abs()) != ring {
                        continue;
                    }
                    let p = Pos::new(around.x + dx, around.y + dy);
                    if p.x - r < 1 || p.y - r < 1 || p.x + r > w - 2 || p.y + r > h - 2 {
                        continue;
                    }
                    // Keep a one-cell lane around every footprint.
                    let clear = taken.iter().all(|(q, qr)| {
                        (p.x - q.x).abs() > r + qr + 1 || (p.y - q.y).abs() > r + qr + 1
                    });
                    let power = !powered || pylons.iter().any(|q| p.dist(*q) <= POWER_RADIUS - 1.0);
                    if clear && power {
                        return Some(p);
                    }
                }
            }
        }
        None
    }
}

fn train_ability(abilities: &[String], unit: &str) -> Option<String> {
    let suffix = format!("TRAIN_{}", unit.to_uppercase());
    abilities.iter().find(|a| a.ends_with(&suffix)).cloned()
}

fn build_ability(abilities: &[String], kind: &str) -> Option<String> {
    let suffix = format!("BUILD_{}", kind.to_uppercase());
    abilities.iter().find(|a| a.ends_with(&suffix)).cloned()
}

fn trained_unit(ability: &str) -> Option<String> {
    let (_, unit) = ability.rsplit_once("TRAIN_")?;
    catalog()
        .units()
        .iter()
        .map(|d| d.kind.name())
        .find(|n| n.eq_ignore_ascii_case(unit))
        .map(str::to_string)
}

struct Planner<'a> {
    f: &'a Facts,
    minerals: u32,
    vespene: u32,
    supply: u32,
    used: BTreeSet<u32>,
    reserved: Vec<(Pos, i32)>,
    commands: Vec<String>,
}

impl Planner<'_> {
    fn afford(&self, ability: &str) -> Option<(u32, u32)> {
        let (m, v) = *self.f.costs.get(ability)?;
        (m <= self.minerals && v <= self.vespene).then_some((m, v))
    }

    fn spend(&mut self, cost: (u32, u32)) {
        self.minerals -= cost.0;
        self.vespene -= cost.1;
    }

    fn train(&mut self, structure: &Block, unit: &str) -> bool {
        let Some(ability) = self
            .f
            .abilities
            .get(&structure.id())
            .and_then(|a| train_ability(a, unit))
        else {
            return false;
        };
        let supply = Facts::kind(unit).map(|k| k.def().supply).unwrap_or(0);
        if supply > self.supply {
            return false;
        }
        let Some(cost) = self.afford(&ability) else { return false };
        self.spend(cost);
        self.supply -= supply;
        self.commands.push(format!("Train 1 {unit} at {} [{}]", structure.kind, structure.id()));
        true
    }

    fn build(&mut self, kind: UnitKind, around: Pos) -> bool {
        let builder = self.f.workers().find(|w| {
            !self.used.contains(w)
                && self
                    .f
                    .abilities
                    .get(w)
                    .is_some_and(|a| build_ability(a, kind.name()).is_some())
        });
        let Some(builder) = builder else { return false };
        let ability = build_ability(&self.f.abilities[&builder], kind.name()).unwrap_or_default();
        let Some(cost) = self.afford(&ability) else { return false };
        let Some(site) = self.f.site(kind, around, &self.reserved, kind.def().needs_power) else {
            return false;
        };
        self.spend(cost);
        self.used.insert(builder);
        self.reserved.push((site, kind.def().radius));
        let worker = self
            .f
            .units
            .iter()
            .find(|b| b.ids.contains(&builder))
            .map(|b| b.kind.clone())
            .unwrap_or_default();
        self.commands.push(format!(
            "Build a {} at ({}, {}) with {worker} [{builder}]",
            kind.name(),
            site.x,
            site.y
        ));
        true
    }
}

fn plan_commands(f: &Facts) -> Vec<String> {
    let Some(faction) = f.faction else { return Vec::new() };
    let mut p = Planner {
        f,
        minerals: f.minerals,
        vespene: f.vespene,
        supply: f.supply_unused,
        used: BTreeSet::new(),
        reserved: Vec::new(),
        commands: Vec::new(),
    };
    let Some(hq) = f.headquarters() else {
        return attack_commands(f);
    };
    let home = hq.pos.unwrap_or(Pos::new(f.map.0 / 2, f.map.1 / 2));
    let provider = faction.supply_provider();

    // Supply.
    let pending_supply = f
        .units
        .iter()
        .chain(&f.structures)
        .any(|b| Facts::kind(&b.kind) == Some(provider) && b.under_construction()
            || b.production.iter().any(|x| Facts::kind(x) == Some(provider)));
    let supply_built = f
        .structures
        .iter()
        .any(|b| Facts::kind(&b.kind) == Some(provider) && b.under_construction());
    if f.supply_unused < 6 && !pending_supply && !supply_built {
        if provider.is_structure() {
            p.build(provider, home);
        } else {
            p.train(hq, provider.name());
        }
    }

    // Production structures.
    let producer = match faction {
        Faction::Terran => UnitKind::Barracks,
        Faction::Protoss => UnitKind::Gateway,
        Faction::Zerg => UnitKind::SpawningPool,
    };
    let wanted = if f.minerals > 400 { 2 } else { 1 };
    if f.count(producer) < wanted && (faction != Faction::Protoss || f.count(UnitKind::Pylon) > 0) {
        let around = match faction {
            Faction::Protoss => f
                .structures
                .iter()
                .find(|b| b.kind == "Pylon" && !b.under_construction())
                .and_then(|b| b.pos),
            _ => Some(home),
        };
        if let Some(around) = around {
            p.build(producer, around);
        }
    }

    // Workers.
    let workers = f.count(faction.worker());
    if workers < WORKER_TARGET && hq.production.len() < QUEUE_DEPTH {
        p.train(hq, faction.worker().name());
    }

    // Army, most expensive affordable unit per slot.
    for s in &f.structures {
        if s.under_construction() {
            continue;
        }
        let Some(abilities) = f.abilities.get(&s.id()) else { continue };
        let mut options: Vec<(u32, String)> = abilities
            .iter()
            .filter_map(|a| trained_unit(a))
            .filter(|u| Facts::kind(u).is_some_and(UnitKind::is_army))
            .map(|u| {
                let a = train_ability(abilities, &u).unwrap_or_default();
                let (m, v) = f.costs.get(&a).copied().unwrap_or((0, 0));
                (m + v, u)
            })
            .collect();
        if options.is_empty() {
            continue;
        }
        options.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        let slots = if s.larva > 0 {
            s.larva as usize
        } else {
            QUEUE_DEPTH.saturating_sub(s.production.len())
        };
        for _ in 0..slots {
            if !options.iter().any(|(_, u)| p.train(s, u)) {
                break;
            }
        }
    }

    let mut commands = p.commands;
    commands.extend(attack_commands(f));
    commands
}

fn attack_commands(f: &Facts) -> Vec<String> {
    let army: Vec<u32> = f
        .units
        .iter()
        .filter(|b| Facts::kind(&b.kind).is_some_and(UnitKind::is_army) && b.idle())
        .flat_map(|b| b.ids.iter().copied())
        .collect();
    if army.is_empty() {
        return Vec::new();
    }
    let ids = army.iter().map(u32::to_string).collect::<Vec<_>>().join(", ");
    if let Some(e) = f.enemies.first() {
        return vec![format!("Attack enemy {} [{}] with army [{ids}]", e.kind, e.id())];
    }
    if army.len() >= ATTACK_ARMY {
        let home = f
            .headquarters()
            .and_then(|b| b.pos)
            .or_else(|| f.structures.first().and_then(|b| b.pos))
            .unwrap_or(Pos::new(f.map.0 / 2, f.map.1 / 2));
        let (x, y) = (f.map.0 - 1 - home.x, f.map.1 - 1 - home.y);
        return vec![format!("Attack-move army [{ids}] to ({x}, {y})")];
    }
    Vec::new()
}

fn bracket_ids(s: &str) -> Vec<u32> {
    s.split(['[', ']'])
        .nth(1)
        .map(|inner| inner.split(',').filter_map(|x| x.trim().parse().ok()).collect())
        .unwrap_or_default()
}

fn command_actions(f: &Facts, commands: &[String]) -> Vec<ActionRequest> {
    let mut out = Vec::new();
    for c in commands {
        if let Some(rest) = c.strip_prefix("Train 1 ") {
            let Some((unit, at)) = rest.split_once(" at ") else { continue };
            let Some(&id) = bracket_ids(at).first() else { continue };
            if let Some(a) = f.abilities.get(&id).and_then(|a| train_ability(a, unit)) {
                out.push(ActionRequest::new(a, [id]));
            }
        } else if let Some(rest) = c.strip_prefix("Build a ") {
            let Some((kind, rest)) = rest.split_once(" at ") else { continue };
            let Some((pos, with)) = rest.split_once(" with ") else { continue };
            let (Some(p), Some(&id)) = (parse_pair(pos), bracket_ids(with).first()) else { continue };
            if let Some(a) = f.abilities.get(&id).and_then(|a| build_ability(a, kind)) {
                out.push(ActionRequest::new(a, [id]).at(p.x, p.y));
            }
        } else if let Some(rest) = c.strip_prefix("Attack enemy ") {
            let Some((target, with)) = rest.split_once(" with ") else { continue };
            let (Some(&t), units) = (bracket_ids(target).first(), bracket_ids(with)) else { continue };
            if !units.is_empty() {
                out.push(ActionRequest::new("ATTACK_ATTACK", units).on_unit(t));
            }
        } else if let Some(rest) = c.strip_prefix("Attack-move army ") {
            let Some((ids, to)) = rest.split_once(" to ") else { continue };
            if let Some(p) = parse_pair(to) {
                out.push(ActionRequest::new("ATTACK_ATTACK", bracket_ids(ids)).at(p.x, p.y));
            }
        }
    }
    out
}

/// Indices flagged by `>>>> Action {i} error` lines; `None` for a batch-level
/// total error.
fn flagged(feedback: &str) -> (BTreeSet<usize>, bool) {
    let mut idx = BTreeSet::new();
    let mut total = false;
    for line in feedback.lines() {
        if let Some(rest) = line.strip_prefix(">>>> Action ") {
            if let Some(i) = rest.split_whitespace().next().and_then(|n| n.parse().ok()) {
                idx.insert(i);
            }
        } else if line.starts_with(">>>> Total") || line.starts_with(">>>> JSON") {
            total = true;
        }
    }
    (idx, total)
}

fn retry_parts(prompt: &str) -> Option<(&str, &str)> {
    let (_, tail) = prompt.split_once(&format!("\n\n{PREVIOUS_ATTEMPT}\n"))?;
    tail.split_once(&format!("\n\n{VERIFIER_FEEDBACK}\n"))
}

fn between<'a>(text: &'a str, start: &str, ends: &[&str]) -> &'a str {
    let Some(i) = text.find(start) else { return "" };
    let rest = &text[i + start.len()..];
    let end = ends.iter().filter_map(|e| rest.find(e)).min().unwrap_or(rest.len());
    &rest[..end]
}

fn commands_in(text: &str) -> Vec<String> {
    extract_last(text, b'[', |v| v.as_array().is_some_and(|a| a.iter().all(Value::is_string)))
        .and_then(|v| serde_json::from_value(v).ok())
        .unwrap_or_default()
}

fn fenced_commands(commands: &[String]) -> String {
    crate::prompt::format_commands(commands)
}

/// The stand-in model. Stateless, so one instance can serve every match.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScriptedModel;

impl ScriptedModel {
    fn answer(&self, prompt: &str) -> String {
        let obs = between(
            prompt,
            "Current Game State\n",
            &["\n\nRules\n", "\n\nGiven Commands\n", "\n\nGiven Tasks\n"],
        );
        let facts = Facts::parse(obs);
        let retry = retry_parts(prompt);
        if prompt.starts_with("As a top-tier StarCraft II executor") {
            let actions = match retry {
                Some((previous, feedback)) => {
                    let prev = extract_last(previous, b'[', Value::is_array)
                        .and_then(|v| serde_json::from_value::<Vec<ActionRequest>>(v).ok())
                        .unwrap_or_default();
                    let (idx, total) = flagged(feedback);
                    let mut kept: Vec<ActionRequest> = prev
                        .into_iter()
                        .enumerate()
                        .filter(|(i, _)| !idx.contains(i))
                        .map(|(_, a)| a)
                        .collect();
                    if total && idx.is_empty() {
                        kept.pop();
                    }
                    kept
                }
                None => {
                    let tasks = between(prompt, "Given Tasks\n", &["\n\nRules\n"]);
                    command_actions(&facts, &commands_in(tasks))
                }
            };
            return format!("Mapping each task to actions.\n```\n{}\n```", serialize_actions(&actions));
        }
        if prompt.starts_with("As a top-tier StarCraft II player") {
            let given = commands_in(between(prompt, "Given Commands\n", &["\n\nRules Checklist\n"]));
            let actions = command_actions(&facts, &given);
            let (m, v) = actions.iter().fold((0, 0), |(m, v), a| {
                let (cm, cv) = facts.costs.get(&a.action).copied().unwrap_or((0, 0));
                (m + cm, v + cv)
            });
            let errors: Vec<String> = if m > facts.minerals || v > facts.vespene {
                vec![format!(
                    "Error 1: The commands need {m} minerals and {v} vespene but only {} and {} are available",
                    facts.minerals, facts.vespene
                )]
            } else {
                Vec::new()
            };
            let summary = serde_json::json!({"errors": errors, "error_number": errors.len()});
            return format!(
                "Checked resource totals of the given commands.\n```\n{}\n```",
                serde_json::to_string_pretty(&summary).unwrap_or_default()
            );
        }
        let commands = match retry {
            Some((previous, _)) => {
                let mut c = commands_in(previous);
                c.pop();
                c
            }
            None => plan_commands(&facts),
        };
        if prompt.contains("Give an action JSON") {
            let actions = command_actions(&facts, &commands);
            return format!("Acting on the current state.\n```\n{}\n```", serialize_actions(&actions));
        }
        format!(
            "Reviewed resources, supply, production and visible enemies.\n{}",
            fenced_commands(&commands)
        )
    }
}

impl ChatBackend for ScriptedModel {
    fn chat(&self, prompt: &str, _params: &ChatParams) -> Result<ChatReply, BackendError> {
        let text = self.answer(prompt);
        Ok(ChatReply {
            usage: Usage {
                tokens_in: estimate_tokens(prompt),
                tokens_out: estimate_tokens(&text),
            },
            text,
            retries: 0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use arena_core::obs::fixture::{showcase_history, showcase_state};
    use arena_core::obs::render_observation;
    use arena_core::sim::PlayerId;

    #[test]
    fn reads_the_showcase() {
        let state = showcase_state();
        let obs = render_observation(&state, PlayerId::ONE, &showcase_history());
        let f = Facts::parse(&obs.full_text);
        assert_eq!(f.faction, Some(Faction::Protoss));
        assert_eq!((f.minerals, f.vespene, f.supply_unused), (175, 154, 3));
        assert_eq!(f.headquarters().map(Block::id), Some(377));
        assert_eq!(f.workers().count(), 18);
        assert_eq!(f.costs["GATEWAYTRAIN_STALKER"], (125, 50));
        assert!(f.abilities[&273].contains(&"GATEWAYTRAIN_ZEALOT".to_string()));
        assert_eq!(f.enemies.first().map(Block::id), Some(705));
    }

    #[test]
    fn commands_map_to_actions() {
        let state = showcase_state();
        let obs = render_observation(&state, PlayerId::ONE, &showcase_history());
        let f = Facts::parse(&obs.full_text);
        let actions = command_actions(
            &f,
            &[
                "Train 1 Zealot at Gateway [554]".into(),
                "Attack enemy Nexus [249] with army [399, 539]".into(),
            ],
        );
        assert_eq!(actions[0], ActionRequest::new("GATEWAYTRAIN_ZEALOT", [554]));
        assert_eq!(actions[1], ActionRequest::new("ATTACK_ATTACK", [399, 539]).on_unit(249));
    }

    #[test]
    fn feedback_indices() {
        let (idx, total) = flagged(">>>> Action 2 error: x\n>>>> Total actions error: y");
        assert_eq!(idx.into_iter().collect::<Vec<_>>(), [2]);
        assert!(total);
    }
}
