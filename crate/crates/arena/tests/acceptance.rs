//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion.

use std::collections::BTreeSet;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use arena::config::{AgentKind, AgentSpec, BackendSpec};
use arena::runner::{play, run_match, MatchSpec, Seat};
use arena_agent::backend::{prompt_hash, Canned};
use arena_agent::{
    BackendError, ChatBackend, ChatParams, ChatReply, LlmAgent, Pipeline, ScriptedModel,
};
use arena_core::dataset::{
    build_dataset, metric_values, normalize_metrics, score_action, select_samples, MetricVector,
    SeatSteps, GAMMA, HORIZON,
};
use arena_core::metrics::{
    compute_metrics, expected_score, run_rating_pass, DecisionStat, EloTable, MatchRecord,
    SeatSeries, Winner,
};
use arena_core::obs::{fixture, order_units, render_observation};
use arena_core::protocol::{
    serialize_actions, validate_actions, verify_response, ActionRequest, ValidationReport,
};
use arena_core::sim::check::unit_abilities;
use arena_core::sim::data::Effect;
use arena_core::sim::types::{QueueItem, QUEUE_CAPACITY};
use arena_core::sim::{
    builtin_policy, create_match, empty_match, policy_round, step, AbilityDef, Event, Faction,
    GameState, MatchConfig, Outcome, PlayerId, Pos, Product, Stage, TargetKind, UnitId, UnitKind,
    UnitRecord,
};
use arena_core::trace::{
    AgentInfo, DecisionTrace, ExecRound, MatchResult, PlanReport, PlanRound, SeatDecision,
    TickLine, Trajectory, Usage,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FACTIONS: [Faction; 3] = [Faction::Terran, Faction::Zerg, Faction::Protoss];

struct Verdict {
    pass: bool,
    detail: String,
    /// Fails only on a target known to be inconsistent.
    known_gap: bool,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
        known_gap: false,
    }
}

fn sink_match(spec: &MatchSpec) -> arena::MatchSummary {
    run_match(spec, std::io::sink()).unwrap()
}

// 1. Determinism.

fn determinism() -> Verdict {
    let start = Instant::now();
    let mut mismatched = Vec::new();
    for i in 0..20u64 {
        let faction = FACTIONS[i as usize % 3];
        let seed = 1000 + 37 * i;
        let spec = MatchSpec::new(
            format!("det-{i}"),
            MatchConfig::mirror(faction, seed),
            [
                AgentSpec::builtin("scripted", 1 + (i % 7) as u8).with_kind(AgentKind::Scripted),
                AgentSpec::builtin("builtin", 1 + ((i + 3) % 7) as u8),
            ],
        );
        let a = sink_match(&spec);
        let b = sink_match(&spec);
        if a.trajectory_sha256 != b.trajectory_sha256 || a.final_digest != b.final_digest {
            mismatched.push(i);
        }
    }
    let elapsed = start.elapsed();
    verdict(
        mismatched.is_empty() && elapsed < Duration::from_secs(60),
        format!("20 matches x2, mismatched {mismatched:?}, {:.1}s (< 60s)", elapsed.as_secs_f64()),
    )
}

// 2. Elo.

fn elo() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let names = ["a", "b", "c", "d", "e", "f"];
    let mut table = EloTable::default();
    for n in names {
        table.ratings.insert(n.into(), 1000.0);
    }
    let mut drift: f64 = 0.0;
    for _ in 0..10_000 {
        let (a, b) = loop {
            let a = names[rng.gen_range(0..names.len())];
            let b = names[rng.gen_range(0..names.len())];
            if a != b {
                break (a, b);
            }
        };
        let score = [0.0, 0.5, 1.0][rng.gen_range(0..3)];
        table.update(a, b, score).unwrap();
        drift = drift.max((table.total() - 6000.0).abs());
    }
    let conserved = drift <= 1e-9;

    // 1 / (1 + 10^(200/400)) evaluated through sqrt instead of powf.
    let oracle = 1.0 / (1.0 + 10f64.sqrt());
    let e = expected_score(1000.0, 1200.0);
    let expected_ok = (e - oracle).abs() <= 1e-6 && (e - 0.240253).abs() <= 1e-6;

    let mut records = Vec::new();
    for i in 0..20 {
        let strong_first = i % 2 == 0;
        let strong_wins = i < 15;
        let (a, b) = if strong_first { ("strong", "weak") } else { ("weak", "strong") };
        let winner = if strong_wins == strong_first { Winner::First } else { Winner::Second };
        records.push(MatchRecord::result_only(a, b, winner));
    }
    let above = (0..100)
        .filter(|&seed| {
            let t = run_rating_pass(&records, seed).unwrap();
            t.rating("strong") > t.rating("weak")
        })
        .count();
    verdict(
        conserved && expected_ok && above >= 95,
        format!("max sum drift {drift:.1e}, E(1000,1200) = {e:.9}, 15-5 favourite above in {above}/100 shuffles"),
    )
}

// 3. Scoring function.

const KINDS: [UnitKind; 6] = [
    UnitKind::Probe,
    UnitKind::Zealot,
    UnitKind::Stalker,
    UnitKind::Pylon,
    UnitKind::Gateway,
    UnitKind::Sentry,
];

fn raw_metrics(kinds: &[UnitKind]) -> [f64; 4] {
    let mut v = [0.0; 4];
    for k in kinds {
        let d = k.def();
        v[0] += d.minerals as f64;
        v[1] += d.vespene as f64;
        v[2] += matches!(k, UnitKind::Zealot | UnitKind::Stalker | UnitKind::Sentry) as u8 as f64;
        v[3] += (*k == UnitKind::Probe) as u8 as f64;
    }
    v
}

/// Z-normalize by hand, then sum the 20 discounted gains term by term.
fn brute_force_score(raw: &[[f64; 4]], t: usize) -> f64 {
    let n = raw.len() as f64;
    let mut norm = vec![[0.0; 4]; raw.len()];
    for m in 0..4 {
        let mean = raw.iter().map(|r| r[m]).sum::<f64>() / n;
        let sd = (raw.iter().map(|r| (r[m] - mean).powi(2)).sum::<f64>() / n).sqrt();
        for (i, r) in raw.iter().enumerate() {
            norm[i][m] = if sd == 0.0 { 0.0 } else { (r[m] - mean) / sd };
        }
    }
    let mut total = 0.0;
    let mut discount = 1.0;
    for k in 1..=20 {
        discount *= 0.95;
        total += discount * (0..4).map(|m| norm[t + k][m] - norm[t][m]).sum::<f64>();
    }
    total
}

fn state_with(kinds: &[UnitKind]) -> GameState {
    let mut s = empty_match(MatchConfig::default()).unwrap();
    for (i, k) in kinds.iter().enumerate() {
        let pos = Pos::new(2 + (i as i32 % 40), 2 + 4 * (i as i32 / 40));
        s.insert_unit(UnitRecord::new(UnitId(i as u32 + 1), *k, Some(PlayerId::ONE), pos));
    }
    s
}

fn scoring() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut shape_ok = true;
    for _ in 0..50 {
        let len = rng.gen_range(HORIZON + 1..HORIZON + 15);
        let mut kinds: Vec<UnitKind> = Vec::new();
        let (mut raw, mut metrics) = (Vec::new(), Vec::new());
        for _ in 0..len {
            for _ in 0..rng.gen_range(0..3) {
                kinds.push(KINDS[rng.gen_range(0..KINDS.len())]);
            }
            if !kinds.is_empty() && rng.gen_bool(0.2) {
                kinds.remove(rng.gen_range(0..kinds.len()));
            }
            raw.push(raw_metrics(&kinds));
            metrics.push(metric_values(&state_with(&kinds), PlayerId::ONE));
        }
        let normalized = normalize_metrics(&metrics);
        for t in 0..len {
            match score_action(&normalized, t) {
                Some(s) => {
                    let want = brute_force_score(&raw, t);
                    worst = worst.max((s - want).abs() / want.abs().max(1.0));
                }
                None => shape_ok &= t + HORIZON >= len,
            }
        }
    }
    let brute_ok = worst <= 1e-9 && shape_ok;

    // A single unit increment right after t, held for the whole horizon.
    let rows: Vec<[f64; 4]> = (0..=HORIZON).map(|k| [(k > 0) as u8 as f64, 0.0, 0.0, 0.0]).collect();
    let geometric = score_action(&rows, 0).unwrap();
    let closed_form = 0.95 * (1.0 - 0.95f64.powi(20)) / 0.05;
    let matches_closed_form = (geometric - closed_form).abs() <= 1e-9;
    let matches_target = (geometric - 12.1925).abs() <= 1e-4;

    let g20 = GAMMA.powi(20);
    let g20_ok = (0.355..=0.360).contains(&g20);
    let known_gap = brute_ok && matches_closed_form && g20_ok && !matches_target;
    let v = verdict(
        brute_ok && matches_closed_form && matches_target && g20_ok,
        format!(
            "brute force worst rel err {worst:.1e}; geometric case {geometric:.6} \
             (closed form {closed_form:.6}, target 12.1925 {}); 0.95^20 = {g20:.6}",
            if matches_target { "met" } else { "NOT met: target disagrees with the closed form" }
        ),
    );
    Verdict { known_gap, ..v }
}

// 4. Fault injection.

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Fault {
    Syntax,
    UnknownAbility,
    DeadUnit,
    DuplicateUnit,
    BadTarget,
    FullQueue,
    Overdraw,
}

const FAULTS: [Fault; 7] = [
    Fault::Syntax,
    Fault::UnknownAbility,
    Fault::DeadUnit,
    Fault::DuplicateUnit,
    Fault::BadTarget,
    Fault::FullQueue,
    Fault::Overdraw,
];

/// Base states from real play: three factions at several game times.
fn base_states() -> Vec<GameState> {
    let mut out = Vec::new();
    for (fi, faction) in FACTIONS.into_iter().enumerate() {
        let mut s = create_match(MatchConfig::mirror(faction, 500 + fi as u64)).unwrap();
        for stop in [0u64, 400, 1500, 3000, 5000] {
            while s.tick < stop && s.tick < s.config.max_ticks {
                let a = builtin_policy(&s, PlayerId::ONE, 5);
                let b = builtin_policy(&s, PlayerId::TWO, 5);
                step(&mut s, [&a, &b]);
            }
            out.push(s.clone());
        }
    }
    out
}

fn clean_batch(state: &GameState) -> Vec<ActionRequest> {
    let batch = policy_round(state, PlayerId::ONE, 5);
    if validate_actions(state, PlayerId::ONE, &batch).is_accepted() {
        batch
    } else {
        Vec::new()
    }
}

fn own_ids(state: &GameState) -> Vec<UnitId> {
    state.own_units(PlayerId::ONE).map(|u| u.id).collect()
}

/// Every (unit, ability) pair of the seat's living units.
fn usable(state: &GameState) -> Vec<(UnitId, &'static AbilityDef)> {
    state
        .own_units(PlayerId::ONE)
        .flat_map(|u| unit_abilities(state, u).into_iter().map(move |a| (u.id, a)))
        .collect()
}

/// A request for `ability` whose target has the right shape.
fn shaped_request(state: &GameState, unit: UnitId, ability: &AbilityDef) -> ActionRequest {
    let u = state.unit(unit).unwrap();
    let req = ActionRequest::new(ability.name.clone(), [unit.0]);
    match ability.target {
        TargetKind::None => req,
        TargetKind::Point | TargetKind::PointOrUnit => req.at(u.pos.x, u.pos.y),
        TargetKind::Unit => req.on_unit(unit.0),
    }
}

fn without_unit(batch: &[ActionRequest], unit: UnitId) -> Vec<ActionRequest> {
    batch.iter().filter(|a| !a.units.contains(&unit.0)).cloned().collect()
}

enum Injected {
    Text(GameState, String),
    Batch(GameState, Vec<ActionRequest>),
}

fn inject(fault: Fault, base: &GameState, rng: &mut ChaCha8Rng) -> Option<Injected> {
    let clean = clean_batch(base);
    let ids = own_ids(base);
    let pairs = usable(base);
    match fault {
        Fault::Syntax => {
            let (u, a) = *pairs.choose(rng)?;
            let mut batch = clean.clone();
            batch.push(shaped_request(base, u, a));
            let text = serialize_actions(&batch);
            let broken = match rng.gen_range(0..6) {
                0 => text[..rng.gen_range(1..text.len() - 1)].to_string(),
                1 => text.replacen("\"units\"", "\"unit\"", 1),
                2 => text.replacen("\"units\": [", "\"units\": \"", 1).replacen(']', "\"", 1),
                3 => text.replacen("{\"action\"", "{\"verb\": 1, \"action\"", 1),
                4 => "I would attack the enemy base with everything now.".to_string(),
                _ => format!("```json\n{}\n```", text.replacen('{', "{,", 1)),
            };
            Some(Injected::Text(base.clone(), broken))
        }
        Fault::UnknownAbility => {
            let u = *ids.choose(rng)?;
            let (_, a) = *pairs.choose(rng)?;
            let name = match rng.gen_range(0..3) {
                0 => format!("{}_{}", a.name, rng.gen_range(0..1000)),
                1 => a.name.to_lowercase(),
                _ => "WARP_DRIVE".to_string(),
            };
            let mut batch = without_unit(&clean, u);
            batch.insert(rng.gen_range(0..=batch.len()), ActionRequest::new(name, [u.0]));
            Some(Injected::Batch(base.clone(), batch))
        }
        Fault::DeadUnit => {
            let (u, a) = *pairs.choose(rng)?;
            let req = shaped_request(base, u, a);
            let mut state = base.clone();
            state.units.remove(&u);
            let mut batch = without_unit(&clean, u);
            batch.insert(rng.gen_range(0..=batch.len()), req);
            Some(Injected::Batch(state, batch))
        }
        Fault::DuplicateUnit => {
            let (u, a) = *pairs.choose(rng)?;
            let (_, b) = *pairs.iter().filter(|(v, _)| *v == u).collect::<Vec<_>>().choose(rng)?;
            let mut batch = without_unit(&clean, u);
            batch.push(shaped_request(base, u, a));
            batch.insert(rng.gen_range(0..batch.len()), shaped_request(base, u, b));
            Some(Injected::Batch(base.clone(), batch))
        }
        Fault::BadTarget => {
            let (u, a) = *pairs.choose(rng)?;
            let pos = base.unit(u).unwrap().pos;
            let req = ActionRequest::new(a.name.clone(), [u.0]);
            let bad = match a.target {
                TargetKind::None => {
                    if rng.gen_bool(0.5) {
                        req.at(pos.x, pos.y)
                    } else {
                        req.on_unit(u.0)
                    }
                }
                TargetKind::Point => {
                    if rng.gen_bool(0.5) {
                        req.on_unit(u.0)
                    } else {
                        req
                    }
                }
                TargetKind::Unit => {
                    if rng.gen_bool(0.5) {
                        req.at(pos.x, pos.y)
                    } else {
                        req
                    }
                }
                TargetKind::PointOrUnit => req,
            };
            let mut batch = without_unit(&clean, u);
            batch.push(bad);
            Some(Injected::Batch(base.clone(), batch))
        }
        Fault::FullQueue => {
            let (u, a) = *pairs
                .iter()
                .filter(|(_, a)| matches!(a.effect, Effect::Train(_) | Effect::Research(_)))
                .collect::<Vec<_>>()
                .choose(rng)?;
            let mut state = base.clone();
            let producer = state.units.get_mut(u).unwrap();
            producer.queue = vec![
                QueueItem {
                    product: Product::Unit(producer.kind),
                    progress: 0,
                    total: 400,
                    started: false,
                };
                QUEUE_CAPACITY
            ];
            let ps = state.player_mut(PlayerId::ONE);
            ps.minerals = 5000;
            ps.vespene = 5000;
            let mut batch = without_unit(&clean, *u);
            batch.push(shaped_request(&state, *u, a));
            Some(Injected::Batch(state, batch))
        }
        Fault::Overdraw => {
            let (u, a) = *pairs
                .iter()
                .filter(|(_, a)| {
                    matches!(a.effect, Effect::Train(_) | Effect::Larva(_) | Effect::Research(_))
                        && a.cost_minerals() > 0
                })
                .collect::<Vec<_>>()
                .choose(rng)?;
            let mut state = base.clone();
            state.player_mut(PlayerId::ONE).minerals = a.cost_minerals() - 1;
            let batch = vec![shaped_request(&state, *u, a)];
            Some(Injected::Batch(state, batch))
        }
    }
}

/// The rejection names the injected fault.
fn names_fault(fault: Fault, report: &ValidationReport) -> bool {
    let text = report.feedback();
    match fault {
        Fault::Syntax => report.stage == Some(Stage::Syntax),
        Fault::UnknownAbility => text.contains("unknown ability") || text.contains("is not available to"),
        Fault::DeadUnit => text.contains("does not exist or is not alive"),
        Fault::DuplicateUnit => text.contains("used by more than one action"),
        Fault::BadTarget => text.contains("target"),
        Fault::FullQueue => text.contains("is full"),
        Fault::Overdraw => text.contains("minerals is not enough"),
    }
}

fn random_batch(state: &GameState, rng: &mut ChaCha8Rng) -> Vec<ActionRequest> {
    let pairs = usable(state);
    let all: Vec<&UnitRecord> = state.units.values().collect();
    let (w, h) = (state.config.map_width as i32, state.config.map_height as i32);
    let mut used = BTreeSet::new();
    let mut batch = Vec::new();
    for _ in 0..rng.gen_range(1..4) {
        let Some(&(u, a)) = pairs.choose(rng) else { break };
        if !used.insert(u) {
            continue;
        }
        let pos = state.unit(u).unwrap().pos;
        let req = ActionRequest::new(a.name.clone(), [u.0]);
        let point = |rng: &mut ChaCha8Rng| {
            (
                (pos.x + rng.gen_range(-8..=8)).clamp(0, w - 1),
                (pos.y + rng.gen_range(-8..=8)).clamp(0, h - 1),
            )
        };
        let req = match a.target {
            TargetKind::None => req,
            TargetKind::Point => {
                let (x, y) = point(rng);
                req.at(x, y)
            }
            TargetKind::Unit => req.on_unit(all.choose(rng).unwrap().id.0),
            TargetKind::PointOrUnit => {
                if rng.gen_bool(0.5) {
                    let (x, y) = point(rng);
                    req.at(x, y)
                } else {
                    req.on_unit(all.choose(rng).unwrap().id.0)
                }
            }
        };
        batch.push(req);
    }
    batch
}

fn fault_injection() -> Verdict {
    let bases = base_states();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut per_fault = [0usize; 7];
    let mut missed = Vec::new();
    let mut generated = 0;
    while generated < 500 {
        let fault = FAULTS[generated % FAULTS.len()];
        let base = bases.choose(&mut rng).unwrap();
        let Some(injected) = inject(fault, base, &mut rng) else { continue };
        let (report, direct) = match &injected {
            Injected::Text(state, text) => (verify_response(state, PlayerId::ONE, text).1, None),
            Injected::Batch(state, batch) => (
                verify_response(state, PlayerId::ONE, &serialize_actions(batch)).1,
                Some(validate_actions(state, PlayerId::ONE, batch)),
            ),
        };
        let caught = !report.is_accepted()
            && names_fault(fault, &report)
            && direct.map_or(true, |d| !d.is_accepted());
        if !caught {
            missed.push(format!("{fault:?}: {}", report.feedback()));
        }
        per_fault[generated % FAULTS.len()] += 1;
        generated += 1;
    }

    // Accepted batches, from the scripted policy and from random sampling,
    // must execute without a single defensive drop.
    let mut accepted = 0;
    let mut drops = Vec::new();
    for base in &bases {
        let mut candidates = vec![clean_batch(base)];
        candidates.extend((0..300).map(|_| random_batch(base, &mut rng)));
        for batch in candidates {
            if batch.is_empty() || !validate_actions(base, PlayerId::ONE, &batch).is_accepted() {
                continue;
            }
            accepted += 1;
            let mut s = base.clone();
            let events = step(&mut s, [&batch, &[]]);
            drops.extend(events.into_iter().filter_map(|e| match e {
                Event::ActionRejected { player, action, reason, .. } if player == PlayerId::ONE => {
                    Some(format!("{action}: {reason}"))
                }
                _ => None,
            }));
        }
    }
    verdict(
        missed.is_empty() && drops.is_empty() && accepted >= 50,
        format!(
            "{generated} faulted batches {per_fault:?}, {} slipped through{}; \
             {accepted} accepted batches, {} defensive drops{}",
            missed.len(),
            missed.first().map(|m| format!(" (first: {m})")).unwrap_or_default(),
            drops.len(),
            drops.first().map(|m| format!(" (first: {m})")).unwrap_or_default(),
        ),
    )
}

// 5. Observation goldens.

fn observation() -> Verdict {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/golden/observation_showcase.txt");
    let golden = std::fs::read_to_string(&path).unwrap();
    let obs = render_observation(&fixture::showcase_state(), PlayerId::ONE, &fixture::showcase_history());
    let identical = obs.full_text == golden;
    let markers = golden.contains("Time: 04:18\n")
        && golden.contains("# Visible enemy units\n[Empty]\n")
        && golden.contains("] Probe\nState: collecting resources automatically\n");

    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let mut shuffles = 0;
    let mut broken = 0;
    for set in 0..50u32 {
        let n = rng.gen_range(2..60);
        let span = rng.gen_range(4..30);
        let units: Vec<UnitRecord> = (0..n)
            .map(|i| {
                let pos = Pos::new(rng.gen_range(0..span), rng.gen_range(0..span));
                UnitRecord::new(UnitId(set * 100 + i + 1), UnitKind::Marine, Some(PlayerId::ONE), pos)
            })
            .collect();
        let anchor = Pos::new(rng.gen_range(0..span), rng.gen_range(0..span));
        let reference: Vec<UnitId> = order_units(&units, anchor).iter().map(|u| u.id).collect();
        let mut sorted = reference.clone();
        sorted.sort_unstable();
        let mut all: Vec<UnitId> = units.iter().map(|u| u.id).collect();
        all.sort_unstable();
        if sorted != all {
            broken += 1;
        }
        let mut refs: Vec<&UnitRecord> = units.iter().collect();
        for _ in 0..1000 {
            refs.shuffle(&mut rng);
            let got: Vec<UnitId> = order_units(refs.iter().copied(), anchor).iter().map(|u| u.id).collect();
            shuffles += 1;
            if got != reference {
                broken += 1;
            }
        }
    }
    verdict(
        identical && markers && broken == 0,
        format!(
            "golden {}, markers {}, {shuffles} shuffles over 50 unit sets with {broken} order changes",
            if identical { "byte-identical" } else { "DIFFERS" },
            if markers { "present" } else { "MISSING" },
        ),
    )
}

// 6. Pipeline closure with canned responses.

/// Answers with the scripted model and keeps every exchange.
struct Recorder {
    log: Mutex<Vec<Canned>>,
}

impl ChatBackend for Recorder {
    fn chat(&self, prompt: &str, params: &ChatParams) -> Result<ChatReply, BackendError> {
        let reply = ScriptedModel.chat(prompt, params)?;
        self.log.lock().unwrap().push(Canned {
            prompt_hash: prompt_hash(prompt),
            text: reply.text.clone(),
            tokens_in: Some(reply.usage.tokens_in),
            tokens_out: Some(reply.usage.tokens_out),
        });
        Ok(reply)
    }
}

/// The decision rule written out from its description.
fn trigger_oracle(ticks: &[(u64, u32)]) -> Vec<u64> {
    let mut failsafe = 0;
    let mut out = Vec::new();
    for &(t, minerals) in ticks {
        if t >= failsafe {
            failsafe = t + 100;
            out.push(t);
        } else if minerals > 170 && t % 10 == 0 {
            out.push(t);
        }
    }
    out
}

fn pipeline_closure() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let llm = AgentSpec {
        backend: BackendSpec::Scripted,
        ..AgentSpec::builtin("llm", 3).with_kind(AgentKind::Hierarchical)
    };
    let mut spec = MatchSpec::new(
        "closure",
        MatchConfig::mirror(Faction::Protoss, 31),
        [llm, AgentSpec::builtin("bot", 3)],
    );

    // Record the model's answers once, then replay the match from them alone.
    let state = create_match(spec.config.clone()).unwrap();
    let recorder = Arc::new(Recorder { log: Mutex::new(Vec::new()) });
    let agent = LlmAgent::new(Pipeline::Hierarchical, PlayerId::ONE, &state, recorder.clone(), ChatParams::default());
    let recorded = play(&spec, state, [Seat::Model(agent), Seat::Builtin { level: 3 }], std::io::sink()).unwrap();
    let canned = dir.path().join("answers.jsonl");
    let lines: String = recorder
        .log
        .lock()
        .unwrap()
        .iter()
        .map(|c| serde_json::to_string(c).unwrap() + "\n")
        .collect();
    std::fs::write(&canned, lines).unwrap();

    spec.agents[0].backend = BackendSpec::Mock {
        path: canned,
        scripted_fallback: false,
    };
    let mut bytes = Vec::new();
    let summary = run_match(&spec, &mut bytes).unwrap();
    let traj = arena_core::trace::read_trajectory(std::io::BufReader::new(&bytes[..])).unwrap();

    let decisions: Vec<&SeatDecision> = traj.decisions_of(PlayerId::ONE).collect();
    let valid = decisions.iter().filter(|d| d.trace.is_valid()).count();
    let var = 100.0 * valid as f64 / decisions.len().max(1) as f64;
    let long_chains = decisions
        .iter()
        .filter(|d| d.trace.planner.len() > 3 || d.trace.executor.len() > 3 || d.trace.planner.is_empty())
        .count();

    let mut s = create_match(traj.config.clone()).unwrap();
    let mut seen = Vec::new();
    for t in &traj.ticks {
        seen.push((s.tick, s.player(PlayerId::ONE).minerals));
        step(&mut s, [&t.actions[0], &t.actions[1]]);
    }
    let fired: Vec<u64> = decisions.iter().map(|d| d.trace.tick).collect();
    let schedule_ok = fired == trigger_oracle(&seen);

    let mut clock = arena_agent::DecisionClock::default();
    let rich: Vec<u64> = (0..1000).filter(|&t| clock.poll(t, 500)).collect();
    let mut clock = arena_agent::DecisionClock::default();
    let poor: Vec<u64> = (0..1000).filter(|&t| clock.poll(t, 100)).collect();
    let cadence_ok = rich == (0..1000).step_by(10).collect::<Vec<_>>()
        && poor == (0..1000).step_by(100).collect::<Vec<_>>();

    let pass = summary.degraded == [false, false]
        && summary.trajectory_sha256 == recorded.trajectory_sha256
        && summary.outcome != Outcome::Ongoing
        && var >= 90.0
        && long_chains == 0
        && schedule_ok
        && cadence_ok;
    verdict(
        pass,
        format!(
            "{:?} after {} ticks from {} canned answers, {} decisions, VAR {var:.2}%, \
             {long_chains} chains over 3, schedule {}, 10/100-tick cadence {}, replay of recording {}",
            summary.record.winner,
            summary.record.ticks,
            recorder.log.lock().unwrap().len(),
            decisions.len(),
            if schedule_ok { "exact" } else { "DIFFERS" },
            if cadence_ok { "exact" } else { "DIFFERS" },
            if summary.trajectory_sha256 == recorded.trajectory_sha256 { "identical" } else { "DIFFERS" },
        ),
    )
}

// 7. Metric formulas.

fn series(ticks: usize, minerals: u32, vespene: u32, capped: usize, decisions: &[(u64, bool)]) -> SeatSeries {
    let mut s = SeatSeries {
        minerals_spent: vec![0; ticks],
        vespene_spent: vec![0; ticks],
        supply_capped: vec![false; ticks],
        decisions: decisions
            .iter()
            .map(|&(tokens_out, valid)| DecisionStat { tokens_out, valid })
            .collect(),
    };
    s.minerals_spent[0] = minerals;
    s.vespene_spent[ticks - 1] = vespene;
    for c in s.supply_capped.iter_mut().take(capped) {
        *c = true;
    }
    s
}

fn record(x_seat: usize, winner: Winner, ticks: usize, mine: SeatSeries) -> MatchRecord {
    let other = series(ticks, 0, 0, 0, &[]);
    let (agents, seats) = if x_seat == 0 {
        (["x".to_string(), "y".to_string()], [mine, other])
    } else {
        (["y".to_string(), "x".to_string()], [other, mine])
    };
    MatchRecord {
        agents,
        winner,
        ticks: ticks as u64,
        ticks_per_game_second: 16,
        seats,
    }
}

fn metric_formulas() -> Verdict {
    let records = vec![
        record(0, Winner::First, 160, series(160, 400, 100, 16, &[(100, true), (200, true)])),
        record(1, Winner::Second, 320, series(320, 0, 0, 0, &[(50, true), (50, true), (50, true), (50, false)])),
        record(0, Winner::Second, 480, series(480, 900, 60, 48, &[(300, false)])),
        record(1, Winner::Tie, 160, series(160, 100, 60, 160, &[])),
        record(0, Winner::First, 640, series(640, 1000, 280, 0, &[(10, true), (20, true), (30, true)])),
    ];
    let m = compute_metrics(&records, "x").unwrap();
    // By hand: wins in matches 1, 2 and 5; capped 10%, 0%, 10%, 100%, 0%;
    // decision validity 2/2, 3/4, 0/1, none, 3/3.
    let wr = 300.0 / 5.0;
    let sbr = 120.0 / 5.0;
    let var = 275.0 / 4.0;
    // Won games last 10, 20 and 40 game seconds.
    let tcw = 70.0 / 3.0;
    let tcw_sd = ((tcw - 10.0f64).powi(2) + (tcw - 20.0f64).powi(2) + (tcw - 40.0f64).powi(2)) / 3.0;
    // Spend per tick: 500/160, 0, 960/480, 160/160, 1280/640.
    let rur = (3.125 + 0.0 + 2.0 + 1.0 + 2.0) / 5.0;
    // Tokens per decision: 150, 50, 300, none, 20.
    let tpd = (150.0 + 50.0 + 300.0 + 20.0) / 4.0;
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9;
    let t = m.tcw.unwrap();
    let exact = m.wr.mean == wr && m.sbr.mean == sbr && m.var.unwrap().mean == var;
    let approx = close(t.mean, tcw)
        && close(t.std, tcw_sd.sqrt())
        && close(m.rur.mean, rur)
        && close(m.tpd.unwrap().mean, tpd);

    let twenty: Vec<MatchRecord> = (0..20)
        .map(|i| MatchRecord::result_only("x", "bot", if i < 11 { Winner::First } else { Winner::Second }))
        .collect();
    let formatted = format!("{:.2}", compute_metrics(&twenty, "x").unwrap().wr.mean);
    verdict(
        exact && approx && formatted == "55.00",
        format!(
            "WR {} SBR {} VAR {} (exact {exact}), TCW {:.6} RUR {} TPD {} (1e-9 {approx}), 11 of 20 -> {formatted}",
            m.wr.mean,
            m.sbr.mean,
            m.var.unwrap().mean,
            t.mean,
            m.rur.mean,
            m.tpd.unwrap().mean
        ),
    )
}

// 8. Dataset construction.

const PLANTED: [usize; 5] = [5, 40, 90, 130, 170];

fn planted_seat(won: bool) -> SeatSteps {
    SeatSteps {
        won,
        ticks_per_second: 16,
        steps: (0..220)
            .map(|i| {
                let workers = if PLANTED.contains(&i) { 4 } else { 12 };
                (i as u64 * 10, MetricVector { mineral_value: 600, vespene_value: 0, army: 2, workers })
            })
            .collect(),
    }
}

fn round(output: &str, accepted: bool) -> PlanRound {
    PlanRound {
        prompt: format!("plan prompt before {output}"),
        output: output.to_string(),
        commands: Some(vec![output.to_string()]),
        verifier_output: Some(format!("verdict on {output}")),
        report: PlanReport {
            analysis: String::new(),
            errors: if accepted { vec![] } else { vec!["Error 1: unaffordable".into()] },
            error_number: (!accepted) as usize,
            warning: None,
        },
        usage: vec![Usage { tokens_in: 10, tokens_out: 5 }],
    }
}

fn exec(output: &str, accepted: bool) -> ExecRound {
    ExecRound {
        prompt: format!("exec prompt before {output}"),
        output: output.to_string(),
        report: if accepted {
            ValidationReport::accepted()
        } else {
            ValidationReport::rejected(Stage::Semantics, vec![">>>> Action 0 error: bad".into()])
        },
        usage: vec![Usage { tokens_in: 10, tokens_out: 7 }],
    }
}

fn synthetic(id: &str, faction: Faction, winner: Winner) -> Trajectory {
    let ticks = planted_seat(true)
        .steps
        .into_iter()
        .map(|(tick, metrics)| {
            let i = tick / 10;
            let (planner, executor) = match i % 3 {
                0 => (
                    vec![round(&format!("draft {i}"), false), round(&format!("plan {i}"), true)],
                    vec![exec(&format!("first try {i}"), false), exec(&format!("act {i}"), true)],
                ),
                1 => (vec![round(&format!("plan {i}"), true)], vec![exec(&format!("act {i}"), true)]),
                _ => (
                    vec![round(&format!("draft {i}"), false), round(&format!("redraft {i}"), false), round(&format!("plan {i}"), true)],
                    vec![exec(&format!("act {i}"), true)],
                ),
            };
            let trace = DecisionTrace {
                tick,
                observation: "obs".into(),
                planner,
                executor,
                actions: vec![ActionRequest::new("NEXUSTRAIN_PROBE", [1])],
                warnings: vec![],
            };
            TickLine {
                tick,
                actions: [vec![], vec![]],
                digest: String::new(),
                decisions: vec![SeatDecision { player: PlayerId::ONE, metrics, trace }],
            }
        })
        .collect();
    let outcome = match winner {
        Winner::First => Outcome::Win(PlayerId::ONE),
        Winner::Second => Outcome::Win(PlayerId::TWO),
        Winner::Tie => Outcome::Tie,
    };
    Trajectory {
        match_id: id.into(),
        kernel: "test".into(),
        config: MatchConfig::mirror(faction, 1),
        agents: [
            AgentInfo { name: "agent".into(), kind: "hierarchical".into(), faction },
            AgentInfo { name: "bot".into(), kind: "builtin".into(), faction },
        ],
        ticks,
        result: Some(MatchResult {
            outcome,
            record: MatchRecord::result_only("agent", "bot", winner),
            degraded: [false, false],
        }),
    }
}

fn dataset() -> Verdict {
    let picked: BTreeSet<usize> = select_samples(&planted_seat(true)).iter().map(|s| s.index).collect();
    let planted: BTreeSet<usize> = PLANTED.into_iter().collect();
    let exact = picked == planted;
    let losing_empty = select_samples(&planted_seat(false)).is_empty();

    let trajs = vec![
        synthetic("t1", Faction::Terran, Winner::First),
        synthetic("z1", Faction::Zerg, Winner::First),
        synthetic("z2", Faction::Zerg, Winner::First),
        synthetic("p1", Faction::Protoss, Winner::Second),
    ];
    let (samples, manifest) = build_dataset(&trajs);
    let intermediate = |t: &str| t.starts_with("draft ") || t.starts_with("redraft ") || t.starts_with("first try ");
    let masked = samples.iter().all(|s| !intermediate(&s.target));
    let lost_silent = samples.iter().all(|s| s.match_id != "p1");

    // Planted decisions 5, 40, 90, 130, 170 fall in chain shapes 2, 1, 0, 1, 2:
    // one planner and one executor target each; verifier pairs for the three
    // chains that open with a rejected plan.
    let per_trace = (5, 5, 3);
    let table = manifest.table();
    let expected_table = format!(
        "faction,victory_traces,planner,verifier,executor,total\n\
         Protoss,0,0,0,0,0\n\
         Terran,1,{p},{v},{e},{t}\n\
         Zerg,2,{p2},{v2},{e2},{t2}\n\
         Total,3,{p3},{v3},{e3},{t3}\n",
        p = per_trace.0,
        e = per_trace.1,
        v = per_trace.2,
        t = per_trace.0 + per_trace.1 + per_trace.2,
        p2 = 2 * per_trace.0,
        e2 = 2 * per_trace.1,
        v2 = 2 * per_trace.2,
        t2 = 2 * (per_trace.0 + per_trace.1 + per_trace.2),
        p3 = 3 * per_trace.0,
        e3 = 3 * per_trace.1,
        v3 = 3 * per_trace.2,
        t3 = 3 * (per_trace.0 + per_trace.1 + per_trace.2),
    );
    let manifest_ok = table == expected_table && manifest.totals.total == samples.len();
    verdict(
        exact && losing_empty && masked && lost_silent && manifest_ok,
        format!(
            "selected {picked:?} (planted {planted:?}), losing seat {} samples, mask {}, manifest {}",
            if losing_empty { "0" } else { "SOME" },
            if masked { "holds" } else { "BROKEN" },
            if manifest_ok { "matches".to_string() } else { format!("DIFFERS:\n{table}") },
        ),
    )
}

// 9. Difficulty ordering.

fn difficulty() -> Verdict {
    let start = Instant::now();
    let mut strong_wins = 0;
    let mut ties = 0;
    for i in 0..50u64 {
        let faction = FACTIONS[i as usize % 3];
        let strong_first = i % 2 == 0;
        let (a, b) = if strong_first {
            (AgentSpec::builtin("l6", 6), AgentSpec::builtin("l2", 2))
        } else {
            (AgentSpec::builtin("l2", 2), AgentSpec::builtin("l6", 6))
        };
        let spec = MatchSpec::new(format!("ladder-{i}"), MatchConfig::mirror(faction, 9000 + i), [a, b]);
        let s = sink_match(&spec);
        match (s.record.winner, strong_first) {
            (Winner::First, true) | (Winner::Second, false) => strong_wins += 1,
            (Winner::Tie, _) => ties += 1,
            _ => {}
        }
    }
    let elapsed = start.elapsed();
    verdict(
        strong_wins >= 40 && elapsed < Duration::from_secs(300),
        format!(
            "level 6 won {strong_wins}/50 ({ties} ties), {:.1}s (< 300s)",
            elapsed.as_secs_f64()
        ),
    )
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("determinism", determinism),
        ("elo", elo),
        ("scoring", scoring),
        ("fault injection", fault_injection),
        ("observation goldens", observation),
        ("pipeline closure", pipeline_closure),
        ("metric formulas", metric_formulas),
        ("dataset construction", dataset),
        ("difficulty ordering", difficulty),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        println!("[{}] {} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, i + 1, v.detail);
        if !v.pass && !v.known_gap {
            failed.push(i + 1);
        }
    }
    // The scoring criterion's geometric target (12.1925) disagrees with the
    // closed form of the same sum (12.188767), so its line prints FAIL; every
    // other part of it must hold.
    assert!(failed.is_empty(), "failed criteria {failed:?}");
}
