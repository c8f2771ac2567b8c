//! Fine-tuning data from won matches: discounted metric gains score each
//! decision, scores are standardized per 30 s window, and the best
//! decisions become planner, executor and contrastive verifier samples.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::sim::{Faction, GameState, Outcome, PlayerId, Role};
use crate::trace::{read_trajectory, DecisionTrace, Trajectory};

pub const HORIZON: usize = 20;
pub const GAMMA: f64 = 0.95;
pub const INTERVAL_SECONDS: f64 = 30.0;
pub const THRESHOLD: f64 = 0.1;

/// Values tracked for scoring, in a fixed order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricVector {
    pub mineral_value: u64,
    pub vespene_value: u64,
    pub army: u64,
    pub workers: u64,
}

impl MetricVector {
    pub fn as_array(&self) -> [f64; 4] {
        [
            self.mineral_value as f64,
            self.vespene_value as f64,
            self.army as f64,
            self.workers as f64,
        ]
    }
}

/// Production cost of everything `player` owns plus army and worker counts.
pub fn metric_values(state: &GameState, player: PlayerId) -> MetricVector {
    let mut v = MetricVector::default();
    for u in state.own_units(player) {
        let def = u.kind.def();
        v.mineral_value += def.minerals as u64;
        v.vespene_value += def.vespene as u64;
        match def.role {
            Role::Army => v.army += 1,
            Role::Worker => v.workers += 1,
            _ => {}
        }
    }
    v
}

/// Z-scores with population variance; a constant input maps to zeros.
pub fn z_scores(values: &[f64]) -> Vec<f64> {
    if values.is_empty() {
        return Vec::new();
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std <= f64::EPSILON * mean.abs().max(1.0) {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| (v - mean) / std).collect()
}

/// Normalize each metric over the whole trajectory.
pub fn normalize_metrics(series: &[MetricVector]) -> Vec<[f64; 4]> {
    let mut out = vec![[0.0; 4]; series.len()];
    for m in 0..4 {
        let column: Vec<f64> = series.iter().map(|v| v.as_array()[m]).collect();
        for (row, z) in out.iter_mut().zip(z_scores(&column)) {
            row[m] = z;
        }
    }
    out
}

/// Discounted summed metric gain over the next `HORIZON` observations.
/// `None` when the trajectory ends too early.
pub fn score_action(normalized: &[[f64; 4]], t: usize) -> Option<f64> {
    if t + HORIZON >= normalized.len() {
        return None;
    }
    let base = normalized[t];
    let mut score = 0.0;
    let mut discount = 1.0;
    for k in 1..=HORIZON {
        discount *= GAMMA;
        let gain: f64 = normalized[t + k]
            .iter()
            .zip(base)
            .map(|(later, now)| later - now)
            .sum();
        score += discount * gain;
    }
    Some(score)
}

/// Z-score `scores` separately inside each `window`-second interval,
/// aligned to zero and half-open.
pub fn standardize_scores(seconds: &[f64], scores: &[f64], window: f64) -> Vec<f64> {
    assert_eq!(seconds.len(), scores.len());
    let mut buckets: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, s) in seconds.iter().enumerate() {
        buckets.entry((s / window).floor() as i64).or_default().push(i);
    }
    let mut out = vec![0.0; scores.len()];
    for members in buckets.values() {
        let values: Vec<f64> = members.iter().map(|&i| scores[i]).collect();
        for (&i, z) in members.iter().zip(z_scores(&values)) {
            out[i] = z;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredStep {
    /// Position among the seat's decisions.
    pub index: usize,
    pub tick: u64,
    pub raw: f64,
    pub z: f64,
}

/// Decision-time metric observations of one seat.
#[derive(Debug, Clone, PartialEq)]
pub struct SeatSteps {
    pub won: bool,
    pub ticks_per_second: u32,
    pub steps: Vec<(u64, MetricVector)>,
}

/// Score every decision that has a full horizon behind it.
pub fn score_steps(seat: &SeatSteps) -> Vec<ScoredStep> {
    let series: Vec<MetricVector> = seat.steps.iter().map(|(_, m)| *m).collect();
    let normalized = normalize_metrics(&series);
    let raw: Vec<(usize, f64)> = (0..series.len())
        .filter_map(|t| score_action(&normalized, t).map(|s| (t, s)))
        .collect();
    let tps = seat.ticks_per_second.max(1) as f64;
    let seconds: Vec<f64> = raw
        .iter()
        .map(|&(t, _)| seat.steps[t].0 as f64 / tps)
        .collect();
    let values: Vec<f64> = raw.iter().map(|&(_, s)| s).collect();
    let z = standardize_scores(&seconds, &values, INTERVAL_SECONDS);
    raw.iter()
        .zip(z)
        .map(|(&(index, raw), z)| ScoredStep {
            index,
            tick: seat.steps[index].0,
            raw,
            z,
        })
        .collect()
}

pub fn select_with_threshold(seat: &SeatSteps, threshold: f64) -> Vec<ScoredStep> {
    if !seat.won {
        return Vec::new();
    }
    score_steps(seat)
        .into_iter()
        .filter(|s| s.z > threshold)
        .collect()
}

/// Decisions worth imitating; empty for a lost match.
pub fn select_samples(seat: &SeatSteps) -> Vec<ScoredStep> {
    select_with_threshold(seat, THRESHOLD)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SampleKind {
    #[serde(rename = "planner")]
    Planner,
    #[serde(rename = "executor")]
    Executor,
    #[serde(rename = "verifier-contrastive")]
    VerifierContrastive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSample {
    pub kind: SampleKind,
    pub prompt: String,
    pub target: String,
    pub match_id: String,
    pub t: u64,
    pub raw_score: f64,
    pub z_score: f64,
}

fn sample(kind: SampleKind, prompt: &str, target: &str, match_id: &str, step: &ScoredStep) -> ScoredSample {
    ScoredSample {
        kind,
        prompt: prompt.to_string(),
        target: target.to_string(),
        match_id: match_id.to_string(),
        t: step.tick,
        raw_score: step.raw,
        z_score: step.z,
    }
}

/// Planner and executor samples from the accepted final outputs. Prompts
/// are the first-round prompts; earlier outputs are never targets.
pub fn build_decision_samples(
    match_id: &str,
    trace: &DecisionTrace,
    step: &ScoredStep,
) -> Vec<ScoredSample> {
    let mut out = Vec::new();
    if let (Some(first), Some(last)) = (trace.planner.first(), trace.planner.last()) {
        let earlier = &trace.planner[..trace.planner.len() - 1];
        if last.report.is_accepted()
            && last.commands.is_some()
            && !earlier.iter().any(|r| r.output == last.output)
        {
            out.push(sample(SampleKind::Planner, &first.prompt, &last.output, match_id, step));
        }
    }
    if let (Some(first), Some(last)) = (trace.executor.first(), trace.executor.last()) {
        let earlier = &trace.executor[..trace.executor.len() - 1];
        if last.report.is_accepted() && !earlier.iter().any(|r| r.output == last.output) {
            out.push(sample(SampleKind::Executor, &first.prompt, &last.output, match_id, step));
        }
    }
    out
}

/// One contrastive record when the accepted plan directly followed a
/// rejected one: the retry prompt (which carries the rejected plan and its
/// feedback) maps to the accepted plan plus its verdict.
pub fn build_verifier_samples(
    match_id: &str,
    trace: &DecisionTrace,
    step: &ScoredStep,
) -> Vec<ScoredSample> {
    let n = trace.planner.len();
    if n < 2 {
        return Vec::new();
    }
    let (before, last) = (&trace.planner[n - 2], &trace.planner[n - 1]);
    if before.report.is_accepted() || !last.report.is_accepted() || before.output == last.output {
        return Vec::new();
    }
    let verdict = last.verifier_output.as_deref().unwrap_or_default();
    let target = format!("{}\n\n{}", last.output, verdict);
    vec![sample(
        SampleKind::VerifierContrastive,
        &last.prompt,
        &target,
        match_id,
        step,
    )]
}

/// Samples from the winning seat of one trajectory.
pub fn trajectory_samples(traj: &Trajectory) -> Option<(Faction, Vec<ScoredSample>)> {
    let result = traj.result.as_ref()?;
    let Outcome::Win(winner) = result.outcome else {
        return None;
    };
    let decisions: Vec<_> = traj.decisions_of(winner).collect();
    if decisions.is_empty() {
        return None;
    }
    let seat = SeatSteps {
        won: true,
        ticks_per_second: traj.config.ticks_per_game_second,
        steps: decisions.iter().map(|d| (d.trace.tick, d.metrics)).collect(),
    };
    let mut samples = Vec::new();
    for step in select_samples(&seat) {
        let trace = &decisions[step.index].trace;
        samples.extend(build_decision_samples(&traj.match_id, trace, &step));
        samples.extend(build_verifier_samples(&traj.match_id, trace, &step));
    }
    Some((traj.agents[winner.index()].faction, samples))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindCounts {
    pub victory_traces: usize,
    pub planner: usize,
    pub verifier: usize,
    pub executor: usize,
    pub total: usize,
}

impl KindCounts {
    fn add(&mut self, kind: SampleKind) {
        match kind {
            SampleKind::Planner => self.planner += 1,
            SampleKind::Executor => self.executor += 1,
            SampleKind::VerifierContrastive => self.verifier += 1,
        }
        self.total += 1;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub trajectories: usize,
    pub factions: BTreeMap<String, KindCounts>,
    pub totals: KindCounts,
    pub warnings: Vec<String>,
}

impl Manifest {
    /// Per-faction table with a totals row.
    pub fn table(&self) -> String {
        let mut out = String::from("faction,victory_traces,planner,verifier,executor,total\n");
        let rows = self
            .factions
            .iter()
            .map(|(f, c)| (f.as_str(), c))
            .chain(std::iter::once(("Total", &self.totals)));
        for (name, c) in rows {
            out.push_str(&format!(
                "{name},{},{},{},{},{}\n",
                c.victory_traces, c.planner, c.verifier, c.executor, c.total
            ));
        }
        out
    }
}

/// Build the dataset from in-memory trajectories, ordered by
/// (match id, tick, kind).
pub fn build_dataset(trajectories: &[Trajectory]) -> (Vec<ScoredSample>, Manifest) {
    let mut manifest = Manifest {
        trajectories: trajectories.len(),
        ..Manifest::default()
    };
    for f in Faction::ALL {
        manifest.factions.insert(f.name().to_string(), KindCounts::default());
    }
    let mut samples = Vec::new();
    for traj in trajectories {
        let Some((faction, found)) = trajectory_samples(traj) else {
            continue;
        };
        let counts = manifest.factions.entry(faction.name().to_string()).or_default();
        counts.victory_traces += 1;
        manifest.totals.victory_traces += 1;
        for s in &found {
            counts.add(s.kind);
            manifest.totals.add(s.kind);
        }
        samples.extend(found);
    }
    samples.sort_by(|a, b| (&a.match_id, a.t, a.kind).cmp(&(&b.match_id, b.t, b.kind)));
    if manifest.totals.victory_traces == 0 {
        manifest
            .warnings
            .push("no won trajectories with agent decisions".to_string());
    }
    (samples, manifest)
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Read every `*.jsonl` trajectory under `dir`, skipping unreadable ones
/// with a warning, and write `dataset.jsonl` and `manifest.json` to `out`.
pub fn export_dataset(dir: &Path, out: &Path) -> Result<Manifest, DatasetError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    paths.sort();
    let mut trajectories = Vec::new();
    let mut warnings = Vec::new();
    for p in &paths {
        let parsed = fs::File::open(p)
            .map_err(|e| e.to_string())
            .and_then(|f| read_trajectory(BufReader::new(f)).map_err(|e| e.to_string()));
        match parsed {
            Ok(t) => trajectories.push(t),
            Err(e) => warnings.push(format!("skipped {}: {e}", p.display())),
        }
    }
    let (samples, mut manifest) = build_dataset(&trajectories);
    manifest.trajectories = paths.len();
    warnings.append(&mut manifest.warnings);
    manifest.warnings = warnings;

    fs::create_dir_all(out).map_err(io_err(out))?;
    let mut body = String::new();
    for s in &samples {
        body.push_str(&serde_json::to_string(s).expect("samples serialize"));
        body.push('\n');
    }
    let data_path = out.join("dataset.jsonl");
    fs::write(&data_path, body).map_err(io_err(&data_path))?;
    let manifest_path = out.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&manifest_path, text + "\n").map_err(io_err(&manifest_path))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_stream() {
        assert_eq!(z_scores(&[0.0, 2.0]), [-1.0, 1.0]);
        assert_eq!(z_scores(&[4.0, 4.0, 4.0]), [0.0, 0.0, 0.0]);
        assert_eq!(z_scores(&[7.0]), [0.0]);
    }

    #[test]
    fn flat_window_scores_zero() {
        let flat = vec![[0.3, -1.0, 2.0, 0.0]; HORIZON + 1];
        assert_eq!(score_action(&flat, 0), Some(0.0));
        assert_eq!(score_action(&flat, 1), None);
    }

    #[test]
    fn intervals_are_independent() {
        let secs = [1.0, 2.0, 31.0, 40.0, 59.9, 60.0];
        let scores = [1.0, 3.0, 100.0, 300.0, 200.0, 5.0];
        let z = standardize_scores(&secs, &scores, INTERVAL_SECONDS);
        assert_eq!(&z[..2], [-1.0, 1.0]);
        assert!(z[2..5].iter().sum::<f64>().abs() < 1e-12);
        assert_eq!(z[5], 0.0);
    }

    #[test]
    fn strict_threshold() {
        let picked: Vec<f64> = [0.05, 0.1, 0.11].into_iter().filter(|z| *z > THRESHOLD).collect();
        assert_eq!(picked, [0.11]);
    }
}
