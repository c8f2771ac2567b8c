//! Match records, per-agent evaluation metrics and Elo ratings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const ELO_K: f64 = 32.0;
pub const ELO_INITIAL: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Winner {
    First,
    Second,
    Tie,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionStat {
    pub tokens_out: u64,
    pub valid: bool,
}

/// Per-tick series and decision log of one seat.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SeatSeries {
    pub minerals_spent: Vec<u32>,
    pub vespene_spent: Vec<u32>,
    pub supply_capped: Vec<bool>,
    pub decisions: Vec<DecisionStat>,
}

impl SeatSeries {
    pub fn total_spent(&self) -> u64 {
        let m: u64 = self.minerals_spent.iter().map(|&x| x as u64).sum();
        let v: u64 = self.vespene_spent.iter().map(|&x| x as u64).sum();
        m + v
    }

    pub fn capped_ticks(&self) -> usize {
        self.supply_capped.iter().filter(|&&c| c).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub agents: [String; 2],
    pub winner: Winner,
    pub ticks: u64,
    pub ticks_per_game_second: u32,
    pub seats: [SeatSeries; 2],
}

impl MatchRecord {
    /// A record carrying only the result, as used for rating passes.
    pub fn result_only(a: &str, b: &str, winner: Winner) -> MatchRecord {
        MatchRecord {
            agents: [a.to_string(), b.to_string()],
            winner,
            ticks: 0,
            ticks_per_game_second: 16,
            seats: Default::default(),
        }
    }

    pub fn duration_game_seconds(&self) -> f64 {
        self.ticks as f64 / self.ticks_per_game_second as f64
    }

    pub fn seat_of(&self, agent: &str) -> Option<usize> {
        self.agents.iter().position(|a| a == agent)
    }

    pub fn won(&self, seat: usize) -> bool {
        matches!(
            (self.winner, seat),
            (Winner::First, 0) | (Winner::Second, 1)
        )
    }

    /// Series lengths must equal the tick count.
    pub fn is_consistent(&self) -> bool {
        self.seats.iter().all(|s| {
            let n = self.ticks as usize;
            s.minerals_spent.len() == n && s.vespene_spent.len() == n && s.supply_capped.len() == n
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("no match records")]
    Empty,
    #[error("agent {0} does not appear in any record")]
    UnknownAgent(String),
    #[error("an agent cannot play itself: {0}")]
    SelfPlay(String),
}

/// Probability that a player rated `ra` beats one rated `rb`.
pub fn expected_score(ra: f64, rb: f64) -> f64 {
    1.0 / (1.0 + 10f64.powf((rb - ra) / 400.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EloTable {
    pub ratings: BTreeMap<String, f64>,
    pub k: f64,
    pub initial: f64,
}

impl Default for EloTable {
    fn default() -> Self {
        EloTable {
            ratings: BTreeMap::new(),
            k: ELO_K,
            initial: ELO_INITIAL,
        }
    }
}

impl EloTable {
    pub fn rating(&self, agent: &str) -> Option<f64> {
        self.ratings.get(agent).copied()
    }

    /// Apply one result. `score_a` is 1 for a win by `a`, 0.5 for a tie and
    /// 0 for a loss.
    pub fn update(&mut self, a: &str, b: &str, score_a: f64) -> Result<(), MetricsError> {
        if a == b {
            return Err(MetricsError::SelfPlay(a.to_string()));
        }
        let ra = *self.ratings.entry(a.to_string()).or_insert(self.initial);
        let rb = *self.ratings.entry(b.to_string()).or_insert(self.initial);
        let delta = self.k * (score_a - expected_score(ra, rb));
        self.ratings.insert(a.to_string(), ra + delta);
        self.ratings.insert(b.to_string(), rb - delta);
        Ok(())
    }

    pub fn update_match(&mut self, record: &MatchRecord) -> Result<(), MetricsError> {
        let score = match record.winner {
            Winner::First => 1.0,
            Winner::Second => 0.0,
            Winner::Tie => 0.5,
        };
        self.update(&record.agents[0], &record.agents[1], score)
    }

    /// Agents by descending rating, ties by name.
    pub fn ranking(&self) -> Vec<(String, f64)> {
        let mut out: Vec<(String, f64)> =
            self.ratings.iter().map(|(a, r)| (a.clone(), *r)).collect();
        out.sort_by(|x, y| y.1.total_cmp(&x.1).then_with(|| x.0.cmp(&y.0)));
        out
    }

    pub fn total(&self) -> f64 {
        self.ratings.values().sum()
    }
}

/// Shuffle the records with `seed` and fold them into a fresh table.
pub fn run_rating_pass(records: &[MatchRecord], seed: u64) -> Result<EloTable, MetricsError> {
    let mut order: Vec<&MatchRecord> = records.iter().collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut table = EloTable::default();
    for r in order {
        table.update_match(r)?;
    }
    Ok(table)
}

/// Mean and population standard deviation of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Stat> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Some(Stat {
            mean,
            std: var.sqrt(),
            n: values.len(),
        })
    }

    pub fn display(stat: Option<Stat>) -> String {
        match stat {
            Some(s) => format!("{:.2} ± {:.2}", s.mean, s.std),
            None => "-".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub agent: String,
    pub matches: usize,
    pub wins: usize,
    /// Win rate in percent.
    pub wr: Stat,
    /// Game seconds of won matches; absent without wins.
    pub tcw: Option<Stat>,
    /// Percent of ticks spent supply capped.
    pub sbr: Stat,
    /// Minerals plus vespene spent per tick.
    pub rur: Stat,
    /// Output tokens per decision; absent when the agent never decided.
    pub tpd: Option<Stat>,
    /// Percent of decisions that validated.
    pub var: Option<Stat>,
}

/// Metrics of `agent` over every record it took part in.
pub fn compute_metrics(records: &[MatchRecord], agent: &str) -> Result<MetricsSummary, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mine: Vec<(&MatchRecord, usize)> = records
        .iter()
        .filter_map(|r| r.seat_of(agent).map(|s| (r, s)))
        .collect();
    if mine.is_empty() {
        return Err(MetricsError::UnknownAgent(agent.to_string()));
    }
    let mut wr = Vec::new();
    let mut tcw = Vec::new();
    let mut sbr = Vec::new();
    let mut rur = Vec::new();
    let mut tpd = Vec::new();
    let mut var = Vec::new();
    for (r, seat) in &mine {
        let s = &r.seats[*seat];
        let won = r.won(*seat);
        wr.push(if won { 100.0 } else { 0.0 });
        if won {
            tcw.push(r.duration_game_seconds());
        }
        let ticks = r.ticks.max(1) as f64;
        sbr.push(s.capped_ticks() as f64 * 100.0 / ticks);
        rur.push(s.total_spent() as f64 / ticks);
        if !s.decisions.is_empty() {
            let n = s.decisions.len() as f64;
            let tokens: u64 = s.decisions.iter().map(|d| d.tokens_out).sum();
            let valid = s.decisions.iter().filter(|d| d.valid).count();
            tpd.push(tokens as f64 / n);
            var.push(valid as f64 * 100.0 / n);
        }
    }
    Ok(MetricsSummary {
        agent: agent.to_string(),
        matches: mine.len(),
        wins: tcw.len(),
        wr: Stat::of(&wr).expect("non-empty"),
        tcw: Stat::of(&tcw),
        sbr: Stat::of(&sbr).expect("non-empty"),
        rur: Stat::of(&rur).expect("non-empty"),
        tpd: Stat::of(&tpd),
        var: Stat::of(&var),
    })
}

fn csv_stat(out: &mut String, stat: Option<Stat>) {
    match stat {
        Some(s) => {
            let _ = write!(out, ",{},{}", s.mean, s.std);
        }
        None => out.push_str(",,"),
    }
}

pub fn metrics_csv(rows: &[MetricsSummary]) -> String {
    let mut out = String::from(
        "agent,matches,wins,wr_mean,wr_std,tcw_mean,tcw_std,sbr_mean,sbr_std,rur_mean,rur_std,tpd_mean,tpd_std,var_mean,var_std\n",
    );
    for r in rows {
        let _ = write!(out, "{},{},{}", r.agent, r.matches, r.wins);
        for stat in [Some(r.wr), r.tcw, Some(r.sbr), Some(r.rur), r.tpd, r.var] {
            csv_stat(&mut out, stat);
        }
        out.push('\n');
    }
    out
}

pub fn metrics_json(rows: &[MetricsSummary]) -> String {
    serde_json::to_string_pretty(rows).expect("summaries serialize")
}

/// Plain-text table with one row per agent.
pub fn metrics_table(rows: &[MetricsSummary]) -> String {
    let header = [
        "Agent",
        "Win Rate(%)",
        "TCW(s)",
        "SBR(%)",
        "RUR",
        "TPD",
        "VAR(%)",
    ];
    let body: Vec<[String; 7]> = rows
        .iter()
        .map(|r| {
            [
                r.agent.clone(),
                format!("{:.2}", r.wr.mean),
                Stat::display(r.tcw),
                Stat::display(Some(r.sbr)),
                Stat::display(Some(r.rur)),
                Stat::display(r.tpd),
                Stat::display(r.var),
            ]
        })
        .collect();
    let mut widths = header.map(|h| h.chars().count());
    for row in &body {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        format!("| {} |\n", padded.join(" | "))
    };
    let mut out = line(&header.map(String::from));
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&format!("|-{}-|\n", rule.join("-|-")));
    for row in &body {
        out.push_str(&line(row));
    }
    out
}

/// Ratings table, highest first.
pub fn ranking_table(table: &EloTable) -> String {
    let mut out = String::from("rank,agent,rating\n");
    for (i, (agent, rating)) in table.ranking().into_iter().enumerate() {
        let _ = writeln!(out, "{},{agent},{rating:.2}", i + 1);
    }
    out
}
