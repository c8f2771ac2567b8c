use std::path::PathBuf;
use std::process::ExitCode;

use arena::config::{Mode, RunConfig};
use arena::error::{ArenaError, EXIT_REPLAY};
use arena::report::{load_records, summarize, write_file, write_reports};
use arena::runner::{run_match_to_dir, MatchSpec};
use arena::{replay_verify, run_tournament};
use arena_core::dataset::export_dataset;
use clap::Parser;

/// Matches, tournaments, metric reports, dataset export and replay checks.
#[derive(Debug, Parser)]
#[command(name = "arena", version)]
struct Cli {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `mode` from the configuration.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Tournament worker threads; overrides `jobs`.
    #[arg(long)]
    jobs: Option<usize>,
    /// Trajectory file or directory for metrics, dataset and replay-verify.
    #[arg(long)]
    input: Option<PathBuf>,
}

fn load(cli: &Cli) -> Result<RunConfig, ArenaError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(m) = cli.mode {
        cfg.mode = m;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    if let Some(i) = &cli.input {
        cfg.input = Some(i.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cfg: &RunConfig) -> Result<i32, ArenaError> {
    let out = &cfg.out;
    match cfg.mode {
        Mode::Match => {
            let mut game = cfg.game.clone();
            game.seed = cfg.seed;
            let names = format!("{}-vs-{}", cfg.agents[0].name, cfg.agents[1].name);
            let agents = [0, 1].map(|i| cfg.agents[i].clone().with_faction(cfg.seat_faction(i)));
            let spec = MatchSpec::new(format!("{names}-s{}", cfg.seed), game, agents);
            let summary = run_match_to_dir(&spec, out)?;
            let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
            write_file(&out.join(format!("{}.record.json", spec.match_id)), &(json + "\n"))?;
            println!(
                "{}: {:?} after {} ticks, trajectory sha256 {}",
                summary.match_id, summary.record.winner, summary.record.ticks, summary.trajectory_sha256
            );
        }
        Mode::Tournament => {
            let report = run_tournament(cfg, out)?;
            let json = serde_json::to_string_pretty(&report.games).expect("summaries serialize");
            write_file(&out.join("games.json"), &(json + "\n"))?;
            print!("{}", write_reports(out, &report.metrics, &report.elo)?);
            let forfeits = report.games.iter().filter(|g| g.forfeit.is_some()).count();
            if forfeits > 0 {
                eprintln!("{forfeits} game(s) forfeited after an agent crash");
            }
        }
        Mode::Metrics => {
            let input = cfg.input.as_deref().expect("validated");
            let records = load_records(input)?;
            if records.is_empty() {
                return Err(ArenaError::Trajectory(format!("no finished matches under {}", input.display())));
            }
            let reports = summarize(&records, cfg.seed)?;
            print!("{}", write_reports(out, &reports.metrics, &reports.elo)?);
        }
        Mode::Dataset => {
            let input = cfg.input.as_deref().expect("validated");
            let manifest = export_dataset(input, out).map_err(|e| match e {
                arena_core::dataset::DatasetError::Io { path, source } => ArenaError::Io { path, source },
            })?;
            print!("{}", manifest.table());
            for w in &manifest.warnings {
                eprintln!("warning: {w}");
            }
        }
        Mode::ReplayVerify => {
            let input = cfg.input.as_deref().expect("validated");
            let report = replay_verify(input)?;
            match &report.divergence {
                None => println!("{}: ok, {} ticks verified", report.match_id, report.ticks_checked),
                Some(d) => {
                    println!(
                        "{}: diverged at tick {} (expected {}, got {})",
                        report.match_id, d.tick, d.expected, d.actual
                    );
                    return Ok(EXIT_REPLAY);
                }
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let code = match load(&cli).and_then(|cfg| run(&cfg)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
