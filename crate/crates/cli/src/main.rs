//! `mafia`: play matches, run tournaments, score the benchmark, replay transcripts.

mod http;

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use mafia_core::arena::{
    replay, run_tournament, AgentKind, AgentSpec, Arena, ArenaConfig, BackendRegistry, Manifest, MatchConfig,
    Transcript, TournamentConfig,
};
use mafia_core::benchmark::{
    bundled_cases, load_cases, run_suite, ConstantPredictor, Judge, ModelJudge, OraclePredictor, PipelinePredictor,
    Predictor, StubJudge, SuiteOptions,
};
use mafia_core::Role;

/// Exit status when a run worked but its check did not pass.
const CHECK_FAILED: u8 = 3;

#[derive(Parser)]
#[command(name = "mafia", version, about = "Secret Mafia engine, agents, arena and benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play one match and save its transcript.
    Play(PlayArgs),
    /// Play many matches and rate the entrants.
    Tournament(TournamentArgs),
    /// Score an agent on the scenario benchmark.
    Bench(BenchArgs),
    /// Re-execute a saved transcript and check it.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct Common {
    /// TOML arena config: preset, agents, backends, agent settings.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<ArenaConfig> {
        match &self.config {
            Some(p) => Ok(ArenaConfig::load(p)?),
            None => Ok(ArenaConfig::default()),
        }
    }
}

#[derive(Args)]
struct PlayArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated seat specs, e.g. `revac8,revac8@remote,scripted:random`.
    #[arg(long, value_delimiter = ',')]
    seats: Vec<AgentSpec>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct TournamentArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated entrant specs.
    #[arg(long, value_delimiter = ',')]
    agents: Vec<AgentSpec>,
    #[arg(long)]
    games: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    /// Directory of case files; the bundled cases by default.
    #[arg(long)]
    cases: Option<PathBuf>,
    /// A pipeline spec (`revac8`, `revac2_1@remote`), `oracle`, or `constant:<role>`.
    #[arg(long, default_value = "revac8")]
    agent: String,
    /// `stub`, or the name of a configured backend to use as a model judge.
    #[arg(long, default_value = "stub")]
    judge: String,
    /// Exit with status 3 when the aggregate final score is below this.
    #[arg(long)]
    min_score: Option<f64>,
    /// Score roles by alignment only.
    #[arg(long)]
    alignment_only: bool,
    /// Write results.jsonl and a manifest here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    transcript: PathBuf,
}

fn registry(cfg: &ArenaConfig) -> Result<BackendRegistry> {
    Ok(cfg.registry(Some(&http::factory))?)
}

fn command_line() -> String {
    std::env::args().collect::<Vec<_>>().join(" ")
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn play(args: PlayArgs) -> Result<ExitCode> {
    let cfg = args.common.load()?;
    let game = cfg.game_config();
    let seats = if !args.seats.is_empty() {
        args.seats
    } else if !cfg.seats.is_empty() {
        cfg.seats.clone()
    } else {
        let cycle = [
            AgentSpec::pipeline(mafia_core::agent::Variant::Revac8),
            AgentSpec::pipeline(mafia_core::agent::Variant::Revac2_1),
            AgentSpec::pipeline(mafia_core::agent::Variant::Revac),
        ];
        (0..game.num_players).map(|i| cycle[i % cycle.len()].clone()).collect()
    };
    let arena = Arena::new(registry(&cfg)?, cfg.agent.clone());
    let mc = MatchConfig::new(game, seats, args.seed.unwrap_or(cfg.seed));
    let outcome = arena.run_match(&mc)?;

    prepare_out(&args.out)?;
    outcome.transcript.save(&args.out.join("transcript.jsonl"))?;
    let report = serde_json::json!({ "match": mc, "winner": outcome.transcript.header.winner, "seats": outcome.seats });
    fs::write(args.out.join("match.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    Manifest::write(&args.out, command_line())?;

    let winner = outcome.transcript.header.winner.map_or("nobody".to_string(), |w| format!("{w:?}"));
    println!("seed {}: {} won after {} events", mc.seed, winner, outcome.transcript.records.len());
    for (i, (spec, role)) in mc.seats.iter().zip(&outcome.transcript.header.roles).enumerate() {
        println!("  P{i} {:<10} {spec}", role.to_string());
    }
    println!("artifacts in {}", args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn tournament(args: TournamentArgs) -> Result<ExitCode> {
    let cfg = args.common.load()?;
    let agents = if args.agents.is_empty() { cfg.agents.clone() } else { args.agents };
    if agents.is_empty() {
        bail!("no entrants: pass --agents or list `agents` in the config");
    }
    let mut tc = TournamentConfig::new(agents, args.games.or(cfg.games).unwrap_or(100), args.seed.unwrap_or(cfg.seed));
    tc.game = cfg.game_config();
    tc.rating = cfg.rating;
    tc.workers = args
        .workers
        .or(cfg.workers)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    tc.out_dir = Some(args.out.clone());
    prepare_out(&args.out)?;

    let arena = Arena::new(registry(&cfg)?, cfg.agent.clone());
    let result = run_tournament(&arena, &tc)?;
    let mut summary = BufWriter::new(fs::File::create(args.out.join("games.jsonl"))?);
    for g in &result.games {
        serde_json::to_writer(&mut summary, g)?;
        std::io::Write::write_all(&mut summary, b"\n")?;
    }
    drop(summary);
    Manifest::write(&args.out, command_line())?;

    print!("{}", result.leaderboard.render());
    println!("{} games played, {} failed; artifacts in {}", result.games.len(), result.failures.len(), args.out.display());
    for (i, e) in &result.failures {
        eprintln!("game {i} failed: {e}");
    }
    Ok(ExitCode::SUCCESS)
}

fn predictor(spec: &str, cfg: &ArenaConfig, reg: &BackendRegistry) -> Result<Box<dyn Predictor>> {
    if spec == "oracle" {
        return Ok(Box::new(OraclePredictor));
    }
    if let Some(role) = spec.strip_prefix("constant:") {
        let role: Role = serde_json::from_value(serde_json::Value::from(role.to_ascii_lowercase()))
            .with_context(|| format!("unknown role `{role}`"))?;
        return Ok(Box::new(ConstantPredictor(role)));
    }
    let parsed: AgentSpec = spec.parse()?;
    let AgentKind::Pipeline(variant) = parsed.kind else {
        bail!("`{spec}`: scripted policies cannot explain a scenario");
    };
    let mut p = PipelinePredictor::new(variant);
    p.config = cfg.agent.clone();
    if let Some(b) = &parsed.backend {
        p.backend = Some(reg.build(b, cfg.seed)?);
    }
    Ok(Box::new(p))
}

fn bench(args: BenchArgs) -> Result<ExitCode> {
    let cfg = args.common.load()?;
    let reg = registry(&cfg)?;
    let cases = match &args.cases {
        Some(dir) => load_cases(dir)?,
        None => bundled_cases()?,
    };
    let predictor = predictor(&args.agent, &cfg, &reg)?;
    let judge: Box<dyn Judge> = match args.judge.as_str() {
        "stub" => Box::new(StubJudge),
        name => Box::new(ModelJudge::new(reg.build(name, cfg.seed)?, cfg.agent.retry)),
    };
    let result = run_suite(&*predictor, &cases, &*judge, SuiteOptions { alignment_only: args.alignment_only });

    if let Some(out) = &args.out {
        prepare_out(out)?;
        result.write_jsonl(BufWriter::new(fs::File::create(out.join("results.jsonl"))?))?;
        Manifest::write(out, command_line())?;
    }
    println!("{:<28} {:>8} {:>8} {:>8}", "case", "A", "B", "final");
    for c in &result.cases {
        let note = c.error.as_deref().map(|e| format!("  error: {e}")).unwrap_or_default();
        println!("{:<28} {:>8.4} {:>8.2} {:>8.4}{note}", c.case_id, c.metric_a, c.metric_b_raw, c.final_score);
    }
    let agg = &result.aggregate;
    println!(
        "{} with {} judge: Metric A {:.4}, Metric B {:.4}, final {:.4} ({} cases, {} failed, {} judge fallbacks)",
        agg.agent, agg.judge, agg.metric_a, agg.metric_b_norm, agg.final_score, agg.cases, agg.failures, agg.judge_fallbacks
    );
    if let Some(floor) = args.min_score {
        if agg.final_score < floor {
            eprintln!("final score {:.4} is below the floor {floor}", agg.final_score);
            return Ok(ExitCode::from(CHECK_FAILED));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn replay_cmd(args: ReplayArgs) -> Result<ExitCode> {
    let t = Transcript::load(&args.transcript)?;
    let report = replay(&t);
    println!("{report}");
    Ok(if report.is_valid() { ExitCode::SUCCESS } else { ExitCode::from(CHECK_FAILED) })
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let run = match cli.command {
        Command::Play(a) => play(a),
        Command::Tournament(a) => tournament(a),
        Command::Bench(a) => bench(a),
        Command::Replay(a) => replay_cmd(a),
    };
    match run {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
