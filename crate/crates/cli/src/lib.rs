//! The `terraword` command line: headless runs, generator audits, log
//! analysis and the session server.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use terraword_core::audit::{audit, AuditReport};
use terraword_core::runner::{run, Policy, RunError, RunOptions, RunReport, DEFAULT_MAX_TICKS};
use terraword_core::simulation::{ConfigError, GameConfig, Script, ScriptError};
use terraword_core::telemetry::{parse_log, render_report, ParseMode, PromptLog, TelemetryError};
use terraword_core::terraform::{
    AffinityTable, GenerateError, Generator, LocalGenerator, Prompt, RemoteGenerator, TerraformReceipt,
};
use terraword_core::tilemap::{TileGrid, TileSet};
use terraword_core::wordbank::WordFrequencyTable;
use terraword_server::{ServerArgs, ServerError};

/// Exit status for invalid input.
pub const EXIT_INVALID: i32 = 2;
/// Exit status for a run whose script had commands rejected.
pub const EXIT_REJECTED: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("script: {0}")]
    Script(#[from] ScriptError),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    Telemetry(#[from] TelemetryError),
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error(transparent)]
    Server(#[from] ServerError),
    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },
}

impl CliError {
    fn file(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::File { path: path.to_path_buf(), message: e.to_string() }
    }
}

#[derive(Debug, Parser)]
#[command(name = "terraword", version, about = "Headless tools for the terraword god game")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Play one game headlessly from a command script or with the baseline bot.
    Run(RunArgs),
    /// Tile histograms, diversity and determinism of a generator backend.
    AuditGenerator(AuditArgs),
    /// Prompt-length and tile tables for a prompt log.
    Analyze(AnalyzeArgs),
    /// Start the HTTP session server.
    Serve(ServerArgs),
}

#[derive(Debug, Clone, Args)]
pub struct EngineArgs {
    /// Remote generator base URL; without it grids are generated locally.
    #[arg(long)]
    pub generator_url: Option<String>,
    #[arg(long, default_value_t = 2000)]
    pub generator_timeout_ms: u64,
    /// Fall back to the local generator on remote timeouts and server errors.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub fallback: bool,
    #[arg(long)]
    pub tileset: Option<PathBuf>,
    #[arg(long)]
    pub wordfreq: Option<PathBuf>,
}

impl EngineArgs {
    fn as_server_args(&self) -> ServerArgs {
        ServerArgs {
            port: 0,
            host: String::new(),
            generator_url: self.generator_url.clone(),
            generator_timeout_ms: self.generator_timeout_ms,
            fallback: self.fallback,
            tileset: self.tileset.clone(),
            wordfreq: self.wordfreq.clone(),
            data_dir: None,
        }
    }
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("policy").required(true).args(["script", "bot"])))]
pub struct RunArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// TOML file overriding game defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Command script to play.
    #[arg(long)]
    pub script: Option<PathBuf>,
    /// Play with the shipped baseline bot.
    #[arg(long)]
    pub bot: bool,
    /// Stop after this many ticks if the game is still undecided.
    #[arg(long, default_value_t = DEFAULT_MAX_TICKS)]
    pub max_ticks: u64,
    /// Append one line per terraform to this prompt log.
    #[arg(long)]
    pub prompt_log: Option<PathBuf>,
    /// Write the accepted commands as a replayable script.
    #[arg(long)]
    pub event_log: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub engine: EngineArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Backend {
    Local,
    Remote,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[arg(long, value_enum, default_value_t = Backend::Local)]
    pub backend: Backend,
    /// A prompt to audit; repeatable.
    #[arg(long = "prompt")]
    pub prompts: Vec<String>,
    /// File with one prompt per line.
    #[arg(long)]
    pub prompts_file: Option<PathBuf>,
    /// Also audit this many random prompts of 1 to 5 vocabulary words.
    #[arg(long, default_value_t = 0)]
    pub random_prompts: usize,
    /// Seed for choosing random prompts.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Generator seeds: a list `1,2,3` or a range `0..10`.
    #[arg(long, default_value = "0..5")]
    pub seeds: String,
    #[arg(long)]
    pub generator_url: Option<String>,
    #[arg(long, default_value_t = 2000)]
    pub generator_timeout_ms: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Prompt log to analyse.
    pub log: PathBuf,
    /// Generated grids: a `run` JSON report or a session `receipts.jsonl`.
    #[arg(long)]
    pub grids: Option<PathBuf>,
    /// Skip malformed lines instead of failing.
    #[arg(long)]
    pub lenient: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// What a subcommand produced: text for stdout or `--out`, and an exit code.
pub struct Output {
    pub text: String,
    pub out: Option<PathBuf>,
    pub notes: Vec<String>,
    pub code: i32,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::file(path, e))
}

pub fn parse_seeds(list: &str) -> Result<Vec<u64>, CliError> {
    let bad = || CliError::Usage(format!("bad seed list {list:?}; use `1,2,3` or `0..10`"));
    let seeds: Vec<u64> = if let Some((a, b)) = list.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        (a..b).collect()
    } else {
        list.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?
    };
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}

pub fn run_game(args: &RunArgs) -> Result<Output, CliError> {
    let config = match &args.config {
        Some(p) => GameConfig::load(p)?,
        None => GameConfig::default(),
    };
    config.validate()?;
    let server_args = args.engine.as_server_args();
    let assets = server_args.assets()?;
    let generators = server_args.generators();
    let policy = match &args.script {
        Some(p) => Policy::Script(Script::load(p)?),
        None => Policy::baseline(),
    };
    let mut log = args.prompt_log.as_deref().map(PromptLog::open).transpose()?;
    let report = run(
        config,
        args.seed,
        policy,
        &generators,
        &assets,
        RunOptions { max_ticks: args.max_ticks, prompt_log: log.as_mut() },
    )?;
    if let Some(p) = &args.event_log {
        fs::write(p, report.event_log.render()).map_err(|e| CliError::file(p, e))?;
    }
    let mut notes = vec![summary(&report)];
    notes.extend(report.rejected.iter().map(|r| format!("rejected `{}`: {} ({})", r.command, r.message, r.code)));
    let code = if report.rejected.is_empty() { 0 } else { EXIT_REJECTED };
    let text = serde_json::to_string_pretty(&report).expect("reports serialize");
    Ok(Output { text, out: args.out.clone(), notes, code })
}

fn summary(r: &RunReport) -> String {
    format!(
        "seed {} outcome {:?} after {} ticks ({:.1} s); words gained {} spent {}; {} terraforms; digest {}",
        r.seed,
        r.outcome,
        r.ticks,
        r.elapsed_s,
        r.words_gained,
        r.words_spent,
        r.receipts.len(),
        r.digest
    )
}

fn random_prompts(n: usize, seed: u64) -> Vec<String> {
    let words: Vec<String> = WordFrequencyTable::shipped().entries().iter().map(|(w, _)| w.clone()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let len = rng.random_range(1..=5);
            (0..len).map(|_| words.choose(&mut rng).expect("vocabulary is not empty").as_str()).collect::<Vec<_>>().join(" ")
        })
        .collect()
}

pub fn audit_generator(args: &AuditArgs) -> Result<(AuditReport, Output), CliError> {
    let mut texts = args.prompts.clone();
    if let Some(p) = &args.prompts_file {
        texts.extend(read(p)?.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).map(String::from));
    }
    texts.extend(random_prompts(args.random_prompts, args.seed));
    if texts.is_empty() {
        return Err(CliError::Usage("no prompts given; use --prompt, --prompts-file or --random-prompts".into()));
    }
    let prompts = texts
        .iter()
        .map(|t| Prompt::parse(t).map_err(|_| CliError::Usage(format!("empty prompt {t:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let seeds = parse_seeds(&args.seeds)?;
    let generator: Box<dyn Generator> = match args.backend {
        Backend::Local => Box::new(LocalGenerator::default()),
        Backend::Remote => {
            let url = args
                .generator_url
                .as_deref()
                .ok_or_else(|| CliError::Usage("--backend remote needs --generator-url".into()))?;
            Box::new(RemoteGenerator::new(url, Duration::from_millis(args.generator_timeout_ms)))
        }
    };
    let report = audit(generator.as_ref(), &prompts, &seeds, &TileSet::default())?;
    let text = serde_json::to_string_pretty(&report).expect("reports serialize");
    let notes = report
        .prompts
        .iter()
        .map(|p| {
            let top = p.groups.iter().max_by_key(|g| g.count).map(|g| g.group.label()).unwrap_or("-");
            format!("{:?}: top group {top}, diversity {:.3}, deterministic {}", p.prompt, p.diversity, p.deterministic)
        })
        .collect();
    let code = if report.all_valid { 0 } else { EXIT_INVALID };
    Ok((report, Output { text, out: args.out.clone(), notes, code }))
}

/// Grids from a run report or from receipts, one JSON object per line.
pub fn load_grids(path: &Path) -> Result<Vec<TileGrid>, CliError> {
    let text = read(path)?;
    if let Ok(report) = serde_json::from_str::<RunReport>(&text) {
        return Ok(report.receipts.into_iter().map(|r| r.grid).collect());
    }
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str::<TerraformReceipt>(l)
                .map(|r| r.grid)
                .map_err(|e| CliError::file(path, format!("line {}: {e}", i + 1)))
        })
        .collect()
}

pub fn analyze(args: &AnalyzeArgs) -> Result<Output, CliError> {
    let mode = if args.lenient { ParseMode::Lenient } else { ParseMode::Strict };
    let parsed = parse_log(&args.log, mode)?;
    let grids = args.grids.as_deref().map(load_grids).transpose()?;
    let text = render_report(&parsed.entries, grids.as_deref(), &AffinityTable::shipped(), &TileSet::default())?;
    let notes = parsed.skipped.iter().map(|(line, reason)| format!("skipped line {line}: {reason}")).collect();
    Ok(Output { text, out: args.out.clone(), notes, code: 0 })
}

pub fn serve(args: ServerArgs) -> Result<(), CliError> {
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Usage(format!("cannot start runtime: {e}")))?;
    runtime.block_on(terraword_server::serve(args))?;
    Ok(())
}

/// Runs a parsed command line and returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    let result = match cli.command {
        Cmd::Run(a) => run_game(&a),
        Cmd::AuditGenerator(a) => audit_generator(&a).map(|(_, o)| o),
        Cmd::Analyze(a) => analyze(&a),
        Cmd::Serve(a) => serve(a).map(|()| Output { text: String::new(), out: None, notes: Vec::new(), code: 0 }),
    };
    match result {
        Ok(output) => {
            for note in &output.notes {
                eprintln!("{note}");
            }
            match &output.out {
                Some(p) => {
                    if let Err(e) = fs::write(p, &output.text) {
                        eprintln!("error: {}: {e}", p.display());
                        return EXIT_INVALID;
                    }
                }
                None if !output.text.is_empty() => println!("{}", output.text.trim_end()),
                None => {}
            }
            output.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}
