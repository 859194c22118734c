//! Headless game driver: runs a command script or the baseline bot to the
//! end of the game and reports the result.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bot::BaselineBot;
use crate::simulation::{
    Applied, Command, GameAssets, GameConfig, GameState, Outcome, Script, SetupError, Stats, TimedCommand,
};
use crate::snapshot::StateSnapshot;
use crate::telemetry::{PromptLog, TelemetryError};
use crate::terraform::{Generators, TerraformReceipt};

/// Default cap on simulated time: one hour.
pub const DEFAULT_MAX_TICKS: u64 = 36_000;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Setup(#[from] SetupError),
    #[error(transparent)]
    Telemetry(#[from] TelemetryError),
}

pub enum Policy {
    Script(Script),
    BaselineBot(BaselineBot),
}

impl Policy {
    pub fn baseline() -> Self {
        Policy::BaselineBot(BaselineBot::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub tick: u64,
    pub command: String,
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub outcome: Outcome,
    pub ticks: u64,
    pub elapsed_s: f64,
    pub words_gained: u64,
    pub words_spent: u64,
    pub stats: Stats,
    pub receipts: Vec<TerraformReceipt>,
    pub rejected: Vec<Rejection>,
    pub digest: String,
    #[serde(skip)]
    pub event_log: Script,
    #[serde(skip)]
    pub snapshot: Option<StateSnapshot>,
}

/// Options beyond the game inputs themselves.
pub struct RunOptions<'a> {
    pub max_ticks: u64,
    pub prompt_log: Option<&'a mut PromptLog>,
}

impl Default for RunOptions<'_> {
    fn default() -> Self {
        RunOptions { max_ticks: DEFAULT_MAX_TICKS, prompt_log: None }
    }
}

/// Applies `command` and records it in `log` when accepted.
fn apply(
    state: &mut GameState,
    command: Command,
    generators: &Generators,
    log: &mut Script,
    rejected: &mut Vec<Rejection>,
    prompt_log: &mut Option<&mut PromptLog>,
) -> Result<(), RunError> {
    let tick = state.clock.tick;
    match state.apply_command(&command, generators) {
        Ok(applied) => {
            if let (Applied::Terraformed(receipt), Some(plog)) = (&applied, prompt_log.as_deref_mut()) {
                plog.record(receipt)?;
            }
            log.push(tick, command);
        }
        Err(e) => rejected.push(Rejection {
            tick,
            command: TimedCommand { tick, command }.to_string(),
            code: e.code().to_string(),
            message: e.to_string(),
        }),
    }
    Ok(())
}

/// Plays one game to its end (or `max_ticks`).
pub fn run(
    config: GameConfig,
    seed: u64,
    policy: Policy,
    generators: &Generators,
    assets: &GameAssets,
    mut options: RunOptions<'_>,
) -> Result<RunReport, RunError> {
    let mut state = GameState::new_game_with(config, seed, assets)?;
    let mut event_log = Script::default();
    let mut rejected = Vec::new();
    let mut policy = policy;
    let mut cursor = 0usize;
    while state.outcome == Outcome::Ongoing && state.clock.tick < options.max_ticks {
        let commands: Vec<Command> = match &mut policy {
            Policy::Script(script) => {
                let mut due = Vec::new();
                while let Some(c) = script.commands.get(cursor) {
                    if c.tick > state.clock.tick {
                        break;
                    }
                    if c.tick == state.clock.tick {
                        due.push(c.command.clone());
                    }
                    cursor += 1;
                }
                due
            }
            Policy::BaselineBot(bot) => bot.decide(&state),
        };
        for command in commands {
            apply(&mut state, command, generators, &mut event_log, &mut rejected, &mut options.prompt_log)?;
        }
        state.step(1);
    }
    let snapshot = StateSnapshot::capture(&state);
    Ok(RunReport {
        seed,
        outcome: state.outcome,
        ticks: state.clock.tick,
        elapsed_s: state.elapsed_s(),
        words_gained: state.stats.words_gained,
        words_spent: state.stats.words_spent,
        stats: state.stats.clone(),
        receipts: state.receipts.clone(),
        rejected,
        digest: snapshot.digest(),
        event_log,
        snapshot: Some(snapshot),
    })
}

/// Runs with the shipped assets and local generation.
pub fn run_default(config: GameConfig, seed: u64, policy: Policy) -> Result<RunReport, RunError> {
    run(config, seed, policy, &Generators::default(), &GameAssets::default(), RunOptions::default())
}
