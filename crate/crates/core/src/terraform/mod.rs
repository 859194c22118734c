//! Prompt composition, generation backends, and the terraform transaction.

pub mod local;
pub mod remote;

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::simulation::{GameState, Outcome};
use crate::tilemap::{TileGrid, GRID_COUNT};
use crate::wordbank::{WordInventory, WordbankError};

pub use local::{generate_local, Affinity, AffinityError, AffinityTable, LayoutHint, LocalGenerator};
pub use remote::RemoteGenerator;

/// An ordered, non-empty list of owned words and its space-joined rendering.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Prompt {
    words: Vec<String>,
    rendered: String,
}

impl Prompt {
    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn rendered(&self) -> &str {
        &self.rendered
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Builds a prompt without an ownership check (audits, tests).
    pub fn from_words<S: AsRef<str>>(words: &[S]) -> Result<Prompt, TerraformError> {
        if words.is_empty() {
            return Err(TerraformError::EmptySelection);
        }
        let words: Vec<String> = words.iter().map(|w| w.as_ref().to_string()).collect();
        if let Some(bad) = words.iter().find(|w| w.is_empty() || w.chars().any(char::is_whitespace)) {
            return Err(TerraformError::WordNotOwned(bad.clone()));
        }
        let rendered = words.join(" ");
        Ok(Prompt { words, rendered })
    }

    pub fn parse(rendered: &str) -> Result<Prompt, TerraformError> {
        let words: Vec<&str> = rendered.split_whitespace().collect();
        Self::from_words(&words)
    }
}

impl fmt::Display for Prompt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.rendered)
    }
}

/// Builds a prompt from words the player owns, in the given order.
pub fn compose_prompt<S: AsRef<str>>(
    inventory: &WordInventory,
    selection: &[S],
) -> Result<Prompt, TerraformError> {
    if selection.is_empty() {
        return Err(TerraformError::EmptySelection);
    }
    inventory.covers(selection).map_err(|e| match e {
        WordbankError::InsufficientWords { word, .. } => TerraformError::WordNotOwned(word),
        other => TerraformError::WordNotOwned(other.to_string()),
    })?;
    Prompt::from_words(selection)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BackendKind {
    #[serde(rename = "remote")]
    Remote,
    #[serde(rename = "local")]
    LocalRuleBased,
}

impl BackendKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BackendKind::Remote => "remote",
            BackendKind::LocalRuleBased => "local",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "remote" => Some(BackendKind::Remote),
            "local" => Some(BackendKind::LocalRuleBased),
            _ => None,
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenerateError {
    #[error("generator timed out after {after_ms} ms")]
    Timeout { after_ms: u64 },
    #[error("generator answered HTTP {status}: {body}")]
    ServerError { status: u16, body: String },
    #[error("generator unreachable: {0}")]
    Transport(String),
    #[error("generator returned a malformed grid: {0}")]
    MalformedResponse(String),
}

impl GenerateError {
    /// Failures after which the local backend may stand in.
    pub fn allows_fallback(&self) -> bool {
        !matches!(self, GenerateError::MalformedResponse(_))
    }
}

/// A text-to-grid backend. Implementations return a valid grid or an error,
/// never a malformed grid.
pub trait Generator: Send + Sync {
    fn kind(&self) -> BackendKind;
    fn generate(&self, prompt: &Prompt, seed: u64) -> Result<TileGrid, GenerateError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorMode {
    /// Remote first, local on timeout or server failure.
    #[default]
    RemoteWithFallback,
    Remote,
    Local,
}

/// Backend selection: an optional remote model and the local stand-in.
pub struct Generators {
    remote: Option<Box<dyn Generator>>,
    local: LocalGenerator,
    fallback: bool,
}

impl Generators {
    pub fn local(local: LocalGenerator) -> Self {
        Generators { remote: None, local, fallback: true }
    }

    pub fn with_remote(remote: Box<dyn Generator>, local: LocalGenerator, fallback: bool) -> Self {
        Generators { remote: Some(remote), local, fallback }
    }

    /// Backends for a mode; without an endpoint every mode runs locally.
    pub fn from_mode(mode: GeneratorMode, endpoint: Option<&str>, timeout: Duration, local: LocalGenerator) -> Self {
        match (mode, endpoint) {
            (GeneratorMode::Local, _) | (_, None) => Self::local(local),
            (GeneratorMode::Remote, Some(url)) => {
                Self::with_remote(Box::new(RemoteGenerator::new(url, timeout)), local, false)
            }
            (GeneratorMode::RemoteWithFallback, Some(url)) => {
                Self::with_remote(Box::new(RemoteGenerator::new(url, timeout)), local, true)
            }
        }
    }

    pub fn local_generator(&self) -> &LocalGenerator {
        &self.local
    }

    pub fn generate(&self, prompt: &Prompt, seed: u64) -> Result<(TileGrid, BackendKind), GenerateError> {
        match &self.remote {
            None => Ok((self.local.generate(prompt, seed)?, BackendKind::LocalRuleBased)),
            Some(remote) => match remote.generate(prompt, seed) {
                Ok(grid) => Ok((grid, remote.kind())),
                Err(e) if self.fallback && e.allows_fallback() => {
                    Ok((self.local.generate(prompt, seed)?, BackendKind::LocalRuleBased))
                }
                Err(e) => Err(e),
            },
        }
    }
}

impl Default for Generators {
    fn default() -> Self {
        Generators::local(LocalGenerator::default())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TerraformReceipt {
    pub grid_index: usize,
    pub prompt: Prompt,
    pub grid: TileGrid,
    pub backend: BackendKind,
    pub tick: u64,
    pub words_spent: Vec<String>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TerraformError {
    #[error("no words selected")]
    EmptySelection,
    #[error("word {0:?} is not owned (or not owned often enough)")]
    WordNotOwned(String),
    #[error("sub-grid index {0} is outside 0..=15")]
    InvalidIndex(usize),
    #[error("sub-grid {0} is occupied by a boss")]
    GridOccupiedByBoss(usize),
    #[error("generation failed: {0}")]
    Generation(#[from] GenerateError),
    #[error("the game is over")]
    GameOver,
}

impl TerraformError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            TerraformError::EmptySelection => "empty_selection",
            TerraformError::WordNotOwned(_) => "word_not_owned",
            TerraformError::InvalidIndex(_) => "invalid_index",
            TerraformError::GridOccupiedByBoss(_) => "grid_occupied",
            TerraformError::Generation(_) => "generation_failed",
            TerraformError::GameOver => "game_over",
        }
    }
}

/// Replaces sub-grid `grid_index` with a grid generated from `selection`.
///
/// All-or-nothing: on any error `state` is left exactly as it was, so words
/// are never lost to a failed generation.
pub fn terraform<S: AsRef<str>>(
    state: &mut GameState,
    grid_index: usize,
    selection: &[S],
    generators: &Generators,
) -> Result<TerraformReceipt, TerraformError> {
    if state.outcome != Outcome::Ongoing {
        return Err(TerraformError::GameOver);
    }
    if grid_index >= GRID_COUNT {
        return Err(TerraformError::InvalidIndex(grid_index));
    }
    if state.world.is_boss_occupied(grid_index) {
        return Err(TerraformError::GridOccupiedByBoss(grid_index));
    }
    let prompt = compose_prompt(&state.inventory, selection)?;

    let mut generation_rng = state.rng.generation.clone();
    let seed: u64 = rand::Rng::random(&mut generation_rng);
    let (grid, backend) = generators.generate(&prompt, seed)?;

    let words_spent = if state.config.words_consumable {
        state.inventory.spend(prompt.words()).expect("ownership checked above");
        prompt.words().to_vec()
    } else {
        Vec::new()
    };
    state.rng.generation = generation_rng;
    state.apply_placement(grid_index, grid);
    let receipt = TerraformReceipt {
        grid_index,
        prompt,
        grid,
        backend,
        tick: state.clock.tick,
        words_spent,
    };
    state.stats.words_spent += receipt.words_spent.len() as u64;
    state.receipts.push(receipt.clone());
    Ok(receipt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wordbank::{WordFrequencyTable, WordPool};

    fn inventory(words: &[&str]) -> WordInventory {
        let pool = WordPool::build(&WordFrequencyTable::shipped()).unwrap();
        let mut inv = WordInventory::new();
        for w in words {
            inv.grant(w, pool.vocabulary()).unwrap();
        }
        inv
    }

    #[test]
    fn single_word_prompt() {
        let p = compose_prompt(&inventory(&["forest"]), &["forest"]).unwrap();
        assert_eq!(p.rendered(), "forest");
    }

    #[test]
    fn prompt_keeps_selection_order() {
        let inv = inventory(&["a", "a", "river", "in", "forest"]);
        let p = compose_prompt(&inv, &["a", "river", "in", "a", "forest"]).unwrap();
        assert_eq!(p.rendered(), "a river in a forest");
        assert_eq!(p.len(), 5);
    }

    #[test]
    fn unowned_and_empty_selections() {
        let empty = WordInventory::new();
        assert_eq!(
            compose_prompt(&empty, &["castle"]),
            Err(TerraformError::WordNotOwned("castle".into()))
        );
        let none: [&str; 0] = [];
        assert_eq!(compose_prompt(&empty, &none), Err(TerraformError::EmptySelection));
    }

    struct Failing(GenerateError);

    impl Generator for Failing {
        fn kind(&self) -> BackendKind {
            BackendKind::Remote
        }
        fn generate(&self, _: &Prompt, _: u64) -> Result<TileGrid, GenerateError> {
            Err(self.0.clone())
        }
    }

    #[test]
    fn fallback_only_for_recoverable_errors() {
        let p = Prompt::from_words(&["lake"]).unwrap();
        let timeout = GenerateError::Timeout { after_ms: 10 };
        let g = Generators::with_remote(Box::new(Failing(timeout.clone())), LocalGenerator::default(), true);
        assert_eq!(g.generate(&p, 1).unwrap().1, BackendKind::LocalRuleBased);
        let g = Generators::with_remote(Box::new(Failing(timeout.clone())), LocalGenerator::default(), false);
        assert_eq!(g.generate(&p, 1).unwrap_err(), timeout);
        let bad = GenerateError::MalformedResponse("x".into());
        let g = Generators::with_remote(Box::new(Failing(bad.clone())), LocalGenerator::default(), true);
        assert_eq!(g.generate(&p, 1).unwrap_err(), bad);
    }
}
