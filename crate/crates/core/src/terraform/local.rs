//! Offline rule-based stand-in for the external model.
//!
//! Each vocabulary word may carry 16 tile weights and a layout hint. For a
//! prompt, every known word contributes:
//!
//! * a *primary* region of its dominant tile, `round(100 * share)` cells laid
//!   out by the word's hint. Primaries are placed in descending order of the
//!   dominant raw weight and only on cells no earlier primary claimed;
//! * *accents*: `round(100 * share)` scattered cells for each of its other
//!   non-background tiles, placed in prompt order on still-unclaimed cells.
//!
//! Unclaimed cells end up as background (tile 0). Randomness comes from a
//! per-word stream keyed by `(seed, word position, word)`, so the output is a
//! pure function of the rendered prompt, the seed, and the table. Because a
//! word only ever claims free cells, appending a water-dominant word can
//! never lower the water count for a fixed seed.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{BackendKind, GenerateError, Generator, Prompt};
use crate::tilemap::{TileGrid, TileId, SUBGRID_SIZE, TILE_COUNT};

const DEFAULT_AFFINITY: &str = include_str!("../../assets/affinity.toml");
const CELLS: usize = SUBGRID_SIZE * SUBGRID_SIZE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayoutHint {
    Cluster,
    River,
    Scatter,
    Border,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Affinity {
    pub weights: [f64; TILE_COUNT],
    pub hint: LayoutHint,
}

impl Affinity {
    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Highest-weight tile; the lowest id wins ties.
    pub fn dominant(&self) -> TileId {
        let mut best = 0;
        for (i, &w) in self.weights.iter().enumerate() {
            if w > self.weights[best] {
                best = i;
            }
        }
        TileId::new(best as u8).expect("index < 16")
    }
}

#[derive(Debug, Error)]
pub enum AffinityError {
    #[error("affinity document is not valid: {0}")]
    Parse(String),
    #[error("word {word:?}: {reason}")]
    InvalidEntry { word: String, reason: String },
    #[error("cannot read affinity table: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AffinityDocument {
    #[serde(default)]
    words: BTreeMap<String, Affinity>,
}

/// Word → tile-weight table driving the local generator.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AffinityTable {
    words: BTreeMap<String, Affinity>,
}

impl AffinityTable {
    pub fn from_toml(document: &str) -> Result<Self, AffinityError> {
        let doc: AffinityDocument =
            toml::from_str(document).map_err(|e| AffinityError::Parse(e.to_string()))?;
        Self::new(doc.words)
    }

    pub fn load(path: &Path) -> Result<Self, AffinityError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn new(words: BTreeMap<String, Affinity>) -> Result<Self, AffinityError> {
        for (word, a) in &words {
            if a.weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(AffinityError::InvalidEntry {
                    word: word.clone(),
                    reason: "weights must be finite and non-negative".into(),
                });
            }
        }
        Ok(AffinityTable { words })
    }

    pub fn shipped() -> Self {
        Self::from_toml(DEFAULT_AFFINITY).expect("shipped affinity table is valid")
    }

    pub fn get(&self, word: &str) -> Option<&Affinity> {
        self.words.get(word).filter(|a| a.total() > 0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Affinity)> {
        self.words.iter().map(|(w, a)| (w.as_str(), a))
    }

    /// Dominant tile of a word, if the word has any affinity.
    pub fn dominant(&self, word: &str) -> Option<TileId> {
        self.get(word).map(Affinity::dominant)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalGenerator {
    table: AffinityTable,
}

impl LocalGenerator {
    pub fn new(table: AffinityTable) -> Self {
        LocalGenerator { table }
    }

    pub fn table(&self) -> &AffinityTable {
        &self.table
    }
}

impl Default for LocalGenerator {
    fn default() -> Self {
        LocalGenerator::new(AffinityTable::shipped())
    }
}

impl Generator for LocalGenerator {
    fn kind(&self) -> BackendKind {
        BackendKind::LocalRuleBased
    }

    fn generate(&self, prompt: &Prompt, seed: u64) -> Result<TileGrid, GenerateError> {
        Ok(generate_local(prompt.words(), seed, &self.table))
    }
}

fn word_rng(seed: u64, position: usize, word: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((position as u64).to_le_bytes());
    h.update(word.as_bytes());
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest[..32]);
    ChaCha8Rng::from_seed(key)
}

fn cell_count(share: f64) -> usize {
    (share * CELLS as f64).round() as usize
}

struct Canvas {
    tiles: [TileId; CELLS],
    claimed: [bool; CELLS],
    free: usize,
}

impl Canvas {
    fn new(background: TileId) -> Self {
        Canvas { tiles: [background; CELLS], claimed: [false; CELLS], free: CELLS }
    }

    fn claim(&mut self, i: usize, tile: TileId) {
        debug_assert!(!self.claimed[i]);
        self.claimed[i] = true;
        self.tiles[i] = tile;
        self.free -= 1;
    }

    fn free_cells(&self) -> Vec<usize> {
        (0..CELLS).filter(|&i| !self.claimed[i]).collect()
    }

    fn neighbors(i: usize) -> impl Iterator<Item = usize> {
        let (x, y) = (i % SUBGRID_SIZE, i / SUBGRID_SIZE);
        [
            (y > 0).then(|| i - SUBGRID_SIZE),
            (x + 1 < SUBGRID_SIZE).then(|| i + 1),
            (y + 1 < SUBGRID_SIZE).then(|| i + SUBGRID_SIZE),
            (x > 0).then(|| i - 1),
        ]
        .into_iter()
        .flatten()
    }

    fn scatter(&mut self, n: usize, tile: TileId, rng: &mut ChaCha8Rng) {
        let mut free = self.free_cells();
        free.shuffle(rng);
        for &i in free.iter().take(n) {
            self.claim(i, tile);
        }
    }

    /// Grows random 4-connected blobs; a new blob starts only when the
    /// current one has no free neighbour left.
    fn cluster(&mut self, n: usize, tile: TileId, rng: &mut ChaCha8Rng) {
        let mut placed = 0;
        let mut frontier: Vec<usize> = Vec::new();
        while placed < n {
            frontier.retain(|&i| !self.claimed[i]);
            let next = if frontier.is_empty() {
                let free = self.free_cells();
                free[rng.random_range(0..free.len())]
            } else {
                frontier.swap_remove(rng.random_range(0..frontier.len()))
            };
            self.claim(next, tile);
            placed += 1;
            for nb in Self::neighbors(next) {
                if !self.claimed[nb] && !frontier.contains(&nb) {
                    frontier.push(nb);
                }
            }
        }
    }

    /// A meandering edge-to-edge line, widened like a blob when longer
    /// regions are requested.
    fn river(&mut self, n: usize, tile: TileId, rng: &mut ChaCha8Rng) {
        let horizontal = rng.random_bool(0.5);
        let mut lateral = rng.random_range(0..SUBGRID_SIZE) as isize;
        let mut course = Vec::with_capacity(2 * SUBGRID_SIZE);
        for along in 0..SUBGRID_SIZE {
            course.push((along, lateral as usize));
            if along + 1 < SUBGRID_SIZE {
                let drift = rng.random_range(0..3i64) as isize - 1;
                let next = (lateral + drift).clamp(0, SUBGRID_SIZE as isize - 1);
                if next != lateral {
                    course.push((along, next as usize));
                    lateral = next;
                }
            }
        }
        let mut placed = 0;
        let mut river = Vec::new();
        for (along, side) in course {
            if placed == n {
                break;
            }
            let (x, y) = if horizontal { (along, side) } else { (side, along) };
            let i = y * SUBGRID_SIZE + x;
            if !self.claimed[i] {
                self.claim(i, tile);
                river.push(i);
                placed += 1;
            }
        }
        let mut frontier: Vec<usize> = Vec::new();
        for &i in &river {
            for nb in Self::neighbors(i) {
                if !self.claimed[nb] && !frontier.contains(&nb) {
                    frontier.push(nb);
                }
            }
        }
        while placed < n {
            frontier.retain(|&i| !self.claimed[i]);
            if frontier.is_empty() {
                self.cluster(n - placed, tile, rng);
                return;
            }
            let next = frontier.swap_remove(rng.random_range(0..frontier.len()));
            self.claim(next, tile);
            placed += 1;
            for nb in Self::neighbors(next) {
                if !self.claimed[nb] && !frontier.contains(&nb) {
                    frontier.push(nb);
                }
            }
        }
    }

    /// Fills concentric rings from the outside in, shuffled within a ring.
    fn border(&mut self, n: usize, tile: TileId, rng: &mut ChaCha8Rng) {
        let ring = |i: usize| {
            let (x, y) = (i % SUBGRID_SIZE, i / SUBGRID_SIZE);
            x.min(y).min(SUBGRID_SIZE - 1 - x).min(SUBGRID_SIZE - 1 - y)
        };
        let mut placed = 0;
        for r in 0..SUBGRID_SIZE / 2 {
            let mut cells: Vec<usize> = (0..CELLS).filter(|&i| ring(i) == r && !self.claimed[i]).collect();
            cells.shuffle(rng);
            for i in cells {
                if placed == n {
                    return;
                }
                self.claim(i, tile);
                placed += 1;
            }
        }
    }

    fn lay_out(&mut self, hint: LayoutHint, n: usize, tile: TileId, rng: &mut ChaCha8Rng) {
        let n = n.min(self.free);
        if n == 0 {
            return;
        }
        match hint {
            LayoutHint::Cluster => self.cluster(n, tile, rng),
            LayoutHint::River => self.river(n, tile, rng),
            LayoutHint::Scatter => self.scatter(n, tile, rng),
            LayoutHint::Border => self.border(n, tile, rng),
        }
    }
}

/// Deterministic grid for `words` under `seed`. Words without affinity are
/// ignored; a prompt with none yields an all-background grid.
pub fn generate_local<S: AsRef<str>>(words: &[S], seed: u64, table: &AffinityTable) -> TileGrid {
    let background = TileId::GRASS;
    let mut canvas = Canvas::new(background);

    struct Known<'a> {
        position: usize,
        affinity: &'a Affinity,
        rng: ChaCha8Rng,
    }
    let mut known: Vec<Known> = words
        .iter()
        .enumerate()
        .filter_map(|(position, w)| {
            let w = w.as_ref();
            table.get(w).map(|affinity| Known { position, affinity, rng: word_rng(seed, position, w) })
        })
        .collect();

    let mut order: Vec<usize> = (0..known.len()).collect();
    order.sort_by(|&a, &b| {
        let (ka, kb) = (&known[a], &known[b]);
        let wa = ka.affinity.weights[ka.affinity.dominant().index()];
        let wb = kb.affinity.weights[kb.affinity.dominant().index()];
        wb.total_cmp(&wa).then(ka.position.cmp(&kb.position))
    });
    for k in order {
        let entry = &mut known[k];
        let dominant = entry.affinity.dominant();
        let share = entry.affinity.weights[dominant.index()] / entry.affinity.total();
        canvas.lay_out(entry.affinity.hint, cell_count(share), dominant, &mut entry.rng);
    }

    for entry in &mut known {
        let dominant = entry.affinity.dominant();
        let total = entry.affinity.total();
        for tile in TileId::all() {
            if tile == dominant || tile == background {
                continue;
            }
            let n = cell_count(entry.affinity.weights[tile.index()] / total).min(canvas.free);
            canvas.scatter(n, tile, &mut entry.rng);
        }
    }

    let mut grid = TileGrid::default();
    for (i, &t) in canvas.tiles.iter().enumerate() {
        grid.set(i % SUBGRID_SIZE, i / SUBGRID_SIZE, t);
    }
    grid
}
