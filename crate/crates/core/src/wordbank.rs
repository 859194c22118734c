//! Word pool, gacha draws with queue rotation, treasure draws, and the
//! player's word inventory.
//!
//! The pool is an ordered queue of the 1000 most frequent words. Positions
//! 1..=100 form the common group and 101..=1000 the uncommon group. A tree
//! draw picks a group with even odds, then a uniform word inside it, and
//! sends that word to the back of the queue.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const POOL_SIZE: usize = 1000;
pub const COMMON_SIZE: usize = 100;

const DEFAULT_WORDFREQ: &str = include_str!("../assets/wordfreq.tsv");

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WordbankError {
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("word {0:?} appears more than once")]
    DuplicateWord(String),
    #[error("need at least {POOL_SIZE} distinct words, table has {0}")]
    InsufficientVocabulary(usize),
    #[error("word {0:?} is not in the vocabulary")]
    UnknownWord(String),
    #[error("not enough {word:?}: have {have}, need {need}")]
    InsufficientWords { word: String, have: u32, need: u32 },
    #[error("pool snapshot is not a permutation of the vocabulary: {0}")]
    InvalidSnapshot(String),
}

/// Word counts from a training corpus.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WordFrequencyTable {
    entries: Vec<(String, u64)>,
}

impl WordFrequencyTable {
    pub fn new(entries: Vec<(String, u64)>) -> Result<Self, WordbankError> {
        let mut seen = HashSet::new();
        for (i, (word, count)) in entries.iter().enumerate() {
            check_token(word).map_err(|reason| WordbankError::MalformedLine { line: i + 1, reason })?;
            if *count == 0 {
                return Err(WordbankError::MalformedLine {
                    line: i + 1,
                    reason: format!("count for {word:?} must be positive"),
                });
            }
            if !seen.insert(word.as_str()) {
                return Err(WordbankError::DuplicateWord(word.clone()));
            }
        }
        Ok(WordFrequencyTable { entries })
    }

    /// Parses `word<TAB>count` lines. Blank lines are ignored.
    pub fn parse(text: &str) -> Result<Self, WordbankError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let malformed = |reason: &str| WordbankError::MalformedLine {
                line: i + 1,
                reason: reason.to_string(),
            };
            let (word, count) = line.split_once('\t').ok_or_else(|| malformed("expected word<TAB>count"))?;
            let count: u64 = count.trim().parse().map_err(|_| malformed("count is not an integer"))?;
            entries.push((word.to_string(), count));
        }
        Self::new(entries)
    }

    pub fn load(path: &Path) -> Result<Self, WordbankError> {
        let text = std::fs::read_to_string(path).map_err(|e| WordbankError::MalformedLine {
            line: 0,
            reason: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }

    /// The shipped frequency file.
    pub fn shipped() -> Self {
        Self::parse(DEFAULT_WORDFREQ).expect("shipped word frequency file is valid")
    }

    pub fn entries(&self) -> &[(String, u64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn check_token(word: &str) -> Result<(), String> {
    if word.is_empty() {
        return Err("empty word".into());
    }
    if word.chars().any(|c| c.is_whitespace() || c.is_control() || c == '"' || c == '\\' || c == ',') {
        return Err(format!("word {word:?} contains a forbidden character"));
    }
    if word.chars().any(char::is_uppercase) {
        return Err(format!("word {word:?} is not lowercase"));
    }
    Ok(())
}

/// Which rarity group a drawn word came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Group {
    Common,
    Uncommon,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrawOutcome {
    pub word: String,
    pub group: Group,
    /// 1-based queue position of the word before the draw.
    pub pre_draw_position: usize,
}

/// Read-only membership view of the pool's vocabulary.
#[derive(Debug, Clone)]
pub struct Vocabulary(Arc<HashSet<String>>);

impl Vocabulary {
    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// The rotating 1000-word gacha queue.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct WordPool {
    queue: Vec<String>,
    vocab: Vocabulary,
}

impl PartialEq for WordPool {
    fn eq(&self, other: &Self) -> bool {
        self.queue == other.queue
    }
}

impl Eq for WordPool {}

impl WordPool {
    /// Top 1000 words by descending count, ties broken by ascending word.
    pub fn build(table: &WordFrequencyTable) -> Result<Self, WordbankError> {
        if table.len() < POOL_SIZE {
            return Err(WordbankError::InsufficientVocabulary(table.len()));
        }
        let mut ranked: Vec<&(String, u64)> = table.entries().iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let queue: Vec<String> = ranked.into_iter().take(POOL_SIZE).map(|(w, _)| w.clone()).collect();
        Ok(Self::from_queue_unchecked(queue))
    }

    fn from_queue_unchecked(queue: Vec<String>) -> Self {
        let vocab = Vocabulary(Arc::new(queue.iter().cloned().collect()));
        WordPool { queue, vocab }
    }

    /// Restores a pool from a snapshot queue (one word per position).
    pub fn from_queue(queue: Vec<String>) -> Result<Self, WordbankError> {
        if queue.len() != POOL_SIZE {
            return Err(WordbankError::InvalidSnapshot(format!("{} words, expected {POOL_SIZE}", queue.len())));
        }
        let pool = Self::from_queue_unchecked(queue);
        if pool.vocab.len() != POOL_SIZE {
            return Err(WordbankError::InvalidSnapshot("duplicate words".into()));
        }
        Ok(pool)
    }

    pub fn queue(&self) -> &[String] {
        &self.queue
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn contains(&self, word: &str) -> bool {
        self.vocab.contains(word)
    }

    /// 1-based position of `word` in the queue.
    pub fn position(&self, word: &str) -> Option<usize> {
        self.queue.iter().position(|w| w == word).map(|i| i + 1)
    }

    pub fn word_at(&self, position: usize) -> Option<&str> {
        position.checked_sub(1).and_then(|i| self.queue.get(i)).map(String::as_str)
    }

    pub fn group_of(position: usize) -> Group {
        if position <= COMMON_SIZE {
            Group::Common
        } else {
            Group::Uncommon
        }
    }

    /// Picks a word without rotating the queue.
    pub fn pick<R: Rng + ?Sized>(&self, rng: &mut R) -> DrawOutcome {
        let index = if rng.random_bool(0.5) {
            rng.random_range(0..COMMON_SIZE)
        } else {
            rng.random_range(COMMON_SIZE..POOL_SIZE)
        };
        let position = index + 1;
        DrawOutcome {
            word: self.queue[index].clone(),
            group: Self::group_of(position),
            pre_draw_position: position,
        }
    }

    /// Moves the word at 1-based `position` to the back; later words shift up one.
    pub fn rotate_to_back(&mut self, position: usize) {
        assert!((1..=POOL_SIZE).contains(&position), "queue position {position} out of range");
        let word = self.queue.remove(position - 1);
        self.queue.push(word);
    }

    /// A tree-cut draw: pick, then rotate the drawn word to the back.
    pub fn draw_word<R: Rng + ?Sized>(&mut self, rng: &mut R) -> DrawOutcome {
        let outcome = self.pick(rng);
        self.rotate_to_back(outcome.pre_draw_position);
        outcome
    }

    /// Five distinct words, uniform over the whole pool. The queue is not rotated.
    pub fn draw_treasure<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<String> {
        rand::seq::index::sample(rng, POOL_SIZE, 5)
            .into_iter()
            .map(|i| self.queue[i].clone())
            .collect()
    }

    /// One word per line, position = line number.
    pub fn to_snapshot(&self) -> String {
        let mut out = String::with_capacity(POOL_SIZE * 8);
        for w in &self.queue {
            out.push_str(w);
            out.push('\n');
        }
        out
    }

    pub fn from_snapshot(text: &str) -> Result<Self, WordbankError> {
        Self::from_queue(text.lines().map(str::to_string).collect())
    }
}

impl TryFrom<Vec<String>> for WordPool {
    type Error = WordbankError;

    fn try_from(queue: Vec<String>) -> Result<Self, Self::Error> {
        WordPool::from_queue(queue)
    }
}

impl From<WordPool> for Vec<String> {
    fn from(pool: WordPool) -> Self {
        pool.queue
    }
}

/// The player's collected words, a multiset.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WordInventory {
    counts: BTreeMap<String, u32>,
}

impl WordInventory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self, word: &str) -> u32 {
        self.counts.get(word).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().map(|&c| u64::from(c)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.counts.iter().map(|(w, &c)| (w.as_str(), c))
    }

    pub fn counts(&self) -> &BTreeMap<String, u32> {
        &self.counts
    }

    pub fn grant(&mut self, word: &str, vocab: &Vocabulary) -> Result<(), WordbankError> {
        if !vocab.contains(word) {
            return Err(WordbankError::UnknownWord(word.to_string()));
        }
        *self.counts.entry(word.to_string()).or_insert(0) += 1;
        Ok(())
    }

    /// Checks that every word is owned at least as many times as it is listed.
    pub fn covers<S: AsRef<str>>(&self, words: &[S]) -> Result<(), WordbankError> {
        let mut need: HashMap<&str, u32> = HashMap::new();
        for w in words {
            *need.entry(w.as_ref()).or_insert(0) += 1;
        }
        // Report the first short word in list order so errors are deterministic.
        for w in words {
            let w = w.as_ref();
            let (have, n) = (self.count(w), need[w]);
            if have < n {
                return Err(WordbankError::InsufficientWords { word: w.to_string(), have, need: n });
            }
        }
        Ok(())
    }

    /// Removes one count per listed occurrence. Nothing changes on error.
    pub fn spend<S: AsRef<str>>(&mut self, words: &[S]) -> Result<(), WordbankError> {
        self.covers(words)?;
        for w in words {
            let w = w.as_ref();
            let c = self.counts.get_mut(w).expect("covered");
            *c -= 1;
            if *c == 0 {
                self.counts.remove(w);
            }
        }
        Ok(())
    }
}
