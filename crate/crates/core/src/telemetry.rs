//! Prompt logging and the offline analyses built on it.
//!
//! Log line grammar:
//!
//! ```text
//! <tick> TAB <grid 0-15> TAB <remote|local> TAB "<prompt>" LF
//! ```
//!
//! Inside the quotes, `"` and `\` are escaped with a backslash.

use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::terraform::{AffinityTable, BackendKind, TerraformReceipt};
use crate::tilemap::{Category, TileGrid, TileSet, GRID_COUNT};

#[derive(Debug, Error)]
pub enum TelemetryError {
    #[error("log i/o failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("the log has no entries")]
    EmptyLog,
    #[error("no grids to analyse")]
    EmptyInput,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptLogEntry {
    pub tick: u64,
    pub grid_index: usize,
    pub backend: BackendKind,
    pub prompt: String,
    pub word_count: usize,
}

impl PromptLogEntry {
    pub fn new(tick: u64, grid_index: usize, backend: BackendKind, prompt: &str) -> Self {
        PromptLogEntry {
            tick,
            grid_index,
            backend,
            prompt: prompt.to_string(),
            word_count: prompt.split(' ').filter(|w| !w.is_empty()).count(),
        }
    }

    pub fn from_receipt(receipt: &TerraformReceipt) -> Self {
        Self::new(receipt.tick, receipt.grid_index, receipt.backend, receipt.prompt.rendered())
    }

    /// The log line, including the trailing newline.
    pub fn to_line(&self) -> String {
        let mut quoted = String::with_capacity(self.prompt.len() + 2);
        for ch in self.prompt.chars() {
            if ch == '"' || ch == '\\' {
                quoted.push('\\');
            }
            quoted.push(ch);
        }
        format!("{}\t{}\t{}\t\"{}\"\n", self.tick, self.grid_index, self.backend, quoted)
    }

    /// Parses one line, without its newline.
    pub fn parse_line(line: &str) -> Result<Self, String> {
        let fields: Vec<&str> = line.splitn(4, '\t').collect();
        if fields.len() != 4 {
            return Err(format!("expected 4 tab-separated fields, found {}", fields.len()));
        }
        let tick = fields[0].parse().map_err(|_| format!("bad tick {:?}", fields[0]))?;
        let grid_index: usize = fields[1].parse().map_err(|_| format!("bad grid index {:?}", fields[1]))?;
        if grid_index >= GRID_COUNT {
            return Err(format!("grid index {grid_index} out of range"));
        }
        let backend = BackendKind::parse(fields[2]).ok_or_else(|| format!("bad backend {:?}", fields[2]))?;
        let quoted = fields[3];
        let inner = quoted
            .strip_prefix('"')
            .and_then(|s| s.strip_suffix('"'))
            .filter(|_| quoted.len() >= 2)
            .ok_or("prompt is not quoted")?;
        let mut prompt = String::with_capacity(inner.len());
        let mut chars = inner.chars();
        while let Some(ch) = chars.next() {
            match ch {
                '\\' => match chars.next() {
                    Some(e @ ('"' | '\\')) => prompt.push(e),
                    _ => return Err("bad escape in prompt".into()),
                },
                '"' => return Err("unescaped quote in prompt".into()),
                c => prompt.push(c),
            }
        }
        Ok(Self::new(tick, grid_index, backend, &prompt))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseMode {
    /// The first bad line is an error.
    Strict,
    /// Bad lines are skipped and reported.
    Lenient,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedLog {
    pub entries: Vec<PromptLogEntry>,
    /// `(line number, reason)` for every skipped line.
    pub skipped: Vec<(usize, String)>,
}

pub fn parse_log_text(text: &str, mode: ParseMode) -> Result<ParsedLog, TelemetryError> {
    let mut out = ParsedLog::default();
    for (i, line) in text.lines().enumerate() {
        match PromptLogEntry::parse_line(line) {
            Ok(e) => out.entries.push(e),
            Err(reason) if mode == ParseMode::Strict => {
                return Err(TelemetryError::MalformedLine { line: i + 1, reason });
            }
            Err(reason) => out.skipped.push((i + 1, reason)),
        }
    }
    Ok(out)
}

pub fn parse_log(path: &Path, mode: ParseMode) -> Result<ParsedLog, TelemetryError> {
    parse_log_text(&std::fs::read_to_string(path)?, mode)
}

/// Appends one entry with a single write call.
pub fn append_log(path: &Path, entry: &PromptLogEntry) -> Result<(), TelemetryError> {
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    f.write_all(entry.to_line().as_bytes())?;
    Ok(())
}

/// An open prompt log that receives one line per receipt.
#[derive(Debug)]
pub struct PromptLog {
    path: PathBuf,
    file: File,
}

impl PromptLog {
    pub fn open(path: &Path) -> Result<Self, TelemetryError> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(PromptLog { path: path.to_path_buf(), file })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn record(&mut self, receipt: &TerraformReceipt) -> Result<(), TelemetryError> {
        self.file.write_all(PromptLogEntry::from_receipt(receipt).to_line().as_bytes())?;
        Ok(())
    }
}

pub const LENGTH_BUCKETS: [&str; 5] = ["1", "2", "3", "4", "5+"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthHistogram {
    pub counts: [u64; 5],
    pub percentages: [f64; 5],
}

impl LengthHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

fn percent(count: u64, total: u64) -> f64 {
    (count as f64 * 10000.0 / total as f64).round() / 100.0
}

/// Share of prompts with 1, 2, 3, 4 and 5+ words, in percent (2 decimals).
pub fn prompt_length_histogram(entries: &[PromptLogEntry]) -> Result<LengthHistogram, TelemetryError> {
    if entries.is_empty() {
        return Err(TelemetryError::EmptyLog);
    }
    let mut counts = [0u64; 5];
    for e in entries {
        counts[e.word_count.clamp(1, 5) - 1] += 1;
    }
    let total = entries.len() as u64;
    Ok(LengthHistogram { counts, percentages: counts.map(|c| percent(c, total)) })
}

/// Tile groups used by the frequency tables; house parts, fences and posts,
/// and the two decorative slots are pooled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TileGroup {
    Grass,
    Flowers,
    Bushes,
    Path,
    Sand,
    Rocks,
    FencesPosts,
    Trees,
    Water,
    Houses,
    TreasureBalls,
    Decorative,
}

impl TileGroup {
    pub const ALL: [TileGroup; 12] = [
        TileGroup::Grass,
        TileGroup::Flowers,
        TileGroup::Bushes,
        TileGroup::Path,
        TileGroup::Sand,
        TileGroup::Rocks,
        TileGroup::FencesPosts,
        TileGroup::Trees,
        TileGroup::Water,
        TileGroup::Houses,
        TileGroup::TreasureBalls,
        TileGroup::Decorative,
    ];

    pub fn of(category: Category) -> Self {
        match category {
            Category::Grass => TileGroup::Grass,
            Category::Flowers => TileGroup::Flowers,
            Category::Bushes => TileGroup::Bushes,
            Category::Path => TileGroup::Path,
            Category::Sand => TileGroup::Sand,
            Category::Rock => TileGroup::Rocks,
            Category::Fence | Category::Post => TileGroup::FencesPosts,
            Category::Tree => TileGroup::Trees,
            Category::Water => TileGroup::Water,
            Category::HouseDoor | Category::HouseWindow | Category::HouseRoof => TileGroup::Houses,
            Category::TreasureBall => TileGroup::TreasureBalls,
            Category::Decorative => TileGroup::Decorative,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            TileGroup::Grass => "Grass",
            TileGroup::Flowers => "Flowers",
            TileGroup::Bushes => "Bushes",
            TileGroup::Path => "Path",
            TileGroup::Sand => "Sand",
            TileGroup::Rocks => "Rocks/Mountains",
            TileGroup::FencesPosts => "Fences/Posts",
            TileGroup::Trees => "Trees",
            TileGroup::Water => "Water",
            TileGroup::Houses => "Houses",
            TileGroup::TreasureBalls => "Treasure Balls",
            TileGroup::Decorative => "Decorative",
        }
    }
}

impl fmt::Display for TileGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupShare {
    pub group: TileGroup,
    pub count: u64,
    pub percentage: f64,
}

/// Per-group counts over every cell of `grids`, in [`TileGroup::ALL`] order.
pub fn tile_frequency<'a>(
    grids: impl IntoIterator<Item = &'a TileGrid>,
    tiles: &TileSet,
) -> Result<Vec<GroupShare>, TelemetryError> {
    let mut counts = [0u64; TileGroup::ALL.len()];
    let mut cells = 0u64;
    for g in grids {
        for t in g.iter() {
            counts[TileGroup::of(tiles.category(t)) as usize] += 1;
            cells += 1;
        }
    }
    if cells == 0 {
        return Err(TelemetryError::EmptyInput);
    }
    Ok(TileGroup::ALL
        .iter()
        .map(|&group| GroupShare { group, count: counts[group as usize], percentage: percent(counts[group as usize], cells) })
        .collect())
}

/// Tile frequency over the grids of a run's receipts.
pub fn receipt_tile_frequency(receipts: &[TerraformReceipt], tiles: &TileSet) -> Result<Vec<GroupShare>, TelemetryError> {
    tile_frequency(receipts.iter().map(|r| &r.grid), tiles)
}

/// Share of prompts associated with each tile group: a prompt counts for a
/// group when any of its words has that group's tile as its strongest
/// affinity. Words without an affinity count for nothing.
pub fn prompt_tile_association(
    entries: &[PromptLogEntry],
    affinity: &AffinityTable,
    tiles: &TileSet,
) -> Result<Vec<GroupShare>, TelemetryError> {
    if entries.is_empty() {
        return Err(TelemetryError::EmptyLog);
    }
    let mut counts = [0u64; TileGroup::ALL.len()];
    for e in entries {
        let mut hit = [false; TileGroup::ALL.len()];
        for word in e.prompt.split(' ') {
            if let Some(tile) = affinity.dominant(word) {
                hit[TileGroup::of(tiles.category(tile)) as usize] = true;
            }
        }
        for (c, h) in counts.iter_mut().zip(hit) {
            *c += u64::from(h);
        }
    }
    let total = entries.len() as u64;
    Ok(TileGroup::ALL
        .iter()
        .map(|&group| GroupShare { group, count: counts[group as usize], percentage: percent(counts[group as usize], total) })
        .collect())
}

/// Plain-text tables for a parsed log and, optionally, the run's grids.
pub fn render_report(
    entries: &[PromptLogEntry],
    grids: Option<&[TileGrid]>,
    affinity: &AffinityTable,
    tiles: &TileSet,
) -> Result<String, TelemetryError> {
    use fmt::Write as _;
    let hist = prompt_length_histogram(entries)?;
    let mut out = String::new();
    let _ = writeln!(out, "Prompt lengths ({} prompts)", hist.total());
    let _ = writeln!(out, "{:<10} {:>8} {:>8}", "Length", "Count", "%");
    for (i, label) in LENGTH_BUCKETS.iter().enumerate() {
        let name = if *label == "1" { "1 word".to_string() } else { format!("{label} words") };
        let _ = writeln!(out, "{:<10} {:>8} {:>8.2}", name, hist.counts[i], hist.percentages[i]);
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "Prompts associated with each tile type");
    let _ = writeln!(out, "{:<16} {:>8} {:>8}", "Tile type", "Prompts", "%");
    for s in prompt_tile_association(entries, affinity, tiles)? {
        let _ = writeln!(out, "{:<16} {:>8} {:>8.2}", s.group.label(), s.count, s.percentage);
    }
    if let Some(grids) = grids {
        let _ = writeln!(out);
        let _ = writeln!(out, "Tile occurrences over {} generated grids", grids.len());
        let _ = writeln!(out, "{:<16} {:>8} {:>8}", "Tile type", "Cells", "%");
        for s in tile_frequency(grids, tiles)? {
            let _ = writeln!(out, "{:<16} {:>8} {:>8.2}", s.group.label(), s.count, s.percentage);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tilemap::TileId;

    #[test]
    fn line_format_is_exact() {
        let e = PromptLogEntry::new(120, 3, BackendKind::Remote, "a river in a forest");
        assert_eq!(e.to_line(), "120\t3\tremote\t\"a river in a forest\"\n");
        assert_eq!(PromptLogEntry::parse_line(e.to_line().trim_end_matches('\n')).unwrap(), e);
        assert_eq!(e.word_count, 5);
    }

    #[test]
    fn escapes_round_trip() {
        let e = PromptLogEntry::new(1, 0, BackendKind::LocalRuleBased, r#"say "hi" \o/"#);
        let line = e.to_line();
        assert!(line.contains(r#"\"hi\""#));
        assert_eq!(PromptLogEntry::parse_line(line.trim_end()).unwrap(), e);
    }

    #[test]
    fn malformed_lines() {
        assert!(parse_log_text("", ParseMode::Strict).unwrap().entries.is_empty());
        match parse_log_text("1\t2\n", ParseMode::Strict) {
            Err(TelemetryError::MalformedLine { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
        let text = "1\t0\tlocal\t\"forest\"\nbad line\n2\t16\tlocal\t\"x\"\n3\t1\tlocal\t\"lake\"\n";
        let parsed = parse_log_text(text, ParseMode::Lenient).unwrap();
        assert_eq!(parsed.entries.len(), 2);
        assert_eq!(parsed.skipped.iter().map(|s| s.0).collect::<Vec<_>>(), vec![2, 3]);
    }

    #[test]
    fn length_buckets() {
        let e = |n: usize| PromptLogEntry::new(0, 0, BackendKind::Remote, &vec!["w"; n].join(" "));
        let h = prompt_length_histogram(&[e(1), e(1), e(2)]).unwrap();
        assert_eq!(h.percentages, [66.67, 33.33, 0.0, 0.0, 0.0]);
        let h = prompt_length_histogram(&[e(7)]).unwrap();
        assert_eq!(h.counts, [0, 0, 0, 0, 1]);
        assert!(matches!(prompt_length_histogram(&[]), Err(TelemetryError::EmptyLog)));
    }

    #[test]
    fn all_water_grid_is_all_water() {
        let ts = TileSet::default();
        let g = TileGrid::filled(TileId::new(9).unwrap());
        let f = tile_frequency([&g], &ts).unwrap();
        let water = f.iter().find(|s| s.group == TileGroup::Water).unwrap();
        assert_eq!((water.count, water.percentage), (100, 100.0));
        assert_eq!(f.iter().map(|s| s.count).sum::<u64>(), 100);
        assert!(matches!(tile_frequency([], &ts), Err(TelemetryError::EmptyInput)));
    }

    #[test]
    fn append_then_parse() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("prompts.log");
        let a = PromptLogEntry::new(5, 1, BackendKind::LocalRuleBased, "forest");
        let b = PromptLogEntry::new(9, 2, BackendKind::Remote, "a flooded village");
        append_log(&path, &a).unwrap();
        append_log(&path, &b).unwrap();
        assert_eq!(parse_log(&path, ParseMode::Strict).unwrap().entries, vec![a, b]);
    }
}
