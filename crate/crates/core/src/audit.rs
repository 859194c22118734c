//! Generator audits: per-prompt tile histograms, output diversity across
//! seeds, and a determinism check.

use serde::{Deserialize, Serialize};

use crate::telemetry::{tile_frequency, GroupShare};
use crate::terraform::{BackendKind, GenerateError, Generator, Prompt};
use crate::tilemap::{TileGrid, TileSet, TILE_COUNT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptAudit {
    pub prompt: String,
    pub seeds: Vec<u64>,
    /// Cell counts per tile id summed over all seeds.
    pub histogram: [u64; TILE_COUNT],
    pub groups: Vec<GroupShare>,
    /// Mean fraction of differing cells over all pairs of seeds; 0 with
    /// fewer than two seeds.
    pub diversity: f64,
    /// Whether a second generation with each seed reproduced the first.
    pub deterministic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub backend: BackendKind,
    pub prompts: Vec<PromptAudit>,
    /// Every grid produced was a valid 10×10 grid of ids 0..=15.
    pub all_valid: bool,
}

/// Fraction of the 100 cells on which two grids differ.
pub fn cell_difference(a: &TileGrid, b: &TileGrid) -> f64 {
    a.iter().zip(b.iter()).filter(|(x, y)| x != y).count() as f64 / 100.0
}

pub fn mean_pairwise_difference(grids: &[TileGrid]) -> f64 {
    let mut total = 0.0;
    let mut pairs = 0u64;
    for i in 0..grids.len() {
        for j in i + 1..grids.len() {
            total += cell_difference(&grids[i], &grids[j]);
            pairs += 1;
        }
    }
    if pairs == 0 {
        0.0
    } else {
        total / pairs as f64
    }
}

pub fn audit(
    generator: &dyn Generator,
    prompts: &[Prompt],
    seeds: &[u64],
    tiles: &TileSet,
) -> Result<AuditReport, GenerateError> {
    let mut report = AuditReport { backend: generator.kind(), prompts: Vec::new(), all_valid: true };
    for prompt in prompts {
        let mut grids = Vec::with_capacity(seeds.len());
        let mut deterministic = true;
        for &seed in seeds {
            let grid = generator.generate(prompt, seed)?;
            deterministic &= generator.generate(prompt, seed)? == grid;
            report.all_valid &= TileGrid::from_rows(&grid.to_rows()).is_ok();
            grids.push(grid);
        }
        let mut histogram = [0u64; TILE_COUNT];
        for g in &grids {
            for t in g.iter() {
                histogram[t.index()] += 1;
            }
        }
        let groups = if grids.is_empty() { Vec::new() } else { tile_frequency(&grids, tiles).expect("non-empty") };
        report.prompts.push(PromptAudit {
            prompt: prompt.rendered().to_string(),
            seeds: seeds.to_vec(),
            histogram,
            groups,
            diversity: mean_pairwise_difference(&grids),
            deterministic,
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terraform::LocalGenerator;

    #[test]
    fn repeated_seed_has_zero_diversity() {
        let p = Prompt::from_words(&["forest"]).unwrap();
        let r = audit(&LocalGenerator::default(), &[p], &[5, 5], &TileSet::default()).unwrap();
        assert_eq!(r.prompts[0].diversity, 0.0);
        assert!(r.prompts[0].deterministic);
        assert!(r.all_valid);
        assert_eq!(r.prompts[0].histogram.iter().sum::<u64>(), 200);
    }

    #[test]
    fn distinct_seeds_differ() {
        let p = Prompt::from_words(&["a", "river", "in", "a", "forest"]).unwrap();
        let r = audit(&LocalGenerator::default(), &[p], &[1, 2, 3], &TileSet::default()).unwrap();
        assert!(r.prompts[0].diversity > 0.0);
    }
}
