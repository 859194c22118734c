//! The shipped baseline policy: a reproducible stand-in for a human player.
//!
//! Rules, checked once per decision interval:
//!
//! - terraform "forest" on the starting grid first;
//! - spend a house word whenever one is owned, on the free grid nearest home;
//! - once no tree is left, spend a tree word if one is owned;
//! - idle workers collect the nearest treasure ball, else chop the nearest tree;
//! - once the population reaches [`ARMY_THRESHOLD`], idle fighters and
//!   archers attack the oldest living boss.
//!
//! Some prompts are padded with owned words that carry no terrain meaning,
//! so logs hold a mix of prompt lengths with single words the most common.

use crate::simulation::{Command, GameState, MonsterKind, Task, VillagerKind, STARTING_WORD};
use crate::terraform::AffinityTable;
use crate::tilemap::{Category, Cell, TileId, World, GRIDS_PER_SIDE, GRID_COUNT};

pub const ARMY_THRESHOLD: usize = 6;
/// Ticks between decisions.
pub const DECISION_INTERVAL: u64 = 10;
const HOME_GRID: usize = 0;

#[derive(Debug, Clone)]
pub struct BaselineBot {
    affinity: AffinityTable,
    started: bool,
    terraforms: usize,
}

impl BaselineBot {
    pub fn new(affinity: AffinityTable) -> Self {
        BaselineBot { affinity, started: false, terraforms: 0 }
    }

    fn dominant_category(&self, state: &GameState, word: &str) -> Option<Category> {
        self.affinity.dominant(word).map(|t| state.tileset.category(t))
    }

    /// Words that pad the `n`-th prompt: none most of the time, then 1, 2, 3.
    fn padding_len(n: usize) -> usize {
        match n % 7 {
            2 => 1,
            4 => 2,
            6 => 3,
            _ => 0,
        }
    }

    fn prompt_for(&self, state: &GameState, word: &str) -> Vec<String> {
        let mut words = vec![word.to_string()];
        let want = Self::padding_len(self.terraforms);
        let fillers = state
            .inventory
            .iter()
            .filter(|&(w, _)| w != word && self.affinity.get(w).is_none())
            .map(|(w, _)| w.to_string())
            .take(want);
        words.extend(fillers);
        words
    }

    /// Free grid closest to home, skipping grids that still hold trees when
    /// `keep_trees` is set.
    fn target_grid(state: &GameState, keep_trees: bool) -> Option<usize> {
        let has_trees = |g: usize| {
            crate::tilemap::subgrid_cells(g).any(|c| state.tileset.get(state.world.tile(c)).choppable)
        };
        let dist = |g: usize| (g % GRIDS_PER_SIDE) + (g / GRIDS_PER_SIDE);
        let mut grids: Vec<usize> = (0..GRID_COUNT)
            .filter(|&g| !state.world.is_boss_occupied(g))
            .filter(|&g| !(keep_trees && has_trees(g)))
            .collect();
        grids.sort_by_key(|&g| (dist(g), g));
        grids.first().copied()
    }

    fn owned_word_with(&self, state: &GameState, pred: impl Fn(Category) -> bool) -> Option<String> {
        state
            .inventory
            .iter()
            .find(|&(w, _)| self.dominant_category(state, w).is_some_and(&pred))
            .map(|(w, _)| w.to_string())
    }

    fn cells_where(world: &World, pred: impl Fn(TileId) -> bool) -> Vec<Cell> {
        World::cells().filter(|&c| pred(world.tile(c))).collect()
    }

    /// Commands to issue at the current tick.
    pub fn decide(&mut self, state: &GameState) -> Vec<Command> {
        if state.clock.tick % DECISION_INTERVAL != 0 {
            return Vec::new();
        }
        let mut out = Vec::new();
        let tiles = &state.tileset;

        let terraform = if !self.started && state.inventory.count(STARTING_WORD) > 0 {
            self.started = true;
            Some((HOME_GRID, vec![STARTING_WORD.to_string()]))
        } else if let Some(word) = self.owned_word_with(state, Category::is_house) {
            Self::target_grid(state, true).map(|g| (g, self.prompt_for(state, &word)))
        } else if Self::cells_where(&state.world, |t| tiles.get(t).choppable).is_empty() {
            self.owned_word_with(state, |c| c == Category::Tree)
                .and_then(|word| Self::target_grid(state, false).map(|g| (g, self.prompt_for(state, &word))))
        } else {
            None
        };
        if let Some((grid_index, words)) = terraform {
            self.terraforms += 1;
            out.push(Command::Terraform { grid_index, words });
        }

        let trees = Self::cells_where(&state.world, |t| tiles.get(t).choppable);
        let treasure = Self::cells_where(&state.world, |t| tiles.get(t).grants_treasure);
        let mut claimed: Vec<Cell> = state
            .villagers
            .iter()
            .filter_map(|v| match v.task {
                Task::Chop { cell } | Task::Collect { cell } => Some(cell),
                _ => None,
            })
            .collect();
        let nearest = |from: Cell, options: &[Cell], claimed: &[Cell]| {
            options.iter().filter(|c| !claimed.contains(c)).min_by_key(|c| (c.manhattan(from), c.y, c.x)).copied()
        };

        let oldest_boss =
            state.monsters.iter().filter(|m| m.kind == MonsterKind::Boss).min_by_key(|m| m.id).map(|m| m.id);
        let army_ready = state.villagers.len() >= ARMY_THRESHOLD;

        for v in &state.villagers {
            if v.task != Task::Idle {
                continue;
            }
            let task = match v.kind {
                VillagerKind::Worker => nearest(v.cell(), &treasure, &claimed)
                    .map(|cell| Task::Collect { cell })
                    .or_else(|| nearest(v.cell(), &trees, &claimed).map(|cell| Task::Chop { cell })),
                VillagerKind::Fighter | VillagerKind::Archer => {
                    oldest_boss.filter(|_| army_ready).map(|monster_id| Task::Attack { monster_id })
                }
            };
            if let Some(task) = task {
                if let Task::Chop { cell } | Task::Collect { cell } = task {
                    claimed.push(cell);
                }
                out.push(Command::Task { villager_id: v.id, task });
            }
        }
        out
    }
}

impl Default for BaselineBot {
    fn default() -> Self {
        BaselineBot::new(AffinityTable::shipped())
    }
}
