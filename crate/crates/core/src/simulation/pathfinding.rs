//! A* over the 40×40 world with 4-connected moves.
//!
//! Entering a cell costs `1 / speed_multiplier` of that cell. Costs are kept
//! as integer micro-units so that sums are exact and independent of the
//! order in which a search adds them up.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::tilemap::{Cell, TileSet, World, WORLD_SIZE};

/// Fixed-point scale for step costs: a speed 1.0 cell costs exactly this much.
pub const COST_UNIT: u64 = 1_000_000;

/// Cost of stepping onto `cell`, or `None` if it is not walkable.
pub fn step_cost(world: &World, tiles: &TileSet, cell: Cell) -> Option<u64> {
    let def = tiles.get(world.tile(cell));
    def.walkable.then(|| (COST_UNIT as f64 / def.speed_multiplier).round() as u64)
}

pub fn is_walkable(world: &World, tiles: &TileSet, cell: Cell) -> bool {
    tiles.get(world.tile(cell)).walkable
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    /// Cells from start to goal, both inclusive.
    pub cells: Vec<Cell>,
    /// Sum of step costs over every cell after the first, in [`COST_UNIT`]s.
    pub cost: u64,
}

impl Path {
    pub fn goal(&self) -> Cell {
        *self.cells.last().expect("paths are never empty")
    }
}

fn idx(c: Cell) -> usize {
    c.y * WORLD_SIZE + c.x
}

fn search(
    world: &World,
    tiles: &TileSet,
    from: Cell,
    is_goal: impl Fn(Cell) -> bool,
    heuristic: impl Fn(Cell) -> u64,
) -> Option<Path> {
    let mut best = vec![u64::MAX; WORLD_SIZE * WORLD_SIZE];
    let mut parent: Vec<Option<Cell>> = vec![None; WORLD_SIZE * WORLD_SIZE];
    let mut open = BinaryHeap::new();
    best[idx(from)] = 0;
    open.push(Reverse((heuristic(from), 0u64, from.y, from.x)));
    while let Some(Reverse((_, g, y, x))) = open.pop() {
        let cur = Cell::new(x, y);
        if g > best[idx(cur)] {
            continue;
        }
        if is_goal(cur) {
            let mut cells = vec![cur];
            let mut at = cur;
            while let Some(p) = parent[idx(at)] {
                cells.push(p);
                at = p;
            }
            cells.reverse();
            return Some(Path { cells, cost: g });
        }
        for n in cur.neighbors4() {
            let Some(step) = step_cost(world, tiles, n) else { continue };
            let ng = g + step;
            if ng < best[idx(n)] {
                best[idx(n)] = ng;
                parent[idx(n)] = Some(cur);
                open.push(Reverse((ng + heuristic(n), ng, n.y, n.x)));
            }
        }
    }
    None
}

/// Cheapest 4-connected path from `from` to `to`, avoiding unwalkable cells.
/// The start cell itself is never checked, so an entity standing on a
/// freshly blocked cell can still walk off it.
pub fn find_path(world: &World, tiles: &TileSet, from: Cell, to: Cell) -> Option<Path> {
    if from == to {
        return Some(Path { cells: vec![from], cost: 0 });
    }
    if !is_walkable(world, tiles, to) {
        return None;
    }
    // Every walkable speed is at most 1, so each step costs at least one unit.
    search(world, tiles, from, |c| c == to, |c| c.manhattan(to) as u64 * COST_UNIT)
}

/// Cheapest path to whichever of `goals` is closest by path cost.
pub fn find_path_to_any(world: &World, tiles: &TileSet, from: Cell, goals: &[Cell]) -> Option<Path> {
    if goals.is_empty() {
        return None;
    }
    let h = |c: Cell| goals.iter().map(|g| g.manhattan(c)).min().unwrap_or(0) as u64 * COST_UNIT;
    search(world, tiles, from, |c| goals.contains(&c), h)
}
