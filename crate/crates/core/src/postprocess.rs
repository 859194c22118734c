//! Derived terrain metadata: rock height levels and water connection masks.
//!
//! Both maps span the whole 40×40 world, so neighbours in adjacent sub-grids
//! count exactly like neighbours in the same sub-grid.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::tilemap::{subgrid_cells, Category, Cell, TileSet, World, WORLD_SIZE};

pub const MASK_N: u8 = 1;
pub const MASK_E: u8 = 2;
pub const MASK_S: u8 = 4;
pub const MASK_W: u8 = 8;

/// Rendering scale for a rock of the given height level.
pub fn rock_scale(height: u8) -> f64 {
    1.0 + 0.1 * f64::from(height)
}

fn is_rock(world: &World, tiles: &TileSet, c: Cell) -> bool {
    tiles.category(world.tile(c)) == Category::Rock
}

fn is_water(world: &World, tiles: &TileSet, c: Cell) -> bool {
    tiles.category(world.tile(c)) == Category::Water
}

/// Number of rock neighbours (8-neighbourhood) of every rock cell; 0 elsewhere.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RockHeightMap {
    heights: Vec<Vec<u8>>,
}

impl RockHeightMap {
    pub fn compute(world: &World, tiles: &TileSet) -> Self {
        let mut map = RockHeightMap { heights: vec![vec![0; WORLD_SIZE]; WORLD_SIZE] };
        for c in World::cells() {
            map.refresh(world, tiles, c);
        }
        map
    }

    fn refresh(&mut self, world: &World, tiles: &TileSet, c: Cell) {
        self.heights[c.y][c.x] = if is_rock(world, tiles, c) {
            c.neighbors8().filter(|&n| is_rock(world, tiles, n)).count() as u8
        } else {
            0
        };
    }

    pub fn get(&self, c: Cell) -> u8 {
        self.heights[c.y][c.x]
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.heights
    }

    pub fn from_rows(rows: Vec<Vec<u8>>) -> Option<Self> {
        (rows.len() == WORLD_SIZE && rows.iter().all(|r| r.len() == WORLD_SIZE && r.iter().all(|&h| h <= 8)))
            .then_some(RockHeightMap { heights: rows })
    }
}

/// 4-bit connection mask per water cell (N=1, E=2, S=4, W=8); 0 elsewhere.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaterMaskMap {
    masks: Vec<Vec<u8>>,
}

impl WaterMaskMap {
    pub fn compute(world: &World, tiles: &TileSet) -> Self {
        let mut map = WaterMaskMap { masks: vec![vec![0; WORLD_SIZE]; WORLD_SIZE] };
        for c in World::cells() {
            map.refresh(world, tiles, c);
        }
        map
    }

    fn refresh(&mut self, world: &World, tiles: &TileSet, c: Cell) {
        let mut mask = 0;
        if is_water(world, tiles, c) {
            let water = |x: usize, y: usize| is_water(world, tiles, Cell::new(x, y));
            if c.y > 0 && water(c.x, c.y - 1) {
                mask |= MASK_N;
            }
            if c.x + 1 < WORLD_SIZE && water(c.x + 1, c.y) {
                mask |= MASK_E;
            }
            if c.y + 1 < WORLD_SIZE && water(c.x, c.y + 1) {
                mask |= MASK_S;
            }
            if c.x > 0 && water(c.x - 1, c.y) {
                mask |= MASK_W;
            }
        }
        self.masks[c.y][c.x] = mask;
    }

    pub fn get(&self, c: Cell) -> u8 {
        self.masks[c.y][c.x]
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.masks
    }

    pub fn from_rows(rows: Vec<Vec<u8>>) -> Option<Self> {
        (rows.len() == WORLD_SIZE && rows.iter().all(|r| r.len() == WORLD_SIZE && r.iter().all(|&m| m < 16)))
            .then_some(WaterMaskMap { masks: rows })
    }
}

pub fn rock_heights(world: &World, tiles: &TileSet) -> RockHeightMap {
    RockHeightMap::compute(world, tiles)
}

pub fn water_masks(world: &World, tiles: &TileSet) -> WaterMaskMap {
    WaterMaskMap::compute(world, tiles)
}

/// Cells of sub-grid `grid_index` plus a one-cell border around it.
pub fn affected_region(grid_index: usize) -> impl Iterator<Item = Cell> {
    let cells: Vec<Cell> = subgrid_cells(grid_index).collect();
    let (min, max) = (cells[0], cells[cells.len() - 1]);
    let x0 = min.x.saturating_sub(1);
    let y0 = min.y.saturating_sub(1);
    let x1 = (max.x + 1).min(WORLD_SIZE - 1);
    let y1 = (max.y + 1).min(WORLD_SIZE - 1);
    (y0..=y1).flat_map(move |y| (x0..=x1).map(move |x| Cell::new(x, y)))
}

/// Recomputes both maps only around a freshly placed sub-grid.
pub fn update_after_placement(
    rocks: &mut RockHeightMap,
    water: &mut WaterMaskMap,
    world: &World,
    tiles: &TileSet,
    grid_index: usize,
) {
    for c in affected_region(grid_index) {
        rocks.refresh(world, tiles, c);
        water.refresh(world, tiles, c);
    }
}

/// Recomputes both maps around a single changed cell.
pub fn update_cell(rocks: &mut RockHeightMap, water: &mut WaterMaskMap, world: &World, tiles: &TileSet, cell: Cell) {
    rocks.refresh(world, tiles, cell);
    water.refresh(world, tiles, cell);
    for n in cell.neighbors8() {
        rocks.refresh(world, tiles, n);
        water.refresh(world, tiles, n);
    }
}

/// 4-connected water components, each sorted row-major, ordered by first cell.
pub fn water_components(world: &World, tiles: &TileSet) -> Vec<Vec<Cell>> {
    let mut seen = vec![vec![false; WORLD_SIZE]; WORLD_SIZE];
    let mut components = Vec::new();
    for start in World::cells() {
        if seen[start.y][start.x] || !is_water(world, tiles, start) {
            continue;
        }
        let mut component = Vec::new();
        let mut queue = VecDeque::from([start]);
        seen[start.y][start.x] = true;
        while let Some(c) = queue.pop_front() {
            component.push(c);
            for n in c.neighbors4() {
                if !seen[n.y][n.x] && is_water(world, tiles, n) {
                    seen[n.y][n.x] = true;
                    queue.push_back(n);
                }
            }
        }
        component.sort_by_key(|c| (c.y, c.x));
        components.push(component);
    }
    components
}
