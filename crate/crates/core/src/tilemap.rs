//! Tile vocabulary, sub-grid coordinates, and placement of generated grids.
//!
//! The world is a 4×4 arrangement of 10×10 sub-grids. World cells are
//! addressed by `(x, y)` with `x` the column and `y` the row, both in
//! `0..40`; sub-grids are numbered row-major, so grid 0 is the top-left
//! corner and grid 15 the bottom-right one.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Side length of a sub-grid in tiles.
pub const SUBGRID_SIZE: usize = 10;
/// Number of sub-grids along each side of the world.
pub const GRIDS_PER_SIDE: usize = 4;
/// Side length of the world in tiles.
pub const WORLD_SIZE: usize = SUBGRID_SIZE * GRIDS_PER_SIDE;
/// Number of sub-grids in the world.
pub const GRID_COUNT: usize = GRIDS_PER_SIDE * GRIDS_PER_SIDE;
/// Number of distinct tile ids.
pub const TILE_COUNT: usize = 16;

const DEFAULT_TILESET: &str = include_str!("../assets/tileset.toml");

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TilemapError {
    #[error("tile id {0} is outside 0..=15")]
    InvalidTileId(i64),
    #[error("cell ({x}, {y}) is outside the 40x40 world")]
    OutOfBounds { x: usize, y: usize },
    #[error("sub-grid index {0} is outside 0..=15")]
    InvalidIndex(usize),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("sub-grid {0} is occupied by a boss")]
    GridOccupiedByBoss(usize),
}

#[derive(Debug, Error)]
pub enum TilesetError {
    #[error("tileset must declare exactly 16 tiles covering ids 0..=15: {0}")]
    MissingTile(String),
    #[error("tile id {0} declared more than once")]
    DuplicateId(u8),
    #[error("tile name {0:?} declared more than once")]
    DuplicateName(String),
    #[error("tile {name:?}: {reason}")]
    SemanticsViolation { name: String, reason: String },
    #[error("tileset document is not valid: {0}")]
    Parse(String),
    #[error("cannot read tileset: {0}")]
    Io(#[from] std::io::Error),
}

/// A tile id in `0..=15`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "u8")]
pub struct TileId(u8);

impl TileId {
    pub const GRASS: TileId = TileId(0);

    pub fn new(value: u8) -> Result<Self, TilemapError> {
        Self::try_from(i64::from(value))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn all() -> impl Iterator<Item = TileId> {
        (0..TILE_COUNT as u8).map(TileId)
    }
}

impl TryFrom<i64> for TileId {
    type Error = TilemapError;

    fn try_from(value: i64) -> Result<Self, Self::Error> {
        if (0..TILE_COUNT as i64).contains(&value) {
            Ok(TileId(value as u8))
        } else {
            Err(TilemapError::InvalidTileId(value))
        }
    }
}

impl From<TileId> for u8 {
    fn from(id: TileId) -> u8 {
        id.0
    }
}

impl fmt::Display for TileId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    Grass,
    Flowers,
    Bushes,
    Path,
    Sand,
    Rock,
    Fence,
    Post,
    Tree,
    Water,
    HouseDoor,
    HouseWindow,
    HouseRoof,
    TreasureBall,
    Decorative,
}

impl Category {
    pub fn is_house(self) -> bool {
        matches!(self, Category::HouseDoor | Category::HouseWindow | Category::HouseRoof)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TileDef {
    pub id: TileId,
    pub name: String,
    pub category: Category,
    pub walkable: bool,
    /// Movement speed factor while standing on the tile, in `(0, 1]`.
    pub speed_multiplier: f64,
    pub choppable: bool,
    pub heals: bool,
    pub spawns_villager: bool,
    pub grants_treasure: bool,
}

impl TileDef {
    fn check(&self) -> Result<(), TilesetError> {
        let violation = |reason: &str| TilesetError::SemanticsViolation {
            name: self.name.clone(),
            reason: reason.to_string(),
        };
        if !(self.speed_multiplier > 0.0 && self.speed_multiplier <= 1.0) {
            return Err(violation("speed_multiplier must lie in (0, 1]"));
        }
        match self.category {
            Category::Rock if self.walkable => return Err(violation("rock tiles cannot be walkable")),
            Category::Water if !self.walkable || self.speed_multiplier >= 1.0 => {
                return Err(violation("water must be walkable with speed_multiplier < 1"))
            }
            _ => {}
        }
        if self.choppable != (self.category == Category::Tree) {
            return Err(violation("exactly the tree tiles are choppable"));
        }
        if self.heals != (self.category == Category::Flowers) {
            return Err(violation("exactly the flower tiles heal"));
        }
        if self.spawns_villager != self.category.is_house() {
            return Err(violation("exactly the house tiles spawn villagers"));
        }
        if self.grants_treasure != (self.category == Category::TreasureBall) {
            return Err(violation("exactly the treasure ball tile grants treasure"));
        }
        Ok(())
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TilesetDocument {
    #[serde(default)]
    tile: Vec<TileDef>,
}

/// The validated 16-tile vocabulary, indexed by [`TileId`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TileSet {
    tiles: Vec<TileDef>,
}

impl TileSet {
    /// Parses and validates a tileset document (TOML, one `[[tile]]` table per tile).
    pub fn from_toml(document: &str) -> Result<Self, TilesetError> {
        let doc: TilesetDocument =
            toml::from_str(document).map_err(|e| TilesetError::Parse(e.to_string()))?;
        Self::from_defs(doc.tile)
    }

    pub fn load(path: &Path) -> Result<Self, TilesetError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn from_defs(defs: Vec<TileDef>) -> Result<Self, TilesetError> {
        let mut slots: Vec<Option<TileDef>> = vec![None; TILE_COUNT];
        let mut names = HashSet::new();
        for def in defs {
            let id = def.id;
            if slots[id.index()].is_some() {
                return Err(TilesetError::DuplicateId(id.value()));
            }
            if !names.insert(def.name.clone()) {
                return Err(TilesetError::DuplicateName(def.name));
            }
            def.check()?;
            slots[id.index()] = Some(def);
        }
        let missing: Vec<String> = slots
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_none())
            .map(|(i, _)| i.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(TilesetError::MissingTile(format!("no tile for ids {}", missing.join(", "))));
        }
        let tiles: Vec<TileDef> = slots.into_iter().flatten().collect();

        let required: [(&str, &[Category]); 11] = [
            ("grass", &[Category::Grass]),
            ("flowers", &[Category::Flowers]),
            ("bushes", &[Category::Bushes]),
            ("path", &[Category::Path]),
            ("sand", &[Category::Sand]),
            ("rock", &[Category::Rock]),
            ("fence/post", &[Category::Fence, Category::Post]),
            ("tree", &[Category::Tree]),
            ("water", &[Category::Water]),
            ("house", &[Category::HouseDoor, Category::HouseWindow, Category::HouseRoof]),
            ("treasure ball", &[Category::TreasureBall]),
        ];
        for (label, cats) in required {
            if !tiles.iter().any(|t| cats.contains(&t.category)) {
                return Err(TilesetError::SemanticsViolation {
                    name: label.to_string(),
                    reason: "tileset has no tile of this category".to_string(),
                });
            }
        }
        Ok(TileSet { tiles })
    }

    pub fn get(&self, id: TileId) -> &TileDef {
        &self.tiles[id.index()]
    }

    pub fn tiles(&self) -> &[TileDef] {
        &self.tiles
    }

    pub fn category(&self, id: TileId) -> Category {
        self.get(id).category
    }

    /// First tile id of the given category, if any.
    pub fn find(&self, category: Category) -> Option<TileId> {
        self.tiles.iter().find(|t| t.category == category).map(|t| t.id)
    }

    pub fn by_name(&self, name: &str) -> Option<TileId> {
        self.tiles.iter().find(|t| t.name == name).map(|t| t.id)
    }

    /// Tile used when a cell is cleared (chopped trees, collected treasure).
    pub fn ground(&self) -> TileId {
        self.find(Category::Grass).unwrap_or(TileId::GRASS)
    }
}

impl Default for TileSet {
    fn default() -> Self {
        TileSet::from_toml(DEFAULT_TILESET).expect("shipped tileset is valid")
    }
}

/// A world cell, `x` = column, `y` = row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Cell { x, y }
    }

    pub fn in_world(self) -> bool {
        self.x < WORLD_SIZE && self.y < WORLD_SIZE
    }

    /// 4-neighbours inside the world, in N, E, S, W order.
    pub fn neighbors4(self) -> impl Iterator<Item = Cell> {
        let Cell { x, y } = self;
        [
            (y > 0).then(|| Cell::new(x, y - 1)),
            (x + 1 < WORLD_SIZE).then(|| Cell::new(x + 1, y)),
            (y + 1 < WORLD_SIZE).then(|| Cell::new(x, y + 1)),
            (x > 0).then(|| Cell::new(x - 1, y)),
        ]
        .into_iter()
        .flatten()
    }

    pub fn neighbors8(self) -> impl Iterator<Item = Cell> {
        let (x, y) = (self.x as isize, self.y as isize);
        (-1isize..=1)
            .flat_map(move |dy| (-1isize..=1).map(move |dx| (x + dx, y + dy)))
            .filter(move |&(nx, ny)| (nx, ny) != (x, y))
            .filter(|&(nx, ny)| {
                nx >= 0 && ny >= 0 && (nx as usize) < WORLD_SIZE && (ny as usize) < WORLD_SIZE
            })
            .map(|(nx, ny)| Cell::new(nx as usize, ny as usize))
    }

    pub fn manhattan(self, other: Cell) -> usize {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }

    pub fn grid_index(self) -> usize {
        (self.y / SUBGRID_SIZE) * GRIDS_PER_SIDE + self.x / SUBGRID_SIZE
    }

    /// Center of the cell in continuous world units.
    pub fn center(self) -> (f64, f64) {
        (self.x as f64 + 0.5, self.y as f64 + 0.5)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Maps a world cell to `(grid_index, local_x, local_y)`.
pub fn world_to_subgrid(x: usize, y: usize) -> Result<(usize, usize, usize), TilemapError> {
    if x >= WORLD_SIZE || y >= WORLD_SIZE {
        return Err(TilemapError::OutOfBounds { x, y });
    }
    Ok((Cell::new(x, y).grid_index(), x % SUBGRID_SIZE, y % SUBGRID_SIZE))
}

/// Inverse of [`world_to_subgrid`].
pub fn subgrid_to_world(
    grid_index: usize,
    local_x: usize,
    local_y: usize,
) -> Result<(usize, usize), TilemapError> {
    if grid_index >= GRID_COUNT {
        return Err(TilemapError::InvalidIndex(grid_index));
    }
    if local_x >= SUBGRID_SIZE || local_y >= SUBGRID_SIZE {
        return Err(TilemapError::OutOfBounds { x: local_x, y: local_y });
    }
    let gx = grid_index % GRIDS_PER_SIDE;
    let gy = grid_index / GRIDS_PER_SIDE;
    Ok((gx * SUBGRID_SIZE + local_x, gy * SUBGRID_SIZE + local_y))
}

/// Cells of one sub-grid in row-major order.
pub fn subgrid_cells(grid_index: usize) -> impl Iterator<Item = Cell> {
    let gx = (grid_index % GRIDS_PER_SIDE) * SUBGRID_SIZE;
    let gy = (grid_index / GRIDS_PER_SIDE) * SUBGRID_SIZE;
    (0..SUBGRID_SIZE)
        .flat_map(move |ly| (0..SUBGRID_SIZE).map(move |lx| Cell::new(gx + lx, gy + ly)))
}

/// A generated 10×10 matrix of tile ids, row 0 at the top.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct TileGrid {
    cells: [[TileId; SUBGRID_SIZE]; SUBGRID_SIZE],
}

impl TileGrid {
    pub fn filled(tile: TileId) -> Self {
        TileGrid { cells: [[tile; SUBGRID_SIZE]; SUBGRID_SIZE] }
    }

    /// Builds a grid from untrusted rows, checking shape and value range.
    pub fn from_rows<T: Copy + Into<i64>>(rows: &[Vec<T>]) -> Result<Self, TilemapError> {
        if rows.len() != SUBGRID_SIZE {
            return Err(TilemapError::InvalidGrid(format!(
                "expected {SUBGRID_SIZE} rows, got {}",
                rows.len()
            )));
        }
        let mut grid = TileGrid::default();
        for (r, row) in rows.iter().enumerate() {
            if row.len() != SUBGRID_SIZE {
                return Err(TilemapError::InvalidGrid(format!(
                    "row {r} has {} columns, expected {SUBGRID_SIZE}",
                    row.len()
                )));
            }
            for (c, &v) in row.iter().enumerate() {
                let v: i64 = v.into();
                grid.cells[r][c] = TileId::try_from(v)
                    .map_err(|_| TilemapError::InvalidGrid(format!("value {v} at row {r}, column {c}")))?;
            }
        }
        Ok(grid)
    }

    pub fn from_array(cells: [[TileId; SUBGRID_SIZE]; SUBGRID_SIZE]) -> Self {
        TileGrid { cells }
    }

    pub fn get(&self, local_x: usize, local_y: usize) -> TileId {
        self.cells[local_y][local_x]
    }

    pub fn set(&mut self, local_x: usize, local_y: usize, tile: TileId) {
        self.cells[local_y][local_x] = tile;
    }

    pub fn rows(&self) -> &[[TileId; SUBGRID_SIZE]; SUBGRID_SIZE] {
        &self.cells
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        self.cells.iter().map(|r| r.iter().map(|t| t.value()).collect()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = TileId> + '_ {
        self.cells.iter().flat_map(|r| r.iter().copied())
    }

    pub fn count(&self, tile: TileId) -> usize {
        self.iter().filter(|&t| t == tile).count()
    }

    /// Per-tile-id histogram.
    pub fn histogram(&self) -> [usize; TILE_COUNT] {
        let mut h = [0; TILE_COUNT];
        for t in self.iter() {
            h[t.index()] += 1;
        }
        h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct SubGrid {
    pub cells: TileGrid,
    pub boss_occupied: bool,
}

/// The 40×40 world: 16 sub-grids in a 4×4 square.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct World {
    grids: [SubGrid; GRID_COUNT],
}

impl World {
    /// An all-grass world with no bosses.
    pub fn new(ground: TileId) -> Self {
        World {
            grids: [SubGrid { cells: TileGrid::filled(ground), boss_occupied: false }; GRID_COUNT],
        }
    }

    pub fn grids(&self) -> &[SubGrid; GRID_COUNT] {
        &self.grids
    }

    pub fn subgrid(&self, index: usize) -> Result<&SubGrid, TilemapError> {
        self.grids.get(index).ok_or(TilemapError::InvalidIndex(index))
    }

    pub fn tile(&self, cell: Cell) -> TileId {
        let g = &self.grids[cell.grid_index()];
        g.cells.get(cell.x % SUBGRID_SIZE, cell.y % SUBGRID_SIZE)
    }

    pub fn tile_at(&self, x: usize, y: usize) -> Result<TileId, TilemapError> {
        let (g, lx, ly) = world_to_subgrid(x, y)?;
        Ok(self.grids[g].cells.get(lx, ly))
    }

    pub fn set_tile(&mut self, cell: Cell, tile: TileId) {
        let g = &mut self.grids[cell.grid_index()];
        g.cells.set(cell.x % SUBGRID_SIZE, cell.y % SUBGRID_SIZE, tile);
    }

    pub fn is_boss_occupied(&self, index: usize) -> bool {
        self.grids.get(index).is_some_and(|g| g.boss_occupied)
    }

    pub fn set_boss_occupied(&mut self, index: usize, occupied: bool) -> Result<(), TilemapError> {
        let g = self.grids.get_mut(index).ok_or(TilemapError::InvalidIndex(index))?;
        g.boss_occupied = occupied;
        Ok(())
    }

    pub fn occupied_count(&self) -> usize {
        self.grids.iter().filter(|g| g.boss_occupied).count()
    }

    /// Replaces the cells of sub-grid `index` wholesale.
    pub fn place_subgrid(&mut self, index: usize, grid: TileGrid) -> Result<(), TilemapError> {
        let target = self.grids.get_mut(index).ok_or(TilemapError::InvalidIndex(index))?;
        if target.boss_occupied {
            return Err(TilemapError::GridOccupiedByBoss(index));
        }
        target.cells = grid;
        Ok(())
    }

    /// All cells in row-major world order.
    pub fn cells() -> impl Iterator<Item = Cell> {
        (0..WORLD_SIZE).flat_map(|y| (0..WORLD_SIZE).map(move |x| Cell::new(x, y)))
    }

    /// Tile ids as 40 rows of 40, row 0 at the top.
    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..WORLD_SIZE)
            .map(|y| (0..WORLD_SIZE).map(|x| self.tile(Cell::new(x, y)).value()).collect())
            .collect()
    }
}
