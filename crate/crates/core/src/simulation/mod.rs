//! The deterministic game loop.
//!
//! One call to [`GameState::step`] advances whole ticks. Each tick runs, in
//! order:
//!
//! 1. villagers, by id: task logic and movement;
//! 2. monsters, by id: target selection and movement;
//! 3. combat damage (simultaneous) followed by flower healing;
//! 4. removal of the dead, kill credit and boss-grid release;
//! 5. minion spawning in boss grids that hold villagers;
//! 6. boss spawning on every boss-interval boundary;
//! 7. day rollover on every day boundary (house spawns);
//! 8. the end-condition check.

pub mod config;
pub mod entities;
pub mod pathfinding;
pub mod script;

use std::collections::VecDeque;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::postprocess::{self, RockHeightMap, WaterMaskMap};
use crate::rng::RngStreams;
use crate::terraform::{self, Generators, TerraformError, TerraformReceipt};
use crate::tilemap::{subgrid_cells, Cell, TileGrid, TileSet, World, GRID_COUNT, WORLD_SIZE};
use crate::wordbank::{WordFrequencyTable, WordInventory, WordPool, WordbankError};

pub use config::{minion_scaling, ConfigError, GameConfig};
pub use entities::{Monster, MonsterKind, Point, Route, Task, Villager, VillagerKind};
pub use pathfinding::{find_path, find_path_to_any, Path};
pub use script::{Command, Script, ScriptError, TimedCommand};

use pathfinding::is_walkable;

/// The first boss is pinned to the sub-grid furthest from the villagers.
pub const FIRST_BOSS_GRID: usize = GRID_COUNT - 1;
pub const STARTING_WORD: &str = "forest";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Ongoing,
    Win,
    Lose,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("no living villager with id {0}")]
    UnknownVillager(u32),
    #[error("no living monster with id {0}")]
    UnknownMonster(u32),
    #[error("a {kind} cannot take a {task} task")]
    IllegalTask { kind: VillagerKind, task: &'static str },
    #[error("cell {0} is outside the world")]
    OutOfBounds(Cell),
    #[error("cell {0} holds nothing to chop")]
    NotChoppable(Cell),
    #[error("cell {0} holds nothing to collect")]
    NothingToCollect(Cell),
    #[error("villager {villager} is not in reach of {cell}")]
    NotInReach { villager: u32, cell: Cell },
    #[error("the game is over")]
    GameOver,
}

impl SimError {
    pub fn code(&self) -> &'static str {
        match self {
            SimError::UnknownVillager(_) => "unknown_villager",
            SimError::UnknownMonster(_) => "unknown_monster",
            SimError::IllegalTask { .. } => "illegal_task",
            SimError::OutOfBounds(_) => "out_of_bounds",
            SimError::NotChoppable(_) => "not_choppable",
            SimError::NothingToCollect(_) => "nothing_to_collect",
            SimError::NotInReach { .. } => "not_in_reach",
            SimError::GameOver => "game_over",
        }
    }
}

#[derive(Debug, Error)]
pub enum SetupError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Words(#[from] WordbankError),
}

/// Static inputs shared by every game: tile semantics and the initial pool.
#[derive(Debug, Clone)]
pub struct GameAssets {
    pub tileset: Arc<TileSet>,
    pub pool: WordPool,
}

impl GameAssets {
    pub fn new(tileset: TileSet, words: &WordFrequencyTable) -> Result<Self, WordbankError> {
        Ok(GameAssets { tileset: Arc::new(tileset), pool: WordPool::build(words)? })
    }
}

impl Default for GameAssets {
    fn default() -> Self {
        GameAssets::new(TileSet::default(), &WordFrequencyTable::shipped()).expect("shipped word table is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameClock {
    pub tick: u64,
    pub tick_seconds: f64,
}

impl GameClock {
    pub fn elapsed_s(&self) -> f64 {
        self.tick as f64 * self.tick_seconds
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub words_gained: u64,
    pub words_spent: u64,
    pub trees_chopped: u64,
    pub treasures_collected: u64,
    pub house_spawns: u64,
    pub villager_deaths: u64,
    pub bosses_spawned: u64,
    pub bosses_killed: u64,
    pub minions_spawned: u64,
    pub minions_killed: u64,
}

#[derive(Debug, Clone)]
pub struct GameState {
    pub config: GameConfig,
    pub tileset: Arc<TileSet>,
    pub seed: u64,
    pub clock: GameClock,
    pub world: World,
    pub rock_heights: RockHeightMap,
    pub water_masks: WaterMaskMap,
    pub villagers: Vec<Villager>,
    pub monsters: Vec<Monster>,
    pub inventory: WordInventory,
    pub pool: WordPool,
    /// House cells waiting for the next day rollover, in placement order.
    pub pending_houses: Vec<Cell>,
    pub rng: RngStreams,
    pub outcome: Outcome,
    pub receipts: Vec<TerraformReceipt>,
    pub stats: Stats,
    pub next_id: u32,
}

/// What a successfully applied command did.
#[derive(Debug, Clone, PartialEq)]
pub enum Applied {
    Terraformed(TerraformReceipt),
    TaskAssigned,
    Synced,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CommandError {
    #[error(transparent)]
    Terraform(#[from] TerraformError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

impl CommandError {
    pub fn code(&self) -> &'static str {
        match self {
            CommandError::Terraform(e) => e.code(),
            CommandError::Sim(e) => e.code(),
        }
    }
}

/// Closest walkable cell to `from` by breadth-first rings over the whole
/// world, ignoring walkability while expanding.
pub fn nearest_walkable(world: &World, tiles: &TileSet, from: Cell) -> Option<Cell> {
    let mut seen = vec![false; WORLD_SIZE * WORLD_SIZE];
    let mut queue = VecDeque::from([from]);
    seen[from.y * WORLD_SIZE + from.x] = true;
    while let Some(c) = queue.pop_front() {
        if is_walkable(world, tiles, c) {
            return Some(c);
        }
        for n in c.neighbors4() {
            if !std::mem::replace(&mut seen[n.y * WORLD_SIZE + n.x], true) {
                queue.push_back(n);
            }
        }
    }
    None
}

fn chebyshev(a: Cell, b: Cell) -> usize {
    a.x.abs_diff(b.x).max(a.y.abs_diff(b.y))
}

/// Waypoints for following `path` from `pos`. When `pos` is off-centre the
/// current cell's centre comes first, so every leg is axis-aligned.
fn waypoints(pos: Point, path: &Path) -> VecDeque<Cell> {
    let mut out: VecDeque<Cell> = path.cells.iter().skip(1).copied().collect();
    if pos != Point::center_of(path.cells[0]) {
        out.push_front(path.cells[0]);
    }
    out
}

/// Moves `pos` along `route` for `dt` seconds at `base_speed` tiles/s scaled
/// by the speed multiplier of whichever cell is being crossed.
fn advance(pos: &mut Point, route: &mut Route, base_speed: f64, dt: f64, world: &World, tiles: &TileSet) {
    let mut remaining = dt;
    while remaining > 1e-12 {
        let Some(&next) = route.waypoints.front() else { break };
        if next != pos.cell() && !is_walkable(world, tiles, next) {
            route.clear();
            break;
        }
        let target = Point::center_of(next);
        let (dx, dy) = (target.x - pos.x, target.y - pos.y);
        let dist = dx.hypot(dy);
        if dist < 1e-9 {
            *pos = target;
            route.waypoints.pop_front();
            continue;
        }
        let (ux, uy) = (dx / dist, dy / dist);
        let here = Point { x: pos.x + ux * 1e-7, y: pos.y + uy * 1e-7 }.cell();
        let speed = base_speed * tiles.get(world.tile(here)).speed_multiplier;
        let to_edge = |p: f64, u: f64, lo: usize| {
            if u > 0.0 {
                (lo as f64 + 1.0 - p) / u
            } else if u < 0.0 {
                (lo as f64 - p) / u
            } else {
                f64::INFINITY
            }
        };
        let segment = dist.min(to_edge(pos.x, ux, here.x)).min(to_edge(pos.y, uy, here.y)).max(1e-9);
        let needed = segment / speed;
        if needed <= remaining {
            if segment >= dist {
                *pos = target;
                route.waypoints.pop_front();
            } else {
                pos.x += ux * segment;
                pos.y += uy * segment;
            }
            remaining -= needed;
        } else {
            pos.x += ux * speed * remaining;
            pos.y += uy * speed * remaining;
            remaining = 0.0;
        }
    }
}

impl GameState {
    /// A fresh game with the shipped tileset and word table.
    pub fn new_game(config: GameConfig, seed: u64) -> Result<Self, SetupError> {
        Self::new_game_with(config, seed, &GameAssets::default())
    }

    pub fn new_game_with(config: GameConfig, seed: u64, assets: &GameAssets) -> Result<Self, SetupError> {
        config.validate()?;
        let tiles = assets.tileset.clone();
        let world = World::new(tiles.ground());
        let mut inventory = WordInventory::new();
        inventory.grant(STARTING_WORD, assets.pool.vocabulary())?;
        let mut state = GameState {
            rock_heights: postprocess::rock_heights(&world, &tiles),
            water_masks: postprocess::water_masks(&world, &tiles),
            clock: GameClock { tick: 0, tick_seconds: config.tick_seconds },
            config,
            tileset: tiles,
            seed,
            world,
            villagers: Vec::new(),
            monsters: Vec::new(),
            inventory,
            pool: assets.pool.clone(),
            pending_houses: Vec::new(),
            rng: RngStreams::new(seed),
            outcome: Outcome::Ongoing,
            receipts: Vec::new(),
            stats: Stats { words_gained: 1, ..Stats::default() },
            next_id: 1,
        };
        for (i, kind) in VillagerKind::ALL.into_iter().enumerate() {
            state.add_villager(kind, Cell::new(3 + 2 * i, 3));
        }
        state.add_boss(FIRST_BOSS_GRID);
        Ok(state)
    }

    fn alloc_id(&mut self) -> u32 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    fn add_villager(&mut self, kind: VillagerKind, cell: Cell) -> u32 {
        let id = self.alloc_id();
        self.villagers.push(Villager::new(id, kind, cell, self.config.villager_hp));
        id
    }

    fn add_boss(&mut self, grid_index: usize) -> u32 {
        let anchor = subgrid_cells(grid_index).nth(55).expect("sub-grids have 100 cells");
        let home = nearest_walkable(&self.world, &self.tileset, anchor)
            .filter(|c| c.grid_index() == grid_index)
            .unwrap_or(anchor);
        let id = self.alloc_id();
        self.monsters.push(Monster::new(id, MonsterKind::Boss, self.config.boss_hp, grid_index, home));
        self.world.set_boss_occupied(grid_index, true).expect("grid index is valid");
        self.stats.bosses_spawned += 1;
        id
    }

    pub fn elapsed_s(&self) -> f64 {
        self.clock.elapsed_s()
    }

    pub fn day_index(&self) -> u64 {
        self.clock.tick / self.config.day_ticks()
    }

    /// Ticks until the next boss spawn.
    pub fn boss_ticks_remaining(&self) -> u64 {
        let interval = self.config.boss_interval_ticks();
        interval - self.clock.tick % interval
    }

    pub fn villager(&self, id: u32) -> Option<&Villager> {
        self.villagers.iter().find(|v| v.id == id)
    }

    pub fn monster(&self, id: u32) -> Option<&Monster> {
        self.monsters.iter().find(|m| m.id == id)
    }

    pub fn bosses(&self) -> impl Iterator<Item = &Monster> {
        self.monsters.iter().filter(|m| m.kind == MonsterKind::Boss)
    }

    pub fn pending_house_spawns(&self) -> usize {
        self.pending_houses.len()
    }

    /// True when every villager stands on a walkable cell.
    pub fn villagers_on_walkable(&self) -> bool {
        self.villagers.iter().all(|v| is_walkable(&self.world, &self.tileset, v.cell()))
    }

    pub fn assign_task(&mut self, villager_id: u32, task: Task) -> Result<(), SimError> {
        if self.outcome != Outcome::Ongoing {
            return Err(SimError::GameOver);
        }
        let kind = self.villager(villager_id).ok_or(SimError::UnknownVillager(villager_id))?.kind;
        if !task.allowed_for(kind) {
            return Err(SimError::IllegalTask { kind, task: task.verb() });
        }
        match task {
            Task::MoveTo { target: c } | Task::Chop { cell: c } | Task::Collect { cell: c } if !c.in_world() => {
                return Err(SimError::OutOfBounds(c));
            }
            Task::Chop { cell } if !self.tileset.get(self.world.tile(cell)).choppable => {
                return Err(SimError::NotChoppable(cell));
            }
            Task::Collect { cell } if !self.tileset.get(self.world.tile(cell)).grants_treasure => {
                return Err(SimError::NothingToCollect(cell));
            }
            Task::Attack { monster_id } if self.monster(monster_id).is_none() => {
                return Err(SimError::UnknownMonster(monster_id));
            }
            _ => {}
        }
        let v = self.villagers.iter_mut().find(|v| v.id == villager_id).expect("looked up above");
        v.task = task;
        v.route.clear();
        v.chop_ticks = 0;
        Ok(())
    }

    /// Fells the tree at `cell`: it becomes ground, one gacha word is drawn
    /// and granted, and the villager earns task xp.
    pub fn chop_resolution(&mut self, villager_id: u32, cell: Cell) -> Result<String, SimError> {
        if !cell.in_world() {
            return Err(SimError::OutOfBounds(cell));
        }
        let here = self.villager(villager_id).ok_or(SimError::UnknownVillager(villager_id))?.cell();
        if !self.tileset.get(self.world.tile(cell)).choppable {
            return Err(SimError::NotChoppable(cell));
        }
        if chebyshev(here, cell) > 1 {
            return Err(SimError::NotInReach { villager: villager_id, cell });
        }
        self.set_cell(cell, self.tileset.ground());
        let drawn = self.pool.draw_word(&mut self.rng.gacha);
        self.inventory.grant(&drawn.word, self.pool.vocabulary()).expect("pool words are in the vocabulary");
        self.stats.trees_chopped += 1;
        self.stats.words_gained += 1;
        let (xp, step) = (self.config.xp_per_task, self.config.level_xp_step);
        if let Some(v) = self.villagers.iter_mut().find(|v| v.id == villager_id) {
            v.gain_xp(xp, step);
        }
        Ok(drawn.word)
    }

    /// Picks up the treasure ball at `cell` for five random words.
    pub fn collect_treasure(&mut self, villager_id: u32, cell: Cell) -> Result<Vec<String>, SimError> {
        if !cell.in_world() {
            return Err(SimError::OutOfBounds(cell));
        }
        let here = self.villager(villager_id).ok_or(SimError::UnknownVillager(villager_id))?.cell();
        if !self.tileset.get(self.world.tile(cell)).grants_treasure {
            return Err(SimError::NothingToCollect(cell));
        }
        if here != cell {
            return Err(SimError::NotInReach { villager: villager_id, cell });
        }
        self.set_cell(cell, self.tileset.ground());
        let words = self.pool.draw_treasure(&mut self.rng.gacha);
        for w in &words {
            self.inventory.grant(w, self.pool.vocabulary()).expect("pool words are in the vocabulary");
        }
        self.stats.treasures_collected += 1;
        self.stats.words_gained += words.len() as u64;
        Ok(words)
    }

    fn set_cell(&mut self, cell: Cell, tile: crate::tilemap::TileId) {
        self.world.set_tile(cell, tile);
        postprocess::update_cell(&mut self.rock_heights, &mut self.water_masks, &self.world, &self.tileset, cell);
    }

    /// Writes a generated grid into the world and repairs everything that
    /// depends on terrain: derived maps, entities standing on now-blocked
    /// cells, planned routes, and the pending house list.
    pub fn apply_placement(&mut self, grid_index: usize, grid: TileGrid) {
        self.world.place_subgrid(grid_index, grid).expect("caller checked index and boss occupation");
        postprocess::update_after_placement(
            &mut self.rock_heights,
            &mut self.water_masks,
            &self.world,
            &self.tileset,
            grid_index,
        );
        for cell in subgrid_cells(grid_index) {
            if self.tileset.get(self.world.tile(cell)).spawns_villager {
                self.pending_houses.push(cell);
            }
        }
        let (world, tiles) = (&self.world, &self.tileset);
        let relocate = |pos: &mut Point| {
            if !is_walkable(world, tiles, pos.cell()) {
                if let Some(c) = nearest_walkable(world, tiles, pos.cell()) {
                    *pos = Point::center_of(c);
                }
            }
        };
        for v in &mut self.villagers {
            relocate(&mut v.position);
            v.route.clear();
        }
        for m in &mut self.monsters {
            relocate(&mut m.position);
            m.route.clear();
        }
    }

    /// Applies one script command at the current tick.
    pub fn apply_command(&mut self, command: &Command, generators: &Generators) -> Result<Applied, CommandError> {
        match command {
            Command::Terraform { grid_index, words } => {
                Ok(Applied::Terraformed(terraform::terraform(self, *grid_index, words, generators)?))
            }
            Command::Task { villager_id, task } => {
                self.assign_task(*villager_id, *task)?;
                Ok(Applied::TaskAssigned)
            }
            Command::Sync => Ok(Applied::Synced),
        }
    }

    /// Advances `n` ticks; stops early once the game is decided.
    pub fn step(&mut self, n: u64) {
        for _ in 0..n {
            if self.outcome != Outcome::Ongoing {
                break;
            }
            self.tick_once();
        }
    }

    fn tick_once(&mut self) {
        self.clock.tick += 1;
        let dt = self.config.tick_seconds;
        for i in 0..self.villagers.len() {
            self.update_villager(i, dt);
        }
        for i in 0..self.monsters.len() {
            self.update_monster(i, dt);
        }
        self.resolve_combat(dt);
        self.remove_dead();
        self.spawn_minions();
        if self.clock.tick % self.config.boss_interval_ticks() == 0 {
            self.spawn_boss();
        }
        if self.clock.tick % self.config.day_ticks() == 0 {
            self.day_rollover();
        }
        self.outcome = self.check_end();
        debug_assert!(self.villagers_on_walkable(), "villager on a blocked cell at tick {}", self.clock.tick);
    }

    fn plan_route(&self, from: Point, goals: &[Cell]) -> Option<VecDeque<Cell>> {
        find_path_to_any(&self.world, &self.tileset, from.cell(), goals).map(|p| waypoints(from, &p))
    }

    fn walkable_near(&self, cell: Cell, include_self: bool) -> Vec<Cell> {
        let mut out = Vec::with_capacity(9);
        if include_self && is_walkable(&self.world, &self.tileset, cell) {
            out.push(cell);
        }
        out.extend(cell.neighbors8().filter(|&n| is_walkable(&self.world, &self.tileset, n)));
        out
    }

    fn attack_range(&self, kind: VillagerKind) -> f64 {
        match kind {
            VillagerKind::Fighter => self.config.fighter_range,
            VillagerKind::Archer => self.config.archer_range,
            VillagerKind::Worker => 0.0,
        }
    }

    fn attack_dps(&self, v: &Villager) -> f64 {
        let base = match v.kind {
            VillagerKind::Fighter => self.config.fighter_dps,
            VillagerKind::Archer => self.config.archer_dps,
            VillagerKind::Worker => 0.0,
        };
        base * (1.0 + self.config.level_dps_bonus * f64::from(v.level - 1))
    }

    /// Re-plans toward `key` (reaching any of `goals`) unless the current
    /// route already leads there. Returns false when no route exists.
    fn ensure_villager_route(&mut self, i: usize, key: Cell, goals: &[Cell]) -> bool {
        if self.villagers[i].route.goal == Some(key) {
            return true;
        }
        let planned = self.plan_route(self.villagers[i].position, goals);
        let v = &mut self.villagers[i];
        v.route.goal = Some(key);
        match planned {
            Some(w) => {
                v.route.waypoints = w;
                true
            }
            None => {
                v.route.waypoints.clear();
                false
            }
        }
    }

    fn update_villager(&mut self, i: usize, dt: f64) {
        let (id, kind, task) = {
            let v = &self.villagers[i];
            (v.id, v.kind, v.task)
        };
        let here = self.villagers[i].cell();
        let idle = |s: &mut Self| {
            let v = &mut s.villagers[i];
            v.task = Task::Idle;
            v.route.clear();
            v.chop_ticks = 0;
        };
        match task {
            Task::Idle => {
                if kind.can_fight() {
                    let pos = self.villagers[i].position;
                    let range = self.attack_range(kind);
                    let nearest = self
                        .monsters
                        .iter()
                        .map(|m| (m.position.distance(pos), m.id))
                        .filter(|&(d, _)| d <= range)
                        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                    if let Some((_, monster_id)) = nearest {
                        self.villagers[i].task = Task::Attack { monster_id };
                    }
                }
                return;
            }
            Task::MoveTo { target } => {
                let arrived = self.villagers[i].position == Point::center_of(target);
                let planned_before = self.villagers[i].route.goal == Some(target);
                if arrived || (planned_before && self.villagers[i].route.is_idle()) {
                    idle(self);
                    return;
                }
                if !self.ensure_villager_route(i, target, &[target]) {
                    idle(self);
                    return;
                }
            }
            Task::Chop { cell } => {
                if !self.tileset.get(self.world.tile(cell)).choppable {
                    idle(self);
                    return;
                }
                if self.villagers[i].route.is_idle() && chebyshev(here, cell) <= 1 {
                    let needed = self.config.ticks(self.config.chop_seconds(self.villagers[i].level)).max(1);
                    self.villagers[i].chop_ticks += 1;
                    if self.villagers[i].chop_ticks >= needed {
                        self.chop_resolution(id, cell).expect("reach and tile checked above");
                        idle(self);
                    }
                    return;
                }
                let planned_before = self.villagers[i].route.goal == Some(cell);
                if planned_before && self.villagers[i].route.is_idle() {
                    idle(self);
                    return;
                }
                let goals = self.walkable_near(cell, false);
                if !self.ensure_villager_route(i, cell, &goals) {
                    idle(self);
                    return;
                }
            }
            Task::Collect { cell } => {
                if !self.tileset.get(self.world.tile(cell)).grants_treasure {
                    idle(self);
                    return;
                }
                if self.villagers[i].route.is_idle() && here == cell {
                    self.collect_treasure(id, cell).expect("position and tile checked above");
                    idle(self);
                    return;
                }
                let planned_before = self.villagers[i].route.goal == Some(cell);
                if (planned_before && self.villagers[i].route.is_idle()) || !self.ensure_villager_route(i, cell, &[cell]) {
                    idle(self);
                    return;
                }
            }
            Task::Attack { monster_id } => {
                let Some(m) = self.monster(monster_id) else {
                    idle(self);
                    return;
                };
                let (mpos, mcell) = (m.position, m.cell());
                if self.villagers[i].position.distance(mpos) <= self.attack_range(kind) {
                    self.villagers[i].route.clear();
                    return;
                }
                let goals = self.walkable_near(mcell, true);
                // An unreachable monster keeps the task; the plan is retried
                // once the monster changes cell.
                self.ensure_villager_route(i, mcell, &goals);
            }
        }
        let speed = self.config.move_speed;
        let v = &mut self.villagers[i];
        advance(&mut v.position, &mut v.route, speed, dt, &self.world, &self.tileset);
    }

    fn update_monster(&mut self, i: usize, dt: f64) {
        let (pos, grid) = (self.monsters[i].position, self.monsters[i].grid_index);
        let target = self
            .villagers
            .iter()
            .filter(|v| v.cell().grid_index() == grid)
            .map(|v| (v.position.distance(pos), v.id, v.cell()))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        self.monsters[i].target = target.map(|t| t.1);
        let (key, goals) = match target {
            Some((d, _, _)) if d <= self.config.monster_range => {
                self.monsters[i].route.clear();
                return;
            }
            Some((_, _, vcell)) => (vcell, self.walkable_near(vcell, true)),
            None => {
                let home = self.monsters[i].home;
                if self.monsters[i].position == Point::center_of(home) {
                    return;
                }
                (home, vec![home])
            }
        };
        if self.monsters[i].route.goal != Some(key) {
            let planned = self.plan_route(pos, &goals);
            let m = &mut self.monsters[i];
            m.route.goal = Some(key);
            m.route.waypoints = planned.unwrap_or_default();
        }
        let speed = self.config.monster_speed;
        let m = &mut self.monsters[i];
        advance(&mut m.position, &mut m.route, speed, dt, &self.world, &self.tileset);
    }

    fn resolve_combat(&mut self, dt: f64) {
        let mut to_monsters = vec![0.0; self.monsters.len()];
        for v in &self.villagers {
            let Task::Attack { monster_id } = v.task else { continue };
            if let Some(mi) = self.monsters.iter().position(|m| m.id == monster_id) {
                if v.position.distance(self.monsters[mi].position) <= self.attack_range(v.kind) {
                    to_monsters[mi] += self.attack_dps(v) * dt;
                }
            }
        }
        let mut to_villagers = vec![0.0; self.villagers.len()];
        for m in &self.monsters {
            let Some(target) = m.target else { continue };
            if let Some(vi) = self.villagers.iter().position(|v| v.id == target) {
                if m.position.distance(self.villagers[vi].position) <= self.config.monster_range {
                    let dps = match m.kind {
                        MonsterKind::Boss => self.config.boss_dps,
                        MonsterKind::Minion => self.config.minion_dps,
                    };
                    to_villagers[vi] += dps * dt;
                }
            }
        }
        for (m, dmg) in self.monsters.iter_mut().zip(to_monsters) {
            m.hp = (m.hp - dmg).max(0.0);
        }
        let heal = self.config.flower_heal_hps * dt;
        for (v, dmg) in self.villagers.iter_mut().zip(to_villagers) {
            v.hp = (v.hp - dmg).max(0.0);
            if v.hp > 0.0 && v.hp < v.max_hp && self.tileset.get(self.world.tile(v.cell())).heals {
                v.hp = (v.hp + heal).min(v.max_hp);
            }
        }
    }

    fn remove_dead(&mut self) {
        let dead: Vec<Monster> = self.monsters.iter().filter(|m| m.hp <= 0.0).cloned().collect();
        let (xp, step) = (self.config.xp_per_task, self.config.level_xp_step);
        for m in &dead {
            match m.kind {
                MonsterKind::Boss => {
                    self.world.set_boss_occupied(m.grid_index, false).expect("grid index is valid");
                    self.stats.bosses_killed += 1;
                }
                MonsterKind::Minion => self.stats.minions_killed += 1,
            }
            for v in &mut self.villagers {
                if v.task == (Task::Attack { monster_id: m.id }) {
                    v.gain_xp(xp, step);
                    v.task = Task::Idle;
                    v.route.clear();
                }
            }
        }
        self.monsters.retain(|m| m.hp > 0.0);
        let before = self.villagers.len();
        self.villagers.retain(|v| v.hp > 0.0);
        self.stats.villager_deaths += (before - self.villagers.len()) as u64;
    }

    fn spawn_minions(&mut self) {
        let interval = self.config.ticks(self.config.minion_interval_s(self.elapsed_s())).max(1);
        let boss_indices: Vec<usize> =
            (0..self.monsters.len()).filter(|&i| self.monsters[i].kind == MonsterKind::Boss).collect();
        for bi in boss_indices {
            let grid = self.monsters[bi].grid_index;
            let visited = self.villagers.iter().any(|v| v.cell().grid_index() == grid);
            let boss = &mut self.monsters[bi];
            if !visited {
                boss.minion_timer = None;
                continue;
            }
            let due = match boss.minion_timer {
                None => {
                    boss.minion_timer = Some(interval);
                    false
                }
                Some(t) if t <= 1 => {
                    boss.minion_timer = Some(interval);
                    true
                }
                Some(t) => {
                    boss.minion_timer = Some(t - 1);
                    false
                }
            };
            if !due {
                continue;
            }
            let minions =
                self.monsters.iter().filter(|m| m.kind == MonsterKind::Minion && m.grid_index == grid).count();
            if minions >= self.config.max_minions_per_grid {
                continue;
            }
            let open: Vec<Cell> = subgrid_cells(grid).filter(|&c| is_walkable(&self.world, &self.tileset, c)).collect();
            if open.is_empty() {
                continue;
            }
            let cell = open[self.rng.combat.random_range(0..open.len())];
            let id = self.alloc_id();
            self.monsters.push(Monster::new(id, MonsterKind::Minion, self.config.minion_hp, grid, cell));
            self.stats.minions_spawned += 1;
        }
    }

    fn spawn_boss(&mut self) {
        let free: Vec<usize> = (0..GRID_COUNT).filter(|&g| !self.world.is_boss_occupied(g)).collect();
        if free.is_empty() {
            return;
        }
        let grid = free[self.rng.spawn.random_range(0..free.len())];
        self.add_boss(grid);
    }

    /// Spawns one villager of a random kind next to every house placed since
    /// the previous rollover.
    pub fn day_rollover(&mut self) {
        let houses = std::mem::take(&mut self.pending_houses);
        for &house in &houses {
            let kind = VillagerKind::ALL[self.rng.spawn.random_range(0..VillagerKind::ALL.len())];
            if let Some(cell) = nearest_walkable(&self.world, &self.tileset, house) {
                self.add_villager(kind, cell);
                self.stats.house_spawns += 1;
            }
        }
        if self.config.houses_respawn_daily {
            self.pending_houses =
                houses.into_iter().filter(|&c| self.tileset.get(self.world.tile(c)).spawns_villager).collect();
        }
    }

    /// Lose when every sub-grid is boss-occupied (checked first); win once a
    /// boss has died and none is left alive.
    pub fn check_end(&self) -> Outcome {
        if self.outcome != Outcome::Ongoing {
            return self.outcome;
        }
        if self.world.occupied_count() == GRID_COUNT {
            Outcome::Lose
        } else if self.stats.bosses_killed > 0 && self.bosses().next().is_none() {
            Outcome::Win
        } else {
            Outcome::Ongoing
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tilemap::TileId;

    fn game() -> GameState {
        GameState::new_game(GameConfig::default(), 42).unwrap()
    }

    fn tile(v: u8) -> TileId {
        TileId::new(v).unwrap()
    }

    #[test]
    fn start_state() {
        let g = game();
        assert_eq!(g.villagers.len(), 3);
        let kinds: Vec<_> = g.villagers.iter().map(|v| v.kind).collect();
        assert_eq!(kinds, VillagerKind::ALL);
        assert!(g.villagers.iter().all(|v| v.cell().grid_index() == 0));
        assert_eq!(g.bosses().count(), 1);
        assert_eq!(g.bosses().next().unwrap().grid_index, FIRST_BOSS_GRID);
        assert!(g.world.is_boss_occupied(FIRST_BOSS_GRID));
        assert_eq!(g.inventory.count("forest"), 1);
        assert_eq!(g.inventory.total(), 1);
        assert_eq!(g.outcome, Outcome::Ongoing);
        assert_eq!(g.check_end(), Outcome::Ongoing);
    }

    #[test]
    fn zero_day_length_is_rejected() {
        let cfg = GameConfig { day_length_s: 0.0, ..GameConfig::default() };
        assert!(matches!(GameState::new_game(cfg, 1), Err(SetupError::Config(_))));
    }

    #[test]
    fn water_takes_twice_as_long() {
        let ticks_to_cross = |t: u8| {
            let mut g = game();
            for x in 0..4 {
                g.world.set_tile(Cell::new(x, 20), tile(t));
            }
            g.villagers[0].position = Point::center_of(Cell::new(0, 20));
            g.assign_task(1, Task::MoveTo { target: Cell::new(3, 20) }).unwrap();
            let mut n = 0;
            while g.villagers[0].position != Point::center_of(Cell::new(3, 20)) {
                g.step(1);
                n += 1;
                assert!(n < 1000);
            }
            n
        };
        let grass = ticks_to_cross(0);
        assert_eq!(grass, 15);
        assert_eq!(ticks_to_cross(9), 2 * grass);
    }

    #[test]
    fn flowers_heal() {
        let mut g = game();
        let c = g.villagers[0].cell();
        g.world.set_tile(c, tile(1));
        g.villagers[0].hp = 50.0;
        g.step(10);
        assert!(g.villagers[0].hp > 50.0);
        assert!(g.villagers[0].hp <= g.villagers[0].max_hp);
    }

    #[test]
    fn boss_spawns_on_the_interval() {
        let mut g = game();
        g.step(1199);
        assert_eq!(g.bosses().count(), 1);
        let before: Vec<usize> = (0..GRID_COUNT).filter(|&i| g.world.is_boss_occupied(i)).collect();
        g.step(1);
        assert_eq!(g.bosses().count(), 2);
        let new = g.bosses().map(|b| b.grid_index).find(|i| !before.contains(i));
        assert!(new.is_some());
    }

    #[test]
    fn task_rules() {
        let mut g = game();
        g.world.set_tile(Cell::new(8, 8), tile(8));
        assert_eq!(g.assign_task(3, Task::Chop { cell: Cell::new(8, 8) }), Ok(()));
        assert!(matches!(g.assign_task(3, Task::Attack { monster_id: 4 }), Err(SimError::IllegalTask { .. })));
        assert!(matches!(g.assign_task(1, Task::Chop { cell: Cell::new(8, 8) }), Err(SimError::IllegalTask { .. })));
        assert_eq!(g.assign_task(99, Task::Idle), Err(SimError::UnknownVillager(99)));
        assert_eq!(g.assign_task(1, Task::Attack { monster_id: 4 }), Ok(()));
        assert_eq!(g.assign_task(1, Task::Attack { monster_id: 77 }), Err(SimError::UnknownMonster(77)));
    }

    #[test]
    fn worker_chops_a_tree() {
        let mut g = game();
        let tree = Cell::new(9, 3);
        g.world.set_tile(tree, tile(8));
        g.assign_task(3, Task::Chop { cell: tree }).unwrap();
        g.step(100);
        assert_eq!(g.world.tile(tree), g.tileset.ground());
        assert_eq!(g.inventory.total(), 2);
        assert_eq!(g.stats.trees_chopped, 1);
        assert_eq!(g.villagers[2].task, Task::Idle);
    }

    #[test]
    fn chop_and_collect_errors() {
        let mut g = game();
        let rock = Cell::new(4, 4);
        g.world.set_tile(rock, tile(5));
        assert_eq!(g.chop_resolution(3, rock), Err(SimError::NotChoppable(rock)));
        let here = g.villagers[2].cell();
        assert_eq!(g.collect_treasure(3, here), Err(SimError::NothingToCollect(here)));
    }

    #[test]
    fn treasure_gives_five() {
        let mut g = game();
        let here = g.villagers[0].cell();
        g.world.set_tile(here, tile(13));
        let mut twin = g.clone();
        let words = g.collect_treasure(1, here).unwrap();
        assert_eq!(words.len(), 5);
        assert_eq!(g.inventory.total(), 6);
        assert_eq!(twin.collect_treasure(1, here).unwrap(), words);
    }

    #[test]
    fn level_up_speeds_chopping() {
        let mut g = game();
        let before = g.config.chop_seconds(g.villagers[2].level);
        for _ in 0..10 {
            let near = Cell::new(8, 4);
            g.world.set_tile(near, tile(8));
            let c = g.villagers[2].cell();
            g.villagers[2].position = Point::center_of(Cell::new(near.x - 1, c.y.max(near.y)));
            g.chop_resolution(3, near).unwrap();
        }
        assert_eq!(g.villagers[2].level, 2);
        assert!(g.config.chop_seconds(g.villagers[2].level) < before);
    }

    #[test]
    fn houses_spawn_at_next_day() {
        let mut g = game();
        let mut grid = TileGrid::filled(tile(0));
        grid.set(1, 1, tile(10));
        grid.set(2, 1, tile(11));
        grid.set(3, 1, tile(12));
        g.apply_placement(5, grid);
        assert_eq!(g.pending_house_spawns(), 3);
        g.step(g.config.day_ticks() - 1);
        let before = g.villagers.len();
        g.step(1);
        assert_eq!(g.villagers.len(), before + 3);
        assert_eq!(g.pending_house_spawns(), 0);
        g.step(g.config.day_ticks());
        assert_eq!(g.stats.house_spawns, 3);
    }

    #[test]
    fn enclosed_house_spawns_outside() {
        let mut g = game();
        let mut grid = TileGrid::filled(tile(5));
        grid.set(5, 5, tile(12));
        g.apply_placement(5, grid);
        g.day_rollover();
        let v = g.villagers.last().unwrap();
        assert!(is_walkable(&g.world, &g.tileset, v.cell()));
        assert_ne!(v.cell().grid_index(), 5);
    }

    #[test]
    fn placement_moves_villagers_off_rock() {
        let mut g = game();
        g.apply_placement(0, TileGrid::filled(tile(5)));
        assert!(g.villagers_on_walkable());
        assert!(g.villagers.iter().all(|v| v.cell().grid_index() != 0));
    }

    #[test]
    fn killing_the_only_boss_wins() {
        let mut g = game();
        let boss = g.bosses().next().unwrap().clone();
        g.villagers[0].position = Point::center_of(Cell::new(boss.home.x - 1, boss.home.y));
        g.villagers[0].hp = 1.0e9;
        g.villagers[0].max_hp = 1.0e9;
        g.assign_task(1, Task::Attack { monster_id: boss.id }).unwrap();
        g.step(1199);
        assert_eq!(g.outcome, Outcome::Win);
        assert_eq!(g.stats.bosses_killed, 1);
        assert!(g.clock.tick < 1199);
    }

    #[test]
    fn idle_game_is_lost_at_sixteen_bosses() {
        let mut g = game();
        g.step(40_000);
        assert_eq!(g.outcome, Outcome::Lose);
        assert_eq!(g.clock.tick, 18_000);
        assert_eq!(g.bosses().count(), 16);
    }

    #[test]
    fn finished_game_does_not_advance() {
        let mut g = game();
        g.outcome = Outcome::Lose;
        g.step(10);
        assert_eq!(g.clock.tick, 0);
    }

    #[test]
    fn minions_appear_when_villagers_enter_a_boss_grid() {
        let mut g = game();
        g.villagers[0].position = Point::center_of(Cell::new(31, 31));
        g.villagers[0].hp = 1.0e9;
        g.villagers[0].max_hp = 1.0e9;
        g.step(g.config.ticks(10.0) + 2);
        assert!(g.stats.minions_spawned >= 1);
        assert!(g.monsters.iter().any(|m| m.kind == MonsterKind::Minion && m.grid_index == 15));
    }
}
