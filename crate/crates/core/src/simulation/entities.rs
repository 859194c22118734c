use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::tilemap::{Cell, WORLD_SIZE};

/// A continuous position in world units; one unit is one tile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn center_of(cell: Cell) -> Self {
        let (x, y) = cell.center();
        Point { x, y }
    }

    /// The cell containing this point, clamped into the world.
    pub fn cell(self) -> Cell {
        let clamp = |v: f64| (v.floor().max(0.0) as usize).min(WORLD_SIZE - 1);
        Cell::new(clamp(self.x), clamp(self.y))
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VillagerKind {
    Fighter,
    Archer,
    Worker,
}

impl VillagerKind {
    pub const ALL: [VillagerKind; 3] = [VillagerKind::Fighter, VillagerKind::Archer, VillagerKind::Worker];

    pub fn as_str(self) -> &'static str {
        match self {
            VillagerKind::Fighter => "fighter",
            VillagerKind::Archer => "archer",
            VillagerKind::Worker => "worker",
        }
    }

    pub fn can_fight(self) -> bool {
        self != VillagerKind::Worker
    }
}

impl fmt::Display for VillagerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Task {
    Idle,
    MoveTo { target: Cell },
    Chop { cell: Cell },
    Attack { monster_id: u32 },
    Collect { cell: Cell },
}

impl Task {
    pub fn verb(&self) -> &'static str {
        match self {
            Task::Idle => "idle",
            Task::MoveTo { .. } => "move",
            Task::Chop { .. } => "chop",
            Task::Attack { .. } => "attack",
            Task::Collect { .. } => "collect",
        }
    }

    /// Whether a villager of `kind` may hold this task.
    pub fn allowed_for(&self, kind: VillagerKind) -> bool {
        match self {
            Task::Attack { .. } => kind.can_fight(),
            Task::Chop { .. } => kind == VillagerKind::Worker,
            _ => true,
        }
    }
}

/// Waypoints still to visit and the cell the current plan leads to.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Route {
    pub waypoints: VecDeque<Cell>,
    pub goal: Option<Cell>,
}

impl Route {
    pub fn clear(&mut self) {
        self.waypoints.clear();
        self.goal = None;
    }

    pub fn is_idle(&self) -> bool {
        self.waypoints.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Villager {
    pub id: u32,
    pub kind: VillagerKind,
    pub hp: f64,
    pub max_hp: f64,
    pub level: u32,
    pub xp: u32,
    pub position: Point,
    pub task: Task,
    pub route: Route,
    /// Ticks spent on the current chop.
    pub chop_ticks: u64,
}

impl Villager {
    pub fn new(id: u32, kind: VillagerKind, cell: Cell, hp: f64) -> Self {
        Villager {
            id,
            kind,
            hp,
            max_hp: hp,
            level: 1,
            xp: 0,
            position: Point::center_of(cell),
            task: Task::Idle,
            route: Route::default(),
            chop_ticks: 0,
        }
    }

    pub fn cell(&self) -> Cell {
        self.position.cell()
    }

    /// Adds xp, levelling up each time the running total reaches `step × level`.
    pub fn gain_xp(&mut self, amount: u32, step: u32) {
        self.xp += amount;
        while self.xp >= step * self.level {
            self.xp -= step * self.level;
            self.level += 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonsterKind {
    Boss,
    Minion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monster {
    pub id: u32,
    pub kind: MonsterKind,
    pub hp: f64,
    pub max_hp: f64,
    pub grid_index: usize,
    pub home: Cell,
    pub position: Point,
    pub target: Option<u32>,
    pub route: Route,
    /// Bosses only: ticks until the next minion, while villagers are in the grid.
    pub minion_timer: Option<u64>,
}

impl Monster {
    pub fn new(id: u32, kind: MonsterKind, hp: f64, grid_index: usize, home: Cell) -> Self {
        Monster {
            id,
            kind,
            hp,
            max_hp: hp,
            grid_index,
            home,
            position: Point::center_of(home),
            target: None,
            route: Route::default(),
            minion_timer: None,
        }
    }

    pub fn cell(&self) -> Cell {
        self.position.cell()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_curve() {
        let mut v = Villager::new(1, VillagerKind::Worker, Cell::new(0, 0), 100.0);
        for _ in 0..9 {
            v.gain_xp(10, 100);
        }
        assert_eq!(v.level, 1);
        v.gain_xp(10, 100);
        assert_eq!((v.level, v.xp), (2, 0));
        for _ in 0..20 {
            v.gain_xp(10, 100);
        }
        assert_eq!(v.level, 3);
    }

    #[test]
    fn task_restrictions() {
        let attack = Task::Attack { monster_id: 4 };
        let chop = Task::Chop { cell: Cell::new(1, 1) };
        assert!(!attack.allowed_for(VillagerKind::Worker));
        assert!(attack.allowed_for(VillagerKind::Archer));
        assert!(!chop.allowed_for(VillagerKind::Fighter));
        assert!(chop.allowed_for(VillagerKind::Worker));
    }

    #[test]
    fn point_cell_is_clamped() {
        assert_eq!(Point { x: 40.0, y: -0.1 }.cell(), Cell::new(39, 0));
        assert_eq!(Point { x: 13.5, y: 27.5 }.cell(), Cell::new(13, 27));
    }
}
