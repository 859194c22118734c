//! Immutable state snapshots: the JSON wire form served to clients and the
//! digest used for determinism checks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::simulation::{GameState, Monster, Outcome, Stats, Villager};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSnapshot {
    pub tick: u64,
    pub elapsed_s: f64,
    pub outcome: Outcome,
    pub day_index: u64,
    /// Ticks until the next boss spawns.
    pub boss_timer_ticks: u64,
    /// 40 rows of 40 tile ids, row 0 at the top.
    pub world: Vec<Vec<u8>>,
    /// Boss occupation per sub-grid, index = grid index.
    pub boss_occupied: Vec<bool>,
    pub rock_heights: Vec<Vec<u8>>,
    pub water_masks: Vec<Vec<u8>>,
    pub villagers: Vec<Villager>,
    pub monsters: Vec<Monster>,
    pub inventory: BTreeMap<String, u32>,
    pub pending_house_spawns: usize,
    pub receipts: usize,
    pub stats: Stats,
    /// SHA-256 of the word-pool queue, so pool drift shows up in digests.
    pub pool_digest: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl StateSnapshot {
    pub fn capture(state: &GameState) -> Self {
        StateSnapshot {
            tick: state.clock.tick,
            elapsed_s: state.elapsed_s(),
            outcome: state.outcome,
            day_index: state.day_index(),
            boss_timer_ticks: state.boss_ticks_remaining(),
            world: state.world.to_rows(),
            boss_occupied: state.world.grids().iter().map(|g| g.boss_occupied).collect(),
            rock_heights: state.rock_heights.rows().to_vec(),
            water_masks: state.water_masks.rows().to_vec(),
            villagers: state.villagers.clone(),
            monsters: state.monsters.clone(),
            inventory: state.inventory.counts().clone(),
            pending_house_spawns: state.pending_house_spawns(),
            receipts: state.receipts.len(),
            stats: state.stats.clone(),
            pool_digest: sha256_hex(state.pool.to_snapshot().as_bytes()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("snapshots always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        sha256_hex(self.to_json().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::GameConfig;

    #[test]
    fn json_round_trip() {
        let mut g = GameState::new_game(GameConfig::default(), 9).unwrap();
        g.step(1234);
        let s = StateSnapshot::capture(&g);
        let back = StateSnapshot::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.digest(), s.digest());
    }

    #[test]
    fn same_seed_same_digest() {
        let run = |seed| {
            let mut g = GameState::new_game(GameConfig::default(), seed).unwrap();
            g.step(2500);
            StateSnapshot::capture(&g).digest()
        };
        assert_eq!(run(42), run(42));
        assert_ne!(run(42), run(43));
    }
}
