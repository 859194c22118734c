use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("config document is not valid: {0}")]
    Parse(String),
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
}

/// Gameplay constants. Every field has a default, so a config document only
/// needs to list overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameConfig {
    pub tick_seconds: f64,
    pub day_length_s: f64,
    pub boss_interval_s: f64,

    pub move_speed: f64,
    pub monster_speed: f64,

    pub villager_hp: f64,
    pub fighter_dps: f64,
    pub fighter_range: f64,
    pub archer_dps: f64,
    pub archer_range: f64,
    /// Damage bonus per level above 1, as a fraction of base dps.
    pub level_dps_bonus: f64,

    pub boss_hp: f64,
    pub boss_dps: f64,
    pub minion_hp: f64,
    pub minion_dps: f64,
    pub monster_range: f64,
    pub max_minions_per_grid: usize,

    pub minion_base_interval_s: f64,
    pub minion_decay: f64,
    pub minion_min_interval_s: f64,

    pub chop_duration_s: f64,
    pub chop_level_factor: f64,
    pub chop_min_s: f64,
    pub xp_per_task: u32,
    pub level_xp_step: u32,
    pub flower_heal_hps: f64,

    pub words_consumable: bool,
    pub houses_respawn_daily: bool,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            tick_seconds: 0.1,
            day_length_s: 120.0,
            boss_interval_s: 120.0,
            move_speed: 2.0,
            monster_speed: 1.5,
            villager_hp: 100.0,
            fighter_dps: 10.0,
            fighter_range: 1.5,
            archer_dps: 7.0,
            archer_range: 3.0,
            level_dps_bonus: 0.1,
            boss_hp: 500.0,
            boss_dps: 15.0,
            minion_hp: 60.0,
            minion_dps: 5.0,
            monster_range: 1.5,
            max_minions_per_grid: 8,
            minion_base_interval_s: 10.0,
            minion_decay: 0.9,
            minion_min_interval_s: 2.0,
            chop_duration_s: 3.0,
            chop_level_factor: 0.9,
            chop_min_s: 1.0,
            xp_per_task: 10,
            level_xp_step: 100,
            flower_heal_hps: 2.0,
            words_consumable: true,
            houses_respawn_daily: false,
        }
    }
}

impl GameConfig {
    pub fn from_toml(document: &str) -> Result<Self, ConfigError> {
        let cfg: GameConfig = toml::from_str(document).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("tick_seconds", self.tick_seconds),
            ("day_length_s", self.day_length_s),
            ("boss_interval_s", self.boss_interval_s),
            ("move_speed", self.move_speed),
            ("monster_speed", self.monster_speed),
            ("villager_hp", self.villager_hp),
            ("boss_hp", self.boss_hp),
            ("minion_hp", self.minion_hp),
            ("fighter_range", self.fighter_range),
            ("archer_range", self.archer_range),
            ("monster_range", self.monster_range),
            ("minion_base_interval_s", self.minion_base_interval_s),
            ("minion_min_interval_s", self.minion_min_interval_s),
            ("chop_min_s", self.chop_min_s),
            ("chop_duration_s", self.chop_duration_s),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::Invalid(format!("{name} must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("fighter_dps", self.fighter_dps),
            ("archer_dps", self.archer_dps),
            ("boss_dps", self.boss_dps),
            ("minion_dps", self.minion_dps),
            ("flower_heal_hps", self.flower_heal_hps),
            ("level_dps_bonus", self.level_dps_bonus),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ConfigError::Invalid(format!("{name} must be non-negative, got {v}")));
            }
        }
        if !(self.minion_decay > 0.0 && self.minion_decay <= 1.0) {
            return Err(ConfigError::Invalid("minion_decay must lie in (0, 1]".into()));
        }
        if !(self.chop_level_factor > 0.0 && self.chop_level_factor <= 1.0) {
            return Err(ConfigError::Invalid("chop_level_factor must lie in (0, 1]".into()));
        }
        if self.boss_hp < 3.0 * self.villager_hp {
            return Err(ConfigError::Invalid("boss_hp must be at least 3x villager_hp".into()));
        }
        if self.level_xp_step == 0 {
            return Err(ConfigError::Invalid("level_xp_step must be positive".into()));
        }
        for (name, s) in [("day_length_s", self.day_length_s), ("boss_interval_s", self.boss_interval_s)] {
            if self.ticks(s) == 0 {
                return Err(ConfigError::Invalid(format!("{name} is shorter than one tick")));
            }
        }
        Ok(())
    }

    /// Whole ticks in `seconds`, rounded to nearest.
    pub fn ticks(&self, seconds: f64) -> u64 {
        (seconds / self.tick_seconds).round().max(0.0) as u64
    }

    pub fn day_ticks(&self) -> u64 {
        self.ticks(self.day_length_s)
    }

    pub fn boss_interval_ticks(&self) -> u64 {
        self.ticks(self.boss_interval_s)
    }

    /// Minion spawn interval at `elapsed_s`:
    /// `max(min, base * decay^(elapsed / boss_interval))`.
    pub fn minion_interval_s(&self, elapsed_s: f64) -> f64 {
        let scaled = self.minion_base_interval_s * self.minion_decay.powf(elapsed_s.max(0.0) / self.boss_interval_s);
        scaled.max(self.minion_min_interval_s)
    }

    /// Chop duration for a worker of `level`.
    pub fn chop_seconds(&self, level: u32) -> f64 {
        let scaled = self.chop_duration_s * self.chop_level_factor.powi(level.saturating_sub(1) as i32);
        scaled.max(self.chop_min_s)
    }
}

/// Free-function form of [`GameConfig::minion_interval_s`] with default constants.
pub fn minion_scaling(elapsed_s: f64) -> f64 {
    GameConfig::default().minion_interval_s(elapsed_s)
}
