//! Engine for a word-powered god game: players gather words from a simulated
//! world and spend them as prompts to a text-to-tilegrid generator that
//! terraforms a 40×40 map, while villagers and monsters fight over it.

pub mod audit;
pub mod bot;
pub mod postprocess;
pub mod rng;
pub mod runner;
pub mod simulation;
pub mod snapshot;
pub mod telemetry;
pub mod terraform;
pub mod tilemap;
pub mod wordbank;
