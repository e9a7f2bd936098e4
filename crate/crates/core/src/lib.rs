//! Seed-deterministic generation, simulation and investigation sessions for
//! two forensic exploration games: a ruined village and a wrecked research station.

pub mod calibrate;
pub mod config;
pub mod content;
pub mod error;
pub mod evidence;
pub mod generate;
pub mod geom;
pub mod grammar;
pub mod rng;
pub mod session;
pub mod station;
pub mod tiles;
pub mod village;
pub mod wire;
