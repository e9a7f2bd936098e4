//! Whole-world generation for either game, producing a [`WorldBundle`].

use std::collections::BTreeMap;

use crate::config::GenConfig;
use crate::content::content;
use crate::error::GenerationError;
use crate::evidence::{place_terminals, stamp_messages};
use crate::grammar::{render, DynamicContext, Grammar};
use crate::rng::{stage, WorldSeed};
use crate::station::run_station_sim;
use crate::tiles::{Terrain, TileWorld};
use crate::village::render::village_context;
use crate::village::{render_village, run_village};
use crate::wire::{Evidence, Game, GroundTruth, StationEvidence, StationTruth, VillageEvidence, VillageTruth, WorldBundle, FORMAT_VERSION};

fn terrain_text(grammar: &Grammar, world: &TileWorld, ctx: &DynamicContext, seed: WorldSeed) -> Result<BTreeMap<String, String>, GenerationError> {
    let mut stream = stage(seed, "world.terrain_text");
    let mut out = BTreeMap::new();
    for t in Terrain::ALL {
        let symbol = format!("t_{}", t.name());
        if world.tiles.contains(&t) && grammar.contains(&symbol) {
            out.insert(t.name().to_string(), render(grammar, &symbol, ctx, &mut stream)?);
        }
    }
    Ok(out)
}

pub fn generate_village(seed: WorldSeed, config: &GenConfig) -> Result<WorldBundle, GenerationError> {
    config.validate()?;
    let history = run_village(seed, config)?;
    let rendered = render_village(&history, seed, config)?;
    let ctx = village_context(&history);
    let terrain_text = terrain_text(&content().village, &rendered.world, &ctx, seed)?;
    Ok(WorldBundle {
        format_version: FORMAT_VERSION,
        seed,
        config_digest: config.digest(),
        game: Game::Village,
        world: rendered.world,
        terrain_text,
        evidence: Evidence::Village(VillageEvidence { plaque: rendered.plaque, buildings: rendered.buildings }),
        ground_truth: Some(GroundTruth::Village(VillageTruth { history, bindings: rendered.bindings })),
    })
}

pub fn generate_station(seed: WorldSeed, config: &GenConfig) -> Result<WorldBundle, GenerationError> {
    config.validate()?;
    let mut outcome = run_station_sim(seed, config)?;
    let window = config.evidence.start_minute;
    let start_minute = stage(seed, "evidence.clock").range_u32(window.min, window.max);
    let messages = stamp_messages(
        &outcome.messages,
        start_minute,
        &outcome.crew,
        &outcome.fates,
        &outcome.station.name,
        &mut stage(seed, "evidence.text"),
    )?;
    let terminals = place_terminals(&mut outcome.station, &messages, &config.evidence, &mut stage(seed, "evidence.terminals"))?;
    let mut ctx = DynamicContext::new();
    ctx.bind("STATION", outcome.station.name.clone())?;
    let terrain_text = terrain_text(&content().station, &outcome.station.grid, &ctx, seed)?;
    let station = outcome.station;
    Ok(WorldBundle {
        format_version: FORMAT_VERSION,
        seed,
        config_digest: config.digest(),
        game: Game::Station,
        world: station.grid,
        terrain_text,
        evidence: Evidence::Station(StationEvidence {
            name: station.name,
            rooms: station.rooms,
            corridors: station.corridors,
            entrance_door: station.entrance_door,
            start_minute,
            terminals,
        }),
        ground_truth: Some(GroundTruth::Station(StationTruth {
            crew: outcome.crew,
            fates: outcome.fates,
            bodies: outcome.bodies,
            messages,
            ticks: outcome.ticks,
        })),
    })
}

pub fn generate(game: Game, seed: WorldSeed, config: &GenConfig) -> Result<WorldBundle, GenerationError> {
    match game {
        Game::Village => generate_village(seed, config),
        Game::Station => generate_station(seed, config),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wire::{parse_world, serialize_world};

    #[test]
    fn bundles_round_trip_and_validate() {
        let cfg = GenConfig::default();
        for game in [Game::Village, Game::Station] {
            for seed in 0..10 {
                let b = generate(game, WorldSeed(seed), &cfg).unwrap();
                let bytes = serialize_world(&b);
                let back = parse_world(&bytes).unwrap();
                assert_eq!(back, b);
                assert_eq!(serialize_world(&back), bytes);
                let stripped = parse_world(&serialize_world(&b.without_ground_truth())).unwrap();
                assert!(stripped.ground_truth.is_none());
            }
        }
    }

    #[test]
    fn terrain_text_covers_present_terrain() {
        let b = generate(Game::Station, WorldSeed(2), &GenConfig::default()).unwrap();
        for t in ["wall", "floor", "snow", "exterior_door"] {
            assert!(b.terrain_text.contains_key(t), "{t}");
        }
    }
}
