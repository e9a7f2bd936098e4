use std::path::PathBuf;

use forensica_core::config::GenConfig;
use forensica_core::error::WireError;
use forensica_core::generate::generate;
use forensica_core::rng::WorldSeed;
use forensica_core::tiles::Terrain;
use forensica_core::wire::{parse_world, serialize_world, Evidence, Game, WorldBundle};

const GOLDEN: [(Game, u64, &str); 2] = [(Game::Village, 7, "village-7.forensica.json"), (Game::Station, 7, "station-7.forensica.json")];

fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn golden(name: &str) -> Vec<u8> {
    std::fs::read(golden_path(name)).unwrap_or_else(|e| panic!("{name}: {e}; regenerate with UPDATE_GOLDEN=1"))
}

/// Set UPDATE_GOLDEN=1 to rewrite the snapshots after an intended format change.
#[test]
fn generation_matches_golden_snapshots() {
    let update = std::env::var("UPDATE_GOLDEN").as_deref() == Ok("1");
    for (game, seed, name) in GOLDEN {
        let bytes = serialize_world(&generate(game, WorldSeed(seed), &GenConfig::default()).unwrap());
        if update {
            std::fs::create_dir_all(golden_path("").parent().unwrap().join("golden")).unwrap();
            std::fs::write(golden_path(name), &bytes).unwrap();
        }
        assert!(bytes == golden(name), "{name} drifted from its snapshot");
    }
}

#[test]
fn golden_files_parse_and_reserialize_identically() {
    for (game, seed, name) in GOLDEN {
        let bytes = golden(name);
        let b = parse_world(&bytes).unwrap();
        assert_eq!((b.game, b.seed.0), (game, seed));
        assert!(serialize_world(&b) == bytes, "{name}");
    }
}

fn station_golden() -> WorldBundle {
    parse_world(&golden("station-7.forensica.json")).unwrap()
}

#[test]
fn sealing_a_room_is_rejected_as_corrupt() {
    let mut b = station_golden();
    let Evidence::Station(e) = &b.evidence else { unreachable!() };
    let room = e.rooms.iter().find(|r| r.doorways.iter().all(|d| *d != e.entrance_door)).unwrap().clone();
    for d in &room.doorways {
        let i = b.world.idx(*d);
        b.world.tiles[i] = Terrain::Wall;
    }
    match parse_world(&serialize_world(&b)) {
        Err(WireError::Corrupt { path, reason }) => {
            assert_eq!(path, "world.tiles");
            assert!(reason.contains("unreachable"), "{reason}");
        }
        other => panic!("sealed room accepted: {other:?}"),
    }
}

#[test]
fn truncated_input_is_a_parse_error() {
    let bytes = golden("village-7.forensica.json");
    for cut in [0, 1, bytes.len() / 3, bytes.len() - 2] {
        assert!(matches!(parse_world(&bytes[..cut]), Err(WireError::Parse { .. })), "cut at {cut}");
    }
}

fn with_field(name: &str, f: impl FnOnce(&mut serde_json::Map<String, serde_json::Value>)) -> Vec<u8> {
    let mut v: serde_json::Value = serde_json::from_slice(&golden(name)).unwrap();
    f(v.as_object_mut().unwrap());
    serde_json::to_vec(&v).unwrap()
}

#[test]
fn unknown_or_missing_version_is_rejected() {
    let future = with_field("village-7.forensica.json", |m| {
        m.insert("format_version".into(), 2.into());
    });
    assert_eq!(parse_world(&future), Err(WireError::Version { found: 2, supported: 1 }));
    let missing = with_field("village-7.forensica.json", |m| {
        m.remove("format_version");
    });
    assert!(matches!(parse_world(&missing), Err(WireError::Parse { path, .. }) if path == "format_version"));
}

#[test]
fn type_errors_carry_a_field_path() {
    let bad = with_field("station-7.forensica.json", |m| {
        m["evidence"]["station"]["start_minute"] = "noon".into();
    });
    match parse_world(&bad) {
        Err(WireError::Parse { path, .. }) => assert_eq!(path, "evidence.station.start_minute"),
        other => panic!("{other:?}"),
    }
    let extra = with_field("station-7.forensica.json", |m| {
        m.insert("cheat_codes".into(), true.into());
    });
    assert!(matches!(parse_world(&extra), Err(WireError::Parse { .. })));
}

#[test]
fn mismatched_timestamps_are_corrupt() {
    let bad = with_field("station-7.forensica.json", |m| {
        m["evidence"]["station"]["start_minute"] = (m["evidence"]["station"]["start_minute"].as_u64().unwrap() + 1).into();
    });
    assert!(matches!(parse_world(&bad), Err(WireError::Corrupt { .. })));
}

#[test]
fn stripped_bundle_has_no_sealed_section() {
    let b = station_golden().without_ground_truth();
    let text = String::from_utf8(serialize_world(&b)).unwrap();
    assert!(!text.contains("ground_truth"));
    assert!(!text.contains("\"fates\""));
    assert!(!text.contains("\"cause\""));
    assert_eq!(parse_world(text.as_bytes()).unwrap(), b);
}

#[test]
fn canonical_form_is_injective_on_distinct_bundles() {
    let a = station_golden();
    assert_eq!(serialize_world(&a), serialize_world(&a.clone()));
    let mut c = a.clone();
    if let Evidence::Station(e) = &mut c.evidence {
        e.name.push('!');
    }
    assert_ne!(serialize_world(&a), serialize_world(&c));
}
