//! World bundle format: canonical JSON, versioned, validated on load.
//!
//! The `ground_truth` section is optional so exports meant for players can drop it.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::WireError;
use crate::evidence::{timestamp, StampedMessage, Terminal};
use crate::geom::{Coord, Rect};
use crate::rng::WorldSeed;
use crate::station::sim::FateRecord;
use crate::station::{CrewMember, Room, Station};
use crate::tiles::{ObjectKind, Terrain, TileWorld};
use crate::village::render::{spawn_connected, HALL_H, HALL_W, SIZE};
use crate::village::{BuildingFootprint, BuildingKind, EndingKind, VillageHistory};

pub const FORMAT_VERSION: u32 = 1;
pub const FILE_EXTENSION: &str = ".forensica.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Game {
    Village,
    Station,
}

impl std::str::FromStr for Game {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "village" => Ok(Game::Village),
            "station" => Ok(Game::Station),
            other => Err(format!("unknown game {other:?}: expected village or station")),
        }
    }
}

/// Seeds travel as decimal strings so 64-bit values survive JSON readers with float numbers.
mod seed_text {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::rng::WorldSeed;

    pub fn serialize<S: Serializer>(seed: &WorldSeed, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&seed.0.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<WorldSeed, D::Error> {
        let text = String::deserialize(d)?;
        WorldSeed::parse(&text).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VillageEvidence {
    pub plaque: Coord,
    pub buildings: Vec<BuildingFootprint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationEvidence {
    pub name: String,
    pub rooms: Vec<Room>,
    pub corridors: Vec<Rect>,
    pub entrance_door: Coord,
    /// Clock minute of turn 0.
    pub start_minute: u32,
    pub terminals: Vec<Terminal>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evidence {
    Village(VillageEvidence),
    Station(StationEvidence),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VillageTruth {
    pub history: VillageHistory,
    pub bindings: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationTruth {
    pub crew: Vec<CrewMember>,
    pub fates: Vec<FateRecord>,
    /// Body id to crew id.
    pub bodies: BTreeMap<String, String>,
    /// Every message sent, including those left off the terminals.
    pub messages: Vec<StampedMessage>,
    pub ticks: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundTruth {
    Village(VillageTruth),
    Station(StationTruth),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldBundle {
    pub format_version: u32,
    #[serde(with = "seed_text")]
    pub seed: WorldSeed,
    pub config_digest: String,
    pub game: Game,
    pub world: TileWorld,
    /// One description per terrain kind present, keyed by terrain name.
    pub terrain_text: BTreeMap<String, String>,
    pub evidence: Evidence,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<GroundTruth>,
}

impl WorldBundle {
    /// The station structure, rebuilt from the world grid and evidence.
    pub fn station(&self) -> Option<Station> {
        match &self.evidence {
            Evidence::Station(e) => Some(Station {
                name: e.name.clone(),
                grid: self.world.clone(),
                rooms: e.rooms.clone(),
                corridors: e.corridors.clone(),
                entrance_door: e.entrance_door,
            }),
            Evidence::Village(_) => None,
        }
    }

    pub fn without_ground_truth(&self) -> WorldBundle {
        WorldBundle { ground_truth: None, ..self.clone() }
    }
}

/// Canonical JSON: sorted keys, two-space indent, trailing newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("bundle types serialize");
    let mut s = serde_json::to_string_pretty(&v).expect("values serialize");
    s.push('\n');
    s
}

pub fn serialize_world(bundle: &WorldBundle) -> Vec<u8> {
    to_canonical_json(bundle).into_bytes()
}

pub fn parse_world(bytes: &[u8]) -> Result<WorldBundle, WireError> {
    let value: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| WireError::Parse { path: String::new(), reason: e.to_string() })?;
    match value.get("format_version") {
        None => return Err(WireError::Parse { path: "format_version".into(), reason: "missing field".into() }),
        Some(v) => match v.as_i64() {
            Some(n) if n == i64::from(FORMAT_VERSION) => {}
            Some(n) => return Err(WireError::Version { found: n, supported: FORMAT_VERSION }),
            None => return Err(WireError::Parse { path: "format_version".into(), reason: "not an integer".into() }),
        },
    }
    let bundle: WorldBundle = serde_path_to_error::deserialize(value)
        .map_err(|e| WireError::Parse { path: e.path().to_string(), reason: e.inner().to_string() })?;
    validate(&bundle)?;
    Ok(bundle)
}

/// Re-checks every structural invariant of a bundle.
pub fn validate(b: &WorldBundle) -> Result<(), WireError> {
    let w = &b.world;
    for (i, o) in w.entities.iter().enumerate() {
        if !w.in_bounds(o.position) {
            return Err(WireError::corrupt(format!("world.entities[{i}].position"), "out of bounds"));
        }
    }
    if !w.in_bounds(w.spawn) || !w.terrain(w.spawn).walkable() {
        return Err(WireError::corrupt("world.spawn", "spawn must be a walkable tile"));
    }
    if w.entities.iter().any(|o| o.blocking && o.position == w.spawn) {
        return Err(WireError::corrupt("world.spawn", "blocking object on spawn"));
    }
    match (b.game, &b.evidence, &b.ground_truth) {
        (Game::Village, Evidence::Village(e), truth) => {
            let truth = match truth {
                None => None,
                Some(GroundTruth::Village(t)) => Some(t),
                Some(_) => return Err(WireError::corrupt("ground_truth", "does not match game")),
            };
            validate_village(w, e, truth)
        }
        (Game::Station, Evidence::Station(e), truth) => {
            let truth = match truth {
                None => None,
                Some(GroundTruth::Station(t)) => Some(t),
                Some(_) => return Err(WireError::corrupt("ground_truth", "does not match game")),
            };
            let station = b.station().expect("station evidence");
            validate_station(&station, e, truth)
        }
        _ => Err(WireError::corrupt("evidence", "does not match game")),
    }
}

fn validate_village(w: &TileWorld, e: &VillageEvidence, truth: Option<&VillageTruth>) -> Result<(), WireError> {
    if (w.width, w.height) != (SIZE, SIZE) {
        return Err(WireError::corrupt("world.width", format!("village worlds are {SIZE}x{SIZE}")));
    }
    let count = |k: ObjectKind| w.entities.iter().filter(|o| o.kind == k).count();
    if count(ObjectKind::Plaque) != 1 {
        return Err(WireError::corrupt("world.entities", "exactly one plaque required"));
    }
    let halls: Vec<&BuildingFootprint> = e.buildings.iter().filter(|b| b.kind == BuildingKind::WorshipHall).collect();
    if halls.len() != 1 || (halls[0].rect.w, halls[0].rect.h) != (HALL_W, HALL_H) {
        return Err(WireError::corrupt("evidence.village.buildings", "exactly one 20x10 worship hall required"));
    }
    for (i, b) in e.buildings.iter().enumerate() {
        let r = b.rect;
        if !w.in_bounds(Coord { x: r.x, y: r.y }) || !w.in_bounds(Coord { x: r.right(), y: r.bottom() }) {
            return Err(WireError::corrupt(format!("evidence.village.buildings[{i}].rect"), "out of bounds"));
        }
    }
    if !spawn_connected(w, &e.buildings) {
        return Err(WireError::corrupt("world.tiles", "a building interior is unreachable from spawn"));
    }
    if let Some(t) = truth {
        let sacred = t.history.final_society.culture.sacred_number;
        for (i, o) in w.entities.iter().enumerate() {
            if o.kind == ObjectKind::Chair && o.leg_count != Some(sacred) {
                return Err(WireError::corrupt(format!("world.entities[{i}].leg_count"), "chairs have the sacred number of legs"));
            }
        }
        let s = &t.history;
        let ended = match s.ending.kind {
            EndingKind::EcosystemCollapse => s.final_eco.eco_health.value <= 0.0,
            EndingKind::OverrunByPredators => s.final_society.population == 0,
            EndingKind::Famine => s.final_society.food_store <= 0.0,
        };
        if !ended || s.ending.tick_of_collapse == 0 {
            return Err(WireError::corrupt("ground_truth.village.history.ending", "ending trigger not met"));
        }
    }
    Ok(())
}

fn validate_station(station: &Station, e: &StationEvidence, truth: Option<&StationTruth>) -> Result<(), WireError> {
    let g = &station.grid;
    if !g.in_bounds(e.entrance_door) || g.terrain(e.entrance_door) != Terrain::ExteriorDoor {
        return Err(WireError::corrupt("evidence.station.entrance_door", "not an exterior door tile"));
    }
    let passable = g.passable_mask();
    let seen = g.flood(e.entrance_door, &passable);
    if let Some(i) = (0..g.tiles.len()).find(|&i| passable[i] && !seen[i] && g.tiles[i] != Terrain::Snow) {
        let c = g.coord_of(i);
        return Err(WireError::corrupt("world.tiles", format!("tile ({}, {}) is unreachable from the entrance", c.x, c.y)));
    }
    let dist = g.distances(e.entrance_door, &passable);
    for (i, t) in e.terminals.iter().enumerate() {
        let path = format!("evidence.station.terminals[{i}]");
        if !g.in_bounds(t.position) || !g.objects_at(t.position).any(|o| o.kind == ObjectKind::Terminal) {
            return Err(WireError::corrupt(format!("{path}.position"), "no terminal object there"));
        }
        if dist[g.idx(t.position)] != t.depth {
            return Err(WireError::corrupt(format!("{path}.depth"), "does not match walking distance"));
        }
        if t.message.timestamp != timestamp(e.start_minute, t.message.turn) {
            return Err(WireError::corrupt(format!("{path}.message.timestamp"), "does not match turn"));
        }
        if i > 0 {
            let prev = &e.terminals[i - 1];
            if prev.depth > t.depth || (prev.depth == t.depth && prev.message.turn != t.message.turn) || prev.message.turn > t.message.turn {
                return Err(WireError::corrupt(path, "terminals out of chronological depth order"));
            }
        }
    }
    if let Some(t) = truth {
        let ids: BTreeSet<&str> = t.crew.iter().map(|c| c.id.as_str()).collect();
        let fated: Vec<&str> = t.fates.iter().map(|f| f.crew_id.as_str()).collect();
        if fated.len() != ids.len() || fated.iter().collect::<BTreeSet<_>>().len() != ids.len() || fated.iter().any(|f| !ids.contains(f)) {
            return Err(WireError::corrupt("ground_truth.station.fates", "exactly one fate per crew member required"));
        }
        let body_objects: BTreeSet<&str> = g.entities.iter().filter_map(|o| o.body_id.as_deref()).collect();
        let mapped: BTreeSet<&str> = t.bodies.keys().map(String::as_str).collect();
        if body_objects != mapped || t.bodies.values().any(|c| !ids.contains(c.as_str())) {
            return Err(WireError::corrupt("ground_truth.station.bodies", "body map does not match placed bodies"));
        }
        let death: BTreeMap<&str, u32> = t.fates.iter().map(|f| (f.crew_id.as_str(), f.turn)).collect();
        let placed = e.terminals.iter().map(|t| &t.message);
        for (i, m) in t.messages.iter().chain(placed).enumerate() {
            match death.get(m.sender.as_str()) {
                Some(d) if *d > m.turn => {}
                _ => return Err(WireError::corrupt(format!("ground_truth.station.messages[{i}].sender"), "sender not alive when sending")),
            }
        }
    }
    Ok(())
}
