//! Research station: construction, then the catastrophe simulation.

pub mod build;
pub mod path;
pub mod scenery;
pub mod sight;
pub mod sim;

use serde::{Deserialize, Serialize};

use crate::geom::{Coord, Rect};
use crate::tiles::{Terrain, TileWorld};

pub use build::{build_station, BuiltStation};
pub use sim::{run_station_sim, Cause, FateRecord, SimState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoomKind {
    Entrance,
    MessHall,
    Residences,
    Lab1,
    SecurityOffice,
    SecondaryLab,
}

impl RoomKind {
    pub fn is_lab(self) -> bool {
        matches!(self, RoomKind::Lab1 | RoomKind::SecondaryLab)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Room {
    pub id: usize,
    pub kind: RoomKind,
    /// Display name used in messages, e.g. "the mess hall" or "Lab 3".
    pub name: String,
    /// Interior floor rectangle; the wall ring is `rect.expand(1)`.
    pub rect: Rect,
    pub doorways: Vec<Coord>,
}

impl Room {
    /// Interior tile directly inside a doorway.
    pub fn doorway_front(&self, door: Coord) -> Coord {
        let r = self.rect;
        if door.y == r.y - 1 {
            door.offset(0, 1)
        } else if door.y == r.bottom() + 1 {
            door.offset(0, -1)
        } else if door.x == r.x - 1 {
            door.offset(1, 0)
        } else {
            door.offset(-1, 0)
        }
    }
}

/// Which part of the station a tile belongs to, for room-bounded sight.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "room")]
pub enum Area {
    Room(usize),
    Corridor,
    Outside,
    /// Walls and breaches between areas.
    Structure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Station {
    pub name: String,
    pub grid: TileWorld,
    pub rooms: Vec<Room>,
    pub corridors: Vec<Rect>,
    pub entrance_door: Coord,
}

impl Station {
    pub fn room(&self, kind: RoomKind) -> Option<&Room> {
        self.rooms.iter().find(|r| r.kind == kind)
    }

    pub fn entrance(&self) -> &Room {
        self.room(RoomKind::Entrance).expect("every station has an entrance")
    }

    /// Area of every tile, indexed like `grid.tiles`.
    pub fn area_map(&self) -> Vec<Area> {
        let g = &self.grid;
        let mut map: Vec<Area> = g
            .tiles
            .iter()
            .map(|t| if *t == Terrain::Snow { Area::Outside } else { Area::Structure })
            .collect();
        for c in &self.corridors {
            for p in c.tiles() {
                if g.in_bounds(p) && g.terrain(p).walkable() {
                    map[g.idx(p)] = Area::Corridor;
                }
            }
        }
        for room in &self.rooms {
            for p in room.rect.tiles() {
                map[g.idx(p)] = Area::Room(room.id);
            }
            for d in &room.doorways {
                map[g.idx(*d)] = Area::Room(room.id);
            }
        }
        let door = self.entrance_door;
        map[g.idx(door)] = Area::Room(self.entrance().id);
        map
    }

    /// Human-readable location of a tile.
    pub fn location_name(&self, areas: &[Area], c: Coord) -> String {
        match areas.get(self.grid.idx(c)) {
            Some(Area::Room(i)) => self.rooms[*i].name.clone(),
            Some(Area::Corridor) => "the corridor".into(),
            Some(Area::Outside) => "outside".into(),
            _ => "the wreckage".into(),
        }
    }

    /// Tiles that count as inside the station.
    pub fn is_indoor(&self, c: Coord) -> bool {
        self.grid.get(c).is_some_and(|t| t != Terrain::Snow)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profession {
    SecurityOfficer,
    LogisticsOfficer,
    Scientist,
}

impl Profession {
    pub fn key(self) -> &'static str {
        match self {
            Profession::SecurityOfficer => "security",
            Profession::LogisticsOfficer => "logistics",
            Profession::Scientist => "scientist",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrewMember {
    pub id: String,
    pub name: String,
    pub profession: Profession,
    pub start_position: Coord,
    pub description: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnomalySpawn {
    pub position: Coord,
}
