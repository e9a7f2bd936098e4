//! Pattern-based scenery placement.
//!
//! Patterns are authored facing a wall to the north and may be rotated in
//! quarter turns. A placement is accepted only when every piece lies on free
//! interior floor, no piece sits on a doorway-front tile, the one-tile ring
//! around the pattern holds no other scenery and no doorway, wall-backed
//! pieces actually touch a wall, and the room stays fully walkable.
//!
//! Draw order per room: for each interior tile in row-major order, one
//! `chance(density)`; on success one `index` for the pattern and one `index(4)`
//! for the rotation.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::geom::{xy, Coord};
use crate::rng::RandomStream;
use crate::tiles::{ObjectKind, PlacedObject, Terrain, TileWorld};

use super::{Room, RoomKind};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternPiece {
    pub dx: i32,
    pub dy: i32,
    pub kind: ObjectKind,
    pub blocking: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneryPattern {
    pub name: String,
    pub rooms: Vec<RoomKind>,
    pub against_wall: bool,
    pub pieces: Vec<PatternPiece>,
}

/// Rotates an offset by `r` quarter turns clockwise (y grows south).
pub fn rotate(r: usize, dx: i32, dy: i32) -> (i32, i32) {
    match r % 4 {
        0 => (dx, dy),
        1 => (-dy, dx),
        2 => (-dx, -dy),
        _ => (dy, -dx),
    }
}

impl SceneryPattern {
    pub fn validate(&self) -> Result<(), String> {
        if self.pieces.is_empty() || self.rooms.is_empty() {
            return Err(format!("pattern {} needs pieces and rooms", self.name));
        }
        let mut cells = BTreeSet::new();
        for p in &self.pieces {
            if !(0..4).contains(&p.dx) || !(0..4).contains(&p.dy) || !cells.insert((p.dx, p.dy)) {
                return Err(format!("pattern {} has an out-of-range or duplicate piece", self.name));
            }
        }
        if !self.pieces.iter().any(|p| p.dy == 0) {
            return Err(format!("pattern {} has no piece on its back row", self.name));
        }
        Ok(())
    }

    /// Absolute piece positions for an anchor and rotation.
    pub fn cells(&self, anchor: Coord, rotation: usize) -> Vec<(Coord, &PatternPiece)> {
        self.pieces
            .iter()
            .map(|p| {
                let (dx, dy) = rotate(rotation, p.dx, p.dy);
                (anchor.offset(dx, dy), p)
            })
            .collect()
    }
}

struct RoomScan<'a> {
    room: &'a Room,
    grid: &'a TileWorld,
    fronts: BTreeSet<Coord>,
    doors: BTreeSet<Coord>,
}

impl RoomScan<'_> {
    fn fits(&self, pattern: &SceneryPattern, anchor: Coord, rotation: usize, occupied: &BTreeSet<Coord>) -> bool {
        let cells = pattern.cells(anchor, rotation);
        let cell_set: BTreeSet<Coord> = cells.iter().map(|(c, _)| *c).collect();
        for (c, piece) in &cells {
            if !self.room.rect.contains(*c) || occupied.contains(c) || self.fronts.contains(c) {
                return false;
            }
            if self.grid.terrain(*c) != Terrain::Floor {
                return false;
            }
            if pattern.against_wall && piece.dy == 0 {
                let (wx, wy) = rotate(rotation, 0, -1);
                let back = c.offset(wx, wy);
                if !self.grid.in_bounds(back) || self.grid.terrain(back) != Terrain::Wall {
                    return false;
                }
            }
        }
        for (c, _) in &cells {
            for m in c.around() {
                if cell_set.contains(&m) {
                    continue;
                }
                if occupied.contains(&m) || self.doors.contains(&m) {
                    return false;
                }
            }
        }
        true
    }

    fn walkable(&self, blocked: &BTreeSet<Coord>) -> bool {
        let open = |c: Coord| (self.room.rect.contains(c) || self.doors.contains(&c)) && !blocked.contains(&c);
        let Some(start) = self.room.doorways.first().copied() else {
            return false;
        };
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(c) = queue.pop_front() {
            for n in c.orthogonal() {
                if open(n) && seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
        self.room.rect.tiles().all(|c| blocked.contains(&c) || seen.contains(&c))
            && self.room.doorways.iter().all(|d| seen.contains(d))
    }
}

/// Places scenery in one room. Returned objects carry the kind name as
/// description key and an empty description, filled in by the caller.
pub fn place_scenery(
    room: &Room,
    grid: &TileWorld,
    patterns: &[SceneryPattern],
    density: f64,
    stream: &mut RandomStream,
) -> Vec<PlacedObject> {
    let allowed: Vec<&SceneryPattern> = patterns.iter().filter(|p| p.rooms.contains(&room.kind)).collect();
    if allowed.is_empty() {
        return Vec::new();
    }
    let scan = RoomScan {
        room,
        grid,
        fronts: room.doorways.iter().map(|d| room.doorway_front(*d)).collect(),
        doors: room.doorways.iter().copied().collect(),
    };
    let mut occupied = BTreeSet::new();
    let mut blocked = BTreeSet::new();
    let mut placed = Vec::new();
    let r = room.rect;
    for y in r.y..r.y + r.h {
        for x in r.x..r.x + r.w {
            if !stream.chance(density) {
                continue;
            }
            let pattern = allowed[stream.index(allowed.len())];
            let rotation = stream.index(4);
            let anchor = xy(x, y);
            if !scan.fits(pattern, anchor, rotation, &occupied) {
                continue;
            }
            let cells = pattern.cells(anchor, rotation);
            let mut trial = blocked.clone();
            trial.extend(cells.iter().filter(|(_, p)| p.blocking).map(|(c, _)| *c));
            if !scan.walkable(&trial) {
                continue;
            }
            blocked = trial;
            for (c, piece) in cells {
                occupied.insert(c);
                placed.push(PlacedObject {
                    position: c,
                    kind: piece.kind,
                    description_key: piece.kind.name(),
                    description: String::new(),
                    blocking: piece.blocking,
                    leg_count: None,
                    body_id: None,
                });
            }
        }
    }
    placed
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Rect;
    use crate::rng::{stage, WorldSeed};

    fn walled_room(w: i32, h: i32, kind: RoomKind) -> (Room, TileWorld) {
        let mut grid = TileWorld::new(w + 4, h + 4, Terrain::Snow);
        let rect = Rect::new(2, 2, w, h);
        grid.fill_rect(rect.expand(1), Terrain::Wall);
        grid.fill_rect(rect, Terrain::Floor);
        let door = xy(2, 1);
        grid.set(door, Terrain::Doorway);
        (Room { id: 0, kind, name: "test".into(), rect, doorways: vec![door] }, grid)
    }

    fn desk() -> SceneryPattern {
        serde_json::from_str(
            r#"{"name":"desk","rooms":["lab1"],"against_wall":true,
                "pieces":[{"dx":0,"dy":0,"kind":"desk","blocking":true},{"dx":0,"dy":1,"kind":"station_chair","blocking":false}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn rotation_is_a_quarter_turn() {
        assert_eq!(rotate(1, 0, -1), (1, 0));
        assert_eq!(rotate(2, 0, -1), (0, 1));
        assert_eq!(rotate(3, 0, -1), (-1, 0));
        assert_eq!(rotate(4, 2, 3), (2, 3));
    }

    #[test]
    fn desk_gets_chair_in_front() {
        let (room, grid) = walled_room(8, 8, RoomKind::Lab1);
        let mut s = stage(WorldSeed(3), "t");
        let placed = place_scenery(&room, &grid, &[desk()], 1.0, &mut s);
        let desks: Vec<_> = placed.iter().filter(|o| o.kind == ObjectKind::Desk).collect();
        assert!(!desks.is_empty());
        for d in desks {
            let has_chair_in_front = placed.iter().any(|o| {
                o.kind == ObjectKind::StationChair
                    && d.position.manhattan(o.position) == 1
                    && !grid.terrain(d.position.offset(d.position.x - o.position.x, d.position.y - o.position.y)).walkable()
            });
            assert!(has_chair_in_front, "{d:?}");
        }
    }

    #[test]
    fn wall_pattern_without_free_wall_is_not_placed() {
        // Doorways in the middle of every wall leave no wall-backed tile outside a doorway margin.
        let (mut room, mut grid) = walled_room(3, 3, RoomKind::Lab1);
        room.doorways = vec![xy(3, 1), xy(3, 5), xy(1, 3), xy(5, 3)];
        for d in &room.doorways {
            grid.set(*d, Terrain::Doorway);
        }
        let case: SceneryPattern = serde_json::from_str(
            r#"{"name":"case","rooms":["lab1"],"against_wall":true,"pieces":[{"dx":0,"dy":0,"kind":"sample_case","blocking":true}]}"#,
        )
        .unwrap();
        for seed in 0..50 {
            let mut s = stage(WorldSeed(seed), "t");
            assert!(place_scenery(&room, &grid, std::slice::from_ref(&case), 1.0, &mut s).is_empty());
        }
    }

    #[test]
    fn never_on_doorway_front_and_room_stays_walkable() {
        let (room, grid) = walled_room(6, 5, RoomKind::Lab1);
        for seed in 0..200 {
            let mut s = stage(WorldSeed(seed), "t");
            let placed = place_scenery(&room, &grid, &[desk()], 0.5, &mut s);
            let front = room.doorway_front(room.doorways[0]);
            assert!(placed.iter().all(|o| o.position != front));
            let blocked: BTreeSet<Coord> = placed.iter().filter(|o| o.blocking).map(|o| o.position).collect();
            let scan = RoomScan {
                room: &room,
                grid: &grid,
                fronts: BTreeSet::from([front]),
                doors: room.doorways.iter().copied().collect(),
            };
            assert!(scan.walkable(&blocked));
        }
    }
}
