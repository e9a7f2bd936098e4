//! Station construction: corridors, rooms, room types, scenery, crew and the
//! anomaly's starting tile.
//!
//! Streams, each drawn in the order listed:
//! - `station.layout/k` for layout attempt `k`: first corridor orientation and
//!   length, then per extra corridor (base, anchor x, anchor y, orientation,
//!   length, offset); then room count, then per room attempt (corridor, side,
//!   width, height, position, doorway); then the exterior door and the room-type
//!   shuffle.
//! - `station.scenery/k`: scenery, room by room in id order.
//! - `station.crew`: crew size, name shuffle, start tiles, anomaly tile.
//! - `station.text`: station name, scenery descriptions, crew descriptions.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::config::{GenConfig, StationConfig};
use crate::content::content;
use crate::error::GenerationError;
use crate::geom::{xy, Coord, Rect};
use crate::grammar::{render, DynamicContext};
use crate::rng::{stage, RandomStream, WorldSeed};
use crate::tiles::{Terrain, TileWorld};

use super::scenery::place_scenery;
use super::{AnomalySpawn, CrewMember, Profession, Room, RoomKind, Station};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuiltStation {
    pub station: Station,
    pub crew: Vec<CrewMember>,
    pub anomaly: AnomalySpawn,
    /// Index of the layout substream that succeeded.
    pub layout_attempt: u32,
}

struct Layout {
    grid: TileWorld,
    corridors: Vec<Rect>,
    rooms: Vec<Room>,
    entrance_door: Coord,
}

fn grow_corridors(cfg: &StationConfig, s: &mut RandomStream) -> Vec<Rect> {
    let margin = cfg.room_size.max as i32 + 3;
    let inner = Rect::new(margin, margin, cfg.width - 2 * margin, cfg.height - 2 * margin);
    let fits = |r: &Rect| r.x >= inner.x && r.y >= inner.y && r.right() <= inner.right() && r.bottom() <= inner.bottom();
    let clamp_len = |len: i32, span: i32| len.min(span).max(3);

    let horizontal = s.chance(0.5);
    let len = s.range_u32(cfg.corridor_length.min, cfg.corridor_length.max) as i32;
    let (cx, cy) = (cfg.width / 2, cfg.height / 2);
    let first = if horizontal {
        let len = clamp_len(len, inner.w);
        Rect::new(cx - len / 2, cy - 1, len, 3)
    } else {
        let len = clamp_len(len, inner.h);
        Rect::new(cx - 1, cy - len / 2, 3, len)
    };
    let mut corridors = vec![first];
    let count = s.range_u32(cfg.corridors.min, cfg.corridors.max) as usize;
    let mut tries = 0;
    while corridors.len() < count && tries < 64 * count {
        tries += 1;
        let base = corridors[s.index(corridors.len())];
        let ax = base.x + s.below(base.w as u64) as i32;
        let ay = base.y + s.below(base.h as u64) as i32;
        let horizontal = s.chance(0.5);
        let len = s.range_u32(cfg.corridor_length.min, cfg.corridor_length.max) as i32;
        let off = s.below(len as u64) as i32;
        let rect = if horizontal { Rect::new(ax - off, ay - 1, len, 3) } else { Rect::new(ax - 1, ay - off, 3, len) };
        if fits(&rect) {
            corridors.push(rect);
        }
    }
    corridors
}

/// Room interior and doorway for one attempt against `c` on `side` (N, E, S, W).
fn room_candidate(c: Rect, side: usize, w: i32, h: i32, s: &mut RandomStream) -> (Rect, Coord) {
    match side {
        0 | 2 => {
            let rx = c.x - w + 1 + s.below((c.w + w - 1) as u64) as i32;
            let (ry, dy) = if side == 0 { (c.y - 1 - h, c.y - 1) } else { (c.bottom() + 2, c.bottom() + 1) };
            let lo = rx.max(c.x);
            let hi = (rx + w - 1).min(c.right());
            let dx = lo + s.below((hi - lo + 1) as u64) as i32;
            (Rect::new(rx, ry, w, h), xy(dx, dy))
        }
        _ => {
            let ry = c.y - h + 1 + s.below((c.h + h - 1) as u64) as i32;
            let (rx, dx) = if side == 3 { (c.x - 1 - w, c.x - 1) } else { (c.right() + 2, c.right() + 1) };
            let lo = ry.max(c.y);
            let hi = (ry + h - 1).min(c.bottom());
            let dy = lo + s.below((hi - lo + 1) as u64) as i32;
            (Rect::new(rx, ry, w, h), xy(dx, dy))
        }
    }
}

fn try_layout(cfg: &StationConfig, s: &mut RandomStream) -> Option<Layout> {
    let corridors = grow_corridors(cfg, s);
    let wanted = s.range_u32(cfg.rooms.min, cfg.rooms.max) as usize;
    let bounds = Rect::new(2, 2, cfg.width - 4, cfg.height - 4);
    let mut floors: Vec<Rect> = corridors.clone();
    let mut placed: Vec<(Rect, Coord)> = Vec::new();
    for _ in 0..cfg.room_attempts {
        if placed.len() >= wanted {
            break;
        }
        let c = corridors[s.index(corridors.len())];
        let side = s.index(4);
        let w = s.range_u32(cfg.room_size.min, cfg.room_size.max) as i32;
        let h = s.range_u32(cfg.room_size.min, cfg.room_size.max) as i32;
        let (rect, door) = room_candidate(c, side, w, h, s);
        let inside = rect.x >= bounds.x && rect.y >= bounds.y && rect.right() <= bounds.right() && rect.bottom() <= bounds.bottom();
        if !inside || floors.iter().any(|f| f.intersects(&rect.expand(1))) {
            continue;
        }
        floors.push(rect);
        placed.push((rect, door));
    }
    if placed.len() < 5 {
        return None;
    }

    let mut grid = TileWorld::new(cfg.width, cfg.height, Terrain::Snow);
    for f in &floors {
        grid.fill_rect(*f, Terrain::Floor);
    }
    for i in 0..grid.tiles.len() {
        let c = grid.coord_of(i);
        if grid.tiles[i] == Terrain::Snow && c.around().any(|n| grid.get(n) == Some(Terrain::Floor)) {
            grid.tiles[i] = Terrain::Wall;
        }
    }
    for (_, door) in &placed {
        grid.set(*door, Terrain::Doorway);
    }

    let entrance = (0..placed.len())
        .max_by_key(|i| {
            let (cx2, cy2) = placed[*i].0.center2();
            (cy2, -cx2, std::cmp::Reverse(*i))
        })
        .expect("at least five rooms");

    // Snow connected to the map border.
    let snow: Vec<bool> = grid.tiles.iter().map(|t| *t == Terrain::Snow).collect();
    let mut outside = grid.flood(xy(0, 0), &snow);
    for (i, t) in grid.tiles.iter().enumerate() {
        let c = grid.coord_of(i);
        let edge = c.x == 0 || c.y == 0 || c.x == grid.width - 1 || c.y == grid.height - 1;
        if edge && *t == Terrain::Snow && !outside[i] {
            for (j, v) in grid.flood(c, &snow).into_iter().enumerate() {
                outside[j] |= v;
            }
        }
    }
    let er = placed[entrance].0;
    let ring = er.expand(1);
    let candidates: Vec<Coord> = ring
        .border()
        .filter(|c| {
            let corner = (c.x == ring.x || c.x == ring.right()) && (c.y == ring.y || c.y == ring.bottom());
            if corner || grid.terrain(*c) != Terrain::Wall {
                return false;
            }
            let out = if c.y == ring.y {
                c.offset(0, -1)
            } else if c.y == ring.bottom() {
                c.offset(0, 1)
            } else if c.x == ring.x {
                c.offset(-1, 0)
            } else {
                c.offset(1, 0)
            };
            grid.in_bounds(out) && outside[grid.idx(out)]
        })
        .collect();
    if candidates.is_empty() {
        return None;
    }
    let exterior = candidates[s.index(candidates.len())];
    grid.set(exterior, Terrain::ExteriorDoor);

    let mut others: Vec<usize> = (0..placed.len()).filter(|i| *i != entrance).collect();
    s.shuffle(&mut others);
    let mut kinds = vec![RoomKind::SecondaryLab; placed.len()];
    kinds[entrance] = RoomKind::Entrance;
    for (slot, kind) in [RoomKind::MessHall, RoomKind::Residences, RoomKind::Lab1, RoomKind::SecurityOffice].into_iter().enumerate() {
        kinds[others[slot]] = kind;
    }
    let mut lab_no = 1;
    let rooms = placed
        .iter()
        .enumerate()
        .map(|(id, (rect, door))| {
            let name = match kinds[id] {
                RoomKind::Entrance => "the entrance hall".to_string(),
                RoomKind::MessHall => "the mess hall".to_string(),
                RoomKind::Residences => "the residences".to_string(),
                RoomKind::Lab1 => "Lab 1".to_string(),
                RoomKind::SecurityOffice => "the security office".to_string(),
                RoomKind::SecondaryLab => {
                    lab_no += 1;
                    format!("Lab {lab_no}")
                }
            };
            Room { id, kind: kinds[id], name, rect: *rect, doorways: vec![*door] }
        })
        .collect();
    Some(Layout { grid, corridors, rooms, entrance_door: exterior })
}

/// Indoor tiles a walker can stand on: walkable terrain other than snow, not under a blocking object.
pub fn indoor_open_mask(grid: &TileWorld) -> Vec<bool> {
    grid.passable_mask()
        .into_iter()
        .zip(&grid.tiles)
        .map(|(p, t)| p && *t != Terrain::Snow)
        .collect()
}

/// True when every open indoor tile is reachable from the entrance door.
pub fn fully_walkable(station: &Station) -> bool {
    let open = indoor_open_mask(&station.grid);
    let seen = station.grid.flood(station.entrance_door, &open);
    open.iter().zip(&seen).all(|(o, s)| !o || *s)
}

/// Interior tiles with no object on them and not directly inside a doorway.
fn free_tiles(room: &Room, grid: &TileWorld) -> Vec<Coord> {
    let occupied: BTreeSet<Coord> = grid.entities.iter().map(|o| o.position).collect();
    let fronts: BTreeSet<Coord> = room.doorways.iter().map(|d| room.doorway_front(*d)).collect();
    room.rect
        .tiles()
        .filter(|c| grid.terrain(*c) == Terrain::Floor && !occupied.contains(c) && !fronts.contains(c))
        .collect()
}

pub fn build_station(seed: WorldSeed, config: &GenConfig) -> Result<BuiltStation, GenerationError> {
    let cfg = &config.station;
    cfg.validate()?;
    let content = content();
    for attempt in 0..cfg.layout_attempts {
        let mut ls = stage(seed, &format!("station.layout/{attempt}"));
        let Some(layout) = try_layout(cfg, &mut ls) else { continue };
        let Layout { mut grid, corridors, rooms, entrance_door } = layout;

        let mut ss = stage(seed, &format!("station.scenery/{attempt}"));
        for room in &rooms {
            let objs = place_scenery(room, &grid, &content.scenery, cfg.scenery_density, &mut ss);
            grid.entities.extend(objs);
        }
        grid.spawn = entrance_door;
        let mut station = Station { name: String::new(), grid, rooms, corridors, entrance_door };
        if !fully_walkable(&station) {
            continue;
        }

        let mut cs = stage(seed, "station.crew");
        let size = cs.range_u32(cfg.crew_size.min, cfg.crew_size.max) as usize;
        let mut names = content.names.clone();
        cs.shuffle(&mut names);
        let labs: Vec<&Room> = station.rooms.iter().filter(|r| r.kind.is_lab()).collect();
        let mut crew = Vec::with_capacity(size);
        let mut starts_ok = true;
        for (i, name) in names.iter().take(size).enumerate() {
            let profession = match i {
                0 => Profession::SecurityOfficer,
                1 => Profession::LogisticsOfficer,
                _ => Profession::Scientist,
            };
            let room = match profession {
                Profession::SecurityOfficer => station.room(RoomKind::SecurityOffice).expect("typed"),
                Profession::LogisticsOfficer => station.room(RoomKind::MessHall).expect("typed"),
                Profession::Scientist => labs[cs.index(labs.len())],
            };
            let free = free_tiles(room, &station.grid);
            if free.is_empty() {
                starts_ok = false;
                break;
            }
            let start_position = free[cs.index(free.len())];
            crew.push(CrewMember {
                id: format!("crew-{}", i + 1),
                name: name.clone(),
                profession,
                start_position,
                description: String::new(),
            });
        }
        let lab1 = station.room(RoomKind::Lab1).expect("typed");
        let lab_free = free_tiles(lab1, &station.grid);
        if !starts_ok || lab_free.is_empty() {
            continue;
        }
        let anomaly = AnomalySpawn { position: lab_free[cs.index(lab_free.len())] };

        let mut ts = stage(seed, "station.text");
        station.name = content.station.expand("station_name", &mut ts)?;
        let mut ctx = DynamicContext::new();
        ctx.bind("STATION", station.name.clone())?;
        for obj in &mut station.grid.entities {
            obj.description = render(&content.station, &obj.description_key, &ctx, &mut ts)?;
        }
        for member in &mut crew {
            member.description = render(&content.station, &format!("crew_{}", member.profession.key()), &ctx, &mut ts)?;
        }
        return Ok(BuiltStation { station, crew, anomaly, layout_attempt: attempt });
    }
    Err(GenerationError::PlacementExhausted { stage: "station.layout", attempts: cfg.layout_attempts })
}
