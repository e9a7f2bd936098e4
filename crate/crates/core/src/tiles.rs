//! The rendered tile world shared by both games.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::geom::{xy, Coord, Rect};

/// Ground layer. Stored in world files as one ASCII code per tile.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terrain {
    Sand,
    Road,
    Water,
    Wall,
    Fence,
    Floor,
    Soil,
    Rubble,
    Doorway,
    ExteriorDoor,
    Snow,
    Scorched,
}

impl Terrain {
    pub const ALL: [Terrain; 12] = [
        Terrain::Sand,
        Terrain::Road,
        Terrain::Water,
        Terrain::Wall,
        Terrain::Fence,
        Terrain::Floor,
        Terrain::Soil,
        Terrain::Rubble,
        Terrain::Doorway,
        Terrain::ExteriorDoor,
        Terrain::Snow,
        Terrain::Scorched,
    ];

    pub fn code(self) -> char {
        match self {
            Terrain::Sand => '.',
            Terrain::Road => ':',
            Terrain::Water => '~',
            Terrain::Wall => '#',
            Terrain::Fence => '|',
            Terrain::Floor => '_',
            Terrain::Soil => '"',
            Terrain::Rubble => '%',
            Terrain::Doorway => '+',
            Terrain::ExteriorDoor => 'D',
            Terrain::Snow => ',',
            Terrain::Scorched => ';',
        }
    }

    pub fn from_code(c: char) -> Option<Terrain> {
        Terrain::ALL.into_iter().find(|t| t.code() == c)
    }

    pub fn walkable(self) -> bool {
        !matches!(self, Terrain::Water | Terrain::Wall | Terrain::Fence)
    }

    /// Floor-like tiles inside a building or station.
    pub fn is_interior_floor(self) -> bool {
        matches!(
            self,
            Terrain::Floor | Terrain::Soil | Terrain::Rubble | Terrain::Doorway | Terrain::ExteriorDoor | Terrain::Scorched
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            Terrain::Sand => "sand",
            Terrain::Road => "road",
            Terrain::Water => "water",
            Terrain::Wall => "wall",
            Terrain::Fence => "fence",
            Terrain::Floor => "floor",
            Terrain::Soil => "soil",
            Terrain::Rubble => "rubble",
            Terrain::Doorway => "doorway",
            Terrain::ExteriorDoor => "exterior_door",
            Terrain::Snow => "snow",
            Terrain::Scorched => "scorched",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    // village
    Rubble,
    Pew,
    Altar,
    Engraving,
    StatueFragment,
    Plaque,
    Table,
    Chair,
    Cutlery,
    Toy,
    Perfume,
    Bed,
    Crop,
    Weed,
    Hay,
    CattleSkeleton,
    PredatorSkeleton,
    // station
    Desk,
    StationChair,
    LabBench,
    Console,
    SampleCase,
    FuelBarrel,
    WeaponRack,
    Locker,
    Bunk,
    MessTable,
    Bench,
    Crate,
    Terminal,
    Body,
}

impl ObjectKind {
    pub fn name(self) -> String {
        serde_json::to_value(self)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default()
    }
}

/// An object placed on a tile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlacedObject {
    pub position: Coord,
    pub kind: ObjectKind,
    /// Grammar symbol the description was expanded from.
    pub description_key: String,
    /// Final description text, dynamic markers already substituted.
    pub description: String,
    pub blocking: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leg_count: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body_id: Option<String>,
}

/// A 10x10 block claimed by a large feature.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionClaim {
    pub block: Coord,
    pub feature: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "TileWorldRepr", try_from = "TileWorldRepr")]
pub struct TileWorld {
    pub width: i32,
    pub height: i32,
    pub tiles: Vec<Terrain>,
    pub regions: Vec<RegionClaim>,
    pub entities: Vec<PlacedObject>,
    pub spawn: Coord,
}

impl TileWorld {
    pub fn new(width: i32, height: i32, fill: Terrain) -> TileWorld {
        TileWorld {
            width,
            height,
            tiles: vec![fill; (width * height) as usize],
            regions: Vec::new(),
            entities: Vec::new(),
            spawn: xy(0, 0),
        }
    }

    pub fn in_bounds(&self, c: Coord) -> bool {
        c.x >= 0 && c.y >= 0 && c.x < self.width && c.y < self.height
    }

    pub fn idx(&self, c: Coord) -> usize {
        (c.y * self.width + c.x) as usize
    }

    pub fn coord_of(&self, idx: usize) -> Coord {
        xy(idx as i32 % self.width, idx as i32 / self.width)
    }

    pub fn get(&self, c: Coord) -> Option<Terrain> {
        self.in_bounds(c).then(|| self.tiles[self.idx(c)])
    }

    pub fn terrain(&self, c: Coord) -> Terrain {
        self.tiles[self.idx(c)]
    }

    pub fn set(&mut self, c: Coord, t: Terrain) {
        let i = self.idx(c);
        self.tiles[i] = t;
    }

    pub fn fill_rect(&mut self, r: Rect, t: Terrain) {
        for c in r.tiles() {
            if self.in_bounds(c) {
                self.set(c, t);
            }
        }
    }

    pub fn bounds(&self) -> Rect {
        Rect::new(0, 0, self.width, self.height)
    }

    pub fn objects_at(&self, c: Coord) -> impl Iterator<Item = &PlacedObject> {
        self.entities.iter().filter(move |o| o.position == c)
    }

    /// Occupancy mask of blocking objects, indexed like `tiles`.
    pub fn blocking_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.tiles.len()];
        for o in &self.entities {
            if o.blocking && self.in_bounds(o.position) {
                mask[self.idx(o.position)] = true;
            }
        }
        mask
    }

    pub fn passable_mask(&self) -> Vec<bool> {
        let blocked = self.blocking_mask();
        self.tiles
            .iter()
            .zip(blocked)
            .map(|(t, b)| t.walkable() && !b)
            .collect()
    }

    /// 4-connected flood fill over `passable` from `start`.
    pub fn flood(&self, start: Coord, passable: &[bool]) -> Vec<bool> {
        let mut seen = vec![false; self.tiles.len()];
        if !self.in_bounds(start) || !passable[self.idx(start)] {
            return seen;
        }
        let mut queue = VecDeque::from([start]);
        seen[self.idx(start)] = true;
        while let Some(c) = queue.pop_front() {
            for n in c.orthogonal() {
                if self.in_bounds(n) {
                    let i = self.idx(n);
                    if passable[i] && !seen[i] {
                        seen[i] = true;
                        queue.push_back(n);
                    }
                }
            }
        }
        seen
    }

    /// BFS distances (4-connected) from `start`; `u32::MAX` when unreachable.
    pub fn distances(&self, start: Coord, passable: &[bool]) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.tiles.len()];
        if !self.in_bounds(start) {
            return dist;
        }
        let mut queue = VecDeque::from([start]);
        dist[self.idx(start)] = 0;
        while let Some(c) = queue.pop_front() {
            let d = dist[self.idx(c)];
            for n in c.orthogonal() {
                if self.in_bounds(n) {
                    let i = self.idx(n);
                    if passable[i] && dist[i] == u32::MAX {
                        dist[i] = d + 1;
                        queue.push_back(n);
                    }
                }
            }
        }
        dist
    }

    /// Rows of terrain codes, top to bottom.
    pub fn rows(&self) -> Vec<String> {
        self.tiles
            .chunks(self.width.max(1) as usize)
            .map(|row| row.iter().map(|t| t.code()).collect())
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct TileWorldRepr {
    width: i32,
    height: i32,
    tiles: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    regions: Vec<RegionClaim>,
    entities: Vec<PlacedObject>,
    spawn: Coord,
}

impl From<TileWorld> for TileWorldRepr {
    fn from(w: TileWorld) -> Self {
        TileWorldRepr {
            width: w.width,
            height: w.height,
            tiles: w.rows(),
            regions: w.regions,
            entities: w.entities,
            spawn: w.spawn,
        }
    }
}

impl TryFrom<TileWorldRepr> for TileWorld {
    type Error = String;

    fn try_from(r: TileWorldRepr) -> Result<Self, Self::Error> {
        if r.width <= 0 || r.height <= 0 {
            return Err(format!("non-positive dimensions {}x{}", r.width, r.height));
        }
        if r.tiles.len() != r.height as usize {
            return Err(format!("expected {} tile rows, found {}", r.height, r.tiles.len()));
        }
        let mut tiles = Vec::with_capacity((r.width * r.height) as usize);
        for (y, row) in r.tiles.iter().enumerate() {
            if row.chars().count() != r.width as usize {
                return Err(format!("tile row {y} has {} codes, expected {}", row.chars().count(), r.width));
            }
            for c in row.chars() {
                tiles.push(Terrain::from_code(c).ok_or_else(|| format!("unknown terrain code {c:?} in row {y}"))?);
            }
        }
        Ok(TileWorld {
            width: r.width,
            height: r.height,
            tiles,
            regions: r.regions,
            entities: r.entities,
            spawn: r.spawn,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn terrain_codes_are_unique_and_round_trip() {
        let mut codes: Vec<char> = Terrain::ALL.iter().map(|t| t.code()).collect();
        for t in Terrain::ALL {
            assert_eq!(Terrain::from_code(t.code()), Some(t));
        }
        codes.sort();
        codes.dedup();
        assert_eq!(codes.len(), Terrain::ALL.len());
    }

    #[test]
    fn flood_respects_walls() {
        let mut w = TileWorld::new(5, 3, Terrain::Floor);
        for y in 0..3 {
            w.set(xy(2, y), Terrain::Wall);
        }
        let pass = w.passable_mask();
        let seen = w.flood(xy(0, 0), &pass);
        assert!(seen[w.idx(xy(1, 2))]);
        assert!(!seen[w.idx(xy(3, 0))]);
        let d = w.distances(xy(0, 0), &pass);
        assert_eq!(d[w.idx(xy(1, 2))], 3);
        assert_eq!(d[w.idx(xy(4, 0))], u32::MAX);
    }

    #[test]
    fn tiles_serialize_as_code_rows() {
        let mut w = TileWorld::new(2, 2, Terrain::Sand);
        w.set(xy(1, 1), Terrain::Water);
        let v = serde_json::to_value(&w).unwrap();
        assert_eq!(v["tiles"], serde_json::json!(["..", ".~"]));
        let back: TileWorld = serde_json::from_value(v.clone()).unwrap();
        assert_eq!(back, w);
        let mut bad = v;
        bad["tiles"] = serde_json::json!(["..", "."]);
        assert!(serde_json::from_value::<TileWorld>(bad).is_err());
    }
}
