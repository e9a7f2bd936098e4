//! Renders a finished village history into a 100x100 ruin.
//!
//! Stages run in a fixed order, each on its own stream: water, fixed features
//! (statue, plaque, worship hall), roads and buildings, decay, items, text.
//! A layout that leaves part of a building unreachable from the spawn tile is
//! discarded and the whole render retried with the next attempt index.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::config::{GenConfig, RenderConfig};
use crate::content::{content, dream_engraving};
use crate::error::GenerationError;
use crate::geom::{xy, Coord, Rect};
use crate::grammar::{render, DynamicContext};
use crate::rng::{stage, RandomStream, WorldSeed};
use crate::tiles::{ObjectKind, PlacedObject, RegionClaim, Terrain, TileWorld};

use super::VillageHistory;

pub const SIZE: i32 = 100;
pub const BLOCK: i32 = 10;
pub const HALL_W: i32 = 20;
pub const HALL_H: i32 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BuildingKind {
    House,
    Barn,
    Field,
    WorshipHall,
    Statue,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildingFootprint {
    pub kind: BuildingKind,
    pub rect: Rect,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub door: Option<Coord>,
    pub decay_applied: bool,
}

impl BuildingFootprint {
    /// Tiles strictly inside the outer ring.
    pub fn interior(&self) -> Rect {
        self.rect.expand(-1)
    }
}

/// Work-in-progress layout threaded through the stages.
#[derive(Clone, Debug)]
pub struct VillageLayout {
    pub grid: TileWorld,
    pub buildings: Vec<BuildingFootprint>,
    pub plaque: Coord,
    pub main_road: Vec<Coord>,
    pub roads_added: u32,
    pub lakes: u32,
    /// Ring tiles that decay must leave alone (doors, the engraved wall).
    pub protected: BTreeSet<Coord>,
    pub destroyed_walls: u32,
    pub ring_tiles: u32,
}

impl VillageLayout {
    pub fn empty() -> VillageLayout {
        VillageLayout {
            grid: TileWorld::new(SIZE, SIZE, Terrain::Sand),
            buildings: Vec::new(),
            plaque: xy(SIZE / 2, SIZE / 2),
            main_road: Vec::new(),
            roads_added: 0,
            lakes: 0,
            protected: BTreeSet::new(),
            destroyed_walls: 0,
            ring_tiles: 0,
        }
    }

    fn claim(&mut self, rect: Rect, feature: &str) {
        for by in rect.y.div_euclid(BLOCK)..=rect.bottom().div_euclid(BLOCK) {
            for bx in rect.x.div_euclid(BLOCK)..=rect.right().div_euclid(BLOCK) {
                let block = xy(bx, by);
                if !self.grid.regions.iter().any(|r| r.block == block) {
                    self.grid.regions.push(RegionClaim { block, feature: feature.to_string() });
                }
            }
        }
    }

    fn claimed(&self, rect: Rect) -> bool {
        self.grid.regions.iter().any(|r| Rect::new(r.block.x * BLOCK, r.block.y * BLOCK, BLOCK, BLOCK).intersects(&rect))
    }

    fn has_object(&self, c: Coord) -> bool {
        self.grid.objects_at(c).next().is_some()
    }

    fn place(&mut self, c: Coord, kind: ObjectKind, blocking: bool) {
        self.grid.entities.push(PlacedObject {
            position: c,
            kind,
            description_key: kind.name(),
            description: String::new(),
            blocking,
            leg_count: None,
            body_id: None,
        });
    }

    fn statue_zone(&self, fragment_radius: i32) -> Rect {
        Rect::new(self.plaque.x, self.plaque.y, 1, 1).expand(fragment_radius + 1)
    }

    pub fn water_tiles(&self) -> u32 {
        self.grid.tiles.iter().filter(|t| **t == Terrain::Water).count() as u32
    }

    pub fn count(&self, kind: ObjectKind) -> usize {
        self.grid.entities.iter().filter(|o| o.kind == kind).count()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderedVillage {
    pub world: TileWorld,
    pub buildings: Vec<BuildingFootprint>,
    pub plaque: Coord,
    pub main_road: Vec<Coord>,
    pub roads_added: u32,
    pub lakes: u32,
    pub destroyed_walls: u32,
    /// Marker bindings shared by every description in this world.
    pub bindings: BTreeMap<String, String>,
    pub attempt: u32,
}

/// Lake tier for a final ecosystem health fraction.
pub fn water_tier(cfg: &RenderConfig, eco_fraction: f64) -> (u32, u32) {
    let tier = cfg.water_table.iter().rev().find(|t| eco_fraction >= t.min_eco_fraction).unwrap_or(&cfg.water_table[0]);
    (tier.lakes, tier.lake_tiles)
}

/// Aligned 2x2-block groups away from the town centre, where lakes go.
fn lake_sites() -> Vec<Rect> {
    let mut out = Vec::new();
    for gy in (0..SIZE / BLOCK).step_by(2) {
        for gx in (0..SIZE / BLOCK).step_by(2) {
            let central = |g: i32| (2..=6).contains(&g);
            if central(gx) && central(gy) {
                continue;
            }
            out.push(Rect::new(gx * BLOCK, gy * BLOCK, 2 * BLOCK, 2 * BLOCK));
        }
    }
    out
}

pub fn place_water(history: &VillageHistory, cfg: &RenderConfig, stream: &mut RandomStream, layout: &mut VillageLayout) {
    let (lakes, tiles) = water_tier(cfg, history.final_eco.eco_health.fraction());
    let mut sites = lake_sites();
    stream.shuffle(&mut sites);
    for site in sites.into_iter().take(lakes as usize) {
        let inner = site.expand(-1);
        let start = xy(stream.range_i64(i64::from(inner.x + 4), i64::from(inner.right() - 4)) as i32, stream.range_i64(i64::from(inner.y + 4), i64::from(inner.bottom() - 4)) as i32);
        let mut blob = vec![start];
        let mut member = BTreeSet::from([start]);
        while (blob.len() as u32) < tiles.min(inner.area() as u32) {
            let from = blob[stream.index(blob.len())];
            let next = from.orthogonal().nth(stream.index(4)).expect("four neighbours");
            if inner.contains(next) && member.insert(next) {
                blob.push(next);
            }
        }
        for c in blob {
            layout.grid.set(c, Terrain::Water);
        }
        layout.claim(site, "lake");
        layout.lakes += 1;
    }
}

pub fn place_fixed_features(cfg: &RenderConfig, stream: &mut RandomStream, layout: &mut VillageLayout) -> Result<(), GenerationError> {
    let plaque = xy(stream.range_i64(42, 57) as i32, stream.range_i64(42, 57) as i32);
    layout.plaque = plaque;
    layout.place(plaque, ObjectKind::Plaque, true);
    layout.grid.spawn = plaque.offset(0, 1);
    layout.claim(Rect::new(plaque.x, plaque.y, 1, 1), "statue");
    layout.buildings.push(BuildingFootprint {
        kind: BuildingKind::Statue,
        rect: Rect::new(plaque.x, plaque.y, 1, 1).expand(cfg.fragment_radius),
        door: None,
        decay_applied: false,
    });

    let count = stream.range_u32(cfg.fragments.min, cfg.fragments.max);
    let spawn = layout.grid.spawn;
    let mut spots: Vec<Coord> = Rect::new(plaque.x, plaque.y, 1, 1)
        .expand(cfg.fragment_radius)
        .tiles()
        .filter(|c| *c != plaque && *c != spawn)
        .collect();
    stream.shuffle(&mut spots);
    for c in spots.into_iter().take(count as usize) {
        layout.place(c, ObjectKind::StatueFragment, false);
    }

    // Worship hall: nearest feasible spot, random tie-break.
    let zone = layout.statue_zone(cfg.fragment_radius);
    let mut candidates: Vec<(i32, Rect)> = Vec::new();
    let r = cfg.hall_search_radius;
    for y in plaque.y - r - HALL_H..=plaque.y + r {
        for x in plaque.x - r - HALL_W..=plaque.x + r {
            let rect = Rect::new(x, y, HALL_W, HALL_H);
            let d = rect.chebyshev_to(plaque);
            if d == 0 || d > r {
                continue;
            }
            let outer = rect.expand(2);
            if outer.x < 0 || outer.y < 0 || outer.right() >= SIZE || outer.bottom() >= SIZE {
                continue;
            }
            if outer.intersects(&zone) || layout.claimed(rect) || outer.tiles().any(|c| layout.grid.terrain(c) != Terrain::Sand) {
                continue;
            }
            candidates.push((d, rect));
        }
    }
    if candidates.is_empty() {
        return Err(GenerationError::PlacementExhausted { stage: "village.hall", attempts: 1 });
    }
    stream.shuffle(&mut candidates);
    candidates.sort_by_key(|(d, _)| *d);
    let hall = candidates[0].1;
    let door_west = stream.chance(0.5);
    let (door_x, far_x, step) = if door_west { (hall.x, hall.right(), 1) } else { (hall.right(), hall.x, -1) };
    paint_ring(layout, hall, Terrain::Wall, Terrain::Floor);
    let door = xy(door_x, hall.y + HALL_H / 2);
    layout.grid.set(door, Terrain::Doorway);
    let engraving = xy(far_x, hall.y + HALL_H / 2 - 1);
    layout.place(engraving, ObjectKind::Engraving, true);
    layout.protected.extend([door, engraving]);
    let altar = xy(far_x - 2 * step, hall.y + HALL_H / 2 - 1);
    layout.place(altar, ObjectKind::Altar, true);
    for row in 0..6 {
        let x = door_x + step * (3 + 2 * row);
        for y in hall.y + 1..hall.bottom() {
            let aisle = y == hall.y + HALL_H / 2 - 1 || y == hall.y + HALL_H / 2;
            if !aisle {
                layout.place(xy(x, y), ObjectKind::Pew, false);
            }
        }
    }
    layout.claim(hall, "worship_hall");
    layout.buildings.push(BuildingFootprint { kind: BuildingKind::WorshipHall, rect: hall, door: Some(door), decay_applied: false });
    Ok(())
}

fn paint_ring(layout: &mut VillageLayout, rect: Rect, ring: Terrain, inside: Terrain) {
    layout.grid.fill_rect(rect, inside);
    for c in rect.border() {
        layout.grid.set(c, ring);
    }
}

/// Shortest 4-connected path over sand from `start` to the nearest tile next to water.
fn path_to_water(layout: &VillageLayout, start: Coord, avoid: Rect) -> Option<Vec<Coord>> {
    let g = &layout.grid;
    let open = |c: Coord| g.in_bounds(c) && g.terrain(c) == Terrain::Sand && !avoid.contains(c) && !layout.has_object(c);
    if !open(start) {
        return None;
    }
    let mut prev: BTreeMap<Coord, Coord> = BTreeMap::new();
    let mut queue = VecDeque::from([start]);
    prev.insert(start, start);
    while let Some(c) = queue.pop_front() {
        if c.orthogonal().any(|n| g.get(n) == Some(Terrain::Water)) {
            let mut path = vec![c];
            let mut at = c;
            while at != start {
                at = prev[&at];
                path.push(at);
            }
            path.reverse();
            return Some(path);
        }
        for n in c.orthogonal() {
            if open(n) && !prev.contains_key(&n) {
                prev.insert(n, c);
                queue.push_back(n);
            }
        }
    }
    None
}

/// Tries to put a building of `kind` beside road tile `road`, on side `side`, door facing the road.
fn try_building(layout: &mut VillageLayout, cfg: &RenderConfig, stream: &mut RandomStream, road: Coord, side: usize, kind: BuildingKind) -> bool {
    let size = match kind {
        BuildingKind::Barn => cfg.barn_size,
        BuildingKind::Field => cfg.field_size,
        _ => cfg.house_size,
    };
    let w = stream.range_u32(size.min, size.max) as i32;
    let h = stream.range_u32(size.min, size.max) as i32;
    let (dx, dy) = [(0, -1), (1, 0), (0, 1), (-1, 0)][side];
    let door = road.offset(dx, dy);
    let along = if dx == 0 { w } else { h };
    let off = stream.range_i64(1, i64::from(along - 2)) as i32;
    let rect = match side {
        0 => Rect::new(door.x - off, door.y - h + 1, w, h),
        1 => Rect::new(door.x, door.y - off, w, h),
        2 => Rect::new(door.x - off, door.y, w, h),
        _ => Rect::new(door.x - w + 1, door.y - off, w, h),
    };
    let outer = rect.expand(1);
    if outer.x < 1 || outer.y < 1 || outer.right() >= SIZE - 1 || outer.bottom() >= SIZE - 1 {
        return false;
    }
    if rect.intersects(&layout.statue_zone(cfg.fragment_radius)) {
        return false;
    }
    if rect.tiles().any(|c| layout.grid.terrain(c) != Terrain::Sand || layout.has_object(c)) {
        return false;
    }
    if outer.tiles().any(|c| !matches!(layout.grid.terrain(c), Terrain::Sand | Terrain::Road)) {
        return false;
    }
    let (ring, inside) = if kind == BuildingKind::Field { (Terrain::Fence, Terrain::Soil) } else { (Terrain::Wall, Terrain::Floor) };
    paint_ring(layout, rect, ring, inside);
    layout.grid.set(door, Terrain::Doorway);
    layout.protected.insert(door);
    layout.buildings.push(BuildingFootprint { kind, rect, door: Some(door), decay_applied: false });
    true
}

fn line_buildings(layout: &mut VillageLayout, cfg: &RenderConfig, stream: &mut RandomStream, road: &[Coord], outskirts: bool) {
    let centre = layout.plaque;
    for &r in road {
        if !stream.chance(cfg.house_chance) {
            continue;
        }
        let side = stream.index(4);
        let kind = if outskirts {
            let d = f64::from(r.manhattan(centre));
            let farm = (cfg.farm_chance_base + cfg.farm_chance_per_tile * d).clamp(0.0, 1.0);
            if stream.chance(farm) {
                if stream.chance(0.5) {
                    BuildingKind::Barn
                } else {
                    BuildingKind::Field
                }
            } else {
                BuildingKind::House
            }
        } else {
            BuildingKind::House
        };
        try_building(layout, cfg, stream, r, side, kind);
    }
}

/// Straight extension from a road-adjacent spot; `None` when shorter than 3 tiles.
fn branch_from(layout: &VillageLayout, cfg: &RenderConfig, spot: Coord, dir: (i32, i32), max_len: u32) -> Option<Vec<Coord>> {
    let g = &layout.grid;
    let zone = layout.statue_zone(cfg.fragment_radius);
    let mut out = Vec::new();
    let mut c = spot;
    for _ in 0..max_len {
        let inside = c.x >= 2 && c.y >= 2 && c.x < SIZE - 2 && c.y < SIZE - 2;
        if !inside || g.terrain(c) != Terrain::Sand || layout.has_object(c) || zone.contains(c) {
            break;
        }
        let side_road = [(dir.1, dir.0), (-dir.1, -dir.0)]
            .iter()
            .any(|(sx, sy)| g.get(c.offset(*sx, *sy)) == Some(Terrain::Road));
        if side_road && !out.is_empty() {
            break;
        }
        let ahead = c.offset(dir.0, dir.1);
        if !out.is_empty() && g.get(ahead) == Some(Terrain::Road) {
            break;
        }
        out.push(c);
        c = ahead;
    }
    (out.len() >= 3).then_some(out)
}

pub fn grow_roads(cfg: &RenderConfig, stream: &mut RandomStream, layout: &mut VillageLayout) -> Result<(), GenerationError> {
    let hall = layout.buildings.iter().find(|b| b.kind == BuildingKind::WorshipHall).expect("hall placed first").clone();
    let door = hall.door.expect("hall has a door");
    let outside = door.orthogonal().find(|n| !hall.rect.contains(*n)).expect("door on the ring");
    let zone = layout.statue_zone(cfg.fragment_radius);
    let path = path_to_water(layout, outside, zone).ok_or(GenerationError::PlacementExhausted { stage: "village.road", attempts: 1 })?;
    for &c in &path {
        layout.grid.set(c, Terrain::Road);
    }
    layout.main_road = path.clone();
    layout.roads_added = 1;
    line_buildings(layout, cfg, stream, &path, false);

    let budget = stream.range_u32(cfg.road_budget.min, cfg.road_budget.max);
    let mut passes = 0;
    while layout.roads_added < budget && passes < 10_000 {
        passes += 1;
        let mut legal: Vec<(Coord, (i32, i32))> = Vec::new();
        for i in 0..layout.grid.tiles.len() {
            if layout.grid.tiles[i] != Terrain::Road {
                continue;
            }
            let r = layout.grid.coord_of(i);
            for n in r.orthogonal() {
                let dir = (n.x - r.x, n.y - r.y);
                if layout.grid.get(n) == Some(Terrain::Sand) && branch_from(layout, cfg, n, dir, 3).is_some() {
                    legal.push((n, dir));
                }
            }
        }
        if legal.is_empty() {
            break;
        }
        let Some(&(spot, dir)) = legal.iter().find(|_| stream.chance(cfg.branch_chance)) else {
            continue;
        };
        let len = stream.range_u32(cfg.branch_length.min, cfg.branch_length.max);
        let branch = branch_from(layout, cfg, spot, dir, len).expect("legal spots extend at least 3 tiles");
        for &c in &branch {
            layout.grid.set(c, Terrain::Road);
        }
        layout.roads_added += 1;
        line_buildings(layout, cfg, stream, &branch, true);
    }
    Ok(())
}

/// Wall destruction probability for a final temperature fraction.
pub fn decay_chance(cfg: &RenderConfig, temperature_fraction: f64) -> f64 {
    (cfg.decay_floor + cfg.decay_slope * temperature_fraction).clamp(0.0, cfg.decay_max)
}

pub fn apply_decay(history: &VillageHistory, cfg: &RenderConfig, stream: &mut RandomStream, layout: &mut VillageLayout) {
    let p = decay_chance(cfg, history.final_eco.temperature.fraction());
    for b in 0..layout.buildings.len() {
        let fp = layout.buildings[b].clone();
        if fp.kind == BuildingKind::Statue {
            continue;
        }
        for c in fp.rect.border() {
            if layout.protected.contains(&c) || !matches!(layout.grid.terrain(c), Terrain::Wall | Terrain::Fence) {
                continue;
            }
            layout.ring_tiles += 1;
            if !stream.chance(p) {
                continue;
            }
            layout.destroyed_walls += 1;
            layout.grid.set(c, Terrain::Rubble);
            let mut at = c;
            if stream.chance(cfg.displace_chance) {
                let spots: Vec<Coord> = c
                    .around()
                    .filter(|n| layout.grid.get(*n).is_some_and(|t| t.walkable() && t != Terrain::Doorway) && !layout.has_object(*n))
                    .collect();
                if !spots.is_empty() {
                    at = spots[stream.index(spots.len())];
                }
            }
            layout.place(at, ObjectKind::Rubble, false);
        }
        layout.buildings[b].decay_applied = true;
    }
}

/// Per-tile toy chance in houses.
pub fn toy_chance(cfg: &RenderConfig, history: &VillageHistory) -> f64 {
    (cfg.toy_chance_per_birth_rate * history.birth_rate() * (1.0 + history.growth().max(0.0))).clamp(0.0, cfg.toy_max_chance)
}

/// Per-tile predator skeleton chance in every building.
pub fn predator_chance(cfg: &RenderConfig, history: &VillageHistory) -> f64 {
    (cfg.predator_base + cfg.predator_per_fauna * history.final_eco.hostile_fauna.fraction()).clamp(0.0, 1.0)
}

pub fn populate_items(history: &VillageHistory, cfg: &RenderConfig, stream: &mut RandomStream, layout: &mut VillageLayout) {
    let failed = history.crops_failed();
    let toys = toy_chance(cfg, history);
    let predators = predator_chance(cfg, history);
    let sacred = history.final_society.culture.sacred_number;
    for b in 0..layout.buildings.len() {
        let fp = layout.buildings[b].clone();
        let mut table: Vec<(ObjectKind, f64)> = match fp.kind {
            BuildingKind::House => {
                let mut t: Vec<(ObjectKind, f64)> = cfg.house_items.iter().map(|r| (r.kind, r.chance)).collect();
                t.push((ObjectKind::Toy, toys));
                t.push((ObjectKind::Perfume, cfg.perfume_chance));
                t
            }
            BuildingKind::Barn => cfg.barn_items.iter().map(|r| (r.kind, r.chance)).collect(),
            BuildingKind::Field => cfg
                .field_items
                .iter()
                .map(|r| {
                    let scale = match (failed, r.kind) {
                        (true, ObjectKind::Crop) => cfg.crop_failure_multiplier,
                        (true, ObjectKind::Weed) => cfg.weed_failure_multiplier,
                        _ => 1.0,
                    };
                    (r.kind, (r.chance * scale).clamp(0.0, 1.0))
                })
                .collect(),
            BuildingKind::WorshipHall => Vec::new(),
            BuildingKind::Statue => continue,
        };
        table.push((ObjectKind::PredatorSkeleton, predators));
        let interior: Vec<Coord> = fp.interior().tiles().collect();
        for c in interior {
            if layout.has_object(c) || !layout.grid.terrain(c).walkable() {
                continue;
            }
            for &(kind, p) in &table {
                if stream.chance(p) {
                    layout.place(c, kind, false);
                    if kind == ObjectKind::Chair {
                        layout.grid.entities.last_mut().expect("just placed").leg_count = Some(sacred);
                    }
                    break;
                }
            }
        }
    }
}

/// Marker bindings for a village: craft material, flower, sacred number and the dream engraving.
pub fn village_context(history: &VillageHistory) -> DynamicContext {
    let culture = history.final_society.culture;
    let mut ctx = DynamicContext::new();
    let binds = [
        ("MATERIAL", culture.craft_material.word().to_string()),
        ("FLOWER", culture.cultivated_flower.word().to_string()),
        ("SACREDNUMBER", culture.sacred_number.to_string()),
        ("DREAMENGRAVING", dream_engraving(history.ending.kind).to_string()),
    ];
    for (k, v) in binds {
        ctx.bind(k, v).expect("static marker names and text");
    }
    ctx
}

fn describe(layout: &mut VillageLayout, ctx: &DynamicContext, stream: &mut RandomStream) -> Result<(), GenerationError> {
    let grammar = &content().village;
    for o in &mut layout.grid.entities {
        o.description = render(grammar, &o.description_key, ctx, stream)?;
    }
    Ok(())
}

/// Every interior tile of every building, and the spawn, in one passable component.
pub fn spawn_connected(grid: &TileWorld, buildings: &[BuildingFootprint]) -> bool {
    let passable = grid.passable_mask();
    let seen = grid.flood(grid.spawn, &passable);
    if !seen[grid.idx(grid.spawn)] {
        return false;
    }
    buildings
        .iter()
        .filter(|b| b.kind != BuildingKind::Statue)
        .flat_map(|b| b.interior().tiles().collect::<Vec<_>>())
        .all(|c| !passable[grid.idx(c)] || seen[grid.idx(c)])
}

fn attempt(history: &VillageHistory, seed: WorldSeed, cfg: &RenderConfig, k: u32) -> Result<VillageLayout, GenerationError> {
    let mut layout = VillageLayout::empty();
    place_water(history, cfg, &mut stage(seed, &format!("village.water/{k}")), &mut layout);
    place_fixed_features(cfg, &mut stage(seed, &format!("village.features/{k}")), &mut layout)?;
    grow_roads(cfg, &mut stage(seed, &format!("village.roads/{k}")), &mut layout)?;
    apply_decay(history, cfg, &mut stage(seed, &format!("village.decay/{k}")), &mut layout);
    populate_items(history, cfg, &mut stage(seed, &format!("village.items/{k}")), &mut layout);
    if !spawn_connected(&layout.grid, &layout.buildings) {
        return Err(GenerationError::PlacementExhausted { stage: "village.connectivity", attempts: 1 });
    }
    Ok(layout)
}

pub fn render_village(history: &VillageHistory, seed: WorldSeed, config: &GenConfig) -> Result<RenderedVillage, GenerationError> {
    config.render.validate()?;
    let cfg = &config.render;
    let ctx = village_context(history);
    for k in 0..cfg.placement_retries {
        let Ok(mut layout) = attempt(history, seed, cfg, k) else {
            continue;
        };
        describe(&mut layout, &ctx, &mut stage(seed, "village.text"))?;
        return Ok(RenderedVillage {
            world: layout.grid,
            buildings: layout.buildings,
            plaque: layout.plaque,
            main_road: layout.main_road,
            roads_added: layout.roads_added,
            lakes: layout.lakes,
            destroyed_walls: layout.destroyed_walls,
            bindings: ctx.bindings().clone(),
            attempt: k,
        });
    }
    Err(GenerationError::PlacementExhausted { stage: "village.render", attempts: cfg.placement_retries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::village::run_village;

    fn history(seed: u64) -> VillageHistory {
        run_village(WorldSeed(seed), &GenConfig::default()).unwrap()
    }

    #[test]
    fn lake_sites_avoid_centre_and_each_other() {
        let sites = lake_sites();
        assert_eq!(sites.len(), 16);
        let centre = Rect::new(30, 30, 40, 40);
        for (i, a) in sites.iter().enumerate() {
            assert!(!a.intersects(&centre));
            for b in &sites[i + 1..] {
                assert!(!a.intersects(b));
            }
        }
    }

    #[test]
    fn world_basics() {
        for seed in 0..40 {
            let h = history(seed);
            let v = render_village(&h, WorldSeed(seed), &GenConfig::default()).unwrap();
            let w = &v.world;
            assert_eq!((w.width, w.height), (100, 100));
            assert!(w.entities.iter().all(|o| w.in_bounds(o.position)));
            assert!(w.terrain(w.spawn).walkable());
            assert!(!w.entities.iter().any(|o| o.blocking && o.position == w.spawn));
            assert_eq!(w.entities.iter().filter(|o| o.kind == ObjectKind::Plaque).count(), 1);
            let halls: Vec<&BuildingFootprint> = v.buildings.iter().filter(|b| b.kind == BuildingKind::WorshipHall).collect();
            assert_eq!(halls.len(), 1);
            assert_eq!((halls[0].rect.w, halls[0].rect.h), (20, 10));
            assert!(halls[0].rect.chebyshev_to(v.plaque) <= 15);
            assert!(w.entities.iter().filter(|o| o.kind == ObjectKind::Pew).count() >= 6);
            assert_eq!(w.entities.iter().filter(|o| o.kind == ObjectKind::Altar).count(), 1);
            assert!(spawn_connected(w, &v.buildings));
            assert!(w.entities.iter().all(|o| !o.description.is_empty() && !o.description.contains('@') && !o.description.contains('#')));
        }
    }

    #[test]
    fn main_road_joins_hall_and_water() {
        for seed in 0..30 {
            let v = render_village(&history(seed), WorldSeed(seed), &GenConfig::default()).unwrap();
            let hall = v.buildings.iter().find(|b| b.kind == BuildingKind::WorshipHall).unwrap();
            let first = v.main_road[0];
            let last = *v.main_road.last().unwrap();
            assert!(first.orthogonal().any(|n| Some(n) == hall.door));
            assert!(last.orthogonal().any(|n| v.world.get(n) == Some(Terrain::Water)));
            for pair in v.main_road.windows(2) {
                assert_eq!(pair[0].manhattan(pair[1]), 1);
            }
        }
    }

    #[test]
    fn buildings_touch_roads() {
        for seed in 0..30 {
            let v = render_village(&history(seed), WorldSeed(seed), &GenConfig::default()).unwrap();
            for b in v.buildings.iter().filter(|b| matches!(b.kind, BuildingKind::House | BuildingKind::Barn | BuildingKind::Field)) {
                let door = b.door.unwrap();
                assert!(door.orthogonal().any(|n| v.world.get(n) == Some(Terrain::Road)), "seed {seed} {b:?}");
            }
        }
    }

    #[test]
    fn fragments_scatter_near_plaque() {
        let cfg = GenConfig::default();
        for seed in 0..100 {
            let v = render_village(&history(seed), WorldSeed(seed), &cfg).unwrap();
            let frags: Vec<&PlacedObject> = v.world.entities.iter().filter(|o| o.kind == ObjectKind::StatueFragment).collect();
            assert!((cfg.render.fragments.min as usize..=cfg.render.fragments.max as usize).contains(&frags.len()));
            assert!(frags.iter().all(|f| f.position.chebyshev(v.plaque) <= cfg.render.fragment_radius));
        }
    }

    #[test]
    fn water_table_floor_and_top() {
        let cfg = GenConfig::default();
        let mut h = history(3);
        h.final_eco.eco_health.value = h.final_eco.eco_health.max_cap;
        let v = render_village(&h, WorldSeed(3), &cfg).unwrap();
        let water = v.world.tiles.iter().filter(|t| **t == Terrain::Water).count() as u32;
        assert!(water >= cfg.render.large_water_min, "{water}");
        h.final_eco.eco_health.value = 0.0;
        let v = render_village(&h, WorldSeed(3), &cfg).unwrap();
        let water = v.world.tiles.iter().filter(|t| **t == Terrain::Water).count() as u32;
        let floor = cfg.render.water_table[0];
        assert_eq!((v.lakes, water), (floor.lakes, floor.lakes * floor.lake_tiles));
    }

    #[test]
    fn cold_world_keeps_every_wall() {
        let cfg = GenConfig::default();
        let mut h = history(5);
        h.final_eco.temperature.value = h.final_eco.temperature.min_cap;
        let v = render_village(&h, WorldSeed(5), &cfg).unwrap();
        assert_eq!(v.destroyed_walls, 0);
        assert_eq!(v.world.entities.iter().filter(|o| o.kind == ObjectKind::Rubble).count(), 0);
    }

    #[test]
    fn chairs_have_sacred_legs() {
        for seed in 0..30 {
            let h = history(seed);
            let v = render_village(&h, WorldSeed(seed), &GenConfig::default()).unwrap();
            for c in v.world.entities.iter().filter(|o| o.kind == ObjectKind::Chair) {
                assert_eq!(c.leg_count, Some(h.final_society.culture.sacred_number));
            }
        }
    }

    #[test]
    fn engraving_names_the_ending() {
        let h = history(8);
        let v = render_village(&h, WorldSeed(8), &GenConfig::default()).unwrap();
        let e = v.world.entities.iter().find(|o| o.kind == ObjectKind::Engraving).unwrap();
        assert!(e.description.contains(dream_engraving(h.ending.kind)));
    }

    #[test]
    fn rerender_is_identical() {
        let h = history(9);
        let a = render_village(&h, WorldSeed(9), &GenConfig::default()).unwrap();
        let b = render_village(&h, WorldSeed(9), &GenConfig::default()).unwrap();
        assert_eq!(a, b);
    }
}
