//! Room-bounded line of sight.

use crate::geom::{line, Coord};
use crate::tiles::{Terrain, TileWorld};

use super::Area;

pub fn opaque(t: Terrain) -> bool {
    matches!(t, Terrain::Wall)
}

/// True when no opaque tile lies strictly between `a` and `b` on the Bresenham line.
pub fn line_clear(grid: &TileWorld, a: Coord, b: Coord) -> bool {
    let pts = line(a, b);
    pts.iter().skip(1).take(pts.len().saturating_sub(2)).all(|p| !opaque(grid.terrain(*p)))
}

/// `from` sees `to` when both share an area, `to` is within `radius` and the line is clear.
pub fn can_see(grid: &TileWorld, areas: &[Area], from: Coord, to: Coord, radius: i32) -> bool {
    if !grid.in_bounds(from) || !grid.in_bounds(to) {
        return false;
    }
    let a = areas[grid.idx(from)];
    if a == Area::Structure || a != areas[grid.idx(to)] {
        return false;
    }
    from.dist2(to) <= i64::from(radius) * i64::from(radius) && line_clear(grid, from, to)
}
