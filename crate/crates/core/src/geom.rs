//! Grid coordinates. `y` grows southward.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[i32; 2]", into = "[i32; 2]")]
pub struct Coord {
    pub x: i32,
    pub y: i32,
}

impl From<[i32; 2]> for Coord {
    fn from(v: [i32; 2]) -> Self {
        Coord { x: v[0], y: v[1] }
    }
}

impl From<Coord> for [i32; 2] {
    fn from(c: Coord) -> Self {
        [c.x, c.y]
    }
}

pub const fn xy(x: i32, y: i32) -> Coord {
    Coord { x, y }
}

pub const ORTHOGONAL: [(i32, i32); 4] = [(0, -1), (1, 0), (0, 1), (-1, 0)];
pub const NEIGHBORS8: [(i32, i32); 8] =
    [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

impl Coord {
    pub fn offset(self, dx: i32, dy: i32) -> Coord {
        xy(self.x + dx, self.y + dy)
    }

    pub fn manhattan(self, other: Coord) -> i32 {
        (self.x - other.x).abs() + (self.y - other.y).abs()
    }

    pub fn chebyshev(self, other: Coord) -> i32 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }

    pub fn dist2(self, other: Coord) -> i64 {
        let dx = (self.x - other.x) as i64;
        let dy = (self.y - other.y) as i64;
        dx * dx + dy * dy
    }

    pub fn orthogonal(self) -> impl Iterator<Item = Coord> {
        ORTHOGONAL.iter().map(move |&(dx, dy)| self.offset(dx, dy))
    }

    pub fn around(self) -> impl Iterator<Item = Coord> {
        NEIGHBORS8.iter().map(move |&(dx, dy)| self.offset(dx, dy))
    }
}

/// Axis-aligned tile rectangle, inclusive of `x..x+w` and `y..y+h` (exclusive ends).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x: i32,
    pub y: i32,
    pub w: i32,
    pub h: i32,
}

impl Rect {
    pub const fn new(x: i32, y: i32, w: i32, h: i32) -> Rect {
        Rect { x, y, w, h }
    }

    pub fn right(&self) -> i32 {
        self.x + self.w - 1
    }

    pub fn bottom(&self) -> i32 {
        self.y + self.h - 1
    }

    pub fn contains(&self, c: Coord) -> bool {
        c.x >= self.x && c.x < self.x + self.w && c.y >= self.y && c.y < self.y + self.h
    }

    pub fn intersects(&self, other: &Rect) -> bool {
        self.x < other.x + other.w
            && other.x < self.x + self.w
            && self.y < other.y + other.h
            && other.y < self.y + self.h
    }

    pub fn expand(&self, by: i32) -> Rect {
        Rect::new(self.x - by, self.y - by, self.w + 2 * by, self.h + 2 * by)
    }

    /// Center in doubled coordinates, so ties compare exactly.
    pub fn center2(&self) -> (i32, i32) {
        (2 * self.x + self.w - 1, 2 * self.y + self.h - 1)
    }

    pub fn center(&self) -> Coord {
        xy(self.x + (self.w - 1) / 2, self.y + (self.h - 1) / 2)
    }

    pub fn tiles(&self) -> impl Iterator<Item = Coord> + '_ {
        (self.y..self.y + self.h).flat_map(move |y| (self.x..self.x + self.w).map(move |x| xy(x, y)))
    }

    /// Tiles on the outer ring of the rectangle.
    pub fn border(&self) -> impl Iterator<Item = Coord> + '_ {
        self.tiles()
            .filter(move |c| c.x == self.x || c.y == self.y || c.x == self.right() || c.y == self.bottom())
    }

    pub fn area(&self) -> i32 {
        self.w * self.h
    }

    /// Chebyshev distance from the rectangle to a point (0 if inside).
    pub fn chebyshev_to(&self, c: Coord) -> i32 {
        let dx = (self.x - c.x).max(c.x - self.right()).max(0);
        let dy = (self.y - c.y).max(c.y - self.bottom()).max(0);
        dx.max(dy)
    }
}

/// Cardinal movement direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dir {
    North,
    East,
    South,
    West,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::North, Dir::East, Dir::South, Dir::West];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Dir::North => (0, -1),
            Dir::East => (1, 0),
            Dir::South => (0, 1),
            Dir::West => (-1, 0),
        }
    }

    pub fn parse(s: &str) -> Option<Dir> {
        match s.to_ascii_lowercase().as_str() {
            "n" | "north" | "w" | "up" => Some(Dir::North),
            "e" | "east" | "d" | "right" => Some(Dir::East),
            "s" | "south" | "down" => Some(Dir::South),
            "west" | "a" | "left" => Some(Dir::West),
            _ => None,
        }
    }
}

/// Torch aim: one of the eight compass directions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Facing {
    pub dx: i32,
    pub dy: i32,
}

impl Facing {
    pub fn new(dx: i32, dy: i32) -> Option<Facing> {
        let ok = (-1..=1).contains(&dx) && (-1..=1).contains(&dy) && (dx, dy) != (0, 0);
        ok.then_some(Facing { dx, dy })
    }

    pub fn all() -> [Facing; 8] {
        NEIGHBORS8.map(|(dx, dy)| Facing { dx, dy })
    }

    pub fn reversed(self) -> Facing {
        Facing { dx: -self.dx, dy: -self.dy }
    }

    pub fn from_dir(d: Dir) -> Facing {
        let (dx, dy) = d.delta();
        Facing { dx, dy }
    }

    /// True when the angle between `v` and this facing is at most 45 degrees.
    /// Exact integer test: dot >= 0 and 2 dot^2 >= |v|^2 |f|^2.
    pub fn within_half_right_angle(self, vx: i32, vy: i32) -> bool {
        let dot = (vx * self.dx + vy * self.dy) as i64;
        if dot < 0 {
            return false;
        }
        let v2 = (vx * vx + vy * vy) as i64;
        let f2 = (self.dx * self.dx + self.dy * self.dy) as i64;
        2 * dot * dot >= v2 * f2
    }
}

/// Bresenham line from `a` to `b`, inclusive of both ends.
pub fn line(a: Coord, b: Coord) -> Vec<Coord> {
    let mut out = Vec::new();
    let (mut x, mut y) = (a.x, a.y);
    let dx = (b.x - a.x).abs();
    let dy = -(b.y - a.y).abs();
    let sx = if a.x < b.x { 1 } else { -1 };
    let sy = if a.y < b.y { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        out.push(xy(x, y));
        if x == b.x && y == b.y {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rect_geometry() {
        let r = Rect::new(2, 3, 4, 2);
        assert_eq!(r.right(), 5);
        assert_eq!(r.bottom(), 4);
        assert!(r.contains(xy(5, 4)));
        assert!(!r.contains(xy(6, 4)));
        assert_eq!(r.tiles().count(), 8);
        assert_eq!(r.border().count(), 8);
        assert_eq!(Rect::new(0, 0, 4, 4).border().count(), 12);
        assert_eq!(r.chebyshev_to(xy(9, 3)), 4);
        assert_eq!(r.chebyshev_to(xy(3, 3)), 0);
    }

    #[test]
    fn facing_cone_test_is_exact_at_45_degrees() {
        let east = Facing::new(1, 0).unwrap();
        assert!(east.within_half_right_angle(3, 3));
        assert!(east.within_half_right_angle(3, -3));
        assert!(!east.within_half_right_angle(3, 4));
        assert!(!east.within_half_right_angle(-1, 0));
        let ne = Facing::new(1, -1).unwrap();
        assert!(ne.within_half_right_angle(5, 0));
        assert!(ne.within_half_right_angle(0, -5));
        assert!(!ne.within_half_right_angle(-1, -5));
    }

    #[test]
    fn line_endpoints() {
        let l = line(xy(0, 0), xy(5, 2));
        assert_eq!(l.first(), Some(&xy(0, 0)));
        assert_eq!(l.last(), Some(&xy(5, 2)));
        assert_eq!(l.len(), 6);
    }
}
