//! Grid A*: 4-neighbourhood, Manhattan heuristic, unit step cost.
//!
//! The open set is ordered lexicographically by `(f, h, x, y)`, so every
//! implementation expands nodes in the same order and returns the same path.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::geom::{xy, Coord};

/// Shortest path from `start` to `goal`, excluding `start` and including `goal`.
/// `passable` is consulted for every tile except `start`. Returns `None` when
/// the goal is unreachable; `Some(vec![])` when `start == goal`.
pub fn astar(width: i32, height: i32, start: Coord, goal: Coord, passable: impl Fn(Coord) -> bool) -> Option<Vec<Coord>> {
    if start == goal {
        return Some(Vec::new());
    }
    let in_bounds = |c: Coord| c.x >= 0 && c.y >= 0 && c.x < width && c.y < height;
    if !in_bounds(goal) || !passable(goal) {
        return None;
    }
    let idx = |c: Coord| (c.y * width + c.x) as usize;
    let n = (width * height) as usize;
    let mut g = vec![u32::MAX; n];
    let mut parent = vec![u32::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    let h0 = start.manhattan(goal) as u32;
    g[idx(start)] = 0;
    open.push(Reverse((h0, h0, start.x, start.y)));
    while let Some(Reverse((_, _, x, y))) = open.pop() {
        let c = xy(x, y);
        let ci = idx(c);
        if closed[ci] {
            continue;
        }
        closed[ci] = true;
        if c == goal {
            let mut path = vec![goal];
            let mut cur = ci;
            while parent[cur] != u32::MAX {
                cur = parent[cur] as usize;
                let p = xy(cur as i32 % width, cur as i32 / width);
                if p == start {
                    break;
                }
                path.push(p);
            }
            path.reverse();
            return Some(path);
        }
        for nb in c.orthogonal() {
            if !in_bounds(nb) || !passable(nb) {
                continue;
            }
            let ni = idx(nb);
            let cost = g[ci] + 1;
            if closed[ni] || cost >= g[ni] {
                continue;
            }
            g[ni] = cost;
            parent[ni] = ci as u32;
            let h = nb.manhattan(goal) as u32;
            open.push(Reverse((cost + h, h, nb.x, nb.y)));
        }
    }
    None
}
