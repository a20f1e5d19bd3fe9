//! Uniform-grid A* for base motion, with shortcut smoothing against the
//! exact collision test.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::collide::{segment_is_free, polyline_is_free};
use crate::types::{Region, Vec2};

pub struct Grid {
    pub res: f64,
    pub origin: Vec2,
    pub width: usize,
    pub height: usize,
    blocked: Vec<bool>,
}

impl Grid {
    /// Rasterizes the workspace: a cell is blocked when its center lies in
    /// an inflated obstacle.
    pub fn new(bounds: &Region, obstacles: &[Region], res: f64, inflate: f64) -> Grid {
        let width = (bounds.width() / res).ceil() as usize + 1;
        let height = (bounds.height() / res).ceil() as usize + 1;
        let origin = Vec2::new(bounds.x_min, bounds.y_min);
        let inflated: Vec<Region> = obstacles.iter().map(|o| o.inflate(inflate)).collect();
        let mut blocked = vec![false; width * height];
        for gy in 0..height {
            for gx in 0..width {
                let p = Vec2::new(origin.x + gx as f64 * res, origin.y + gy as f64 * res);
                if inflated.iter().any(|o| o.contains(&p)) {
                    blocked[gy * width + gx] = true;
                }
            }
        }
        Grid {
            res,
            origin,
            width,
            height,
            blocked,
        }
    }

    fn cell_of(&self, p: &Vec2) -> (usize, usize) {
        let gx = ((p.x - self.origin.x) / self.res).round().max(0.0) as usize;
        let gy = ((p.y - self.origin.y) / self.res).round().max(0.0) as usize;
        (gx.min(self.width - 1), gy.min(self.height - 1))
    }

    fn center(&self, gx: usize, gy: usize) -> Vec2 {
        Vec2::new(
            self.origin.x + gx as f64 * self.res,
            self.origin.y + gy as f64 * self.res,
        )
    }

    fn is_blocked(&self, gx: usize, gy: usize) -> bool {
        self.blocked[gy * self.width + gx]
    }
}

#[derive(PartialEq)]
struct Node {
    f: f64,
    g: f64,
    idx: usize,
}

impl Eq for Node {}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on f, then g, then index for determinism
        other
            .f
            .partial_cmp(&self.f)
            .unwrap_or(Ordering::Equal)
            .then(other.g.partial_cmp(&self.g).unwrap_or(Ordering::Equal))
            .then(other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Plans a collision-free polyline from `start` to `goal`. Straight
/// connections short-circuit the search; otherwise 8-connected A* over the
/// grid followed by shortcut smoothing.
pub fn plan_path(
    bounds: &Region,
    obstacles: &[Region],
    start: Vec2,
    goal: Vec2,
    res: f64,
    inflate: f64,
) -> Option<Vec<Vec2>> {
    if start.dist(&goal) < 1e-9 {
        return Some(vec![start]);
    }
    let inflated: Vec<Region> = obstacles.iter().map(|o| o.inflate(inflate)).collect();
    if segment_is_free(&start, &goal, &inflated) {
        return Some(vec![start, goal]);
    }

    let grid = Grid::new(bounds, obstacles, res, inflate);
    let (sx, sy) = grid.cell_of(&start);
    let (gx, gy) = grid.cell_of(&goal);
    if grid.is_blocked(sx, sy) || grid.is_blocked(gx, gy) {
        return None;
    }
    let start_idx = sy * grid.width + sx;
    let goal_idx = gy * grid.width + gx;

    let n = grid.width * grid.height;
    let mut best_g = vec![f64::INFINITY; n];
    let mut came: Vec<usize> = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    best_g[start_idx] = 0.0;
    heap.push(Node {
        f: 0.0,
        g: 0.0,
        idx: start_idx,
    });

    let goal_center = grid.center(gx, gy);
    const DIRS: [(isize, isize, f64); 8] = [
        (1, 0, 1.0),
        (-1, 0, 1.0),
        (0, 1, 1.0),
        (0, -1, 1.0),
        (1, 1, std::f64::consts::SQRT_2),
        (1, -1, std::f64::consts::SQRT_2),
        (-1, 1, std::f64::consts::SQRT_2),
        (-1, -1, std::f64::consts::SQRT_2),
    ];

    let mut found = false;
    while let Some(node) = heap.pop() {
        if node.idx == goal_idx {
            found = true;
            break;
        }
        if node.g > best_g[node.idx] {
            continue;
        }
        let cx = (node.idx % grid.width) as isize;
        let cy = (node.idx / grid.width) as isize;
        for (dx, dy, cost) in DIRS {
            let nx = cx + dx;
            let ny = cy + dy;
            if nx < 0 || ny < 0 || nx as usize >= grid.width || ny as usize >= grid.height {
                continue;
            }
            let (nxu, nyu) = (nx as usize, ny as usize);
            if grid.is_blocked(nxu, nyu) {
                continue;
            }
            // forbid corner cutting on diagonal moves
            if dx != 0 && dy != 0 {
                if grid.is_blocked(nxu, cy as usize) || grid.is_blocked(cx as usize, nyu) {
                    continue;
                }
            }
            let nidx = nyu * grid.width + nxu;
            let g = node.g + cost * grid.res;
            if g + 1e-12 < best_g[nidx] {
                best_g[nidx] = g;
                came[nidx] = node.idx;
                let h = grid.center(nxu, nyu).dist(&goal_center);
                heap.push(Node { f: g + h, g, idx: nidx });
            }
        }
    }
    if !found {
        return None;
    }

    let mut cells = vec![goal_idx];
    let mut cur = goal_idx;
    while cur != start_idx {
        cur = came[cur];
        cells.push(cur);
    }
    cells.reverse();

    let mut pts: Vec<Vec2> = Vec::with_capacity(cells.len() + 2);
    pts.push(start);
    for idx in cells {
        pts.push(grid.center(idx % grid.width, idx / grid.width));
    }
    pts.push(goal);

    let smoothed = shortcut(&pts, &inflated);
    debug_assert!(polyline_is_free(&smoothed, &inflated));
    Some(smoothed)
}

/// Greedy shortcutting: from each waypoint, jump to the farthest later
/// waypoint reachable by a free straight segment.
fn shortcut(pts: &[Vec2], obstacles: &[Region]) -> Vec<Vec2> {
    let mut out = vec![pts[0]];
    let mut i = 0;
    while i + 1 < pts.len() {
        let mut j = pts.len() - 1;
        while j > i + 1 && !segment_is_free(&pts[i], &pts[j], obstacles) {
            j -= 1;
        }
        out.push(pts[j]);
        i = j;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_space_is_a_straight_segment() {
        let bounds = Region::new(0.0, 0.0, 4.0, 3.0);
        let path = plan_path(
            &bounds,
            &[],
            Vec2::new(0.5, 0.5),
            Vec2::new(3.5, 2.5),
            0.05,
            0.02,
        )
        .unwrap();
        assert_eq!(path.len(), 2);
    }

    #[test]
    fn identity_is_one_waypoint() {
        let bounds = Region::new(0.0, 0.0, 4.0, 3.0);
        let p = Vec2::new(1.0, 1.0);
        let path = plan_path(&bounds, &[], p, p, 0.05, 0.02).unwrap();
        assert_eq!(path, vec![p]);
    }

    #[test]
    fn blocking_wall_forces_a_detour() {
        let bounds = Region::new(0.0, 0.0, 4.0, 3.0);
        let wall = Region::new(1.8, 0.0, 2.2, 2.5);
        let path = plan_path(
            &bounds,
            &[wall],
            Vec2::new(0.5, 1.0),
            Vec2::new(3.5, 1.0),
            0.05,
            0.02,
        )
        .unwrap();
        assert!(path.len() > 2);
        assert!(polyline_is_free(&path, &[wall.inflate(0.02)]));
    }

    #[test]
    fn fully_walled_goal_is_unreachable() {
        let bounds = Region::new(0.0, 0.0, 4.0, 3.0);
        let walls = [
            Region::new(2.5, 0.0, 2.6, 3.0), // full-height wall
        ];
        assert!(plan_path(
            &bounds,
            &walls,
            Vec2::new(0.5, 1.0),
            Vec2::new(3.5, 1.0),
            0.05,
            0.02
        )
        .is_none());
    }
}
