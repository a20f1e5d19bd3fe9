//! Exact segment-vs-rectangle collision tests (slab clipping) plus polyline
//! helpers. Exactness matters: a path reported free must stay free under
//! any finer point-sampled oracle.

use crate::types::{Region, Vec2};

/// True iff the closed segment a-b intersects the rectangle.
pub fn segment_hits_rect(a: &Vec2, b: &Vec2, rect: &Region) -> bool {
    // Liang-Barsky clipping of the parametric segment against the slab.
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let mut t0: f64 = 0.0;
    let mut t1: f64 = 1.0;
    let checks = [
        (-dx, a.x - rect.x_min),
        (dx, rect.x_max - a.x),
        (-dy, a.y - rect.y_min),
        (dy, rect.y_max - a.y),
    ];
    for (p, q) in checks {
        if p.abs() < 1e-15 {
            if q < 0.0 {
                return false;
            }
            continue;
        }
        let r = q / p;
        if p < 0.0 {
            if r > t1 {
                return false;
            }
            if r > t0 {
                t0 = r;
            }
        } else {
            if r < t0 {
                return false;
            }
            if r < t1 {
                t1 = r;
            }
        }
    }
    t0 <= t1
}

/// True iff the segment stays clear of every rectangle.
pub fn segment_is_free(a: &Vec2, b: &Vec2, obstacles: &[Region]) -> bool {
    obstacles.iter().all(|o| !segment_hits_rect(a, b, o))
}

/// True iff every consecutive waypoint pair stays clear of every rectangle.
pub fn polyline_is_free(waypoints: &[Vec2], obstacles: &[Region]) -> bool {
    if waypoints.len() == 1 {
        return obstacles.iter().all(|o| !o.contains(&waypoints[0]));
    }
    waypoints
        .windows(2)
        .all(|w| segment_is_free(&w[0], &w[1], obstacles))
}

/// Point-sampled collision check at the given resolution. Test suites use
/// this as a brute-force oracle against the exact test above.
pub fn segment_hits_rect_sampled(a: &Vec2, b: &Vec2, rect: &Region, resolution: f64) -> bool {
    let len = a.dist(b);
    let steps = (len / resolution).ceil().max(1.0) as usize;
    for i in 0..=steps {
        let t = i as f64 / steps as f64;
        let p = Vec2::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t);
        if rect.contains(&p) {
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_segment_hits() {
        let rect = Region::new(1.0, 1.0, 2.0, 2.0);
        assert!(segment_hits_rect(
            &Vec2::new(0.0, 1.5),
            &Vec2::new(3.0, 1.5),
            &rect
        ));
    }

    #[test]
    fn outside_segment_misses() {
        let rect = Region::new(1.0, 1.0, 2.0, 2.0);
        assert!(!segment_hits_rect(
            &Vec2::new(0.0, 0.0),
            &Vec2::new(3.0, 0.5),
            &rect
        ));
    }

    #[test]
    fn contained_segment_hits() {
        let rect = Region::new(0.0, 0.0, 10.0, 10.0);
        assert!(segment_hits_rect(
            &Vec2::new(1.0, 1.0),
            &Vec2::new(2.0, 2.0),
            &rect
        ));
    }

    #[test]
    fn degenerate_segment_is_a_point_test() {
        let rect = Region::new(1.0, 1.0, 2.0, 2.0);
        assert!(segment_hits_rect(
            &Vec2::new(1.5, 1.5),
            &Vec2::new(1.5, 1.5),
            &rect
        ));
        assert!(!segment_hits_rect(
            &Vec2::new(0.5, 0.5),
            &Vec2::new(0.5, 0.5),
            &rect
        ));
    }
}
