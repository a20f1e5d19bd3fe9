//! Conditional samplers over a scene view: base motion, grasps, stable
//! placement poses, approach kinematics, near-region configurations and
//! perception viewpoints.
//!
//! Every sampler enumerates a finite, deterministic candidate list from
//! `(inputs, seed)`; each candidate satisfies the sampler's constraint
//! relation `C` by construction. Exhaustion is therefore a finite, testable
//! event: once the list is consumed the sampler is done.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::collide::{polyline_is_free, segment_is_free};
use crate::grid::plan_path;
use crate::types::{
    norm_angle, BaseConfig, Grasp, GraspClass, ObjectShape, Pose, Region, Traj, Vec2,
};

/// Sampler calibration. Capacities bound how many candidates a cursor can
/// yield before exhaustion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeomConfig {
    pub grid_res: f64,
    pub collide_res: f64,
    pub base_inflate: f64,
    pub standoff: f64,
    pub view_standoff: f64,
    pub approach_standoff: f64,
    pub endpoint_tol: f64,
    pub cap_grasp: usize,
    pub cap_pose: usize,
    pub cap_ik: usize,
    pub cap_base_motion: usize,
    pub cap_near_conf: usize,
    pub cap_viewpoint: usize,
}

impl Default for GeomConfig {
    fn default() -> Self {
        GeomConfig {
            grid_res: 0.05,
            collide_res: 0.02,
            base_inflate: 0.02,
            standoff: 0.3,
            view_standoff: 0.35,
            approach_standoff: 0.15,
            endpoint_tol: 0.08,
            cap_grasp: 8,
            cap_pose: 32,
            cap_ik: 16,
            cap_base_motion: 1,
            cap_near_conf: 8,
            cap_viewpoint: 8,
        }
    }
}

/// A named placement region; children are regions nested inside it (a bowl
/// on a table), excluded when sampling placements on the parent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedRegion {
    pub rect: Region,
    pub parent: Option<String>,
}

/// Immutable geometric snapshot a sampler works against: workspace bounds,
/// base-motion obstacles, named regions, and currently placed objects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneView {
    pub bounds: Region,
    pub obstacles: Vec<Region>,
    pub regions: BTreeMap<String, NamedRegion>,
    /// (object id, footprint shape, pose) for every object with a pose.
    pub placed: Vec<(String, ObjectShape, Pose)>,
    pub reach: f64,
    pub cfg: GeomConfig,
}

impl SceneView {
    pub fn region(&self, name: &str) -> Option<&Region> {
        self.regions.get(name).map(|n| &n.rect)
    }

    fn children_of(&self, name: &str) -> Vec<Region> {
        self.regions
            .values()
            .filter(|r| r.parent.as_deref() == Some(name))
            .map(|r| r.rect)
            .collect()
    }

    fn placed_except(&self, skip: Option<&str>) -> Vec<(ObjectShape, Pose)> {
        self.placed
            .iter()
            .filter(|(id, _, _)| Some(id.as_str()) != skip)
            .map(|(_, s, p)| (*s, *p))
            .collect()
    }
}

/// Radical-inverse Halton value in [0, 1).
fn halton(base: u64, index: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let mut i = index;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

fn halton_offset(seed: u64) -> u64 {
    // leap into the sequence; keep offsets modest so low-discrepancy holds
    (seed % 4096) + 1
}

// ---------------------------------------------------------------------------
// base motion
// ---------------------------------------------------------------------------

/// Collision-free polyline from `q1` to `q2`, or none. Capacity is one path
/// per query: the constraint space of a point base on a static map has a
/// single useful answer.
pub fn base_motion_candidates(view: &SceneView, q1: &BaseConfig, q2: &BaseConfig) -> Vec<Traj> {
    if q1.point().dist(&q2.point()) < 1e-9 {
        return vec![Traj::identity(q1.point())];
    }
    match plan_path(
        &view.bounds,
        &view.obstacles,
        q1.point(),
        q2.point(),
        view.cfg.grid_res,
        view.cfg.base_inflate,
    ) {
        Some(waypoints) => vec![Traj { waypoints }],
        None => Vec::new(),
    }
}

/// The constraint relation certified by `(BaseMotion q1 t q2)`: endpoints
/// match within tolerance and the polyline clears every inflated obstacle.
pub fn check_base_motion(view: &SceneView, q1: &BaseConfig, t: &Traj, q2: &BaseConfig) -> bool {
    let tol = view.cfg.endpoint_tol;
    if t.waypoints.is_empty() {
        return false;
    }
    if t.start().dist(&q1.point()) > tol || t.end().dist(&q2.point()) > tol {
        return false;
    }
    let inflated: Vec<Region> = view
        .obstacles
        .iter()
        .map(|o| o.inflate(view.cfg.base_inflate))
        .collect();
    polyline_is_free(&t.waypoints, &inflated)
}

// ---------------------------------------------------------------------------
// grasps
// ---------------------------------------------------------------------------

/// Enumerates grasp candidates: the two classes with small seeded lateral
/// offsets. Candidate 0 is always a top grasp with zero offset.
pub fn grasp_candidates(shape: &ObjectShape, seed: u64, capacity: usize) -> Vec<Grasp> {
    let off = halton_offset(seed);
    let max_offset = 0.6 * shape.bound_radius();
    let mut out = Vec::with_capacity(capacity);
    for i in 0..capacity {
        let (class, offset) = match i {
            0 => (GraspClass::Top, 0.0),
            1 => (GraspClass::Forward, 0.0),
            _ => {
                let class = if i % 2 == 0 {
                    GraspClass::Top
                } else {
                    GraspClass::Forward
                };
                let u = halton(2, off + (i as u64 / 2)); // same u for the class pair
                let offset = (u * 2.0 - 1.0) * max_offset;
                (class, offset)
            }
        };
        out.push(Grasp { class, offset });
    }
    out
}

pub fn check_grasp(shape: &ObjectShape, grasp: &Grasp) -> bool {
    grasp.offset.abs() <= shape.bound_radius()
}

// ---------------------------------------------------------------------------
// stable placement poses
// ---------------------------------------------------------------------------

/// Enumerates poses inside `region` (shrunk by the object footprint) that
/// overlap neither placed objects nor child regions. `skip_object` excludes
/// the object being re-placed from the overlap check.
pub fn stable_pose_candidates(
    view: &SceneView,
    skip_object: Option<&str>,
    shape: &ObjectShape,
    region_name: &str,
    seed: u64,
) -> Vec<Pose> {
    let Some(region) = view.region(region_name) else {
        return Vec::new();
    };
    let margin = shape.half_extent();
    let Some(inner) = region.shrink(margin) else {
        return Vec::new(); // object does not fit at all
    };
    let placed = view.placed_except(skip_object);
    let holes = view.children_of(region_name);
    let cap = view.cfg.cap_pose;
    let off = halton_offset(seed);

    let degenerate = inner.width() < 1e-9 && inner.height() < 1e-9;
    let mut out = Vec::new();
    let raw_count = if degenerate { 1 } else { cap as u64 };
    for i in 0..raw_count {
        let p = if degenerate {
            inner.center()
        } else {
            Vec2::new(
                inner.x_min + halton(2, off + i) * inner.width(),
                inner.y_min + halton(3, off + i) * inner.height(),
            )
        };
        let pose = Pose::new(p.x, p.y, 0.0);
        if check_stable_pose_against(shape, &pose, region, &holes, &placed) {
            out.push(pose);
        }
        if out.len() >= cap {
            break;
        }
    }
    out
}

fn check_stable_pose_against(
    shape: &ObjectShape,
    pose: &Pose,
    region: &Region,
    holes: &[Region],
    placed: &[(ObjectShape, Pose)],
) -> bool {
    let fp = shape.footprint(&pose.point());
    if fp.x_min < region.x_min - 1e-9
        || fp.y_min < region.y_min - 1e-9
        || fp.x_max > region.x_max + 1e-9
        || fp.y_max > region.y_max + 1e-9
    {
        return false;
    }
    if holes.iter().any(|h| h.overlaps(&fp)) {
        return false;
    }
    placed
        .iter()
        .all(|(s, p)| !s.footprint(&p.point()).overlaps(&fp))
}

/// The constraint relation certified by `(Stable o p r)`.
pub fn check_stable_pose(
    view: &SceneView,
    skip_object: Option<&str>,
    shape: &ObjectShape,
    pose: &Pose,
    region_name: &str,
) -> bool {
    let Some(region) = view.region(region_name) else {
        return false;
    };
    let holes = view.children_of(region_name);
    let placed = view.placed_except(skip_object);
    check_stable_pose_against(shape, pose, region, &holes, &placed)
}

// ---------------------------------------------------------------------------
// approach kinematics
// ---------------------------------------------------------------------------

/// Enumerates approach trajectories for grasping/releasing `shape` at `p`
/// with `grasp` while the base stands at `q`. Succeeds only within reach;
/// the approach segment must clear every other object footprint. Obstacles
/// here are object footprints, not furniture: the arm travels above
/// surfaces.
pub fn ik_candidates(
    view: &SceneView,
    target_object: Option<&str>,
    shape: &ObjectShape,
    p: &Pose,
    grasp: &Grasp,
    q: &BaseConfig,
    seed: u64,
) -> Vec<Traj> {
    if q.point().dist(&p.point()) > view.reach {
        return Vec::new();
    }
    let cap = view.cfg.cap_ik;
    let clearance = 0.005;
    let obstacles: Vec<Region> = view
        .placed_except(target_object)
        .iter()
        .map(|(s, op)| s.footprint(&op.point()).inflate(clearance))
        .collect();
    let off = halton_offset(seed);

    let base_dir = (q.point().y - p.y).atan2(q.point().x - p.x); // object -> base
    let (standoff, spread) = match grasp.class {
        // top grasps descend; the pre-point is a short wrist clearance hop
        GraspClass::Top => (0.02 + grasp.offset.abs(), 0.6),
        GraspClass::Forward => (
            view.cfg.approach_standoff + shape.bound_radius() + grasp.offset.abs(),
            2.4,
        ),
    };

    let mut out = Vec::new();
    for i in 0..cap {
        // fan out around the base direction: 0, +d, -d, +2d, ...
        let k = (i as f64 + 1.0) / 2.0;
        let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
        let jitter = (halton(2, off + i as u64) - 0.5) * 0.05;
        let angle = if i == 0 {
            base_dir
        } else {
            norm_angle(base_dir + sign * k * (spread / cap as f64) + jitter)
        };
        let s = Vec2::new(p.x + angle.cos() * standoff, p.y + angle.sin() * standoff);
        let traj = Traj {
            waypoints: vec![s, p.point()],
        };
        if check_ik_against(view, &obstacles, p, q, &traj) {
            out.push(traj);
        }
        if out.len() >= cap {
            break;
        }
    }
    out
}

fn check_ik_against(
    view: &SceneView,
    obstacles: &[Region],
    p: &Pose,
    q: &BaseConfig,
    t: &Traj,
) -> bool {
    if t.waypoints.len() < 2 {
        return false;
    }
    let s = t.start();
    if q.point().dist(&p.point()) > view.reach || q.point().dist(&s) > view.reach {
        return false;
    }
    if !view.bounds.contains(&s) {
        return false;
    }
    if t.end().dist(&p.point()) > 1e-6 {
        return false;
    }
    segment_is_free(&s, &t.end(), obstacles)
}

/// The constraint relation certified by `(Kin a o p g q t)`.
pub fn check_ik(
    view: &SceneView,
    target_object: Option<&str>,
    p: &Pose,
    q: &BaseConfig,
    t: &Traj,
) -> bool {
    let clearance = 0.005;
    let obstacles: Vec<Region> = view
        .placed_except(target_object)
        .iter()
        .map(|(s, op)| s.footprint(&op.point()).inflate(clearance))
        .collect();
    check_ik_against(view, &obstacles, p, q, t)
}

// ---------------------------------------------------------------------------
// near-region configurations and viewpoints
// ---------------------------------------------------------------------------

fn ring_points(region: &Region, dist: f64) -> Vec<Vec2> {
    let c = region.center();
    let hw = 0.5 * region.width();
    let hh = 0.5 * region.height();
    let diag = 0.75 * dist;
    vec![
        Vec2::new(c.x, region.y_min - dist),        // south
        Vec2::new(region.x_max + dist, c.y),        // east
        Vec2::new(c.x, region.y_max + dist),        // north
        Vec2::new(region.x_min - dist, c.y),        // west
        Vec2::new(c.x + hw + diag, c.y - hh - diag), // south-east
        Vec2::new(c.x + hw + diag, c.y + hh + diag), // north-east
        Vec2::new(c.x - hw - diag, c.y + hh + diag), // north-west
        Vec2::new(c.x - hw - diag, c.y - hh - diag), // south-west
    ]
}

fn valid_standing_point(view: &SceneView, p: &Vec2) -> bool {
    let margin = 0.02;
    if p.x < view.bounds.x_min + margin
        || p.y < view.bounds.y_min + margin
        || p.x > view.bounds.x_max - margin
        || p.y > view.bounds.y_max - margin
    {
        return false;
    }
    view.obstacles
        .iter()
        .all(|o| !o.inflate(view.cfg.base_inflate).contains(p))
}

/// Enumerates base configurations standing next to a region, facing its
/// center. Edge midpoints come before corners.
pub fn near_conf_candidates(view: &SceneView, region_name: &str, _seed: u64) -> Vec<BaseConfig> {
    let Some(region) = view.region(region_name) else {
        return Vec::new();
    };
    let target = root_region(view, region_name);
    let cap = view.cfg.cap_near_conf;
    let mut out = Vec::new();
    for p in ring_points(&target, view.cfg.standoff) {
        if out.len() >= cap {
            break;
        }
        if !valid_standing_point(view, &p) {
            continue;
        }
        if region.dist_to(&p) > view.reach * 0.9 {
            continue;
        }
        let c = region.center();
        out.push(BaseConfig::new(p.x, p.y, (c.y - p.y).atan2(c.x - p.x)));
    }
    out
}

/// The standoff ring is built around the top-level furniture piece so that
/// candidates never land on a parent surface (a bowl sits on a table).
fn root_region(view: &SceneView, region_name: &str) -> Region {
    let mut name = region_name.to_string();
    let mut rect = match view.region(&name) {
        Some(r) => *r,
        None => return Region::new(0.0, 0.0, 0.0, 0.0),
    };
    while let Some(info) = view.regions.get(&name) {
        match &info.parent {
            Some(parent) => {
                name = parent.clone();
                if let Some(r) = view.region(&name) {
                    rect = *r;
                }
            }
            None => break,
        }
    }
    rect
}

/// The constraint relation certified by `(NearConf q r)`: standing clear of
/// obstacles with the region within operating distance. `slack` loosens the
/// distance bound so execution-time drift does not refute a planned
/// configuration.
pub fn check_near_conf(view: &SceneView, q: &BaseConfig, region_name: &str, slack: f64) -> bool {
    let Some(region) = view.region(region_name) else {
        return false;
    };
    if !valid_standing_point(view, &q.point()) {
        return false;
    }
    region.dist_to(&q.point()) <= view.cfg.standoff + slack
}

/// Enumerates perception viewpoints around a region, clockwise starting
/// from the side the robot approaches from.
pub fn viewpoint_candidates(view: &SceneView, region_name: &str, from: &BaseConfig) -> Vec<BaseConfig> {
    let Some(region) = view.region(region_name) else {
        return Vec::new();
    };
    let target = root_region(view, region_name);
    let c = region.center();
    let start_angle = (from.y - c.y).atan2(from.x - c.x);
    let mut pts: Vec<(f64, Vec2)> = ring_points(&target, view.cfg.view_standoff)
        .into_iter()
        .filter(|p| valid_standing_point(view, p))
        .map(|p| {
            let a = (p.y - c.y).atan2(p.x - c.x);
            // clockwise offset from the approach side
            let mut d = norm_angle(start_angle - a);
            if d < -1e-9 {
                d += 2.0 * std::f64::consts::PI;
            }
            (d, p)
        })
        .collect();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    pts.truncate(view.cfg.cap_viewpoint);
    pts.into_iter()
        .map(|(_, p)| BaseConfig::new(p.x, p.y, (c.y - p.y).atan2(c.x - p.x)))
        .collect()
}
