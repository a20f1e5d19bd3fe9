//! Geometric value types shared across the workspace. All units are meters
//! and radians; angles are normalized to [-pi, pi).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Normalizes an angle into [-pi, pi).
pub fn norm_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut t = (theta + PI) % two_pi;
    if t < 0.0 {
        t += two_pi;
    }
    t - PI
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub fn new(x: f64, y: f64) -> Vec2 {
        Vec2 { x, y }
    }

    pub fn dist(&self, other: &Vec2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Mobile-base configuration (x, y, heading).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseConfig {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl BaseConfig {
    pub fn new(x: f64, y: f64, theta: f64) -> BaseConfig {
        BaseConfig {
            x,
            y,
            theta: norm_angle(theta),
        }
    }

    pub fn point(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

/// Object pose on a surface (x, y, yaw).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Pose {
        Pose {
            x,
            y,
            theta: norm_angle(theta),
        }
    }

    pub fn point(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraspClass {
    Top,
    Forward,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grasp {
    pub class: GraspClass,
    /// Lateral offset of the gripper relative to the object center.
    pub offset: f64,
}

/// A polyline path. A single waypoint denotes the identity motion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Traj {
    pub waypoints: Vec<Vec2>,
}

impl Traj {
    pub fn identity(p: Vec2) -> Traj {
        Traj { waypoints: vec![p] }
    }

    pub fn start(&self) -> Vec2 {
        self.waypoints[0]
    }

    pub fn end(&self) -> Vec2 {
        *self.waypoints.last().expect("trajectories are non-empty")
    }

    pub fn length(&self) -> f64 {
        self.waypoints
            .windows(2)
            .map(|w| w[0].dist(&w[1]))
            .sum()
    }
}

/// Axis-aligned rectangle with positive area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Region {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Region {
        Region {
            x_min,
            y_min,
            x_max,
            y_max,
        }
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Vec2 {
        Vec2::new(
            0.5 * (self.x_min + self.x_max),
            0.5 * (self.y_min + self.y_max),
        )
    }

    pub fn contains(&self, p: &Vec2) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    /// Shrinks by `margin` on every side. May produce a degenerate (zero
    /// width/height) region; callers treat that as "center only".
    pub fn shrink(&self, margin: f64) -> Option<Region> {
        let r = Region {
            x_min: self.x_min + margin,
            y_min: self.y_min + margin,
            x_max: self.x_max - margin,
            y_max: self.y_max - margin,
        };
        if r.x_max < r.x_min - 1e-9 || r.y_max < r.y_min - 1e-9 {
            None
        } else {
            Some(r)
        }
    }

    pub fn inflate(&self, margin: f64) -> Region {
        Region {
            x_min: self.x_min - margin,
            y_min: self.y_min - margin,
            x_max: self.x_max + margin,
            y_max: self.y_max + margin,
        }
    }

    pub fn overlaps(&self, other: &Region) -> bool {
        self.x_min < other.x_max
            && other.x_min < self.x_max
            && self.y_min < other.y_max
            && other.y_min < self.y_max
    }

    /// Distance from a point to the region (zero inside).
    pub fn dist_to(&self, p: &Vec2) -> f64 {
        let dx = (self.x_min - p.x).max(0.0).max(p.x - self.x_max);
        let dy = (self.y_min - p.y).max(0.0).max(p.y - self.y_max);
        dx.hypot(dy)
    }
}

/// Object footprint: a disc or an axis-aligned square. Serialized as
/// `{"disc": radius}` or `{"square": half_width}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "ShapeWire", into = "ShapeWire")]
pub enum ObjectShape {
    Disc { radius: f64 },
    Square { half_width: f64 },
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ShapeWire {
    Disc(f64),
    Square(f64),
}

impl From<ShapeWire> for ObjectShape {
    fn from(w: ShapeWire) -> Self {
        match w {
            ShapeWire::Disc(radius) => ObjectShape::Disc { radius },
            ShapeWire::Square(half_width) => ObjectShape::Square { half_width },
        }
    }
}

impl From<ObjectShape> for ShapeWire {
    fn from(s: ObjectShape) -> Self {
        match s {
            ObjectShape::Disc { radius } => ShapeWire::Disc(radius),
            ObjectShape::Square { half_width } => ShapeWire::Square(half_width),
        }
    }
}

impl ObjectShape {
    /// Conservative bounding radius of the footprint.
    pub fn bound_radius(&self) -> f64 {
        match self {
            ObjectShape::Disc { radius } => *radius,
            ObjectShape::Square { half_width } => half_width * std::f64::consts::SQRT_2,
        }
    }

    /// Half-extent of the axis-aligned footprint.
    pub fn half_extent(&self) -> f64 {
        match self {
            ObjectShape::Disc { radius } => *radius,
            ObjectShape::Square { half_width } => *half_width,
        }
    }

    pub fn footprint(&self, at: &Vec2) -> Region {
        let r = match self {
            ObjectShape::Disc { radius } => *radius,
            ObjectShape::Square { half_width } => *half_width,
        };
        Region::new(at.x - r, at.y - r, at.x + r, at.y + r)
    }
}

/// Tagged union of every geometric value a sampler can produce or consume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeomValue {
    Config(BaseConfig),
    Pose(Pose),
    Grasp(Grasp),
    Traj(Traj),
    Region(Region),
    Shape(ObjectShape),
}

impl GeomValue {
    pub fn as_config(&self) -> Option<&BaseConfig> {
        match self {
            GeomValue::Config(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_pose(&self) -> Option<&Pose> {
        match self {
            GeomValue::Pose(p) => Some(p),
            _ => None,
        }
    }

    pub fn as_grasp(&self) -> Option<&Grasp> {
        match self {
            GeomValue::Grasp(g) => Some(g),
            _ => None,
        }
    }

    pub fn as_traj(&self) -> Option<&Traj> {
        match self {
            GeomValue::Traj(t) => Some(t),
            _ => None,
        }
    }

    pub fn as_region(&self) -> Option<&Region> {
        match self {
            GeomValue::Region(r) => Some(r),
            _ => None,
        }
    }

    pub fn as_shape(&self) -> Option<&ObjectShape> {
        match self {
            GeomValue::Shape(s) => Some(s),
            _ => None,
        }
    }
}

/// Mixes a base seed with a namespace tag and a salt into a derived seed.
/// FNV-1a over the tag, then a splitmix64 finalizer; stable across runs.
pub fn derive_seed(base: u64, tag: &str, salt: u64) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in tag.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x100000001b3);
    }
    let mut z = base ^ h ^ salt.wrapping_mul(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles_normalize_into_half_open_interval() {
        assert!((norm_angle(PI) - (-PI)).abs() < 1e-12);
        assert!((norm_angle(3.0 * PI) - (-PI)).abs() < 1e-12);
        assert!((norm_angle(-PI) - (-PI)).abs() < 1e-12);
        assert!((norm_angle(0.3) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn degenerate_shrink_is_center_only() {
        let r = Region::new(0.0, 0.0, 0.1, 0.1);
        let s = r.shrink(0.05).unwrap();
        assert!(s.area() < 1e-12);
        assert_eq!(s.center(), Vec2::new(0.05, 0.05));
        assert!(r.shrink(0.06).is_none());
    }

    #[test]
    fn derive_seed_is_stable() {
        assert_eq!(derive_seed(7, "ik", 3), derive_seed(7, "ik", 3));
        assert_ne!(derive_seed(7, "ik", 3), derive_seed(7, "ik", 4));
        assert_ne!(derive_seed(7, "ik", 3), derive_seed(7, "grasp", 3));
    }
}
