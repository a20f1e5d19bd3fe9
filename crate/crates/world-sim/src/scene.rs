//! Scene model and JSON loader.
//!
//! A scene holds furniture (tables, drawers, covers, receptacles), objects
//! with footprints and state flags, and one mobile manipulator. Scenes are
//! versioned (`"schema": 1`) and invariant-checked on load: regions inside
//! bounds, no two objects overlapping, held objects without a world pose.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use geom_samplers::{
    BaseConfig, GeomConfig, Grasp, NamedRegion, ObjectShape, Pose, Region, SceneView, Vec2,
};
use pddl_core::{Fact, SymbolicState};

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("scene schema error: {0}")]
    Schema(String),
    #[error("objects `{0}` and `{1}` overlap")]
    Overlap(String, String),
    #[error("invalid scene json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FurnKind {
    Table,
    Drawer,
    Cover,
    Receptacle,
}

/// Object state flags. `Dirty` and `Cleaned` are mutually exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateFlag {
    Cooked,
    Cleaned,
    Heated,
    Dirty,
}

impl StateFlag {
    pub fn pddl_name(self) -> &'static str {
        match self {
            StateFlag::Cooked => "cooked",
            StateFlag::Cleaned => "cleaned",
            StateFlag::Heated => "heated",
            StateFlag::Dirty => "dirty",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Furniture {
    pub id: String,
    pub kind: FurnKind,
    pub region: Region,
    /// Drawers only: open drawers expose their contents.
    pub open: bool,
    /// Covers only: lifted covers expose their contents.
    pub lifted: bool,
    /// Receptacles only: the state flag this appliance applies.
    pub appliance: Option<StateFlag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldObject {
    pub id: String,
    pub shape: ObjectShape,
    /// None while held by the robot.
    pub pose: Option<Pose>,
    pub flags: BTreeSet<StateFlag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub arm: String,
    pub base: BaseConfig,
    pub held: Option<(String, Grasp)>,
    /// End-effector target set by the most recent approach.
    pub ee_target: Option<Vec2>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneParams {
    pub reach: f64,
    /// Observation noise bound (componentwise, uniform).
    pub eps: f64,
    /// Base arrival error bound (componentwise, uniform).
    pub delta: f64,
    pub theta_err: f64,
    pub grasp_tol: f64,
    pub scan_range: f64,
    pub geom: GeomConfig,
}

impl Default for SceneParams {
    fn default() -> Self {
        SceneParams {
            reach: 0.8,
            eps: 0.01,
            delta: 0.03,
            theta_err: 0.05,
            grasp_tol: 0.05,
            scan_range: 1.2,
            geom: GeomConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub name: String,
    pub bounds: Region,
    pub params: SceneParams,
    pub furniture: Vec<Furniture>,
    pub objects: Vec<WorldObject>,
    pub robot: RobotState,
    /// Regions scanned so far; persists across replanning.
    pub scanned: BTreeSet<String>,
}

// ---- JSON wire format ----

#[derive(Deserialize)]
struct RawScene {
    schema: u32,
    name: String,
    bounds: [f64; 4],
    #[serde(default)]
    params: RawParams,
    robot: RawRobot,
    furniture: Vec<RawFurniture>,
    objects: Vec<RawObject>,
}

#[derive(Deserialize, Default)]
#[serde(default)]
struct RawParams {
    reach: Option<f64>,
    eps: Option<f64>,
    delta: Option<f64>,
    theta_err: Option<f64>,
    grasp_tol: Option<f64>,
    scan_range: Option<f64>,
}

#[derive(Deserialize)]
struct RawRobot {
    arm: String,
    base: [f64; 3],
    #[serde(default)]
    held: Option<String>,
}

#[derive(Deserialize)]
struct RawFurniture {
    id: String,
    kind: FurnKind,
    region: [f64; 4],
    #[serde(default)]
    open: bool,
    #[serde(default)]
    lifted: bool,
    #[serde(default)]
    appliance: Option<StateFlag>,
}

#[derive(Deserialize)]
struct RawObject {
    id: String,
    shape: ObjectShape,
    pose: [f64; 3],
    #[serde(default)]
    flags: Vec<StateFlag>,
}

/// Loads and invariant-checks a scene from JSON text.
pub fn load_scene(json: &str) -> Result<Scene, SceneError> {
    let raw: RawScene = serde_json::from_str(json)?;
    if raw.schema != 1 {
        return Err(SceneError::Schema(format!(
            "unsupported schema version {}",
            raw.schema
        )));
    }
    let bounds = Region::new(raw.bounds[0], raw.bounds[1], raw.bounds[2], raw.bounds[3]);
    if bounds.area() <= 0.0 {
        return Err(SceneError::Schema("bounds must have positive area".into()));
    }
    let mut params = SceneParams::default();
    if let Some(v) = raw.params.reach {
        params.reach = v;
    }
    if let Some(v) = raw.params.eps {
        params.eps = v;
    }
    if let Some(v) = raw.params.delta {
        params.delta = v;
    }
    if let Some(v) = raw.params.theta_err {
        params.theta_err = v;
    }
    if let Some(v) = raw.params.grasp_tol {
        params.grasp_tol = v;
    }
    if let Some(v) = raw.params.scan_range {
        params.scan_range = v;
    }

    let mut ids = BTreeSet::new();
    let mut furniture = Vec::new();
    for f in raw.furniture {
        if !ids.insert(f.id.clone()) {
            return Err(SceneError::Schema(format!("duplicate id `{}`", f.id)));
        }
        let region = Region::new(f.region[0], f.region[1], f.region[2], f.region[3]);
        if region.area() <= 0.0 {
            return Err(SceneError::Schema(format!(
                "furniture `{}` has non-positive area",
                f.id
            )));
        }
        if !bounds.contains(&Vec2::new(region.x_min, region.y_min))
            || !bounds.contains(&Vec2::new(region.x_max, region.y_max))
        {
            return Err(SceneError::Schema(format!(
                "furniture `{}` lies outside the workspace",
                f.id
            )));
        }
        furniture.push(Furniture {
            id: f.id,
            kind: f.kind,
            region,
            open: f.open,
            lifted: f.lifted,
            appliance: f.appliance,
        });
    }

    let mut objects = Vec::new();
    for o in raw.objects {
        if !ids.insert(o.id.clone()) {
            return Err(SceneError::Schema(format!("duplicate id `{}`", o.id)));
        }
        objects.push(WorldObject {
            id: o.id,
            shape: o.shape,
            pose: Some(Pose::new(o.pose[0], o.pose[1], o.pose[2])),
            flags: o.flags.into_iter().collect(),
        });
    }

    let mut robot = RobotState {
        arm: raw.robot.arm,
        base: BaseConfig::new(raw.robot.base[0], raw.robot.base[1], raw.robot.base[2]),
        held: None,
        ee_target: None,
    };
    if let Some(held_id) = raw.robot.held {
        let obj = objects
            .iter_mut()
            .find(|o| o.id == held_id)
            .ok_or_else(|| SceneError::Schema(format!("held object `{held_id}` not declared")))?;
        obj.pose = None;
        robot.held = Some((
            held_id,
            Grasp {
                class: geom_samplers::GraspClass::Top,
                offset: 0.0,
            },
        ));
    }

    let scene = Scene {
        name: raw.name,
        bounds,
        params,
        furniture,
        objects,
        robot,
        scanned: BTreeSet::new(),
    };
    scene.check_invariants()?;
    Ok(scene)
}

impl Scene {
    pub fn check_invariants(&self) -> Result<(), SceneError> {
        for (i, a) in self.objects.iter().enumerate() {
            let Some(pa) = a.pose else { continue };
            for b in self.objects.iter().skip(i + 1) {
                let Some(pb) = b.pose else { continue };
                if a.shape
                    .footprint(&pa.point())
                    .overlaps(&b.shape.footprint(&pb.point()))
                {
                    return Err(SceneError::Overlap(a.id.clone(), b.id.clone()));
                }
            }
        }
        Ok(())
    }

    pub fn furniture_by_id(&self, id: &str) -> Option<&Furniture> {
        self.furniture.iter().find(|f| f.id == id)
    }

    pub fn object_by_id(&self, id: &str) -> Option<&WorldObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn object_by_id_mut(&mut self, id: &str) -> Option<&mut WorldObject> {
        self.objects.iter_mut().find(|o| o.id == id)
    }

    /// Smallest furniture region containing the point, if any.
    pub fn region_at(&self, p: &Vec2) -> Option<&Furniture> {
        self.furniture
            .iter()
            .filter(|f| f.region.contains(p))
            .min_by(|a, b| {
                a.region
                    .area()
                    .partial_cmp(&b.region.area())
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.id.cmp(&b.id))
            })
    }

    /// Direct parent region of a furniture piece (a bowl on a table).
    pub fn parent_of(&self, id: &str) -> Option<&Furniture> {
        let child = self.furniture_by_id(id)?;
        self.furniture
            .iter()
            .filter(|f| {
                f.id != child.id
                    && f.region.contains(&Vec2::new(child.region.x_min, child.region.y_min))
                    && f.region.contains(&Vec2::new(child.region.x_max, child.region.y_max))
            })
            .min_by(|a, b| {
                a.region
                    .area()
                    .partial_cmp(&b.region.area())
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.id.cmp(&b.id))
            })
    }

    /// True iff the object sits inside a closed drawer or under an unlifted
    /// cover.
    pub fn is_occluded(&self, object: &WorldObject) -> bool {
        let Some(pose) = object.pose else {
            return false;
        };
        self.furniture.iter().any(|f| {
            f.region.contains(&pose.point())
                && match f.kind {
                    FurnKind::Drawer => !f.open,
                    FurnKind::Cover => !f.lifted,
                    _ => false,
                }
        })
    }

    /// True iff the region's contents can be manipulated (tables and
    /// receptacles always; drawers when open; covers when lifted).
    pub fn is_accessible(&self, furniture: &Furniture) -> bool {
        match furniture.kind {
            FurnKind::Table | FurnKind::Receptacle => true,
            FurnKind::Drawer => furniture.open,
            FurnKind::Cover => furniture.lifted,
        }
    }

    /// Geometric snapshot for the samplers: ground truth placements.
    pub fn view(&self) -> SceneView {
        let mut regions = std::collections::BTreeMap::new();
        for f in &self.furniture {
            regions.insert(
                f.id.clone(),
                NamedRegion {
                    rect: f.region,
                    parent: self.parent_of(&f.id).map(|p| p.id.clone()),
                },
            );
        }
        let obstacles = self
            .furniture
            .iter()
            .filter(|f| self.parent_of(&f.id).is_none())
            .map(|f| f.region)
            .collect();
        let placed = self
            .objects
            .iter()
            .filter_map(|o| o.pose.map(|p| (o.id.clone(), o.shape, p)))
            .collect();
        SceneView {
            bounds: self.bounds,
            obstacles,
            regions,
            placed,
            reach: self.params.reach,
            cfg: self.params.geom,
        }
    }

    /// Like [`Scene::view`] but with object placements taken from the given
    /// detections only — the executor's egocentric picture of the world.
    pub fn observed_view(&self, detections: &[super::world::Detection]) -> SceneView {
        let mut view = self.view();
        view.placed = detections
            .iter()
            .map(|d| {
                let shape = self
                    .object_by_id(&d.object)
                    .map(|o| o.shape)
                    .unwrap_or(ObjectShape::Disc { radius: 0.03 });
                (d.object.clone(), shape, d.pose)
            })
            .collect();
        view
    }

    /// Full logical projection of the ground truth: On/Holding/HandEmpty,
    /// Scanned, Accessible and state-flag facts. Used by tests and by the
    /// replan cycle when rebuilding the planner's initial state.
    pub fn ground_truth_state(&self) -> SymbolicState {
        let mut facts = Vec::new();
        match &self.robot.held {
            Some((obj, _)) => facts.push(Fact::new("holding", &[&self.robot.arm, obj])),
            None => facts.push(Fact::new("handempty", &[&self.robot.arm])),
        }
        for o in &self.objects {
            if let Some(pose) = o.pose {
                if let Some(f) = self.region_at(&pose.point()) {
                    facts.push(Fact::new("on", &[&o.id, &f.id]));
                }
            }
            for flag in &o.flags {
                facts.push(Fact::new(flag.pddl_name(), &[&o.id]));
            }
        }
        for f in &self.furniture {
            if self.scanned.contains(&f.id) {
                facts.push(Fact::new("scanned", &[&f.id]));
            }
            if self.is_accessible(f) {
                facts.push(Fact::new("accessible", &[&f.id]));
            }
        }
        SymbolicState::from_facts(facts)
    }

    /// Static region-kind facts (`Table`, `Drawer`, appliance kinds) used
    /// when synthesizing problems from the scene.
    pub fn static_region_facts(&self) -> Vec<Fact> {
        let mut facts = Vec::new();
        for f in &self.furniture {
            match f.kind {
                FurnKind::Table => facts.push(Fact::new("table", &[&f.id])),
                FurnKind::Drawer => facts.push(Fact::new("drawer", &[&f.id])),
                FurnKind::Cover => facts.push(Fact::new("cover", &[&f.id])),
                FurnKind::Receptacle => {}
            }
            if let Some(flag) = f.appliance {
                let pred = match flag {
                    StateFlag::Cooked => "stove",
                    StateFlag::Cleaned => "sink",
                    StateFlag::Heated => "microwave",
                    StateFlag::Dirty => continue,
                };
                facts.push(Fact::new(pred, &[&f.id]));
            }
        }
        facts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_scene_is_valid() {
        let scene = load_scene(
            r#"{ "schema": 1, "name": "empty", "bounds": [0,0,1,1],
                 "robot": {"arm": "arm1", "base": [0.5,0.5,0]},
                 "furniture": [], "objects": [] }"#,
        )
        .unwrap();
        assert!(scene.furniture.is_empty());
        assert!(scene.objects.is_empty());
    }

    #[test]
    fn overlapping_objects_are_rejected() {
        let err = load_scene(
            r#"{ "schema": 1, "name": "bad", "bounds": [0,0,1,1],
                 "robot": {"arm": "arm1", "base": [0.5,0.5,0]},
                 "furniture": [],
                 "objects": [
                   {"id":"a","shape":{"square":0.05},"pose":[0.5,0.5,0]},
                   {"id":"b","shape":{"square":0.05},"pose":[0.52,0.52,0]}
                 ] }"#,
        )
        .unwrap_err();
        assert!(matches!(err, SceneError::Overlap(..)));
    }

    #[test]
    fn wrong_schema_version_is_rejected() {
        let err = load_scene(
            r#"{ "schema": 2, "name": "x", "bounds": [0,0,1,1],
                 "robot": {"arm":"arm1","base":[0.5,0.5,0]}, "furniture": [], "objects": [] }"#,
        )
        .unwrap_err();
        assert!(matches!(err, SceneError::Schema(_)));
    }
}
