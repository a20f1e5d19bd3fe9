//! Discrete-step world: atomic-action commands with seeded actuation noise,
//! scripted anomaly injection, and noisy perception.
//!
//! Actuation faults are reported in the result, not raised. Anomaly events
//! fire after the command that reaches their trigger, exactly once each.

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use geom_samplers::{
    derive_seed, norm_angle, stable_pose_candidates, BaseConfig, Grasp, Pose, Region, Traj, Vec2,
};
use pddl_core::Fact;

use crate::scene::{FurnKind, Scene, StateFlag};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Command {
    MoveBase { target: BaseConfig, traj: Traj },
    PreApproach { grasp: Grasp },
    Approach { target: Vec2 },
    Grasp { object: String },
    Release { object: String, pose: Pose },
    Scan { region: String },
    Toggle { region: String },
}

impl Command {
    pub fn kind(&self) -> &'static str {
        match self {
            Command::MoveBase { .. } => "movebase",
            Command::PreApproach { .. } => "preapproach",
            Command::Approach { .. } => "approach",
            Command::Grasp { .. } => "grasp",
            Command::Release { .. } => "release",
            Command::Scan { .. } => "scan",
            Command::Toggle { .. } => "toggle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActuationResult {
    pub ok: bool,
    pub fault: Option<String>,
}

impl ActuationResult {
    fn ok() -> Self {
        ActuationResult {
            ok: true,
            fault: None,
        }
    }

    fn fault(msg: impl Into<String>) -> Self {
        ActuationResult {
            ok: false,
            fault: Some(msg.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    AtStep(u64),
    WhenFact { pred: String, args: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnomalyEffect {
    MoveObject { object: String, to_region: String },
    OccupyReceptacle { region: String, object: String },
    SetStateFlag { object: String, flag: StateFlag },
    HideUnder { object: String, cover: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyEvent {
    pub trigger: Trigger,
    pub effect: AnomalyEffect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub object: String,
    pub pose: Pose,
    pub flags: BTreeSet<StateFlag>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Observation {
    pub detections: Vec<Detection>,
}

impl Observation {
    pub fn detection_of(&self, object: &str) -> Option<&Detection> {
        self.detections.iter().find(|d| d.object == object)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ObsQuery {
    /// Everything unoccluded inside a named furniture region.
    Region(String),
    /// Everything unoccluded inside a rectangle.
    Rect(Region),
    /// Everything unoccluded within sensor range of a point.
    Viewpoint { at: Vec2, range: f64 },
}

/// Owns the mutable scene plus the event script, the step clock, and the
/// base seed all actuation noise derives from.
#[derive(Debug, Clone)]
pub struct World {
    pub scene: Scene,
    pub seed: u64,
    step_count: u64,
    events: Vec<(AnomalyEvent, bool)>,
    snapshots: u64,
}

impl World {
    pub fn new(scene: Scene, events: Vec<AnomalyEvent>, seed: u64) -> World {
        World {
            scene,
            seed,
            step_count: 0,
            events: events.into_iter().map(|e| (e, false)).collect(),
            snapshots: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// Applies one atomic command, advances the step clock, then fires any
    /// triggered anomaly events.
    pub fn step(&mut self, cmd: &Command) -> ActuationResult {
        let seed = derive_seed(self.seed, "step", self.step_count);
        let result = apply_command(&mut self.scene, cmd, seed);
        self.step_count += 1;
        self.fire_events();
        result
    }

    /// Deterministic noisy perception; pure in (scene, query, seed).
    pub fn perceive(&self, query: &ObsQuery, seed: u64) -> Observation {
        perceive(&self.scene, query, seed)
    }

    /// Robot proprioception: the base configuration is self-known.
    pub fn observed_base(&self) -> BaseConfig {
        self.scene.robot.base
    }

    pub fn held_object(&self) -> Option<&(String, Grasp)> {
        self.scene.robot.held.as_ref()
    }

    pub fn take_snapshot(&mut self) -> String {
        self.snapshots += 1;
        format!("snap-{}", self.snapshots)
    }

    fn fire_events(&mut self) {
        let gt = self.scene.ground_truth_state();
        let mut due = Vec::new();
        for (i, (event, fired)) in self.events.iter().enumerate() {
            if *fired {
                continue;
            }
            let triggered = match &event.trigger {
                Trigger::AtStep(k) => self.step_count >= *k,
                Trigger::WhenFact { pred, args } => gt.holds(&Fact {
                    pred: pred.clone(),
                    args: args.clone(),
                }),
            };
            if triggered {
                due.push(i);
            }
        }
        for i in due {
            self.events[i].1 = true;
            let effect = self.events[i].0.effect.clone();
            apply_event(&mut self.scene, &effect);
        }
    }
}

fn uniform(rng: &mut ChaCha8Rng, bound: f64) -> f64 {
    if bound <= 0.0 {
        return 0.0;
    }
    rng.gen_range(-bound..=bound)
}

/// Applies a single command to the scene with noise drawn from `seed`.
pub fn apply_command(scene: &mut Scene, cmd: &Command, seed: u64) -> ActuationResult {
    match cmd {
        Command::MoveBase { target, traj } => {
            if traj.end().dist(&target.point()) > 1e-6 {
                return ActuationResult::fault("trajectory does not end at the move target");
            }
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "movebase", 0));
            let dx = uniform(&mut rng, scene.params.delta);
            let dy = uniform(&mut rng, scene.params.delta);
            let dth = uniform(&mut rng, scene.params.theta_err);
            let x = (target.x + dx).clamp(scene.bounds.x_min, scene.bounds.x_max);
            let y = (target.y + dy).clamp(scene.bounds.y_min, scene.bounds.y_max);
            scene.robot.base = BaseConfig::new(x, y, norm_angle(target.theta + dth));
            scene.robot.ee_target = None;
            ActuationResult::ok()
        }
        Command::PreApproach { grasp } => {
            if let Some((_, held_grasp)) = &mut scene.robot.held {
                *held_grasp = *grasp;
            }
            scene.robot.ee_target = None;
            ActuationResult::ok()
        }
        Command::Approach { target } => {
            if scene.robot.base.point().dist(target) > scene.params.reach {
                return ActuationResult::fault("approach target out of reach");
            }
            scene.robot.ee_target = Some(*target);
            ActuationResult::ok()
        }
        Command::Grasp { object } => {
            if scene.robot.held.is_some() {
                return ActuationResult::fault("gripper already holding an object");
            }
            let Some(ee) = scene.robot.ee_target else {
                return ActuationResult::fault("grasp without a preceding approach");
            };
            let Some(obj) = scene.object_by_id(object) else {
                return ActuationResult::fault(format!("unknown object `{object}`"));
            };
            if scene.is_occluded(obj) {
                return ActuationResult::fault(format!("object `{object}` is occluded"));
            }
            let Some(pose) = obj.pose else {
                return ActuationResult::fault(format!("object `{object}` is not in the world"));
            };
            if ee.dist(&pose.point()) > scene.params.grasp_tol {
                return ActuationResult::fault("grasp closed on empty space");
            }
            scene.object_by_id_mut(object).unwrap().pose = None;
            scene.robot.held = Some((
                object.clone(),
                Grasp {
                    class: geom_samplers::GraspClass::Top,
                    offset: 0.0,
                },
            ));
            scene.robot.ee_target = None;
            ActuationResult::ok()
        }
        Command::Release { object, pose } => {
            match &scene.robot.held {
                Some((held, _)) if held == object => {}
                _ => return ActuationResult::fault(format!("not holding `{object}`")),
            }
            if scene.robot.base.point().dist(&pose.point()) > scene.params.reach {
                return ActuationResult::fault("release pose out of reach");
            }
            // physical feasibility: inside bounds, not into a closed
            // container, no overlap with resting objects
            if !scene.bounds.contains(&pose.point()) {
                return ActuationResult::fault("release pose outside the workspace");
            }
            if let Some(f) = scene.region_at(&pose.point()) {
                if !scene.is_accessible(f) {
                    return ActuationResult::fault(format!("region `{}` is closed", f.id));
                }
            }
            let shape = scene.object_by_id(object).map(|o| o.shape);
            let Some(shape) = shape else {
                return ActuationResult::fault(format!("unknown object `{object}`"));
            };
            let fp = shape.footprint(&pose.point());
            for other in &scene.objects {
                if other.id == *object {
                    continue;
                }
                if let Some(op) = other.pose {
                    if other.shape.footprint(&op.point()).overlaps(&fp) {
                        return ActuationResult::fault(format!(
                            "placement collides with `{}`",
                            other.id
                        ));
                    }
                }
            }
            scene.object_by_id_mut(object).unwrap().pose = Some(*pose);
            scene.robot.held = None;
            scene.robot.ee_target = None;
            ActuationResult::ok()
        }
        Command::Scan { region } => {
            let Some(f) = scene.furniture_by_id(region) else {
                return ActuationResult::fault(format!("unknown region `{region}`"));
            };
            if f.region.dist_to(&scene.robot.base.point()) > scene.params.scan_range {
                return ActuationResult::fault(format!("too far to scan `{region}`"));
            }
            let kind = f.kind;
            let id = f.id.clone();
            match kind {
                FurnKind::Drawer => {
                    scene
                        .furniture
                        .iter_mut()
                        .find(|x| x.id == id)
                        .unwrap()
                        .open = true;
                }
                FurnKind::Cover => {
                    scene
                        .furniture
                        .iter_mut()
                        .find(|x| x.id == id)
                        .unwrap()
                        .lifted = true;
                }
                _ => {}
            }
            scene.scanned.insert(id);
            ActuationResult::ok()
        }
        Command::Toggle { region } => {
            let Some(f) = scene.furniture_by_id(region) else {
                return ActuationResult::fault(format!("unknown region `{region}`"));
            };
            let Some(flag) = f.appliance else {
                return ActuationResult::fault(format!("`{region}` is not an appliance"));
            };
            if f.region.dist_to(&scene.robot.base.point()) > scene.params.scan_range {
                return ActuationResult::fault(format!("too far to operate `{region}`"));
            }
            let rect = f.region;
            let inside: Vec<String> = scene
                .objects
                .iter()
                .filter(|o| o.pose.is_some_and(|p| rect.contains(&p.point())))
                .map(|o| o.id.clone())
                .collect();
            if inside.is_empty() {
                return ActuationResult::fault(format!("`{region}` is empty"));
            }
            if flag != StateFlag::Cleaned {
                if let Some(dirty) = inside.iter().find(|id| {
                    scene
                        .object_by_id(id)
                        .is_some_and(|o| o.flags.contains(&StateFlag::Dirty))
                }) {
                    return ActuationResult::fault(format!("`{dirty}` is dirty"));
                }
            }
            for id in inside {
                let obj = scene.object_by_id_mut(&id).unwrap();
                obj.flags.insert(flag);
                match flag {
                    StateFlag::Cleaned => {
                        obj.flags.remove(&StateFlag::Dirty);
                    }
                    StateFlag::Dirty => {
                        obj.flags.remove(&StateFlag::Cleaned);
                    }
                    _ => {}
                }
            }
            ActuationResult::ok()
        }
    }
}

/// Moves an object to a collision-free spot inside the target region.
/// Scenario fixtures must only script satisfiable effects; an impossible
/// re-placement is a fixture bug and panics.
fn apply_event(scene: &mut Scene, effect: &AnomalyEffect) {
    match effect {
        AnomalyEffect::MoveObject { object, to_region }
        | AnomalyEffect::OccupyReceptacle {
            region: to_region,
            object,
        }
        | AnomalyEffect::HideUnder {
            object,
            cover: to_region,
        } => {
            let shape = scene
                .object_by_id(object)
                .unwrap_or_else(|| panic!("event references unknown object `{object}`"))
                .shape;
            let view = scene.view();
            let pose = stable_pose_candidates(&view, Some(object), &shape, to_region, 0)
                .into_iter()
                .next()
                .unwrap_or_else(|| {
                    panic!("event cannot place `{object}` inside `{to_region}`")
                });
            if scene
                .robot
                .held
                .as_ref()
                .is_some_and(|(held, _)| held == object)
            {
                scene.robot.held = None;
            }
            scene.object_by_id_mut(object).unwrap().pose = Some(pose);
            scene
                .check_invariants()
                .expect("anomaly events preserve scene invariants");
        }
        AnomalyEffect::SetStateFlag { object, flag } => {
            let obj = scene
                .object_by_id_mut(object)
                .unwrap_or_else(|| panic!("event references unknown object `{object}`"));
            obj.flags.insert(*flag);
            match flag {
                StateFlag::Dirty => {
                    obj.flags.remove(&StateFlag::Cleaned);
                }
                StateFlag::Cleaned => {
                    obj.flags.remove(&StateFlag::Dirty);
                }
                _ => {}
            }
        }
    }
}

/// Deterministic noisy perception: unoccluded objects within the query
/// area, each with uniform componentwise noise bounded by eps.
pub fn perceive(scene: &Scene, query: &ObsQuery, seed: u64) -> Observation {
    let in_query = |p: &Vec2| -> bool {
        match query {
            ObsQuery::Region(name) => scene
                .furniture_by_id(name)
                .is_some_and(|f| f.region.contains(p)),
            ObsQuery::Rect(rect) => rect.contains(p),
            ObsQuery::Viewpoint { at, range } => at.dist(p) <= *range,
        }
    };
    let mut detections = Vec::new();
    for obj in &scene.objects {
        let Some(pose) = obj.pose else { continue };
        if scene.is_occluded(obj) || !in_query(&pose.point()) {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "obs", fnv(&obj.id)));
        let eps = scene.params.eps;
        let noisy = Pose::new(
            pose.x + uniform(&mut rng, eps),
            pose.y + uniform(&mut rng, eps),
            norm_angle(pose.theta + uniform(&mut rng, eps)),
        );
        detections.push(Detection {
            object: obj.id.clone(),
            pose: noisy,
            flags: obj.flags.clone(),
        });
    }
    detections.sort_by(|a, b| a.object.cmp(&b.object));
    Observation { detections }
}

fn fnv(s: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}
