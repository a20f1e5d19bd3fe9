//! Deterministic simulated household world: tables, drawers, covers,
//! receptacles, one mobile manipulator, scripted anomaly injection, seeded
//! sensor noise, and a ground-truth symbolic projection for tests and
//! replanning.

pub mod bind;
pub mod scene;
pub mod world;

pub use bind::{initial_bindings, BindError};
pub use scene::{
    load_scene, FurnKind, Furniture, RobotState, Scene, SceneError, SceneParams, StateFlag,
    WorldObject,
};
pub use world::{
    apply_command, perceive, ActuationResult, AnomalyEffect, AnomalyEvent, Command, Detection,
    ObsQuery, Observation, Trigger, World,
};
