//! Deterministic 2D desk-scale geometry for planning and acting: collision
//! checking, grid path planning, and the conditional samplers backing the
//! static literals (`BaseMotion`, `Kin`, `Stable`, `GraspFor`, `NearConf`).
//!
//! Samplers are pure in `(inputs, seed, index)`; every yielded value
//! satisfies the sampler's constraint relation, and candidate lists are
//! finite so exhaustion is a well-defined event.

pub mod collide;
pub mod cursor;
pub mod grid;
pub mod samplers;
pub mod types;

pub use cursor::SamplerCursor;
pub use samplers::{
    base_motion_candidates, check_base_motion, check_grasp, check_ik, check_near_conf,
    check_stable_pose, grasp_candidates, ik_candidates, near_conf_candidates,
    stable_pose_candidates, viewpoint_candidates, GeomConfig, NamedRegion, SceneView,
};
pub use types::{
    derive_seed, norm_angle, BaseConfig, GeomValue, Grasp, GraspClass, ObjectShape, Pose, Region,
    Traj, Vec2,
};
