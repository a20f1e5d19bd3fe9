//! Binding of problem constants to scene geometry.
//!
//! Problem files name geometric constants by convention — `q0` for the
//! start configuration, `p0-<object>` for initial poses — while object,
//! region and arm constants reuse scene ids directly. This module resolves
//! those names against a scene, the glue between `problem.pddl` and the
//! scene JSON.

use std::collections::BTreeMap;

use geom_samplers::GeomValue;
use thiserror::Error;

use crate::scene::Scene;

#[derive(Debug, Error)]
pub enum BindError {
    #[error("constant `{0}` of type `{1}` has no counterpart in the scene")]
    Unresolved(String, String),
}

/// Maps every problem constant to its geometric payload (None for plain
/// ids). Unresolvable geometric constants are an error: the problem file
/// disagrees with the scene.
pub fn initial_bindings(
    scene: &Scene,
    objects: &BTreeMap<String, String>,
) -> Result<BTreeMap<String, Option<GeomValue>>, BindError> {
    let mut out = BTreeMap::new();
    for (name, ty) in objects {
        let unresolved = || BindError::Unresolved(name.clone(), ty.clone());
        let value = match ty.as_str() {
            "conf" => {
                if name == "q0" {
                    Some(GeomValue::Config(scene.robot.base))
                } else {
                    return Err(unresolved());
                }
            }
            "pose" => {
                let obj_id = name.strip_prefix("p0-").ok_or_else(unresolved)?;
                let obj = scene.object_by_id(obj_id).ok_or_else(unresolved)?;
                let pose = obj.pose.ok_or_else(unresolved)?;
                Some(GeomValue::Pose(pose))
            }
            "obj" => {
                let obj = scene.object_by_id(name).ok_or_else(unresolved)?;
                Some(GeomValue::Shape(obj.shape))
            }
            "region" => {
                let f = scene.furniture_by_id(name).ok_or_else(unresolved)?;
                Some(GeomValue::Region(f.region))
            }
            "arm" => {
                if *name != scene.robot.arm {
                    return Err(unresolved());
                }
                None
            }
            _ => None,
        };
        out.insert(name.clone(), value);
    }
    Ok(out)
}
