//! Conditional-sampler registry: binds parsed stream specs to the geometric
//! samplers that implement them, meters every yield by phase (plan vs
//! execution), and hands out enumeration cursors.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use geom_samplers::{
    base_motion_candidates, check_base_motion, check_ik, check_near_conf, check_stable_pose,
    derive_seed, grasp_candidates, ik_candidates, near_conf_candidates, stable_pose_candidates,
    viewpoint_candidates, BaseConfig, GeomValue, SamplerCursor, SceneView,
};
use pddl_core::StreamSpec;

use crate::error::PlannerError;
use crate::store::{Binding, ObjectStore};

/// Executor-level sampler for re-perception viewpoints; not a PDDL stream
/// but metered like one.
pub const VIEWPOINT_SAMPLER: &str = "s-viewpoint";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Plan,
    Exec,
}

/// Which geometric sampler implements a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerKind {
    Grasp,
    StablePose,
    NearConf,
    Ik,
    BaseMotion,
}

impl SamplerKind {
    fn for_stream(name: &str) -> Option<SamplerKind> {
        match name {
            "s-grasp" => Some(SamplerKind::Grasp),
            "s-stable-pose" => Some(SamplerKind::StablePose),
            "s-near-conf" => Some(SamplerKind::NearConf),
            "s-ik" => Some(SamplerKind::Ik),
            "s-base-motion" => Some(SamplerKind::BaseMotion),
            _ => None,
        }
    }
}

/// The binding of one stream spec to its sampler implementation.
#[derive(Debug, Clone)]
pub struct ConditionalSampler {
    pub spec: StreamSpec,
    pub kind: SamplerKind,
}

/// Resolved sampler input: the constant name plus its geometric payload
/// (None for plain constants such as object or region ids).
pub type ResolvedInputs = Vec<(String, Option<GeomValue>)>;

#[derive(Debug, Clone, Default)]
pub struct SamplerRegistry {
    samplers: BTreeMap<String, ConditionalSampler>,
    pub seed: u64,
    phase: Phase,
    counts: BTreeMap<(Phase, String), u64>,
}

impl Default for Phase {
    fn default() -> Self {
        Phase::Plan
    }
}

impl SamplerRegistry {
    pub fn new(seed: u64) -> SamplerRegistry {
        SamplerRegistry {
            samplers: BTreeMap::new(),
            seed,
            phase: Phase::Plan,
            counts: BTreeMap::new(),
        }
    }

    /// Registers household samplers for each parsed stream, keyed by stream
    /// name.
    pub fn register_streams(&mut self, specs: &[StreamSpec]) -> Result<(), PlannerError> {
        for spec in specs {
            let kind = SamplerKind::for_stream(&spec.name)
                .ok_or_else(|| PlannerError::UnknownSampler(spec.name.clone()))?;
            self.samplers.insert(
                spec.name.clone(),
                ConditionalSampler {
                    spec: spec.clone(),
                    kind,
                },
            );
        }
        Ok(())
    }

    pub fn sampler(&self, stream: &str) -> Option<&ConditionalSampler> {
        self.samplers.get(stream)
    }

    pub fn streams(&self) -> impl Iterator<Item = &ConditionalSampler> {
        self.samplers.values()
    }

    pub fn set_phase(&mut self, phase: Phase) {
        self.phase = phase;
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn counts(&self) -> &BTreeMap<(Phase, String), u64> {
        &self.counts
    }

    pub fn phase_total(&self, phase: Phase) -> u64 {
        self.counts
            .iter()
            .filter(|((p, _), _)| *p == phase)
            .map(|(_, n)| n)
            .sum()
    }

    pub fn reset_counts(&mut self) {
        self.counts.clear();
    }

    fn seed_for(&self, stream: &str, inputs: &ResolvedInputs) -> u64 {
        let key: String = inputs
            .iter()
            .map(|(n, _)| n.as_str())
            .collect::<Vec<_>>()
            .join(",");
        derive_seed(self.seed, stream, fnv(&key)) ^ fnv(stream)
    }

    /// Builds a cursor over the candidate list of a stream instance.
    /// Returns None when a geometric input is missing (an optimistic
    /// placeholder): such instances cannot be sampled and must be deferred.
    pub fn cursor(
        &self,
        view: &SceneView,
        stream: &str,
        inputs: &ResolvedInputs,
    ) -> Option<SamplerCursor> {
        let cs = self.samplers.get(stream)?;
        let seed = self.seed_for(stream, inputs);
        let cfg = &view.cfg;
        let by_index = |i: usize| -> Option<&GeomValue> { inputs.get(i)?.1.as_ref() };
        let name_of = |i: usize| -> &str { inputs[i].0.as_str() };
        let candidates: Vec<Vec<GeomValue>> = match cs.kind {
            SamplerKind::Grasp => {
                let shape = by_index(0)?.as_shape()?;
                grasp_candidates(shape, seed, cfg.cap_grasp)
                    .into_iter()
                    .map(|g| vec![GeomValue::Grasp(g)])
                    .collect()
            }
            SamplerKind::StablePose => {
                let shape = by_index(0)?.as_shape()?;
                let region = name_of(1);
                stable_pose_candidates(view, Some(name_of(0)), shape, region, seed)
                    .into_iter()
                    .map(|p| vec![GeomValue::Pose(p)])
                    .collect()
            }
            SamplerKind::NearConf => near_conf_candidates(view, name_of(0), seed)
                .into_iter()
                .map(|q| vec![GeomValue::Config(q)])
                .collect(),
            SamplerKind::Ik => {
                let shape = by_index(1)?.as_shape()?;
                let pose = by_index(2)?.as_pose()?;
                let grasp = by_index(3)?.as_grasp()?;
                let q = by_index(4)?.as_config()?;
                ik_candidates(view, Some(name_of(1)), shape, pose, grasp, q, seed)
                    .into_iter()
                    .map(|t| vec![GeomValue::Traj(t)])
                    .collect()
            }
            SamplerKind::BaseMotion => {
                let q1 = by_index(0)?.as_config()?;
                let q2 = by_index(1)?.as_config()?;
                base_motion_candidates(view, q1, q2)
                    .into_iter()
                    .map(|t| vec![GeomValue::Traj(t)])
                    .collect()
            }
        };
        let capacity = self.capacity_of(cs.kind, cfg);
        Some(SamplerCursor::new(stream, seed, capacity, candidates))
    }

    fn capacity_of(&self, kind: SamplerKind, cfg: &geom_samplers::GeomConfig) -> usize {
        match kind {
            SamplerKind::Grasp => cfg.cap_grasp,
            SamplerKind::StablePose => cfg.cap_pose,
            SamplerKind::NearConf => cfg.cap_near_conf,
            SamplerKind::Ik => cfg.cap_ik,
            SamplerKind::BaseMotion => cfg.cap_base_motion,
        }
    }

    /// Cursor over perception viewpoints around a region (executor-side).
    pub fn viewpoint_cursor(
        &self,
        view: &SceneView,
        region: &str,
        from: &BaseConfig,
    ) -> SamplerCursor {
        let candidates = viewpoint_candidates(view, region, from)
            .into_iter()
            .map(|q| vec![GeomValue::Config(q)])
            .collect();
        SamplerCursor::new(
            VIEWPOINT_SAMPLER,
            self.seed,
            view.cfg.cap_viewpoint,
            candidates,
        )
    }

    /// Metered cursor advance: the only way the engine draws samples.
    pub fn yield_next(&mut self, cursor: &mut SamplerCursor) -> Option<Vec<GeomValue>> {
        *self
            .counts
            .entry((self.phase, cursor.sampler.clone()))
            .or_insert(0) += 1;
        cursor.next()
    }

    /// Re-checks a certified relation against a (possibly live) view; the
    /// constraint relation C of the conditional sampler.
    pub fn check(
        &self,
        view: &SceneView,
        stream: &str,
        inputs: &ResolvedInputs,
        outputs: &[GeomValue],
    ) -> bool {
        let Some(cs) = self.samplers.get(stream) else {
            return false;
        };
        let by_index = |i: usize| -> Option<&GeomValue> { inputs.get(i)?.1.as_ref() };
        let name_of = |i: usize| -> &str { inputs[i].0.as_str() };
        match cs.kind {
            SamplerKind::Grasp => {
                let (Some(shape), Some(g)) = (
                    by_index(0).and_then(|v| v.as_shape()),
                    outputs.first().and_then(|v| v.as_grasp()),
                ) else {
                    return false;
                };
                geom_samplers::check_grasp(shape, g)
            }
            SamplerKind::StablePose => {
                let (Some(shape), Some(p)) = (
                    by_index(0).and_then(|v| v.as_shape()),
                    outputs.first().and_then(|v| v.as_pose()),
                ) else {
                    return false;
                };
                check_stable_pose(view, Some(name_of(0)), shape, p, name_of(1))
            }
            SamplerKind::NearConf => {
                let Some(q) = outputs.first().and_then(|v| v.as_config()) else {
                    return false;
                };
                check_near_conf(view, q, name_of(0), 0.1)
            }
            SamplerKind::Ik => {
                let (Some(p), Some(q), Some(t)) = (
                    by_index(2).and_then(|v| v.as_pose()),
                    by_index(4).and_then(|v| v.as_config()),
                    outputs.first().and_then(|v| v.as_traj()),
                ) else {
                    return false;
                };
                check_ik(view, Some(name_of(1)), p, q, t)
            }
            SamplerKind::BaseMotion => {
                let (Some(q1), Some(q2), Some(t)) = (
                    by_index(0).and_then(|v| v.as_config()),
                    by_index(1).and_then(|v| v.as_config()),
                    outputs.first().and_then(|v| v.as_traj()),
                ) else {
                    return false;
                };
                check_base_motion(view, q1, t, q2)
            }
        }
    }
}

/// Resolves constant names through the store into sampler inputs.
pub fn resolve_inputs(store: &ObjectStore, names: &[String]) -> Option<ResolvedInputs> {
    names
        .iter()
        .map(|n| match store.get(n) {
            Some(Binding::Geom(v)) => Some((n.clone(), Some(v.clone()))),
            Some(Binding::Plain) => Some((n.clone(), None)),
            Some(Binding::Optimistic { .. }) | None => None,
        })
        .collect()
}

fn fnv(s: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}
