//! Behavior-tree node model for conditional subtrees.
//!
//! Trees are built by the template compiler, executed by the tick engine,
//! and serialized to canonical XML. Parameter values flow through *slots*:
//! a sampler writes its outputs into named slots, downstream nodes read
//! them; the plan's own constants and the live base configuration are the
//! other two value sources.

use serde::{Deserialize, Serialize};

use pddl_core::Fact;

/// Pseudo-slot name for the live base configuration; actions that move the
/// base "write" it, samplers reading the live base depend on it.
pub const BASE_SLOT: &str = "@base";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SlotSource {
    /// A plan constant, resolved through the object store.
    Const(String),
    /// A blackboard slot written by an upstream node.
    Slot(String),
    /// The robot's current base configuration.
    LiveBase,
}

impl SlotSource {
    /// Slots this source depends on (for backtrack routing).
    pub fn reads(&self) -> Option<&str> {
        match self {
            SlotSource::Slot(s) => Some(s),
            SlotSource::LiveBase => Some(BASE_SLOT),
            SlotSource::Const(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AtomicKind {
    MoveBase { target: SlotSource, traj: SlotSource },
    PreApproach { grasp: SlotSource },
    Approach { pose: SlotSource },
    Grasp { object: String },
    Release { object: String, pose: SlotSource },
    Scan { region: String },
    Toggle { region: String },
}

impl AtomicKind {
    pub fn name(&self) -> &'static str {
        match self {
            AtomicKind::MoveBase { .. } => "MoveBase",
            AtomicKind::PreApproach { .. } => "PreApproach",
            AtomicKind::Approach { .. } => "Approach",
            AtomicKind::Grasp { .. } => "Grasp",
            AtomicKind::Release { .. } => "Release",
            AtomicKind::Scan { .. } => "Scan",
            AtomicKind::Toggle { .. } => "Toggle",
        }
    }

    pub fn reads(&self) -> Vec<&str> {
        let mut out = Vec::new();
        match self {
            AtomicKind::MoveBase { target, traj } => {
                out.extend(target.reads());
                out.extend(traj.reads());
            }
            AtomicKind::PreApproach { grasp } => out.extend(grasp.reads()),
            AtomicKind::Approach { pose } => out.extend(pose.reads()),
            AtomicKind::Release { pose, .. } => out.extend(pose.reads()),
            AtomicKind::Grasp { .. } | AtomicKind::Scan { .. } | AtomicKind::Toggle { .. } => {}
        }
        out
    }

    /// Slots this action writes (the live base for base motions).
    pub fn writes(&self) -> Vec<&str> {
        match self {
            AtomicKind::MoveBase { .. } => vec![BASE_SLOT],
            _ => vec![],
        }
    }
}

/// Observation-backed condition checks. Every condition carries the ground
/// literal it verifies so failures can name the unsatisfied constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ConditionSpec {
    /// Re-checks a certified relation against live detections in `region`;
    /// on success binds each (planned) output value into its slot.
    StreamCheck {
        stream: String,
        region: String,
        inputs: Vec<SlotSource>,
        outputs: Vec<(SlotSource, String)>, // (planned value, slot to bind)
        constraint: Fact,
    },
    /// Object detected inside a region; binds the observed pose. `vantage`
    /// marks the viewpoint the detection attempt is tied to, so a failed
    /// detection routes back to the viewpoint sampler.
    Detect {
        object: String,
        region: String,
        bind_pose: String,
        vantage: Option<SlotSource>,
        constraint: Fact,
    },
    /// Proprioception: the gripper holds (or does not hold) the object.
    Holding {
        object: String,
        positive: bool,
        constraint: Fact,
    },
    /// Object observed resting in the region.
    OnObserved {
        object: String,
        region: String,
        constraint: Fact,
    },
    /// The region has been scanned during this run.
    ScannedFlag { region: String, constraint: Fact },
    /// Object state flag observed present (or absent, when !positive).
    Flag {
        object: String,
        flag: String,
        positive: bool,
        constraint: Fact,
    },
    /// The base stands within operating range of the region.
    NearRegion {
        region: String,
        slack: f64,
        constraint: Fact,
    },
}

impl ConditionSpec {
    pub fn constraint(&self) -> &Fact {
        match self {
            ConditionSpec::StreamCheck { constraint, .. }
            | ConditionSpec::Detect { constraint, .. }
            | ConditionSpec::Holding { constraint, .. }
            | ConditionSpec::OnObserved { constraint, .. }
            | ConditionSpec::ScannedFlag { constraint, .. }
            | ConditionSpec::Flag { constraint, .. }
            | ConditionSpec::NearRegion { constraint, .. } => constraint,
        }
    }

    /// Positive polarity unless the condition checks an absence.
    pub fn positive(&self) -> bool {
        match self {
            ConditionSpec::Holding { positive, .. } | ConditionSpec::Flag { positive, .. } => {
                *positive
            }
            _ => true,
        }
    }

    pub fn reads(&self) -> Vec<&str> {
        match self {
            ConditionSpec::StreamCheck {
                inputs, outputs, ..
            } => {
                let mut out: Vec<&str> = inputs.iter().filter_map(|s| s.reads()).collect();
                out.extend(outputs.iter().filter_map(|(s, _)| s.reads()));
                out.push(BASE_SLOT); // live view depends on where we stand
                out
            }
            ConditionSpec::NearRegion { .. } => vec![BASE_SLOT],
            ConditionSpec::Detect { vantage, .. } => {
                vantage.iter().filter_map(|s| s.reads()).collect()
            }
            _ => vec![],
        }
    }

    pub fn writes(&self) -> Vec<&str> {
        match self {
            ConditionSpec::StreamCheck { outputs, .. } => {
                outputs.iter().map(|(_, slot)| slot.as_str()).collect()
            }
            ConditionSpec::Detect { bind_pose, .. } => vec![bind_pose],
            _ => vec![],
        }
    }
}

/// A sampler node: advances a cursor over a conditional sampler, binding
/// outputs into slots. `constraint` is the ground literal the sampled
/// values are meant to satisfy, used in anomaly reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerSpec {
    pub stream: String,
    pub inputs: Vec<SlotSource>,
    pub outputs: Vec<String>,
    pub constraint: Fact,
    /// Plan-time value tried first when it still satisfies the constraint
    /// relation against the live view.
    pub planned: Option<SlotSource>,
    /// Region perceived before sampling, for samplers whose constraint
    /// depends on live object placements.
    pub perceive_region: Option<String>,
}

impl SamplerSpec {
    pub fn reads(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self.inputs.iter().filter_map(|s| s.reads()).collect();
        out.extend(self.planned.as_ref().and_then(|s| s.reads()));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BTNode {
    Sequence(Vec<BTNode>),
    Fallback(Vec<BTNode>),
    Condition(ConditionSpec),
    Sampler(SamplerSpec),
    /// Atomic command; `constraint` names the literal blamed when the
    /// actuation itself faults.
    Action { kind: AtomicKind, constraint: Fact },
}

impl BTNode {
    pub fn children(&self) -> &[BTNode] {
        match self {
            BTNode::Sequence(c) | BTNode::Fallback(c) => c,
            _ => &[],
        }
    }

    /// Slots read anywhere in this subtree.
    pub fn reads(&self) -> Vec<&str> {
        match self {
            BTNode::Sequence(c) | BTNode::Fallback(c) => {
                c.iter().flat_map(|n| n.reads()).collect()
            }
            BTNode::Condition(c) => c.reads(),
            BTNode::Sampler(s) => s.reads(),
            BTNode::Action { kind, .. } => kind.reads(),
        }
    }

    /// Slots written anywhere in this subtree.
    pub fn writes(&self) -> Vec<&str> {
        match self {
            BTNode::Sequence(c) | BTNode::Fallback(c) => {
                c.iter().flat_map(|n| n.writes()).collect()
            }
            BTNode::Condition(c) => c.writes(),
            BTNode::Sampler(s) => s.outputs.iter().map(String::as_str).collect(),
            BTNode::Action { kind, .. } => kind.writes(),
        }
    }

    pub fn count_nodes(&self) -> usize {
        1 + self.children().iter().map(BTNode::count_nodes).sum::<usize>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BTStatus {
    Idle,
    Running,
    Succeeded,
    Failed,
}
