//! Compilation of combined actions into conditional subtrees.
//!
//! The template library covers the household action set: move, pick,
//! place, their move-and-* combinations, the scan family, and the
//! state-toggle actions. Each template wires sampler nodes ahead of the
//! atomic actions consuming their outputs; conditions verify constraints
//! against live observations.

use thiserror::Error;

use pddl_core::Fact;
use planner::{CombinedAction, ObjectStore};

use crate::exec::CSubBT;
use crate::node::{AtomicKind, BTNode, ConditionSpec, SamplerSpec, SlotSource};

#[derive(Debug, Error)]
pub enum CompileError {
    #[error("no template for action `{0}`")]
    NoTemplate(String),
    #[error("action `{action}` lacks binding for `?{var}`")]
    MissingBinding { action: String, var: String },
}

fn binding<'a>(
    action: &'a pddl_core::GroundAction,
    var: &str,
) -> Result<&'a String, CompileError> {
    action.binding.get(var).ok_or_else(|| CompileError::MissingBinding {
        action: action.schema.clone(),
        var: var.to_string(),
    })
}

pub fn compile(action: &CombinedAction, store: &ObjectStore) -> Result<CSubBT, CompileError> {
    let mut nodes = Vec::new();
    match action.template.as_str() {
        "move" => {
            nodes.extend(move_section(&action.constituents[0], store)?);
        }
        "pick" => {
            nodes.extend(pick_section(&action.constituents[0], store)?);
        }
        "place" => {
            nodes.extend(place_section(&action.constituents[0], store)?);
        }
        "move-and-pick" => {
            nodes.extend(move_section(&action.constituents[0], store)?);
            nodes.extend(pick_section(&action.constituents[1], store)?);
        }
        "move-and-place" => {
            nodes.extend(move_section(&action.constituents[0], store)?);
            nodes.extend(place_section(&action.constituents[1], store)?);
        }
        "scan_table" | "scan_drawer" | "scan_cover" => {
            nodes.extend(scan_section(&action.constituents[0])?);
        }
        "cook" | "clean" | "heat" => {
            nodes.extend(toggle_section(&action.constituents[0], &action.template)?);
        }
        other => return Err(CompileError::NoTemplate(other.to_string())),
    }
    Ok(CSubBT::new(action.clone(), BTNode::Sequence(nodes)))
}

/// `[Sampler(near-conf)?] Sampler(base-motion) MoveBase`
fn move_section(
    mv: &pddl_core::GroundAction,
    store: &ObjectStore,
) -> Result<Vec<BTNode>, CompileError> {
    let q2 = binding(mv, "q2")?.clone();
    let mut nodes = Vec::new();
    let target: SlotSource = if store.is_optimistic(&q2) {
        // destination pinned down at execution time by the near-conf sampler
        let Some(planner::Binding::Optimistic { stream, inputs }) = store.get(&q2) else {
            unreachable!("optimistic binding checked above");
        };
        let region = inputs.first().cloned().unwrap_or_default();
        nodes.push(BTNode::Sampler(SamplerSpec {
            stream: stream.clone(),
            inputs: vec![SlotSource::Const(region.clone())],
            outputs: vec!["q_dest".into()],
            constraint: Fact::new("nearconf", &[&q2, &region]),
            planned: None,
            perceive_region: None,
        }));
        SlotSource::Slot("q_dest".into())
    } else {
        SlotSource::Const(q2.clone())
    };
    let q1 = binding(mv, "q1")?.clone();
    let t = binding(mv, "t")?.clone();
    nodes.push(BTNode::Sampler(SamplerSpec {
        stream: "s-base-motion".into(),
        inputs: vec![SlotSource::LiveBase, target.clone()],
        outputs: vec!["t_move".into()],
        constraint: Fact::new("basemotion", &[&q1, &t, &q2]),
        planned: (!store.is_optimistic(&t)).then(|| SlotSource::Const(t.clone())),
        perceive_region: None,
    }));
    nodes.push(BTNode::Action {
        kind: AtomicKind::MoveBase {
            target,
            traj: SlotSource::Slot("t_move".into()),
        },
        constraint: Fact::new("basemotion", &[&q1, &t, &q2]),
    });
    Ok(nodes)
}

/// Detection fallback (with the viewpoint sweep), approach sampling, then
/// the pre-approach / approach / grasp atomic actions.
fn pick_section(
    pick: &pddl_core::GroundAction,
    store: &ObjectStore,
) -> Result<Vec<BTNode>, CompileError> {
    let arm = binding(pick, "a")?.clone();
    let obj = binding(pick, "o")?.clone();
    let region = binding(pick, "r")?.clone();
    let grasp = binding(pick, "g")?.clone();
    let traj = binding(pick, "t")?.clone();
    let pose = binding(pick, "p")?.clone();

    let on_fact = Fact::new("on", &[&obj, &region]);
    let mut nodes = Vec::new();

    // find the object: direct look, then the viewpoint sweep
    nodes.push(BTNode::Fallback(vec![
        BTNode::Condition(ConditionSpec::Detect {
            object: obj.clone(),
            region: region.clone(),
            bind_pose: "p_obs".into(),
            vantage: None,
            constraint: on_fact.clone(),
        }),
        BTNode::Sequence(vec![
            BTNode::Sampler(SamplerSpec {
                stream: planner::VIEWPOINT_SAMPLER.into(),
                inputs: vec![SlotSource::Const(region.clone())],
                outputs: vec!["q_vp".into()],
                constraint: on_fact.clone(),
                planned: None,
                perceive_region: None,
            }),
            BTNode::Sampler(SamplerSpec {
                stream: "s-base-motion".into(),
                inputs: vec![SlotSource::LiveBase, SlotSource::Slot("q_vp".into())],
                outputs: vec!["t_vp".into()],
                constraint: on_fact.clone(),
                planned: None,
                perceive_region: None,
            }),
            BTNode::Action {
                kind: AtomicKind::MoveBase {
                    target: SlotSource::Slot("q_vp".into()),
                    traj: SlotSource::Slot("t_vp".into()),
                },
                constraint: on_fact.clone(),
            },
            BTNode::Action {
                kind: AtomicKind::Scan {
                    region: region.clone(),
                },
                constraint: Fact::new("scanned", &[&region]),
            },
            BTNode::Condition(ConditionSpec::Detect {
                object: obj.clone(),
                region: region.clone(),
                bind_pose: "p_obs".into(),
                vantage: Some(SlotSource::Slot("q_vp".into())),
                constraint: on_fact.clone(),
            }),
        ]),
    ]));

    let q = binding(pick, "q")?.clone();
    nodes.extend(approach_nodes(
        &arm,
        &obj,
        &region,
        &grasp,
        &q,
        &traj,
        store,
        SlotSource::Slot("p_obs".into()),
        &pose,
    ));
    nodes.push(BTNode::Action {
        kind: AtomicKind::Grasp {
            object: obj.clone(),
        },
        constraint: Fact::new("holding", &[&arm, &obj]),
    });
    nodes.push(BTNode::Condition(ConditionSpec::Holding {
        object: obj.clone(),
        positive: true,
        constraint: Fact::new("holding", &[&arm, &obj]),
    }));
    Ok(nodes)
}

/// Stable-pose verification/resampling, approach sampling, then release.
fn place_section(
    place: &pddl_core::GroundAction,
    store: &ObjectStore,
) -> Result<Vec<BTNode>, CompileError> {
    let arm = binding(place, "a")?.clone();
    let obj = binding(place, "o")?.clone();
    let region = binding(place, "r")?.clone();
    let grasp = binding(place, "g")?.clone();
    let traj = binding(place, "t")?.clone();
    let pose = binding(place, "p")?.clone();

    let stable_fact = Fact::new("stable", &[&obj, &pose, &region]);
    let mut nodes = Vec::new();
    nodes.push(BTNode::Sampler(SamplerSpec {
        stream: "s-stable-pose".into(),
        inputs: vec![
            SlotSource::Const(obj.clone()),
            SlotSource::Const(region.clone()),
        ],
        outputs: vec!["p_place".into()],
        constraint: stable_fact.clone(),
        planned: (!store.is_optimistic(&pose)).then(|| SlotSource::Const(pose.clone())),
        perceive_region: Some(region.clone()),
    }));
    nodes.push(BTNode::Condition(ConditionSpec::StreamCheck {
        stream: "s-stable-pose".into(),
        region: region.clone(),
        inputs: vec![
            SlotSource::Const(obj.clone()),
            SlotSource::Const(region.clone()),
        ],
        outputs: vec![(SlotSource::Slot("p_place".into()), "p_place".into())],
        constraint: stable_fact.clone(),
    }));
    let q = binding(place, "q")?.clone();
    nodes.extend(approach_nodes(
        &arm,
        &obj,
        &region,
        &grasp,
        &q,
        &traj,
        store,
        SlotSource::Slot("p_place".into()),
        &pose,
    ));
    nodes.push(BTNode::Action {
        kind: AtomicKind::Release {
            object: obj.clone(),
            pose: SlotSource::Slot("p_place".into()),
        },
        constraint: Fact::new("on", &[&obj, &region]),
    });
    nodes.push(BTNode::Condition(ConditionSpec::OnObserved {
        object: obj.clone(),
        region: region.clone(),
        constraint: Fact::new("on", &[&obj, &region]),
    }));
    Ok(nodes)
}

/// Approach kinematics: sampler + verification condition + pre-approach and
/// approach actions. The kin trajectory is almost always deferred, so the
/// sampler resolves it from the live base and the observed/selected pose.
#[allow(clippy::too_many_arguments)]
fn approach_nodes(
    arm: &str,
    obj: &str,
    region: &str,
    grasp: &str,
    planned_q: &str,
    traj: &str,
    store: &ObjectStore,
    pose_src: SlotSource,
    planned_pose: &str,
) -> Vec<BTNode> {
    let kin_fact = Fact::new(
        "kin",
        &[arm, obj, planned_pose, grasp, planned_q, traj],
    );
    let mut nodes = Vec::new();
    let grasp_src = if store.is_optimistic(grasp) {
        nodes.push(BTNode::Sampler(SamplerSpec {
            stream: "s-grasp".into(),
            inputs: vec![SlotSource::Const(obj.to_string())],
            outputs: vec!["g_pick".into()],
            constraint: Fact::new("graspfor", &[obj, grasp]),
            planned: None,
            perceive_region: None,
        }));
        SlotSource::Slot("g_pick".into())
    } else {
        SlotSource::Const(grasp.to_string())
    };
    let ik_inputs = vec![
        SlotSource::Const(arm.to_string()),
        SlotSource::Const(obj.to_string()),
        pose_src.clone(),
        grasp_src.clone(),
        SlotSource::LiveBase,
        SlotSource::Const(region.to_string()),
    ];
    nodes.push(BTNode::Sampler(SamplerSpec {
        stream: "s-ik".into(),
        inputs: ik_inputs.clone(),
        outputs: vec!["t_app".into()],
        constraint: kin_fact.clone(),
        planned: (!store.is_optimistic(traj)).then(|| SlotSource::Const(traj.to_string())),
        perceive_region: Some(region.to_string()),
    }));
    nodes.push(BTNode::Condition(ConditionSpec::StreamCheck {
        stream: "s-ik".into(),
        region: region.to_string(),
        inputs: ik_inputs,
        outputs: vec![(SlotSource::Slot("t_app".into()), "t_app".into())],
        constraint: kin_fact.clone(),
    }));
    nodes.push(BTNode::Action {
        kind: AtomicKind::PreApproach { grasp: grasp_src },
        constraint: kin_fact.clone(),
    });
    nodes.push(BTNode::Action {
        kind: AtomicKind::Approach { pose: pose_src },
        constraint: kin_fact,
    });
    nodes
}

/// `NearRegion` gate, the scan itself, then the observed `Scanned` flag.
fn scan_section(scan: &pddl_core::GroundAction) -> Result<Vec<BTNode>, CompileError> {
    let region = binding(scan, "r")?.clone();
    let q = binding(scan, "q")?.clone();
    Ok(vec![
        BTNode::Condition(ConditionSpec::NearRegion {
            region: region.clone(),
            slack: 0.25,
            constraint: Fact::new("nearconf", &[&q, &region]),
        }),
        BTNode::Action {
            kind: AtomicKind::Scan {
                region: region.clone(),
            },
            constraint: Fact::new("scanned", &[&region]),
        },
        BTNode::Condition(ConditionSpec::ScannedFlag {
            region: region.clone(),
            constraint: Fact::new("scanned", &[&region]),
        }),
    ])
}

/// State toggles: cook and heat refuse dirty objects, so the condition is
/// checked from observation before operating the appliance.
fn toggle_section(
    toggle: &pddl_core::GroundAction,
    template: &str,
) -> Result<Vec<BTNode>, CompileError> {
    let obj = binding(toggle, "o")?.clone();
    let region = binding(toggle, "r")?.clone();
    let q = binding(toggle, "q")?.clone();
    let flag = match template {
        "cook" => "cooked",
        "clean" => "cleaned",
        "heat" => "heated",
        other => return Err(CompileError::NoTemplate(other.to_string())),
    };
    let mut nodes = vec![BTNode::Condition(ConditionSpec::NearRegion {
        region: region.clone(),
        slack: 0.25,
        constraint: Fact::new("nearconf", &[&q, &region]),
    })];
    if template != "clean" {
        nodes.push(BTNode::Condition(ConditionSpec::Flag {
            object: obj.clone(),
            flag: "dirty".into(),
            positive: false,
            constraint: Fact::new("dirty", &[&obj]),
        }));
    }
    nodes.push(BTNode::Action {
        kind: AtomicKind::Toggle {
            region: region.clone(),
        },
        constraint: Fact::new(flag, &[&obj]),
    });
    nodes.push(BTNode::Condition(ConditionSpec::Flag {
        object: obj.clone(),
        flag: flag.into(),
        positive: true,
        constraint: Fact::new(flag, &[&obj]),
    }));
    Ok(nodes)
}
