//! XML canonical-form properties: golden file for the move-and-pick tree,
//! serialize/deserialize round-trips over randomized trees, and error
//! reporting on malformed input.

use std::collections::BTreeMap;

use proptest::prelude::*;

use csubbt_exec::{
    compile, deserialize_tree, serialize_tree, AtomicKind, BTNode, CSubBT, ConditionSpec,
    SamplerSpec, SlotSource, XmlError,
};
use pddl_core::{Fact, GroundAction};
use planner::CombinedAction;

fn asset_path(rel: &str) -> String {
    format!("{}/../../{}", env!("CARGO_MANIFEST_DIR"), rel)
}

fn synthetic_source() -> CombinedAction {
    let mut binding = BTreeMap::new();
    binding.insert("q".to_string(), "q1".to_string());
    CombinedAction {
        name: "pick".into(),
        template: "pick".into(),
        constituents: vec![GroundAction {
            schema: "pick".into(),
            args: vec!["arm1".into(), "cube1".into()],
            binding,
            pre_plus: vec![],
            pre_minus: vec![],
            eff_plus: vec![],
            eff_minus: vec![],
            static_plus: vec![],
            static_minus: vec![],
        }],
    }
}

#[test]
fn single_action_tree_is_one_action_element() {
    let tree = CSubBT::new(
        synthetic_source(),
        BTNode::Action {
            kind: AtomicKind::Grasp {
                object: "cube1".into(),
            },
            constraint: Fact::new("holding", &["arm1", "cube1"]),
        },
    );
    let xml = serialize_tree(&tree);
    assert!(xml.contains("<Action"));
    assert!(xml.contains("kind=\"Grasp\""));
    let restored = deserialize_tree(&xml).unwrap();
    assert_eq!(restored.root, tree.root);
}

#[test]
fn move_and_pick_tree_matches_the_golden_file() {
    // build the same plan the executor tests use, deterministically
    let asset = |rel: &str| std::fs::read_to_string(asset_path(rel)).unwrap();
    let domain = pddl_core::parse_domain(&asset("assets/pddl/household/domain.pddl")).unwrap();
    let problem = pddl_core::parse_problem(
        &asset("assets/pddl/household/problems/object_loss.pddl"),
        &domain,
    )
    .unwrap();
    let streams =
        pddl_core::parse_streams(&asset("assets/pddl/household/streams.pddl"), &domain).unwrap();
    let scene = world_sim::load_scene(&asset("assets/scenes/household.json")).unwrap();
    let mut registry = planner::SamplerRegistry::new(17);
    registry.register_streams(&streams).unwrap();
    let mut store = planner::ObjectStore::new();
    for (name, value) in world_sim::initial_bindings(&scene, &problem.objects).unwrap() {
        match value {
            Some(v) => store.insert(name, planner::Binding::Geom(v)),
            None => store.insert(name, planner::Binding::Plain),
        }
    }
    let inst = planner::instantiate_streams(
        &domain,
        &problem,
        &mut registry,
        &scene.view(),
        &planner::DeferralPolicy::default(),
        &mut store,
    )
    .unwrap();
    let task = planner::ground_task(&domain, &problem, &inst);
    let plan = planner::plan(
        &task,
        pddl_core::PlanProvenance::Initial,
        &planner::SearchLimits::default(),
    )
    .unwrap();
    let combined = planner::combine_actions(&plan);
    let mp = combined.iter().find(|c| c.name == "move-and-pick").unwrap();
    let xml = serialize_tree(&compile(mp, &store).unwrap());

    let golden_path = asset_path("assets/golden/move_and_pick.xml");
    if std::env::var("UPDATE_GOLDEN").is_ok() {
        std::fs::create_dir_all(std::path::Path::new(&golden_path).parent().unwrap()).unwrap();
        std::fs::write(&golden_path, &xml).unwrap();
    }
    let golden = std::fs::read_to_string(&golden_path)
        .expect("golden file present (regenerate with UPDATE_GOLDEN=1)");
    assert_eq!(xml, golden, "canonical XML drifted from the golden file");
}

#[test]
fn malformed_xml_is_rejected() {
    assert!(matches!(
        deserialize_tree("<CSubBT action=\"x\" template=\"x\"><Sequence>"),
        Err(XmlError::MalformedXml(_))
    ));
    assert!(matches!(
        deserialize_tree("<Bogus/>"),
        Err(XmlError::UnknownNodeTag(_))
    ));
}

// ---- randomized round-trip ----

fn arb_slot_source() -> impl Strategy<Value = SlotSource> {
    prop_oneof![
        "[a-z][a-z0-9-]{0,6}".prop_map(SlotSource::Const),
        "[a-z][a-z0-9_]{0,6}".prop_map(SlotSource::Slot),
        Just(SlotSource::LiveBase),
    ]
}

fn arb_fact() -> impl Strategy<Value = Fact> {
    (
        "[a-z][a-z0-9]{0,6}",
        prop::collection::vec("[a-z][a-z0-9-]{0,5}", 0..4),
    )
        .prop_map(|(pred, args)| Fact { pred, args })
}

fn arb_leaf() -> impl Strategy<Value = BTNode> {
    let sampler = (
        "[a-z][a-z-]{0,8}",
        prop::collection::vec(arb_slot_source(), 0..3),
        prop::collection::vec("[a-z][a-z_]{0,5}", 0..3),
        arb_fact(),
        prop::option::of(arb_slot_source()),
        prop::option::of("[a-z][a-z0-9]{0,5}".prop_map(String::from)),
    )
        .prop_map(|(stream, inputs, outputs, constraint, planned, region)| {
            BTNode::Sampler(SamplerSpec {
                stream,
                inputs,
                outputs,
                constraint,
                planned,
                perceive_region: region,
            })
        });
    let condition = prop_oneof![
        ("[a-z0-9]{1,5}", "[a-z0-9]{1,5}", "[a-z_]{1,5}", prop::option::of(arb_slot_source()), arb_fact()).prop_map(
            |(object, region, bind, vantage, constraint)| {
                BTNode::Condition(ConditionSpec::Detect {
                    object,
                    region,
                    bind_pose: bind,
                    vantage,
                    constraint,
                })
            }
        ),
        ("[a-z0-9]{1,5}", any::<bool>(), arb_fact()).prop_map(|(object, positive, constraint)| {
            BTNode::Condition(ConditionSpec::Holding {
                object,
                positive,
                constraint,
            })
        }),
        ("[a-z0-9]{1,5}", 0.0f64..0.5, arb_fact()).prop_map(|(region, slack, constraint)| {
            BTNode::Condition(ConditionSpec::NearRegion {
                region,
                slack,
                constraint,
            })
        }),
    ];
    let action = prop_oneof![
        (arb_slot_source(), arb_slot_source(), arb_fact()).prop_map(|(target, traj, constraint)| {
            BTNode::Action {
                kind: AtomicKind::MoveBase { target, traj },
                constraint,
            }
        }),
        ("[a-z0-9]{1,5}", arb_fact()).prop_map(|(object, constraint)| BTNode::Action {
            kind: AtomicKind::Grasp { object },
            constraint,
        }),
        ("[a-z0-9]{1,5}", arb_fact()).prop_map(|(region, constraint)| BTNode::Action {
            kind: AtomicKind::Scan { region },
            constraint,
        }),
    ];
    prop_oneof![sampler, condition, action]
}

fn arb_tree() -> impl Strategy<Value = BTNode> {
    arb_leaf().prop_recursive(3, 24, 4, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..4).prop_map(BTNode::Sequence),
            prop::collection::vec(inner, 1..4).prop_map(BTNode::Fallback),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// deserialize(serialize(t)) restores the exact node structure, and the
    /// canonical form is a fixpoint.
    #[test]
    fn randomized_trees_round_trip(root in arb_tree()) {
        let tree = CSubBT::new(synthetic_source(), root.clone());
        let xml = serialize_tree(&tree);
        let restored = deserialize_tree(&xml).unwrap();
        prop_assert_eq!(&restored.root, &root);
        prop_assert_eq!(&restored.source.name, &tree.source.name);
        let xml2 = serialize_tree(&restored);
        prop_assert_eq!(xml, xml2);
    }
}
