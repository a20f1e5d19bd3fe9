//! Property suites: parse/print round-trips, the frame property of `apply`,
//! monotonicity of `applicable` in the assumed set, and agreement between
//! `validate_plan` and step-by-step composition.

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use pddl_core::{
    applicable, apply, parse_domain, parse_problem, parse_streams, print_domain, print_problem,
    print_streams, validate_plan, Fact, GroundAction, Literal, Plan, PlanProvenance, PredKind,
    Problem, SymbolicState, Term,
};

fn asset(rel: &str) -> String {
    let path = format!("{}/../../{}", env!("CARGO_MANIFEST_DIR"), rel);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("read {path}: {e}"))
}

#[test]
fn corpus_files_round_trip() {
    let corpus = [
        "assets/pddl/household/domain.pddl",
        "assets/pddl/blocksworld/domain.pddl",
        "docs/examples/minimal-domain.pddl",
    ];
    for rel in corpus {
        let text = asset(rel);
        let ast = parse_domain(&text).unwrap();
        let printed = print_domain(&ast);
        let reparsed = parse_domain(&printed).unwrap_or_else(|e| panic!("{rel}: {e}\n{printed}"));
        assert_eq!(ast, reparsed, "{rel}");
    }

    let household = parse_domain(&asset("assets/pddl/household/domain.pddl")).unwrap();
    for rel in [
        "assets/pddl/household/problems/object_loss.pddl",
        "assets/pddl/household/problems/blocking_bowl.pddl",
        "assets/pddl/household/problems/state_fridge.pddl",
    ] {
        let ast = parse_problem(&asset(rel), &household).unwrap();
        let printed = print_problem(&ast);
        assert_eq!(ast, parse_problem(&printed, &household).unwrap(), "{rel}");
    }

    let minimal = parse_domain(&asset("docs/examples/minimal-domain.pddl")).unwrap();
    for (rel, domain) in [
        ("assets/pddl/household/streams.pddl", &household),
        ("docs/examples/minimal-streams.pddl", &minimal),
    ] {
        let ast = parse_streams(&asset(rel), domain).unwrap();
        let printed = print_streams("roundtrip", &ast);
        assert_eq!(ast, parse_streams(&printed, domain).unwrap(), "{rel}");
    }
}

// ---- randomized round-trip over generated problems ----

fn ident() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9-]{0,6}".prop_map(|s| s)
}

prop_compose! {
    fn arb_problem()(
        objs in prop::collection::btree_map(ident(), prop::sample::select(vec!["block"]), 1..6),
        goal_neg in prop::collection::vec(any::<bool>(), 1..4),
        seed in any::<u64>(),
    ) -> Problem {
        let names: Vec<String> = objs.keys().cloned().collect();
        let mut init = SymbolicState::new();
        let mut statics = BTreeSet::new();
        let mut goal = Vec::new();
        let mut k = seed;
        let mut next = || { k = k.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); (k >> 33) as usize };
        for (i, name) in names.iter().enumerate() {
            if i % 2 == 0 {
                init.insert(Fact::new("ontable", &[name]));
            } else {
                statics.insert(Fact::new("fixed", &[name]));
            }
        }
        for positive in goal_neg {
            let a = &names[next() % names.len()];
            let b = &names[next() % names.len()];
            goal.push(Literal {
                predicate: "on".into(),
                args: vec![Term::Const(a.clone()), Term::Const(b.clone())],
                positive,
                kind: PredKind::Fluent,
            });
        }
        Problem {
            name: "gen".into(),
            domain_name: "bw".into(),
            objects: objs.into_iter().map(|(k, v)| (k, v.to_string())).collect(),
            init,
            init_static: statics,
            goal,
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// print -> parse is the identity on problem ASTs.
    #[test]
    fn problem_print_parse_round_trip(problem in arb_problem()) {
        let domain = parse_domain(
            "(define (domain bw) (:types block) (:predicates (on ?x - block ?y - block) (ontable ?x - block) (fixed ?x - block) (touch ?x - block)) (:action t :parameters (?x - block) :precondition (and) :effect (and (touch ?x))))",
        ).unwrap();
        // `on`/`ontable` must be fluent for init facts to land in the state.
        let domain = {
            let mut d = domain;
            for p in ["on", "ontable"] {
                d.predicates.get_mut(p).unwrap().kind = PredKind::Fluent;
            }
            d
        };
        let printed = print_problem(&problem);
        let reparsed = parse_problem(&printed, &domain).unwrap();
        prop_assert_eq!(problem, reparsed);
    }
}

// ---- semantic properties over random states and actions ----

fn arb_fact() -> impl Strategy<Value = Fact> {
    (
        prop::sample::select(vec!["on", "clear", "holding"]),
        prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d"]), 1..3),
    )
        .prop_map(|(p, args)| Fact {
            pred: p.to_string(),
            args: args.into_iter().map(String::from).collect(),
        })
}

fn arb_state() -> impl Strategy<Value = SymbolicState> {
    prop::collection::btree_set(arb_fact(), 0..12).prop_map(|facts| SymbolicState { facts })
}

fn arb_action() -> impl Strategy<Value = GroundAction> {
    (
        prop::collection::vec(arb_fact(), 0..4),
        prop::collection::vec(arb_fact(), 0..4),
        prop::collection::vec(arb_fact(), 0..4),
        prop::collection::vec(arb_fact(), 0..4),
        prop::collection::vec(arb_fact(), 0..3),
    )
        .prop_map(|(pp, pm, ep, em, st)| GroundAction {
            schema: "rand".into(),
            args: vec![],
            binding: BTreeMap::new(),
            pre_plus: pp,
            pre_minus: pm,
            eff_plus: ep,
            eff_minus: em,
            static_plus: st,
            static_minus: vec![],
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    /// Frame property: apply never removes a fact outside eff- and never
    /// omits a fact in eff+.
    #[test]
    fn apply_respects_the_frame(state in arb_state(), action in arb_action()) {
        let next = apply(&action, &state);
        for f in state.iter() {
            if !action.eff_minus.contains(f) {
                prop_assert!(next.holds(f), "dropped {f} outside eff-");
            }
        }
        for f in &action.eff_plus {
            prop_assert!(next.holds(f), "missing {f} from eff+");
        }
        for f in next.iter() {
            prop_assert!(state.holds(f) || action.eff_plus.contains(f), "invented {f}");
        }
    }

    /// Enlarging the assumed static set never flips applicable true->false
    /// (for actions without negative static preconditions).
    #[test]
    fn applicable_is_monotone_in_assumed(
        state in arb_state(),
        action in arb_action(),
        extra in prop::collection::btree_set(arb_fact(), 0..6),
    ) {
        let base: BTreeSet<Fact> = action.static_plus.iter().cloned().collect();
        let mut larger = base.clone();
        larger.extend(extra);
        if applicable(&action, &state, &base) {
            prop_assert!(applicable(&action, &state, &larger));
        }
    }

    /// validate_plan agrees with manual applicable/apply composition.
    #[test]
    fn validate_agrees_with_composition(
        init in arb_state(),
        steps in prop::collection::vec(arb_action(), 0..6),
        goal_facts in prop::collection::vec(arb_fact(), 0..3),
    ) {
        let assumed: BTreeSet<Fact> =
            steps.iter().flat_map(|a| a.static_plus.iter().cloned()).collect();
        let problem = Problem {
            name: "p".into(),
            domain_name: "d".into(),
            objects: BTreeMap::new(),
            init: init.clone(),
            init_static: BTreeSet::new(),
            goal: goal_facts
                .iter()
                .map(|f| Literal {
                    predicate: f.pred.clone(),
                    args: f.args.iter().map(|a| Term::Const(a.clone())).collect(),
                    positive: true,
                    kind: PredKind::Fluent,
                })
                .collect(),
        };
        let plan = Plan { steps: steps.clone(), provenance: PlanProvenance::Initial };
        let report = validate_plan(&problem, &plan, &assumed);

        // manual composition
        let mut state = init;
        let mut failing = None;
        for (i, step) in steps.iter().enumerate() {
            if !applicable(step, &state, &assumed) {
                failing = Some(i);
                break;
            }
            state = apply(step, &state);
        }
        match failing {
            Some(i) => {
                prop_assert!(!report.ok);
                prop_assert_eq!(report.failing_step, Some(i));
            }
            None => {
                let all_hold = problem.goal.iter().all(|l| state.satisfies(l));
                prop_assert_eq!(report.ok, all_hold);
                prop_assert_eq!(report.failing_step, None);
            }
        }
    }
}
