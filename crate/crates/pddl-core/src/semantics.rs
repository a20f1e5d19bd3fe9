//! Applicability, successor and plan-validation semantics.
//!
//! States hold fluent facts only. Static preconditions are checked against
//! the `assumed` set (facts certified by streams, given in `:init`, or
//! assumed under a deferral policy) and never against the state.

use std::collections::BTreeSet;

use crate::error::{PddlError, Result};
use crate::types::{Fact, GroundAction, Literal, Plan, Problem, SymbolicState, ValidationReport};

/// True iff `action` can fire in `state` given the static facts in
/// `assumed`: fluent positive preconditions hold in the state, fluent
/// negative preconditions are absent from it, and static preconditions are
/// satisfied from `assumed` alone.
pub fn applicable(action: &GroundAction, state: &SymbolicState, assumed: &BTreeSet<Fact>) -> bool {
    action.pre_plus.iter().all(|f| state.holds(f))
        && action.pre_minus.iter().all(|f| !state.holds(f))
        && action.static_plus.iter().all(|f| assumed.contains(f))
        && action.static_minus.iter().all(|f| !assumed.contains(f))
}

/// Successor state `(s \ eff-) ∪ eff+`. The input state is not modified.
pub fn apply(action: &GroundAction, state: &SymbolicState) -> SymbolicState {
    let mut facts = state.facts.clone();
    for f in &action.eff_minus {
        facts.remove(f);
    }
    for f in &action.eff_plus {
        facts.insert(f.clone());
    }
    SymbolicState { facts }
}

/// Like [`apply`] but checks applicability first.
pub fn apply_checked(
    action: &GroundAction,
    state: &SymbolicState,
    assumed: &BTreeSet<Fact>,
) -> Result<SymbolicState> {
    if !applicable(action, state, assumed) {
        return Err(PddlError::NotApplicable {
            action: action.signature(),
            reason: "precondition check failed".to_string(),
        });
    }
    Ok(apply(action, state))
}

/// Validates a plan by sequential application from the problem's initial
/// state. `assumed` is the full static fact set (certified ∪ assumed ∪
/// `:init` statics). The report pinpoints the first inapplicable step and
/// any goal literals unsatisfied in the final state.
pub fn validate_plan(problem: &Problem, plan: &Plan, assumed: &BTreeSet<Fact>) -> ValidationReport {
    let mut state = problem.init.clone();
    for (i, step) in plan.steps.iter().enumerate() {
        if !applicable(step, &state, assumed) {
            return ValidationReport {
                ok: false,
                failing_step: Some(i),
                missing_goal_literals: Vec::new(),
            };
        }
        state = apply(step, &state);
    }
    let missing = unsatisfied_goals(&problem.goal, &state, assumed);
    ValidationReport {
        ok: missing.is_empty(),
        failing_step: None,
        missing_goal_literals: missing,
    }
}

/// Goal literals not satisfied by `state`. Static goal literals (unusual,
/// but permitted) are checked against `assumed`.
pub fn unsatisfied_goals(
    goal: &[Literal],
    state: &SymbolicState,
    assumed: &BTreeSet<Fact>,
) -> Vec<Literal> {
    goal.iter()
        .filter(|lit| {
            let Some(fact) = lit.to_fact() else {
                return true; // non-ground goal never satisfied
            };
            let holds = if lit.kind == crate::types::PredKind::Fluent {
                state.holds(&fact)
            } else {
                assumed.contains(&fact)
            };
            holds != lit.positive
        })
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{PlanProvenance, SymbolicState};
    use std::collections::BTreeMap;

    fn ga(name: &str) -> GroundAction {
        GroundAction {
            schema: name.to_string(),
            args: vec![],
            binding: BTreeMap::new(),
            pre_plus: vec![],
            pre_minus: vec![],
            eff_plus: vec![],
            eff_minus: vec![],
            static_plus: vec![],
            static_minus: vec![],
        }
    }

    #[test]
    fn vacuous_preconditions_are_applicable_anywhere() {
        let a = ga("noop");
        let s = SymbolicState::from_facts([Fact::new("on", &["a", "b"])]);
        assert!(applicable(&a, &s, &BTreeSet::new()));
        assert!(applicable(&a, &SymbolicState::new(), &BTreeSet::new()));
    }

    #[test]
    fn positive_precondition_is_a_subset_test() {
        let mut a = ga("pickup");
        a.pre_plus = vec![Fact::new("holding", &["arm", "cube"])];
        let holds = SymbolicState::from_facts([Fact::new("holding", &["arm", "cube"])]);
        assert!(applicable(&a, &holds, &BTreeSet::new()));
        assert!(!applicable(&a, &SymbolicState::new(), &BTreeSet::new()));
    }

    #[test]
    fn static_preconditions_never_read_the_state() {
        let mut a = ga("pick");
        a.static_plus = vec![Fact::new("kin", &["arm", "cube", "p1", "g1", "q1", "t1"])];
        // Even a state containing the same fact does not satisfy a static pre.
        let s = SymbolicState::from_facts([Fact::new(
            "kin",
            &["arm", "cube", "p1", "g1", "q1", "t1"],
        )]);
        assert!(!applicable(&a, &s, &BTreeSet::new()));
        let assumed: BTreeSet<Fact> =
            [Fact::new("kin", &["arm", "cube", "p1", "g1", "q1", "t1"])].into();
        assert!(applicable(&a, &s, &assumed));
    }

    #[test]
    fn apply_is_set_algebra() {
        let mut a = ga("place");
        a.eff_plus = vec![Fact::new("on", &["c", "t1"])];
        a.eff_minus = vec![Fact::new("holding", &["a", "c"])];
        let s = SymbolicState::from_facts([Fact::new("holding", &["a", "c"])]);
        let s2 = apply(&a, &s);
        assert_eq!(
            s2,
            SymbolicState::from_facts([Fact::new("on", &["c", "t1"])])
        );
        // input untouched
        assert!(s.holds(&Fact::new("holding", &["a", "c"])));
    }

    #[test]
    fn adding_an_existing_fact_keeps_set_semantics() {
        let mut a = ga("touch");
        a.eff_plus = vec![Fact::new("on", &["c", "t1"])];
        let s = SymbolicState::from_facts([Fact::new("on", &["c", "t1"])]);
        assert_eq!(apply(&a, &s).len(), 1);
    }

    #[test]
    fn empty_plan_with_satisfied_goal_is_ok() {
        let problem = Problem {
            name: "p".into(),
            domain_name: "d".into(),
            objects: BTreeMap::new(),
            init: SymbolicState::from_facts([Fact::new("on", &["a", "b"])]),
            init_static: BTreeSet::new(),
            goal: vec![Literal {
                predicate: "on".into(),
                args: vec![
                    crate::types::Term::Const("a".into()),
                    crate::types::Term::Const("b".into()),
                ],
                positive: true,
                kind: crate::types::PredKind::Fluent,
            }],
        };
        let plan = Plan::empty(PlanProvenance::Initial);
        assert!(validate_plan(&problem, &plan, &BTreeSet::new()).ok);
    }

    #[test]
    fn failing_step_is_reported() {
        let problem = Problem {
            name: "p".into(),
            domain_name: "d".into(),
            objects: BTreeMap::new(),
            init: SymbolicState::new(),
            init_static: BTreeSet::new(),
            goal: vec![],
        };
        let ok = ga("ok");
        let mut bad = ga("bad");
        bad.pre_plus = vec![Fact::new("missing", &[])];
        let plan = Plan {
            steps: vec![ok.clone(), ok, bad],
            provenance: PlanProvenance::Initial,
        };
        let report = validate_plan(&problem, &plan, &BTreeSet::new());
        assert!(!report.ok);
        assert_eq!(report.failing_step, Some(2));
    }
}
