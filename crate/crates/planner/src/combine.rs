//! Combines adjacent plan actions into the units the executor compiles:
//! a move directly followed by a pick or place becomes one combined action.

use serde::{Deserialize, Serialize};

use pddl_core::{GroundAction, Plan};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinedAction {
    /// e.g. `move-and-pick`; equals the schema name for pass-through actions.
    pub name: String,
    /// Atomic-action template this compiles to.
    pub template: String,
    /// Constituent ground actions, contiguous in the source plan.
    pub constituents: Vec<GroundAction>,
}

impl CombinedAction {
    pub fn signature(&self) -> String {
        let parts: Vec<String> = self.constituents.iter().map(|a| a.signature()).collect();
        format!("{}[{}]", self.name, parts.join(" "))
    }

    /// The action whose effects and binding drive the template (the last
    /// constituent: pick in move-and-pick).
    pub fn primary(&self) -> &GroundAction {
        self.constituents.last().expect("non-empty combination")
    }
}

/// Greedy left-to-right merge of (move, pick) and (move, place) pairs; all
/// other actions pass through singly.
pub fn combine_actions(plan: &Plan) -> Vec<CombinedAction> {
    let mut out = Vec::new();
    let steps = &plan.steps;
    let mut i = 0;
    while i < steps.len() {
        let here = &steps[i];
        let merged = if here.schema == "move" && i + 1 < steps.len() {
            let next = &steps[i + 1];
            if (next.schema == "pick" || next.schema == "place") && move_feeds(here, next) {
                let name = format!("move-and-{}", next.schema);
                out.push(CombinedAction {
                    name: name.clone(),
                    template: name,
                    constituents: vec![here.clone(), next.clone()],
                });
                i += 2;
                true
            } else {
                false
            }
        } else {
            false
        };
        if !merged {
            out.push(CombinedAction {
                name: here.schema.clone(),
                template: here.schema.clone(),
                constituents: vec![here.clone()],
            });
            i += 1;
        }
    }
    out
}

/// The move's destination must be the configuration the manipulation uses.
fn move_feeds(mv: &GroundAction, manip: &GroundAction) -> bool {
    let dest = mv.binding.get("q2");
    let used = manip.binding.get("q");
    matches!((dest, used), (Some(a), Some(b)) if a == b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use pddl_core::{PlanProvenance, SymbolicState};
    use std::collections::BTreeMap;

    fn action(schema: &str, binding: &[(&str, &str)]) -> GroundAction {
        let b: BTreeMap<String, String> = binding
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        GroundAction {
            schema: schema.into(),
            args: b.values().cloned().collect(),
            binding: b,
            pre_plus: vec![],
            pre_minus: vec![],
            eff_plus: vec![],
            eff_minus: vec![],
            static_plus: vec![],
            static_minus: vec![],
        }
    }

    fn plan_of(steps: Vec<GroundAction>) -> Plan {
        Plan {
            steps,
            provenance: PlanProvenance::Initial,
        }
    }

    #[test]
    fn move_then_pick_merges() {
        let plan = plan_of(vec![
            action("move", &[("q1", "q0"), ("q2", "q1"), ("t", "t1")]),
            action("pick", &[("q", "q1"), ("o", "cube1")]),
        ]);
        let combined = combine_actions(&plan);
        assert_eq!(combined.len(), 1);
        assert_eq!(combined[0].name, "move-and-pick");
        assert_eq!(combined[0].constituents.len(), 2);
    }

    #[test]
    fn lone_pick_passes_through() {
        let plan = plan_of(vec![action("pick", &[("q", "q1")])]);
        let combined = combine_actions(&plan);
        assert_eq!(combined.len(), 1);
        assert_eq!(combined[0].name, "pick");
    }

    #[test]
    fn move_to_a_different_conf_does_not_merge() {
        let plan = plan_of(vec![
            action("move", &[("q1", "q0"), ("q2", "q1")]),
            action("pick", &[("q", "q9")]),
        ]);
        let combined = combine_actions(&plan);
        assert_eq!(combined.len(), 2);
    }

    #[test]
    fn composed_effects_are_preserved() {
        // effect composition over the combination equals composition over
        // the source plan, step by step
        let mut a = action("move", &[("q1", "q0"), ("q2", "q1"), ("t", "t1")]);
        a.eff_plus = vec![pddl_core::Fact::new("atbconf", &["q1"])];
        a.eff_minus = vec![pddl_core::Fact::new("atbconf", &["q0"])];
        let mut b = action("pick", &[("q", "q1"), ("o", "c")]);
        b.eff_plus = vec![pddl_core::Fact::new("holding", &["arm", "c"])];
        b.eff_minus = vec![pddl_core::Fact::new("on", &["c", "t"])];
        let plan = plan_of(vec![a, b]);

        let mut direct = SymbolicState::from_facts([
            pddl_core::Fact::new("atbconf", &["q0"]),
            pddl_core::Fact::new("on", &["c", "t"]),
        ]);
        for step in &plan.steps {
            direct = pddl_core::apply(step, &direct);
        }

        let mut via_combined = SymbolicState::from_facts([
            pddl_core::Fact::new("atbconf", &["q0"]),
            pddl_core::Fact::new("on", &["c", "t"]),
        ]);
        for ca in combine_actions(&plan) {
            for step in &ca.constituents {
                via_combined = pddl_core::apply(step, &via_combined);
            }
        }
        assert_eq!(direct, via_combined);
    }
}
