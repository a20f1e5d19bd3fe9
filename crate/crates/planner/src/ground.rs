//! Grounding: instantiate action schemas over the typed object universe,
//! pruned by the static fact pool. An action whose static preconditions
//! cannot all be found in certified ∪ assumed is never emitted.

use std::collections::BTreeMap;

use pddl_core::{Domain, Fact, GroundAction, Literal, Problem, SymbolicState};

use crate::instantiate::Instantiation;
use crate::join::{join_literals, FactIndex, VarBinding};

/// A fully grounded planning task.
#[derive(Debug, Clone)]
pub struct GroundTask {
    pub actions: Vec<GroundAction>,
    pub init: SymbolicState,
    pub goal: Vec<Literal>,
    pub certified: std::collections::BTreeSet<Fact>,
    pub assumed: std::collections::BTreeSet<Fact>,
}

impl GroundTask {
    pub fn static_pool(&self) -> std::collections::BTreeSet<Fact> {
        self.certified.union(&self.assumed).cloned().collect()
    }
}

pub fn ground_task(domain: &Domain, problem: &Problem, inst: &Instantiation) -> GroundTask {
    let pool: Vec<Fact> = inst.certified.union(&inst.assumed).cloned().collect();
    let index = FactIndex::from_facts(&pool);

    let mut actions = Vec::new();
    for schema in &domain.actions {
        let positive_static: Vec<Literal> = schema
            .static_pre
            .iter()
            .filter(|l| l.positive)
            .cloned()
            .collect();
        let bindings = join_literals(&positive_static, &index, VarBinding::new());
        for binding in bindings {
            for full in complete_binding(schema, binding, &inst.object_types) {
                let Some(action) = schema.ground(&full) else {
                    continue;
                };
                // negative static preconditions filter here, once
                if action.static_minus.iter().any(|f| index.contains(f)) {
                    continue;
                }
                debug_assert!(
                    action.static_plus.iter().all(|f| index.contains(f)),
                    "join must cover every positive static precondition"
                );
                actions.push(action);
            }
        }
    }
    actions.sort_by(|a, b| a.schema.cmp(&b.schema).then_with(|| a.args.cmp(&b.args)));
    actions.dedup();

    GroundTask {
        actions,
        init: problem.init.clone(),
        goal: problem.goal.clone(),
        certified: inst.certified.clone(),
        assumed: inst.assumed.clone(),
    }
}

/// Extends a partial binding over the remaining (static-free) parameters by
/// enumerating objects of the declared parameter type.
fn complete_binding(
    schema: &pddl_core::ActionSchema,
    base: VarBinding,
    types: &BTreeMap<String, String>,
) -> Vec<VarBinding> {
    let mut bindings = vec![base];
    for (var, ty) in &schema.params {
        let mut next = Vec::new();
        for b in &bindings {
            match b.get(var) {
                Some(bound) => {
                    if types.get(bound).is_some_and(|t| t == ty) {
                        next.push(b.clone());
                    }
                }
                None => {
                    for (name, t) in types {
                        if t == ty {
                            let mut e = b.clone();
                            e.insert(var.clone(), name.clone());
                            next.push(e);
                        }
                    }
                }
            }
        }
        bindings = next;
    }
    bindings
}
