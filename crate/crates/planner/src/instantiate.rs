//! Level-bounded forward stream instantiation with a deferral policy.
//!
//! At each level every stream instance whose `:domain` literals are
//! satisfied by the current facts yields once more (until its cursor is
//! exhausted), adding certified facts and fresh typed constants. Deferred
//! instances never invoke their sampler: they mint optimistic placeholder
//! outputs and record their certified literals as *assumed* facts, to be
//! verified by execution-time sampling.

use std::collections::{BTreeMap, BTreeSet};

use geom_samplers::{SamplerCursor, SceneView};
use pddl_core::{Domain, Fact, PredKind, Problem, SemType, Term};
use serde::{Deserialize, Serialize};

use crate::error::PlannerError;
use crate::join::{join_literals, FactIndex, VarBinding};
use crate::registry::{resolve_inputs, SamplerRegistry};
use crate::store::{Binding, ObjectStore};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeferralPolicy {
    /// Static predicates whose certifying streams are deferred outright.
    pub deferred: BTreeSet<String>,
    /// Defer every stream producing a base configuration: motion-terminal
    /// values (the `?q2` of a move) cannot be pinned down before moving.
    pub defer_motion_terminal: bool,
    /// Level bound K on forward instantiation.
    pub max_level: usize,
}

impl Default for DeferralPolicy {
    fn default() -> Self {
        DeferralPolicy {
            deferred: [String::from("kin")].into(),
            defer_motion_terminal: true,
            max_level: 3,
        }
    }
}

impl DeferralPolicy {
    pub fn full_certification() -> Self {
        DeferralPolicy {
            deferred: BTreeSet::new(),
            defer_motion_terminal: false,
            max_level: 3,
        }
    }
}

/// Result of stream instantiation: the fact sets grounding works from.
#[derive(Debug, Clone, Default)]
pub struct Instantiation {
    /// Static facts known to hold: `:init` statics plus sampled certifications.
    pub certified: BTreeSet<Fact>,
    /// Static facts assumed under the deferral policy.
    pub assumed: BTreeSet<Fact>,
    /// Type of every constant, including stream outputs.
    pub object_types: BTreeMap<String, String>,
    /// Levels actually run before saturation.
    pub levels_run: usize,
}

impl Instantiation {
    /// certified ∪ assumed — the static set plans are validated against.
    pub fn static_pool(&self) -> BTreeSet<Fact> {
        self.certified.union(&self.assumed).cloned().collect()
    }
}

pub fn instantiate_streams(
    domain: &Domain,
    problem: &Problem,
    registry: &mut SamplerRegistry,
    view: &SceneView,
    policy: &DeferralPolicy,
    store: &mut ObjectStore,
) -> Result<Instantiation, PlannerError> {
    let mut inst = Instantiation {
        certified: problem.init_static.clone(),
        assumed: BTreeSet::new(),
        object_types: problem.objects.clone(),
        levels_run: 0,
    };
    let mut cursors: BTreeMap<String, SamplerCursor> = BTreeMap::new();
    let mut deferred_done: BTreeSet<String> = BTreeSet::new();

    let stream_names: Vec<String> = registry.streams().map(|s| s.spec.name.clone()).collect();

    for _level in 0..policy.max_level {
        let pool: Vec<Fact> = inst.certified.union(&inst.assumed).cloned().collect();
        let index = FactIndex::from_facts(&pool);
        let types_snapshot = inst.object_types.clone();
        let mut new_any = false;

        for name in &stream_names {
            let spec = registry
                .sampler(name)
                .expect("registered stream")
                .spec
                .clone();
            for binding in instance_bindings(&spec, &index, &types_snapshot) {
                let input_names: Vec<String> = spec
                    .inputs
                    .iter()
                    .map(|(v, _)| binding[v].clone())
                    .collect();
                let key = format!("{name}({})", input_names.join(","));

                let defer = spec
                    .certified_relations()
                    .any(|l| policy.deferred.contains(&l.predicate))
                    || input_names.iter().any(|n| store.is_optimistic(n))
                    || (policy.defer_motion_terminal
                        && spec
                            .outputs
                            .iter()
                            .any(|(_, t)| SemType::from_type_name(t) == SemType::Config));

                if defer {
                    if !deferred_done.insert(key) {
                        continue;
                    }
                    let mut full = binding.clone();
                    for (var, ty) in &spec.outputs {
                        let fresh = store.fresh_name(var);
                        store.insert(
                            fresh.clone(),
                            Binding::Optimistic {
                                stream: name.clone(),
                                inputs: input_names.clone(),
                            },
                        );
                        inst.object_types.insert(fresh.clone(), ty.clone());
                        full.insert(var.clone(), fresh);
                    }
                    for lit in spec.certified_relations() {
                        inst.assumed.insert(ground_fact(lit, &full));
                    }
                    new_any = true;
                } else {
                    let cursor = match cursors.get_mut(&key) {
                        Some(c) => c,
                        None => {
                            let Some(inputs) = resolve_inputs(store, &input_names) else {
                                // become resolvable only if a placeholder input
                                // gets replaced, which never happens at plan time
                                continue;
                            };
                            let Some(c) = registry.cursor(view, name, &inputs) else {
                                continue;
                            };
                            cursors.entry(key.clone()).or_insert(c)
                        }
                    };
                    if cursor.is_exhausted() {
                        continue;
                    }
                    let Some(outputs) = registry.yield_next(
                        cursors.get_mut(&key).expect("cursor just ensured"),
                    ) else {
                        continue;
                    };
                    let mut full = binding.clone();
                    for ((var, ty), value) in spec.outputs.iter().zip(outputs) {
                        let fresh = store.fresh_name(var);
                        store.insert(fresh.clone(), Binding::Geom(value));
                        inst.object_types.insert(fresh.clone(), ty.clone());
                        full.insert(var.clone(), fresh);
                    }
                    for lit in spec.certified_relations() {
                        inst.certified.insert(ground_fact(lit, &full));
                    }
                    new_any = true;
                }
            }
        }

        inst.levels_run += 1;
        if !new_any {
            // saturated: check predicate-level goal support
            let unsupported = unsupported_goals(domain, problem, &inst);
            if !unsupported.is_empty() {
                return Err(PlannerError::LevelBudgetExhausted { unsupported });
            }
            break;
        }
    }
    Ok(inst)
}

/// Bindings of a stream's input variables: join the relational `:domain`
/// literals against the fact pool, then enumerate remaining inputs by type.
fn instance_bindings(
    spec: &pddl_core::StreamSpec,
    index: &FactIndex,
    types: &BTreeMap<String, String>,
) -> Vec<VarBinding> {
    let mut bindings = join_literals(&spec.domain_literals, index, VarBinding::new());
    for (var, ty) in &spec.inputs {
        if bindings.iter().all(|b| b.contains_key(var)) {
            // bound by the join; keep only type-consistent bindings
            if !ty.is_empty() {
                bindings.retain(|b| types.get(&b[var]).is_some_and(|t| t == ty));
            }
            continue;
        }
        let candidates: Vec<&String> = types
            .iter()
            .filter(|(_, t)| ty.is_empty() || *t == ty)
            .map(|(n, _)| n)
            .collect();
        let mut next = Vec::with_capacity(bindings.len() * candidates.len());
        for b in &bindings {
            match b.get(var) {
                Some(v) => {
                    if ty.is_empty() || types.get(v).is_some_and(|t| t == ty) {
                        next.push(b.clone());
                    }
                }
                None => {
                    for c in &candidates {
                        let mut e = b.clone();
                        e.insert(var.clone(), (*c).clone());
                        next.push(e);
                    }
                }
            }
        }
        bindings = next;
    }
    bindings
}

fn ground_fact(lit: &pddl_core::Literal, binding: &VarBinding) -> Fact {
    Fact {
        pred: lit.predicate.clone(),
        args: lit
            .args
            .iter()
            .map(|t| match t {
                Term::Const(c) => c.clone(),
                Term::Var(v) => binding[v].clone(),
            })
            .collect(),
    }
}

fn unsupported_goals(domain: &Domain, problem: &Problem, inst: &Instantiation) -> Vec<String> {
    let mut out = Vec::new();
    for lit in &problem.goal {
        let supported = match lit.kind {
            PredKind::Fluent => {
                let in_init = lit.to_fact().is_some_and(|f| problem.init.holds(&f));
                let producible = domain.actions.iter().any(|a| {
                    a.eff_plus.iter().any(|e| e.predicate == lit.predicate)
                        || a.eff_minus.iter().any(|e| e.predicate == lit.predicate)
                });
                in_init || producible || !lit.positive
            }
            _ => lit.to_fact().is_some_and(|f| {
                inst.certified.contains(&f) || inst.assumed.contains(&f) || !lit.positive
            }),
        };
        if !supported {
            out.push(lit.to_string());
        }
    }
    out
}
