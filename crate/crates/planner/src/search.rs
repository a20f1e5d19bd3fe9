//! Greedy best-first search on the goal-count heuristic, plus the reachable
//! state-space enumeration used by oracle comparisons and a delete-relaxed
//! feasibility probe.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, BTreeSet, HashMap, HashSet};

use pddl_core::{applicable, apply, unsatisfied_goals, Fact, Plan, PlanProvenance, SymbolicState};

use crate::error::PlannerError;
use crate::ground::GroundTask;

#[derive(Debug, Clone, Copy)]
pub struct SearchLimits {
    pub max_expansions: usize,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            max_expansions: 500_000,
        }
    }
}

/// Number of unsatisfied goal literals.
fn goal_count(task: &GroundTask, state: &SymbolicState, statics: &BTreeSet<Fact>) -> usize {
    unsatisfied_goals(&task.goal, state, statics).len()
}

/// Greedy best-first search. Deterministic: the open list orders by
/// (goal-count, depth, insertion sequence) and successors are generated in
/// sorted (action name, argument tuple) order.
pub fn plan(
    task: &GroundTask,
    provenance: PlanProvenance,
    limits: &SearchLimits,
) -> Result<Plan, PlannerError> {
    let statics = task.static_pool();
    if goal_count(task, &task.init, &statics) == 0 {
        return Ok(Plan::empty(provenance));
    }

    // arena of (state, parent index, action index)
    let mut nodes: Vec<(SymbolicState, usize, usize)> = vec![(task.init.clone(), usize::MAX, 0)];
    let mut seen: HashSet<SymbolicState> = HashSet::new();
    seen.insert(task.init.clone());

    let mut open: BinaryHeap<Reverse<(usize, usize, usize)>> = BinaryHeap::new();
    open.push(Reverse((
        goal_count(task, &task.init, &statics),
        0, // depth
        0, // node index (doubles as insertion sequence)
    )));

    let mut expansions = 0usize;
    while let Some(Reverse((_h, depth, node_idx))) = open.pop() {
        expansions += 1;
        if expansions > limits.max_expansions {
            return Err(PlannerError::NoPlan(format!(
                "search limit of {} expansions reached",
                limits.max_expansions
            )));
        }
        let state = nodes[node_idx].0.clone();
        for (action_idx, action) in task.actions.iter().enumerate() {
            if !applicable(action, &state, &statics) {
                continue;
            }
            let next = apply(action, &state);
            if seen.contains(&next) {
                continue;
            }
            seen.insert(next.clone());
            let h = goal_count(task, &next, &statics);
            nodes.push((next, node_idx, action_idx));
            let idx = nodes.len() - 1;
            if h == 0 {
                return Ok(extract_plan(task, &nodes, idx, provenance));
            }
            open.push(Reverse((h, depth + 1, idx)));
        }
    }
    Err(PlannerError::NoPlan(
        "reachable space exhausted under the current certification".into(),
    ))
}

fn extract_plan(
    task: &GroundTask,
    nodes: &[(SymbolicState, usize, usize)],
    mut idx: usize,
    provenance: PlanProvenance,
) -> Plan {
    let mut steps = Vec::new();
    while idx != 0 {
        let (_, parent, action_idx) = (&nodes[idx].0, nodes[idx].1, nodes[idx].2);
        steps.push(task.actions[action_idx].clone());
        idx = parent;
    }
    steps.reverse();
    Plan { steps, provenance }
}

/// Breadth-first enumeration of every state reachable from the task's
/// initial state. Used by the state-space equality oracle; capped to keep
/// runaway domains from hanging tests.
pub fn reachable_states(task: &GroundTask, cap: usize) -> HashSet<SymbolicState> {
    let statics = task.static_pool();
    let mut seen: HashSet<SymbolicState> = HashSet::new();
    let mut queue = std::collections::VecDeque::new();
    seen.insert(task.init.clone());
    queue.push_back(task.init.clone());
    while let Some(state) = queue.pop_front() {
        if seen.len() >= cap {
            break;
        }
        for action in &task.actions {
            if !applicable(action, &state, &statics) {
                continue;
            }
            let next = apply(action, &state);
            if !seen.contains(&next) {
                seen.insert(next.clone());
                queue.push_back(next);
            }
        }
    }
    seen
}

/// Shortest-plan length from init to goal by uniform BFS, if within cap.
pub fn bfs_optimal_length(task: &GroundTask, cap: usize) -> Option<usize> {
    let statics = task.static_pool();
    if goal_count(task, &task.init, &statics) == 0 {
        return Some(0);
    }
    let mut dist: HashMap<SymbolicState, usize> = HashMap::new();
    let mut queue = std::collections::VecDeque::new();
    dist.insert(task.init.clone(), 0);
    queue.push_back(task.init.clone());
    while let Some(state) = queue.pop_front() {
        let d = dist[&state];
        if dist.len() >= cap {
            return None;
        }
        for action in &task.actions {
            if !applicable(action, &state, &statics) {
                continue;
            }
            let next = apply(action, &state);
            if dist.contains_key(&next) {
                continue;
            }
            if goal_count(task, &next, &statics) == 0 {
                return Some(d + 1);
            }
            dist.insert(next.clone(), d + 1);
            queue.push_back(next);
        }
    }
    None
}

/// Delete-relaxed reachability: can every positive goal literal be reached
/// when effects never delete? A cheap necessary condition for solvability.
pub fn relaxed_goal_reachable(task: &GroundTask) -> bool {
    let statics = task.static_pool();
    let mut facts: BTreeSet<Fact> = task.init.facts.clone();
    loop {
        let state = SymbolicState {
            facts: facts.clone(),
        };
        let mut grew = false;
        for action in &task.actions {
            // relaxed applicability ignores negative preconditions
            let ok = action.pre_plus.iter().all(|f| facts.contains(f))
                && action.static_plus.iter().all(|f| statics.contains(f));
            if !ok {
                continue;
            }
            for f in &action.eff_plus {
                if facts.insert(f.clone()) {
                    grew = true;
                }
            }
        }
        let _ = state;
        if !grew {
            break;
        }
    }
    task.goal.iter().all(|lit| {
        if !lit.positive {
            return true; // deletes relaxed away
        }
        match lit.to_fact() {
            Some(f) => {
                if lit.kind == pddl_core::PredKind::Fluent {
                    facts.contains(&f)
                } else {
                    statics.contains(&f)
                }
            }
            None => false,
        }
    })
}
