//! Conjunctive matching of literal sets against a fact pool. Used both by
//! stream instantiation (matching `:domain` sections) and by grounding
//! (matching static preconditions), so symbolic joins stay in one place.

use std::collections::BTreeMap;

use pddl_core::{Fact, Literal, Term};

/// Facts indexed by predicate, each list sorted for deterministic joins.
#[derive(Debug, Clone, Default)]
pub struct FactIndex {
    by_pred: BTreeMap<String, Vec<Fact>>,
}

impl FactIndex {
    pub fn from_facts<'a>(facts: impl IntoIterator<Item = &'a Fact>) -> FactIndex {
        let mut by_pred: BTreeMap<String, Vec<Fact>> = BTreeMap::new();
        for f in facts {
            by_pred.entry(f.pred.clone()).or_default().push(f.clone());
        }
        for list in by_pred.values_mut() {
            list.sort();
            list.dedup();
        }
        FactIndex { by_pred }
    }

    pub fn of(&self, pred: &str) -> &[Fact] {
        self.by_pred.get(pred).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn contains(&self, fact: &Fact) -> bool {
        self.by_pred
            .get(&fact.pred)
            .is_some_and(|v| v.binary_search(fact).is_ok())
    }
}

pub type VarBinding = BTreeMap<String, String>;

fn unify(lit: &Literal, fact: &Fact, binding: &VarBinding) -> Option<VarBinding> {
    if lit.predicate != fact.pred || lit.args.len() != fact.args.len() {
        return None;
    }
    let mut out = binding.clone();
    for (term, value) in lit.args.iter().zip(&fact.args) {
        match term {
            Term::Const(c) => {
                if c != value {
                    return None;
                }
            }
            Term::Var(v) => match out.get(v) {
                Some(bound) if bound != value => return None,
                Some(_) => {}
                None => {
                    out.insert(v.clone(), value.clone());
                }
            },
        }
    }
    Some(out)
}

/// All variable bindings under which every positive literal matches a fact
/// in the pool. Literals are joined most-constrained-first (most variables
/// already bound) for efficiency; the result order is deterministic.
pub fn join_literals(literals: &[Literal], pool: &FactIndex, start: VarBinding) -> Vec<VarBinding> {
    let mut remaining: Vec<&Literal> = literals.iter().collect();
    let mut bindings = vec![start];
    while !remaining.is_empty() && !bindings.is_empty() {
        let bound_vars: Vec<&String> = bindings[0].keys().collect();
        let pick = remaining
            .iter()
            .enumerate()
            .max_by_key(|(i, lit)| {
                let bound = lit
                    .args
                    .iter()
                    .filter(|t| match t {
                        Term::Var(v) => bound_vars.iter().any(|b| *b == v),
                        Term::Const(_) => true,
                    })
                    .count();
                (bound, usize::MAX - i) // ties: earliest literal
            })
            .map(|(i, _)| i)
            .expect("remaining is non-empty");
        let lit = remaining.remove(pick);
        let mut next = Vec::new();
        for binding in &bindings {
            for fact in pool.of(&lit.predicate) {
                if let Some(ext) = unify(lit, fact, binding) {
                    next.push(ext);
                }
            }
        }
        bindings = next;
    }
    bindings
}

#[cfg(test)]
mod tests {
    use super::*;
    use pddl_core::PredKind;

    fn lit(pred: &str, vars: &[&str]) -> Literal {
        Literal {
            predicate: pred.into(),
            args: vars.iter().map(|v| Term::Var(v.to_string())).collect(),
            positive: true,
            kind: PredKind::Static,
        }
    }

    #[test]
    fn join_binds_shared_variables_consistently() {
        let pool = FactIndex::from_facts(&[
            Fact::new("stable", &["cube", "p1", "table"]),
            Fact::new("stable", &["cube", "p2", "tray"]),
            Fact::new("nearconf", &["q1", "table"]),
            Fact::new("nearconf", &["q2", "tray"]),
        ]);
        let lits = [lit("stable", &["o", "p", "r"]), lit("nearconf", &["q", "r"])];
        let results = join_literals(&lits, &pool, VarBinding::new());
        assert_eq!(results.len(), 2);
        for b in &results {
            // q's region always matches p's region
            let r = &b["r"];
            match b["p"].as_str() {
                "p1" => assert_eq!(r, "table"),
                "p2" => assert_eq!(r, "tray"),
                other => panic!("unexpected pose {other}"),
            }
        }
    }

    #[test]
    fn unmatched_literal_yields_no_bindings() {
        let pool = FactIndex::from_facts(&[Fact::new("a", &["x"])]);
        let lits = [lit("missing", &["v"])];
        assert!(join_literals(&lits, &pool, VarBinding::new()).is_empty());
    }
}
