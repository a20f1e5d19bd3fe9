//! Structured anomaly reports: the executor's feedback when a constraint's
//! sampling space is exhausted. Field names and their order are fixed; the
//! JSON form is consumed by the replanning pipeline and by replay tests.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use geom_samplers::SamplerCursor;
use pddl_core::Fact;

/// The unsatisfied ground literal, with polarity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportConstraint {
    pub predicate: String,
    pub args: Vec<String>,
    pub positive: bool,
}

impl ReportConstraint {
    pub fn new(fact: &Fact, positive: bool) -> Self {
        ReportConstraint {
            predicate: fact.pred.clone(),
            args: fact.args.clone(),
            positive,
        }
    }

    pub fn fact(&self) -> Fact {
        Fact {
            pred: self.predicate.clone(),
            args: self.args.clone(),
        }
    }

    /// `(pred a b)` or `(not (pred a b))`.
    pub fn render(&self) -> String {
        let inner = if self.args.is_empty() {
            format!("({})", self.predicate)
        } else {
            format!("({} {})", self.predicate, self.args.join(" "))
        };
        if self.positive {
            inner
        } else {
            format!("(not {inner})")
        }
    }
}

/// Emitted when a CSubBT gives up: every sampler cursor feeding the failed
/// constraint is exhausted and the constraint still does not hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyReport {
    pub failed_action: String,
    pub args: Vec<String>,
    pub unsatisfied_constraint: ReportConstraint,
    /// Cursor indices explored per sampler while this subtree ran.
    pub explored: BTreeMap<String, u64>,
    /// Rendered ground facts observed around the failure, sorted.
    pub observed_facts: Vec<String>,
    pub snapshot_id: String,
    pub step: u64,
}

impl AnomalyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Assembles a report, asserting the no-premature-emission invariant: a
/// report may only exist once every feeding cursor is exhausted.
#[allow(clippy::too_many_arguments)]
pub fn emit_anomaly(
    failed_action: &str,
    args: Vec<String>,
    constraint: ReportConstraint,
    feeding: &[&SamplerCursor],
    explored: BTreeMap<String, u64>,
    observed_facts: Vec<String>,
    snapshot_id: String,
    step: u64,
) -> AnomalyReport {
    for cursor in feeding {
        assert!(
            cursor.is_exhausted(),
            "premature emission: cursor `{}` still has {} candidates",
            cursor.sampler,
            cursor.remaining()
        );
    }
    AnomalyReport {
        failed_action: failed_action.to_string(),
        args,
        unsatisfied_constraint: constraint,
        explored,
        observed_facts,
        snapshot_id,
        step,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constraint_rendering_handles_polarity() {
        let c = ReportConstraint::new(&Fact::new("on", &["cube1", "table1"]), true);
        assert_eq!(c.render(), "(on cube1 table1)");
        let n = ReportConstraint::new(&Fact::new("dirty", &["apple"]), false);
        assert_eq!(n.render(), "(not (dirty apple))");
    }

    #[test]
    #[should_panic(expected = "premature emission")]
    fn unexhausted_cursor_panics() {
        let cursor = SamplerCursor::new(
            "s-test",
            0,
            4,
            vec![vec![geom_samplers::GeomValue::Config(
                geom_samplers::BaseConfig::new(0.0, 0.0, 0.0),
            )]],
        );
        emit_anomaly(
            "pick",
            vec![],
            ReportConstraint::new(&Fact::new("on", &["a", "b"]), true),
            &[&cursor],
            BTreeMap::new(),
            vec![],
            "snap-1".into(),
            0,
        );
    }

    #[test]
    fn json_field_order_is_fixed() {
        let report = AnomalyReport {
            failed_action: "pick".into(),
            args: vec!["cube1".into()],
            unsatisfied_constraint: ReportConstraint::new(
                &Fact::new("on", &["cube1", "table1"]),
                true,
            ),
            explored: [("s-viewpoint".to_string(), 8u64)].into(),
            observed_facts: vec!["(scanned table1)".into()],
            snapshot_id: "snap-1".into(),
            step: 12,
        };
        let json = serde_json::to_string(&report).unwrap();
        let keys: Vec<&str> = json
            .match_indices('"')
            .map(|_| "")
            .take(0)
            .collect::<Vec<_>>()
            .into_iter()
            .collect();
        let _ = keys;
        let order = [
            "failed_action",
            "args",
            "unsatisfied_constraint",
            "explored",
            "observed_facts",
            "snapshot_id",
            "step",
        ];
        let mut last = 0;
        for key in order {
            let pos = json.find(&format!("\"{key}\"")).unwrap();
            assert!(pos > last || last == 0, "field {key} out of order");
            last = pos;
        }
    }
}
