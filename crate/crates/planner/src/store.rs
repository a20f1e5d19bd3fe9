//! Object store: binds PDDL constants to geometric payloads.
//!
//! Stream outputs create fresh constants. Deferred streams create
//! *optimistic* constants — placeholders carrying the provenance needed to
//! resolve them by sampling at execution time.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use geom_samplers::GeomValue;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Binding {
    /// Concrete geometric value.
    Geom(GeomValue),
    /// Placeholder produced by a deferred stream instance; must be resolved
    /// by execution-time sampling before use.
    Optimistic { stream: String, inputs: Vec<String> },
    /// Non-geometric constant (object ids, region ids, arm ids).
    Plain,
}

impl Binding {
    pub fn is_optimistic(&self) -> bool {
        matches!(self, Binding::Optimistic { .. })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ObjectStore {
    map: BTreeMap<String, Binding>,
    counters: BTreeMap<String, u64>,
}

impl ObjectStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, binding: Binding) {
        self.map.insert(name.into(), binding);
    }

    pub fn get(&self, name: &str) -> Option<&Binding> {
        self.map.get(name)
    }

    pub fn geom(&self, name: &str) -> Option<&GeomValue> {
        match self.map.get(name)? {
            Binding::Geom(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_optimistic(&self, name: &str) -> bool {
        self.map.get(name).is_some_and(Binding::is_optimistic)
    }

    /// Fresh constant name with the given prefix (`t1`, `t2`, ...), skipping
    /// names already bound.
    pub fn fresh_name(&mut self, prefix: &str) -> String {
        loop {
            let n = self.counters.entry(prefix.to_string()).or_insert(0);
            *n += 1;
            let name = format!("{prefix}{n}");
            if !self.map.contains_key(&name) {
                return name;
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Binding)> {
        self.map.iter()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}
