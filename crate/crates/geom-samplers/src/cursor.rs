//! Enumeration cursors over sampler candidate lists.
//!
//! A cursor owns its candidate list (computed once, deterministically, from
//! the sampler inputs and seed) and walks it monotonically. Exhaustion is
//! terminal: once `next` returns `None` it returns `None` forever.

use serde::{Deserialize, Serialize};

use crate::types::GeomValue;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerCursor {
    /// Sampler identity, for instrumentation and anomaly reports.
    pub sampler: String,
    pub seed: u64,
    pub capacity: usize,
    candidates: Vec<Vec<GeomValue>>,
    next_index: usize,
}

impl SamplerCursor {
    pub fn new(
        sampler: impl Into<String>,
        seed: u64,
        capacity: usize,
        candidates: Vec<Vec<GeomValue>>,
    ) -> SamplerCursor {
        debug_assert!(candidates.len() <= capacity);
        SamplerCursor {
            sampler: sampler.into(),
            seed,
            capacity,
            candidates,
            next_index: 0,
        }
    }

    /// Inserts a candidate at the front of the list (before any yield),
    /// dropping a duplicate further down. Used to try a plan-time value
    /// before freshly sampled alternatives.
    pub fn prepend(&mut self, candidate: Vec<GeomValue>) {
        assert_eq!(self.next_index, 0, "prepend only before the first yield");
        self.candidates.retain(|c| *c != candidate);
        self.candidates.insert(0, candidate);
        self.candidates.truncate(self.capacity.max(1));
    }

    /// Yields the next candidate, advancing the index.
    pub fn next(&mut self) -> Option<Vec<GeomValue>> {
        let v = self.candidates.get(self.next_index).cloned()?;
        self.next_index += 1;
        Some(v)
    }

    /// Candidate at a fixed index without advancing (the raw sampling
    /// function `f(inputs, seed, index)`).
    pub fn at(&self, index: usize) -> Option<&Vec<GeomValue>> {
        self.candidates.get(index)
    }

    pub fn yielded(&self) -> usize {
        self.next_index
    }

    pub fn is_exhausted(&self) -> bool {
        self.next_index >= self.candidates.len()
    }

    pub fn remaining(&self) -> usize {
        self.candidates.len() - self.next_index
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Grasp, GraspClass};

    fn cursor() -> SamplerCursor {
        let cands = (0..3)
            .map(|i| {
                vec![GeomValue::Grasp(Grasp {
                    class: GraspClass::Top,
                    offset: i as f64,
                })]
            })
            .collect();
        SamplerCursor::new("s-test", 7, 4, cands)
    }

    #[test]
    fn drains_exactly_the_candidate_list() {
        let mut c = cursor();
        let mut n = 0;
        while c.next().is_some() {
            n += 1;
        }
        assert_eq!(n, 3);
        assert!(c.is_exhausted());
        assert!(c.next().is_none()); // terminal
    }

    #[test]
    fn same_inputs_replay_identically() {
        let mut a = cursor();
        let mut b = cursor();
        loop {
            let (x, y) = (a.next(), b.next());
            assert_eq!(x, y);
            if x.is_none() {
                break;
            }
        }
    }
}
