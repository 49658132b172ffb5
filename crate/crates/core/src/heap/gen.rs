use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{HeapGraph, HeapTracker, MutOp, NodeId, TraceClass};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("no trace with {n} nodes and {len} ops satisfies the request")]
    Infeasible { n: usize, len: usize },
}

/// Structural promises a generated trace keeps on every prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GenConstraints {
    pub all_reachable: bool,
    /// Edges only run from smaller to larger ids.
    pub acyclic: bool,
    /// Bound on the out-degree of non-root nodes, counting multiplicity.
    pub max_outdeg: Option<u32>,
}

impl From<TraceClass> for GenConstraints {
    fn from(c: TraceClass) -> Self {
        GenConstraints {
            all_reachable: c.all_reachable(),
            acyclic: c.acyclic(),
            max_outdeg: c.max_outdegree(),
        }
    }
}

/// Seeded random valid trace of exactly `len` ops and `n` allocations whose
/// every prefix lies in `class`.
pub fn gen_trace(class: TraceClass, n: usize, len: usize, seed: u64) -> Result<Vec<MutOp>, GenError> {
    gen_trace_with(class.into(), n, len, seed)
}

pub fn gen_trace_with(
    c: GenConstraints,
    n: usize,
    len: usize,
    seed: u64,
) -> Result<Vec<MutOp>, GenError> {
    if n < 1 || len < n || c.max_outdeg == Some(0) {
        return Err(GenError::Infeasible { n, len });
    }
    let mut g = Generator {
        c,
        rng: ChaCha8Rng::seed_from_u64(seed),
        tracker: HeapTracker::new(),
        copies: Vec::new(),
    };
    let mut trace = Vec::with_capacity(len);
    let mut allocated = 0;
    for i in 0..len {
        let remaining = len - i;
        let op = if remaining == n - allocated {
            MutOp::Allocate
        } else {
            g.pick(allocated < n)
        };
        if op == MutOp::Allocate {
            allocated += 1;
        }
        g.commit(op);
        trace.push(op);
    }
    Ok(trace)
}

struct Generator {
    c: GenConstraints,
    rng: ChaCha8Rng,
    tracker: HeapTracker,
    /// One entry per edge copy.
    copies: Vec<(NodeId, NodeId)>,
}

const TRIES: usize = 16;

impl Generator {
    fn pick(&mut self, may_allocate: bool) -> MutOp {
        let roll = self.rng.gen_range(0..100);
        let op = match roll {
            0..=14 if may_allocate => Some(MutOp::Allocate),
            0..=49 => self.pick_insert(),
            50..=91 => self.pick_delete(),
            _ => Some(MutOp::Step),
        };
        op.or_else(|| self.pick_insert())
            .or_else(|| may_allocate.then_some(MutOp::Allocate))
            .unwrap_or(MutOp::Step)
    }

    fn random_reachable(&mut self) -> Option<NodeId> {
        let count = self.tracker.graph().node_count() as u32;
        for _ in 0..TRIES {
            let v = NodeId(self.rng.gen_range(0..count));
            if self.tracker.is_reachable(v) {
                return Some(v);
            }
        }
        None
    }

    fn pick_insert(&mut self) -> Option<MutOp> {
        for _ in 0..TRIES {
            let a = self.random_reachable()?;
            let b = self.random_reachable()?;
            if b.is_root() {
                continue;
            }
            if self.c.acyclic && a.0 >= b.0 {
                continue;
            }
            if let Some(m) = self.c.max_outdeg {
                if !a.is_root() && self.tracker.graph().out_degree(a) >= m {
                    continue;
                }
            }
            return Some(MutOp::Insert(a, b));
        }
        None
    }

    fn pick_delete(&mut self) -> Option<MutOp> {
        if self.copies.is_empty() {
            return None;
        }
        for _ in 0..TRIES {
            let (a, b) = self.copies[self.rng.gen_range(0..self.copies.len())];
            if !self.tracker.is_reachable(a) {
                continue;
            }
            if self.c.all_reachable && !self.keeps_all_reachable(a, b) {
                continue;
            }
            return Some(MutOp::Delete(a, b));
        }
        None
    }

    fn keeps_all_reachable(&self, a: NodeId, b: NodeId) -> bool {
        let g = self.tracker.graph();
        if g.multiplicity(a, b) > 1 {
            return true;
        }
        if self.c.acyclic {
            return g.predecessors(b).any(|(p, _)| p != a);
        }
        reach_count_without(g, a, b) == self.tracker.reachable_count()
    }

    fn commit(&mut self, op: MutOp) {
        let obs = self.tracker.apply(&op).expect("generator produced an invalid op");
        match op {
            MutOp::Allocate => self.copies.push((NodeId::ROOT, obs.allocated.unwrap())),
            MutOp::Insert(a, b) => self.copies.push((a, b)),
            MutOp::Delete(a, b) => {
                let i = self.copies.iter().position(|&e| e == (a, b)).unwrap();
                self.copies.swap_remove(i);
            }
            MutOp::Step => {}
        }
        if !obs.newly_unreachable.is_empty() {
            let t = &self.tracker;
            self.copies.retain(|&(a, _)| t.is_reachable(a));
        }
    }
}

/// Reachable node count if one copy of `a -> b` were removed.
fn reach_count_without(g: &HeapGraph, a: NodeId, b: NodeId) -> usize {
    let skip_edge = g.multiplicity(a, b) == 1;
    let mut seen = vec![false; g.node_count()];
    let mut queue = VecDeque::from([NodeId::ROOT]);
    seen[0] = true;
    let mut count = 1;
    while let Some(x) = queue.pop_front() {
        for (y, _) in g.successors(x) {
            if skip_edge && x == a && y == b {
                continue;
            }
            if !seen[y.index()] {
                seen[y.index()] = true;
                count += 1;
                queue.push_back(y);
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heap::classify_prefix;

    const CLASSES: [TraceClass; 4] = [
        TraceClass::General,
        TraceClass::AllReachable,
        TraceClass::AcyclicAllReachable,
        TraceClass::SparseAcyclicAllReachable(2),
    ];

    #[test]
    fn single_node_trace_is_one_allocate() {
        assert_eq!(gen_trace(TraceClass::General, 1, 1, 0).unwrap(), vec![MutOp::Allocate]);
    }

    #[test]
    fn rejects_infeasible_requests() {
        assert!(gen_trace(TraceClass::General, 0, 5, 0).is_err());
        assert!(gen_trace(TraceClass::General, 6, 5, 0).is_err());
    }

    #[test]
    fn same_seed_same_trace() {
        for c in CLASSES {
            assert_eq!(gen_trace(c, 12, 80, 3).unwrap(), gen_trace(c, 12, 80, 3).unwrap());
        }
    }

    #[test]
    fn sparse_example_classifies_at_requested_tag() {
        let want = TraceClass::SparseAcyclicAllReachable(2);
        let t = gen_trace(want, 10, 50, 7).unwrap();
        for k in 0..=t.len() {
            let got = classify_prefix(&t[..k]).unwrap();
            assert!(got.implies(want), "prefix {k}: {got}");
        }
    }

    #[test]
    fn generator_soundness_thousand_runs_per_class() {
        for c in CLASSES {
            for seed in 0..1000u64 {
                let n = 1 + (seed as usize % 20);
                let len = n + (seed as usize % 60);
                let t = gen_trace(c, n, len, seed).unwrap();
                assert_eq!(t.len(), len);
                assert_eq!(t.iter().filter(|o| **o == MutOp::Allocate).count(), n);
                // classify_prefix replays through validate and fails on any bad prefix
                let got = classify_prefix(&t).unwrap();
                assert!(got.implies(c), "class {c} seed {seed}: got {got}");
            }
        }
    }

    #[test]
    fn general_traces_lose_nodes() {
        let lost = (0..50u64)
            .filter(|&s| {
                let t = gen_trace(TraceClass::General, 30, 300, s).unwrap();
                classify_prefix(&t).unwrap() == TraceClass::General
            })
            .count();
        assert!(lost > 40);
    }
}
