use std::collections::VecDeque;

use super::{HeapGraph, InvalidOp, MutOp, NodeId};

/// Result of feeding one op to a [`HeapTracker`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Observed {
    pub allocated: Option<NodeId>,
    /// Nodes that were reachable before the op and are not after it.
    pub newly_unreachable: Vec<NodeId>,
    /// Edge copies whose source is among `newly_unreachable`.
    pub delta: u64,
}

/// Incremental reachability oracle over a trace.
///
/// Validation is O(1) per op. A full search runs only when the last copy of
/// an edge between reachable nodes disappears, and even then is skipped when
/// the heap is known to be acyclic: if every non-root edge points from a
/// smaller id to a larger one (or every one from larger to smaller) the id
/// order is topological and unreachability can be propagated locally.
#[derive(Debug, Clone)]
pub struct HeapTracker {
    graph: HeapGraph,
    reachable: Vec<bool>,
    reachable_count: usize,
    ascending: u64,
    descending: u64,
}

impl Default for HeapTracker {
    fn default() -> Self {
        Self::new()
    }
}

impl HeapTracker {
    pub fn new() -> Self {
        Self {
            graph: HeapGraph::new(),
            reachable: vec![true],
            reachable_count: 1,
            ascending: 0,
            descending: 0,
        }
    }

    pub fn graph(&self) -> &HeapGraph {
        &self.graph
    }

    pub fn is_reachable(&self, v: NodeId) -> bool {
        self.reachable.get(v.index()).copied().unwrap_or(false)
    }

    pub fn reachable_count(&self) -> usize {
        self.reachable_count
    }

    /// Every node ever allocated that is no longer reachable.
    pub fn unreachable_nodes(&self) -> Vec<NodeId> {
        self.graph.nodes().filter(|v| !self.is_reachable(*v)).collect()
    }

    pub fn validate(&self, op: &MutOp) -> bool {
        match *op {
            MutOp::Allocate | MutOp::Step => true,
            MutOp::Insert(a, b) => !b.is_root() && self.is_reachable(a) && self.is_reachable(b),
            MutOp::Delete(a, b) => {
                !b.is_root()
                    && self.is_reachable(a)
                    && self.is_reachable(b)
                    && self.graph.multiplicity(a, b) > 0
            }
        }
    }

    /// Whether the id order is currently a topological order of the heap.
    pub fn id_order_acyclic(&self) -> bool {
        self.ascending == 0 || self.descending == 0
    }

    /// Whether adding `a -> b` leaves the id order topological.
    pub fn keeps_id_order(&self, a: NodeId, b: NodeId) -> bool {
        a.is_root()
            || (a.0 < b.0 && self.descending == 0)
            || (a.0 > b.0 && self.ascending == 0)
    }

    fn classify_edge(&mut self, a: NodeId, b: NodeId, add: bool) {
        if a.is_root() {
            return;
        }
        let d = if add { 1 } else { u64::MAX };
        if a.0 < b.0 {
            self.ascending = self.ascending.wrapping_add(d);
        } else if a.0 > b.0 {
            self.descending = self.descending.wrapping_add(d);
        } else {
            self.ascending = self.ascending.wrapping_add(d);
            self.descending = self.descending.wrapping_add(d);
        }
    }

    pub fn apply(&mut self, op: &MutOp) -> Result<Observed, InvalidOp> {
        if !self.validate(op) {
            return Err(InvalidOp { op: *op });
        }
        let mut obs = Observed::default();
        match *op {
            MutOp::Allocate => {
                let v = self.graph.add_node();
                self.reachable.push(true);
                self.reachable_count += 1;
                obs.allocated = Some(v);
            }
            MutOp::Insert(a, b) => {
                self.graph.add_edge(a, b);
                self.classify_edge(a, b, true);
            }
            MutOp::Delete(a, b) => {
                self.graph.remove_edge(a, b);
                self.classify_edge(a, b, false);
                if self.graph.multiplicity(a, b) == 0 {
                    obs.newly_unreachable = if self.id_order_acyclic() {
                        self.propagate_acyclic(b)
                    } else {
                        self.research()
                    };
                    for &v in &obs.newly_unreachable {
                        obs.delta += self.graph.out_degree(v) as u64;
                    }
                }
            }
            MutOp::Step => {}
        }
        Ok(obs)
    }

    fn has_reachable_pred(&self, v: NodeId) -> bool {
        self.graph.predecessors(v).any(|(p, _)| self.is_reachable(p))
    }

    fn propagate_acyclic(&mut self, start: NodeId) -> Vec<NodeId> {
        let mut lost = Vec::new();
        if self.has_reachable_pred(start) {
            return lost;
        }
        let mut work = vec![start];
        self.reachable[start.index()] = false;
        while let Some(v) = work.pop() {
            lost.push(v);
            let succ: Vec<NodeId> = self.graph.successors(v).map(|(c, _)| c).collect();
            for c in succ {
                if self.is_reachable(c) && !self.has_reachable_pred(c) {
                    self.reachable[c.index()] = false;
                    work.push(c);
                }
            }
        }
        self.reachable_count -= lost.len();
        lost.sort_unstable();
        lost
    }

    fn research(&mut self) -> Vec<NodeId> {
        let mut seen = vec![false; self.reachable.len()];
        let mut queue = VecDeque::from([NodeId::ROOT]);
        seen[0] = true;
        let mut count = 1;
        while let Some(x) = queue.pop_front() {
            for (y, _) in self.graph.successors(x) {
                if !seen[y.index()] {
                    seen[y.index()] = true;
                    count += 1;
                    queue.push_back(y);
                }
            }
        }
        let mut lost = Vec::new();
        if count != self.reachable_count {
            for (i, (&was, &now)) in self.reachable.iter().zip(&seen).enumerate() {
                if was && !now {
                    lost.push(NodeId(i as u32));
                }
            }
        }
        self.reachable = seen;
        self.reachable_count = count;
        lost
    }
}
