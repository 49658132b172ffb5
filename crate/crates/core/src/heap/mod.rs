//! Ground-truth model of mutator traces.
//!
//! [`HeapGraph`] is the logical heap a trace describes, independent of any
//! collector. Nodes are never removed from it: freeing is the collector's
//! business, and a node that becomes unreachable stays unreachable.

mod class;
mod gen;
mod text;
mod tracker;

pub use class::{classify_prefix, TraceClass};
pub use gen::{gen_trace, gen_trace_with, GenConstraints, GenError};
pub use text::{format_trace, parse_trace, ParseError};
pub use tracker::HeapTracker;

use std::collections::VecDeque;
use std::fmt;

use rustc_hash::{FxHashMap, FxHashSet};
use thiserror::Error;

/// Identifier of a heap region. Zero is the root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct NodeId(pub u32);

impl NodeId {
    pub const ROOT: NodeId = NodeId(0);

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn is_root(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for NodeId {
    fn from(v: u32) -> Self {
        NodeId(v)
    }
}

/// One mutator event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MutOp {
    Allocate,
    Insert(NodeId, NodeId),
    Delete(NodeId, NodeId),
    Step,
}

impl MutOp {
    pub fn kind(&self) -> OpKind {
        match self {
            MutOp::Allocate => OpKind::Allocate,
            MutOp::Insert(..) => OpKind::Insert,
            MutOp::Delete(..) => OpKind::Delete,
            MutOp::Step => OpKind::Step,
        }
    }

    pub fn insert(a: u32, b: u32) -> Self {
        MutOp::Insert(NodeId(a), NodeId(b))
    }

    pub fn delete(a: u32, b: u32) -> Self {
        MutOp::Delete(NodeId(a), NodeId(b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpKind {
    Allocate,
    Insert,
    Delete,
    Step,
}

impl OpKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OpKind::Allocate => "allocate",
            OpKind::Insert => "insert",
            OpKind::Delete => "delete",
            OpKind::Step => "step",
        }
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("operation {op:?} is not valid for the current heap")]
pub struct InvalidOp {
    pub op: MutOp,
}

/// Directed multigraph with a distinguished root.
///
/// Nodes are `0..node_count()`; multiplicities are stored only when
/// positive. An incoming-edge index is kept alongside the outgoing one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeapGraph {
    node_count: u32,
    out: FxHashMap<NodeId, FxHashMap<NodeId, u32>>,
    inc: FxHashMap<NodeId, FxHashMap<NodeId, u32>>,
    edge_total: u64,
}

impl Default for HeapGraph {
    fn default() -> Self {
        Self::new()
    }
}

impl HeapGraph {
    /// The empty heap: just the root.
    pub fn new() -> Self {
        Self {
            node_count: 1,
            out: FxHashMap::default(),
            inc: FxHashMap::default(),
            edge_total: 0,
        }
    }

    pub fn root(&self) -> NodeId {
        NodeId::ROOT
    }

    pub fn node_count(&self) -> usize {
        self.node_count as usize
    }

    pub fn contains(&self, v: NodeId) -> bool {
        v.0 < self.node_count
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.node_count).map(NodeId)
    }

    /// Id the next `Allocate` will produce.
    pub fn next_id(&self) -> NodeId {
        NodeId(self.node_count)
    }

    pub fn multiplicity(&self, a: NodeId, b: NodeId) -> u32 {
        self.out
            .get(&a)
            .and_then(|m| m.get(&b))
            .copied()
            .unwrap_or(0)
    }

    /// Total edge copies, counting multiplicity.
    pub fn edge_count(&self) -> u64 {
        self.edge_total
    }

    /// `(src, dst, multiplicity)` for every stored edge, sorted.
    pub fn edges(&self) -> Vec<(NodeId, NodeId, u32)> {
        let mut v: Vec<_> = self
            .out
            .iter()
            .flat_map(|(a, m)| m.iter().map(move |(b, k)| (*a, *b, *k)))
            .collect();
        v.sort_unstable();
        v
    }

    pub fn successors(&self, a: NodeId) -> impl Iterator<Item = (NodeId, u32)> + '_ {
        self.out
            .get(&a)
            .into_iter()
            .flat_map(|m| m.iter().map(|(b, k)| (*b, *k)))
    }

    pub fn predecessors(&self, b: NodeId) -> impl Iterator<Item = (NodeId, u32)> + '_ {
        self.inc
            .get(&b)
            .into_iter()
            .flat_map(|m| m.iter().map(|(a, k)| (*a, *k)))
    }

    /// Outgoing edge copies of `a`, counting multiplicity.
    pub fn out_degree(&self, a: NodeId) -> u32 {
        self.successors(a).map(|(_, k)| k).sum()
    }

    pub fn in_degree(&self, b: NodeId) -> u32 {
        self.predecessors(b).map(|(_, k)| k).sum()
    }

    pub(crate) fn add_edge(&mut self, a: NodeId, b: NodeId) {
        *self.out.entry(a).or_default().entry(b).or_insert(0) += 1;
        *self.inc.entry(b).or_default().entry(a).or_insert(0) += 1;
        self.edge_total += 1;
    }

    pub(crate) fn remove_edge(&mut self, a: NodeId, b: NodeId) -> bool {
        fn dec(map: &mut FxHashMap<NodeId, FxHashMap<NodeId, u32>>, x: NodeId, y: NodeId) -> bool {
            let Some(inner) = map.get_mut(&x) else {
                return false;
            };
            let Some(k) = inner.get_mut(&y) else {
                return false;
            };
            *k -= 1;
            if *k == 0 {
                inner.remove(&y);
                if inner.is_empty() {
                    map.remove(&x);
                }
            }
            true
        }
        if dec(&mut self.out, a, b) {
            dec(&mut self.inc, b, a);
            self.edge_total -= 1;
            true
        } else {
            false
        }
    }

    pub(crate) fn add_node(&mut self) -> NodeId {
        let id = NodeId(self.node_count);
        self.node_count += 1;
        self.add_edge(NodeId::ROOT, id);
        id
    }

    /// Whether `op` respects the caller promises on this heap.
    pub fn validate(&self, op: &MutOp) -> bool {
        match *op {
            MutOp::Allocate | MutOp::Step => true,
            MutOp::Insert(a, b) | MutOp::Delete(a, b) => {
                if !self.contains(a) || !self.contains(b) || b.is_root() {
                    return false;
                }
                if matches!(op, MutOp::Delete(..)) && self.multiplicity(a, b) == 0 {
                    return false;
                }
                let reach = self.reachable_set();
                reach.contains(&a) && reach.contains(&b)
            }
        }
    }

    /// Apply `op` in place. Returns the new node for `Allocate`.
    pub fn apply(&mut self, op: &MutOp) -> Result<Option<NodeId>, InvalidOp> {
        if !self.validate(op) {
            return Err(InvalidOp { op: *op });
        }
        Ok(self.apply_unchecked(op))
    }

    /// Apply without checking reachability promises. Structural problems
    /// (deleting a missing edge) are ignored.
    pub(crate) fn apply_unchecked(&mut self, op: &MutOp) -> Option<NodeId> {
        match *op {
            MutOp::Allocate => Some(self.add_node()),
            MutOp::Insert(a, b) => {
                self.add_edge(a, b);
                None
            }
            MutOp::Delete(a, b) => {
                self.remove_edge(a, b);
                None
            }
            MutOp::Step => None,
        }
    }

    /// Nodes reachable from the root by directed paths.
    pub fn reachable_set(&self) -> FxHashSet<NodeId> {
        let mut seen = FxHashSet::default();
        let mut queue = VecDeque::new();
        seen.insert(NodeId::ROOT);
        queue.push_back(NodeId::ROOT);
        while let Some(x) = queue.pop_front() {
            for (y, _) in self.successors(x) {
                if seen.insert(y) {
                    queue.push_back(y);
                }
            }
        }
        seen
    }

    /// Replay a whole trace from the empty heap.
    pub fn replay(trace: &[MutOp]) -> Result<Self, (usize, InvalidOp)> {
        let mut g = HeapGraph::new();
        for (i, op) in trace.iter().enumerate() {
            g.apply(op).map_err(|e| (i, e))?;
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u32]) -> FxHashSet<NodeId> {
        v.iter().map(|&x| NodeId(x)).collect()
    }

    #[test]
    fn allocate_on_empty_adds_root_edge() {
        let mut g = HeapGraph::new();
        assert_eq!(g.apply(&MutOp::Allocate).unwrap(), Some(NodeId(1)));
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edges(), vec![(NodeId(0), NodeId(1), 1)]);
    }

    #[test]
    fn delete_decrements_multiplicity() {
        let g = HeapGraph::replay(&[
            MutOp::Allocate,
            MutOp::Allocate,
            MutOp::insert(1, 2),
            MutOp::insert(1, 2),
            MutOp::delete(1, 2),
        ])
        .unwrap();
        assert_eq!(g.multiplicity(NodeId(1), NodeId(2)), 1);
    }

    #[test]
    fn validate_rejects_broken_promises() {
        let g = HeapGraph::replay(&[MutOp::Allocate, MutOp::Allocate, MutOp::delete(0, 2)]).unwrap();
        // node 2 is unreachable now
        assert!(!g.validate(&MutOp::insert(0, 2)));
        assert!(!g.validate(&MutOp::delete(0, 2)));
        assert!(!g.validate(&MutOp::insert(1, 0)));
        assert!(!g.validate(&MutOp::delete(1, 1)));
        assert!(g.validate(&MutOp::Step));
        assert!(g.validate(&MutOp::insert(1, 1)));
    }

    #[test]
    fn reachability_follows_direction() {
        // root -> 1 -> 2 chain
        let g = HeapGraph::replay(&[
            MutOp::Allocate,
            MutOp::Allocate,
            MutOp::insert(1, 2),
            MutOp::delete(0, 2),
        ])
        .unwrap();
        assert_eq!(g.reachable_set(), ids(&[0, 1, 2]));

        // root -> 1, 2 -> 1, nothing into 2
        let g = HeapGraph::replay(&[
            MutOp::Allocate,
            MutOp::Allocate,
            MutOp::insert(2, 1),
            MutOp::delete(0, 2),
        ])
        .unwrap();
        assert_eq!(g.reachable_set(), ids(&[0, 1]));
    }

    pub(crate) fn fig10_setup() -> Vec<MutOp> {
        // b=1 n1=2 n2=3 n3=4 n4=5
        let mut t = vec![MutOp::Allocate; 5];
        t.extend([
            MutOp::insert(1, 2),
            MutOp::delete(0, 2),
            MutOp::insert(1, 3),
            MutOp::delete(0, 3),
            MutOp::insert(1, 4),
            MutOp::delete(0, 4),
            MutOp::insert(3, 5),
            MutOp::delete(0, 5),
            MutOp::insert(5, 3),
            MutOp::insert(0, 4),
            MutOp::insert(4, 3),
        ]);
        t
    }

    #[test]
    fn fig10_setup_builds_expected_edges() {
        let g = HeapGraph::replay(&fig10_setup()).unwrap();
        let want: Vec<_> = [(0, 1), (0, 4), (1, 2), (1, 3), (1, 4), (3, 5), (4, 3), (5, 3)]
            .iter()
            .map(|&(a, b)| (NodeId(a), NodeId(b), 1))
            .collect();
        assert_eq!(g.edges(), want);
    }

    #[test]
    fn fig11_final_reachable_set() {
        let mut t = fig10_setup();
        t.push(MutOp::delete(0, 1));
        let g = HeapGraph::replay(&t).unwrap();
        assert_eq!(g.reachable_set(), ids(&[0, 4, 3, 5]));
    }

    #[test]
    fn root_never_gains_incoming_edges() {
        let t = gen_trace(TraceClass::General, 30, 300, 11).unwrap();
        let g = HeapGraph::replay(&t).unwrap();
        assert_eq!(g.in_degree(NodeId::ROOT), 0);
        assert!(g.reachable_set().contains(&NodeId::ROOT));
    }
}
