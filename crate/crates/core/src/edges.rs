//! Journaled edge multiset with per-node incoming and outgoing lists.
//!
//! Every distinct edge `(a, b)` has a slot holding its multiplicity and its
//! positions in `a`'s outgoing list and `b`'s incoming list. Lists are flat
//! maps keyed by `(node, position)` and shrink by swap-remove, so every
//! update is a constant number of map writes.

use crate::clock::StepCounter;
use crate::heap::NodeId;
use crate::journal::{JMap, JVec, Journaled};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Slot {
    count: u32,
    in_pos: u32,
    out_pos: u32,
}

#[derive(Debug, Clone, Default)]
pub struct EdgeStore {
    slots: JMap<(u32, u32), Slot>,
    inc: JMap<(u32, u32), u32>,
    out: JMap<(u32, u32), u32>,
    inc_len: JVec<u32>,
    out_len: JVec<u32>,
}

impl EdgeStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Make room for node ids up to and including `v`.
    pub fn reserve_node(&mut self, v: NodeId) {
        while self.inc_len.len() <= v.index() {
            self.inc_len.push(0);
            self.out_len.push(0);
        }
    }

    /// Number of distinct edges stored.
    pub fn distinct(&self) -> usize {
        self.slots.len()
    }

    #[inline]
    pub fn count(&self, a: NodeId, b: NodeId, clk: &mut StepCounter) -> u32 {
        clk.tick(1);
        self.slots.get(&(a.0, b.0)).map_or(0, |s| s.count)
    }

    pub fn in_len(&self, b: NodeId) -> u32 {
        self.inc_len.as_slice().get(b.index()).copied().unwrap_or(0)
    }

    pub fn out_len(&self, a: NodeId) -> u32 {
        self.out_len.as_slice().get(a.index()).copied().unwrap_or(0)
    }

    /// Source of the `pos`-th distinct incoming edge of `b`.
    #[inline]
    pub fn in_at(&self, b: NodeId, pos: u32, clk: &mut StepCounter) -> NodeId {
        clk.tick(1);
        NodeId(self.inc[&(b.0, pos)])
    }

    /// Target of the `pos`-th distinct outgoing edge of `a`.
    #[inline]
    pub fn out_at(&self, a: NodeId, pos: u32, clk: &mut StepCounter) -> NodeId {
        clk.tick(1);
        NodeId(self.out[&(a.0, pos)])
    }

    /// Add one copy of `a -> b`; returns the new multiplicity.
    pub fn increment(&mut self, a: NodeId, b: NodeId, clk: &mut StepCounter) -> u32 {
        clk.tick(1);
        if let Some(s) = self.slots.get_mut(&(a.0, b.0)) {
            s.count += 1;
            return s.count;
        }
        self.reserve_node(a.max(b));
        let in_pos = *self.inc_len.get(b.index());
        let out_pos = *self.out_len.get(a.index());
        self.inc_len.set(b.index(), in_pos + 1);
        self.out_len.set(a.index(), out_pos + 1);
        self.inc.insert((b.0, in_pos), a.0);
        self.out.insert((a.0, out_pos), b.0);
        self.slots.insert(
            (a.0, b.0),
            Slot {
                count: 1,
                in_pos,
                out_pos,
            },
        );
        clk.tick(4);
        1
    }

    /// Remove one copy of `a -> b`; returns the remaining multiplicity.
    /// Removing an absent edge is a no-op returning 0.
    pub fn decrement(&mut self, a: NodeId, b: NodeId, clk: &mut StepCounter) -> u32 {
        clk.tick(1);
        let Some(s) = self.slots.get_mut(&(a.0, b.0)) else {
            return 0;
        };
        if s.count > 1 {
            s.count -= 1;
            return s.count;
        }
        let s = *s;
        self.unlink(a, b, s, clk);
        0
    }

    /// Drop every copy of `a -> b`.
    pub fn remove_all(&mut self, a: NodeId, b: NodeId, clk: &mut StepCounter) -> u32 {
        clk.tick(1);
        match self.slots.get(&(a.0, b.0)).copied() {
            Some(s) => {
                self.unlink(a, b, s, clk);
                s.count
            }
            None => 0,
        }
    }

    fn unlink(&mut self, a: NodeId, b: NodeId, s: Slot, clk: &mut StepCounter) {
        self.slots.remove(&(a.0, b.0));

        let last = *self.inc_len.get(b.index()) - 1;
        if s.in_pos != last {
            let moved = self.inc.remove(&(b.0, last)).unwrap();
            self.inc.insert((b.0, s.in_pos), moved);
            self.slots.get_mut(&(moved, b.0)).unwrap().in_pos = s.in_pos;
            clk.tick(3);
        } else {
            self.inc.remove(&(b.0, last));
        }
        self.inc_len.set(b.index(), last);

        let last = *self.out_len.get(a.index()) - 1;
        if s.out_pos != last {
            let moved = self.out.remove(&(a.0, last)).unwrap();
            self.out.insert((a.0, s.out_pos), moved);
            self.slots.get_mut(&(a.0, moved)).unwrap().out_pos = s.out_pos;
            clk.tick(3);
        } else {
            self.out.remove(&(a.0, last));
        }
        self.out_len.set(a.index(), last);
        clk.tick(5);
    }

    /// Drop every edge with `v` at either end.
    pub fn remove_node(&mut self, v: NodeId, clk: &mut StepCounter) {
        while self.out_len(v) > 0 {
            let b = self.out_at(v, self.out_len(v) - 1, clk);
            self.remove_all(v, b, clk);
        }
        while self.in_len(v) > 0 {
            let a = self.in_at(v, self.in_len(v) - 1, clk);
            self.remove_all(a, v, clk);
        }
    }

    /// `(src, dst, multiplicity)` for every edge, sorted.
    pub fn triples(&self) -> Vec<(NodeId, NodeId, u32)> {
        let mut v: Vec<_> = self
            .slots
            .iter()
            .map(|(&(a, b), s)| (NodeId(a), NodeId(b), s.count))
            .collect();
        v.sort_unstable();
        v
    }

    /// Distinct sources of edges into `b`, in list order.
    pub fn incoming(&self, b: NodeId) -> Vec<NodeId> {
        (0..self.in_len(b)).map(|i| NodeId(self.inc[&(b.0, i)])).collect()
    }

    /// Distinct targets of edges out of `a`, in list order.
    pub fn outgoing(&self, a: NodeId) -> Vec<NodeId> {
        (0..self.out_len(a)).map(|i| NodeId(self.out[&(a.0, i)])).collect()
    }
}

impl Journaled for EdgeStore {
    fn begin(&mut self) {
        self.slots.begin();
        self.inc.begin();
        self.out.begin();
        self.inc_len.begin();
        self.out_len.begin();
    }

    fn rollback(&mut self) {
        self.slots.rollback();
        self.inc.rollback();
        self.out.rollback();
        self.inc_len.rollback();
        self.out_len.rollback();
    }

    fn commit(&mut self) {
        self.slots.commit();
        self.inc.commit();
        self.out.commit();
        self.inc_len.commit();
        self.out_len.commit();
    }
}
