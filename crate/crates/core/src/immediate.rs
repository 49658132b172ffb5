//! Collector that keeps a spanning forest of the heap in Euler-tour trees
//! and frees every unreachable node during the delete that disconnects it.
//!
//! Invariant: the tree containing the root spans exactly the reachable
//! nodes. Deleting a forest edge `a -> b` separates `b`'s subtree; a series
//! of preorder sweeps over it relinks every node that still has a usable
//! incoming edge, and whatever no sweep can reattach is freed.

use rustc_hash::{FxHashMap, FxHashSet};

use crate::clock::StepCounter;
use crate::edges::EdgeStore;
use crate::ett::EttForest;
use crate::gcds::{canonical_hash, Gcds, OpError};
use crate::heap::NodeId;
use crate::journal::{CheckpointGuard, JVec, JournalError, Journaled};

/// Instrumentation for the most recent delete.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DeleteStats {
    /// Outer-loop iterations; zero when the delete returned early.
    pub sweeps: u32,
    /// Incoming edges inspected while searching for new parents.
    pub examined: u64,
}

#[derive(Debug, Clone)]
pub struct Immediate {
    clock: StepCounter,
    guard: CheckpointGuard,
    forest: EttForest,
    edges: EdgeStore,
    free: JVec<NodeId>,
    use_cursor: bool,
    cursor: FxHashMap<NodeId, u32>,
    last: DeleteStats,
}

impl Default for Immediate {
    fn default() -> Self {
        Self::new()
    }
}

impl Immediate {
    pub fn new() -> Self {
        Self::with_cursor(true)
    }

    /// `use_cursor` toggles resuming each node's parent search where the
    /// previous visit in the same sweep stopped.
    pub fn with_cursor(use_cursor: bool) -> Self {
        let mut clock = StepCounter::new();
        let mut forest = EttForest::new();
        let root = forest.singleton(&mut clock);
        debug_assert_eq!(root, NodeId::ROOT);
        let mut edges = EdgeStore::new();
        edges.reserve_node(root);
        Self {
            clock,
            guard: CheckpointGuard::default(),
            forest,
            edges,
            free: JVec::new(),
            use_cursor,
            cursor: FxHashMap::default(),
            last: DeleteStats::default(),
        }
    }

    pub fn forest(&self) -> &EttForest {
        &self.forest
    }

    pub fn edges(&self) -> &EdgeStore {
        &self.edges
    }

    pub fn last_delete(&self) -> DeleteStats {
        self.last
    }

    pub fn uses_cursor(&self) -> bool {
        self.use_cursor
    }

    /// Nodes in the root's tree.
    pub fn root_tree(&self) -> Vec<NodeId> {
        self.forest.preorder(NodeId::ROOT)
    }

    fn find_parent(
        &mut self,
        n: NodeId,
        dead: &FxHashSet<NodeId>,
    ) -> Result<Option<NodeId>, OpError> {
        let start = if self.use_cursor {
            self.cursor.get(&n).copied().unwrap_or(0)
        } else {
            0
        };
        let len = self.edges.in_len(n);
        for pos in start..len {
            self.clock.check()?;
            self.last.examined += 1;
            let m = self.edges.in_at(n, pos, &mut self.clock);
            if dead.contains(&m) || self.forest.path(n, m, &mut self.clock) {
                continue;
            }
            if self.use_cursor {
                self.cursor.insert(n, pos);
            }
            return Ok(Some(m));
        }
        Ok(None)
    }

    fn sweep_from(&mut self, b: NodeId) -> Result<(), OpError> {
        loop {
            self.last.sweeps += 1;
            self.cursor.clear();
            let mut order = Vec::new();
            let mut dead = FxHashSet::default();
            let mut reattached = false;
            let mut p: Option<NodeId> = None;
            let mut n = Some(b);
            while let Some(x) = n {
                self.clock.check()?;
                match self.find_parent(x, &dead)? {
                    Some(m) => {
                        if self.forest.parent(x, &mut self.clock).is_some() {
                            self.forest.cut(x, &mut self.clock).unwrap();
                        }
                        self.forest.join(m, x, &mut self.clock).unwrap();
                        if x == b {
                            return Ok(());
                        }
                        if self.forest.path(NodeId::ROOT, x, &mut self.clock) {
                            reattached = true;
                        }
                        n = self.forest.next(p.unwrap(), &mut self.clock);
                    }
                    None => {
                        order.push(x);
                        dead.insert(x);
                        self.clock.tick(1);
                        p = Some(x);
                        n = self.forest.next(x, &mut self.clock);
                    }
                }
            }
            if !reattached {
                for &v in &order {
                    self.free.push(v);
                    self.clock.tick(1);
                }
                let erased = self.forest.erase_tree(b, &mut self.clock);
                debug_assert_eq!(erased.len(), order.len());
                for &v in &order {
                    self.edges.remove_node(v, &mut self.clock);
                }
                self.clock.check()?;
                return Ok(());
            }
        }
    }
}

impl Gcds for Immediate {
    fn name(&self) -> &str {
        "ett"
    }

    fn allocate(&mut self) -> Result<NodeId, OpError> {
        let v = self.forest.singleton(&mut self.clock);
        self.forest.join(NodeId::ROOT, v, &mut self.clock).unwrap();
        self.edges.increment(NodeId::ROOT, v, &mut self.clock);
        self.clock.check()?;
        Ok(v)
    }

    fn insert(&mut self, a: NodeId, b: NodeId) -> Result<(), OpError> {
        self.edges.increment(a, b, &mut self.clock);
        self.clock.check()?;
        Ok(())
    }

    fn delete(&mut self, a: NodeId, b: NodeId) -> Result<(), OpError> {
        self.last = DeleteStats::default();
        let left = self.edges.decrement(a, b, &mut self.clock);
        if left > 0 || self.forest.parent(b, &mut self.clock) != Some(a) {
            self.clock.check()?;
            return Ok(());
        }
        self.forest.cut(b, &mut self.clock).unwrap();
        self.sweep_from(b)
    }

    fn step(&mut self) -> Result<(), OpError> {
        Ok(())
    }

    fn drain_free_list(&mut self) -> Vec<NodeId> {
        self.free.drain_all()
    }

    fn clock(&self) -> &StepCounter {
        &self.clock
    }

    fn clock_mut(&mut self) -> &mut StepCounter {
        &mut self.clock
    }

    fn checkpoint(&mut self) -> Result<(), JournalError> {
        self.guard.open()?;
        self.forest.begin();
        self.edges.begin();
        self.free.begin();
        Ok(())
    }

    fn restore(&mut self) -> Result<(), JournalError> {
        self.guard.close()?;
        self.forest.rollback();
        self.edges.rollback();
        self.free.rollback();
        Ok(())
    }

    fn state_hash(&self) -> u64 {
        canonical_hash(&(
            self.forest.state_hash(),
            self.edges.triples(),
            self.free.as_slice(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heap::MutOp;

    fn n(v: u32) -> NodeId {
        NodeId(v)
    }

    fn run(c: &mut Immediate, trace: &[MutOp]) -> Vec<NodeId> {
        let mut f = Vec::new();
        for op in trace {
            c.apply(op).unwrap();
            f.extend(c.drain_free_list());
        }
        f.sort_unstable();
        f
    }

    #[test]
    fn allocations_form_a_star() {
        let mut c = Immediate::new();
        run(&mut c, &[MutOp::Allocate; 3]);
        for v in 1..=3 {
            assert_eq!(c.forest().parent_of(n(v)), Some(NodeId::ROOT));
        }
    }

    #[test]
    fn insert_leaves_forest_alone() {
        let mut c = Immediate::new();
        run(&mut c, &[MutOp::Allocate, MutOp::Allocate]);
        let h = c.state_hash();
        run(&mut c, &[MutOp::insert(1, 2), MutOp::insert(1, 2)]);
        assert_eq!(c.edges().count(n(1), n(2), &mut StepCounter::new()), 2);
        assert_eq!(c.forest().parent_of(n(2)), Some(NodeId::ROOT));
        run(&mut c, &[MutOp::delete(1, 2), MutOp::delete(1, 2)]);
        assert_eq!(c.state_hash(), h);
    }

    #[test]
    fn duplicate_edge_delete_returns_early() {
        let mut c = Immediate::new();
        run(&mut c, &[MutOp::Allocate, MutOp::insert(0, 1)]);
        let before = c.clock().count();
        assert!(run(&mut c, &[MutOp::delete(0, 1)]).is_empty());
        assert_eq!(c.last_delete().sweeps, 0);
        assert!(c.clock().count() - before < 10);
    }

    #[test]
    fn chain_with_shortcut_relinks_under_root() {
        // root -> a=1 -> b=2, plus root -> b
        let mut c = Immediate::new();
        let f = run(
            &mut c,
            &[
                MutOp::Allocate,
                MutOp::Allocate,
                MutOp::insert(1, 2),
                MutOp::delete(0, 2),
                MutOp::insert(0, 2),
            ],
        );
        assert!(f.is_empty());
        assert_eq!(c.forest().parent_of(n(2)), Some(n(1)));
        assert!(run(&mut c, &[MutOp::delete(1, 2)]).is_empty());
        assert_eq!(c.forest().parent_of(n(2)), Some(NodeId::ROOT));
        assert_eq!(c.last_delete().sweeps, 1);
    }

    #[test]
    fn detached_cycle_is_freed() {
        let mut c = Immediate::new();
        let f = run(
            &mut c,
            &[
                MutOp::Allocate,
                MutOp::Allocate,
                MutOp::insert(1, 2),
                MutOp::insert(2, 1),
                MutOp::delete(0, 2),
                MutOp::delete(0, 1),
            ],
        );
        assert_eq!(f, vec![n(1), n(2)]);
        assert!(c.edges().triples().is_empty());
        assert_eq!(c.forest().len(), 1);
    }

    #[test]
    fn teardown_returns_metadata_to_initial_size() {
        let mut c = Immediate::new();
        let mut t = vec![MutOp::Allocate];
        for i in 2..=20 {
            t.extend([MutOp::Allocate, MutOp::insert(i - 1, i), MutOp::insert(i, i - 1), MutOp::delete(0, i)]);
        }
        t.push(MutOp::delete(0, 1));
        let f = run(&mut c, &t);
        assert_eq!(f.len(), 20);
        assert_eq!(c.forest().len(), 1);
        assert_eq!(c.edges().distinct(), 0);
    }
}
