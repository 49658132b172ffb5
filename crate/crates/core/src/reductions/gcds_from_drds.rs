use rustc_hash::FxHashSet;

use super::{Drds, DrdsError, NaiveDrds};
use crate::clock::StepCounter;
use crate::edges::EdgeStore;
use crate::gcds::{canonical_hash, Gcds, OpError};
use crate::heap::NodeId;
use crate::journal::{CheckpointGuard, JCell, JVec, JournalError, Journaled};

/// Collector with delay 1 built from a reachability structure: after a
/// delete, ask whether the root still reaches the target and, if not,
/// cascade through the edges of everything that died.
///
/// Capacity is the vertex count of the inner structure; the root is vertex
/// 0. The inner structure's clock is the collector's clock.
#[derive(Debug, Clone)]
pub struct GcdsFromDrds<D = NaiveDrds> {
    drds: D,
    edges: EdgeStore,
    next_id: JCell<u32>,
    free: JVec<NodeId>,
    guard: CheckpointGuard,
}

impl GcdsFromDrds<NaiveDrds> {
    pub fn with_capacity(nodes: usize) -> Self {
        Self::new(NaiveDrds::new(nodes.max(1)))
    }
}

impl<D: Drds> GcdsFromDrds<D> {
    pub fn new(drds: D) -> Self {
        let mut edges = EdgeStore::new();
        edges.reserve_node(NodeId::ROOT);
        Self {
            drds,
            edges,
            next_id: JCell::new(1),
            free: JVec::new(),
            guard: CheckpointGuard::default(),
        }
    }

    pub fn drds(&self) -> &D {
        &self.drds
    }

    fn lift(e: DrdsError) -> OpError {
        match e {
            DrdsError::TimedOut => OpError::TimedOut,
            DrdsError::Gcds(e) => e,
            e => panic!("inner reachability structure misused: {e}"),
        }
    }

    fn reaches(&mut self, v: NodeId) -> Result<bool, OpError> {
        self.drds.connected(0, v.0).map_err(Self::lift)
    }

    fn cascade(&mut self, b: NodeId) -> Result<(), OpError> {
        let mut dead = FxHashSet::default();
        dead.insert(b);
        let mut work = vec![b];
        while let Some(x) = work.pop() {
            self.free.push(x);
            self.drds.clock_mut().charge(1)?;
            while self.edges.out_len(x) > 0 {
                let m = self.edges.out_at(x, self.edges.out_len(x) - 1, self.drds.clock_mut());
                let k = self.edges.remove_all(x, m, self.drds.clock_mut());
                for _ in 0..k {
                    self.drds.delete(x.0, m.0).map_err(Self::lift)?;
                }
                if !dead.contains(&m) && !self.reaches(m)? {
                    dead.insert(m);
                    work.push(m);
                }
            }
        }
        Ok(())
    }
}

impl<D: Drds> Gcds for GcdsFromDrds<D> {
    fn name(&self) -> &str {
        "drds"
    }

    fn allocate(&mut self) -> Result<NodeId, OpError> {
        let v = *self.next_id.get();
        let cap = self.drds.vertex_count();
        if v as usize >= cap {
            return Err(OpError::Exhausted(cap));
        }
        self.next_id.set(v + 1);
        let v = NodeId(v);
        self.edges.increment(NodeId::ROOT, v, self.drds.clock_mut());
        self.drds.insert(0, v.0).map_err(Self::lift)?;
        Ok(v)
    }

    fn insert(&mut self, a: NodeId, b: NodeId) -> Result<(), OpError> {
        self.edges.increment(a, b, self.drds.clock_mut());
        self.drds.insert(a.0, b.0).map_err(Self::lift)
    }

    fn delete(&mut self, a: NodeId, b: NodeId) -> Result<(), OpError> {
        self.edges.decrement(a, b, self.drds.clock_mut());
        self.drds.delete(a.0, b.0).map_err(Self::lift)?;
        if !self.reaches(b)? {
            self.cascade(b)?;
        }
        Ok(())
    }

    fn step(&mut self) -> Result<(), OpError> {
        Ok(())
    }

    fn drain_free_list(&mut self) -> Vec<NodeId> {
        self.free.drain_all()
    }

    fn clock(&self) -> &StepCounter {
        self.drds.clock()
    }

    fn clock_mut(&mut self) -> &mut StepCounter {
        self.drds.clock_mut()
    }

    fn checkpoint(&mut self) -> Result<(), JournalError> {
        self.guard.open()?;
        self.drds.checkpoint()?;
        self.edges.begin();
        self.next_id.begin();
        self.free.begin();
        Ok(())
    }

    fn restore(&mut self) -> Result<(), JournalError> {
        self.guard.close()?;
        self.drds.restore()?;
        self.edges.rollback();
        self.next_id.rollback();
        self.free.rollback();
        Ok(())
    }

    fn state_hash(&self) -> u64 {
        canonical_hash(&(
            self.drds.state_hash(),
            self.edges.triples(),
            *self.next_id.get(),
            self.free.as_slice(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heap::MutOp;

    fn run(g: &mut GcdsFromDrds, ops: &[MutOp]) -> Vec<u32> {
        let mut f = Vec::new();
        for op in ops {
            g.apply(op).unwrap();
            f.extend(g.drain_free_list().into_iter().map(|v| v.0));
        }
        f.sort_unstable();
        f
    }

    #[test]
    fn duplicate_edge_frees_nothing() {
        let mut g = GcdsFromDrds::with_capacity(4);
        let f = run(&mut g, &[MutOp::Allocate, MutOp::insert(0, 1), MutOp::delete(0, 1)]);
        assert!(f.is_empty());
    }

    #[test]
    fn detached_cycle_is_freed() {
        let mut g = GcdsFromDrds::with_capacity(4);
        let f = run(
            &mut g,
            &[
                MutOp::Allocate,
                MutOp::Allocate,
                MutOp::insert(1, 2),
                MutOp::insert(2, 1),
                MutOp::delete(0, 2),
                MutOp::delete(0, 1),
            ],
        );
        assert_eq!(f, vec![1, 2]);
        assert!(g.drds().edges().is_empty());
    }

    #[test]
    fn capacity_is_enforced() {
        let mut g = GcdsFromDrds::with_capacity(2);
        g.allocate().unwrap();
        assert_eq!(g.allocate(), Err(OpError::Exhausted(2)));
    }
}
