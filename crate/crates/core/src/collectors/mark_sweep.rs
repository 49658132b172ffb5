use rustc_hash::FxHashSet;

use crate::clock::StepCounter;
use crate::edges::EdgeStore;
use crate::gcds::{canonical_hash, Gcds, OpError};
use crate::heap::NodeId;
use crate::journal::{CheckpointGuard, JCell, JVec, JournalError, Journaled};

const ABSENT: u32 = u32::MAX;

/// Nonincremental mark-and-sweep: every delete runs a full collection.
#[derive(Debug, Clone, Default)]
pub struct MarkSweep {
    clock: StepCounter,
    guard: CheckpointGuard,
    next_id: JCell<u32>,
    edges: EdgeStore,
    /// Live allocated nodes, unordered.
    all: JVec<u32>,
    /// Position of each node in `all`, or `ABSENT`.
    pos: JVec<u32>,
    free: JVec<NodeId>,
}

impl MarkSweep {
    pub fn new() -> Self {
        let mut s = Self::default();
        s.pos.push(ABSENT);
        s
    }

    /// Nodes allocated and not yet swept.
    pub fn live(&self) -> usize {
        self.all.len()
    }

    fn journals(&mut self) -> [&mut dyn Journaled; 5] {
        [
            &mut self.next_id,
            &mut self.edges,
            &mut self.all,
            &mut self.pos,
            &mut self.free,
        ]
    }

    fn mark(&mut self) -> Result<FxHashSet<NodeId>, OpError> {
        let mut marked = FxHashSet::default();
        let mut work = vec![NodeId::ROOT];
        while let Some(node) = work.pop() {
            self.clock.charge(1)?;
            if !marked.insert(node) {
                continue;
            }
            for i in 0..self.edges.out_len(node) {
                work.push(self.edges.out_at(node, i, &mut self.clock));
            }
        }
        Ok(marked)
    }
}

impl Gcds for MarkSweep {
    fn name(&self) -> &str {
        "ms"
    }

    fn allocate(&mut self) -> Result<NodeId, OpError> {
        let id = *self.next_id.get() + 1;
        self.next_id.set(id);
        self.pos.push(self.all.len() as u32);
        self.all.push(id);
        self.clock.tick(3);
        let v = NodeId(id);
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
        self.edges.decrement(a, b, &mut self.clock);
        self.step()
    }

    fn step(&mut self) -> Result<(), OpError> {
        let marked = self.mark()?;
        let mut i = 0;
        while i < self.all.len() {
            self.clock.charge(1)?;
            let v = *self.all.get(i);
            if marked.contains(&NodeId(v)) {
                i += 1;
                continue;
            }
            let last = self.all.pop().unwrap();
            if last != v {
                self.all.set(i, last);
                self.pos.set(last as usize, i as u32);
            }
            self.pos.set(v as usize, ABSENT);
            self.free.push(NodeId(v));
            self.clock.tick(1);
        }
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
        self.journals().into_iter().for_each(|j| j.begin());
        Ok(())
    }

    fn restore(&mut self) -> Result<(), JournalError> {
        self.guard.close()?;
        self.journals().into_iter().for_each(|j| j.rollback());
        Ok(())
    }

    fn state_hash(&self) -> u64 {
        let mut all = self.all.as_slice().to_vec();
        all.sort_unstable();
        canonical_hash(&(
            *self.next_id.get(),
            all,
            self.edges.triples(),
            self.free.as_slice(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gcds::{call_with_timeout, CallOutcome};
    use crate::heap::MutOp;

    fn run(ms: &mut MarkSweep, trace: &[MutOp]) -> Vec<NodeId> {
        let mut freed = Vec::new();
        for op in trace {
            ms.apply(op).unwrap();
            freed.extend(ms.drain_free_list());
        }
        freed.sort_unstable();
        freed
    }

    #[test]
    fn all_reachable_step_frees_nothing_but_visits_everything() {
        let mut ms = MarkSweep::new();
        run(&mut ms, &[MutOp::Allocate; 10]);
        let before = ms.clock().count();
        ms.step().unwrap();
        assert!(ms.drain_free_list().is_empty());
        assert!(ms.clock().count() - before >= 11);
    }

    #[test]
    fn detached_chain_is_swept() {
        let mut ms = MarkSweep::new();
        let f = run(
            &mut ms,
            &[MutOp::Allocate, MutOp::Allocate, MutOp::insert(1, 2), MutOp::delete(0, 2), MutOp::delete(0, 1)],
        );
        assert_eq!(f, vec![NodeId(1), NodeId(2)]);
        assert_eq!(ms.live(), 0);
    }

    #[test]
    fn detached_cycle_is_swept() {
        let mut ms = MarkSweep::new();
        let f = run(
            &mut ms,
            &[
                MutOp::Allocate,
                MutOp::Allocate,
                MutOp::insert(1, 2),
                MutOp::insert(2, 1),
                MutOp::delete(0, 2),
                MutOp::delete(0, 1),
            ],
        );
        assert_eq!(f, vec![NodeId(1), NodeId(2)]);
    }

    #[test]
    fn chain_delete_times_out_under_small_budget() {
        let mut ms = MarkSweep::new();
        let mut t = vec![MutOp::Allocate];
        for i in 2..=1000 {
            t.extend([MutOp::Allocate, MutOp::insert(i - 1, i), MutOp::delete(0, i)]);
        }
        t.extend([MutOp::Allocate, MutOp::insert(1000, 1001)]);
        run(&mut ms, &t);
        ms.checkpoint().unwrap();
        let h = ms.state_hash();
        let out = call_with_timeout(&mut ms, &MutOp::delete(0, 1001), 10).unwrap();
        assert_eq!(out, CallOutcome::TimedOut);
        ms.restore().unwrap();
        assert_eq!(ms.state_hash(), h);
    }
}
