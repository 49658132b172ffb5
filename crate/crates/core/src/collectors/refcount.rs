use crate::clock::StepCounter;
use crate::edges::EdgeStore;
use crate::gcds::{canonical_hash, Gcds, OpError};
use crate::heap::NodeId;
use crate::journal::{CheckpointGuard, JCell, JVec, JournalError, Journaled};

/// Eager reference counting. Cycles are never reclaimed.
#[derive(Debug, Clone, Default)]
pub struct RefCount {
    clock: StepCounter,
    guard: CheckpointGuard,
    next_id: JCell<u32>,
    ref_counts: JVec<u32>,
    edges: EdgeStore,
    free: JVec<NodeId>,
}

impl RefCount {
    pub fn new() -> Self {
        let mut s = Self::default();
        s.ref_counts.push(0);
        s
    }

    pub fn ref_count(&self, v: NodeId) -> u32 {
        self.ref_counts.as_slice().get(v.index()).copied().unwrap_or(0)
    }

    fn journals(&mut self) -> [&mut dyn Journaled; 4] {
        [
            &mut self.next_id,
            &mut self.ref_counts,
            &mut self.edges,
            &mut self.free,
        ]
    }
}

impl Gcds for RefCount {
    fn name(&self) -> &str {
        "rc"
    }

    fn allocate(&mut self) -> Result<NodeId, OpError> {
        let id = *self.next_id.get() + 1;
        self.next_id.set(id);
        self.ref_counts.push(0);
        self.clock.tick(2);
        let v = NodeId(id);
        self.insert(NodeId::ROOT, v)?;
        Ok(v)
    }

    fn insert(&mut self, a: NodeId, b: NodeId) -> Result<(), OpError> {
        *self.ref_counts.get_mut(b.index()) += 1;
        self.clock.tick(1);
        self.edges.increment(a, b, &mut self.clock);
        self.clock.check()?;
        Ok(())
    }

    fn delete(&mut self, a: NodeId, b: NodeId) -> Result<(), OpError> {
        self.edges.decrement(a, b, &mut self.clock);
        let rc = self.ref_counts.get_mut(b.index());
        *rc -= 1;
        self.clock.tick(1);
        if *rc > 0 {
            self.clock.check()?;
            return Ok(());
        }
        let mut work = vec![b];
        while let Some(node) = work.pop() {
            self.clock.charge(1)?;
            self.free.push(node);
            for i in 0..self.edges.out_len(node) {
                let c = self.edges.out_at(node, i, &mut self.clock);
                let k = self.edges.count(node, c, &mut self.clock);
                let rc = self.ref_counts.get_mut(c.index());
                *rc -= k;
                self.clock.tick(1);
                if *rc == 0 {
                    work.push(c);
                }
                self.clock.check()?;
            }
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
        canonical_hash(&(
            *self.next_id.get(),
            self.ref_counts.as_slice(),
            self.edges.triples(),
            self.free.as_slice(),
        ))
    }
}
