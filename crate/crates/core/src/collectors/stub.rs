//! Deliberately defective collectors for exercising the harness.

use crate::clock::StepCounter;
use crate::gcds::{canonical_hash, Gcds, OpError};
use crate::heap::NodeId;
use crate::journal::{JVec, JournalError, Journaled};

use super::MarkSweep;

/// Mark-and-sweep that also frees the target of every deleted edge,
/// reachable or not.
#[derive(Debug, Clone, Default)]
pub struct Broken {
    inner: MarkSweep,
    extra: JVec<NodeId>,
}

impl Broken {
    pub fn new() -> Self {
        Self {
            inner: MarkSweep::new(),
            extra: JVec::new(),
        }
    }
}

impl Gcds for Broken {
    fn name(&self) -> &str {
        "broken"
    }
    fn allocate(&mut self) -> Result<NodeId, OpError> {
        self.inner.allocate()
    }
    fn insert(&mut self, a: NodeId, b: NodeId) -> Result<(), OpError> {
        self.inner.insert(a, b)
    }
    fn delete(&mut self, a: NodeId, b: NodeId) -> Result<(), OpError> {
        self.inner.delete(a, b)?;
        self.extra.push(b);
        Ok(())
    }
    fn step(&mut self) -> Result<(), OpError> {
        self.inner.step()
    }
    fn drain_free_list(&mut self) -> Vec<NodeId> {
        let mut v = self.inner.drain_free_list();
        for b in self.extra.drain_all() {
            if !v.contains(&b) {
                v.push(b);
            }
        }
        v
    }
    fn clock(&self) -> &StepCounter {
        self.inner.clock()
    }
    fn clock_mut(&mut self) -> &mut StepCounter {
        self.inner.clock_mut()
    }
    fn checkpoint(&mut self) -> Result<(), JournalError> {
        self.inner.checkpoint()?;
        self.extra.begin();
        Ok(())
    }
    fn restore(&mut self) -> Result<(), JournalError> {
        self.inner.restore()?;
        self.extra.rollback();
        Ok(())
    }
    fn state_hash(&self) -> u64 {
        canonical_hash(&(self.inner.state_hash(), self.extra.as_slice()))
    }
}

/// Forwards only the first node of every batch the inner collector frees
/// and silently drops the rest.
#[derive(Debug, Clone)]
pub struct HeadOnly<G> {
    inner: G,
    free: JVec<NodeId>,
}

impl<G: Gcds> HeadOnly<G> {
    pub fn new(inner: G) -> Self {
        Self {
            inner,
            free: JVec::new(),
        }
    }

    fn filter(&mut self) {
        if let Some(&head) = self.inner.drain_free_list().iter().min() {
            self.free.push(head);
        }
    }
}

impl<G: Gcds> Gcds for HeadOnly<G> {
    fn name(&self) -> &str {
        "head-only"
    }
    fn allocate(&mut self) -> Result<NodeId, OpError> {
        let v = self.inner.allocate()?;
        self.filter();
        Ok(v)
    }
    fn insert(&mut self, a: NodeId, b: NodeId) -> Result<(), OpError> {
        self.inner.insert(a, b)?;
        self.filter();
        Ok(())
    }
    fn delete(&mut self, a: NodeId, b: NodeId) -> Result<(), OpError> {
        self.inner.delete(a, b)?;
        self.filter();
        Ok(())
    }
    fn step(&mut self) -> Result<(), OpError> {
        self.inner.step()?;
        self.filter();
        Ok(())
    }
    fn drain_free_list(&mut self) -> Vec<NodeId> {
        self.free.drain_all()
    }
    fn clock(&self) -> &StepCounter {
        self.inner.clock()
    }
    fn clock_mut(&mut self) -> &mut StepCounter {
        self.inner.clock_mut()
    }
    fn checkpoint(&mut self) -> Result<(), JournalError> {
        self.inner.checkpoint()?;
        self.free.begin();
        Ok(())
    }
    fn restore(&mut self) -> Result<(), JournalError> {
        self.inner.restore()?;
        self.free.rollback();
        Ok(())
    }
    fn state_hash(&self) -> u64 {
        canonical_hash(&(self.inner.state_hash(), self.free.as_slice()))
    }
}
