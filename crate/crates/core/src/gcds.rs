//! The collector interface.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use thiserror::Error;

use crate::clock::{StepCounter, TimedOut};
use crate::heap::{MutOp, NodeId};
use crate::journal::JournalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum OpError {
    #[error("step budget exhausted")]
    TimedOut,
    #[error("capacity of {0} nodes exhausted")]
    Exhausted(usize),
}

impl From<TimedOut> for OpError {
    fn from(_: TimedOut) -> Self {
        OpError::TimedOut
    }
}

/// A garbage collection data structure: it observes mutator events and
/// reports unreachable nodes through a free list.
///
/// Implementations may only emit nodes that are unreachable, never emit a
/// node twice, and behave deterministically. Callers keep the usual
/// promises: endpoints of `insert`/`delete` are reachable, `delete` names an
/// existing edge, and nothing points at the root.
pub trait Gcds {
    fn name(&self) -> &str;

    /// New node with an edge from the root.
    fn allocate(&mut self) -> Result<NodeId, OpError>;
    fn insert(&mut self, a: NodeId, b: NodeId) -> Result<(), OpError>;
    fn delete(&mut self, a: NodeId, b: NodeId) -> Result<(), OpError>;
    /// Extra collection work.
    fn step(&mut self) -> Result<(), OpError>;

    /// Take everything emitted since the last drain.
    fn drain_free_list(&mut self) -> Vec<NodeId>;

    fn clock(&self) -> &StepCounter;
    fn clock_mut(&mut self) -> &mut StepCounter;

    fn checkpoint(&mut self) -> Result<(), JournalError>;
    /// Roll back to the last checkpoint, discarding any free-list entries
    /// produced since.
    fn restore(&mut self) -> Result<(), JournalError>;

    /// Hash of the canonical logical state.
    fn state_hash(&self) -> u64;

    fn apply(&mut self, op: &MutOp) -> Result<Option<NodeId>, OpError> {
        match *op {
            MutOp::Allocate => self.allocate().map(Some),
            MutOp::Insert(a, b) => self.insert(a, b).map(|_| None),
            MutOp::Delete(a, b) => self.delete(a, b).map(|_| None),
            MutOp::Step => self.step().map(|_| None),
        }
    }
}

impl<G: Gcds + ?Sized> Gcds for Box<G> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn allocate(&mut self) -> Result<NodeId, OpError> {
        (**self).allocate()
    }
    fn insert(&mut self, a: NodeId, b: NodeId) -> Result<(), OpError> {
        (**self).insert(a, b)
    }
    fn delete(&mut self, a: NodeId, b: NodeId) -> Result<(), OpError> {
        (**self).delete(a, b)
    }
    fn step(&mut self) -> Result<(), OpError> {
        (**self).step()
    }
    fn drain_free_list(&mut self) -> Vec<NodeId> {
        (**self).drain_free_list()
    }
    fn clock(&self) -> &StepCounter {
        (**self).clock()
    }
    fn clock_mut(&mut self) -> &mut StepCounter {
        (**self).clock_mut()
    }
    fn checkpoint(&mut self) -> Result<(), JournalError> {
        (**self).checkpoint()
    }
    fn restore(&mut self) -> Result<(), JournalError> {
        (**self).restore()
    }
    fn state_hash(&self) -> u64 {
        (**self).state_hash()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CallOutcome {
    Completed(Option<NodeId>),
    TimedOut,
}

/// Run one op with at most `limit` steps.
///
/// On timeout the backend is left mid-operation; every write went through
/// its journal, so a `restore` brings it back.
pub fn call_with_timeout<G: Gcds + ?Sized>(
    backend: &mut G,
    op: &MutOp,
    limit: u64,
) -> Result<CallOutcome, OpError> {
    backend.clock_mut().arm(limit);
    let r = backend.apply(op);
    backend.clock_mut().disarm();
    match r {
        Ok(v) => Ok(CallOutcome::Completed(v)),
        Err(OpError::TimedOut) => Ok(CallOutcome::TimedOut),
        Err(e) => Err(e),
    }
}

/// 64-bit hash of a canonical value.
pub fn canonical_hash<T: Hash + ?Sized>(v: &T) -> u64 {
    let mut h = DefaultHasher::new();
    v.hash(&mut h);
    h.finish()
}
