//! Reductions between collectors and dynamic directed reachability.

mod drds_from_gcds;
mod gcds_from_drds;
mod lprds;
pub mod selftest;
mod udc;

pub use drds_from_gcds::DrdsFromGcds;
pub use gcds_from_drds::GcdsFromDrds;
pub use lprds::LprdsFromGcds;
pub use udc::UdcWrapper;

use std::collections::VecDeque;

use thiserror::Error;

use crate::clock::StepCounter;
use crate::edges::EdgeStore;
use crate::gcds::{canonical_hash, OpError};
use crate::heap::NodeId;
use crate::journal::{CheckpointGuard, JournalError, Journaled};

/// Vertex of a reachability structure, in `0..vertex_count()`.
pub type Vertex = u32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DrdsError {
    #[error("step budget exhausted")]
    TimedOut,
    #[error("vertex {0} is out of range")]
    OutOfRange(Vertex),
    #[error("edge {0} -> {1} does not exist")]
    MissingEdge(Vertex, Vertex),
    #[error("caller promise broken: {0}")]
    PromiseViolation(String),
    #[error("collector failed: {0}")]
    Gcds(OpError),
    #[error(transparent)]
    Journal(#[from] JournalError),
}

impl From<OpError> for DrdsError {
    fn from(e: OpError) -> Self {
        match e {
            OpError::TimedOut => DrdsError::TimedOut,
            e => DrdsError::Gcds(e),
        }
    }
}

impl From<crate::clock::TimedOut> for DrdsError {
    fn from(_: crate::clock::TimedOut) -> Self {
        DrdsError::TimedOut
    }
}

/// Dynamic reachability over a fixed vertex set. `connected(a, b)` is true
/// iff a directed path from `a` to `b` exists; every vertex reaches itself.
pub trait Drds {
    fn vertex_count(&self) -> usize;
    fn insert(&mut self, a: Vertex, b: Vertex) -> Result<(), DrdsError>;
    fn delete(&mut self, a: Vertex, b: Vertex) -> Result<(), DrdsError>;
    fn connected(&mut self, a: Vertex, b: Vertex) -> Result<bool, DrdsError>;
    fn clock(&self) -> &StepCounter;
    fn clock_mut(&mut self) -> &mut StepCounter;
    fn checkpoint(&mut self) -> Result<(), JournalError>;
    fn restore(&mut self) -> Result<(), JournalError>;
    fn state_hash(&self) -> u64;
}

impl<D: Drds + ?Sized> Drds for Box<D> {
    fn vertex_count(&self) -> usize {
        (**self).vertex_count()
    }
    fn insert(&mut self, a: Vertex, b: Vertex) -> Result<(), DrdsError> {
        (**self).insert(a, b)
    }
    fn delete(&mut self, a: Vertex, b: Vertex) -> Result<(), DrdsError> {
        (**self).delete(a, b)
    }
    fn connected(&mut self, a: Vertex, b: Vertex) -> Result<bool, DrdsError> {
        (**self).connected(a, b)
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

/// Adjacency multiset answering queries by breadth-first search.
#[derive(Debug, Clone)]
pub struct NaiveDrds {
    n: usize,
    edges: EdgeStore,
    clock: StepCounter,
    guard: CheckpointGuard,
}

impl NaiveDrds {
    pub fn new(n: usize) -> Self {
        let mut edges = EdgeStore::new();
        if n > 0 {
            edges.reserve_node(NodeId(n as u32 - 1));
        }
        Self {
            n,
            edges,
            clock: StepCounter::new(),
            guard: CheckpointGuard::default(),
        }
    }

    fn check(&self, v: Vertex) -> Result<NodeId, DrdsError> {
        if (v as usize) < self.n {
            Ok(NodeId(v))
        } else {
            Err(DrdsError::OutOfRange(v))
        }
    }

    pub fn multiplicity(&self, a: Vertex, b: Vertex) -> u32 {
        self.edges.count(NodeId(a), NodeId(b), &mut StepCounter::new())
    }

    pub fn in_degree(&self, v: Vertex) -> u32 {
        self.edges.incoming(NodeId(v)).len() as u32
    }

    pub fn out_degree(&self, v: Vertex) -> u32 {
        self.edges.outgoing(NodeId(v)).len() as u32
    }

    pub fn successors(&self, v: Vertex) -> Vec<Vertex> {
        self.edges.outgoing(NodeId(v)).into_iter().map(|x| x.0).collect()
    }

    /// `(src, dst, multiplicity)` for every edge, sorted.
    pub fn edges(&self) -> Vec<(Vertex, Vertex, u32)> {
        self.edges
            .triples()
            .into_iter()
            .map(|(a, b, k)| (a.0, b.0, k))
            .collect()
    }
}

impl Drds for NaiveDrds {
    fn vertex_count(&self) -> usize {
        self.n
    }

    fn insert(&mut self, a: Vertex, b: Vertex) -> Result<(), DrdsError> {
        let (a, b) = (self.check(a)?, self.check(b)?);
        self.edges.increment(a, b, &mut self.clock);
        Ok(self.clock.check()?)
    }

    fn delete(&mut self, a: Vertex, b: Vertex) -> Result<(), DrdsError> {
        let (na, nb) = (self.check(a)?, self.check(b)?);
        if self.edges.count(na, nb, &mut self.clock) == 0 {
            return Err(DrdsError::MissingEdge(a, b));
        }
        self.edges.decrement(na, nb, &mut self.clock);
        Ok(self.clock.check()?)
    }

    fn connected(&mut self, a: Vertex, b: Vertex) -> Result<bool, DrdsError> {
        let (a, b) = (self.check(a)?, self.check(b)?);
        if a == b {
            return Ok(true);
        }
        let mut seen = vec![false; self.n];
        seen[a.index()] = true;
        let mut queue = VecDeque::from([a]);
        while let Some(x) = queue.pop_front() {
            self.clock.charge(1)?;
            for i in 0..self.edges.out_len(x) {
                let y = self.edges.out_at(x, i, &mut self.clock);
                if y == b {
                    return Ok(true);
                }
                if !seen[y.index()] {
                    seen[y.index()] = true;
                    queue.push_back(y);
                }
            }
        }
        Ok(false)
    }

    fn clock(&self) -> &StepCounter {
        &self.clock
    }

    fn clock_mut(&mut self) -> &mut StepCounter {
        &mut self.clock
    }

    fn checkpoint(&mut self) -> Result<(), JournalError> {
        self.guard.open()?;
        self.edges.begin();
        Ok(())
    }

    fn restore(&mut self) -> Result<(), JournalError> {
        self.guard.close()?;
        self.edges.rollback();
        Ok(())
    }

    fn state_hash(&self) -> u64 {
        canonical_hash(&(self.n, self.edges.triples()))
    }
}
