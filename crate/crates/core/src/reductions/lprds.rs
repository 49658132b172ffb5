use super::{Drds, DrdsError, Vertex};
use crate::clock::StepCounter;
use crate::gcds::{call_with_timeout, canonical_hash, CallOutcome, Gcds};
use crate::heap::{MutOp, NodeId};
use crate::journal::JournalError;

/// Layered-permutation reachability answered by a collector.
///
/// Edges go from layer `l` to `l + 1` with in- and out-degree at most one,
/// and queries start in layer 0. The heap mirrors the graph with a root
/// edge to every in-degree-0 vertex. A query `a ->+ b` adds `b -> a` and
/// deletes `root -> a`: the closed cycle dies iff the path exists.
#[derive(Debug)]
pub struct LprdsFromGcds<G> {
    gcds: G,
    t_saar: u64,
    d: u32,
    layers: Vec<u32>,
    nodes: Vec<Option<NodeId>>,
    succ: Vec<Option<Vertex>>,
    pred: Vec<Option<Vertex>>,
    max_clean_call: u64,
}

impl<G: Gcds> LprdsFromGcds<G> {
    /// `layers[v]` is the layer of vertex `v`; the first layer is 0.
    pub fn new(gcds: G, layers: Vec<u32>, t_saar: u64, d: u32) -> Self {
        let n = layers.len();
        Self {
            gcds,
            t_saar,
            d,
            layers,
            nodes: vec![None; n],
            succ: vec![None; n],
            pred: vec![None; n],
            max_clean_call: 0,
        }
    }

    pub fn gcds(&self) -> &G {
        &self.gcds
    }

    pub fn layers(&self) -> &[u32] {
        &self.layers
    }

    /// Most steps any single timed call took in a query answered `false`.
    pub fn max_clean_call(&self) -> u64 {
        self.max_clean_call
    }

    fn check(&self, v: Vertex) -> Result<(), DrdsError> {
        if (v as usize) < self.layers.len() {
            Ok(())
        } else {
            Err(DrdsError::OutOfRange(v))
        }
    }

    fn node(&mut self, v: Vertex) -> Result<NodeId, DrdsError> {
        if let Some(n) = self.nodes[v as usize] {
            return Ok(n);
        }
        let n = self.gcds.allocate()?;
        self.nodes[v as usize] = Some(n);
        Ok(n)
    }

    fn timed(&mut self, op: MutOp) -> Result<(bool, u64), DrdsError> {
        let before = self.gcds.clock().count();
        let out = call_with_timeout(&mut self.gcds, &op, self.t_saar)?;
        let spent = self.gcds.clock().count() - before;
        let clean = out != CallOutcome::TimedOut && self.gcds.drain_free_list().is_empty();
        Ok((clean, spent))
    }

    fn probe(&mut self, na: NodeId, nb: NodeId) -> Result<bool, DrdsError> {
        self.gcds.insert(nb, na)?;
        let mut worst = 0;
        let (clean, spent) = self.timed(MutOp::Delete(NodeId::ROOT, na))?;
        worst = worst.max(spent);
        if !clean {
            return Ok(true);
        }
        for _ in 0..self.d {
            let (clean, spent) = self.timed(MutOp::Step)?;
            worst = worst.max(spent);
            if !clean {
                return Ok(true);
            }
        }
        self.max_clean_call = self.max_clean_call.max(worst);
        Ok(false)
    }
}

fn promise(msg: String) -> DrdsError {
    DrdsError::PromiseViolation(msg)
}

impl<G: Gcds> Drds for LprdsFromGcds<G> {
    fn vertex_count(&self) -> usize {
        self.layers.len()
    }

    fn insert(&mut self, a: Vertex, b: Vertex) -> Result<(), DrdsError> {
        self.check(a)?;
        self.check(b)?;
        let (la, lb) = (self.layers[a as usize], self.layers[b as usize]);
        if lb != la + 1 {
            return Err(promise(format!("edge {a} -> {b} spans layers {la} -> {lb}")));
        }
        if self.succ[a as usize].is_some() {
            return Err(promise(format!("vertex {a} already has an outgoing edge")));
        }
        if self.pred[b as usize].is_some() {
            return Err(promise(format!("vertex {b} already has an incoming edge")));
        }
        let na = self.node(a)?;
        let nb = self.node(b)?;
        self.gcds.insert(na, nb)?;
        self.gcds.delete(NodeId::ROOT, nb)?;
        self.succ[a as usize] = Some(b);
        self.pred[b as usize] = Some(a);
        Ok(())
    }

    fn delete(&mut self, a: Vertex, b: Vertex) -> Result<(), DrdsError> {
        self.check(a)?;
        self.check(b)?;
        if self.succ[a as usize] != Some(b) {
            return Err(DrdsError::MissingEdge(a, b));
        }
        let (na, nb) = (self.nodes[a as usize].unwrap(), self.nodes[b as usize].unwrap());
        self.gcds.insert(NodeId::ROOT, nb)?;
        self.gcds.delete(na, nb)?;
        self.succ[a as usize] = None;
        self.pred[b as usize] = None;
        Ok(())
    }

    fn connected(&mut self, a: Vertex, b: Vertex) -> Result<bool, DrdsError> {
        self.check(a)?;
        self.check(b)?;
        if self.layers[a as usize] != 0 {
            return Err(promise(format!("query source {a} is not in the first layer")));
        }
        if a == b {
            return Ok(true);
        }
        let created = [a, b].map(|v| self.nodes[v as usize].is_none());
        self.gcds.checkpoint()?;
        let answer = (|| {
            let na = self.node(a)?;
            let nb = self.node(b)?;
            self.probe(na, nb)
        })();
        self.gcds.restore()?;
        for (v, fresh) in [a, b].into_iter().zip(created) {
            if fresh {
                self.nodes[v as usize] = None;
            }
        }
        answer
    }

    fn clock(&self) -> &StepCounter {
        self.gcds.clock()
    }

    fn clock_mut(&mut self) -> &mut StepCounter {
        self.gcds.clock_mut()
    }

    fn checkpoint(&mut self) -> Result<(), JournalError> {
        Err(JournalError::Unsupported)
    }

    fn restore(&mut self) -> Result<(), JournalError> {
        Err(JournalError::Unsupported)
    }

    fn state_hash(&self) -> u64 {
        canonical_hash(&(self.gcds.state_hash(), &self.nodes, &self.succ))
    }
}
