use rustc_hash::FxHashMap;

use super::{Drds, DrdsError, Vertex};
use crate::clock::StepCounter;
use crate::gcds::{call_with_timeout, canonical_hash, CallOutcome, Gcds};
use crate::heap::{MutOp, NodeId};
use crate::journal::JournalError;

/// Reachability answered by a collector with bounded delay.
///
/// Every vertex is a heap node hanging off a hub `X` that the root points
/// at. A query `a ->+ b` temporarily wires `root -> a` and `b -> X`, then
/// deletes `root -> X`: everything stays reachable iff `a` reaches `b`, so
/// a collector with delay `d` and all-reachable pause `t_ar` decides the
/// query within `d` timed calls.
#[derive(Debug)]
pub struct DrdsFromGcds<G> {
    gcds: G,
    t_ar: u64,
    d: u32,
    nodes: Vec<Option<NodeId>>,
    hub: Option<NodeId>,
    mirror: FxHashMap<(Vertex, Vertex), u32>,
    max_reaches_call: u64,
}

impl<G: Gcds> DrdsFromGcds<G> {
    pub fn new(gcds: G, n_max: usize, t_ar: u64, d: u32) -> Self {
        Self {
            gcds,
            t_ar,
            d,
            nodes: vec![None; n_max],
            hub: None,
            mirror: FxHashMap::default(),
            max_reaches_call: 0,
        }
    }

    pub fn gcds(&self) -> &G {
        &self.gcds
    }

    pub fn into_inner(self) -> G {
        self.gcds
    }

    /// Most steps any single timed call took in a query answered `true`.
    pub fn max_reaches_call(&self) -> u64 {
        self.max_reaches_call
    }

    fn ensure_hub(&mut self) -> Result<(NodeId, bool), DrdsError> {
        match self.hub {
            Some(x) => Ok((x, false)),
            None => {
                let x = self.gcds.allocate()?;
                self.hub = Some(x);
                Ok((x, true))
            }
        }
    }

    fn node(&mut self, v: Vertex, created: &mut Vec<Vertex>) -> Result<NodeId, DrdsError> {
        let slot = *self
            .nodes
            .get(v as usize)
            .ok_or(DrdsError::OutOfRange(v))?;
        if let Some(n) = slot {
            return Ok(n);
        }
        let (x, _) = self.ensure_hub()?;
        let n = self.gcds.allocate()?;
        self.gcds.insert(x, n)?;
        self.gcds.delete(NodeId::ROOT, n)?;
        self.nodes[v as usize] = Some(n);
        created.push(v);
        Ok(n)
    }

    fn timed(&mut self, op: MutOp) -> Result<(bool, u64), DrdsError> {
        let before = self.gcds.clock().count();
        let out = call_with_timeout(&mut self.gcds, &op, self.t_ar)?;
        let spent = self.gcds.clock().count() - before;
        let clean = out != CallOutcome::TimedOut && self.gcds.drain_free_list().is_empty();
        Ok((clean, spent))
    }

    fn probe(&mut self, a: Vertex, b: Vertex, created: &mut Vec<Vertex>) -> Result<bool, DrdsError> {
        let na = self.node(a, created)?;
        let nb = self.node(b, created)?;
        let x = self.hub.expect("hub exists once a vertex does");
        self.gcds.insert(NodeId::ROOT, na)?;
        self.gcds.insert(nb, x)?;
        let mut worst = 0;
        let (clean, spent) = self.timed(MutOp::Delete(NodeId::ROOT, x))?;
        worst = worst.max(spent);
        if !clean {
            return Ok(false);
        }
        for _ in 0..self.d {
            let (clean, spent) = self.timed(MutOp::Step)?;
            worst = worst.max(spent);
            if !clean {
                return Ok(false);
            }
        }
        self.max_reaches_call = self.max_reaches_call.max(worst);
        Ok(true)
    }
}

impl<G: Gcds> Drds for DrdsFromGcds<G> {
    fn vertex_count(&self) -> usize {
        self.nodes.len()
    }

    fn insert(&mut self, a: Vertex, b: Vertex) -> Result<(), DrdsError> {
        let mut created = Vec::new();
        let na = self.node(a, &mut created)?;
        let nb = self.node(b, &mut created)?;
        self.gcds.insert(na, nb)?;
        *self.mirror.entry((a, b)).or_default() += 1;
        Ok(())
    }

    fn delete(&mut self, a: Vertex, b: Vertex) -> Result<(), DrdsError> {
        let Some(k) = self.mirror.get_mut(&(a, b)) else {
            return Err(DrdsError::MissingEdge(a, b));
        };
        *k -= 1;
        if *k == 0 {
            self.mirror.remove(&(a, b));
        }
        let na = self.nodes[a as usize].unwrap();
        let nb = self.nodes[b as usize].unwrap();
        self.gcds.delete(na, nb)?;
        Ok(())
    }

    fn connected(&mut self, a: Vertex, b: Vertex) -> Result<bool, DrdsError> {
        let n = self.nodes.len() as Vertex;
        for v in [a, b] {
            if v >= n {
                return Err(DrdsError::OutOfRange(v));
            }
        }
        if a == b {
            return Ok(true);
        }
        let hub_before = self.hub;
        self.gcds.checkpoint()?;
        let mut created = Vec::new();
        let answer = self.probe(a, b, &mut created);
        self.gcds.restore()?;
        for v in created {
            self.nodes[v as usize] = None;
        }
        self.hub = hub_before;
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
        canonical_hash(&(self.gcds.state_hash(), &self.nodes, self.hub))
    }
}
