use std::collections::VecDeque;

use super::{Drds, DrdsError, NaiveDrds, Vertex};
use crate::clock::StepCounter;
use crate::gcds::canonical_hash;
use crate::journal::JournalError;

/// Builds a layered structure from per-vertex layers.
pub type LayeredFactory = Box<dyn FnMut(Vec<u32>) -> Box<dyn Drds>>;

/// Counts of where queries were answered.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Routing {
    pub layered: u64,
    pub naive: u64,
}

/// General reachability that switches to a layered structure once the
/// graph is seen to be `width` disjoint paths starting at query sources.
///
/// Updates are buffered in a naive structure. When the `width`-th distinct
/// query source arrives the buffered graph is shape-checked; on success
/// every vertex gets its distance from the sources as layer and the edges
/// are replayed into a fresh layered structure. An update breaking the
/// layering later drops back to search for good.
pub struct UdcWrapper {
    width: usize,
    naive: NaiveDrds,
    sources: Vec<Vertex>,
    is_source: Vec<bool>,
    layered: Option<Box<dyn Drds>>,
    decided: bool,
    layers: Vec<u32>,
    factory: LayeredFactory,
    routing: Routing,
}

impl UdcWrapper {
    pub fn new(n: usize, width: usize, factory: LayeredFactory) -> Self {
        Self {
            width,
            naive: NaiveDrds::new(n),
            sources: Vec::new(),
            is_source: vec![false; n],
            layered: None,
            decided: false,
            layers: Vec::new(),
            factory,
            routing: Routing::default(),
        }
    }

    pub fn routing(&self) -> Routing {
        self.routing
    }

    /// Whether queries from sources currently go to the layered structure.
    pub fn is_layered(&self) -> bool {
        self.layered.is_some()
    }

    /// Whether the shape check has run.
    pub fn is_decided(&self) -> bool {
        self.decided
    }

    fn layering(&self) -> Option<Vec<u32>> {
        let n = self.naive.vertex_count();
        let mut layer = vec![None; n];
        if self.naive.edges().iter().any(|&(a, b, k)| k > 1 || a == b) {
            return None;
        }
        for v in 0..n as Vertex {
            if self.naive.in_degree(v) > 1 || self.naive.out_degree(v) > 1 {
                return None;
            }
        }
        let mut queue = VecDeque::new();
        for &r in &self.sources {
            if self.naive.in_degree(r) > 0 {
                return None;
            }
            layer[r as usize] = Some(0);
            queue.push_back(r);
        }
        while let Some(x) = queue.pop_front() {
            let l = layer[x as usize].unwrap();
            for y in self.naive.successors(x) {
                if layer[y as usize].is_some() {
                    return None;
                }
                layer[y as usize] = Some(l + 1);
                queue.push_back(y);
            }
        }
        let mut out = Vec::with_capacity(n);
        for (v, l) in layer.into_iter().enumerate() {
            let v = v as Vertex;
            match l {
                Some(l) => out.push(l),
                None if self.naive.in_degree(v) + self.naive.out_degree(v) == 0 => out.push(0),
                None => return None,
            }
        }
        Some(out)
    }

    fn decide(&mut self) -> Result<(), DrdsError> {
        self.decided = true;
        let Some(layers) = self.layering() else {
            return Ok(());
        };
        let mut s = (self.factory)(layers.clone());
        for (a, b, _) in self.naive.edges() {
            s.insert(a, b)?;
        }
        self.layers = layers;
        self.layered = Some(s);
        Ok(())
    }

    fn keeps_layering(&self, a: Vertex, b: Vertex) -> bool {
        let (a, b) = (a as usize, b as usize);
        self.layers[b] == self.layers[a] + 1
            && self.naive.out_degree(a as Vertex) == 0
            && self.naive.in_degree(b as Vertex) == 0
    }
}

impl Drds for UdcWrapper {
    fn vertex_count(&self) -> usize {
        self.naive.vertex_count()
    }

    fn insert(&mut self, a: Vertex, b: Vertex) -> Result<(), DrdsError> {
        if self.layered.is_some() && (a as usize) < self.layers.len() && (b as usize) < self.layers.len() {
            if self.keeps_layering(a, b) {
                self.layered.as_mut().unwrap().insert(a, b)?;
            } else {
                self.layered = None;
            }
        }
        self.naive.insert(a, b)
    }

    fn delete(&mut self, a: Vertex, b: Vertex) -> Result<(), DrdsError> {
        self.naive.delete(a, b)?;
        if let Some(s) = self.layered.as_mut() {
            s.delete(a, b)?;
        }
        Ok(())
    }

    fn connected(&mut self, a: Vertex, b: Vertex) -> Result<bool, DrdsError> {
        if (a as usize) >= self.naive.vertex_count() {
            return Err(DrdsError::OutOfRange(a));
        }
        if !self.is_source[a as usize] {
            self.is_source[a as usize] = true;
            self.sources.push(a);
        }
        if !self.decided && self.sources.len() == self.width {
            self.decide()?;
        }
        match self.layered.as_mut() {
            Some(s) if self.layers.get(a as usize) == Some(&0) && self.is_source[a as usize] => {
                self.routing.layered += 1;
                s.connected(a, b)
            }
            _ => {
                self.routing.naive += 1;
                self.naive.connected(a, b)
            }
        }
    }

    fn clock(&self) -> &StepCounter {
        self.naive.clock()
    }

    fn clock_mut(&mut self) -> &mut StepCounter {
        self.naive.clock_mut()
    }

    fn checkpoint(&mut self) -> Result<(), JournalError> {
        Err(JournalError::Unsupported)
    }

    fn restore(&mut self) -> Result<(), JournalError> {
        Err(JournalError::Unsupported)
    }

    fn state_hash(&self) -> u64 {
        canonical_hash(&(self.naive.state_hash(), self.layered.is_some(), &self.sources))
    }
}
