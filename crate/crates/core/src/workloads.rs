//! Named workloads and the memory-capped harness.
//!
//! Every builder is deterministic in its arguments. Node ids are the
//! allocation order, so node `i` is the `i`-th `Allocate`.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use thiserror::Error;

use crate::gcds::Gcds;
use crate::heap::{gen_trace, gen_trace_with, GenConstraints, GenError, HeapTracker, MutOp, TraceClass};
use crate::metrics::{MetricsRecord, RunError};

/// A trace plus the allocation cap it is meant to run under.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Workload {
    pub trace: Vec<MutOp>,
    pub cap: Option<usize>,
    /// Trace index where the measured phase begins.
    pub measure_from: usize,
}

impl Workload {
    fn uncapped(trace: Vec<MutOp>) -> Self {
        Self {
            trace,
            cap: None,
            measure_from: 0,
        }
    }
}

fn chain(trace: &mut Vec<MutOp>, first: u32, len: u32) {
    for i in first..first + len {
        trace.push(MutOp::Allocate);
        if i > first {
            trace.push(MutOp::insert(i - 1, i));
            trace.push(MutOp::delete(0, i));
        }
    }
}

/// Build an `n`-node singly linked list hanging from the root, then tear it
/// down from the head by moving the root edge one node forward at a time.
pub fn list(n: usize) -> Workload {
    linked(n, false)
}

/// As [`list`], with a back edge between every pair of neighbours.
pub fn dbllist(n: usize) -> Workload {
    linked(n, true)
}

fn linked(n: usize, back: bool) -> Workload {
    assert!(n >= 2, "a list needs at least two nodes");
    let n = n as u32;
    let mut t = Vec::new();
    for _ in 1..=n {
        t.push(MutOp::Allocate);
    }
    for i in 1..n {
        t.push(MutOp::insert(i, i + 1));
        if back {
            t.push(MutOp::insert(i + 1, i));
        }
    }
    for i in 2..=n {
        t.push(MutOp::delete(0, i));
    }
    let measure_from = t.len();
    for i in 1..n {
        t.push(MutOp::insert(0, i + 1));
        if back {
            t.push(MutOp::delete(i + 1, i));
        }
        t.push(MutOp::delete(0, i));
    }
    t.push(MutOp::delete(0, n));
    Workload {
        trace: t,
        cap: None,
        measure_from,
    }
}

/// Chain `1 -> .. -> n` with an extra root edge to `n - 1`; cutting
/// `n - 1 -> n` strands the last node while the heap sits at its cap, so the
/// following allocation needs it back.
pub fn baker(n: usize) -> Workload {
    assert!(n >= 3, "the scenario needs at least three nodes");
    let n32 = n as u32;
    let mut t = Vec::new();
    chain(&mut t, 1, n32);
    t.push(MutOp::insert(0, n32 - 1));
    let measure_from = t.len();
    t.push(MutOp::delete(n32 - 1, n32));
    t.push(MutOp::Allocate);
    Workload {
        trace: t,
        cap: Some(n),
        measure_from,
    }
}

/// Parameters of [`thrashing`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thrashing {
    pub n: usize,
    pub cap: Option<usize>,
    pub permanent_fraction: f64,
    /// Temporaries are two-node cycles instead of single nodes.
    pub cyclic: bool,
    pub rounds: usize,
}

impl Thrashing {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            cap: None,
            permanent_fraction: 0.9,
            cyclic: false,
            rounds: 256,
        }
    }

    pub fn permanent(&self) -> usize {
        ((self.permanent_fraction * self.n as f64) as usize).max(1)
    }

    /// The tightest cap admitting one temporary beside the permanent set.
    pub fn min_cap(&self) -> usize {
        self.permanent() + 2
    }
}

/// Stage 1 fills the heap with a permanent chain; stage 2 repeatedly drops
/// the previous temporary and allocates a new one against the cap.
pub fn thrashing(p: Thrashing) -> Workload {
    let permanent = p.permanent() as u32;
    let cap = p.cap.unwrap_or_else(|| p.min_cap());
    assert!(cap >= p.min_cap(), "cap leaves no room for a temporary");
    let mut t = Vec::new();
    chain(&mut t, 1, permanent);
    let measure_from = t.len();
    let mut next = permanent + 1;
    let mut prev: Option<u32> = None;
    for _ in 0..p.rounds {
        if let Some(v) = prev {
            t.push(MutOp::delete(0, v));
        }
        t.push(MutOp::Allocate);
        if p.cyclic {
            t.push(MutOp::Allocate);
            t.push(MutOp::insert(next, next + 1));
            t.push(MutOp::insert(next + 1, next));
            t.push(MutOp::delete(0, next + 1));
            prev = Some(next);
            next += 2;
        } else {
            prev = Some(next);
            next += 1;
        }
    }
    Workload {
        trace: t,
        cap: Some(cap),
        measure_from,
    }
}

/// A hub under the root holding `k` nodes that each point at all of `k`
/// further nodes; finally the hub is dropped, freeing the whole dag.
pub fn dense_dag(k: usize) -> Workload {
    assert!(k >= 1);
    let k = k as u32;
    let hub = 1;
    let upper = |i: u32| 2 + i;
    let lower = |j: u32| 2 + k + j;
    let mut t = vec![MutOp::Allocate];
    for i in 0..k {
        t.extend([MutOp::Allocate, MutOp::insert(hub, upper(i)), MutOp::delete(0, upper(i))]);
    }
    for j in 0..k {
        t.extend([MutOp::Allocate, MutOp::insert(upper(0), lower(j)), MutOp::delete(0, lower(j))]);
        for i in 1..k {
            t.push(MutOp::insert(upper(i), lower(j)));
        }
    }
    let measure_from = t.len();
    t.push(MutOp::delete(0, hub));
    Workload {
        trace: t,
        cap: None,
        measure_from,
    }
}

/// Random acyclic trace with out-degree at most `m` whose deletes may strand
/// garbage.
pub fn sparse_acyclic(n: usize, m: u32, seed: u64) -> Result<Vec<MutOp>, GenError> {
    let c = GenConstraints {
        all_reachable: false,
        acyclic: true,
        max_outdeg: Some(m),
    };
    gen_trace_with(c, n, 4 * n, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorkloadName {
    List,
    DblList,
    Baker,
    Thrashing,
    DenseDag,
    SparseAcyclic,
    Random(TraceClass),
}

impl fmt::Display for WorkloadName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WorkloadName::List => f.write_str("list"),
            WorkloadName::DblList => f.write_str("dbllist"),
            WorkloadName::Baker => f.write_str("baker"),
            WorkloadName::Thrashing => f.write_str("thrashing"),
            WorkloadName::DenseDag => f.write_str("dense-dag"),
            WorkloadName::SparseAcyclic => f.write_str("sparse-acyclic"),
            WorkloadName::Random(c) => write!(f, "random:{c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown workload `{0}` (expected list, dbllist, baker, thrashing, dense-dag, sparse-acyclic or random:<class>)")]
pub struct UnknownWorkload(pub String);

impl FromStr for WorkloadName {
    type Err = UnknownWorkload;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "list" => WorkloadName::List,
            "dbllist" => WorkloadName::DblList,
            "baker" => WorkloadName::Baker,
            "thrashing" => WorkloadName::Thrashing,
            "dense-dag" => WorkloadName::DenseDag,
            "sparse-acyclic" => WorkloadName::SparseAcyclic,
            _ => match s.strip_prefix("random:").map(str::parse) {
                Some(Ok(c)) => WorkloadName::Random(c),
                _ => return Err(UnknownWorkload(s.to_string())),
            },
        })
    }
}

/// Everything that selects a concrete workload.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkloadSpec {
    pub name: WorkloadName,
    pub n: usize,
    pub cap: Option<usize>,
    pub cyclic: bool,
    pub seed: u64,
}

impl WorkloadSpec {
    pub fn new(name: WorkloadName, n: usize) -> Self {
        Self {
            name,
            n,
            cap: None,
            cyclic: false,
            seed: 0,
        }
    }

    pub fn build(&self) -> Result<Workload, GenError> {
        let n = self.n;
        let mut w = match self.name {
            WorkloadName::List => list(n),
            WorkloadName::DblList => dbllist(n),
            WorkloadName::Baker => baker(n),
            WorkloadName::Thrashing => thrashing(Thrashing {
                cap: self.cap,
                cyclic: self.cyclic,
                ..Thrashing::new(n)
            }),
            WorkloadName::DenseDag => dense_dag(n),
            WorkloadName::SparseAcyclic => Workload::uncapped(sparse_acyclic(n, 2, self.seed)?),
            WorkloadName::Random(c) => Workload::uncapped(gen_trace(c, n, 6 * n, self.seed)?),
        };
        if self.name != WorkloadName::Thrashing {
            if let Some(c) = self.cap {
                w.cap = Some(c);
            }
        }
        Ok(w)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CapError {
    #[error("op {index}: no free appeared within {waited} steps at cap {cap}")]
    OutOfMemory { index: usize, cap: usize, waited: usize },
    #[error(transparent)]
    Run(#[from] RunError),
}

/// Result of a capped run. The record covers every executed op, including
/// the `Step`s the harness inserted while waiting for memory.
#[derive(Debug, Clone)]
pub struct CappedRun {
    pub record: MetricsRecord,
    pub executed: Vec<MutOp>,
    /// Executed index of the first measured op.
    pub measure_from: usize,
    /// Largest `allocated - freed` seen right after an allocation.
    pub peak_live: usize,
    pub waits: u64,
}

impl CappedRun {
    pub fn measured_max_pause(&self) -> u64 {
        self.record.per_op_steps[self.measure_from..]
            .iter()
            .copied()
            .max()
            .unwrap_or(0)
    }

    pub fn measured_total(&self) -> u64 {
        self.record.per_op_steps[self.measure_from..].iter().sum()
    }
}

/// Run a workload, inserting `Step`s before any allocation that would
/// exceed the cap until a free appears, and checking every emission against
/// the oracle. Gives up after `max_wait` consecutive steps.
pub fn run_capped<G: Gcds + ?Sized>(backend: &mut G, w: &Workload, max_wait: usize) -> Result<CappedRun, CapError> {
    let mut tracker = HeapTracker::new();
    let mut rec = MetricsRecord::default();
    let mut executed = Vec::with_capacity(w.trace.len());
    let mut freed = vec![false];
    let (mut allocated, mut released, mut peak, mut waits) = (0usize, 0usize, 0usize, 0u64);
    let mut measure_from = None;
    let start = Instant::now();

    let mut exec = |op: &MutOp,
                    rec: &mut MetricsRecord,
                    executed: &mut Vec<MutOp>,
                    freed: &mut Vec<bool>,
                    released: &mut usize|
     -> Result<(), CapError> {
        let index = executed.len();
        let obs = tracker
            .apply(op)
            .map_err(|_| RunError::InvalidTrace { index, op: *op })?;
        let before = backend.clock().count();
        let got = backend.apply(op).map_err(|err| RunError::Op { index, err })?;
        rec.per_op_steps.push(backend.clock().count() - before);
        rec.kinds.push(op.kind());
        rec.deltas.push(obs.delta);
        if let (Some(expected), Some(got)) = (obs.allocated, got) {
            if expected != got {
                return Err(RunError::IdMismatch { index, expected, got }.into());
            }
            freed.push(false);
        }
        rec.unreachable_events
            .extend(obs.newly_unreachable.iter().map(|&v| (index, v)));
        for node in backend.drain_free_list() {
            if tracker.is_reachable(node) {
                return Err(RunError::Soundness { index, node }.into());
            }
            match freed.get_mut(node.index()) {
                Some(f) if !*f => *f = true,
                _ => return Err(RunError::BadFree { index, node }.into()),
            }
            *released += 1;
            rec.frees.push((index, node));
        }
        executed.push(*op);
        Ok(())
    };

    for (i, op) in w.trace.iter().enumerate() {
        if i == w.measure_from {
            measure_from = Some(executed.len());
        }
        if let (MutOp::Allocate, Some(cap)) = (op, w.cap) {
            let mut waited = 0;
            while allocated - released >= cap {
                if waited == max_wait {
                    return Err(CapError::OutOfMemory {
                        index: i,
                        cap,
                        waited,
                    });
                }
                exec(&MutOp::Step, &mut rec, &mut executed, &mut freed, &mut released)?;
                waited += 1;
                waits += 1;
            }
        }
        exec(op, &mut rec, &mut executed, &mut freed, &mut released)?;
        if *op == MutOp::Allocate {
            allocated += 1;
            peak = peak.max(allocated - released);
        }
    }
    rec.wall_clock = start.elapsed();
    Ok(CappedRun {
        record: rec,
        measure_from: measure_from.unwrap_or(executed.len()),
        executed,
        peak_live: peak,
        waits,
    })
}

/// Largest id a workload allocates.
pub fn node_count(trace: &[MutOp]) -> usize {
    trace.iter().filter(|op| **op == MutOp::Allocate).count()
}
