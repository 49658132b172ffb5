//! Driving a backend over a trace and the delay and pause statistics.

use std::fmt;
use std::io::{self, Write};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::gcds::{Gcds, OpError};
use crate::heap::{HeapTracker, MutOp, NodeId, OpKind, TraceClass};

/// A delay measured in operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Delay {
    Bounded(u64),
    Unbounded,
}

impl fmt::Display for Delay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Delay::Bounded(d) => write!(f, "{d}"),
            Delay::Unbounded => f.write_str("unbounded"),
        }
    }
}

/// Oracle view of a trace, shareable between backends.
#[derive(Debug, Clone, Default)]
pub struct Timeline {
    pub kinds: Vec<OpKind>,
    /// `(op index, node)` for every node at the op that made it unreachable.
    pub events: Vec<(usize, NodeId)>,
    /// Op index at which each node became unreachable.
    pub lost_at: Vec<Option<usize>>,
    /// Per op, edge copies whose source became unreachable.
    pub deltas: Vec<u64>,
    /// Per op, the id an `Allocate` must return.
    pub allocated: Vec<Option<NodeId>>,
}

impl Timeline {
    pub fn of(trace: &[MutOp]) -> Result<Self, RunError> {
        let mut t = HeapTracker::new();
        let mut tl = Timeline {
            lost_at: vec![None],
            ..Default::default()
        };
        for (index, op) in trace.iter().enumerate() {
            let obs = t
                .apply(op)
                .map_err(|_| RunError::InvalidTrace { index, op: *op })?;
            if obs.allocated.is_some() {
                tl.lost_at.push(None);
            }
            for &v in &obs.newly_unreachable {
                tl.events.push((index, v));
                tl.lost_at[v.index()] = Some(index);
            }
            tl.kinds.push(op.kind());
            tl.deltas.push(obs.delta);
            tl.allocated.push(obs.allocated);
        }
        Ok(tl)
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    fn reachable_after(&self, v: NodeId, index: usize) -> Option<bool> {
        self.lost_at
            .get(v.index())
            .map(|l| !matches!(l, Some(i) if *i <= index))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunError {
    #[error("op {index} ({op:?}) breaks the caller promises")]
    InvalidTrace { index: usize, op: MutOp },
    #[error("op {index}: freed node {node} while it is still reachable")]
    Soundness { index: usize, node: NodeId },
    #[error("op {index}: node {node} freed twice or never allocated")]
    BadFree { index: usize, node: NodeId },
    #[error("op {index}: allocate returned {got}, expected {expected}")]
    IdMismatch {
        index: usize,
        expected: NodeId,
        got: NodeId,
    },
    #[error("op {index}: backend failed: {err}")]
    Op { index: usize, err: OpError },
}

impl RunError {
    pub fn is_soundness(&self) -> bool {
        matches!(self, RunError::Soundness { .. } | RunError::BadFree { .. })
    }
}

/// Everything observed while running one trace.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MetricsRecord {
    pub kinds: Vec<OpKind>,
    pub per_op_steps: Vec<u64>,
    /// `(op index, node)` in emission order.
    pub frees: Vec<(usize, NodeId)>,
    pub unreachable_events: Vec<(usize, NodeId)>,
    pub deltas: Vec<u64>,
    /// Informational only; excluded from equality of interest.
    pub wall_clock: Duration,
}

impl MetricsRecord {
    pub fn max_pause(&self) -> u64 {
        self.per_op_steps.iter().copied().max().unwrap_or(0)
    }

    pub fn total_steps(&self) -> u64 {
        self.per_op_steps.iter().sum()
    }

    pub fn delay(&self) -> Delay {
        measure_delay(self)
    }

    pub fn first_delay(&self) -> Delay {
        measure_first_delay(self)
    }

    pub fn frees_per_op(&self) -> Vec<u32> {
        let mut v = vec![0; self.per_op_steps.len()];
        for &(i, _) in &self.frees {
            v[i] += 1;
        }
        v
    }

    /// First op after which the cumulative freed set differs from the
    /// cumulative unreachable set, if any.
    pub fn first_lag(&self) -> Option<usize> {
        let mut f = self.frees.clone();
        let mut u = self.unreachable_events.clone();
        f.sort_unstable();
        u.sort_unstable();
        if f == u {
            return None;
        }
        let first = f
            .iter()
            .zip(&u)
            .find(|(a, b)| a != b)
            .map(|(a, b)| a.0.min(b.0));
        Some(first.unwrap_or_else(|| {
            let (lf, lu) = (f.len(), u.len());
            if lf > lu {
                f[lu].0
            } else {
                u[lf].0
            }
        }))
    }

    /// One row per op plus summary rows.
    pub fn write_csv<W: Write>(&self, mut w: W, class: Option<TraceClass>) -> io::Result<()> {
        writeln!(w, "op_index,op_kind,steps,frees_emitted")?;
        let frees = self.frees_per_op();
        for (i, (k, s)) in self.kinds.iter().zip(&self.per_op_steps).enumerate() {
            writeln!(w, "{i},{k},{s},{}", frees[i])?;
        }
        writeln!(w, "max_pause_steps,{}", self.max_pause())?;
        writeln!(w, "delay,{}", self.delay())?;
        writeln!(w, "first_delay,{}", self.first_delay())?;
        match class {
            Some(c) => writeln!(w, "trace_class,{c}")?,
            None => writeln!(w, "trace_class,unknown")?,
        }
        writeln!(w, "wall_clock_us,{}", self.wall_clock.as_micros())
    }
}

/// Worst gap between a node becoming unreachable and its emission,
/// counting the op that disconnected it. Unmatched events at trace end are
/// unbounded.
pub fn measure_delay(r: &MetricsRecord) -> Delay {
    let mut freed_at = rustc_hash::FxHashMap::default();
    for &(i, v) in &r.frees {
        freed_at.entry(v).or_insert(i);
    }
    let mut worst = 0;
    for &(i, v) in &r.unreachable_events {
        match freed_at.get(&v) {
            Some(&j) => worst = worst.max(j.saturating_sub(i) as u64 + 1),
            None => return Delay::Unbounded,
        }
    }
    Delay::Bounded(worst)
}

/// Gap between the first unreachability event and the first emission of
/// anything. Nodes never become reachable again, so only the first event
/// follows a fully reachable heap.
pub fn measure_first_delay(r: &MetricsRecord) -> Delay {
    let Some(first_event) = r.unreachable_events.iter().map(|e| e.0).min() else {
        return Delay::Bounded(0);
    };
    match r.frees.iter().map(|f| f.0).min() {
        Some(j) => Delay::Bounded(j.saturating_sub(first_event) as u64 + 1),
        None => Delay::Unbounded,
    }
}

/// Run a backend over a trace, checking each emission against the oracle.
pub fn run_trace<G: Gcds + ?Sized>(backend: &mut G, trace: &[MutOp]) -> Result<MetricsRecord, RunError> {
    let tl = Timeline::of(trace)?;
    run_with_timeline(backend, trace, &tl)
}

/// As [`run_trace`], reusing an oracle timeline computed once for `trace`.
pub fn run_with_timeline<G: Gcds + ?Sized>(
    backend: &mut G,
    trace: &[MutOp],
    tl: &Timeline,
) -> Result<MetricsRecord, RunError> {
    assert_eq!(trace.len(), tl.len(), "timeline belongs to another trace");
    let mut rec = MetricsRecord {
        kinds: tl.kinds.clone(),
        per_op_steps: Vec::with_capacity(trace.len()),
        unreachable_events: tl.events.clone(),
        deltas: tl.deltas.clone(),
        ..Default::default()
    };
    let mut freed = vec![false; tl.lost_at.len()];
    let start = Instant::now();
    for (index, op) in trace.iter().enumerate() {
        let before = backend.clock().count();
        let got = backend
            .apply(op)
            .map_err(|err| RunError::Op { index, err })?;
        rec.per_op_steps.push(backend.clock().count() - before);
        if let (Some(expected), Some(got)) = (tl.allocated[index], got) {
            if expected != got {
                return Err(RunError::IdMismatch {
                    index,
                    expected,
                    got,
                });
            }
        }
        for node in backend.drain_free_list() {
            match tl.reachable_after(node, index) {
                Some(true) => return Err(RunError::Soundness { index, node }),
                Some(false) if !freed[node.index()] => freed[node.index()] = true,
                _ => return Err(RunError::BadFree { index, node }),
            }
            rec.frees.push((index, node));
        }
    }
    rec.wall_clock = start.elapsed();
    Ok(rec)
}
