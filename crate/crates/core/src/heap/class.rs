use std::fmt;
use std::str::FromStr;

use super::{HeapTracker, InvalidOp, MutOp, NodeId};

/// Restriction a trace satisfies on every prefix.
///
/// `SparseAcyclicAllReachable(m)` bounds the out-degree of every non-root
/// node by `m`; a smaller `m` is a stronger promise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TraceClass {
    General,
    AllReachable,
    AcyclicAllReachable,
    SparseAcyclicAllReachable(u32),
}

impl TraceClass {
    /// Whether every trace in `self` is also in `other`.
    pub fn implies(self, other: TraceClass) -> bool {
        use TraceClass::*;
        match (self, other) {
            (_, General) => true,
            (General, _) => false,
            (_, AllReachable) => true,
            (AllReachable, _) => false,
            (_, AcyclicAllReachable) => true,
            (AcyclicAllReachable, _) => false,
            (SparseAcyclicAllReachable(m), SparseAcyclicAllReachable(k)) => m <= k,
        }
    }

    pub fn all_reachable(self) -> bool {
        !matches!(self, TraceClass::General)
    }

    pub fn acyclic(self) -> bool {
        matches!(
            self,
            TraceClass::AcyclicAllReachable | TraceClass::SparseAcyclicAllReachable(_)
        )
    }

    pub fn max_outdegree(self) -> Option<u32> {
        match self {
            TraceClass::SparseAcyclicAllReachable(m) => Some(m),
            _ => None,
        }
    }
}

impl fmt::Display for TraceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceClass::General => f.write_str("general"),
            TraceClass::AllReachable => f.write_str("ar"),
            TraceClass::AcyclicAllReachable => f.write_str("aar"),
            TraceClass::SparseAcyclicAllReachable(m) => write!(f, "saar:{m}"),
        }
    }
}

impl FromStr for TraceClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "general" => Ok(TraceClass::General),
            "ar" => Ok(TraceClass::AllReachable),
            "aar" => Ok(TraceClass::AcyclicAllReachable),
            _ => {
                let m = s
                    .strip_prefix("saar:")
                    .ok_or_else(|| format!("unknown trace class `{s}`"))?;
                let m: u32 = m.parse().map_err(|_| format!("bad outdegree in `{s}`"))?;
                if m == 0 {
                    return Err("outdegree bound must be positive".into());
                }
                Ok(TraceClass::SparseAcyclicAllReachable(m))
            }
        }
    }
}

fn creates_cycle(tracker: &HeapTracker, a: NodeId, b: NodeId) -> bool {
    if a == b {
        return true;
    }
    if a.is_root() || tracker.keeps_id_order(a, b) {
        return false;
    }
    let g = tracker.graph();
    let mut seen = rustc_hash::FxHashSet::default();
    let mut stack = vec![b];
    seen.insert(b);
    while let Some(x) = stack.pop() {
        for (y, _) in g.successors(x) {
            if y == a {
                return true;
            }
            if seen.insert(y) {
                stack.push(y);
            }
        }
    }
    false
}

/// Strongest class every prefix of `trace` satisfies.
///
/// Out-degree excludes the root and is reported as at least 1, so an
/// allocate-only trace classifies as `SparseAcyclicAllReachable(1)`.
pub fn classify_prefix(trace: &[MutOp]) -> Result<TraceClass, (usize, InvalidOp)> {
    let mut t = HeapTracker::new();
    let mut all_reachable = true;
    let mut acyclic = true;
    let mut max_out = 1u32;
    for (i, op) in trace.iter().enumerate() {
        if let MutOp::Insert(a, b) = *op {
            if acyclic && t.validate(op) && creates_cycle(&t, a, b) {
                acyclic = false;
            }
        }
        let obs = t.apply(op).map_err(|e| (i, e))?;
        if !obs.newly_unreachable.is_empty() {
            all_reachable = false;
        }
        if let MutOp::Insert(a, _) = *op {
            if !a.is_root() {
                max_out = max_out.max(t.graph().out_degree(a));
            }
        }
    }
    Ok(if !all_reachable {
        TraceClass::General
    } else if !acyclic {
        TraceClass::AllReachable
    } else {
        TraceClass::SparseAcyclicAllReachable(max_out)
    })
}
