//! Reachability-based garbage collection laboratory.
//!
//! A [`Gcds`](gcds::Gcds) observes mutator events on a heap graph and
//! reports unreachable nodes. This crate provides the ground-truth heap model
//! and oracle, baseline collectors, an Euler-tour-tree collector that frees
//! garbage immediately, reductions between collectors and dynamic
//! reachability, and the workloads and harnesses used to measure them.

pub mod backend;
pub mod clock;
pub mod collectors;
pub mod edges;
pub mod ett;
pub mod fit;
pub mod fuzz;
pub mod gcds;
pub mod heap;
pub mod immediate;
pub mod journal;
pub mod metrics;
pub mod reductions;
pub mod workloads;

pub use gcds::{Gcds, OpError};
pub use heap::{MutOp, NodeId};
