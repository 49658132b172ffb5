//! Primitive-step accounting.
//!
//! Every backend owns a [`StepCounter`]. One step is charged per edge-map
//! read or write, per splay rotation, per node visit and per free-list
//! emission. A deadline turns the counter into the timeout device used by
//! the reachability reductions.

use thiserror::Error;

/// The current backend call ran past its step deadline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("step budget exhausted")]
pub struct TimedOut;

#[derive(Debug, Clone, Default)]
pub struct StepCounter {
    count: u64,
    deadline: Option<u64>,
}

impl StepCounter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Total steps charged so far.
    pub fn count(&self) -> u64 {
        self.count
    }

    /// Charge `n` steps without checking the deadline.
    ///
    /// Hot inner loops (splay rotations) use this and leave the check to
    /// the next safe point.
    #[inline]
    pub fn tick(&mut self, n: u64) {
        self.count += n;
    }

    /// Fails once the count has passed the deadline.
    #[inline]
    pub fn check(&self) -> Result<(), TimedOut> {
        match self.deadline {
            Some(d) if self.count > d => Err(TimedOut),
            _ => Ok(()),
        }
    }

    /// `tick` followed by `check`.
    #[inline]
    pub fn charge(&mut self, n: u64) -> Result<(), TimedOut> {
        self.tick(n);
        self.check()
    }

    /// Allow at most `budget` further steps before calls start failing.
    pub fn arm(&mut self, budget: u64) {
        self.deadline = Some(self.count.saturating_add(budget));
    }

    pub fn disarm(&mut self) {
        self.deadline = None;
    }

    pub fn is_armed(&self) -> bool {
        self.deadline.is_some()
    }
}
