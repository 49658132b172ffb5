//! Baseline collectors.

mod mark_sweep;
mod refcount;
mod stub;

pub use mark_sweep::MarkSweep;
pub use refcount::RefCount;
pub use stub::{Broken, HeadOnly};
