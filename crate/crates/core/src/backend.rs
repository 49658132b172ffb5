//! Named backends.

use std::fmt;
use std::str::FromStr;

use crate::collectors::{Broken, MarkSweep, RefCount};
use crate::gcds::Gcds;
use crate::immediate::Immediate;
use crate::reductions::GcdsFromDrds;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BackendKind {
    Rc,
    Ms,
    Ett { cursor: bool },
    /// Collector built on naive reachability search.
    Drds,
    /// Deliberately unsound, for harness self-tests.
    Broken,
}

impl BackendKind {
    pub const ALL: [BackendKind; 5] = [
        BackendKind::Rc,
        BackendKind::Ms,
        BackendKind::Ett { cursor: true },
        BackendKind::Drds,
        BackendKind::Broken,
    ];

    /// `capacity` bounds the node count where the backend needs one.
    pub fn build(self, capacity: usize) -> Box<dyn Gcds + Send> {
        match self {
            BackendKind::Rc => Box::new(RefCount::new()),
            BackendKind::Ms => Box::new(MarkSweep::new()),
            BackendKind::Ett { cursor } => Box::new(Immediate::with_cursor(cursor)),
            BackendKind::Drds => Box::new(GcdsFromDrds::with_capacity(capacity + 1)),
            BackendKind::Broken => Box::new(Broken::new()),
        }
    }

    /// Frees everything in the op that disconnects it.
    pub fn is_immediate(self) -> bool {
        matches!(self, BackendKind::Ms | BackendKind::Ett { .. } | BackendKind::Drds)
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::Rc => "rc",
            BackendKind::Ms => "ms",
            BackendKind::Ett { cursor: true } => "ett",
            BackendKind::Ett { cursor: false } => "ett-nocursor",
            BackendKind::Drds => "drds",
            BackendKind::Broken => "broken",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown backend `{0}` (expected rc, ms, ett, ett-nocursor, drds or broken)")]
pub struct UnknownBackend(pub String);

impl FromStr for BackendKind {
    type Err = UnknownBackend;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "rc" => BackendKind::Rc,
            "ms" => BackendKind::Ms,
            "ett" => BackendKind::Ett { cursor: true },
            "ett-nocursor" => BackendKind::Ett { cursor: false },
            "drds" => BackendKind::Drds,
            "broken" => BackendKind::Broken,
            _ => return Err(UnknownBackend(s.to_string())),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for k in BackendKind::ALL.into_iter().chain([BackendKind::Ett { cursor: false }]) {
            assert_eq!(k.to_string().parse::<BackendKind>().unwrap(), k);
        }
        assert!("gc".parse::<BackendKind>().is_err());
    }
}
