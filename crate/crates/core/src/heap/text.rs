//! One op per line: `A`, `I <src> <dst>`, `D <src> <dst>`, `S`. Lines
//! starting with `#` and blank lines are ignored.

use std::fmt::Write as _;

use thiserror::Error;

use super::{MutOp, NodeId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub msg: String,
}

pub fn parse_trace(src: &str) -> Result<Vec<MutOp>, ParseError> {
    let mut out = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: &str| ParseError {
            line: i + 1,
            msg: msg.to_string(),
        };
        let mut parts = line.split_whitespace();
        let tag = parts.next().unwrap();
        let mut id = || -> Result<NodeId, ParseError> {
            let s = parts.next().ok_or_else(|| err("missing node id"))?;
            s.parse::<u32>()
                .map(NodeId)
                .map_err(|_| err(&format!("bad node id `{s}`")))
        };
        let op = match tag {
            "A" => MutOp::Allocate,
            "S" => MutOp::Step,
            "I" => MutOp::Insert(id()?, id()?),
            "D" => MutOp::Delete(id()?, id()?),
            _ => return Err(err(&format!("unknown op `{tag}`"))),
        };
        if parts.next().is_some() {
            return Err(err("trailing tokens"));
        }
        out.push(op);
    }
    Ok(out)
}

pub fn format_trace(trace: &[MutOp]) -> String {
    let mut s = String::with_capacity(trace.len() * 8);
    for op in trace {
        match op {
            MutOp::Allocate => s.push_str("A\n"),
            MutOp::Step => s.push_str("S\n"),
            MutOp::Insert(a, b) => writeln!(s, "I {a} {b}").unwrap(),
            MutOp::Delete(a, b) => writeln!(s, "D {a} {b}").unwrap(),
        }
    }
    s
}
