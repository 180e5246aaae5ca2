//! Host request traces.
//!
//! Text format, one request per line:
//!
//! ```text
//! # comment
//! W 0 65536
//! R 65536 65536
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum WorkloadError {
    #[error("chunk size must be positive")]
    ZeroChunk,
    #[error("total {total} is not a positive multiple of chunk {chunk}")]
    NotDivisible { total: u64, chunk: u64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    Read,
    Write,
}

impl Op {
    pub fn symbol(self) -> char {
        match self {
            Op::Read => 'R',
            Op::Write => 'W',
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Op::Read => "read",
            Op::Write => "write",
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Op {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "r" | "read" => Ok(Op::Read),
            "w" | "write" => Ok(Op::Write),
            other => Err(format!("unknown operation `{other}`")),
        }
    }
}

/// One host request: a byte range to read or write.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceRecord {
    pub op: Op,
    pub offset: u64,
    pub length: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    records: Vec<TraceRecord>,
}

impl Trace {
    pub fn new(records: Vec<TraceRecord>) -> Self {
        Trace { records }
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn total_bytes(&self) -> u64 {
        self.records.iter().map(|r| r.length).sum()
    }

    pub fn bytes_for(&self, op: Op) -> u64 {
        self.records.iter().filter(|r| r.op == op).map(|r| r.length).sum()
    }

    /// The single operation of the trace, or `None` when it mixes reads and
    /// writes (or is empty).
    pub fn uniform_op(&self) -> Option<Op> {
        let first = self.records.first()?.op;
        self.records.iter().all(|r| r.op == first).then_some(first)
    }
}

impl FromIterator<TraceRecord> for Trace {
    fn from_iter<I: IntoIterator<Item = TraceRecord>>(iter: I) -> Self {
        Trace::new(iter.into_iter().collect())
    }
}

/// Back-to-back requests of `chunk` bytes covering `[0, total)`.
pub fn gen_sequential(total: u64, chunk: u64, op: Op) -> Result<Trace, WorkloadError> {
    if chunk == 0 {
        return Err(WorkloadError::ZeroChunk);
    }
    if total < chunk || !total.is_multiple_of(chunk) {
        return Err(WorkloadError::NotDivisible { total, chunk });
    }
    Ok((0..total / chunk)
        .map(|i| TraceRecord {
            op,
            offset: i * chunk,
            length: chunk,
        })
        .collect())
}

pub fn parse_trace(text: &str) -> Result<Trace, WorkloadError> {
    let mut records = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| WorkloadError::Parse {
            line: idx + 1,
            message,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(err(format!("expected `R|W <offset> <length>`, got `{line}`")));
        }
        let op = match fields[0] {
            "R" => Op::Read,
            "W" => Op::Write,
            other => return Err(err(format!("unknown operation `{other}`"))),
        };
        let offset: u64 = fields[1]
            .parse()
            .map_err(|_| err(format!("bad offset `{}`", fields[1])))?;
        let length: u64 = fields[2]
            .parse()
            .map_err(|_| err(format!("bad length `{}`", fields[2])))?;
        if length == 0 {
            return Err(err("length must be positive".into()));
        }
        records.push(TraceRecord { op, offset, length });
    }
    Ok(Trace::new(records))
}

pub fn serialize_trace(trace: &Trace) -> String {
    let mut out = String::new();
    for r in trace.records() {
        out.push_str(&format!("{} {} {}\n", r.op.symbol(), r.offset, r.length));
    }
    out
}
