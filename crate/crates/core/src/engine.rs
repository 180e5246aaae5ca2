//! Discrete-event core.
//!
//! Requests run one at a time: request k+1 is released when every page of
//! request k has finished on its chip. Inside a request each channel walks its
//! page ops in logical-page order. When a channel goes idle it grants, in
//! order of preference:
//!
//! 1. the next in-order op (write transfer, or read command) if its chip is free;
//! 2. a fetched read page waiting to come out, oldest fetch first, lowest way
//!    on ties.
//!
//! Otherwise the channel stalls until a chip event changes the picture.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};
use std::fmt;
use std::io::{self, Write};

use thiserror::Error;

use crate::bus::BusError;
use crate::flash::{FlashError, NandChip};
use crate::topology::{apply_host_cap, decompose_request, PageOp, SsdConfig, TopologyError};
use crate::units::Picos;
use crate::workload::{Op, Trace};

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("trace is empty")]
    EmptyTrace,
    #[error("event queue is empty")]
    EmptyQueue,
    #[error("request {request}: {source}")]
    Request {
        request: usize,
        #[source]
        source: TopologyError,
    },
    #[error(transparent)]
    Flash(#[from] FlashError),
    #[error(transparent)]
    Bus(#[from] BusError),
    #[error("simulation stalled with {pending} page ops outstanding")]
    Stalled { pending: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    /// Releases every page op of a request to the channel queues.
    PageOpStart,
    BusFree,
    ChipFetchDone,
    ChipProgramDone,
    RequestDone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Target {
    pub channel: u32,
    pub way: u32,
    pub request: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub time: Picos,
    pub seq: u64,
    pub kind: EventKind,
    pub target: Target,
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.time, self.seq).cmp(&(other.time, other.seq))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Min-queue on `(time, seq)`; `seq` is assigned on push, so simultaneous
/// events come out in insertion order.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Reverse<Event>>,
    next_seq: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, time: Picos, kind: EventKind, target: Target) -> u64 {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(Event {
            time,
            seq,
            kind,
            target,
        }));
        seq
    }

    pub fn pop_next(&mut self) -> Result<Event, EngineError> {
        self.heap.pop().map(|Reverse(e)| e).ok_or(EngineError::EmptyQueue)
    }

    pub fn peek_time(&self) -> Option<Picos> {
        self.heap.peek().map(|Reverse(e)| e.time)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Stats {
    pub bytes_read: u64,
    pub bytes_written: u64,
    pub elapsed: Picos,
    /// Summed duration of read requests and of write requests. With one
    /// request in flight at a time these partition `elapsed`.
    pub read_time: Picos,
    pub write_time: Picos,
    pub per_channel_busy: Vec<Picos>,
    pub per_chip_busy: Vec<Picos>,
    /// Internal bandwidths in bytes/s, before the host cap.
    pub raw_read_bandwidth: Option<f64>,
    pub raw_write_bandwidth: Option<f64>,
    pub raw_aggregate_bandwidth: f64,
    /// Bandwidths as seen by the host.
    pub read_bandwidth: Option<f64>,
    pub write_bandwidth: Option<f64>,
    pub aggregate_bandwidth: f64,
    pub capped: bool,
}

impl Stats {
    pub fn total_bytes(&self) -> u64 {
        self.bytes_read + self.bytes_written
    }

    pub fn bandwidth_for(&self, op: Op) -> Option<f64> {
        match op {
            Op::Read => self.read_bandwidth,
            Op::Write => self.write_bandwidth,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LogKind {
    RequestStart,
    RequestDone,
    BusGrant,
    BusFree,
    FetchStart,
    FetchDone,
    ProgramStart,
    ProgramDone,
}

impl fmt::Display for LogKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LogKind::RequestStart => "request_start",
            LogKind::RequestDone => "request_done",
            LogKind::BusGrant => "bus_grant",
            LogKind::BusFree => "bus_free",
            LogKind::FetchStart => "fetch_start",
            LogKind::FetchDone => "fetch_done",
            LogKind::ProgramStart => "program_start",
            LogKind::ProgramDone => "program_done",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LogEntry {
    pub time: Picos,
    pub kind: LogKind,
    pub channel: Option<u32>,
    pub way: Option<u32>,
    pub request: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    pub entries: Vec<LogEntry>,
}

impl EventLog {
    /// Tab-separated `time_ps kind channel way request`, `-` where a column
    /// does not apply.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "time_ps\tkind\tchannel\tway\trequest")?;
        let opt = |v: Option<u32>| v.map_or_else(|| "-".to_string(), |v| v.to_string());
        for e in &self.entries {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                e.time.as_ps(),
                e.kind,
                opt(e.channel),
                opt(e.way),
                e.request
            )?;
        }
        Ok(())
    }

    /// Checks that no channel carries two transfers and no chip runs two
    /// cell operations at once. Returns a description of the first
    /// violation.
    pub fn check_exclusivity(&self) -> Result<(), String> {
        use std::collections::HashMap;
        let mut channel_open: HashMap<u32, Picos> = HashMap::new();
        let mut chip_open: HashMap<(u32, u32), (LogKind, Picos)> = HashMap::new();
        for e in &self.entries {
            match e.kind {
                LogKind::BusGrant | LogKind::BusFree => {
                    let ch = e.channel.ok_or("bus entry without channel")?;
                    if e.kind == LogKind::BusGrant {
                        if let Some(since) = channel_open.insert(ch, e.time) {
                            return Err(format!(
                                "channel {ch} granted at {} while busy since {since}",
                                e.time
                            ));
                        }
                    } else if channel_open.remove(&ch).is_none() {
                        return Err(format!("channel {ch} freed at {} without a grant", e.time));
                    }
                }
                LogKind::FetchStart | LogKind::ProgramStart => {
                    let key = (
                        e.channel.ok_or("chip entry without channel")?,
                        e.way.ok_or("chip entry without way")?,
                    );
                    if let Some((kind, since)) = chip_open.insert(key, (e.kind, e.time)) {
                        return Err(format!(
                            "chip {key:?} started {} at {} during {kind} since {since}",
                            e.kind, e.time
                        ));
                    }
                }
                LogKind::FetchDone | LogKind::ProgramDone => {
                    let key = (
                        e.channel.ok_or("chip entry without channel")?,
                        e.way.ok_or("chip entry without way")?,
                    );
                    let expected = if e.kind == LogKind::FetchDone {
                        LogKind::FetchStart
                    } else {
                        LogKind::ProgramStart
                    };
                    match chip_open.remove(&key) {
                        Some((kind, _)) if kind == expected => {}
                        other => {
                            return Err(format!(
                                "chip {key:?} reported {} at {} with open op {other:?}",
                                e.kind, e.time
                            ))
                        }
                    }
                }
                LogKind::RequestStart | LogKind::RequestDone => {}
            }
        }
        if let Some((ch, since)) = channel_open.iter().next() {
            return Err(format!("channel {ch} still busy since {since} at end of log"));
        }
        if let Some((key, (kind, since))) = chip_open.iter().next() {
            return Err(format!("chip {key:?} still in {kind} since {since} at end of log"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TransferKind {
    WriteData,
    ReadCommand,
    ReadData,
}

#[derive(Debug, Clone, Copy)]
struct Transfer {
    kind: TransferKind,
    op: usize,
    start: Picos,
}

#[derive(Debug, Default)]
struct Channel {
    queue: VecDeque<usize>,
    /// Fetched pages waiting for the bus: (fetch done, way, op).
    ready: Vec<(Picos, u32, usize)>,
    in_flight: Option<Transfer>,
    busy: Picos,
}

struct Engine<'a> {
    config: &'a SsdConfig,
    write_time: Picos,
    read_cmd_time: Picos,
    read_data_time: Picos,
    requests: Vec<Vec<PageOp>>,
    current: usize,
    outstanding: usize,
    request_start: Picos,
    channels: Vec<Channel>,
    chips: Vec<NandChip>,
    /// Chip is tied to an op between its first bus grant and completion.
    reserved: Vec<bool>,
    chip_op: Vec<Option<usize>>,
    queue: EventQueue,
    log: Option<EventLog>,
    stats: Stats,
}

impl Engine<'_> {
    fn log(&mut self, time: Picos, kind: LogKind, channel: Option<u32>, way: Option<u32>) {
        let request = self.current;
        if let Some(log) = self.log.as_mut() {
            log.entries.push(LogEntry {
                time,
                kind,
                channel,
                way,
                request,
            });
        }
    }

    fn op(&self, idx: usize) -> PageOp {
        self.requests[self.current][idx]
    }

    fn handle(&mut self, ev: Event) -> Result<(), EngineError> {
        let now = ev.time;
        let Target { channel, way, request } = ev.target;
        match ev.kind {
            EventKind::PageOpStart => {
                self.current = request;
                self.request_start = now;
                self.log(now, LogKind::RequestStart, None, None);
                let n = self.requests[request].len();
                self.outstanding = n;
                for idx in 0..n {
                    let ch = self.requests[request][idx].location.channel as usize;
                    self.channels[ch].queue.push_back(idx);
                }
            }
            EventKind::BusFree => {
                let ch = channel as usize;
                let t = self.channels[ch]
                    .in_flight
                    .take()
                    .expect("bus free without a transfer");
                self.channels[ch].busy += now - t.start;
                self.log(now, LogKind::BusFree, Some(channel), Some(way));
                let op = self.op(t.op);
                let chip = self.config.chip_index(op.location);
                let target = Target {
                    channel,
                    way,
                    request: self.current,
                };
                match t.kind {
                    TransferKind::WriteData => {
                        self.chips[chip].load_register(op.location.page, now)?;
                        let done = self.chips[chip].issue_program(now)?;
                        self.reserved[chip] = false;
                        self.chip_op[chip] = Some(t.op);
                        self.log(now, LogKind::ProgramStart, Some(channel), Some(way));
                        self.queue.push(done, EventKind::ChipProgramDone, target);
                    }
                    TransferKind::ReadCommand => {
                        let done = self.chips[chip].issue_fetch(op.location.page, now)?;
                        self.chip_op[chip] = Some(t.op);
                        self.log(now, LogKind::FetchStart, Some(channel), Some(way));
                        self.queue.push(done, EventKind::ChipFetchDone, target);
                    }
                    TransferKind::ReadData => {
                        self.chips[chip].drain_register(now)?;
                        self.reserved[chip] = false;
                        self.complete(now);
                    }
                }
            }
            EventKind::ChipFetchDone => {
                let chip = channel as usize * self.config.n_ways() as usize + way as usize;
                self.chips[chip].settle(now);
                let op = self.chip_op[chip].take().expect("fetch done without an op");
                self.log(now, LogKind::FetchDone, Some(channel), Some(way));
                self.channels[channel as usize].ready.push((now, way, op));
            }
            EventKind::ChipProgramDone => {
                let chip = channel as usize * self.config.n_ways() as usize + way as usize;
                self.chips[chip].settle(now);
                self.chip_op[chip] = None;
                self.log(now, LogKind::ProgramDone, Some(channel), Some(way));
                self.complete(now);
            }
            EventKind::RequestDone => {
                self.log(now, LogKind::RequestDone, None, None);
                let duration = now - self.request_start;
                match self.requests[request][0].op {
                    Op::Read => self.stats.read_time += duration,
                    Op::Write => self.stats.write_time += duration,
                }
                if request + 1 < self.requests.len() {
                    self.queue.push(
                        now,
                        EventKind::PageOpStart,
                        Target {
                            request: request + 1,
                            ..Target::default()
                        },
                    );
                }
            }
        }
        Ok(())
    }

    fn complete(&mut self, now: Picos) {
        self.outstanding -= 1;
        if self.outstanding == 0 {
            self.queue.push(
                now,
                EventKind::RequestDone,
                Target {
                    request: self.current,
                    ..Target::default()
                },
            );
        }
    }

    fn dispatch(&mut self, ch: usize, now: Picos) {
        if self.channels[ch].in_flight.is_some() {
            return;
        }
        let head = self.channels[ch].queue.front().copied().filter(|&idx| {
            let chip = self.config.chip_index(self.op(idx).location);
            !self.reserved[chip] && self.chips[chip].is_available(now)
        });
        let (kind, idx, duration) = if let Some(idx) = head {
            self.channels[ch].queue.pop_front();
            let chip = self.config.chip_index(self.op(idx).location);
            self.reserved[chip] = true;
            match self.op(idx).op {
                Op::Write => (TransferKind::WriteData, idx, self.write_time),
                Op::Read => (TransferKind::ReadCommand, idx, self.read_cmd_time),
            }
        } else {
            let ready = &mut self.channels[ch].ready;
            let Some(pos) = (0..ready.len()).min_by_key(|&i| (ready[i].0, ready[i].1)) else {
                return;
            };
            let (_, _, idx) = ready.swap_remove(pos);
            (TransferKind::ReadData, idx, self.read_data_time)
        };
        let way = self.op(idx).location.way;
        self.channels[ch].in_flight = Some(Transfer {
            kind,
            op: idx,
            start: now,
        });
        self.log(now, LogKind::BusGrant, Some(ch as u32), Some(way));
        self.queue.push(
            now + duration,
            EventKind::BusFree,
            Target {
                channel: ch as u32,
                way,
                request: self.current,
            },
        );
    }

    fn run(mut self) -> Result<(Stats, Option<EventLog>), EngineError> {
        self.queue.push(Picos::ZERO, EventKind::PageOpStart, Target::default());
        let mut now = Picos::ZERO;
        while let Some(t) = self.queue.peek_time() {
            now = t;
            while self.queue.peek_time() == Some(t) {
                let ev = self.queue.pop_next()?;
                self.handle(ev)?;
            }
            for ch in 0..self.channels.len() {
                self.dispatch(ch, now);
            }
        }
        if self.outstanding != 0 || self.current + 1 != self.requests.len() {
            return Err(EngineError::Stalled {
                pending: self.outstanding,
            });
        }
        let mut stats = self.stats;
        stats.elapsed = now;
        stats.per_channel_busy = self.channels.iter().map(|c| c.busy).collect();
        stats.per_chip_busy = self.chips.iter().map(|c| c.busy_total()).collect();
        let rate = |bytes: u64, time: Picos| (bytes > 0).then(|| bytes as f64 / time.as_secs());
        stats.raw_read_bandwidth = rate(stats.bytes_read, stats.read_time);
        stats.raw_write_bandwidth = rate(stats.bytes_written, stats.write_time);
        stats.raw_aggregate_bandwidth = stats.total_bytes() as f64 / now.as_secs();
        stats.read_bandwidth = stats.raw_read_bandwidth;
        stats.write_bandwidth = stats.raw_write_bandwidth;
        stats.aggregate_bandwidth = stats.raw_aggregate_bandwidth;
        Ok((stats, self.log))
    }
}

fn execute(config: &SsdConfig, trace: &Trace, logged: bool) -> Result<(Stats, Option<EventLog>), EngineError> {
    if trace.is_empty() {
        return Err(EngineError::EmptyTrace);
    }
    let requests = trace
        .records()
        .iter()
        .enumerate()
        .map(|(request, r)| decompose_request(config, r).map_err(|source| EngineError::Request { request, source }))
        .collect::<Result<Vec<_>, _>>()?;
    let page = config.page_size();
    let protocol = &config.protocol;
    let stats = Stats {
        bytes_read: trace.bytes_for(Op::Read),
        bytes_written: trace.bytes_for(Op::Write),
        ..Stats::default()
    };
    let chips = config.total_chips();
    let engine = Engine {
        config,
        write_time: protocol.page_write_bus_time(page)?,
        read_cmd_time: protocol.read_command_time(),
        read_data_time: protocol.read_data_time(page)?,
        requests,
        current: 0,
        outstanding: 0,
        request_start: Picos::ZERO,
        channels: (0..config.n_channels()).map(|_| Channel::default()).collect(),
        chips: vec![NandChip::new(config.profile.clone()); chips],
        reserved: vec![false; chips],
        chip_op: vec![None; chips],
        queue: EventQueue::new(),
        log: logged.then(EventLog::default),
        stats,
    };
    engine.run()
}

/// Simulates `trace` and reports internal (uncapped) bandwidth.
pub fn run(config: &SsdConfig, trace: &Trace) -> Result<Stats, EngineError> {
    execute(config, trace, false).map(|(s, _)| s)
}

/// Like [`run`], also recording every bus and chip transition.
pub fn run_logged(config: &SsdConfig, trace: &Trace) -> Result<(Stats, EventLog), EngineError> {
    execute(config, trace, true).map(|(s, log)| (s, log.unwrap_or_default()))
}

/// [`run`] followed by the host-interface cap.
pub fn simulate(config: &SsdConfig, trace: &Trace) -> Result<Stats, EngineError> {
    run(config, trace).map(|s| apply_host_cap(s, config))
}
