//! Sweeps over cells, operations, shapes and interfaces, and comparison of
//! their results against the reference tables.

use std::collections::HashMap;
use std::fmt;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, Settings};
use crate::energy::{EnergyError, PowerModel};
use crate::engine::{simulate, EngineError};
use crate::flash::CellKind;
use crate::reference::{bandwidth_ref, BandwidthRef, CHANNEL_SWEEP, ENERGY, WAY_SWEEP};
use crate::timing::InterfaceKind;
use crate::units::MB;
use crate::workload::{gen_sequential, Op, WorkloadError};

pub const CSV_HEADER: &str = "cell,mode,channels,ways,interface,bandwidth_mb_s,energy_nj_b,capped";

/// 64 MB per phase in 64 KiB requests.
pub const DEFAULT_TOTAL_BYTES: u64 = 64 * 1024 * 1024;
pub const DEFAULT_CHUNK_BYTES: u64 = 64 * 1024;

pub const WAY_COUNTS: [u32; 5] = [1, 2, 4, 8, 16];
pub const CHANNEL_SHAPES: [(u32, u32); 3] = [(1, 16), (2, 8), (4, 4)];

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("plan has no {0}")]
    EmptyPlan(&'static str),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error("{label}: {source}")]
    Config {
        label: String,
        #[source]
        source: ConfigError,
    },
    #[error("{label}: {source}")]
    Engine {
        label: String,
        #[source]
        source: EngineError,
    },
    #[error("{label}: {source}")]
    Energy {
        label: String,
        #[source]
        source: EnergyError,
    },
    #[error("results line {line}: {message}")]
    Csv { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    /// `(channels, ways)` pairs.
    pub shapes: Vec<(u32, u32)>,
    pub interfaces: Vec<InterfaceKind>,
    pub cells: Vec<CellKind>,
    pub modes: Vec<Op>,
    #[serde(default = "default_total")]
    pub total_bytes: u64,
    #[serde(default = "default_chunk")]
    pub chunk_bytes: u64,
}

fn default_total() -> u64 {
    DEFAULT_TOTAL_BYTES
}

fn default_chunk() -> u64 {
    DEFAULT_CHUNK_BYTES
}

impl ExperimentPlan {
    fn preset(shapes: Vec<(u32, u32)>) -> Self {
        ExperimentPlan {
            shapes,
            interfaces: InterfaceKind::ALL.to_vec(),
            cells: CellKind::ALL.to_vec(),
            modes: vec![Op::Write, Op::Read],
            total_bytes: DEFAULT_TOTAL_BYTES,
            chunk_bytes: DEFAULT_CHUNK_BYTES,
        }
    }

    /// One channel, 1 to 16 ways.
    pub fn way_sweep() -> Self {
        Self::preset(WAY_COUNTS.iter().map(|&w| (1, w)).collect())
    }

    /// Sixteen chips as 1x16, 2x8, 4x4.
    pub fn channel_sweep() -> Self {
        Self::preset(CHANNEL_SHAPES.to_vec())
    }

    /// Every shape that appears in the reference tables.
    pub fn reference() -> Self {
        let mut shapes: Vec<(u32, u32)> = WAY_COUNTS.iter().map(|&w| (1, w)).collect();
        shapes.extend(CHANNEL_SHAPES.iter().filter(|s| s.0 > 1));
        Self::preset(shapes)
    }

    pub fn single(cell: CellKind, mode: Op, channels: u32, ways: u32, interface: InterfaceKind) -> Self {
        ExperimentPlan {
            shapes: vec![(channels, ways)],
            interfaces: vec![interface],
            cells: vec![cell],
            modes: vec![mode],
            total_bytes: DEFAULT_TOTAL_BYTES,
            chunk_bytes: DEFAULT_CHUNK_BYTES,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.shapes.is_empty() {
            return Err(ExperimentError::EmptyPlan("shapes"));
        }
        if self.interfaces.is_empty() {
            return Err(ExperimentError::EmptyPlan("interfaces"));
        }
        if self.cells.is_empty() {
            return Err(ExperimentError::EmptyPlan("cells"));
        }
        if self.modes.is_empty() {
            return Err(ExperimentError::EmptyPlan("modes"));
        }
        gen_sequential(self.total_bytes, self.chunk_bytes, Op::Read)?;
        Ok(())
    }

    /// Run keys in output order: cell, mode, shape, interface.
    pub fn keys(&self) -> Vec<RunKey> {
        let mut keys = Vec::new();
        for &cell in &self.cells {
            for &mode in &self.modes {
                for &(channels, ways) in &self.shapes {
                    for &interface in &self.interfaces {
                        keys.push(RunKey {
                            cell,
                            mode,
                            channels,
                            ways,
                            interface,
                        });
                    }
                }
            }
        }
        keys
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RunKey {
    pub cell: CellKind,
    pub mode: Op,
    pub channels: u32,
    pub ways: u32,
    pub interface: InterfaceKind,
}

impl fmt::Display for RunKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {}ch/{}way {}",
            self.cell, self.mode, self.channels, self.ways, self.interface
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub key: RunKey,
    /// Host-visible MB/s.
    pub bandwidth_mb_s: f64,
    /// MB/s before the host cap; equals `bandwidth_mb_s` for rows read from CSV.
    pub raw_bandwidth_mb_s: f64,
    pub energy_nj_b: f64,
    pub capped: bool,
}

pub fn run_one(settings: &Settings, power: &PowerModel, key: RunKey, total: u64, chunk: u64) -> Result<ResultRow, ExperimentError> {
    let label = key.to_string();
    let config = settings
        .ssd_config_for(key.cell, key.interface, key.channels, key.ways)
        .map_err(|source| ExperimentError::Config {
            label: label.clone(),
            source,
        })?;
    let trace = gen_sequential(total, chunk, key.mode)?;
    let stats = simulate(&config, &trace).map_err(|source| ExperimentError::Engine {
        label: label.clone(),
        source,
    })?;
    let bandwidth = stats.bandwidth_for(key.mode).expect("uniform trace has a phase bandwidth");
    let raw = match key.mode {
        Op::Read => stats.raw_read_bandwidth,
        Op::Write => stats.raw_write_bandwidth,
    }
    .expect("uniform trace has a phase bandwidth");
    let energy = power
        .energy_per_byte(key.interface, bandwidth)
        .map_err(|source| ExperimentError::Energy { label, source })?;
    Ok(ResultRow {
        key,
        bandwidth_mb_s: bandwidth / MB,
        raw_bandwidth_mb_s: raw / MB,
        energy_nj_b: energy,
        capped: stats.capped,
    })
}

/// Runs every key of the plan in parallel. Rows come back in plan order.
pub fn run_plan(plan: &ExperimentPlan, settings: &Settings) -> Result<Vec<ResultRow>, ExperimentError> {
    plan.validate()?;
    let power = settings.power_model().map_err(|source| ExperimentError::Config {
        label: "power model".into(),
        source,
    })?;
    plan.keys()
        .into_par_iter()
        .map(|key| run_one(settings, &power, key, plan.total_bytes, plan.chunk_bytes))
        .collect()
}

pub fn write_csv<W: Write>(rows: &[ResultRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{:.4},{:.4},{}",
            r.key.cell.key(),
            r.key.mode.key(),
            r.key.channels,
            r.key.ways,
            r.key.interface.key(),
            r.bandwidth_mb_s,
            r.energy_nj_b,
            r.capped
        )?;
    }
    Ok(())
}

pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>, ExperimentError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => {
            return Err(ExperimentError::Csv {
                line: 1,
                message: format!("expected header `{CSV_HEADER}`"),
            })
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| ExperimentError::Csv { line: idx + 1, message };
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 8 {
            return Err(err(format!("expected 8 fields, got {}", f.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad number `{s}`")));
        let int = |s: &str| s.parse::<u32>().map_err(|_| err(format!("bad count `{s}`")));
        let bandwidth = num(f[5])?;
        rows.push(ResultRow {
            key: RunKey {
                cell: f[0].parse().map_err(err)?,
                mode: f[1].parse().map_err(err)?,
                channels: int(f[2])?,
                ways: int(f[3])?,
                interface: f[4].parse().map_err(err)?,
            },
            bandwidth_mb_s: bandwidth,
            raw_bandwidth_mb_s: bandwidth,
            energy_nj_b: num(f[6])?,
            capped: f[7].parse().map_err(|_| err(format!("bad flag `{}`", f[7])))?,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellError {
    pub key: RunKey,
    pub simulated: f64,
    pub reference: f64,
    pub relative: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub tolerance: f64,
    pub bandwidth: Vec<CellError>,
    /// ddr/conv ratio against the printed ratio column.
    pub ratios: Vec<CellError>,
    /// SLC one-channel energy; reported, not part of the verdict.
    pub energy: Vec<CellError>,
    pub missing: Vec<RunKey>,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn out_of_tolerance(&self) -> Vec<&CellError> {
        self.bandwidth
            .iter()
            .filter(|e| !(e.relative.abs() <= self.tolerance))
            .collect()
    }

    pub fn passed(&self) -> bool {
        self.missing.is_empty() && self.out_of_tolerance().is_empty() && self.checks.iter().all(|c| c.passed)
    }

    pub fn worst(errors: &[CellError], n: usize) -> Vec<&CellError> {
        let mut v: Vec<&CellError> = errors.iter().collect();
        v.sort_by(|a, b| b.relative.abs().total_cmp(&a.relative.abs()));
        v.truncate(n);
        v
    }

    pub fn max_abs(errors: &[CellError]) -> f64 {
        errors.iter().map(|e| e.relative.abs()).fold(0.0, f64::max)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let line = |f: &mut fmt::Formatter<'_>, e: &CellError| {
            writeln!(
                f,
                "  {:<28} sim {:>9.3}  ref {:>9.3}  {:+6.1}%",
                e.key.to_string(),
                e.simulated,
                e.reference,
                e.relative * 100.0
            )
        };
        writeln!(
            f,
            "bandwidth: {} entries, worst {:.1}%, {} outside +/-{:.0}%",
            self.bandwidth.len(),
            Self::max_abs(&self.bandwidth) * 100.0,
            self.out_of_tolerance().len(),
            self.tolerance * 100.0
        )?;
        for e in Self::worst(&self.bandwidth, 5) {
            line(f, e)?;
        }
        writeln!(
            f,
            "ddr/conv ratio: {} entries, worst {:.1}%",
            self.ratios.len(),
            Self::max_abs(&self.ratios) * 100.0
        )?;
        for e in Self::worst(&self.ratios, 3) {
            line(f, e)?;
        }
        if !self.energy.is_empty() {
            writeln!(
                f,
                "energy (informational): {} entries, worst {:.1}%",
                self.energy.len(),
                Self::max_abs(&self.energy) * 100.0
            )?;
            for e in Self::worst(&self.energy, 3) {
                line(f, e)?;
            }
        }
        for k in &self.missing {
            writeln!(f, "missing: {k}")?;
        }
        for c in &self.checks {
            writeln!(f, "{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail)?;
        }
        write!(f, "{}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

fn reference_rows() -> Vec<&'static BandwidthRef> {
    let mut out: Vec<&BandwidthRef> = WAY_SWEEP.iter().collect();
    out.extend(CHANNEL_SWEEP.iter().filter(|r| r.channels > 1));
    out
}

fn rel(sim: f64, reference: f64) -> f64 {
    sim / reference - 1.0
}

pub fn compare_tables(rows: &[ResultRow], tolerance: f64) -> Report {
    let index: HashMap<RunKey, &ResultRow> = rows.iter().map(|r| (r.key, r)).collect();
    let key = |r: &BandwidthRef, interface| RunKey {
        cell: r.cell,
        mode: r.op,
        channels: r.channels,
        ways: r.ways,
        interface,
    };
    let mut report = Report {
        tolerance,
        bandwidth: Vec::new(),
        ratios: Vec::new(),
        energy: Vec::new(),
        missing: Vec::new(),
        checks: Vec::new(),
    };

    for r in reference_rows() {
        for kind in InterfaceKind::ALL {
            let k = key(r, kind);
            let Some(row) = index.get(&k) else {
                report.missing.push(k);
                continue;
            };
            if let Some(reference) = r.value(kind) {
                report.bandwidth.push(CellError {
                    key: k,
                    simulated: row.bandwidth_mb_s,
                    reference,
                    relative: rel(row.bandwidth_mb_s, reference),
                });
            }
        }
        if let (Some(ratio), Some(c), Some(p)) = (
            r.ratio_ddr_conv,
            index.get(&key(r, InterfaceKind::Conventional)),
            index.get(&key(r, InterfaceKind::Ddr)),
        ) {
            let sim = p.bandwidth_mb_s / c.bandwidth_mb_s;
            report.ratios.push(CellError {
                key: key(r, InterfaceKind::Ddr),
                simulated: sim,
                reference: ratio,
                relative: rel(sim, ratio),
            });
        }
    }

    for e in &ENERGY {
        for kind in InterfaceKind::ALL {
            let k = RunKey {
                cell: CellKind::Slc,
                mode: e.op,
                channels: 1,
                ways: e.ways,
                interface: kind,
            };
            if let Some(row) = index.get(&k) {
                report.energy.push(CellError {
                    key: k,
                    simulated: row.energy_nj_b,
                    reference: e.value(kind),
                    relative: rel(row.energy_nj_b, e.value(kind)),
                });
            }
        }
    }

    report.checks = property_checks(&index);
    report
}

fn property_checks(index: &HashMap<RunKey, &ResultRow>) -> Vec<Check> {
    let get = |cell, mode, channels, ways, interface| {
        index
            .get(&RunKey {
                cell,
                mode,
                channels,
                ways,
                interface,
            })
            .map(|r| r.raw_bandwidth_mb_s)
    };
    let slc = |mode, ways, kind| get(CellKind::Slc, mode, 1, ways, kind);
    let mut checks = Vec::new();
    let mut push = |name: &str, values: Option<(f64, f64)>, test: &dyn Fn(f64) -> bool, what: &str| {
        let (passed, detail) = match values {
            Some((hi, lo)) => {
                let ratio = hi / lo;
                (test(ratio), format!("{what} = {ratio:.4}"))
            }
            None => (false, "runs missing".to_string()),
        };
        checks.push(Check {
            name: name.to_string(),
            passed,
            detail,
        });
    };
    use InterfaceKind::{Conventional as C, Ddr as P};
    let pair = |a: Option<f64>, b: Option<f64>| a.zip(b);
    let flat = |r: f64| (r - 1.0).abs() <= 0.01;
    let gains = |r: f64| r > 1.01;

    push("SLC conv write flat 8->16 way", pair(slc(Op::Write, 16, C), slc(Op::Write, 8, C)), &flat, "16/8");
    push("SLC conv write gains 4->8 way", pair(slc(Op::Write, 8, C), slc(Op::Write, 4, C)), &gains, "8/4");
    push(
        "SLC ddr write gains >1.4x 8->16 way",
        pair(slc(Op::Write, 16, P), slc(Op::Write, 8, P)),
        &|r| r > 1.4,
        "16/8",
    );
    push("SLC conv read flat 2->4 way", pair(slc(Op::Read, 4, C), slc(Op::Read, 2, C)), &flat, "4/2");
    push("SLC conv read gains 1->2 way", pair(slc(Op::Read, 2, C), slc(Op::Read, 1, C)), &gains, "2/1");
    push("SLC ddr read flat 4->8 way", pair(slc(Op::Read, 8, P), slc(Op::Read, 4, P)), &flat, "8/4");
    push("SLC ddr read gains 2->4 way", pair(slc(Op::Read, 4, P), slc(Op::Read, 2, P)), &gains, "4/2");

    for cell in CellKind::ALL {
        let k = RunKey {
            cell,
            mode: Op::Read,
            channels: 4,
            ways: 4,
            interface: P,
        };
        let (passed, detail) = match index.get(&k) {
            Some(r) => (
                r.capped,
                format!("{:.2} MB/s (raw {:.2}), capped = {}", r.bandwidth_mb_s, r.raw_bandwidth_mb_s, r.capped),
            ),
            None => (false, "run missing".to_string()),
        };
        checks.push(Check {
            name: format!("{cell} 4ch/4way ddr read hits host cap"),
            passed,
            detail,
        });
    }

    let mut disorder = Vec::new();
    for (k, r) in index.iter().filter(|(k, _)| k.interface == InterfaceKind::SyncOnly) {
        let conv = index.get(&RunKey { interface: C, ..*k });
        let ddr = index.get(&RunKey { interface: P, ..*k });
        if let (Some(c), Some(d)) = (conv, ddr) {
            if !(c.raw_bandwidth_mb_s <= r.raw_bandwidth_mb_s && r.raw_bandwidth_mb_s <= d.raw_bandwidth_mb_s) {
                disorder.push(RunKey { interface: C, ..*k }.to_string());
            }
        }
    }
    disorder.sort();
    checks.push(Check {
        name: "conv <= sync <= ddr everywhere".into(),
        passed: disorder.is_empty(),
        detail: if disorder.is_empty() {
            "holds".into()
        } else {
            format!("violated at {}", disorder.join("; "))
        },
    });
    checks
}

/// Reference lookup for a single run, if the tables cover it.
pub fn reference_for(key: &RunKey) -> Option<f64> {
    bandwidth_ref(key.cell, key.mode, key.channels, key.ways).and_then(|r| r.value(key.interface))
}
