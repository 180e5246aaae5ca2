//! Published bandwidth and energy figures used as regression targets.
//!
//! Values per interface are in `[conv, sync, ddr]` order. `None` marks an
//! entry reported only as having hit the host-interface ceiling.

use crate::flash::CellKind;
use crate::timing::InterfaceKind;
use crate::workload::Op;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandwidthRef {
    pub cell: CellKind,
    pub op: Op,
    pub channels: u32,
    pub ways: u32,
    /// MB/s.
    pub values: [Option<f64>; 3],
    /// Printed ddr/conv ratio, two decimals.
    pub ratio_ddr_conv: Option<f64>,
}

impl BandwidthRef {
    pub fn value(&self, kind: InterfaceKind) -> Option<f64> {
        self.values[kind.index()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRef {
    pub op: Op,
    pub ways: u32,
    /// nJ/B, SLC, one channel.
    pub values: [f64; 3],
}

impl EnergyRef {
    pub fn value(&self, kind: InterfaceKind) -> f64 {
        self.values[kind.index()]
    }
}

#[allow(clippy::too_many_arguments)]
const fn bw(cell: CellKind, op: Op, channels: u32, ways: u32, c: f64, s: f64, p: f64, ratio: f64) -> BandwidthRef {
    BandwidthRef {
        cell,
        op,
        channels,
        ways,
        values: [Some(c), Some(s), Some(p)],
        ratio_ddr_conv: Some(ratio),
    }
}

use CellKind::{Mlc, Slc};
use Op::{Read, Write};

/// One channel, 1 to 16 ways.
pub const WAY_SWEEP: [BandwidthRef; 20] = [
    bw(Slc, Write, 1, 1, 7.77, 8.38, 8.50, 1.09),
    bw(Slc, Write, 1, 2, 15.22, 16.59, 17.52, 1.15),
    bw(Slc, Write, 1, 4, 28.94, 31.90, 34.30, 1.19),
    bw(Slc, Write, 1, 8, 39.78, 55.36, 63.00, 1.58),
    bw(Slc, Write, 1, 16, 39.76, 60.44, 97.35, 2.45),
    bw(Slc, Read, 1, 1, 27.78, 36.66, 47.89, 1.72),
    bw(Slc, Read, 1, 2, 42.78, 67.16, 70.47, 1.65),
    bw(Slc, Read, 1, 4, 42.75, 67.13, 117.68, 2.75),
    bw(Slc, Read, 1, 8, 42.72, 67.11, 117.64, 2.75),
    bw(Slc, Read, 1, 16, 42.69, 67.11, 117.59, 2.75),
    bw(Mlc, Write, 1, 1, 4.43, 4.55, 4.65, 1.05),
    bw(Mlc, Write, 1, 2, 8.36, 8.85, 9.24, 1.11),
    bw(Mlc, Write, 1, 4, 15.24, 16.75, 18.13, 1.19),
    bw(Mlc, Write, 1, 8, 25.86, 29.72, 34.08, 1.32),
    bw(Mlc, Write, 1, 16, 32.45, 45.99, 57.23, 1.76),
    bw(Mlc, Read, 1, 1, 26.04, 33.58, 42.69, 1.64),
    bw(Mlc, Read, 1, 2, 41.59, 60.41, 77.19, 1.86),
    bw(Mlc, Read, 1, 4, 41.55, 64.76, 101.61, 2.45),
    bw(Mlc, Read, 1, 8, 41.52, 64.75, 110.56, 2.66),
    bw(Mlc, Read, 1, 16, 41.50, 64.73, 110.52, 2.66),
];

/// Sixteen chips split as 1x16, 2x8 and 4x4.
pub const CHANNEL_SWEEP: [BandwidthRef; 12] = [
    bw(Slc, Write, 1, 16, 39.76, 60.44, 97.35, 2.45),
    bw(Slc, Write, 2, 8, 74.07, 101.99, 114.83, 1.55),
    bw(Slc, Write, 4, 4, 103.76, 115.68, 123.52, 1.19),
    bw(Slc, Read, 1, 16, 42.69, 67.11, 117.59, 2.75),
    bw(Slc, Read, 2, 8, 81.44, 126.70, 224.82, 2.76),
    BandwidthRef {
        cell: Slc,
        op: Read,
        channels: 4,
        ways: 4,
        values: [Some(155.35), Some(237.61), None],
        ratio_ddr_conv: None,
    },
    bw(Mlc, Write, 1, 16, 32.45, 45.99, 57.23, 1.76),
    bw(Mlc, Write, 2, 8, 48.72, 56.83, 64.75, 1.33),
    bw(Mlc, Write, 4, 4, 57.46, 63.55, 68.49, 1.19),
    bw(Mlc, Read, 1, 16, 41.50, 64.73, 110.52, 2.66),
    bw(Mlc, Read, 2, 8, 79.32, 122.48, 201.42, 2.54),
    BandwidthRef {
        cell: Mlc,
        op: Read,
        channels: 4,
        ways: 4,
        values: [Some(150.94), Some(230.17), None],
        ratio_ddr_conv: None,
    },
];

const fn en(op: Op, ways: u32, c: f64, s: f64, p: f64) -> EnergyRef {
    EnergyRef {
        op,
        ways,
        values: [c, s, p],
    }
}

/// Controller energy per byte, SLC, one channel.
pub const ENERGY: [EnergyRef; 10] = [
    en(Write, 1, 2.90, 5.01, 5.47),
    en(Write, 2, 1.48, 2.53, 2.65),
    en(Write, 4, 0.78, 1.32, 1.36),
    en(Write, 8, 0.57, 0.76, 0.74),
    en(Write, 16, 0.57, 0.69, 0.48),
    en(Read, 1, 0.81, 1.15, 0.97),
    en(Read, 2, 0.53, 0.63, 0.66),
    en(Read, 4, 0.53, 0.63, 0.40),
    en(Read, 8, 0.53, 0.63, 0.40),
    en(Read, 16, 0.53, 0.63, 0.40),
];

pub fn bandwidth_ref(cell: CellKind, op: Op, channels: u32, ways: u32) -> Option<&'static BandwidthRef> {
    WAY_SWEEP
        .iter()
        .chain(CHANNEL_SWEEP.iter())
        .find(|r| r.cell == cell && r.op == op && r.channels == channels && r.ways == ways)
}

pub fn energy_ref(op: Op, ways: u32) -> Option<&'static EnergyRef> {
    ENERGY.iter().find(|r| r.op == op && r.ways == ways)
}
