//! Channel timing: command, address and data phases of one page transfer.

use thiserror::Error;

use crate::timing::{per_byte_cycle, ClockSpec};
use crate::units::{ExactPs, Picos, PS_PER_SEC};

#[derive(Debug, Error, PartialEq)]
pub enum BusError {
    #[error("page size must be positive")]
    EmptyPage,
}

pub const DEFAULT_CMD_CYCLES: u32 = 2;
pub const DEFAULT_ADDR_CYCLES: u32 = 5;

/// Controller-side cost (ECC, FTL bookkeeping, DMA setup) charged per page
/// while the channel is held: 2 us per KiB of page.
pub fn default_page_overhead(page_size: u32) -> Picos {
    Picos(page_size as u64 * 2_000_000 / 1024)
}

/// A resolved channel protocol. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct BusProtocol {
    pub clock: ClockSpec,
    pub cmd_cycles_write: u32,
    pub cmd_cycles_read: u32,
    pub addr_cycles: u32,
    pub controller_page_overhead: Picos,
}

impl BusProtocol {
    pub fn new(clock: ClockSpec, controller_page_overhead: Picos) -> Self {
        BusProtocol {
            clock,
            cmd_cycles_write: DEFAULT_CMD_CYCLES,
            cmd_cycles_read: DEFAULT_CMD_CYCLES,
            addr_cycles: DEFAULT_ADDR_CYCLES,
            controller_page_overhead,
        }
    }

    pub fn with_cycles(mut self, cmd_cycles: u32, addr_cycles: u32) -> Self {
        self.cmd_cycles_write = cmd_cycles;
        self.cmd_cycles_read = cmd_cycles;
        self.addr_cycles = addr_cycles;
        self
    }

    pub fn per_byte(&self) -> ExactPs {
        per_byte_cycle(&self.clock)
    }

    fn data_phase(&self, page_size: u32) -> Result<ExactPs, BusError> {
        if page_size == 0 {
            return Err(BusError::EmptyPage);
        }
        Ok(self.per_byte() * ExactPs::from_integer(page_size as i64)
            + self.controller_page_overhead.exact())
    }

    fn cycles(&self, n: u32) -> ExactPs {
        self.clock.t_p() * ExactPs::from_integer(n as i64)
    }

    /// Channel occupancy for writing one page: command and address cycles,
    /// data shifted in one byte per strobe edge, controller overhead.
    pub fn page_write_bus_time(&self, page_size: u32) -> Result<Picos, BusError> {
        let exact = self.cycles(self.cmd_cycles_write + self.addr_cycles) + self.data_phase(page_size)?;
        Ok(round(exact))
    }

    /// Channel occupancy for reading one page, excluding the chip's fetch.
    pub fn page_read_bus_time(&self, page_size: u32) -> Result<Picos, BusError> {
        let exact = self.cycles(self.cmd_cycles_read + self.addr_cycles) + self.data_phase(page_size)?;
        Ok(round(exact))
    }

    /// Command/address part of a page read, issued before the fetch.
    pub fn read_command_time(&self) -> Picos {
        round(self.cycles(self.cmd_cycles_read + self.addr_cycles))
    }

    /// Data part of a page read, after the fetch. Together with
    /// [`read_command_time`](Self::read_command_time) it sums to
    /// [`page_read_bus_time`](Self::page_read_bus_time) exactly.
    pub fn read_data_time(&self, page_size: u32) -> Result<Picos, BusError> {
        Ok(self.page_read_bus_time(page_size)? - self.read_command_time())
    }

    /// Upper bound on data throughput of one channel, in bytes per second.
    pub fn channel_peak_rate(&self) -> f64 {
        let per_byte = self.per_byte();
        PS_PER_SEC as f64 * *per_byte.denom() as f64 / *per_byte.numer() as f64
    }
}

fn round(exact: ExactPs) -> Picos {
    Picos::from_exact(exact).expect("bus times are non-negative")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timing::{InterfaceKind, TimingParams};

    fn proto(kind: InterfaceKind, cmd: u32, addr: u32, overhead: Picos) -> BusProtocol {
        let clock = ClockSpec::resolve(kind, &TimingParams::measured()).unwrap();
        BusProtocol::new(clock, overhead).with_cycles(cmd, addr)
    }

    #[test]
    fn write_bus_time_examples() {
        let conv = proto(InterfaceKind::Conventional, 2, 5, Picos::ZERO);
        assert_eq!(conv.page_write_bus_time(2048), Ok(Picos::from_ns(41_100)));

        let ddr = proto(InterfaceKind::Ddr, 0, 0, Picos::ZERO);
        let t = ddr.page_write_bus_time(2048).unwrap();
        assert!((t.as_ns() - 12_337.0).abs() < 1.0, "{t}");

        assert_eq!(conv.page_write_bus_time(0), Err(BusError::EmptyPage));
    }

    #[test]
    fn read_bus_time_examples() {
        let six_us = Picos::from_us(6);
        let conv = proto(InterfaceKind::Conventional, 0, 0, six_us);
        assert_eq!(conv.page_read_bus_time(2048), Ok(Picos::from_ns(46_960)));

        let ddr = proto(InterfaceKind::Ddr, 0, 0, six_us);
        let t = ddr.page_read_bus_time(2048).unwrap();
        assert!((t.as_ns() - 18_337.0).abs() < 1.0, "{t}");

        let sync = proto(InterfaceKind::SyncOnly, 0, 0, Picos::ZERO);
        let t = sync.page_read_bus_time(1).unwrap();
        assert!((t.as_ns() - 12.048).abs() < 1e-3, "{t}");
    }

    #[test]
    fn read_phases_sum_to_page_time() {
        for kind in InterfaceKind::ALL {
            let p = proto(kind, 2, 5, Picos::from_us(4));
            for page in [512, 2048, 4096] {
                assert_eq!(
                    p.read_command_time() + p.read_data_time(page).unwrap(),
                    p.page_read_bus_time(page).unwrap()
                );
            }
        }
    }

    #[test]
    fn peak_rates() {
        let conv = proto(InterfaceKind::Conventional, 2, 5, Picos::ZERO);
        assert!((conv.channel_peak_rate() - 50.0e6).abs() < 1.0);
        let ddr = proto(InterfaceKind::Ddr, 2, 5, Picos::ZERO);
        assert!((ddr.channel_peak_rate() - 166.0e6).abs() < 1.0);
        let sync = proto(InterfaceKind::SyncOnly, 2, 5, Picos::ZERO);
        assert!((sync.channel_peak_rate() - 83.0e6).abs() < 1.0);
    }

    #[test]
    fn default_overheads() {
        assert_eq!(default_page_overhead(2048), Picos::from_us(4));
        assert_eq!(default_page_overhead(4096), Picos::from_us(8));
    }
}
