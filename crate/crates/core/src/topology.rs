//! Channels, ways and how host requests land on them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bus::{default_page_overhead, BusProtocol};
use crate::engine::Stats;
use crate::flash::{CellKind, FlashProfile};
use crate::timing::{ClockSpec, InterfaceKind, TimingError, TimingParams};
use crate::units::MB;
use crate::workload::{Op, TraceRecord};

/// SATA II payload ceiling.
pub const DEFAULT_HOST_CAP: f64 = 300.0 * MB;
/// 512 MiB per chip with 2 KiB pages.
pub const DEFAULT_PAGES_PER_CHIP: u64 = 262_144;

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("channel count must be at least 1")]
    NoChannels,
    #[error("way count must be at least 1")]
    NoWays,
    #[error("host cap must be positive and finite, got {0}")]
    BadHostCap(f64),
    #[error("pages per chip must be at least 1")]
    NoCapacity,
    #[error("request has zero length")]
    ZeroLength,
    #[error("request touches logical page {page}, capacity is {capacity} pages")]
    BeyondCapacity { page: u64, capacity: u64 },
    #[error(transparent)]
    Timing(#[from] TimingError),
}

/// Which dimension consecutive logical pages advance first.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StripeOrder {
    #[default]
    ChannelMajor,
    WayMajor,
}

impl fmt::Display for StripeOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StripeOrder::ChannelMajor => "channel-major",
            StripeOrder::WayMajor => "way-major",
        })
    }
}

impl FromStr for StripeOrder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "channel-major" | "channel" => Ok(StripeOrder::ChannelMajor),
            "way-major" | "way" => Ok(StripeOrder::WayMajor),
            other => Err(format!("unknown stripe order `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SsdConfig {
    n_channels: u32,
    n_ways: u32,
    pub protocol: BusProtocol,
    pub profile: FlashProfile,
    host_cap: f64,
    pub stripe: StripeOrder,
    pages_per_chip: u64,
}

impl SsdConfig {
    pub fn new(
        n_channels: u32,
        n_ways: u32,
        protocol: BusProtocol,
        profile: FlashProfile,
    ) -> Result<Self, TopologyError> {
        if n_channels == 0 {
            return Err(TopologyError::NoChannels);
        }
        if n_ways == 0 {
            return Err(TopologyError::NoWays);
        }
        Ok(SsdConfig {
            n_channels,
            n_ways,
            protocol,
            profile,
            host_cap: DEFAULT_HOST_CAP,
            stripe: StripeOrder::ChannelMajor,
            pages_per_chip: DEFAULT_PAGES_PER_CHIP,
        })
    }

    /// Default cell profile, measured interface timing at the maximum clock,
    /// default command/address cycles and controller overhead.
    pub fn standard(
        cell: CellKind,
        interface: InterfaceKind,
        n_channels: u32,
        n_ways: u32,
    ) -> Result<Self, TopologyError> {
        let profile = FlashProfile::default_for(cell);
        let timing = TimingParams {
            t_byte: profile.t_byte,
            ..TimingParams::measured()
        };
        let clock = ClockSpec::resolve(interface, &timing)?;
        let protocol = BusProtocol::new(clock, default_page_overhead(profile.page_size));
        Self::new(n_channels, n_ways, protocol, profile)
    }

    pub fn with_host_cap(mut self, bytes_per_sec: f64) -> Result<Self, TopologyError> {
        if !(bytes_per_sec.is_finite() && bytes_per_sec > 0.0) {
            return Err(TopologyError::BadHostCap(bytes_per_sec));
        }
        self.host_cap = bytes_per_sec;
        Ok(self)
    }

    pub fn with_stripe(mut self, stripe: StripeOrder) -> Self {
        self.stripe = stripe;
        self
    }

    pub fn with_pages_per_chip(mut self, pages: u64) -> Result<Self, TopologyError> {
        if pages == 0 {
            return Err(TopologyError::NoCapacity);
        }
        self.pages_per_chip = pages;
        Ok(self)
    }

    pub fn n_channels(&self) -> u32 {
        self.n_channels
    }

    pub fn n_ways(&self) -> u32 {
        self.n_ways
    }

    pub fn host_cap(&self) -> f64 {
        self.host_cap
    }

    pub fn pages_per_chip(&self) -> u64 {
        self.pages_per_chip
    }

    pub fn total_chips(&self) -> usize {
        self.n_channels as usize * self.n_ways as usize
    }

    pub fn capacity_pages(&self) -> u64 {
        self.total_chips() as u64 * self.pages_per_chip
    }

    pub fn page_size(&self) -> u32 {
        self.profile.page_size
    }

    /// Flat chip index, channel-major.
    pub fn chip_index(&self, loc: PageLocation) -> usize {
        loc.channel as usize * self.n_ways as usize + loc.way as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PageLocation {
    pub channel: u32,
    pub way: u32,
    pub page: u64,
}

/// One page-sized unit of a host request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PageOp {
    pub op: Op,
    pub logical_page: u64,
    pub location: PageLocation,
    /// Host bytes carried by this page. A whole page still crosses the bus.
    pub bytes: u64,
}

pub fn map_page(config: &SsdConfig, logical_page: u64) -> PageLocation {
    let c = config.n_channels as u64;
    let w = config.n_ways as u64;
    let (channel, way) = match config.stripe {
        StripeOrder::ChannelMajor => (logical_page % c, (logical_page / c) % w),
        StripeOrder::WayMajor => ((logical_page / w) % c, logical_page % w),
    };
    PageLocation {
        channel: channel as u32,
        way: way as u32,
        page: logical_page / (c * w),
    }
}

/// Splits a request into page-aligned units in logical-page order.
pub fn decompose_request(config: &SsdConfig, record: &TraceRecord) -> Result<Vec<PageOp>, TopologyError> {
    if record.length == 0 {
        return Err(TopologyError::ZeroLength);
    }
    let page_size = config.page_size() as u64;
    let end = record
        .offset
        .checked_add(record.length)
        .ok_or(TopologyError::BeyondCapacity {
            page: u64::MAX,
            capacity: config.capacity_pages(),
        })?;
    let first = record.offset / page_size;
    let last = (end - 1) / page_size;
    if last >= config.capacity_pages() {
        return Err(TopologyError::BeyondCapacity {
            page: last,
            capacity: config.capacity_pages(),
        });
    }
    Ok((first..=last)
        .map(|lp| {
            let lo = (lp * page_size).max(record.offset);
            let hi = ((lp + 1) * page_size).min(end);
            PageOp {
                op: record.op,
                logical_page: lp,
                location: map_page(config, lp),
                bytes: hi - lo,
            }
        })
        .collect())
}

/// Clips every reported bandwidth at the host interface rate.
pub fn apply_host_cap(mut stats: Stats, config: &SsdConfig) -> Stats {
    let cap = config.host_cap;
    let mut capped = false;
    let mut clip = |bw: f64| {
        if bw > cap {
            capped = true;
            cap
        } else {
            bw
        }
    };
    stats.read_bandwidth = stats.raw_read_bandwidth.map(&mut clip);
    stats.write_bandwidth = stats.raw_write_bandwidth.map(&mut clip);
    stats.aggregate_bandwidth = clip(stats.raw_aggregate_bandwidth);
    stats.capped = capped;
    stats
}
