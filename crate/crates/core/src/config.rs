//! TOML run settings. Every key is optional.
//!
//! ```toml
//! cell_kind = "slc"
//! interface = "ddr"
//! channels = 1
//! ways = 16
//! # t_r_ns = 32000
//! # page_overhead_ns = 4000
//!
//! [timing]
//! t_out_ns = 7.82
//! alpha = 0.5
//! ```
//!
//! Cell overrides (`t_r_ns`, `t_prog_ns`, `t_byte_ns`, `page_size_bytes`)
//! replace the default profile of whichever cell kind a run uses.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bus::{default_page_overhead, BusProtocol};
use crate::energy::{EnergyError, PowerModel};
use crate::flash::{CellKind, FlashError, FlashProfile};
use crate::timing::{ClockSpec, InterfaceKind, TimingError, TimingParams};
use crate::topology::{SsdConfig, StripeOrder, TopologyError, DEFAULT_PAGES_PER_CHIP};
use crate::units::{fraction_from_f64, Picos, MB};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("`{key}` must be a finite non-negative number of nanoseconds, got {value}")]
    BadDuration { key: &'static str, value: f64 },
    #[error("`alpha` must be a finite fraction, got {0}")]
    BadAlpha(f64),
    #[error(transparent)]
    Timing(#[from] TimingError),
    #[error(transparent)]
    Flash(#[from] FlashError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimingSettings {
    pub t_out_ns: f64,
    pub t_in_ns: f64,
    pub t_s_ns: f64,
    pub t_h_ns: f64,
    pub t_ds_ns: f64,
    pub t_dh_ns: f64,
    pub t_rea_ns: f64,
    pub t_diff_ns: f64,
    pub t_ios_ns: f64,
    pub t_ioh_ns: f64,
    pub t_iod_max_ns: f64,
    pub t_rwebd_min_ns: f64,
    pub alpha: f64,
}

impl Default for TimingSettings {
    fn default() -> Self {
        let m = TimingParams::measured();
        TimingSettings {
            t_out_ns: m.t_out.as_ns(),
            t_in_ns: m.t_in.as_ns(),
            t_s_ns: m.t_s.as_ns(),
            t_h_ns: m.t_h.as_ns(),
            t_ds_ns: m.t_ds.as_ns(),
            t_dh_ns: m.t_dh.as_ns(),
            t_rea_ns: m.t_rea.as_ns(),
            t_diff_ns: m.t_diff.as_ns(),
            t_ios_ns: m.t_ios.as_ns(),
            t_ioh_ns: m.t_ioh.as_ns(),
            t_iod_max_ns: m.t_iod_max.as_ns(),
            t_rwebd_min_ns: m.t_rwebd_min.as_ns(),
            alpha: 0.5,
        }
    }
}

fn ns(key: &'static str, value: f64) -> Result<Picos, ConfigError> {
    Picos::from_ns_f64(value).ok_or(ConfigError::BadDuration { key, value })
}

impl TimingSettings {
    /// `t_byte` comes from the flash profile, not from here.
    pub fn params(&self, t_byte: Picos) -> Result<TimingParams, ConfigError> {
        let params = TimingParams {
            t_out: ns("t_out_ns", self.t_out_ns)?,
            t_in: ns("t_in_ns", self.t_in_ns)?,
            t_s: ns("t_s_ns", self.t_s_ns)?,
            t_h: ns("t_h_ns", self.t_h_ns)?,
            t_ds: ns("t_ds_ns", self.t_ds_ns)?,
            t_dh: ns("t_dh_ns", self.t_dh_ns)?,
            t_rea: ns("t_rea_ns", self.t_rea_ns)?,
            t_byte,
            t_diff: ns("t_diff_ns", self.t_diff_ns)?,
            t_ios: ns("t_ios_ns", self.t_ios_ns)?,
            t_ioh: ns("t_ioh_ns", self.t_ioh_ns)?,
            t_iod_max: ns("t_iod_max_ns", self.t_iod_max_ns)?,
            t_rwebd_min: ns("t_rwebd_min_ns", self.t_rwebd_min_ns)?,
            alpha: fraction_from_f64(self.alpha).ok_or(ConfigError::BadAlpha(self.alpha))?,
        };
        params.validate()?;
        Ok(params)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub cell_kind: CellKind,
    pub t_r_ns: Option<f64>,
    pub t_prog_ns: Option<f64>,
    pub t_byte_ns: Option<f64>,
    pub page_size_bytes: Option<u32>,

    pub interface: InterfaceKind,
    pub freq_mhz: Option<u32>,
    pub cmd_cycles: u32,
    pub addr_cycles: u32,
    /// Defaults to 2 us per KiB of page.
    pub page_overhead_ns: Option<f64>,

    pub channels: u32,
    pub ways: u32,
    pub host_cap_mb_s: f64,
    pub stripe: StripeOrder,
    pub pages_per_chip: u64,

    pub power_conv_mw: f64,
    pub power_sync_mw: f64,
    pub power_ddr_mw: f64,

    pub timing: TimingSettings,
}

impl Default for Settings {
    fn default() -> Self {
        let power = PowerModel::default();
        Settings {
            cell_kind: CellKind::Slc,
            t_r_ns: None,
            t_prog_ns: None,
            t_byte_ns: None,
            page_size_bytes: None,
            interface: InterfaceKind::Ddr,
            freq_mhz: None,
            cmd_cycles: crate::bus::DEFAULT_CMD_CYCLES,
            addr_cycles: crate::bus::DEFAULT_ADDR_CYCLES,
            page_overhead_ns: None,
            channels: 1,
            ways: 1,
            host_cap_mb_s: 300.0,
            stripe: StripeOrder::ChannelMajor,
            pages_per_chip: DEFAULT_PAGES_PER_CHIP,
            power_conv_mw: power.power_mw(InterfaceKind::Conventional),
            power_sync_mw: power.power_mw(InterfaceKind::SyncOnly),
            power_ddr_mw: power.power_mw(InterfaceKind::Ddr),
            timing: TimingSettings::default(),
        }
    }
}

impl Settings {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("settings always serialize")
    }

    pub fn profile(&self, cell: CellKind) -> Result<FlashProfile, ConfigError> {
        let base = FlashProfile::default_for(cell);
        let pick = |key, over: Option<f64>, default: Picos| over.map_or(Ok(default), |v| ns(key, v));
        Ok(FlashProfile::new(
            cell,
            pick("t_r_ns", self.t_r_ns, base.t_r)?,
            pick("t_prog_ns", self.t_prog_ns, base.t_prog)?,
            pick("t_byte_ns", self.t_byte_ns, base.t_byte)?,
            self.page_size_bytes.unwrap_or(base.page_size),
        )?)
    }

    pub fn timing_params(&self, cell: CellKind) -> Result<TimingParams, ConfigError> {
        self.timing.params(self.profile(cell)?.t_byte)
    }

    pub fn power_model(&self) -> Result<PowerModel, ConfigError> {
        Ok(PowerModel::new(self.power_conv_mw, self.power_sync_mw, self.power_ddr_mw)?)
    }

    /// The configuration named by the settings themselves.
    pub fn ssd_config(&self) -> Result<SsdConfig, ConfigError> {
        self.ssd_config_for(self.cell_kind, self.interface, self.channels, self.ways)
    }

    /// These settings with cell, interface and shape replaced.
    pub fn ssd_config_for(
        &self,
        cell: CellKind,
        interface: InterfaceKind,
        channels: u32,
        ways: u32,
    ) -> Result<SsdConfig, ConfigError> {
        let profile = self.profile(cell)?;
        let timing = self.timing.params(profile.t_byte)?;
        let clock = match self.freq_mhz {
            Some(mhz) => ClockSpec::at_frequency(interface, mhz, &timing)?,
            None => ClockSpec::resolve(interface, &timing)?,
        };
        let overhead = match self.page_overhead_ns {
            Some(v) => ns("page_overhead_ns", v)?,
            None => default_page_overhead(profile.page_size),
        };
        let protocol = BusProtocol::new(clock, overhead).with_cycles(self.cmd_cycles, self.addr_cycles);
        Ok(SsdConfig::new(channels, ways, protocol, profile)?
            .with_host_cap(self.host_cap_mb_s * MB)?
            .with_stripe(self.stripe)
            .with_pages_per_chip(self.pages_per_chip)?)
    }
}
