//! Clock-period arithmetic for the controller/flash interface.
//!
//! Every derivation works on exact rationals in picoseconds. The conventional
//! asynchronous interface is limited by the serialized REB round trip
//! (strobe out, data back, setup at the FIFO) softened by the delayed capture
//! clock; the synchronous interfaces are limited by the data-valid-strobe
//! window, which the DDR variant must fit twice into one period.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::{ExactPs, Picos};

#[derive(Debug, Error, PartialEq)]
pub enum TimingError {
    #[error("alpha must lie in [0, 1/2], got {0}")]
    AlphaOutOfRange(Ratio<i64>),
    #[error("clock period must be positive")]
    NonPositivePeriod,
    #[error("DLL delay would be negative ({iod_max} - {rwebd_min} + {ios}); board timing is inconsistent")]
    NegativeDllDelay {
        iod_max: Picos,
        rwebd_min: Picos,
        ios: Picos,
    },
    #[error("t_byte must be positive")]
    ZeroTByte,
    #[error("{kind} cannot run at {mhz} MHz: period {period_ns:.3} ns is below the minimum {min_ns:.3} ns")]
    FrequencyTooHigh {
        kind: InterfaceKind,
        mhz: u32,
        period_ns: f64,
        min_ns: f64,
    },
    #[error("frequency must be at least 1 MHz")]
    ZeroFrequency,
}

/// Interface protocol between controller and flash chip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterfaceKind {
    /// Asynchronous single-data-rate (WEB/REB strobes).
    #[serde(rename = "conv")]
    Conventional,
    /// Synchronous single-data-rate with a data-valid strobe.
    #[serde(rename = "sync")]
    SyncOnly,
    /// Synchronous double-data-rate on the shared RWEB strobe.
    #[serde(rename = "ddr")]
    Ddr,
}

impl InterfaceKind {
    pub const ALL: [InterfaceKind; 3] = [
        InterfaceKind::Conventional,
        InterfaceKind::SyncOnly,
        InterfaceKind::Ddr,
    ];

    /// Short key used in config files and CSV output.
    pub fn key(self) -> &'static str {
        match self {
            InterfaceKind::Conventional => "conv",
            InterfaceKind::SyncOnly => "sync",
            InterfaceKind::Ddr => "ddr",
        }
    }

    pub fn index(self) -> usize {
        match self {
            InterfaceKind::Conventional => 0,
            InterfaceKind::SyncOnly => 1,
            InterfaceKind::Ddr => 2,
        }
    }
}

impl fmt::Display for InterfaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for InterfaceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "conv" | "conventional" => Ok(InterfaceKind::Conventional),
            "sync" | "sync_only" | "synconly" => Ok(InterfaceKind::SyncOnly),
            "ddr" | "proposed" => Ok(InterfaceKind::Ddr),
            other => Err(format!("unknown interface `{other}` (expected conv, sync or ddr)")),
        }
    }
}

/// Interface timing parameters. Durations are integer picoseconds.
///
/// `t_ds`/`t_dh` are carried and validated but do not enter any minimum-period
/// derivation.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingParams {
    pub t_out: Picos,
    pub t_in: Picos,
    pub t_s: Picos,
    pub t_h: Picos,
    pub t_ds: Picos,
    pub t_dh: Picos,
    pub t_rea: Picos,
    pub t_byte: Picos,
    pub t_diff: Picos,
    pub t_ios: Picos,
    pub t_ioh: Picos,
    pub t_iod_max: Picos,
    pub t_rwebd_min: Picos,
    /// Capture-clock delay as a fraction of the clock period.
    pub alpha: Ratio<i64>,
}

impl TimingParams {
    /// Measured controller values for a 130 nm library plus the fast
    /// OneNAND-class t_byte. Pad-level and DLL parameters were not measured;
    /// they default to the FIFO setup/hold and zero skew.
    pub fn measured() -> Self {
        TimingParams {
            t_out: Picos(7_820),
            t_in: Picos(1_650),
            t_s: Picos(250),
            t_h: Picos(20),
            t_ds: Picos(0),
            t_dh: Picos(0),
            t_rea: Picos(20_000),
            t_byte: Picos(12_000),
            t_diff: Picos(4_690),
            t_ios: Picos(250),
            t_ioh: Picos(20),
            t_iod_max: Picos(0),
            t_rwebd_min: Picos(0),
            alpha: Ratio::new(1, 2),
        }
    }

    pub fn validate(&self) -> Result<(), TimingError> {
        check_alpha(self.alpha)?;
        if self.t_byte == Picos::ZERO {
            return Err(TimingError::ZeroTByte);
        }
        Ok(())
    }
}

impl Default for TimingParams {
    fn default() -> Self {
        Self::measured()
    }
}

fn check_alpha(alpha: Ratio<i64>) -> Result<(), TimingError> {
    if alpha < Ratio::from_integer(0) || alpha > Ratio::new(1, 2) {
        return Err(TimingError::AlphaOutOfRange(alpha));
    }
    Ok(())
}

/// Delay of the capture clock behind the system clock: `alpha * t_p`.
pub fn delayed_clock_offset(alpha: Ratio<i64>, t_p: ExactPs) -> Result<ExactPs, TimingError> {
    check_alpha(alpha)?;
    if t_p <= ExactPs::from_integer(0) {
        return Err(TimingError::NonPositivePeriod);
    }
    Ok(alpha * t_p)
}

/// Delay the in-chip DLL adds to RWEB so DVS lands on stable data.
pub fn dll_delay(t_iod_max: Picos, t_rwebd_min: Picos, t_ios: Picos) -> Result<Picos, TimingError> {
    let total = t_iod_max.0 as i128 - t_rwebd_min.0 as i128 + t_ios.0 as i128;
    if total < 0 {
        return Err(TimingError::NegativeDllDelay {
            iod_max: t_iod_max,
            rwebd_min: t_rwebd_min,
            ios: t_ios,
        });
    }
    Ok(Picos(total as u64))
}

/// Serialized read path of the conventional interface: REB out, data back,
/// FIFO setup. This is `t_RC + t_D`.
pub fn conventional_read_path(p: &TimingParams) -> ExactPs {
    (p.t_out + p.t_rea + p.t_in + p.t_s).exact()
}

/// Read-cycle time that satisfies `t_RC + alpha * t_RC = read path`.
pub fn conventional_read_cycle(p: &TimingParams) -> ExactPs {
    conventional_read_path(p) / (Ratio::from_integer(1) + p.alpha)
}

/// Minimum clock period of the conventional interface.
pub fn tpmin_conventional(p: &TimingParams) -> ExactPs {
    conventional_read_cycle(p).max(p.t_byte.exact())
}

/// Minimum DDR period from pad-level setup/hold around DVS.
pub fn tpmin_proposed_pad(t_ios: Picos, t_ioh: Picos, t_byte: Picos) -> Picos {
    Picos(2 * (t_ios.0 + t_ioh.0)).max(t_byte)
}

/// Minimum DDR period from FIFO setup/hold plus board-level DVS/IO skew.
pub fn tpmin_proposed_board(t_s: Picos, t_h: Picos, t_diff: Picos, t_byte: Picos) -> Picos {
    Picos(2 * (t_s.0 + t_h.0 + t_diff.0)).max(t_byte)
}

/// Highest integer frequency in MHz whose period is not below `t_pmin`.
pub fn max_frequency_mhz(t_pmin: ExactPs) -> Result<u32, TimingError> {
    if t_pmin <= ExactPs::from_integer(0) {
        return Err(TimingError::NonPositivePeriod);
    }
    let mhz = (ExactPs::from_integer(1_000_000) / t_pmin).floor().to_integer();
    Ok(mhz as u32)
}

/// Minimum period for `kind`. Synchronous interfaces use the board-level
/// bound; the SDR variant shares the DDR design's clock.
pub fn tpmin_for(kind: InterfaceKind, p: &TimingParams) -> ExactPs {
    match kind {
        InterfaceKind::Conventional => tpmin_conventional(p),
        InterfaceKind::SyncOnly | InterfaceKind::Ddr => {
            tpmin_proposed_board(p.t_s, p.t_h, p.t_diff, p.t_byte).exact()
        }
    }
}

/// A resolved interface clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClockSpec {
    pub kind: InterfaceKind,
    pub frequency_mhz: u32,
}

impl ClockSpec {
    /// Runs `kind` at the highest integer MHz its timing allows.
    pub fn resolve(kind: InterfaceKind, p: &TimingParams) -> Result<Self, TimingError> {
        p.validate()?;
        let mhz = max_frequency_mhz(tpmin_for(kind, p))?;
        Self::at_frequency(kind, mhz, p)
    }

    /// Runs `kind` at an explicit frequency, which must not exceed the
    /// maximum the timing parameters allow.
    pub fn at_frequency(kind: InterfaceKind, mhz: u32, p: &TimingParams) -> Result<Self, TimingError> {
        if mhz == 0 {
            return Err(TimingError::ZeroFrequency);
        }
        let spec = ClockSpec {
            kind,
            frequency_mhz: mhz,
        };
        let min = tpmin_for(kind, p);
        if spec.t_p() < min {
            return Err(TimingError::FrequencyTooHigh {
                kind,
                mhz,
                period_ns: crate::units::exact_ns(spec.t_p()),
                min_ns: crate::units::exact_ns(min),
            });
        }
        Ok(spec)
    }

    /// Clock period, `1000 / f` ns.
    pub fn t_p(&self) -> ExactPs {
        ExactPs::new(1_000_000, self.frequency_mhz as i64)
    }
}

/// Time the data phase spends per byte: one strobe cycle for the SDR
/// interfaces, half a cycle for DDR.
pub fn per_byte_cycle(spec: &ClockSpec) -> ExactPs {
    match spec.kind {
        InterfaceKind::Conventional | InterfaceKind::SyncOnly => spec.t_p(),
        InterfaceKind::Ddr => spec.t_p() / 2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::exact_ns;

    fn ns(v: f64) -> Picos {
        Picos::from_ns_f64(v).unwrap()
    }

    #[test]
    fn delayed_clock_offset_examples() {
        let zero = delayed_clock_offset(Ratio::from_integer(0), ns(20.0).exact()).unwrap();
        assert_eq!(zero, ExactPs::from_integer(0));
        let half = delayed_clock_offset(Ratio::new(1, 2), ns(19.81).exact()).unwrap();
        assert_eq!(half, ExactPs::from_integer(9_905));
        let quarter = delayed_clock_offset(Ratio::new(1, 4), ns(12.0).exact()).unwrap();
        assert_eq!(quarter, ExactPs::from_integer(3_000));
    }

    #[test]
    fn delayed_clock_offset_rejects_alpha() {
        assert!(matches!(
            delayed_clock_offset(Ratio::new(3, 4), ExactPs::from_integer(1)),
            Err(TimingError::AlphaOutOfRange(_))
        ));
        assert!(delayed_clock_offset(Ratio::new(-1, 4), ExactPs::from_integer(1)).is_err());
    }

    #[test]
    fn dll_delay_examples() {
        assert_eq!(dll_delay(ns(5.0), ns(5.0), ns(0.0)), Ok(Picos(0)));
        assert_eq!(dll_delay(ns(8.0), ns(3.0), ns(0.25)), Ok(Picos(5_250)));
        assert!(matches!(
            dll_delay(ns(3.0), ns(5.0), ns(0.25)),
            Err(TimingError::NegativeDllDelay { .. })
        ));
    }

    #[test]
    fn tpmin_conventional_examples() {
        let p = TimingParams::measured();
        let t = tpmin_conventional(&p);
        assert_eq!(t, ExactPs::new(29_720 * 2, 3));
        assert!((exact_ns(t) - 19.813).abs() < 1e-3);

        let mut zero_path = p.clone();
        zero_path.t_out = Picos(0);
        zero_path.t_rea = Picos(0);
        zero_path.t_in = Picos(0);
        zero_path.t_s = Picos(0);
        assert_eq!(tpmin_conventional(&zero_path), ExactPs::from_integer(12_000));

        let mut degenerate = p.clone();
        degenerate.t_out = ns(10.0);
        degenerate.t_rea = ns(10.0);
        degenerate.t_in = ns(5.0);
        degenerate.t_s = ns(5.0);
        degenerate.alpha = Ratio::from_integer(0);
        degenerate.t_byte = ns(1.0);
        assert_eq!(tpmin_conventional(&degenerate), ExactPs::from_integer(30_000));
    }

    #[test]
    fn tpmin_proposed_examples() {
        assert_eq!(tpmin_proposed_pad(ns(1.0), ns(1.0), ns(12.0)), ns(12.0));
        assert_eq!(tpmin_proposed_pad(ns(4.0), ns(3.0), ns(12.0)), ns(14.0));
        assert_eq!(tpmin_proposed_pad(ns(0.0), ns(0.0), ns(5.0)), ns(5.0));

        assert_eq!(tpmin_proposed_board(ns(0.25), ns(0.02), ns(4.69), ns(12.0)), ns(12.0));
        assert_eq!(tpmin_proposed_board(ns(3.0), ns(1.0), ns(2.0), ns(10.0)), ns(12.0));
        assert_eq!(tpmin_proposed_board(ns(0.0), ns(0.0), ns(0.0), ns(7.0)), ns(7.0));
    }

    #[test]
    fn max_frequency_examples() {
        assert_eq!(max_frequency_mhz(ExactPs::from_integer(19_813)), Ok(50));
        assert_eq!(max_frequency_mhz(ExactPs::from_integer(12_000)), Ok(83));
        assert_eq!(max_frequency_mhz(ExactPs::from_integer(1_000_000)), Ok(1));
        assert_eq!(
            max_frequency_mhz(ExactPs::from_integer(0)),
            Err(TimingError::NonPositivePeriod)
        );
    }

    #[test]
    fn per_byte_cycle_examples() {
        let p = TimingParams::measured();
        let conv = ClockSpec::resolve(InterfaceKind::Conventional, &p).unwrap();
        assert_eq!(conv.frequency_mhz, 50);
        assert_eq!(per_byte_cycle(&conv), ExactPs::from_integer(20_000));

        let ddr = ClockSpec::resolve(InterfaceKind::Ddr, &p).unwrap();
        assert_eq!(ddr.frequency_mhz, 83);
        assert!((exact_ns(per_byte_cycle(&ddr)) - 6.024).abs() < 1e-3);

        let sync = ClockSpec::resolve(InterfaceKind::SyncOnly, &p).unwrap();
        assert_eq!(sync.frequency_mhz, 83);
        assert!((exact_ns(per_byte_cycle(&sync)) - 12.048).abs() < 1e-3);
    }

    #[test]
    fn frequency_override_is_bounded() {
        let p = TimingParams::measured();
        assert!(ClockSpec::at_frequency(InterfaceKind::Conventional, 40, &p).is_ok());
        assert!(matches!(
            ClockSpec::at_frequency(InterfaceKind::Conventional, 51, &p),
            Err(TimingError::FrequencyTooHigh { .. })
        ));
        assert_eq!(
            ClockSpec::at_frequency(InterfaceKind::Ddr, 0, &p),
            Err(TimingError::ZeroFrequency)
        );
    }

    #[test]
    fn read_cycle_closes_the_delay_equation() {
        let p = TimingParams::measured();
        let t_rc = conventional_read_cycle(&p);
        let t_d = delayed_clock_offset(p.alpha, t_rc).unwrap();
        assert_eq!(t_rc + t_d, conventional_read_path(&p));
    }

    #[test]
    fn interface_keys_parse() {
        for kind in InterfaceKind::ALL {
            assert_eq!(kind.key().parse::<InterfaceKind>(), Ok(kind));
        }
        assert!("xyz".parse::<InterfaceKind>().is_err());
    }
}
