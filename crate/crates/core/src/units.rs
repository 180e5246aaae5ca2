//! Time and rate units shared by every model.
//!
//! Simulated time is an integer count of picoseconds. Timing equations are
//! evaluated on exact rationals ([`ExactPs`]) and rounded once at the end, so
//! two-decimal nanosecond inputs such as 7.82 ns stay exact.

use std::fmt;
use std::ops::{Add, AddAssign, Sub};

use num_rational::Ratio;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

/// Exact duration in picoseconds.
pub type ExactPs = Ratio<i64>;

pub const PS_PER_NS: u64 = 1_000;
pub const PS_PER_US: u64 = 1_000_000;
pub const PS_PER_SEC: u64 = 1_000_000_000_000;

/// Bytes per second in one (decimal) megabyte per second.
pub const MB: f64 = 1.0e6;

/// Integer picoseconds. Used for timestamps and durations in the engine.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct Picos(pub u64);

impl Picos {
    pub const ZERO: Picos = Picos(0);

    pub fn from_ns(ns: u64) -> Self {
        Picos(ns * PS_PER_NS)
    }

    pub fn from_us(us: u64) -> Self {
        Picos(us * PS_PER_US)
    }

    /// Converts a (possibly fractional) nanosecond value, rounding to the
    /// nearest picosecond. Negative or non-finite inputs yield `None`.
    pub fn from_ns_f64(ns: f64) -> Option<Self> {
        if !ns.is_finite() || ns < 0.0 {
            return None;
        }
        Some(Picos((ns * PS_PER_NS as f64).round() as u64))
    }

    /// Rounds an exact rational duration to the nearest picosecond
    /// (halves away from zero). Negative values are rejected.
    pub fn from_exact(exact: ExactPs) -> Option<Self> {
        if exact < ExactPs::from_integer(0) {
            return None;
        }
        exact.round().to_integer().to_u64().map(Picos)
    }

    pub fn as_ps(self) -> u64 {
        self.0
    }

    pub fn as_ns(self) -> f64 {
        self.0 as f64 / PS_PER_NS as f64
    }

    pub fn as_us(self) -> f64 {
        self.0 as f64 / PS_PER_US as f64
    }

    pub fn as_secs(self) -> f64 {
        self.0 as f64 / PS_PER_SEC as f64
    }

    pub fn exact(self) -> ExactPs {
        ExactPs::from_integer(self.0 as i64)
    }

    pub fn saturating_sub(self, rhs: Picos) -> Picos {
        Picos(self.0.saturating_sub(rhs.0))
    }
}

impl Add for Picos {
    type Output = Picos;
    fn add(self, rhs: Picos) -> Picos {
        Picos(self.0 + rhs.0)
    }
}

impl AddAssign for Picos {
    fn add_assign(&mut self, rhs: Picos) {
        self.0 += rhs.0;
    }
}

impl Sub for Picos {
    type Output = Picos;
    fn sub(self, rhs: Picos) -> Picos {
        Picos(self.0 - rhs.0)
    }
}

impl fmt::Display for Picos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3} ns", self.as_ns())
    }
}

/// Exact value of an `ExactPs` in nanoseconds, as f64 for display and tests.
pub fn exact_ns(exact: ExactPs) -> f64 {
    exact.to_f64().unwrap_or(f64::NAN) / PS_PER_NS as f64
}

/// Parses a non-negative decimal string (`"7.82"`, `"0.5"`, `"12"`) into an
/// exact rational. Used for fractions such as alpha where binary floating
/// point would lose the exact value.
pub fn parse_decimal(text: &str) -> Option<Ratio<i64>> {
    let text = text.trim();
    if text.is_empty() || text.starts_with('-') {
        return None;
    }
    let (int_part, frac_part) = match text.split_once('.') {
        Some((i, f)) => (i, f),
        None => (text, ""),
    };
    if frac_part.len() > 12 || !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let int_val: i64 = if int_part.is_empty() { 0 } else { int_part.parse().ok()? };
    let scale = 10i64.checked_pow(frac_part.len() as u32)?;
    let frac_val: i64 = if frac_part.is_empty() { 0 } else { frac_part.parse().ok()? };
    let numer = int_val.checked_mul(scale)?.checked_add(frac_val)?;
    Some(Ratio::new(numer, scale))
}

/// Converts an f64 fraction to the closest decimal rational with at most 9
/// fractional digits (config files give alpha as a float).
pub fn fraction_from_f64(value: f64) -> Option<Ratio<i64>> {
    if !value.is_finite() {
        return None;
    }
    let scale = 1_000_000_000i64;
    Some(Ratio::new((value * scale as f64).round() as i64, scale))
}
