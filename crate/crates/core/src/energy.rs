//! Controller energy per transferred byte.
//!
//! Average controller power is a per-interface constant; energy per byte is
//! that power divided by the achieved bandwidth.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::timing::InterfaceKind;

#[derive(Debug, Error, PartialEq)]
pub enum EnergyError {
    #[error("bandwidth must be positive, got {0} B/s")]
    NonPositiveBandwidth(f64),
    #[error("power for {kind} must be positive, got {mw} mW")]
    NonPositivePower { kind: InterfaceKind, mw: f64 },
    #[error("no samples to calibrate {0} against")]
    NoSamples(InterfaceKind),
}

/// One value per interface kind, indexed by [`InterfaceKind::index`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PerInterface<T>(pub [T; 3]);

impl<T: Copy> PerInterface<T> {
    pub fn get(&self, kind: InterfaceKind) -> T {
        self.0[kind.index()]
    }

    pub fn map<U>(&self, mut f: impl FnMut(InterfaceKind, T) -> U) -> PerInterface<U> {
        let [a, b, c] = self.0;
        PerInterface([
            f(InterfaceKind::Conventional, a),
            f(InterfaceKind::SyncOnly, b),
            f(InterfaceKind::Ddr, c),
        ])
    }
}

/// Average controller power in milliwatts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerModel {
    power_mw: PerInterface<f64>,
}

impl PowerModel {
    pub fn new(conv_mw: f64, sync_mw: f64, ddr_mw: f64) -> Result<Self, EnergyError> {
        let model = PowerModel {
            power_mw: PerInterface([conv_mw, sync_mw, ddr_mw]),
        };
        for kind in InterfaceKind::ALL {
            let mw = model.power_mw(kind);
            if !(mw.is_finite() && mw > 0.0) {
                return Err(EnergyError::NonPositivePower { kind, mw });
            }
        }
        Ok(model)
    }

    pub fn power_mw(&self, kind: InterfaceKind) -> f64 {
        self.power_mw.get(kind)
    }

    pub fn energy_per_byte(&self, kind: InterfaceKind, bandwidth: f64) -> Result<f64, EnergyError> {
        energy_per_byte(self.power_mw(kind), bandwidth)
    }
}

impl Default for PowerModel {
    /// Fitted to the SLC energy/bandwidth table; see `calibrate_power`.
    fn default() -> Self {
        PowerModel {
            power_mw: PerInterface([22.6, 42.1, 46.7]),
        }
    }
}

/// nJ per byte for a controller drawing `power_mw` while moving `bandwidth`
/// bytes per second.
pub fn energy_per_byte(power_mw: f64, bandwidth: f64) -> Result<f64, EnergyError> {
    if !(bandwidth > 0.0) {
        return Err(EnergyError::NonPositiveBandwidth(bandwidth));
    }
    Ok(power_mw * 1.0e6 / bandwidth)
}

/// A measured pair for one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSample {
    pub kind: InterfaceKind,
    pub energy_nj_b: f64,
    pub bandwidth_mb_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub model: PowerModel,
    /// Largest |energy x bandwidth / mean - 1| per interface.
    pub max_deviation: PerInterface<f64>,
    pub samples: PerInterface<usize>,
}

/// Mean of energy x bandwidth per interface. nJ/B times MB/s is mW.
pub fn calibrate_power(samples: &[PowerSample]) -> Result<Calibration, EnergyError> {
    let mut products: [Vec<f64>; 3] = Default::default();
    for s in samples {
        products[s.kind.index()].push(s.energy_nj_b * s.bandwidth_mb_s);
    }
    let mut power = [0.0; 3];
    let mut deviation = [0.0; 3];
    for kind in InterfaceKind::ALL {
        let p = &products[kind.index()];
        if p.is_empty() {
            return Err(EnergyError::NoSamples(kind));
        }
        let mean = p.iter().sum::<f64>() / p.len() as f64;
        power[kind.index()] = mean;
        deviation[kind.index()] = p.iter().map(|x| (x / mean - 1.0).abs()).fold(0.0, f64::max);
    }
    Ok(Calibration {
        model: PowerModel::new(power[0], power[1], power[2])?,
        max_deviation: PerInterface(deviation),
        samples: PerInterface([products[0].len(), products[1].len(), products[2].len()]),
    })
}

/// Samples from the published SLC energy table joined with the matching
/// one-channel bandwidth entries.
pub fn reference_samples() -> Vec<PowerSample> {
    use crate::flash::CellKind;
    use crate::reference::{bandwidth_ref, ENERGY};
    let mut out = Vec::new();
    for e in &ENERGY {
        let Some(b) = bandwidth_ref(CellKind::Slc, e.op, 1, e.ways) else {
            continue;
        };
        for kind in InterfaceKind::ALL {
            if let Some(bw) = b.value(kind) {
                out.push(PowerSample {
                    kind,
                    energy_nj_b: e.value(kind),
                    bandwidth_mb_s: bw,
                });
            }
        }
    }
    out
}
