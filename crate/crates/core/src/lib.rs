//! Trace-driven SSD simulator for comparing NAND flash interface timings.

pub mod bus;
pub mod config;
pub mod energy;
pub mod engine;
pub mod experiment;
pub mod flash;
pub mod reference;
pub mod timing;
pub mod topology;
pub mod units;
pub mod workload;

pub use config::Settings;
pub use engine::{run, run_logged, simulate, Stats};
pub use flash::CellKind;
pub use timing::InterfaceKind;
pub use topology::SsdConfig;
pub use workload::{Op, Trace};
