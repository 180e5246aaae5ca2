//! Behavioral NAND chip: one page register, one cell-array operation at a time.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::Picos;

#[derive(Debug, Error, PartialEq)]
pub enum FlashError {
    #[error("invalid flash profile: {0}")]
    InvalidProfile(String),
    #[error("chip busy until {busy_until} (now {now})")]
    Busy { busy_until: Picos, now: Picos },
    #[error("page register already holds page {0}")]
    RegisterOccupied(u64),
    #[error("page register holds no data to program")]
    EmptyRegister,
    #[error("page register holds no fetched data to transfer")]
    NothingToTransfer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Slc,
    Mlc,
}

impl CellKind {
    pub const ALL: [CellKind; 2] = [CellKind::Slc, CellKind::Mlc];

    pub fn key(self) -> &'static str {
        match self {
            CellKind::Slc => "slc",
            CellKind::Mlc => "mlc",
        }
    }
}

impl fmt::Display for CellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CellKind::Slc => "SLC",
            CellKind::Mlc => "MLC",
        })
    }
}

impl FromStr for CellKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "slc" => Ok(CellKind::Slc),
            "mlc" => Ok(CellKind::Mlc),
            other => Err(format!("unknown cell kind `{other}` (expected slc or mlc)")),
        }
    }
}

/// Per-device cell timing.
#[derive(Debug, Clone, PartialEq)]
pub struct FlashProfile {
    pub cell_kind: CellKind,
    /// Cell array to page register.
    pub t_r: Picos,
    /// Page register to cell array.
    pub t_prog: Picos,
    /// Page register to IO latch, per byte. Only bounds the clock period.
    pub t_byte: Picos,
    pub page_size: u32,
}

impl FlashProfile {
    pub fn new(
        cell_kind: CellKind,
        t_r: Picos,
        t_prog: Picos,
        t_byte: Picos,
        page_size: u32,
    ) -> Result<Self, FlashError> {
        if t_r == Picos::ZERO {
            return Err(FlashError::InvalidProfile("t_r must be positive".into()));
        }
        if t_prog <= t_r {
            return Err(FlashError::InvalidProfile(format!(
                "t_prog ({t_prog}) must exceed t_r ({t_r})"
            )));
        }
        if t_byte == Picos::ZERO {
            return Err(FlashError::InvalidProfile("t_byte must be positive".into()));
        }
        if page_size == 0 || !page_size.is_power_of_two() {
            return Err(FlashError::InvalidProfile(format!(
                "page size {page_size} is not a positive power of two"
            )));
        }
        Ok(FlashProfile {
            cell_kind,
            t_r,
            t_prog,
            t_byte,
            page_size,
        })
    }

    /// Large-block SLC: 2 KiB pages, 32 us fetch, 230 us program.
    pub fn slc() -> Self {
        FlashProfile {
            cell_kind: CellKind::Slc,
            t_r: Picos::from_us(32),
            t_prog: Picos::from_us(230),
            t_byte: Picos::from_ns(12),
            page_size: 2048,
        }
    }

    /// 2-bit MLC: 4 KiB pages, 60 us fetch, 800 us program.
    pub fn mlc() -> Self {
        FlashProfile {
            cell_kind: CellKind::Mlc,
            t_r: Picos::from_us(60),
            t_prog: Picos::from_us(800),
            t_byte: Picos::from_ns(12),
            page_size: 4096,
        }
    }

    pub fn default_for(cell_kind: CellKind) -> Self {
        match cell_kind {
            CellKind::Slc => Self::slc(),
            CellKind::Mlc => Self::mlc(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChipState {
    Idle,
    BusyFetch,
    BusyProgram,
    ReadyToTransfer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Register {
    Empty,
    /// Data fetched from the array, waiting to go out on the bus.
    Fetched(u64),
    /// Data shifted in by the controller, waiting to be programmed.
    Loaded(u64),
}

/// One NAND chip. All state changes take the current simulated time; a busy
/// chip settles lazily once `now` reaches `busy_until`.
#[derive(Debug, Clone, PartialEq)]
pub struct NandChip {
    profile: FlashProfile,
    state: ChipState,
    busy_until: Picos,
    register: Register,
    pending_page: Option<u64>,
    busy_total: Picos,
}

impl NandChip {
    pub fn new(profile: FlashProfile) -> Self {
        NandChip {
            profile,
            state: ChipState::Idle,
            busy_until: Picos::ZERO,
            register: Register::Empty,
            pending_page: None,
            busy_total: Picos::ZERO,
        }
    }

    pub fn profile(&self) -> &FlashProfile {
        &self.profile
    }

    pub fn state(&self) -> ChipState {
        self.state
    }

    pub fn busy_until(&self) -> Picos {
        self.busy_until
    }

    /// Total time spent in cell-array operations.
    pub fn busy_total(&self) -> Picos {
        self.busy_total
    }

    pub fn registered_page(&self) -> Option<u64> {
        match self.register {
            Register::Empty => None,
            Register::Fetched(p) | Register::Loaded(p) => Some(p),
        }
    }

    /// True when no cell-array operation is in flight at `now`.
    pub fn is_available(&self, now: Picos) -> bool {
        match self.state {
            ChipState::Idle => true,
            ChipState::BusyFetch | ChipState::BusyProgram => now >= self.busy_until,
            ChipState::ReadyToTransfer => false,
        }
    }

    /// Applies a completed cell-array operation, if any.
    pub fn settle(&mut self, now: Picos) {
        if now < self.busy_until {
            return;
        }
        match self.state {
            ChipState::BusyFetch => {
                let page = self.pending_page.take().expect("fetch without a page");
                self.register = Register::Fetched(page);
                self.state = ChipState::ReadyToTransfer;
            }
            ChipState::BusyProgram => {
                self.register = Register::Empty;
                self.state = ChipState::Idle;
            }
            ChipState::Idle | ChipState::ReadyToTransfer => {}
        }
    }

    fn ensure_not_busy(&mut self, now: Picos) -> Result<(), FlashError> {
        self.settle(now);
        match self.state {
            ChipState::BusyFetch | ChipState::BusyProgram => Err(FlashError::Busy {
                busy_until: self.busy_until,
                now,
            }),
            _ => Ok(()),
        }
    }

    /// Starts moving `page` from the cell array into the page register.
    /// Returns the completion time.
    pub fn issue_fetch(&mut self, page: u64, now: Picos) -> Result<Picos, FlashError> {
        self.ensure_not_busy(now)?;
        if let Some(held) = self.registered_page() {
            return Err(FlashError::RegisterOccupied(held));
        }
        self.state = ChipState::BusyFetch;
        self.pending_page = Some(page);
        self.busy_until = now + self.profile.t_r;
        self.busy_total += self.profile.t_r;
        Ok(self.busy_until)
    }

    /// Records that the controller finished shifting `page` into the
    /// page register.
    pub fn load_register(&mut self, page: u64, now: Picos) -> Result<(), FlashError> {
        self.ensure_not_busy(now)?;
        if let Some(held) = self.registered_page() {
            return Err(FlashError::RegisterOccupied(held));
        }
        self.register = Register::Loaded(page);
        self.state = ChipState::ReadyToTransfer;
        Ok(())
    }

    /// Starts programming the loaded page register into the cell array.
    pub fn issue_program(&mut self, now: Picos) -> Result<Picos, FlashError> {
        self.ensure_not_busy(now)?;
        match self.register {
            Register::Loaded(_) => {}
            _ => return Err(FlashError::EmptyRegister),
        }
        self.state = ChipState::BusyProgram;
        self.busy_until = now + self.profile.t_prog;
        self.busy_total += self.profile.t_prog;
        Ok(self.busy_until)
    }

    /// Records that the controller finished reading the fetched page out.
    pub fn drain_register(&mut self, now: Picos) -> Result<u64, FlashError> {
        self.ensure_not_busy(now)?;
        match self.register {
            Register::Fetched(page) => {
                self.register = Register::Empty;
                self.state = ChipState::Idle;
                Ok(page)
            }
            _ => Err(FlashError::NothingToTransfer),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fetch_completion_times() {
        let mut slc = NandChip::new(FlashProfile::slc());
        assert_eq!(slc.issue_fetch(0, Picos::ZERO), Ok(Picos::from_ns(32_000)));
        assert_eq!(slc.state(), ChipState::BusyFetch);

        let mut mlc = NandChip::new(FlashProfile::mlc());
        assert_eq!(mlc.issue_fetch(0, Picos::ZERO), Ok(Picos::from_ns(60_000)));
    }

    #[test]
    fn fetch_makes_page_ready() {
        let mut chip = NandChip::new(FlashProfile::slc());
        let done = chip.issue_fetch(7, Picos(100)).unwrap();
        chip.settle(done);
        assert_eq!(chip.state(), ChipState::ReadyToTransfer);
        assert_eq!(chip.registered_page(), Some(7));
        assert_eq!(chip.drain_register(done), Ok(7));
        assert_eq!(chip.state(), ChipState::Idle);
    }

    #[test]
    fn program_completion_times() {
        let mut slc = NandChip::new(FlashProfile::slc());
        slc.load_register(0, Picos::ZERO).unwrap();
        assert_eq!(slc.issue_program(Picos::ZERO), Ok(Picos::from_ns(230_000)));

        let mut mlc = NandChip::new(FlashProfile::mlc());
        mlc.load_register(0, Picos::ZERO).unwrap();
        assert_eq!(mlc.issue_program(Picos::ZERO), Ok(Picos::from_ns(800_000)));
    }

    #[test]
    fn default_mlc_program_is_about_three_times_slc() {
        let ratio = FlashProfile::mlc().t_prog.0 as f64 / FlashProfile::slc().t_prog.0 as f64;
        assert!((2.5..=4.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn busy_chip_rejects_commands() {
        let mut chip = NandChip::new(FlashProfile::slc());
        chip.load_register(1, Picos::ZERO).unwrap();
        let done = chip.issue_program(Picos::ZERO).unwrap();
        assert!(matches!(chip.issue_program(Picos(5)), Err(FlashError::Busy { .. })));
        assert!(matches!(chip.issue_fetch(2, Picos(5)), Err(FlashError::Busy { .. })));
        assert!(chip.issue_fetch(2, done).is_ok());
    }

    #[test]
    fn program_needs_loaded_register() {
        let mut chip = NandChip::new(FlashProfile::slc());
        assert_eq!(chip.issue_program(Picos::ZERO), Err(FlashError::EmptyRegister));
        let done = chip.issue_fetch(3, Picos::ZERO).unwrap();
        assert_eq!(chip.issue_program(done), Err(FlashError::EmptyRegister));
    }

    #[test]
    fn availability() {
        let mut chip = NandChip::new(FlashProfile::slc());
        assert!(chip.is_available(Picos(12345)));
        chip.load_register(0, Picos::ZERO).unwrap();
        chip.issue_program(Picos::ZERO).unwrap();
        let until = chip.busy_until();
        assert!(!chip.is_available(Picos(until.0 / 2)));
        assert!(chip.is_available(until));
    }

    #[test]
    fn availability_boundary_for_fetch() {
        let profile = FlashProfile::new(CellKind::Slc, Picos(100), Picos(200), Picos(1), 512).unwrap();
        let mut chip = NandChip::new(profile);
        chip.issue_fetch(0, Picos::ZERO).unwrap();
        assert!(!chip.is_available(Picos(50)));
        assert!(chip.is_available(Picos(100)));
    }

    #[test]
    fn profile_validation() {
        let ok = |t_r, t_prog, page| FlashProfile::new(CellKind::Slc, Picos(t_r), Picos(t_prog), Picos(1), page);
        assert!(ok(0, 10, 2048).is_err());
        assert!(ok(10, 10, 2048).is_err());
        assert!(ok(10, 20, 3000).is_err());
        assert!(ok(10, 20, 0).is_err());
        assert!(ok(10, 20, 4096).is_ok());
    }

    #[test]
    fn busy_time_accumulates_exactly() {
        let mut chip = NandChip::new(FlashProfile::mlc());
        let mut now = Picos::ZERO;
        for page in 0..3 {
            now = chip.issue_fetch(page, now).unwrap();
            chip.drain_register(now).unwrap();
        }
        assert_eq!(chip.busy_total(), Picos(3 * FlashProfile::mlc().t_r.0));
    }
}
