//! Per-thread primitive call counters, used to check which phase performs
//! which work.

use std::cell::Cell;
use std::ops::Sub;

thread_local! {
    static PRF: Cell<u64> = const { Cell::new(0) };
    static UH: Cell<u64> = const { Cell::new(0) };
    static HASH: Cell<u64> = const { Cell::new(0) };
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CallCounts {
    /// Block-cipher / PRF block evaluations.
    pub prf: u64,
    pub uh: u64,
    pub hash: u64,
}

impl Sub for CallCounts {
    type Output = CallCounts;

    fn sub(self, rhs: Self) -> Self {
        CallCounts {
            prf: self.prf - rhs.prf,
            uh: self.uh - rhs.uh,
            hash: self.hash - rhs.hash,
        }
    }
}

pub fn snapshot() -> CallCounts {
    CallCounts {
        prf: PRF.with(Cell::get),
        uh: UH.with(Cell::get),
        hash: HASH.with(Cell::get),
    }
}

/// Runs `f` and returns its result along with the calls it made.
pub fn measure<T>(f: impl FnOnce() -> T) -> (T, CallCounts) {
    let before = snapshot();
    let out = f();
    (out, snapshot() - before)
}

pub(crate) fn add_prf(n: u64) {
    PRF.with(|c| c.set(c.get() + n));
}

pub(crate) fn add_uh(n: u64) {
    UH.with(|c| c.set(c.get() + n));
}

pub(crate) fn add_hash(n: u64) {
    HASH.with(|c| c.set(c.get() + n));
}
