//! Simulation time: whole seconds since the simulation epoch.
//!
//! One-second resolution is the finest granularity any modeled behavior
//! needs, and integer time keeps event ordering and replay exact.

use std::fmt;
use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Serialize};

pub const SECS_PER_MINUTE: u64 = 60;
pub const SECS_PER_HOUR: u64 = 3_600;
pub const SECS_PER_DAY: u64 = 86_400;

/// A point in simulated time, in non-negative whole seconds since the epoch.
#[derive(
    Copy, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Debug,
)]
#[serde(transparent)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub fn from_secs(secs: u64) -> Self {
        SimTime(secs)
    }

    pub fn from_hours(hours: u64) -> Self {
        SimTime(hours * SECS_PER_HOUR)
    }

    pub fn from_days(days: u64) -> Self {
        SimTime(days * SECS_PER_DAY)
    }

    pub fn as_secs(self) -> u64 {
        self.0
    }

    /// Day index since the epoch (day 0 starts at t = 0).
    pub fn day(self) -> u64 {
        self.0 / SECS_PER_DAY
    }

    /// Hour of day in `0..24`.
    pub fn hour_of_day(self) -> u32 {
        ((self.0 % SECS_PER_DAY) / SECS_PER_HOUR) as u32
    }

    /// Second of day in `0..86_400`.
    pub fn second_of_day(self) -> u32 {
        (self.0 % SECS_PER_DAY) as u32
    }

    pub fn saturating_sub(self, secs: u64) -> SimTime {
        SimTime(self.0.saturating_sub(secs))
    }
}

impl Add<u64> for SimTime {
    type Output = SimTime;
    fn add(self, secs: u64) -> SimTime {
        SimTime(self.0 + secs)
    }
}

impl AddAssign<u64> for SimTime {
    fn add_assign(&mut self, secs: u64) {
        self.0 += secs;
    }
}

impl Sub<SimTime> for SimTime {
    type Output = u64;
    /// Elapsed seconds between two instants; panics if `rhs` is later.
    fn sub(self, rhs: SimTime) -> u64 {
        self.0 - rhs.0
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.0 % SECS_PER_DAY;
        write!(
            f,
            "d{} {:02}:{:02}:{:02}",
            self.day(),
            s / SECS_PER_HOUR,
            (s % SECS_PER_HOUR) / SECS_PER_MINUTE,
            s % SECS_PER_MINUTE
        )
    }
}

/// Parses a wall-clock string `"HH:MM"` into seconds of day.
pub fn parse_clock(s: &str) -> Result<u32, String> {
    let (h, m) = s
        .split_once(':')
        .ok_or_else(|| format!("clock time `{s}` is not in HH:MM form"))?;
    let h: u32 = h.parse().map_err(|_| format!("bad hour in `{s}`"))?;
    let m: u32 = m.parse().map_err(|_| format!("bad minute in `{s}`"))?;
    if h > 23 || m > 59 {
        return Err(format!("clock time `{s}` out of range"));
    }
    Ok(h * 3_600 + m * 60)
}
