//! Exact time points at microsecond resolution.
//!
//! Operator application compares constraint times against the operator
//! time (`t_j < t` versus `t <= t_j`) and subtracts them. Storing times as
//! integer ticks keeps those comparisons and differences exact.

use std::fmt;
use std::ops::Add;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Ticks per unit of time.
pub const TICKS_PER_UNIT: u64 = 1_000_000;
const FRACTION_DIGITS: usize = 6;

/// A nonnegative time stored as a whole number of microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct TimePoint(u64);

impl TimePoint {
    pub const ZERO: TimePoint = TimePoint(0);

    pub const fn from_ticks(ticks: u64) -> Self {
        TimePoint(ticks)
    }

    pub const fn from_units(units: u64) -> Self {
        TimePoint(units * TICKS_PER_UNIT)
    }

    /// Rounds a real time to the nearest tick.
    pub fn from_f64(t: f64) -> Result<Self> {
        if !t.is_finite() {
            return Err(Error::InvalidTime(format!("{t}")));
        }
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        let ticks = (t * TICKS_PER_UNIT as f64).round();
        if ticks > u64::MAX as f64 {
            return Err(Error::InvalidTime(format!("{t} is too large")));
        }
        Ok(TimePoint(ticks as u64))
    }

    pub const fn ticks(self) -> u64 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / TICKS_PER_UNIT as f64
    }

    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn checked_sub(self, other: TimePoint) -> Option<TimePoint> {
        self.0.checked_sub(other.0).map(TimePoint)
    }
}

impl Add for TimePoint {
    type Output = TimePoint;

    fn add(self, rhs: TimePoint) -> TimePoint {
        TimePoint(self.0 + rhs.0)
    }
}

impl fmt::Display for TimePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let whole = self.0 / TICKS_PER_UNIT;
        let frac = self.0 % TICKS_PER_UNIT;
        if frac == 0 {
            write!(f, "{whole}")
        } else {
            let digits = format!("{frac:06}");
            write!(f, "{whole}.{}", digits.trim_end_matches('0'))
        }
    }
}

impl FromStr for TimePoint {
    type Err = Error;

    /// Parses plain decimals such as `"2"`, `"0.5"` or `"1.000001"`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidTime(format!("{s:?}"));
        let s = s.trim();
        let (whole, frac) = match s.split_once('.') {
            Some((w, f)) => (w, f),
            None => (s, ""),
        };
        if whole.is_empty() && frac.is_empty() {
            return Err(bad());
        }
        if !whole.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        if frac.len() > FRACTION_DIGITS {
            return Err(Error::InvalidTime(format!("{s:?} has more than {FRACTION_DIGITS} fractional digits")));
        }
        let whole: u64 = if whole.is_empty() { 0 } else { whole.parse().map_err(|_| bad())? };
        let mut frac_ticks: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        frac_ticks *= 10u64.pow((FRACTION_DIGITS - frac.len()) as u32);
        whole.checked_mul(TICKS_PER_UNIT).and_then(|w| w.checked_add(frac_ticks)).map(TimePoint).ok_or_else(bad)
    }
}

impl Serialize for TimePoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TimePoint {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
