use std::fmt;
use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Serialize};

/// Simulated time or duration in integer nanoseconds.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub const fn from_nanos(ns: u64) -> Self {
        SimTime(ns)
    }

    pub const fn as_nanos(self) -> u64 {
        self.0
    }

    pub fn saturating_sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(rhs.0))
    }
}

impl Add for SimTime {
    type Output = SimTime;

    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl AddAssign for SimTime {
    fn add_assign(&mut self, rhs: SimTime) {
        self.0 += rhs.0;
    }
}

impl Sub for SimTime {
    type Output = SimTime;

    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ns", self.0)
    }
}

/// Ceiling of a non-negative nanosecond quantity computed in floating point.
///
/// Values within a few ulps of an integer snap to it, so that a quotient
/// that is exact in rational arithmetic (8e6 bits over 1024/130 Gb/s) does
/// not pick up a spurious extra nanosecond from rounding in the last place.
pub(crate) fn ceil_ns(x: f64) -> u64 {
    debug_assert!(x.is_finite() && x >= 0.0);
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-9 + x * 1e-12 {
        nearest as u64
    } else {
        x.ceil() as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ceil_snaps_float_noise() {
        assert_eq!(ceil_ns(1_015_625.000_000_000_1), 1_015_625);
        assert_eq!(ceil_ns(1_120_448.18), 1_120_449);
        assert_eq!(ceil_ns(0.0), 0);
        assert_eq!(ceil_ns(0.4), 1);
    }
}
