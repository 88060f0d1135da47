//! Simulated time in integer nanoseconds.

use std::fmt;
use std::ops::{Add, AddAssign, Sub};

/// A point in simulated time (or a duration), in nanoseconds since the start
/// of the run. Integer representation keeps event ordering bit-identical
/// across platforms.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);
    pub const MAX: SimTime = SimTime(u64::MAX);

    pub const fn from_nanos(ns: u64) -> Self {
        SimTime(ns)
    }

    pub const fn from_micros(us: u64) -> Self {
        SimTime(us * 1_000)
    }

    pub const fn from_millis(ms: u64) -> Self {
        SimTime(ms * 1_000_000)
    }

    /// Rounds to the nearest nanosecond. Negative and NaN inputs map to zero.
    pub fn from_secs_f64(secs: f64) -> Self {
        if secs.is_nan() || secs <= 0.0 {
            return SimTime::ZERO;
        }
        let ns = (secs * 1e9).round();
        if ns >= u64::MAX as f64 {
            SimTime::MAX
        } else {
            SimTime(ns as u64)
        }
    }

    pub const fn as_nanos(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1e9
    }

    /// Time needed to clock `bytes` onto a link of `bandwidth_bps`, rounded
    /// up to the next nanosecond.
    pub fn serialization(bytes: u32, bandwidth_bps: f64) -> Self {
        let ns = (bytes as f64 * 8.0 * 1e9 / bandwidth_bps).ceil();
        SimTime(ns as u64)
    }

    pub fn saturating_sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(rhs.0))
    }

    pub fn checked_sub(self, rhs: SimTime) -> Option<SimTime> {
        self.0.checked_sub(rhs.0).map(SimTime)
    }

    pub fn min(self, rhs: SimTime) -> SimTime {
        if self <= rhs {
            self
        } else {
            rhs
        }
    }
}

impl Add for SimTime {
    type Output = SimTime;

    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_add(rhs.0))
    }
}

impl AddAssign for SimTime {
    fn add_assign(&mut self, rhs: SimTime) {
        *self = *self + rhs;
    }
}

impl Sub for SimTime {
    type Output = SimTime;

    /// Panics on underflow in debug builds, like integer subtraction.
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.9}s", self.as_secs_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serialization_times() {
        assert_eq!(SimTime::serialization(1040, 50e6), SimTime::from_nanos(166_400));
        assert_eq!(SimTime::serialization(160, 50e6), SimTime::from_nanos(25_600));
        assert_eq!(SimTime::serialization(1040, 10e6), SimTime::from_micros(832));
    }

    #[test]
    fn seconds_round_trip() {
        assert_eq!(SimTime::from_secs_f64(0.0101664).as_nanos(), 10_166_400);
        assert_eq!(SimTime::from_secs_f64(-1.0), SimTime::ZERO);
        assert_eq!(SimTime::from_millis(10).as_secs_f64(), 0.01);
    }

    #[test]
    fn ordering_is_total_and_exact() {
        let mut v = vec![
            (SimTime::from_nanos(5), 2u64),
            (SimTime::from_nanos(3), 9),
            (SimTime::from_nanos(5), 1),
        ];
        v.sort();
        assert_eq!(
            v,
            vec![
                (SimTime::from_nanos(3), 9),
                (SimTime::from_nanos(5), 1),
                (SimTime::from_nanos(5), 2)
            ]
        );
    }
}
