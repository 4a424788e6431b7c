//! Minutes-of-day clock values and time windows.
//!
//! Windows serialize as `"HH:MM-HH:MM"`; parsing also accepts an en dash or
//! an em dash as the separator since itinerary text produced by language
//! models uses all three.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub const MINUTES_PER_DAY: u16 = 1440;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClockError {
    #[error("malformed clock time {0:?} (expected HH:MM)")]
    Time(String),
    #[error("malformed time window {0:?} (expected HH:MM-HH:MM)")]
    Window(String),
    #[error("time window {0} does not end after it starts")]
    Empty(String),
}

/// A minute of the day in `0..=1440`. `24:00` is allowed as an end bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ClockTime(u16);

impl ClockTime {
    pub const MIDNIGHT: ClockTime = ClockTime(0);

    pub fn from_minutes(minutes: u16) -> Option<Self> {
        (minutes <= MINUTES_PER_DAY).then_some(ClockTime(minutes))
    }

    /// Panics when `hour:minute` is not a valid clock reading.
    pub const fn hm(hour: u16, minute: u16) -> Self {
        assert!(minute < 60 && hour * 60 + minute <= MINUTES_PER_DAY);
        ClockTime(hour * 60 + minute)
    }

    pub fn minutes(self) -> u16 {
        self.0
    }

    /// Saturating add clamped to the end of the day.
    pub fn plus(self, minutes: u16) -> Self {
        ClockTime((self.0 + minutes).min(MINUTES_PER_DAY))
    }

    pub fn minus(self, minutes: u16) -> Self {
        ClockTime(self.0.saturating_sub(minutes))
    }

    /// Signed difference `self - earlier` in minutes.
    pub fn since(self, earlier: ClockTime) -> i32 {
        self.0 as i32 - earlier.0 as i32
    }
}

impl fmt::Display for ClockTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}:{:02}", self.0 / 60, self.0 % 60)
    }
}

impl FromStr for ClockTime {
    type Err = ClockError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let err = || ClockError::Time(s.to_string());
        let (h, m) = t.split_once(':').ok_or_else(err)?;
        let h: u16 = h.trim().parse().map_err(|_| err())?;
        let m: u16 = m.trim().parse().map_err(|_| err())?;
        if m >= 60 || h * 60 + m > MINUTES_PER_DAY {
            return Err(err());
        }
        Ok(ClockTime(h * 60 + m))
    }
}

impl Serialize for ClockTime {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ClockTime {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Half-open interval `[start, end)` within one day; `start < end` always.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimeWindow {
    start: ClockTime,
    end: ClockTime,
}

impl TimeWindow {
    pub fn new(start: ClockTime, end: ClockTime) -> Result<Self, ClockError> {
        if start < end {
            Ok(TimeWindow { start, end })
        } else {
            Err(ClockError::Empty(format!("{start}-{end}")))
        }
    }

    /// Panics on an empty window; meant for literals in fixtures and tests.
    pub fn hm(start: (u16, u16), end: (u16, u16)) -> Self {
        TimeWindow::new(ClockTime::hm(start.0, start.1), ClockTime::hm(end.0, end.1))
            .expect("non-empty window literal")
    }

    pub fn start(&self) -> ClockTime {
        self.start
    }

    pub fn end(&self) -> ClockTime {
        self.end
    }

    pub fn duration_minutes(&self) -> u16 {
        self.end.minutes() - self.start.minutes()
    }

    pub fn contains_window(&self, other: &TimeWindow) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn contains(&self, t: ClockTime) -> bool {
        self.start <= t && t < self.end
    }
}

impl fmt::Display for TimeWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.start, self.end)
    }
}

impl FromStr for TimeWindow {
    type Err = ClockError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let normalized = s.replace(['\u{2013}', '\u{2014}'], "-");
        let (a, b) = normalized
            .split_once('-')
            .ok_or_else(|| ClockError::Window(s.to_string()))?;
        let start: ClockTime = a.parse().map_err(|_| ClockError::Window(s.to_string()))?;
        let end: ClockTime = b.parse().map_err(|_| ClockError::Window(s.to_string()))?;
        TimeWindow::new(start, end)
    }
}

impl Serialize for TimeWindow {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TimeWindow {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
