use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Sub};
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};

use super::NotationError;

/// Ticks per quarter note on the note-level grid.
pub const TICKS_PER_QUARTER: u32 = 24;

/// An exact length measured in quarter notes, always in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Duration(Ratio<u32>);

impl Duration {
    pub const ZERO: Duration = Duration(Ratio::new_raw(0, 1));
    pub const QUARTER: Duration = Duration(Ratio::new_raw(1, 1));

    pub fn new(numer: u32, denom: u32) -> Option<Duration> {
        if denom == 0 {
            return None;
        }
        Some(Duration(Ratio::new(numer, denom)))
    }

    pub fn quarters(n: u32) -> Duration {
        Duration(Ratio::from_integer(n))
    }

    pub fn numer(&self) -> u32 {
        *self.0.numer()
    }

    pub fn denom(&self) -> u32 {
        *self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// Exact length in grid ticks, or `None` if it falls between ticks.
    pub fn ticks(&self) -> Option<u32> {
        let t = self.0 * TICKS_PER_QUARTER;
        t.is_integer().then(|| t.to_integer())
    }

    pub fn from_ticks(ticks: u32) -> Duration {
        Duration(Ratio::new(ticks, TICKS_PER_QUARTER))
    }

    pub fn checked_sub(self, rhs: Duration) -> Option<Duration> {
        (self >= rhs).then(|| Duration(self.0 - rhs.0))
    }

    pub fn as_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// The closed set of notated lengths admitted by the token vocabulary:
    /// plain, dotted, double-dotted and triplet values that land on the
    /// 24-per-quarter grid and do not exceed a whole note. Ascending.
    pub fn vocabulary() -> Vec<Duration> {
        let bases = [
            (4, 1),
            (2, 1),
            (1, 1),
            (1, 2),
            (1, 4),
            (1, 8),
            (1, 16),
        ];
        let modifiers = [(1, 1), (3, 2), (7, 4), (2, 3)];
        let limit = Duration::quarters(4);
        let mut out: Vec<Duration> = bases
            .iter()
            .flat_map(|&(bn, bd)| {
                modifiers
                    .iter()
                    .filter_map(move |&(mn, md)| Duration::new(bn * mn, bd * md))
            })
            .filter(|d| *d <= limit && d.ticks().is_some())
            .collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn in_vocabulary(&self) -> bool {
        Duration::vocabulary().binary_search(self).is_ok()
    }

    /// Split a length into vocabulary values, largest first. Used to pad
    /// voices with rests. Returns `None` when the length is off the grid.
    pub fn decompose(self) -> Option<Vec<Duration>> {
        self.ticks()?;
        let vocab = Duration::vocabulary();
        let mut remaining = self;
        let mut parts = Vec::new();
        while !remaining.is_zero() {
            let part = *vocab.iter().rev().find(|d| **d <= remaining)?;
            parts.push(part);
            remaining = remaining.checked_sub(part)?;
        }
        Some(parts)
    }
}

impl Add for Duration {
    type Output = Duration;
    fn add(self, rhs: Duration) -> Duration {
        Duration(self.0 + rhs.0)
    }
}

impl AddAssign for Duration {
    fn add_assign(&mut self, rhs: Duration) {
        self.0 = self.0 + rhs.0;
    }
}

impl Sub for Duration {
    type Output = Duration;
    /// Panics on underflow; use [`Duration::checked_sub`] otherwise.
    fn sub(self, rhs: Duration) -> Duration {
        self.checked_sub(rhs).expect("duration underflow")
    }
}

impl Sum for Duration {
    fn sum<I: Iterator<Item = Duration>>(iter: I) -> Duration {
        iter.fold(Duration::ZERO, |a, b| a + b)
    }
}

impl fmt::Display for Duration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom() == 1 {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl FromStr for Duration {
    type Err = NotationError;

    /// Accepts the canonical rendering only (`3/2`, `1`), so the textual
    /// form of every duration is unique.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || NotationError::DurationSyntax(s.to_string());
        let canonical_int = |t: &str| -> Option<u32> {
            if t.is_empty() || (t.len() > 1 && t.starts_with('0')) || !t.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            t.parse().ok()
        };
        let d = match s.split_once('/') {
            None => Duration::quarters(canonical_int(s).ok_or_else(bad)?),
            Some((n, d)) => {
                let n = canonical_int(n).ok_or_else(bad)?;
                let d = canonical_int(d).ok_or_else(bad)?;
                Duration::new(n, d).ok_or_else(bad)?
            }
        };
        if d.to_string() != s {
            return Err(bad());
        }
        Ok(d)
    }
}
