//! Integer-cent currency amounts.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Neg, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A euro amount stored as whole cents.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Cents(pub i64);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid currency amount {0:?}")]
pub struct ParseCentsError(pub String);

impl Cents {
    pub const ZERO: Cents = Cents(0);

    pub fn from_euros(euros: i64) -> Self {
        Cents(euros * 100)
    }

    pub fn euros(self) -> f64 {
        self.0 as f64 / 100.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl Add for Cents {
    type Output = Cents;
    fn add(self, rhs: Cents) -> Cents {
        Cents(self.0 + rhs.0)
    }
}

impl AddAssign for Cents {
    fn add_assign(&mut self, rhs: Cents) {
        self.0 += rhs.0;
    }
}

impl Sub for Cents {
    type Output = Cents;
    fn sub(self, rhs: Cents) -> Cents {
        Cents(self.0 - rhs.0)
    }
}

impl Neg for Cents {
    type Output = Cents;
    fn neg(self) -> Cents {
        Cents(-self.0)
    }
}

impl Sum for Cents {
    fn sum<I: Iterator<Item = Cents>>(iter: I) -> Cents {
        Cents(iter.map(|c| c.0).sum())
    }
}

/// Renders as a plain decimal euro amount, e.g. `-5.07` or `30.00`.
impl fmt::Display for Cents {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:02}", abs / 100, abs % 100)
    }
}

/// Parses decimal euro strings without going through floating point.
///
/// Accepts an optional sign, an optional leading `€`, and at most two
/// fractional digits.
impl FromStr for Cents {
    type Err = ParseCentsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseCentsError(s.to_string());
        let mut t = s.trim();
        let negative = if let Some(rest) = t.strip_prefix('-') {
            t = rest;
            true
        } else {
            t = t.strip_prefix('+').unwrap_or(t);
            false
        };
        t = t.strip_prefix('€').unwrap_or(t);
        let (whole, frac) = match t.split_once('.') {
            Some((w, f)) => (w, f),
            None => (t, ""),
        };
        if (whole.is_empty() && frac.is_empty())
            || frac.len() > 2
            || !whole.bytes().all(|b| b.is_ascii_digit())
            || !frac.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(err());
        }
        let whole: i64 = if whole.is_empty() {
            0
        } else {
            whole.parse().map_err(|_| err())?
        };
        let frac: i64 = match frac.len() {
            0 => 0,
            1 => frac.parse::<i64>().map_err(|_| err())? * 10,
            _ => frac.parse().map_err(|_| err())?,
        };
        let cents = whole
            .checked_mul(100)
            .and_then(|w| w.checked_add(frac))
            .ok_or_else(err)?;
        Ok(Cents(if negative { -cents } else { cents }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_common_forms() {
        assert_eq!("30".parse::<Cents>().unwrap(), Cents(3000));
        assert_eq!("30.5".parse::<Cents>().unwrap(), Cents(3050));
        assert_eq!("-5.07".parse::<Cents>().unwrap(), Cents(-507));
        assert_eq!("€12.34".parse::<Cents>().unwrap(), Cents(1234));
        assert_eq!(".5".parse::<Cents>().unwrap(), Cents(50));
        assert!("1.234".parse::<Cents>().is_err());
        assert!("abc".parse::<Cents>().is_err());
        assert!("".parse::<Cents>().is_err());
        assert!("-".parse::<Cents>().is_err());
    }

    #[test]
    fn display() {
        assert_eq!(Cents(3000).to_string(), "30.00");
        assert_eq!(Cents(-507).to_string(), "-5.07");
        assert_eq!(Cents(-7).to_string(), "-0.07");
    }

    proptest! {
        #[test]
        fn display_parse_roundtrip(c in -10_000_000i64..10_000_000) {
            prop_assert_eq!(Cents(c).to_string().parse::<Cents>().unwrap(), Cents(c));
        }
    }
}
