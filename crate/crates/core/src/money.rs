//! Exact money arithmetic.
//!
//! Prices are held as integer nanodollars per 1K tokens and spend as integer
//! picodollars, so ledgers and report totals are exact and independent of
//! summation order. Conversion to `f64` dollars happens only at the edges.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

const NANO_PER_DOLLAR: u64 = 1_000_000_000;
const PICO_PER_DOLLAR: f64 = 1e12;
const PRICE_DECIMALS: usize = 9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PriceError {
    #[error("invalid price {0:?}: expected a non-negative decimal such as \"0.0004\"")]
    Syntax(String),
    #[error("price {0:?} has more than {PRICE_DECIMALS} decimal places")]
    Precision(String),
    #[error("price {0:?} is out of range")]
    Range(String),
}

/// Price in dollars per 1K tokens, stored as integer nanodollars.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Price(u64);

impl Price {
    pub const ZERO: Price = Price(0);

    pub fn from_nanodollars(nanos: u64) -> Self {
        Price(nanos)
    }

    pub fn nanodollars(self) -> u64 {
        self.0
    }

    /// Rounds a floating dollar amount to the nearest nanodollar.
    pub fn from_dollars(dollars: f64) -> Result<Self, PriceError> {
        if !dollars.is_finite() || dollars < 0.0 {
            return Err(PriceError::Range(dollars.to_string()));
        }
        let nanos = (dollars * NANO_PER_DOLLAR as f64).round();
        if nanos > u64::MAX as f64 {
            return Err(PriceError::Range(dollars.to_string()));
        }
        Ok(Price(nanos as u64))
    }

    pub fn as_dollars(self) -> f64 {
        self.0 as f64 / NANO_PER_DOLLAR as f64
    }

    /// Spend for `tokens` tokens at this price.
    pub fn cost_of(self, tokens: u64) -> Picodollars {
        // nanodollars per 1K tokens == picodollars per token
        Picodollars(self.0.saturating_mul(tokens))
    }
}

impl FromStr for Price {
    type Err = PriceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let (int_part, frac_part) = match t.split_once('.') {
            Some((i, f)) => (i, f),
            None => (t, ""),
        };
        let digits_ok = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
        if (int_part.is_empty() && frac_part.is_empty()) || !digits_ok(int_part) || !digits_ok(frac_part) {
            return Err(PriceError::Syntax(s.to_string()));
        }
        let frac_trimmed = frac_part.trim_end_matches('0');
        if frac_trimmed.len() > PRICE_DECIMALS {
            return Err(PriceError::Precision(s.to_string()));
        }
        let whole: u64 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| PriceError::Range(s.to_string()))?
        };
        let mut frac: u64 = 0;
        for (i, b) in frac_trimmed.bytes().enumerate() {
            frac += u64::from(b - b'0') * 10u64.pow((PRICE_DECIMALS - 1 - i) as u32);
        }
        whole
            .checked_mul(NANO_PER_DOLLAR)
            .and_then(|w| w.checked_add(frac))
            .map(Price)
            .ok_or_else(|| PriceError::Range(s.to_string()))
    }
}

impl fmt::Display for Price {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let whole = self.0 / NANO_PER_DOLLAR;
        let frac = self.0 % NANO_PER_DOLLAR;
        if frac == 0 {
            return write!(f, "{whole}");
        }
        let digits = format!("{frac:09}");
        write!(f, "{whole}.{}", digits.trim_end_matches('0'))
    }
}

impl Serialize for Price {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Price {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Accumulated spend in integer picodollars.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Picodollars(pub u64);

impl Picodollars {
    pub const ZERO: Picodollars = Picodollars(0);

    pub fn as_dollars(self) -> f64 {
        self.0 as f64 / PICO_PER_DOLLAR
    }

    /// Nearest picodollar to a floating dollar amount (negative clamps to zero).
    pub fn from_dollars(dollars: f64) -> Self {
        if dollars.is_nan() || dollars <= 0.0 {
            return Picodollars(0);
        }
        Picodollars((dollars * PICO_PER_DOLLAR).round() as u64)
    }

    /// Average spend per 10,000 queries, in dollars.
    pub fn per_10k(self, n_queries: usize) -> f64 {
        if n_queries == 0 {
            return 0.0;
        }
        // pico / 1e12 * 1e4 / n, folded into one rounding step
        self.0 as f64 / (n_queries as f64 * 1e8)
    }
}

impl Add for Picodollars {
    type Output = Picodollars;
    fn add(self, rhs: Self) -> Self {
        Picodollars(self.0 + rhs.0)
    }
}

impl AddAssign for Picodollars {
    fn add_assign(&mut self, rhs: Self) {
        self.0 += rhs.0;
    }
}

impl Sum for Picodollars {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Picodollars::ZERO, Add::add)
    }
}
