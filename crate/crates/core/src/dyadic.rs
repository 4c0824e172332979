//! Exact probability masses of the form `num / 2^k`.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul};
use std::str::FromStr;

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::{Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("expected a dyadic literal like 3/2^4, 3/16, 1/2 or 1, got {0:?}")]
pub struct ParseDyadicError(pub String);

/// A non-negative dyadic rational `num / 2^k`, kept in canonical form:
/// `num` odd, or `num = 0` with `k = 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DyadicMass {
    num: BigUint,
    k: u32,
}

impl DyadicMass {
    pub fn zero() -> Self {
        Self {
            num: BigUint::zero(),
            k: 0,
        }
    }

    pub fn one() -> Self {
        Self {
            num: BigUint::one(),
            k: 0,
        }
    }

    /// `2^{-k}`.
    pub fn pow2_neg(k: u32) -> Self {
        Self {
            num: BigUint::one(),
            k,
        }
    }

    pub fn new(num: BigUint, k: u32) -> Self {
        let mut m = Self { num, k };
        m.normalize();
        m
    }

    pub fn from_parts(num: u64, k: u32) -> Self {
        Self::new(BigUint::from(num), k)
    }

    fn normalize(&mut self) {
        if self.num.is_zero() {
            self.k = 0;
            return;
        }
        let tz = self.num.trailing_zeros().unwrap_or(0).min(self.k as u64) as u32;
        if tz > 0 {
            self.num >>= tz;
            self.k -= tz;
        }
    }

    pub fn numerator(&self) -> &BigUint {
        &self.num
    }

    pub fn exponent(&self) -> u32 {
        self.k
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Numerator rescaled to denominator `2^k`, `k >= self.k`.
    fn scaled(&self, k: u32) -> BigUint {
        &self.num << (k - self.k)
    }

    /// `self / other` as an exact rational; `None` when `other` is zero.
    pub fn ratio(&self, other: &DyadicMass) -> Option<Ratio<BigUint>> {
        if other.is_zero() {
            return None;
        }
        let k = self.k.max(other.k);
        Some(Ratio::new(self.scaled(k), other.scaled(k)))
    }

    pub fn to_ratio(&self) -> Ratio<BigUint> {
        Ratio::new(self.num.clone(), BigUint::one() << self.k)
    }

    /// Nearest `f64`, for descriptive report columns only.
    pub fn to_f64_lossy(&self) -> f64 {
        let bits = self.num.bits();
        let shift = bits.saturating_sub(60);
        let top = (&self.num >> shift)
            .to_u64_digits()
            .first()
            .copied()
            .unwrap_or(0);
        top as f64 * 2f64.powi(shift as i32 - self.k as i32)
    }
}

impl Default for DyadicMass {
    fn default() -> Self {
        Self::zero()
    }
}

impl Ord for DyadicMass {
    fn cmp(&self, other: &Self) -> Ordering {
        let k = self.k.max(other.k);
        self.scaled(k).cmp(&other.scaled(k))
    }
}

impl PartialOrd for DyadicMass {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add<&DyadicMass> for &DyadicMass {
    type Output = DyadicMass;

    fn add(self, rhs: &DyadicMass) -> DyadicMass {
        let k = self.k.max(rhs.k);
        DyadicMass::new(self.scaled(k) + rhs.scaled(k), k)
    }
}

impl Add for DyadicMass {
    type Output = DyadicMass;

    fn add(self, rhs: DyadicMass) -> DyadicMass {
        &self + &rhs
    }
}

impl AddAssign<&DyadicMass> for DyadicMass {
    fn add_assign(&mut self, rhs: &DyadicMass) {
        *self = &*self + rhs;
    }
}

impl Mul<&DyadicMass> for &DyadicMass {
    type Output = DyadicMass;

    fn mul(self, rhs: &DyadicMass) -> DyadicMass {
        DyadicMass::new(&self.num * &rhs.num, self.k + rhs.k)
    }
}

impl<'a> Sum<&'a DyadicMass> for DyadicMass {
    fn sum<I: Iterator<Item = &'a DyadicMass>>(iter: I) -> Self {
        iter.fold(DyadicMass::zero(), |acc, m| &acc + m)
    }
}

impl Sum for DyadicMass {
    fn sum<I: Iterator<Item = DyadicMass>>(iter: I) -> Self {
        iter.fold(DyadicMass::zero(), |acc, m| &acc + &m)
    }
}

/// Prints as `num/2^k`.
impl fmt::Display for DyadicMass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.num, self.k)
    }
}

impl Serialize for DyadicMass {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Accepts `num/2^k`, `num/den` with `den` a power of two, or a bare integer.
impl FromStr for DyadicMass {
    type Err = ParseDyadicError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseDyadicError(s.to_string());
        let t = s.trim();
        let Some((n, d)) = t.split_once('/') else {
            return t
                .parse::<BigUint>()
                .map(|n| DyadicMass::new(n, 0))
                .map_err(|_| err());
        };
        let num = n.trim().parse::<BigUint>().map_err(|_| err())?;
        let d = d.trim();
        let k = if let Some(exp) = d.strip_prefix("2^") {
            exp.parse::<u32>().map_err(|_| err())?
        } else {
            let den = d.parse::<BigUint>().map_err(|_| err())?;
            if den.is_zero() || den.count_ones() != 1 {
                return Err(err());
            }
            (den.bits() - 1) as u32
        };
        Ok(DyadicMass::new(num, k))
    }
}
