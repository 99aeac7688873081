use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul};

use serde::{Serialize, Serializer};

/// Exact non-negative rational `numer / 2^exp`, kept in lowest terms.
///
/// Every closed-form quantity of the distance law has a power-of-two
/// denominator, so identities between them can be checked without
/// tolerances. Arithmetic panics on `u128` overflow; callers bound the
/// exponents (see [`crate::analytic::MAX_EXACT_D`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dyadic {
    numer: u128,
    exp: u32,
}

impl Dyadic {
    pub const ZERO: Dyadic = Dyadic { numer: 0, exp: 0 };
    pub const ONE: Dyadic = Dyadic { numer: 1, exp: 0 };

    pub fn new(numer: u128, exp: u32) -> Self {
        assert!(exp < 128, "dyadic exponent {exp} exceeds u128 range");
        let mut d = Dyadic { numer, exp };
        d.normalize();
        d
    }

    pub fn from_int(n: u128) -> Self {
        Dyadic { numer: n, exp: 0 }
    }

    fn normalize(&mut self) {
        if self.numer == 0 {
            self.exp = 0;
            return;
        }
        let shift = self.numer.trailing_zeros().min(self.exp);
        self.numer >>= shift;
        self.exp -= shift;
    }

    pub fn numer(self) -> u128 {
        self.numer
    }

    /// Denominator exponent: the value is `numer / 2^exp`.
    pub fn exp(self) -> u32 {
        self.exp
    }

    /// Denominator `2^exp`.
    pub fn denom(self) -> u128 {
        1u128 << self.exp
    }

    pub fn to_f64(self) -> f64 {
        // Both conversions are exact or correctly rounded; the scale is a power of two.
        self.numer as f64 * 2f64.powi(-(self.exp as i32))
    }

    pub fn checked_add(self, rhs: Dyadic) -> Option<Dyadic> {
        let exp = self.exp.max(rhs.exp);
        let a = self
            .numer
            .checked_shl(exp - self.exp)
            .filter(|v| v >> (exp - self.exp) == self.numer)?;
        let b = rhs
            .numer
            .checked_shl(exp - rhs.exp)
            .filter(|v| v >> (exp - rhs.exp) == rhs.numer)?;
        Some(Dyadic::new(a.checked_add(b)?, exp))
    }

    pub fn checked_mul(self, rhs: Dyadic) -> Option<Dyadic> {
        let exp = self.exp + rhs.exp;
        let numer = self.numer.checked_mul(rhs.numer)?;
        let mut d = Dyadic { numer, exp };
        d.normalize();
        (d.exp < 128).then_some(d)
    }
}

impl Add for Dyadic {
    type Output = Dyadic;

    fn add(self, rhs: Dyadic) -> Dyadic {
        self.checked_add(rhs).expect("dyadic addition overflow")
    }
}

impl Mul for Dyadic {
    type Output = Dyadic;

    fn mul(self, rhs: Dyadic) -> Dyadic {
        self.checked_mul(rhs).expect("dyadic multiplication overflow")
    }
}

impl std::iter::Sum for Dyadic {
    fn sum<I: Iterator<Item = Dyadic>>(iter: I) -> Dyadic {
        iter.fold(Dyadic::ZERO, Add::add)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        // a/2^x vs b/2^y  <=>  a*2^(m-x) vs b*2^(m-y), compared without overflow.
        let m = self.exp.max(other.exp);
        let (a, sa) = (self.numer, m - self.exp);
        let (b, sb) = (other.numer, m - other.exp);
        let wide = |v: u128, s: u32| -> (u128, u128) {
            if s == 0 {
                (0, v)
            } else {
                (v >> (128 - s), v << s)
            }
        };
        wide(a, sa).cmp(&wide(b, sb))
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp == 0 {
            write!(f, "{}", self.numer)
        } else {
            write!(f, "{}/{}", self.numer, self.denom())
        }
    }
}

impl Serialize for Dyadic {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.to_f64())
    }
}
