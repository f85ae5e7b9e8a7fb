//! Exact fractions for tableau coefficients.
//!
//! Values are stored reduced with a positive denominator. Every operation is
//! carried out in 128-bit intermediates and reduced before narrowing back to
//! 64 bits; the `checked_*` methods report overflow, the operator impls panic
//! on it the way integer overflow does in debug builds.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rational {
    num: i64,
    den: i64,
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Rational {
    pub const ZERO: Rational = Rational { num: 0, den: 1 };
    pub const ONE: Rational = Rational { num: 1, den: 1 };
    pub const HALF: Rational = Rational { num: 1, den: 2 };

    /// Builds `num/den` in lowest terms. Fails on a zero denominator or if
    /// the reduced value does not fit 64-bit parts.
    pub fn new(num: i64, den: i64) -> Result<Self> {
        Self::from_i128(num as i128, den as i128)
    }

    pub fn integer(n: i64) -> Self {
        Self { num: n, den: 1 }
    }

    fn from_i128(num: i128, den: i128) -> Result<Self> {
        if den == 0 {
            return Err(Error::RationalOverflow);
        }
        let g = gcd(num, den).max(1);
        let (mut n, mut d) = (num / g, den / g);
        if d < 0 {
            n = -n;
            d = -d;
        }
        match (i64::try_from(n), i64::try_from(d)) {
            (Ok(num), Ok(den)) => Ok(Self { num, den }),
            _ => Err(Error::RationalOverflow),
        }
    }

    pub fn numer(&self) -> i64 {
        self.num
    }

    pub fn denom(&self) -> i64 {
        self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn abs(self) -> Self {
        Self {
            num: self.num.abs(),
            den: self.den,
        }
    }

    pub fn checked_add(self, rhs: Self) -> Result<Self> {
        let (a, b, c, d) = self.wide(rhs);
        Self::from_i128(a * d + c * b, b * d)
    }

    pub fn checked_sub(self, rhs: Self) -> Result<Self> {
        let (a, b, c, d) = self.wide(rhs);
        Self::from_i128(a * d - c * b, b * d)
    }

    pub fn checked_mul(self, rhs: Self) -> Result<Self> {
        let (a, b, c, d) = self.wide(rhs);
        Self::from_i128(a * c, b * d)
    }

    /// Division by zero is reported as overflow.
    pub fn checked_div(self, rhs: Self) -> Result<Self> {
        let (a, b, c, d) = self.wide(rhs);
        Self::from_i128(a * d, b * c)
    }

    fn wide(self, rhs: Self) -> (i128, i128, i128, i128) {
        (
            self.num as i128,
            self.den as i128,
            rhs.num as i128,
            rhs.den as i128,
        )
    }
}

impl Default for Rational {
    fn default() -> Self {
        Self::ZERO
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, c, d) = self.wide(*other);
        (a * d).cmp(&(c * b))
    }
}

macro_rules! panicking_op {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl $trait for Rational {
            type Output = Rational;

            fn $method(self, rhs: Rational) -> Rational {
                self.$checked(rhs)
                    .unwrap_or_else(|_| panic!("rational overflow in {}", stringify!($method)))
            }
        }
    };
}

panicking_op!(Add, add, checked_add);
panicking_op!(Sub, sub, checked_sub);
panicking_op!(Mul, mul, checked_mul);
panicking_op!(Div, div, checked_div);

impl Neg for Rational {
    type Output = Rational;

    fn neg(self) -> Rational {
        Rational {
            num: self.num.checked_neg().expect("rational overflow in neg"),
            den: self.den,
        }
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Self::integer(n)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// Parses `p/q`, an integer, or a plain decimal such as `-0.25` (read exactly,
/// so `0.6` is `3/5`).
impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::ParseRational(s.to_string());
        let t = s.trim();
        if let Some((n, d)) = t.split_once('/') {
            let n: i64 = n.trim().parse().map_err(|_| bad())?;
            let d: i64 = d.trim().parse().map_err(|_| bad())?;
            if d == 0 {
                return Err(bad());
            }
            return Rational::new(n, d);
        }
        let (neg, body) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t.strip_prefix('+').unwrap_or(t)),
        };
        let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
        if (int_part.is_empty() && frac_part.is_empty())
            || !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit())
        {
            return Err(bad());
        }
        let digits = format!("{int_part}{frac_part}");
        let num: i128 = if digits.is_empty() { 0 } else { digits.parse().map_err(|_| bad())? };
        let scale = u32::try_from(frac_part.len())
            .ok()
            .and_then(|e| 10i128.checked_pow(e))
            .ok_or_else(bad)?;
        let r = Rational::from_i128(if neg { -num } else { num }, scale)?;
        Ok(r)
    }
}
