//! Numeric abstraction for costs and similarity scores.
//!
//! Costs and proximities are carried by a [`Scalar`], so the engine runs with
//! exact rationals ([`crate::Rational`]) by default and with `f64`/`f32` when
//! speed matters more than exactness.

use std::cmp::Ordering;
use std::fmt;

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, ToPrimitive};

/// Numeric value used for costs and similarity measures.
pub trait Scalar:
    Num + Clone + PartialOrd + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    /// Builds `num / den`. `den` must be non-zero.
    fn from_ratio(num: i64, den: i64) -> Self;

    /// Parses a decimal or `p/q` literal.
    fn parse_scalar(text: &str) -> Option<Self>;

    fn to_f64_lossy(&self) -> f64;

    /// Total order; incomparable values (NaN) sort as equal.
    fn total_cmp(&self, other: &Self) -> Ordering {
        self.partial_cmp(other).unwrap_or(Ordering::Equal)
    }

    fn from_count(n: usize) -> Self {
        Self::from_ratio(n as i64, 1)
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b.total_cmp(&a) == Ordering::Less {
            b
        } else {
            a
        }
    }
}

macro_rules! float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn from_ratio(num: i64, den: i64) -> Self {
                num as $t / den as $t
            }

            fn parse_scalar(text: &str) -> Option<Self> {
                let text = text.trim();
                if let Some((n, d)) = text.split_once('/') {
                    let n: $t = n.trim().parse().ok()?;
                    let d: $t = d.trim().parse().ok()?;
                    if d == 0.0 {
                        return None;
                    }
                    return Some(n / d);
                }
                text.parse().ok().filter(|v: &$t| v.is_finite())
            }

            fn to_f64_lossy(&self) -> f64 {
                *self as f64
            }

            fn total_cmp(&self, other: &Self) -> Ordering {
                <$t>::total_cmp(self, other)
            }
        }
    };
}

float_scalar!(f32);
float_scalar!(f64);

impl Scalar for Ratio<i64> {
    fn from_ratio(num: i64, den: i64) -> Self {
        Ratio::new(num, den)
    }

    fn parse_scalar(text: &str) -> Option<Self> {
        let text = text.trim();
        if let Some((n, d)) = text.split_once('/') {
            let n: i64 = n.trim().parse().ok()?;
            let d: i64 = d.trim().parse().ok()?;
            if d == 0 {
                return None;
            }
            return Some(Ratio::new(n, d));
        }
        if let Ok(n) = text.parse::<i64>() {
            return Some(Ratio::from_integer(n));
        }
        // Decimal literal: exact conversion of the written digits.
        let (int_part, frac_part) = text.split_once('.')?;
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let negative = int_part.starts_with('-');
        let int_val: i64 = if int_part.is_empty() || int_part == "-" {
            0
        } else {
            int_part.parse().ok()?
        };
        let scale = 10i64.checked_pow(frac_part.len() as u32)?;
        let frac_val: i64 = frac_part.parse().ok()?;
        let magnitude = int_val.abs().checked_mul(scale)?.checked_add(frac_val)?;
        let num = if negative { -magnitude } else { magnitude };
        Some(Ratio::new(num, scale))
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or_else(|| {
            f64::from_i64(*self.numer()).unwrap_or(f64::NAN)
                / f64::from_i64(*self.denom()).unwrap_or(f64::NAN)
        })
    }

    fn total_cmp(&self, other: &Self) -> Ordering {
        self.cmp(other)
    }
}

/// Sums an iterator of scalars.
pub fn sum<S: Scalar>(items: impl IntoIterator<Item = S>) -> S {
    items.into_iter().fold(S::zero(), |acc, x| acc + x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    #[test]
    fn rational_parsing_is_exact() {
        assert_eq!(Rational::parse_scalar("3"), Some(Rational::from_integer(3)));
        assert_eq!(Rational::parse_scalar("7/9"), Some(Rational::new(7, 9)));
        assert_eq!(Rational::parse_scalar("0.25"), Some(Rational::new(1, 4)));
        assert_eq!(Rational::parse_scalar("-1.5"), Some(Rational::new(-3, 2)));
        assert_eq!(Rational::parse_scalar("1/0"), None);
        assert_eq!(Rational::parse_scalar("abc"), None);
    }

    #[test]
    fn float_parsing() {
        assert_eq!(f64::parse_scalar("0.5"), Some(0.5));
        assert_eq!(f64::parse_scalar("1/4"), Some(0.25));
        assert_eq!(f64::parse_scalar("inf"), None);
    }

    #[test]
    fn min_and_order() {
        let a = Rational::new(1, 3);
        let b = Rational::new(1, 2);
        assert_eq!(Rational::min_of(a, b), a);
        assert_eq!(f64::min_of(2.0, 1.0), 1.0);
        assert_eq!(sum([a, b]), Rational::new(5, 6));
    }
}
