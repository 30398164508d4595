//! Exact arbitrary-precision scalars and exact interval arithmetic.
//!
//! Every scalar in this crate is a [`Rational`] in canonical reduced form
//! (positive denominator, gcd of numerator and denominator equal to one), and
//! every quantity defined by an infinite series is represented by an
//! [`Enclosure`], a closed rational interval guaranteed to contain it.
//! Interval arithmetic here is exact: endpoints are rationals and no rounding
//! ever occurs, so an enclosure computed from sound inputs is itself sound.

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use std::cmp::Ordering;

/// Exact rational scalar; canonical form is maintained by construction.
pub type Rational = num_rational::BigRational;

/// Build a rational from numerator and denominator, reducing and normalizing
/// the sign. A zero denominator is rejected.
pub fn make_rational(num: BigInt, den: BigInt) -> Result<Rational> {
    if den.is_zero() {
        return Err(Error::InvalidArgument(
            "denominator must be nonzero".into(),
        ));
    }
    Ok(Rational::new(num, den))
}

/// Integer-valued rational.
pub fn rational_int(n: impl Into<BigInt>) -> Rational {
    Rational::from_integer(n.into())
}

/// Round `n / d` (requires `d > 0`) to the nearest integer, ties to even.
pub fn round_div_half_even(n: &BigInt, d: &BigInt) -> BigInt {
    debug_assert!(d.is_positive());
    let (q, r) = n.div_mod_floor(d);
    match (r * BigInt::from(2)).cmp(d) {
        Ordering::Less => q,
        Ordering::Greater => q + 1,
        Ordering::Equal => {
            if q.is_even() {
                q
            } else {
                q + 1
            }
        }
    }
}

/// The integer minimizing `|x - m|`; exact half ties round to even.
pub fn nearest_integer(x: &Rational) -> BigInt {
    round_div_half_even(x.numer(), x.denom())
}

/// `ceil(a / b)` for `b > 0`.
pub fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    debug_assert!(b.is_positive());
    let (q, r) = a.div_mod_floor(b);
    if r.is_zero() {
        q
    } else {
        q + 1
    }
}

/// A closed rational interval `[lo, hi]` certifying a real value.
///
/// All operations return intervals that contain the exact image of the
/// operation applied to any points of the inputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Enclosure {
    pub lo: Rational,
    pub hi: Rational,
}

impl Enclosure {
    pub fn new(lo: Rational, hi: Rational) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidArgument(format!(
                "enclosure endpoints out of order: {} > {}",
                lo, hi
            )));
        }
        Ok(Enclosure { lo, hi })
    }

    /// Degenerate interval `[x, x]`.
    pub fn point(x: Rational) -> Self {
        Enclosure { lo: x.clone(), hi: x }
    }

    pub fn zero() -> Self {
        Enclosure::point(Rational::zero())
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, x: &Rational) -> bool {
        self.lo <= *x && *x <= self.hi
    }

    /// True when `self` is a subinterval of `other`.
    pub fn inside(&self, other: &Enclosure) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn add(&self, other: &Enclosure) -> Enclosure {
        Enclosure {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
        }
    }

    pub fn add_rational(&self, x: &Rational) -> Enclosure {
        Enclosure {
            lo: &self.lo + x,
            hi: &self.hi + x,
        }
    }

    pub fn neg(&self) -> Enclosure {
        Enclosure {
            lo: -self.hi.clone(),
            hi: -self.lo.clone(),
        }
    }

    /// Multiply by an exact scalar; a negative scalar flips the endpoints.
    pub fn scale(&self, c: &Rational) -> Enclosure {
        if c.is_negative() {
            Enclosure {
                lo: &self.hi * c,
                hi: &self.lo * c,
            }
        } else {
            Enclosure {
                lo: &self.lo * c,
                hi: &self.hi * c,
            }
        }
    }

    /// Absolute value; an interval spanning zero maps to `[0, max(|lo|, hi)]`.
    pub fn abs(&self) -> Enclosure {
        if !self.lo.is_negative() {
            self.clone()
        } else if !self.hi.is_positive() {
            self.neg()
        } else {
            let mag = std::cmp::max(-self.lo.clone(), self.hi.clone());
            Enclosure {
                lo: Rational::zero(),
                hi: mag,
            }
        }
    }

    /// Product of two intervals with nonnegative lower endpoints.
    pub fn mul_nonneg(&self, other: &Enclosure) -> Enclosure {
        debug_assert!(!self.lo.is_negative() && !other.lo.is_negative());
        Enclosure {
            lo: &self.lo * &other.lo,
            hi: &self.hi * &other.hi,
        }
    }

    /// Divide by an interval with a strictly positive lower endpoint.
    pub fn div_pos(&self, d: &Enclosure) -> Result<Enclosure> {
        if !d.lo.is_positive() {
            return Err(Error::InvalidArgument(
                "division requires a strictly positive divisor interval".into(),
            ));
        }
        let lo = std::cmp::min(&self.lo / &d.lo, &self.lo / &d.hi);
        let hi = std::cmp::max(&self.hi / &d.lo, &self.hi / &d.hi);
        Ok(Enclosure { lo, hi })
    }
}

/// Exact `p/q` rendering with an explicit denominator, `-33/256` style.
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parse `p/q` or a plain integer. Decimal literals are rejected so the
/// exactness contract stays visible at every boundary.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if s.contains('.') || s.contains('e') || s.contains('E') {
        return Err(Error::InvalidArgument(format!(
            "'{}' looks like a decimal literal; pass an exact fraction p/q",
            s
        )));
    }
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let num: BigInt = num
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("cannot parse '{}' as an integer", num)))?;
    let den: BigInt = den
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("cannot parse '{}' as an integer", den)))?;
    make_rational(num, den)
}

/// Parse a decimal integer string (the on-disk format for all big integers).
pub fn parse_integer(s: &str) -> Result<BigInt> {
    s.trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("cannot parse '{}' as an integer", s)))
}

/// Decimal rendering of `r` with `sig` significant digits, rounded toward
/// negative infinity. Suitable for the lower endpoint of an enclosure.
pub fn decimal_lower(r: &Rational, sig: u32) -> String {
    decimal_directed(r, sig, false)
}

/// Decimal rendering rounded toward positive infinity (upper endpoints).
pub fn decimal_upper(r: &Rational, sig: u32) -> String {
    decimal_directed(r, sig, true)
}

fn decimal_directed(r: &Rational, sig: u32, round_up: bool) -> String {
    assert!(sig >= 1);
    if r.is_zero() {
        return "0".into();
    }
    let mut e = floor_log10_abs(r);
    // mantissa = r * 10^(sig-1-e), rounded toward the requested direction
    let shift = sig as i64 - 1 - e;
    let ten = BigInt::from(10);
    let mut num = r.numer().clone();
    let mut den = r.denom().clone();
    if shift >= 0 {
        num *= ten.pow(shift as u32);
    } else {
        den *= ten.pow((-shift) as u32);
    }
    let mut m = if round_up {
        ceil_div(&num, &den)
    } else {
        num.div_floor(&den)
    };
    // rounding outward can carry into one more digit
    let cap = ten.pow(sig);
    if m.abs() == cap {
        m /= 10;
        e += 1;
    }
    let digits = m.abs().to_string();
    debug_assert_eq!(digits.len(), sig as usize);
    let sign = if m.is_negative() { "-" } else { "" };
    format!("{}{}.{}e{}", sign, &digits[..1], &digits[1..], e)
}

/// Largest `e` with `10^e <= |r|`; requires `r != 0`.
fn floor_log10_abs(r: &Rational) -> i64 {
    let p = r.numer().abs();
    let q = r.denom().clone();
    let dp = p.to_string().len() as i64;
    let dq = q.to_string().len() as i64;
    let ten = BigInt::from(10);
    // |r| is within a factor of 10 of 10^(dp-dq); settle by exact comparison
    let mut e = dp - dq;
    let ge = |e: i64| -> bool {
        if e >= 0 {
            p >= &q * ten.pow(e as u32)
        } else {
            &p * ten.pow((-e) as u32) >= q
        }
    };
    if ge(e + 1) {
        e += 1;
    } else if !ge(e) {
        e -= 1;
    }
    debug_assert!(ge(e) && !ge(e + 1));
    e
}
