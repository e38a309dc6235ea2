//! Exact decimal/rational helpers used at the I/O boundary.
//!
//! Prices and grid steps are parsed from their decimal text form into exact
//! rationals so that grid rounding (half away from zero) is deterministic.
//! E.g. 1.005 on a 0.01 grid must land on level 101; doing the division in
//! f64 yields 100.4999... and the wrong level.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{Signed, ToPrimitive, Zero};

/// Parses a plain decimal literal (optional sign, optional fraction,
/// optional `e`/`E` exponent) into an exact rational.
pub fn parse_decimal(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(pos) => {
            let e: i32 = s[pos + 1..].parse().ok()?;
            (&s[..pos], e)
        }
        None => (s, 0),
    };
    let (sign, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.find('.') {
        Some(pos) => (&digits[..pos], &digits[pos + 1..]),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit())
    {
        return None;
    }
    let mut numer: BigInt = if int_part.is_empty() {
        BigInt::zero()
    } else {
        int_part.parse().ok()?
    };
    let ten = BigInt::from(10);
    for b in frac_part.bytes() {
        numer = numer * &ten + BigInt::from(b - b'0');
    }
    let mut denom = num::pow::pow(ten.clone(), frac_part.len());
    // fold in the exponent
    if exp > 0 {
        numer *= num::pow::pow(ten, exp as usize);
    } else if exp < 0 {
        denom *= num::pow::pow(ten, (-exp) as usize);
    }
    Some(BigRational::new(BigInt::from(sign) * numer, denom))
}

/// Exact rational for an f64 (the binary value, not its decimal print form).
pub fn from_f64(v: f64) -> Option<BigRational> {
    BigRational::from_float(v)
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Nearest grid level of `x` on the grid `step`·Z, ties rounded half away
/// from zero.
pub fn round_to_grid(x: &BigRational, step: &BigRational) -> i64 {
    let r = x / step;
    let floor = r.floor();
    let frac = &r - &floor;
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    let level = if frac > half {
        floor.to_integer() + 1
    } else if frac < half {
        floor.to_integer()
    } else if r.is_negative() {
        // exactly halfway: away from zero
        floor.to_integer()
    } else {
        floor.to_integer() + 1
    };
    level.to_i64().expect("grid level out of i64 range")
}
