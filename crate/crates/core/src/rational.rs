//! Exact rationals and the small numeric trait shared by the exact and float solvers.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num::{BigInt, BigRational, Integer, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Parses "p/q", an integer, or an exact decimal such as "0.125" or "1e-3".
pub fn parse_q(s: &str) -> Result<Q> {
    let t = s.trim();
    let bad = || Error::Parse(format!("not a rational: {s:?}"));
    if t.is_empty() {
        return Err(bad());
    }
    if let Some((a, b)) = t.split_once('/') {
        let n: BigInt = a.trim().parse().map_err(|_| bad())?;
        let d: BigInt = b.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(Q::new(n, d));
    }
    let (mant, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (neg, body) = match mant.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let mut n: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().map_err(|_| bad())? };
    if neg {
        n = -n;
    }
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    Ok(if scale >= 0 {
        Q::from_integer(n * num::pow(ten, scale as usize))
    } else {
        Q::new(n, num::pow(ten, (-scale) as usize))
    })
}

/// Always "p/q", including integers ("2/1") so every emitted number parses the same way.
pub fn fmt_q(x: &Q) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

fn pow10(k: usize) -> BigInt {
    num::pow(BigInt::from(10), k)
}

fn round_div(a: &BigInt, b: &BigInt) -> BigInt {
    // a, b > 0; half rounds up
    Integer::div_floor(&(a * 2 + b), &(b * 2))
}

/// Correctly rounded decimal with `sig` significant digits.
pub fn to_decimal(x: &Q, sig: usize) -> String {
    if x.is_zero() {
        return "0".into();
    }
    let sig = sig.max(1);
    let neg = x.is_negative();
    let a = x.numer().abs();
    let b = x.denom().clone();
    let mut e = a.to_string().len() as i64 - b.to_string().len() as i64;
    // settle e with 10^e <= a/b < 10^(e+1)
    loop {
        let (lo_n, lo_d) = if e >= 0 { (pow10(e as usize) * &b, BigInt::one()) } else { (b.clone(), pow10((-e) as usize)) };
        if a.clone() * &lo_d < lo_n {
            e -= 1;
            continue;
        }
        let (hi_n, hi_d) = if e + 1 >= 0 {
            (pow10((e + 1) as usize) * &b, BigInt::one())
        } else {
            (b.clone(), pow10((-(e + 1)) as usize))
        };
        if a.clone() * &hi_d >= hi_n {
            e += 1;
            continue;
        }
        break;
    }
    let shift = sig as i64 - 1 - e;
    let mut digits = if shift >= 0 {
        round_div(&(a * pow10(shift as usize)), &b)
    } else {
        round_div(&a, &(b * pow10((-shift) as usize)))
    };
    if digits == pow10(sig) {
        digits = pow10(sig - 1);
        e += 1;
    }
    let ds = digits.to_string();
    let sign = if neg { "-" } else { "" };
    if e < -5 || e >= sig as i64 {
        let mut mant = ds[..1].to_string();
        let rest = ds[1..].trim_end_matches('0');
        if !rest.is_empty() {
            mant.push('.');
            mant.push_str(rest);
        }
        return format!("{sign}{mant}e{e}");
    }
    let s = if e >= 0 {
        let k = (e + 1) as usize;
        let (ip, fp) = ds.split_at(k);
        let fp = fp.trim_end_matches('0');
        if fp.is_empty() { ip.to_string() } else { format!("{ip}.{fp}") }
    } else {
        let zeros = "0".repeat((-e - 1) as usize);
        format!("0.{zeros}{}", ds.trim_end_matches('0'))
    };
    format!("{sign}{s}")
}

/// sqrt(x) truncated to `places` digits after the point. `x` must be nonnegative.
pub fn sqrt_decimal(x: &Q, places: usize) -> String {
    assert!(!x.is_negative(), "sqrt of a negative rational");
    let scaled = (x.numer() * pow10(2 * places)).div_floor(x.denom());
    let r = scaled.sqrt();
    let s = format!("{:0>width$}", r.to_string(), width = places + 1);
    let (ip, fp) = s.split_at(s.len() - places);
    if places == 0 { ip.to_string() } else { format!("{ip}.{fp}") }
}

pub fn q_to_f64(x: &Q) -> f64 {
    ToPrimitive::to_f64(x).unwrap_or_else(|| {
        // enormous numerators: scale by bit length
        let shift = x.numer().bits().max(x.denom().bits()) as i64 - 900;
        let (n, d) = if shift > 0 {
            (x.numer() >> shift as usize, x.denom() >> shift as usize)
        } else {
            (x.numer().clone(), x.denom().clone())
        };
        n.to_f64().unwrap_or(f64::NAN) / d.to_f64().unwrap_or(f64::NAN)
    })
}

/// Arithmetic needed by the generic solvers; implemented for exact rationals and f64.
pub trait Field:
    Clone
    + PartialEq
    + PartialOrd
    + fmt::Debug
    + Send
    + Sync
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    const EXACT: bool;
    fn from_q(x: &Q) -> Self;
    fn as_f64(&self) -> f64;
    fn magnitude(&self) -> f64 {
        self.as_f64().abs()
    }
}

impl Field for Q {
    const EXACT: bool = true;
    fn from_q(x: &Q) -> Self {
        x.clone()
    }
    fn as_f64(&self) -> f64 {
        q_to_f64(self)
    }
}

impl Field for f64 {
    const EXACT: bool = false;
    fn from_q(x: &Q) -> Self {
        q_to_f64(x)
    }
    fn as_f64(&self) -> f64 {
        *self
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_q("3/6").unwrap(), q(1, 2));
        assert_eq!(parse_q("-7").unwrap(), qi(-7));
        assert_eq!(parse_q("0.125").unwrap(), q(1, 8));
        assert_eq!(parse_q("-1.5e-2").unwrap(), q(-3, 200));
        assert_eq!(parse_q(".5").unwrap(), q(1, 2));
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("abc").is_err());
        assert!(parse_q("").is_err());
    }

    #[test]
    fn format_roundtrip() {
        for x in [q(1, 18), q(-5, 162), qi(2), qi(0)] {
            assert_eq!(parse_q(&fmt_q(&x)).unwrap(), x);
        }
        assert_eq!(fmt_q(&qi(2)), "2/1");
    }

    #[test]
    fn decimals() {
        assert_eq!(to_decimal(&q(1, 18), 15), "0.0555555555555556");
        assert_eq!(to_decimal(&q(1, 3), 3), "0.333");
        assert_eq!(to_decimal(&q(2, 3), 3), "0.667");
        assert_eq!(to_decimal(&q(-1, 8), 15), "-0.125");
        assert_eq!(to_decimal(&qi(1234), 15), "1234");
        assert_eq!(to_decimal(&q(999999, 1000000), 3), "1");
        assert_eq!(to_decimal(&q(1, 10_000_000), 15), "1e-7");
        assert_eq!(to_decimal(&q(123, 1), 2), "1.2e2");
    }

    #[test]
    fn square_roots() {
        assert_eq!(sqrt_decimal(&qi(2), 10), "1.4142135623");
        assert_eq!(sqrt_decimal(&q(1, 4), 3), "0.500");
        let s = sqrt_decimal(&q(1, 18), 50);
        assert!(s.starts_with("0.23570226039551584146"));
        assert_eq!(s.len(), 52);
    }

    #[test]
    fn float_conversion_of_huge_values() {
        let big = Q::new(num::pow(BigInt::from(10), 400) + 1, num::pow(BigInt::from(10), 400));
        assert!((q_to_f64(&big) - 1.0).abs() < 1e-12);
    }
}
