use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::Error;

/// Exact rational number; always normalized (positive denominator, reduced).
pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

/// Canonical `"num/den"` text form.
pub fn format_rat(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Parses `"n"`, `"-n"` or `"n/d"`.
pub fn parse_rat(s: &str) -> Result<Rational, Error> {
    let bad = || Error::Parse(format!("not a rational: {s:?}"));
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(n, d))
        }
        None => {
            let n: BigInt = s.parse().map_err(|_| bad())?;
            Ok(BigRational::from_integer(n))
        }
    }
}

/// `(-1)^k` as a rational.
pub fn sign_pow(k: i64) -> Rational {
    if k.rem_euclid(2) == 0 {
        one()
    } else {
        -one()
    }
}

/// Generalized binomial coefficient `binom(a, k)` for rational `a`.
pub fn binomial(a: &Rational, k: u32) -> Rational {
    let mut acc = one();
    for j in 0..k {
        acc = acc * (a - int(j as i64)) / int(j as i64 + 1);
    }
    acc
}

pub fn is_integer(q: &Rational) -> bool {
    q.denom().is_one()
}

pub fn abs(q: &Rational) -> Rational {
    q.abs()
}
