//! Exact arithmetic helpers: rationals in `p/q` text form, binomial
//! coefficients, and the quadratic field `Q(sqrt r)` that Conlon-Fox cell
//! values live in.

use std::fmt;
use std::ops::{Add, Mul};

use num_bigint::{BigInt, BigUint};
use num_integer::Roots;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

pub fn ratio_big(n: BigInt, d: BigInt) -> BigRational {
    BigRational::new(n, d)
}

/// Parses `"p/q"`, `"p"` or a finite decimal such as `"0.25"`.
pub fn parse_ratio(text: &str) -> Result<BigRational> {
    let t = text.trim();
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad numerator in {t:?}")))?;
        let d: BigInt = d
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad denominator in {t:?}")))?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {t:?}")));
        }
        return Ok(BigRational::new(n, d));
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty()
        || !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return Err(Error::Parse(format!("not a number: {t:?}")));
    }
    let digits = format!("{int_part}{frac_part}");
    let n: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().unwrap()
    };
    let d = num_traits::pow(BigInt::from(10), frac_part.len());
    let r = BigRational::new(n, d);
    Ok(if neg { -r } else { r })
}

/// `p/q`, or just `p` for integers.
pub fn fmt_ratio(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // huge numerators/denominators: scale down by bit length
        let nb = r.numer().bits() as i64;
        let db = r.denom().bits() as i64;
        let shift = (nb.max(db) - 900).max(0) as usize;
        let n = (r.numer() >> shift).to_f64().unwrap_or(0.0);
        let d = (r.denom() >> shift).to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

/// Exact conversion of a finite double.
pub fn f64_to_ratio(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite double")
}

/// Formats `p/q` when exact, otherwise a 15-significant-digit decimal.
pub fn fmt_number(exact: Option<&BigRational>, approx: f64, force_decimal: bool) -> String {
    match exact {
        Some(r) if !force_decimal => fmt_ratio(r),
        _ => fmt_decimal(approx),
    }
}

pub fn fmt_decimal(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let s = format!("{v:.14e}");
    // normalise through parse to drop trailing zeros
    let back: f64 = s.parse().unwrap();
    format!("{back}")
}

/// Binomial coefficient `C(n, k)`.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Row of binomial coefficients `C(n, 0..=n)`.
pub fn binomial_row(n: u64) -> Vec<BigUint> {
    let mut row = Vec::with_capacity(n as usize + 1);
    let mut c = BigUint::one();
    row.push(c.clone());
    for k in 0..n {
        c = c * (n - k) / (k + 1);
        row.push(c.clone());
    }
    row
}

/// Exact square root of a perfect square.
pub fn exact_sqrt(m: u64) -> Option<u64> {
    let r = m.sqrt();
    (r * r == m).then_some(r)
}

/// An element `rational + surd * sqrt(radicand)` of `Q(sqrt radicand)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Surd {
    pub rational: BigRational,
    pub surd: BigRational,
    pub radicand: u64,
}

impl Surd {
    pub fn from_ratio(r: BigRational, radicand: u64) -> Self {
        Surd {
            rational: r,
            surd: BigRational::zero(),
            radicand,
        }
    }

    pub fn zero(radicand: u64) -> Self {
        Self::from_ratio(BigRational::zero(), radicand)
    }

    /// Rational value when the irrational part vanishes.
    pub fn as_ratio(&self) -> Option<BigRational> {
        if self.surd.is_zero() {
            Some(self.rational.clone())
        } else {
            exact_sqrt(self.radicand)
                .map(|r| &self.rational + &self.surd * BigRational::from_integer(r.into()))
        }
    }

    pub fn to_f64(&self) -> f64 {
        ratio_to_f64(&self.rational) + ratio_to_f64(&self.surd) * (self.radicand as f64).sqrt()
    }

    pub fn scale(&self, k: &BigRational) -> Surd {
        Surd {
            rational: &self.rational * k,
            surd: &self.surd * k,
            radicand: self.radicand,
        }
    }

    /// Sign of the value, exactly.
    pub fn signum(&self) -> i32 {
        // a + b sqrt r: compare a^2 with b^2 r when signs differ
        let a = &self.rational;
        let b = &self.surd;
        let sa = sign_of(a);
        let sb = sign_of(b);
        if sb == 0 || sa == sb {
            return if sa != 0 { sa } else { sb };
        }
        if sa == 0 {
            return sb;
        }
        let a2 = a * a;
        let b2r = b * b * BigRational::from_integer(self.radicand.into());
        match a2.cmp(&b2r) {
            std::cmp::Ordering::Greater => sa,
            std::cmp::Ordering::Less => sb,
            std::cmp::Ordering::Equal => 0,
        }
    }
}

fn sign_of(r: &BigRational) -> i32 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

impl Add for &Surd {
    type Output = Surd;
    fn add(self, o: &Surd) -> Surd {
        assert_eq!(self.radicand, o.radicand);
        Surd {
            rational: &self.rational + &o.rational,
            surd: &self.surd + &o.surd,
            radicand: self.radicand,
        }
    }
}

impl Mul for &Surd {
    type Output = Surd;
    fn mul(self, o: &Surd) -> Surd {
        assert_eq!(self.radicand, o.radicand);
        let r = BigRational::from_integer(self.radicand.into());
        Surd {
            rational: &self.rational * &o.rational + &self.surd * &o.surd * r,
            surd: &self.rational * &o.surd + &self.surd * &o.rational,
            radicand: self.radicand,
        }
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.as_ratio() {
            Some(r) => write!(f, "{}", fmt_ratio(&r)),
            None => write!(
                f,
                "{} + {}*sqrt({})",
                fmt_ratio(&self.rational),
                fmt_ratio(&self.surd),
                self.radicand
            ),
        }
    }
}

/// Serde adapter storing a rational as a `"p/q"` string.
pub mod ratio_serde {
    use super::*;

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
        fmt_ratio(r).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<BigRational, D::Error> {
        let text = String::deserialize(d)?;
        parse_ratio(&text).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for vectors of rationals.
pub mod ratio_vec_serde {
    use super::*;

    pub fn serialize<S: Serializer>(
        v: &[BigRational],
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        v.iter().map(fmt_ratio).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<BigRational>, D::Error> {
        let texts = Vec::<String>::deserialize(d)?;
        texts
            .iter()
            .map(|t| parse_ratio(t).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Serde adapter for matrices of rationals.
pub mod ratio_mat_serde {
    use super::*;

    pub fn serialize<S: Serializer>(
        v: &[Vec<BigRational>],
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        v.iter()
            .map(|row| row.iter().map(fmt_ratio).collect::<Vec<_>>())
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<Vec<BigRational>>, D::Error> {
        let texts = Vec::<Vec<String>>::deserialize(d)?;
        texts
            .iter()
            .map(|row| {
                row.iter()
                    .map(|t| parse_ratio(t).map_err(serde::de::Error::custom))
                    .collect()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_ratio("3/6").unwrap(), ratio(1, 2));
        assert_eq!(parse_ratio("0.25").unwrap(), ratio(1, 4));
        assert_eq!(parse_ratio("-1.5").unwrap(), ratio(-3, 2));
        assert_eq!(parse_ratio("7").unwrap(), ratio(7, 1));
        assert!(parse_ratio("1/0").is_err());
        assert!(parse_ratio("abc").is_err());
        assert_eq!(fmt_ratio(&ratio(6, 4)), "3/2");
        assert_eq!(fmt_ratio(&ratio(4, 2)), "2");
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(25, 12), BigUint::from(5_200_300u64));
        assert_eq!(binomial(4, 5), BigUint::zero());
        let row = binomial_row(10);
        let total: BigUint = row.iter().sum();
        assert_eq!(total, BigUint::from(1024u32));
        assert_eq!(row[3], binomial(10, 3));
    }

    #[test]
    fn surd_sign_and_products() {
        // 1 - sqrt(2) < 0, 3 - 2 sqrt(2) > 0
        let a = Surd {
            rational: ratio(1, 1),
            surd: ratio(-1, 1),
            radicand: 2,
        };
        assert_eq!(a.signum(), -1);
        let b = &a * &a;
        assert_eq!(b.rational, ratio(3, 1));
        assert_eq!(b.surd, ratio(-2, 1));
        assert_eq!(b.signum(), 1);
        let c = Surd {
            rational: ratio(2, 1),
            surd: ratio(-1, 1),
            radicand: 4,
        };
        assert_eq!(c.signum(), 0);
        assert_eq!(c.as_ratio(), Some(ratio(0, 1)));
    }

    #[test]
    fn decimal_formatting() {
        assert_eq!(fmt_decimal(0.5), "0.5");
        assert_eq!(fmt_decimal(1.0 / 3.0), "0.333333333333333");
    }
}
