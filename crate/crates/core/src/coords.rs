//! Tower function and the segment / subsegment coordinate system on `[0,1)`.
//!
//! The unit interval is cut into segments `[1 - 2^(1-k), 1 - 2^(-k))`,
//! `k = 1, 2, ...`. Segment `k` is split into `t(k)` subsegments, and each
//! subsegment into `t(k)` parts, where `t` is the tower function.
//! Segments are numbered from one, subsegments and parts from zero.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Default cap on tower levels. `t(5)` has 65537 bits; `t(6)` is not representable.
pub const DEFAULT_TOWER_CAP: u32 = 5;

/// An exact value `t(level)` of the tower function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TowerValue {
    pub level: u32,
    pub value: BigUint,
}

/// `t(0) = 1`, `t(n) = 2^t(n-1)`, refusing levels above `cap`.
pub fn tower(n: u32, cap: u32) -> Result<TowerValue> {
    if n > cap {
        return Err(Error::LevelTooLarge { level: n, cap });
    }
    let mut value = BigUint::one();
    for _ in 0..n {
        let exp = value
            .to_u64()
            .ok_or(Error::LevelTooLarge { level: n, cap })?;
        value = BigUint::one() << exp;
    }
    Ok(TowerValue { level: n, value })
}

/// `t(n)` as a machine word, `None` from level 5 on.
pub fn tower_u64(n: u32) -> Option<u64> {
    match n {
        0 => Some(1),
        1 => Some(2),
        2 => Some(4),
        3 => Some(16),
        4 => Some(65536),
        _ => None,
    }
}

/// Clip to `[0,1]`.
pub fn trunc(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// Exact rational variant of [`trunc`].
pub fn trunc_ratio(v: &BigRational) -> BigRational {
    if v < &BigRational::zero() {
        BigRational::zero()
    } else if v > &BigRational::one() {
        BigRational::one()
    } else {
        v.clone()
    }
}

/// Splits a finite non-negative double into `(mantissa, exponent)` with
/// `x = mantissa * 2^exponent` and an odd mantissa (or zero).
pub fn dyadic_parts(x: f64) -> (u64, i32) {
    debug_assert!(x.is_finite() && x >= 0.0);
    if x == 0.0 {
        return (0, 0);
    }
    let bits = x.to_bits();
    let raw_exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    let (mut mant, mut exp) = if raw_exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), raw_exp - 1075)
    };
    let tz = mant.trailing_zeros();
    mant >>= tz;
    exp += tz as i32;
    (mant, exp)
}

/// The `i`-th binary digit after the radix point of `pos` (`i >= 1`).
///
/// Operates on the exact value of the double, so dyadic rationals use their
/// terminating expansion.
pub fn frac_bit(pos: f64, i: u32) -> u8 {
    assert!(i >= 1, "fractional bits are numbered from 1");
    let (mant, exp) = dyadic_parts(pos.abs());
    if mant == 0 {
        return 0;
    }
    // bit i has weight 2^-i, i.e. mantissa bit index (-i - exp)
    let shift = -(i as i64) - exp as i64;
    if !(0..64).contains(&shift) {
        return 0;
    }
    ((mant >> shift) & 1) as u8
}

/// Exact fractional bit of a rational in `[0,1)`.
pub fn frac_bit_ratio(pos: &BigRational, i: u32) -> u8 {
    let scaled = pos * BigRational::from_integer((BigUint::one() << i).into());
    let fl = scaled.floor().to_integer();
    if (fl % 2u32).is_zero() {
        0
    } else {
        1
    }
}

/// Bit `i` of `v`, least significant bit at index 0.
pub fn int_bit(v: u64, i: u32) -> u8 {
    if i >= 64 {
        0
    } else {
        ((v >> i) & 1) as u8
    }
}

/// [`int_bit`] for arbitrary-precision integers.
pub fn big_int_bit(v: &BigUint, i: u64) -> u8 {
    v.bit(i) as u8
}

/// A vector over `{-1, +1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SignVector(pub Vec<i8>);

impl SignVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dot(&self, other: &SignVector) -> i64 {
        assert_eq!(self.len(), other.len(), "sign vectors of unequal length");
        self.0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| (a as i64) * (b as i64))
            .sum()
    }
}

/// Entry `i` (1-based) is `2 * frac_bit(pos, i) - 1`.
pub fn sign_vector_frac(pos: f64, length: usize) -> SignVector {
    SignVector(
        (1..=length as u32)
            .map(|i| 2 * frac_bit(pos, i) as i8 - 1)
            .collect(),
    )
}

/// Entry `i + 1` is `2 * int_bit(v, i) - 1`.
pub fn sign_vector_int(v: u64, length: usize) -> SignVector {
    SignVector(
        (0..length as u32)
            .map(|i| 2 * int_bit(v, i) as i8 - 1)
            .collect(),
    )
}

/// Segment index of `x`: the smallest `k` with `x < 1 - 2^(-k)`.
pub fn segment_of(x: f64) -> Result<u32> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::OutOfDomain { value: x });
    }
    if x < 0.5 {
        return Ok(1);
    }
    // exact for x >= 1/2
    let rest = 1.0 - x;
    let mut k = 1;
    let mut bound = 0.5f64;
    while rest <= bound {
        k += 1;
        bound *= 0.5;
    }
    Ok(k)
}

/// Position of `x` inside its segment, rescaled to `[0,1)`. Exact.
pub fn position_in_segment(x: f64, seg: u32) -> f64 {
    let start = 1.0 - 2f64.powi(1 - seg as i32);
    (x - start) * 2f64.powi(seg as i32)
}

/// Full bracket coordinates of a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Coordinate {
    pub x: f64,
    /// segment index, from 1
    pub seg: u32,
    /// position inside the segment, in `[0,1)`
    pub pos: f64,
    /// subsegment index, from 0
    pub subseg: BigUint,
    /// part index inside the subsegment, from 0
    pub part: BigUint,
    /// `part + t(seg) * subseg`
    pub combined: BigUint,
}

/// Locates `x` in the segment / subsegment / part hierarchy.
pub fn locate(x: f64, cap: u32) -> Result<Coordinate> {
    let seg = segment_of(x)?;
    if seg > cap {
        return Err(Error::LevelTooLarge { level: seg, cap });
    }
    let pos = position_in_segment(x, seg);
    // t(seg) = 2^t(seg-1)
    let log_t = tower(seg - 1, cap)?
        .value
        .to_u64()
        .expect("t(seg-1) fits a word below the cap");
    let (mant, exp) = dyadic_parts(pos);
    let shift = exp as i64 + 2 * log_t as i64;
    let combined = if mant == 0 {
        BigUint::zero()
    } else if shift >= 0 {
        BigUint::from(mant) << shift as u64
    } else {
        BigUint::from(mant) >> (-shift) as u64
    };
    let subseg = &combined >> log_t;
    let part = &combined - (&subseg << log_t);
    Ok(Coordinate {
        x,
        seg,
        pos,
        subseg,
        part,
        combined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tower_values() {
        assert_eq!(tower(0, 5).unwrap().value, BigUint::from(1u32));
        assert_eq!(tower(1, 5).unwrap().value, BigUint::from(2u32));
        assert_eq!(tower(3, 5).unwrap().value, BigUint::from(16u32));
        assert_eq!(tower(4, 5).unwrap().value, BigUint::from(65536u32));
        let t5 = tower(5, 5).unwrap().value;
        assert_eq!(t5.bits(), 65537);
        assert_eq!(t5, BigUint::one() << 65536u32);
        assert_eq!(tower(6, 5), Err(Error::LevelTooLarge { level: 6, cap: 5 }));
        for n in 0..=4 {
            assert_eq!(
                BigUint::from(tower_u64(n).unwrap()),
                tower(n, 5).unwrap().value
            );
        }
    }

    #[test]
    fn locate_examples() {
        let c = locate(0.6, 5).unwrap();
        assert_eq!(c.seg, 2);
        assert!((c.pos - 0.4).abs() < 1e-15);
        assert_eq!(c.subseg, BigUint::from(1u32));
        let z = locate(0.0, 5).unwrap();
        assert_eq!((z.seg, z.pos), (1, 0.0));
        assert!(z.subseg.is_zero() && z.part.is_zero() && z.combined.is_zero());
        assert_eq!(segment_of(0.5).unwrap(), 2);
        assert_eq!(segment_of(0.75).unwrap(), 3);
        assert_eq!(segment_of(0.7499).unwrap(), 2);
        assert!(matches!(locate(1.0, 5), Err(Error::OutOfDomain { .. })));
        assert!(matches!(locate(-0.1, 5), Err(Error::OutOfDomain { .. })));
        assert!(matches!(
            locate(1.0 - 1.0 / 64.0, 5),
            Err(Error::LevelTooLarge { level: 7, .. })
        ));
    }

    #[test]
    fn locate_indices_segment_two() {
        // segment 2 = [1/2, 3/4), t(2) = 4: 4 subsegments of 4 parts each
        let x = 0.5 + 0.25 * (7.0 / 16.0 + 1.0 / 64.0);
        let c = locate(x, 5).unwrap();
        assert_eq!(c.seg, 2);
        assert_eq!(c.combined, BigUint::from(7u32));
        assert_eq!(c.subseg, BigUint::from(1u32));
        assert_eq!(c.part, BigUint::from(3u32));
    }

    #[test]
    fn locate_segment_five_uses_wide_indices() {
        let x = 1.0 - 1.0 / 16.0 + (1.0 / 32.0) * 0.375;
        let c = locate(x, 5).unwrap();
        assert_eq!(c.seg, 5);
        assert_eq!(c.pos, 0.375);
        // 0.375 * 2^65536 = 3 * 2^65533; parts vanish
        assert_eq!(c.subseg, BigUint::from(3u32) << 65533u32);
        assert!(c.part.is_zero());
    }

    #[test]
    fn frac_bits() {
        assert_eq!(frac_bit(0.375, 1), 0);
        assert_eq!(frac_bit(0.375, 2), 1);
        assert_eq!(frac_bit(0.375, 3), 1);
        assert_eq!(frac_bit(0.375, 7), 0);
        assert_eq!(frac_bit(0.0, 1), 0);
        assert_eq!(frac_bit(0.5, 1), 1);
        assert_eq!(frac_bit(f64::MIN_POSITIVE / 4.0, 1024), 1);
        let r = BigRational::new(3.into(), 8.into());
        assert_eq!(
            (1..=4).map(|i| frac_bit_ratio(&r, i)).collect::<Vec<_>>(),
            vec![0, 1, 1, 0]
        );
    }

    #[test]
    fn int_bits() {
        assert_eq!(int_bit(5, 0), 1);
        assert_eq!(int_bit(5, 1), 0);
        assert_eq!(int_bit(5, 2), 1);
        assert_eq!(int_bit(5, 3), 0);
        assert_eq!(int_bit(0, 0), 0);
        assert_eq!(big_int_bit(&BigUint::from(5u32), 2), 1);
    }

    #[test]
    fn sign_vectors() {
        assert_eq!(sign_vector_frac(0.375, 4).0, vec![-1, 1, 1, -1]);
        assert_eq!(sign_vector_frac(0.0, 3).0, vec![-1, -1, -1]);
        assert_eq!(sign_vector_frac(0.5, 2).0, vec![1, -1]);
        assert_eq!(sign_vector_int(5, 4).0, vec![1, -1, 1, -1]);
        assert_eq!(sign_vector_int(0, 3).0, vec![-1, -1, -1]);
        assert_eq!(sign_vector_int(7, 3).0, vec![1, 1, 1]);
    }

    #[test]
    fn trunc_examples() {
        assert_eq!(trunc(1.3), 1.0);
        assert_eq!(trunc(-0.2), 0.0);
        assert_eq!(trunc(0.5), 0.5);
    }

    #[test]
    fn reconstruction_on_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100_000 {
            let x: f64 = rng.gen();
            let seg = segment_of(x).unwrap();
            let pos = position_in_segment(x, seg);
            let lo = 1.0 - 2f64.powi(1 - seg as i32);
            let hi = 1.0 - 2f64.powi(-(seg as i32));
            assert!(lo <= x && x < hi);
            assert!((0.0..1.0).contains(&pos));
            let back = lo + pos * 2f64.powi(-(seg as i32));
            assert_eq!(back, x);
        }
    }

    #[test]
    fn combined_index_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..2000 {
            let x: f64 = rng.gen_range(0.0..0.9375);
            let c = locate(x, 5).unwrap();
            let t = tower(c.seg, 5).unwrap().value;
            assert_eq!(c.combined, &c.part + &t * &c.subseg);
            assert_eq!(c.part, &c.combined % &t);
            assert!(c.subseg < t && c.part < t);
        }
    }

    #[test]
    fn segments_cover_prefix() {
        let k = 20;
        let mut covered = 0.0;
        for s in 1..=k {
            let lo = 1.0 - 2f64.powi(1 - s);
            let hi = 1.0 - 2f64.powi(-s);
            assert_eq!(lo, covered);
            covered = hi;
        }
        assert_eq!(covered, 1.0 - 2f64.powi(-k));
    }

    proptest::proptest! {
        #[test]
        fn pairing_identity(k in -(1i64 << 24)..(1i64 << 24)) {
            // dyadic offsets keep both sums exact
            let a = k as f64 / (1u64 << 22) as f64;
            proptest::prop_assert_eq!(trunc(0.5 + a) + trunc(0.5 - a), 1.0);
            let r = BigRational::new(k.into(), (1i64 << 22).into());
            let half = BigRational::new(1.into(), 2.into());
            proptest::prop_assert_eq!(
                trunc_ratio(&(&half + &r)) + trunc_ratio(&(&half - &r)),
                BigRational::one()
            );
        }
    }
}
