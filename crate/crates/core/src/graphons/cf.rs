//! The Conlon-Fox step graphon `W_CF^m`.
//!
//! `2^m` equal blocks; block `i` carries the sign vector of the bits of `i`.
//! Two blocks at Hamming distance `h` have inner product `m - 2h` and cell
//! value `trunc(1/2 + (m - 2h) / (4 sqrt m))`. Nothing is materialised.

use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use statrs::function::factorial::ln_binomial;

use crate::coords::trunc;
use crate::error::{Error, Result};
use crate::exact::{binomial_row, exact_sqrt, ratio, Surd};

pub const MAX_M: u32 = 62;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CfGraphon {
    m: u32,
}

impl CfGraphon {
    pub fn new(m: u32) -> Result<Self> {
        if m == 0 || m > MAX_M {
            return Err(Error::MTooLarge(m));
        }
        Ok(CfGraphon { m })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn num_blocks(&self) -> u64 {
        1u64 << self.m
    }

    /// Cell values are rational exactly when `m` is a perfect square.
    pub fn is_exact(&self) -> bool {
        exact_sqrt(self.m as u64).is_some()
    }

    pub fn block_of(&self, x: f64) -> u64 {
        // x * 2^m is exact; the last block absorbs x = 1
        ((x * self.num_blocks() as f64).floor() as u64).min(self.num_blocks() - 1)
    }

    pub fn inner_product(&self, i: u64, j: u64) -> i64 {
        self.m as i64 - 2 * (i ^ j).count_ones() as i64
    }

    pub fn cell(&self, i: u64, j: u64) -> f64 {
        cf_cell_value(self.m as u64, self.inner_product(i, j))
    }

    pub fn cell_surd(&self, i: u64, j: u64) -> Surd {
        cf_cell_surd(self.m as u64, self.inner_product(i, j))
    }

    pub fn cell_exact(&self, i: u64, j: u64) -> Option<BigRational> {
        self.cell_surd(i, j).as_ratio()
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.cell(self.block_of(x), self.block_of(y))
    }

    /// Integer numerator of a cell over the common denominator `4 sqrt m`
    /// (perfect-square `m` only).
    pub fn cell_scaled(&self, i: u64, j: u64) -> Option<i64> {
        let r = exact_sqrt(self.m as u64)? as i64;
        let ip = self.inner_product(i, j);
        Some((2 * r + ip).clamp(0, 4 * r))
    }

    /// Denominator used by [`cell_scaled`](Self::cell_scaled).
    pub fn scale(&self) -> Option<i64> {
        exact_sqrt(self.m as u64).map(|r| 4 * r as i64)
    }

    /// `d([0,1],[0,1])`, summed over the Hamming-distance distribution.
    pub fn full_density(&self) -> Surd {
        full_density(self.m as u64)
    }

    /// Exact fraction of the square where `0 < W < 1`.
    pub fn interior_measure(&self) -> BigRational {
        interior_measure(self.m as u64)
    }
}

/// `trunc(1/2 + ip / (4 sqrt m))`.
pub fn cf_cell_value(m: u64, ip: i64) -> f64 {
    // clipping decided in integers: |ip| >= 2 sqrt m  <=>  ip^2 >= 4m
    let ip2 = (ip as i128) * (ip as i128);
    if ip2 >= 4 * m as i128 {
        return if ip > 0 { 1.0 } else { 0.0 };
    }
    match exact_sqrt(m) {
        Some(r) => (2 * r as i64 + ip) as f64 / (4 * r) as f64,
        None => trunc(0.5 + ip as f64 / (4.0 * (m as f64).sqrt())),
    }
}

/// Exact cell value in `Q(sqrt m)`.
pub fn cf_cell_surd(m: u64, ip: i64) -> Surd {
    let ip2 = (ip as i128) * (ip as i128);
    if ip2 >= 4 * m as i128 {
        return Surd::from_ratio(
            if ip > 0 {
                BigRational::one()
            } else {
                BigRational::zero()
            },
            m,
        );
    }
    // 1/2 + ip sqrt(m) / (4m)
    Surd {
        rational: ratio(1, 2),
        surd: BigRational::new(BigInt::from(ip), BigInt::from(4 * m)),
        radicand: m,
    }
}

/// Sum over Hamming distances `h ~ Bin(m, 1/2)` of the cell value.
pub fn full_density(m: u64) -> Surd {
    let row = binomial_row(m);
    let total = BigUint::one() << m;
    let mut acc = Surd::zero(m);
    for (h, c) in row.iter().enumerate() {
        let w = BigRational::new(BigInt::from(c.clone()), BigInt::from(total.clone()));
        acc = &acc + &cf_cell_surd(m, m as i64 - 2 * h as i64).scale(&w);
    }
    acc
}

/// Fraction of block pairs with `|<u,u'>| < 2 sqrt m`, exactly.
pub fn interior_measure(m: u64) -> BigRational {
    let row = binomial_row(m);
    let mut hits = BigUint::zero();
    for (h, c) in row.iter().enumerate() {
        let ip = m as i128 - 2 * h as i128;
        if ip * ip < 4 * m as i128 {
            hits += c;
        }
    }
    BigRational::new(BigInt::from(hits), BigInt::from(BigUint::one() << m))
}

/// Probabilities of `Bin(m, 1/2)`, computed in floating point.
pub fn binomial_pmf(m: u64) -> Vec<f64> {
    let ln2 = std::f64::consts::LN_2;
    (0..=m)
        .map(|h| (ln_binomial(m, h) - m as f64 * ln2).exp())
        .collect()
}

/// Cached `Bin(65536, 1/2)` distribution (the width of segment-five vectors).
pub fn wide_pmf() -> &'static [f64] {
    static PMF: OnceLock<Vec<f64>> = OnceLock::new();
    PMF.get_or_init(|| binomial_pmf(65536))
}

/// `P[h <= c]` for `h ~ Bin(m, 1/2)`, `m <= 65536`.
pub fn binomial_cdf(m: u64, c: f64) -> f64 {
    if c < 0.0 {
        return 0.0;
    }
    if c >= m as f64 {
        return 1.0;
    }
    let top = c.floor() as usize;
    let pmf_owned;
    let pmf: &[f64] = if m == 65536 {
        wide_pmf()
    } else {
        pmf_owned = binomial_pmf(m);
        &pmf_owned
    };
    // sum the shorter tail
    if top < m as usize / 2 {
        pmf[..=top].iter().sum()
    } else {
        1.0 - pmf[top + 1..].iter().sum::<f64>()
    }
}

/// Average cell value against a uniformly random block, for width `m`.
pub fn mean_cell(m: u64) -> f64 {
    static WIDE: OnceLock<f64> = OnceLock::new();
    let f = |m: u64| {
        let pmf = if m == 65536 {
            wide_pmf().to_vec()
        } else {
            binomial_pmf(m)
        };
        pmf.iter()
            .enumerate()
            .map(|(h, p)| p * cf_cell_value(m, m as i64 - 2 * h as i64))
            .sum::<f64>()
    };
    if m == 65536 {
        *WIDE.get_or_init(|| f(m))
    } else {
        f(m)
    }
}
