//! Measurable subsets of `[0,1]`: unions of rational intervals, or masses
//! assigned to the blocks of a uniform reference grid.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{fmt_ratio, parse_ratio, ratio_to_f64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetSpec {
    /// Disjoint half-open intervals `[a, b)`, as `"p/q"` pairs.
    Intervals(Vec<(String, String)>),
    /// Mass of the set inside block `i` of a grid of `grid` equal blocks.
    Blocks {
        grid: u64,
        weights: Vec<(u64, String)>,
    },
}

/// A [`SetSpec`] with its numbers parsed.
#[derive(Debug, Clone, PartialEq)]
pub enum Set {
    Intervals(Vec<(BigRational, BigRational)>),
    Blocks {
        grid: u64,
        /// sparse block masses, sorted by block and each in `(0, 1/grid]`
        weights: BTreeMap<u64, BigRational>,
    },
}

impl Set {
    pub fn empty() -> Set {
        Set::Intervals(Vec::new())
    }

    pub fn full() -> Set {
        Set::Intervals(vec![(BigRational::zero(), BigRational::one())])
    }

    pub fn interval(a: BigRational, b: BigRational) -> Result<Set> {
        Set::intervals(vec![(a, b)])
    }

    pub fn intervals(mut iv: Vec<(BigRational, BigRational)>) -> Result<Set> {
        iv.retain(|(a, b)| a != b);
        iv.sort();
        for (a, b) in &iv {
            if a > b || a < &BigRational::zero() || b > &BigRational::one() {
                return Err(Error::InvalidSet(format!(
                    "[{}, {}) is not a subinterval of [0,1]",
                    fmt_ratio(a),
                    fmt_ratio(b)
                )));
            }
        }
        if iv.windows(2).any(|w| w[0].1 > w[1].0) {
            return Err(Error::InvalidSet("intervals overlap".into()));
        }
        Ok(Set::Intervals(iv))
    }

    pub fn blocks(grid: u64, weights: impl IntoIterator<Item = (u64, BigRational)>) -> Result<Set> {
        if grid == 0 {
            return Err(Error::InvalidSet(
                "grid must have at least one block".into(),
            ));
        }
        let width = BigRational::new(BigInt::one(), BigInt::from(grid));
        let mut map = BTreeMap::new();
        for (b, w) in weights {
            if b >= grid {
                return Err(Error::InvalidSet(format!(
                    "block {b} outside a grid of {grid}"
                )));
            }
            if w < BigRational::zero() || w > width {
                return Err(Error::InvalidSet(format!(
                    "weight {} of block {b} exceeds the block width",
                    fmt_ratio(&w)
                )));
            }
            if w.is_zero() {
                continue;
            }
            if map.insert(b, w).is_some() {
                return Err(Error::InvalidSet(format!("block {b} listed twice")));
            }
        }
        Ok(Set::Blocks { grid, weights: map })
    }

    /// Whole blocks of a grid.
    pub fn whole_blocks(grid: u64, blocks: impl IntoIterator<Item = u64>) -> Result<Set> {
        let w = BigRational::new(BigInt::one(), BigInt::from(grid));
        Set::blocks(grid, blocks.into_iter().map(|b| (b, w.clone())))
    }

    pub fn measure(&self) -> BigRational {
        match self {
            Set::Intervals(iv) => iv.iter().map(|(a, b)| b - a).sum(),
            Set::Blocks { weights, .. } => weights.values().sum(),
        }
    }

    pub fn measure_f64(&self) -> f64 {
        ratio_to_f64(&self.measure())
    }

    pub fn is_full(&self) -> bool {
        self.measure().is_one()
    }

    pub fn grid(&self) -> Option<u64> {
        match self {
            Set::Blocks { grid, .. } => Some(*grid),
            Set::Intervals(_) => None,
        }
    }

    /// Masses on a grid of `grid` equal blocks. Interval sets are cut at the
    /// block boundaries; block sets must use a grid that `grid` refines or equals.
    pub fn to_grid(&self, grid: u64) -> Result<BTreeMap<u64, BigRational>> {
        match self {
            Set::Blocks { grid: g, weights } => {
                if *g == grid {
                    return Ok(weights.clone());
                }
                if !grid.is_multiple_of(*g) {
                    return Err(Error::GridMismatch(format!(
                        "a set on {g} blocks cannot be placed on {grid} blocks"
                    )));
                }
                // only whole blocks have a well-defined refinement
                let width = BigRational::new(BigInt::one(), BigInt::from(*g));
                let r = grid / g;
                let sub = BigRational::new(BigInt::one(), BigInt::from(grid));
                let mut out = BTreeMap::new();
                for (b, w) in weights {
                    if *w != width {
                        return Err(Error::GridMismatch(format!(
                            "partial block {b} of a {g}-block grid cannot be refined"
                        )));
                    }
                    for k in 0..r {
                        out.insert(b * r + k, sub.clone());
                    }
                }
                Ok(out)
            }
            Set::Intervals(iv) => {
                let n = BigInt::from(grid);
                let mut out: BTreeMap<u64, BigRational> = BTreeMap::new();
                for (a, b) in iv {
                    let first = (a * &n).floor().to_integer();
                    let last = (b * &n).ceil().to_integer();
                    let first: u64 = first.try_into().unwrap_or(0);
                    let last: u64 = last.try_into().unwrap_or(grid).min(grid);
                    for k in first..last {
                        let lo = BigRational::new(BigInt::from(k), n.clone());
                        let hi = BigRational::new(BigInt::from(k + 1), n.clone());
                        let l = if a > &lo { a.clone() } else { lo };
                        let h = if b < &hi { b.clone() } else { hi };
                        if h > l {
                            *out.entry(k).or_insert_with(BigRational::zero) += h - l;
                        }
                    }
                }
                Ok(out)
            }
        }
    }

    /// Intersection with `[a, b)` for interval sets.
    pub fn clip(&self, a: &BigRational, b: &BigRational) -> Option<BigRational> {
        match self {
            Set::Intervals(iv) => Some(
                iv.iter()
                    .map(|(l, h)| {
                        let lo = if l > a { l } else { a };
                        let hi = if h < b { h } else { b };
                        if hi > lo {
                            hi - lo
                        } else {
                            BigRational::zero()
                        }
                    })
                    .sum(),
            ),
            Set::Blocks { .. } => None,
        }
    }

    pub fn to_spec(&self) -> SetSpec {
        match self {
            Set::Intervals(iv) => SetSpec::Intervals(
                iv.iter()
                    .map(|(a, b)| (fmt_ratio(a), fmt_ratio(b)))
                    .collect(),
            ),
            Set::Blocks { grid, weights } => SetSpec::Blocks {
                grid: *grid,
                weights: weights.iter().map(|(b, w)| (*b, fmt_ratio(w))).collect(),
            },
        }
    }
}

impl TryFrom<&SetSpec> for Set {
    type Error = Error;
    fn try_from(s: &SetSpec) -> Result<Set> {
        match s {
            SetSpec::Intervals(iv) => Set::intervals(
                iv.iter()
                    .map(|(a, b)| Ok((parse_ratio(a)?, parse_ratio(b)?)))
                    .collect::<Result<_>>()?,
            ),
            SetSpec::Blocks { grid, weights } => Set::blocks(
                *grid,
                weights
                    .iter()
                    .map(|(b, w)| Ok((*b, parse_ratio(w)?)))
                    .collect::<Result<Vec<_>>>()?,
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ratio;

    #[test]
    fn validation_and_measure() {
        assert!(Set::interval(ratio(1, 2), ratio(1, 3)).is_err());
        assert!(
            Set::intervals(vec![(ratio(0, 1), ratio(1, 2)), (ratio(1, 3), ratio(1, 1))]).is_err()
        );
        assert!(Set::blocks(4, [(0, ratio(1, 3))]).is_err());
        let s = Set::blocks(4, [(0, ratio(1, 8)), (3, ratio(1, 4))]).unwrap();
        assert_eq!(s.measure(), ratio(3, 8));
        assert!(Set::full().is_full());
    }

    #[test]
    fn intervals_on_grid() {
        let s = Set::interval(ratio(1, 8), ratio(5, 8)).unwrap();
        let g = s.to_grid(4).unwrap();
        assert_eq!(g[&0], ratio(1, 8));
        assert_eq!(g[&1], ratio(1, 4));
        assert_eq!(g[&2], ratio(1, 8));
        assert!(!g.contains_key(&3));
    }

    #[test]
    fn grid_refinement() {
        let s = Set::whole_blocks(2, [1]).unwrap();
        let g = s.to_grid(4).unwrap();
        assert_eq!(g.keys().copied().collect::<Vec<_>>(), vec![2, 3]);
        assert!(matches!(s.to_grid(3), Err(Error::GridMismatch(_))));
        let partial = Set::blocks(2, [(0, ratio(1, 4))]).unwrap();
        assert!(partial.to_grid(4).is_err());
    }

    #[test]
    fn spec_round_trip() {
        let s = Set::blocks(8, [(2, ratio(1, 16))]).unwrap();
        let spec = s.to_spec();
        let text = serde_json::to_string(&spec).unwrap();
        let back: SetSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(Set::try_from(&back).unwrap(), s);
    }
}
