use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{ratio_mat_serde, ratio_to_f64, ratio_vec_serde};

/// A graphon constant on the blocks `[b_i, b_{i+1})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StepRepr", into = "StepRepr")]
pub struct StepGraphon {
    breakpoints: Vec<BigRational>,
    values: Vec<Vec<BigRational>>,
    bp_f64: Vec<f64>,
    val_f64: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct StepRepr {
    #[serde(with = "ratio_vec_serde")]
    breakpoints: Vec<BigRational>,
    #[serde(with = "ratio_mat_serde")]
    values: Vec<Vec<BigRational>>,
}

impl TryFrom<StepRepr> for StepGraphon {
    type Error = Error;
    fn try_from(r: StepRepr) -> Result<Self> {
        StepGraphon::new(r.breakpoints, r.values)
    }
}

impl From<StepGraphon> for StepRepr {
    fn from(s: StepGraphon) -> Self {
        StepRepr {
            breakpoints: s.breakpoints,
            values: s.values,
        }
    }
}

impl StepGraphon {
    pub fn new(breakpoints: Vec<BigRational>, values: Vec<Vec<BigRational>>) -> Result<Self> {
        let n = breakpoints.len().saturating_sub(1);
        if n == 0 || !breakpoints[0].is_zero() || !breakpoints[n].is_one() {
            return Err(Error::InvalidSet("breakpoints must run from 0 to 1".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSet(
                "breakpoints must increase strictly".into(),
            ));
        }
        if values.len() != n || values.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidGraph(format!("value matrix must be {n}x{n}")));
        }
        for i in 0..n {
            for j in 0..n {
                let v = &values[i][j];
                if v < &BigRational::zero() || v > &BigRational::one() {
                    return Err(Error::OutOfRange(crate::exact::fmt_ratio(v)));
                }
                if values[j][i] != *v {
                    return Err(Error::InvalidGraph("value matrix is not symmetric".into()));
                }
            }
        }
        let bp_f64 = breakpoints.iter().map(ratio_to_f64).collect();
        let val_f64 = values
            .iter()
            .map(|r| r.iter().map(ratio_to_f64).collect())
            .collect();
        Ok(StepGraphon {
            breakpoints,
            values,
            bp_f64,
            val_f64,
        })
    }

    /// `n` equal blocks.
    pub fn uniform(values: Vec<Vec<BigRational>>) -> Result<Self> {
        let n = values.len() as i64;
        let bps = (0..=n).map(|i| crate::exact::ratio(i, n)).collect();
        StepGraphon::new(bps, values)
    }

    pub fn constant(p: BigRational) -> Result<Self> {
        StepGraphon::uniform(vec![vec![p]])
    }

    pub fn num_blocks(&self) -> usize {
        self.values.len()
    }

    pub fn breakpoints(&self) -> &[BigRational] {
        &self.breakpoints
    }

    pub fn width(&self, i: usize) -> BigRational {
        &self.breakpoints[i + 1] - &self.breakpoints[i]
    }

    pub fn width_f64(&self, i: usize) -> f64 {
        self.bp_f64[i + 1] - self.bp_f64[i]
    }

    pub fn value(&self, i: usize, j: usize) -> &BigRational {
        &self.values[i][j]
    }

    pub fn value_f64(&self, i: usize, j: usize) -> f64 {
        self.val_f64[i][j]
    }

    pub fn block_of(&self, x: f64) -> usize {
        // last breakpoint <= x, with x = 1 in the last block
        let k = self.bp_f64.partition_point(|b| *b <= x);
        k.clamp(1, self.num_blocks()) - 1
    }

    pub fn block_of_exact(&self, x: &BigRational) -> usize {
        let k = self.breakpoints.partition_point(|b| b <= x);
        k.clamp(1, self.num_blocks()) - 1
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.val_f64[self.block_of(x)][self.block_of(y)]
    }

    /// Row integral of block `i`.
    pub fn row_sum(&self, i: usize) -> BigRational {
        (0..self.num_blocks())
            .map(|j| self.width(j) * &self.values[i][j])
            .sum()
    }
}

/// Outcome of checking the square identity on a step function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SquareIdentityVerdict {
    /// `int F(x,z) F(y,z) dz = xi` on every block pair
    pub hypothesis_holds: bool,
    /// `int F(x,z)^2 dz = xi` on every block
    pub conclusion_holds: bool,
}

/// Checks whether constant pairwise row products force constant row squares.
///
/// Block pairs include the diagonal: for `x != y` in one block the row
/// product is the row square, and such pairs have positive measure.
pub fn square_identity_check(f: &StepGraphon, xi: f64, tol: f64) -> SquareIdentityVerdict {
    let n = f.num_blocks();
    let prod = |a: usize, b: usize| -> f64 {
        (0..n)
            .map(|c| f.width_f64(c) * f.value_f64(a, c) * f.value_f64(b, c))
            .sum()
    };
    let hypothesis_holds = (0..n).all(|a| (0..n).all(|b| (prod(a, b) - xi).abs() <= tol));
    let conclusion_holds = (0..n).all(|a| (prod(a, a) - xi).abs() <= tol);
    SquareIdentityVerdict {
        hypothesis_holds,
        conclusion_holds,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ratio;

    fn two_block() -> StepGraphon {
        StepGraphon::uniform(vec![
            vec![ratio(1, 1), ratio(1, 2)],
            vec![ratio(1, 2), ratio(0, 1)],
        ])
        .unwrap()
    }

    #[test]
    fn validation() {
        assert!(StepGraphon::uniform(vec![vec![ratio(3, 2)]]).is_err());
        assert!(StepGraphon::uniform(vec![
            vec![ratio(1, 1), ratio(1, 2)],
            vec![ratio(1, 3), ratio(0, 1)]
        ])
        .is_err());
        assert!(StepGraphon::new(vec![ratio(0, 1), ratio(1, 2)], vec![vec![ratio(0, 1)]]).is_err());
    }

    #[test]
    fn blocks_and_values() {
        let g = two_block();
        assert_eq!(g.block_of(0.0), 0);
        assert_eq!(g.block_of(0.5), 1);
        assert_eq!(g.block_of(1.0), 1);
        assert_eq!(g.eval(0.2, 0.7), 0.5);
        assert_eq!(g.row_sum(0), ratio(3, 4));
    }

    #[test]
    fn serde_round_trip() {
        let g = two_block();
        let text = serde_json::to_string(&g).unwrap();
        assert!(text.contains("\"1/2\""));
        let back: StepGraphon = serde_json::from_str(&text).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn square_identity() {
        let c = StepGraphon::constant(ratio(1, 3)).unwrap();
        let v = square_identity_check(&c, 1.0 / 9.0, 1e-12);
        assert!(v.hypothesis_holds && v.conclusion_holds);

        // rank one f(x) f(y) with f = (1, 1/2): row products differ
        let r = StepGraphon::uniform(vec![
            vec![ratio(1, 1), ratio(1, 2)],
            vec![ratio(1, 2), ratio(1, 4)],
        ])
        .unwrap();
        let v = square_identity_check(&r, 0.625, 1e-12);
        assert!(!v.hypothesis_holds);
        // f(a)^2 * 5/8 is 5/8 only on the first block
        assert!(!v.conclusion_holds);
    }
}
