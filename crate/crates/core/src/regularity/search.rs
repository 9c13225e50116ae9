//! Deviation searches and energy-increment refinement.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{energy_from_sums, signed_deviation, DeviationWitness, IntKernel, PartSums, Partition};
use crate::error::{Error, Result};
use crate::exact::{fmt_ratio, ratio_to_f64};
use crate::sampling::substream;

/// Largest block count searched exhaustively.
pub const MAX_EXHAUSTIVE_BLOCKS: usize = 22;

/// Low bits enumerated by one Gray-code run; the rest index parallel chunks.
const GRAY_BITS: usize = 14;

/// Per-pair deviation contributions `w_a w_b (cell_ab - N_PQ)`, scaled to
/// integers when they fit.
enum Contrib {
    Int(Vec<Vec<i128>>),
    Float(Vec<Vec<f64>>),
}

fn contributions(kernel: &IntKernel, part: &Partition, sums: &PartSums) -> Contrib {
    let n = kernel.num_blocks();
    let k = part.num_parts();
    let normal: Vec<Vec<BigRational>> = (0..k)
        .map(|p| (0..k).map(|q| sums.normalised(p, q)).collect())
        .collect();
    let l = normal
        .iter()
        .flatten()
        .fold(BigInt::from(1), |acc, r| acc.lcm(r.denom()));
    let exact: Vec<Vec<BigInt>> = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    let w = BigInt::from(kernel.width_numerator(a) * kernel.width_numerator(b));
                    let structured = &normal[part.part_of(a)][part.part_of(b)];
                    let v = BigRational::from_integer(BigInt::from(kernel.cell(a, b))) - structured;
                    (v * BigRational::from_integer(&l * w)).to_integer()
                })
                .collect()
        })
        .collect();
    // a row sum over n terms, summed again over n columns, must fit
    let bound = BigInt::from(i128::MAX) / BigInt::from((n * n).max(1));
    if exact.iter().flatten().all(|v| v.abs() <= bound) {
        Contrib::Int(
            exact
                .iter()
                .map(|r| r.iter().map(|v| v.to_i128().unwrap()).collect())
                .collect(),
        )
    } else {
        Contrib::Float(
            exact
                .iter()
                .map(|r| r.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect())
                .collect(),
        )
    }
}

/// Best `(value, a_mask, b_mask)` over `A` masks with the given high bits.
fn scan_chunk<T>(d: &[Vec<T>], high: u64, low_bits: usize) -> (T, u64, u64)
where
    T: Copy
        + PartialOrd
        + Default
        + std::ops::Add<Output = T>
        + std::ops::Sub<Output = T>
        + std::ops::Neg<Output = T>,
{
    let n = d.len();
    let zero = T::default();
    let mut r = vec![zero; n];
    for a in 0..n {
        if high >> a & 1 == 1 {
            for b in 0..n {
                r[b] = r[b] + d[a][b];
            }
        }
    }
    let mut best = (zero, u64::MAX, u64::MAX);
    let mut gray = 0u64;
    let consider = |mask: u64, r: &[T], best: &mut (T, u64, u64)| {
        let (mut pos, mut neg) = (zero, zero);
        let (mut pmask, mut nmask) = (0u64, 0u64);
        for (b, &v) in r.iter().enumerate() {
            if v > zero {
                pos = pos + v;
                pmask |= 1 << b;
            } else if v < zero {
                neg = neg - v;
                nmask |= 1 << b;
            }
        }
        for (val, bm) in [(pos, pmask), (neg, nmask)] {
            if val > best.0 || (val == best.0 && (mask, bm) < (best.1, best.2)) {
                *best = (val, mask, bm);
            }
        }
    };
    consider(high, &r, &mut best);
    for step in 1u64..(1u64 << low_bits) {
        let bit = step.trailing_zeros() as usize;
        gray ^= 1 << bit;
        if gray >> bit & 1 == 1 {
            for b in 0..n {
                r[b] = r[b] + d[bit][b];
            }
        } else {
            for b in 0..n {
                r[b] = r[b] - d[bit][b];
            }
        }
        consider(high | gray, &r, &mut best);
    }
    best
}

fn exhaustive<T>(d: &[Vec<T>]) -> (u64, u64)
where
    T: Copy
        + PartialOrd
        + Default
        + Send
        + Sync
        + std::ops::Add<Output = T>
        + std::ops::Sub<Output = T>
        + std::ops::Neg<Output = T>,
{
    let n = d.len();
    let low = n.min(GRAY_BITS);
    let chunks = 1u64 << (n - low);
    let best = (0..chunks)
        .into_par_iter()
        .map(|c| scan_chunk(d, c << low, low))
        .reduce(
            || (T::default(), u64::MAX, u64::MAX),
            |x, y| {
                if y.0 > x.0 || (y.0 == x.0 && (y.1, y.2) < (x.1, x.2)) {
                    y
                } else {
                    x
                }
            },
        );
    (best.1, best.2)
}

fn mask_masses(kernel: &IntKernel, mask: u64) -> Vec<i128> {
    (0..kernel.num_blocks())
        .map(|b| {
            if mask >> b & 1 == 1 {
                kernel.width_numerator(b)
            } else {
                0
            }
        })
        .collect()
}

fn witness(
    kernel: &IntKernel,
    part: &Partition,
    sums: &PartSums,
    a: &[i128],
    b: &[i128],
    exhaustive: bool,
) -> DeviationWitness {
    let d = signed_deviation(kernel, part, sums, a, b).abs();
    DeviationWitness {
        a: kernel.mass_set(a),
        b: kernel.mass_set(b),
        deviation: d,
        exhaustive,
    }
}

/// The largest deviation over all pairs of block subsets. Ties go to the
/// smallest `A` mask (bit `i` = block `i`), then the smallest `B` mask.
pub fn deviation_exact(kernel: &IntKernel, part: &Partition) -> Result<DeviationWitness> {
    let n = kernel.num_blocks();
    if n > MAX_EXHAUSTIVE_BLOCKS {
        return Err(Error::TooManyBlocks {
            blocks: n,
            limit: MAX_EXHAUSTIVE_BLOCKS,
        });
    }
    let sums = PartSums::new(kernel, part);
    let (am, bm) = match contributions(kernel, part, &sums) {
        Contrib::Int(d) => exhaustive(&d),
        // float ranking, exact value of the chosen pair
        Contrib::Float(d) => exhaustive(&d),
    };
    let (a, b) = if am == u64::MAX {
        (vec![0; n], vec![0; n])
    } else {
        (mask_masses(kernel, am), mask_masses(kernel, bm))
    };
    Ok(witness(kernel, part, &sums, &a, &b, true))
}

/// `r_b = w_b (sum_a x_a cell_ab - sum_P x_P N_{P,Q(b)})` in floating point.
fn marginals(kernel: &IntKernel, part: &Partition, normal: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    let y = kernel.apply_f64(x);
    let k = part.num_parts();
    let mut xp = vec![0.0; k];
    for (blk, &v) in x.iter().enumerate() {
        xp[part.part_of(blk)] += v;
    }
    let structured: Vec<f64> = (0..k)
        .map(|q| (0..k).map(|p| xp[p] * normal[p][q]).sum())
        .collect();
    (0..kernel.num_blocks())
        .map(|b| kernel.width_numerator(b) as f64 * (y[b] - structured[part.part_of(b)]))
        .collect()
}

/// Alternating maximisation from random starts. The returned deviation is
/// computed exactly from the returned sets, so it is a certified lower bound.
pub fn deviation_heuristic(
    kernel: &IntKernel,
    part: &Partition,
    restarts: u32,
    seed: u64,
) -> DeviationWitness {
    let n = kernel.num_blocks();
    let sums = PartSums::new(kernel, part);
    let k = part.num_parts();
    let normal: Vec<Vec<f64>> = (0..k)
        .map(|p| {
            (0..k)
                .map(|q| ratio_to_f64(&sums.normalised(p, q)))
                .collect()
        })
        .collect();
    let runs: Vec<(f64, u32, Vec<bool>, Vec<bool>)> = (0..restarts.max(1))
        .into_par_iter()
        .flat_map_iter(|restart| {
            let mut rng = substream(seed, restart as u64);
            let start: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
            let normal = &normal;
            [1.0f64, -1.0].into_iter().map(move |sign| {
                let to_weights = |m: &[bool]| -> Vec<f64> {
                    m.iter()
                        .enumerate()
                        .map(|(b, &s)| {
                            if s {
                                kernel.width_numerator(b) as f64
                            } else {
                                0.0
                            }
                        })
                        .collect()
                };
                let mut a = start.clone();
                let mut best = (f64::NEG_INFINITY, a.clone(), a.clone());
                for _ in 0..1000 {
                    let r = marginals(kernel, part, normal, &to_weights(&a));
                    let b: Vec<bool> = r.iter().map(|&v| sign * v > 0.0).collect();
                    let r2 = marginals(kernel, part, normal, &to_weights(&b));
                    let next: Vec<bool> = r2.iter().map(|&v| sign * v > 0.0).collect();
                    let v: f64 = r2
                        .iter()
                        .zip(&next)
                        .filter(|(_, &s)| s)
                        .map(|(x, _)| sign * x)
                        .sum();
                    if v <= best.0 + 1e-12 * v.abs() {
                        break;
                    }
                    best = (v, next.clone(), b);
                    a = next;
                }
                let (value, a, b) = best;
                (value, restart, a, b)
            })
        })
        .collect();
    let sums_ref = &sums;
    let mut best: Option<DeviationWitness> = None;
    for (_, _, a, b) in runs {
        let am: Vec<i128> = a
            .iter()
            .enumerate()
            .map(|(i, &s)| if s { kernel.width_numerator(i) } else { 0 })
            .collect();
        let bm: Vec<i128> = b
            .iter()
            .enumerate()
            .map(|(i, &s)| if s { kernel.width_numerator(i) } else { 0 })
            .collect();
        let w = witness(kernel, part, sums_ref, &am, &bm, false);
        if best.as_ref().is_none_or(|x| w.deviation > x.deviation) {
            best = Some(w);
        }
    }
    best.expect("at least one restart")
}

/// One refinement step of [`fk_partition`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub step: usize,
    pub parts: usize,
    pub energy: String,
    pub energy_decimal: f64,
    /// deviation of the witness found for this partition
    pub deviation: String,
    pub deviation_decimal: f64,
    pub exhaustive: bool,
}

#[derive(Debug, Clone)]
pub struct FkResult {
    pub partition: Partition,
    pub trace: Vec<EnergyRecord>,
    /// last witness found, with deviation at most epsilon
    pub witness: DeviationWitness,
}

/// Refines from the single part by intersecting with deviation witnesses
/// until none exceeds `epsilon`. Each step must raise the energy by at
/// least `epsilon^2`.
pub fn fk_partition(
    kernel: &IntKernel,
    epsilon: &BigRational,
    restarts: u32,
    seed: u64,
) -> Result<FkResult> {
    if !epsilon.is_positive() {
        return Err(Error::OutOfRange(format!(
            "epsilon {} must be positive",
            fmt_ratio(epsilon)
        )));
    }
    let n = kernel.num_blocks();
    let inv = BigRational::from_integer(BigInt::from(1)) / (epsilon * epsilon);
    let budget = inv
        .ceil()
        .to_integer()
        .to_usize()
        .unwrap_or(usize::MAX)
        .saturating_add(1);
    let eps_sq = epsilon * epsilon;
    let mut part = Partition::single(n);
    let mut trace = Vec::new();
    for step in 0.. {
        let sums = PartSums::new(kernel, &part);
        let e = energy_from_sums(kernel, &sums);
        let w = if n <= MAX_EXHAUSTIVE_BLOCKS {
            deviation_exact(kernel, &part)?
        } else {
            deviation_heuristic(kernel, &part, restarts, seed.wrapping_add(step as u64))
        };
        if let Some(prev) = trace.last() {
            let prev: &EnergyRecord = prev;
            let prev_e: BigRational = crate::exact::parse_ratio(&prev.energy)?;
            let prev_d: BigRational = crate::exact::parse_ratio(&prev.deviation)?;
            if &e - &prev_e < &prev_d * &prev_d || &e - &prev_e < eps_sq {
                return Err(Error::BudgetExceeded(format!(
                    "energy rose by {} at step {step}, below the squared deviation",
                    fmt_ratio(&(&e - &prev_e))
                )));
            }
        }
        trace.push(EnergyRecord {
            step,
            parts: part.num_parts(),
            energy: fmt_ratio(&e),
            energy_decimal: ratio_to_f64(&e),
            deviation: fmt_ratio(&w.deviation),
            deviation_decimal: w.deviation_f64(),
            exhaustive: w.exhaustive,
        });
        if &w.deviation <= epsilon {
            return Ok(FkResult {
                partition: part,
                trace,
                witness: w,
            });
        }
        if step + 1 > budget {
            return Err(Error::BudgetExceeded(format!(
                "more than {budget} refinement steps"
            )));
        }
        let a = kernel.masses(&w.a)?;
        let b = kernel.masses(&w.b)?;
        let am: Vec<bool> = a.iter().map(|&v| v != 0).collect();
        let bm: Vec<bool> = b.iter().map(|&v| v != 0).collect();
        part = part.refine(&am, &bm);
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ratio;
    use crate::graphons::{make_cf, make_constant, Graphon, StepGraphon};
    use num_traits::Zero;

    fn kernel(g: &Graphon) -> IntKernel {
        IntKernel::from_graphon(g).unwrap()
    }

    #[test]
    fn constant_and_own_blocks_have_zero_deviation() {
        let k = kernel(&make_constant(ratio(1, 3)).unwrap());
        let w = deviation_exact(&k, &Partition::single(1)).unwrap();
        assert!(w.deviation.is_zero());
        assert!(deviation_heuristic(&k, &Partition::single(1), 4, 1)
            .deviation
            .is_zero());

        let k = kernel(&make_cf(4).unwrap());
        let own = Partition::from_assignment((0..16).collect()).unwrap();
        assert!(deviation_exact(&k, &own).unwrap().deviation.is_zero());
    }

    /// Brute force over all `2^n x 2^n` block-subset pairs.
    fn brute(k: &IntKernel, p: &Partition) -> BigRational {
        let n = k.num_blocks();
        let sums = PartSums::new(k, p);
        let mut best = BigRational::zero();
        for am in 0..1u64 << n {
            for bm in 0..1u64 << n {
                let d =
                    signed_deviation(k, p, &sums, &mask_masses(k, am), &mask_masses(k, bm)).abs();
                if d > best {
                    best = d;
                }
            }
        }
        best
    }

    #[test]
    fn exhaustive_matches_brute_force() {
        let vals: Vec<Vec<BigRational>> = (0..6)
            .map(|i| {
                (0..6)
                    .map(|j| ratio(((i * j + i + j) % 5) as i64, 4).min(ratio(1, 1)))
                    .collect()
            })
            .collect();
        let k = kernel(&Graphon::Step(StepGraphon::uniform(vals).unwrap()));
        for assign in [vec![0; 6], vec![0, 0, 0, 1, 1, 1], vec![0, 1, 2, 0, 1, 2]] {
            let p = Partition::from_assignment(assign).unwrap();
            assert_eq!(deviation_exact(&k, &p).unwrap().deviation, brute(&k, &p));
        }
        let s = StepGraphon::new(
            vec![ratio(0, 1), ratio(1, 5), ratio(1, 2), ratio(1, 1)],
            vec![
                vec![ratio(1, 1), ratio(0, 1), ratio(1, 3)],
                vec![ratio(0, 1), ratio(1, 2), ratio(1, 1)],
                vec![ratio(1, 3), ratio(1, 1), ratio(0, 1)],
            ],
        )
        .unwrap();
        let k = kernel(&Graphon::Step(s));
        let p = Partition::single(3);
        assert_eq!(deviation_exact(&k, &p).unwrap().deviation, brute(&k, &p));
    }

    #[test]
    fn cf4_single_part() {
        let k = kernel(&make_cf(4).unwrap());
        let p = Partition::single(16);
        let w = deviation_exact(&k, &p).unwrap();
        assert!(w.deviation > BigRational::zero());
        let again = super::super::signed_deviation(
            &k,
            &p,
            &PartSums::new(&k, &p),
            &k.masses(&w.a).unwrap(),
            &k.masses(&w.b).unwrap(),
        );
        assert_eq!(again.abs(), w.deviation);
        let h = deviation_heuristic(&k, &p, 20, 7);
        assert!(h.deviation <= w.deviation);
        assert!(h.deviation > BigRational::zero());
    }

    #[test]
    fn fk_trivial_cases() {
        let k = kernel(&make_constant(ratio(1, 2)).unwrap());
        let r = fk_partition(&k, &ratio(1, 10), 4, 0).unwrap();
        assert_eq!(r.partition.num_parts(), 1);
        assert_eq!(r.trace.len(), 1);
        let k = kernel(&make_cf(4).unwrap());
        let r = fk_partition(&k, &ratio(1, 1), 4, 0).unwrap();
        assert_eq!(r.partition.num_parts(), 1);
    }

    #[test]
    fn fk_cf4_energy_law() {
        let k = kernel(&make_cf(4).unwrap());
        let eps = ratio(1, 20);
        let r = fk_partition(&k, &eps, 8, 0).unwrap();
        for w in r.trace.windows(2) {
            assert!(w[1].energy_decimal - w[0].energy_decimal >= 0.0025 - 1e-15);
        }
        assert!(r.witness.deviation <= eps);
        assert!(deviation_exact(&k, &r.partition).unwrap().deviation <= eps);
    }
}
