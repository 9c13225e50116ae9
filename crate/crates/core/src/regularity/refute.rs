//! Constructive lower bound on the regularity of `W_CF^m`: for a partition
//! with fewer than `2^(m/4)` parts, builds sets `A-`, `A+`, `B` whose
//! densities differ although the partition cannot tell `A-` from `A+`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use super::{fwht, IntKernel, Partition, PartitionSpec};
use crate::error::{Error, Result};
use crate::exact::{binomial_row, fmt_ratio, ratio, Surd};
use crate::graphons::cf::cf_cell_surd;
use crate::graphons::{Set, SetSpec};

/// Largest `m` the refuter handles (`2^m` blocks are enumerated).
pub const MAX_REFUTE_M: u32 = 22;

/// `A-`/`A+` take `|U_t| / FRACTION` from each useful part.
const FRACTION: i128 = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub m: u32,
    /// chosen coordinate, 1-based
    pub i0: u32,
    /// `S_t = sum_i |U_t n V_i-| |U_t n V_i+|` per part
    pub s: Vec<String>,
    pub small: Vec<bool>,
    /// per part, the coordinates `i` with `(i, t)` useful
    pub useful: Vec<Vec<u32>>,
    pub m_counts: Vec<u32>,
    /// whether `sum_t M_t |U_t| >= m / 32`
    pub mass_bound_holds: bool,
    /// false when `m < 25`, where the lower bound is not guaranteed
    pub guarantee_applies: bool,
    pub a_minus: SetSpec,
    pub a_plus: SetSpec,
    pub b: SetSpec,
    pub discrepancy: String,
    pub discrepancy_decimal: f64,
    pub implied_epsilon: String,
    pub implied_epsilon_decimal: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefuteVerdict {
    pub intersections_equal: bool,
    pub a_minus_inside: bool,
    pub a_plus_inside: bool,
    pub b_is_half_cube: bool,
    pub discrepancy_matches: bool,
    pub recomputed: String,
}

impl RefuteVerdict {
    pub fn verified(&self) -> bool {
        self.intersections_equal
            && self.a_minus_inside
            && self.a_plus_inside
            && self.b_is_half_cube
            && self.discrepancy_matches
    }
}

fn check_m(m: u32) -> Result<()> {
    if m == 0 {
        return Err(Error::OutOfRange("m must be positive".into()));
    }
    if m > MAX_REFUTE_M {
        return Err(Error::TooManyBlocks {
            blocks: 1usize << m.min(62),
            limit: 1usize << MAX_REFUTE_M,
        });
    }
    Ok(())
}

fn read_partition(m: u32, spec: &PartitionSpec) -> Result<Partition> {
    let grid = IntKernel::uniform_grid(1usize << m);
    Partition::from_spec(spec, &grid)
}

fn minus_side(block: usize, i: u32) -> bool {
    block >> (i - 1) & 1 == 0
}

fn half_cube(m: u32, i: u32) -> Set {
    let n = 1u64 << m;
    Set::whole_blocks(n, (0..n).filter(|&b| minus_side(b as usize, i))).expect("blocks in range")
}

/// Average cell value between a block and `V_i-`, for a block on the
/// minus side (`same`) or the plus side.
fn row_to_half(m: u32, same: bool) -> Surd {
    let mm = m as u64;
    let row = binomial_row(mm - 1);
    let mut acc = Surd::zero(mm);
    for (h, c) in row.iter().enumerate() {
        let ip = mm as i64 - 2 * h as i64 - if same { 0 } else { 2 };
        let weight = BigRational::new(BigInt::from(c.clone()), BigInt::from(1u64) << m);
        acc = &acc + &cf_cell_surd(mm, ip).scale(&weight);
    }
    acc
}

fn abs(s: Surd) -> Surd {
    if s.signum() < 0 {
        s.scale(&ratio(-1, 1))
    } else {
        s
    }
}

/// Builds the witness for partition `spec` of `W_CF^m`'s `2^m` blocks.
pub fn refute_cf(m: u32, spec: &PartitionSpec) -> Result<WitnessReport> {
    check_m(m)?;
    let part = read_partition(m, spec)?;
    let k = part.num_parts() as u128;
    if k.pow(4) >= 1u128 << m {
        return Err(Error::PreconditionViolated(format!(
            "{k} parts is not below 2^(m/4) for m = {m}"
        )));
    }
    let n = 1usize << m;
    let k = part.num_parts();
    let mut sizes = vec![0u64; k];
    let mut minus = vec![vec![0u64; m as usize]; k];
    for b in 0..n {
        let t = part.part_of(b);
        sizes[t] += 1;
        for i in 1..=m {
            if minus_side(b, i) {
                minus[t][(i - 1) as usize] += 1;
            }
        }
    }
    let nn = BigInt::from(n as u64);
    let mut s = Vec::with_capacity(k);
    let mut small = Vec::with_capacity(k);
    let mut useful = Vec::with_capacity(k);
    let mut m_counts = Vec::with_capacity(k);
    for t in 0..k {
        let nt = sizes[t];
        let st: u128 = minus[t].iter().map(|&c| c as u128 * (nt - c) as u128).sum();
        s.push(fmt_ratio(&BigRational::new(BigInt::from(st), &nn * &nn)));
        // |U_t| <= 2^(-m/3)  <=>  n_t^3 <= 2^(2m)
        small.push((nt as u128).pow(3) <= 1u128 << (2 * m));
        let u: Vec<u32> = (1..=m)
            .filter(|&i| {
                let c = minus[t][(i - 1) as usize];
                64 * c.min(nt - c) >= nt
            })
            .collect();
        m_counts.push(u.len() as u32);
        useful.push(u);
    }
    let weighted: u128 = (0..k).map(|t| m_counts[t] as u128 * sizes[t] as u128).sum();
    let mass_bound_holds = 32 * weighted >= m as u128 * n as u128;

    let i0 = (1..=m)
        .max_by_key(|&i| {
            let mass: u64 = (0..k)
                .filter(|&t| useful[t].contains(&i))
                .map(|t| sizes[t])
                .sum();
            (mass, std::cmp::Reverse(i))
        })
        .expect("m >= 1");

    // fill |U_t| / 64 of each useful part, lowest block first, in units of 1/(64 n)
    let unit = BigInt::from(FRACTION) * &nn;
    let mut need_minus: Vec<i128> = (0..k)
        .map(|t| {
            if useful[t].contains(&i0) {
                sizes[t] as i128
            } else {
                0
            }
        })
        .collect();
    let mut need_plus = need_minus.clone();
    let mut a_minus = Vec::new();
    let mut a_plus = Vec::new();
    for b in 0..n {
        let t = part.part_of(b);
        let (need, out) = if minus_side(b, i0) {
            (&mut need_minus[t], &mut a_minus)
        } else {
            (&mut need_plus[t], &mut a_plus)
        };
        if *need > 0 {
            let take = (*need).min(FRACTION);
            *need -= take;
            out.push((b as u64, BigRational::new(BigInt::from(take), unit.clone())));
        }
    }
    let a_minus = Set::blocks(n as u64, a_minus)?;
    let a_plus = Set::blocks(n as u64, a_plus)?;
    let b = half_cube(m, i0);

    // every block of A- (resp. A+) sees B with the same average cell value
    let gap = &row_to_half(m, true) + &row_to_half(m, false).scale(&ratio(-1, 1));
    let discrepancy = abs(gap.scale(&a_minus.measure()));
    let implied = discrepancy.scale(&ratio(1, 2));
    Ok(WitnessReport {
        m,
        i0,
        s,
        small,
        useful,
        m_counts,
        mass_bound_holds,
        guarantee_applies: m >= 25,
        a_minus: a_minus.to_spec(),
        a_plus: a_plus.to_spec(),
        b: b.to_spec(),
        discrepancy: discrepancy.to_string(),
        discrepancy_decimal: discrepancy.to_f64(),
        implied_epsilon: implied.to_string(),
        implied_epsilon_decimal: implied.to_f64(),
    })
}

/// Block masses of a set in units of `1 / (64 n)`.
fn units(set: &Set, m: u32) -> Result<Vec<i128>> {
    let n = 1u64 << m;
    let scale = BigRational::from_integer(BigInt::from(FRACTION as u64 * n));
    let mut out = vec![0i128; n as usize];
    for (b, w) in set.to_grid(n)? {
        let u = w * &scale;
        if !u.is_integer() {
            return Err(Error::GridMismatch(format!(
                "block {b} mass is not a multiple of 1/(64*2^{m})"
            )));
        }
        out[b as usize] = u.to_integer().to_i128().unwrap_or(i128::MAX);
    }
    Ok(out)
}

/// `d(A, B)` via a XOR correlation: the cell value depends only on `a ^ b`.
fn density(m: u32, a: &[i128], b: &[i128]) -> Surd {
    let n = a.len();
    let mut fa = a.to_vec();
    let mut fb = b.to_vec();
    fwht(&mut fa);
    fwht(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    fwht(&mut fa);
    let mut by_weight = vec![0i128; m as usize + 1];
    for (x, c) in fa.iter().enumerate() {
        by_weight[x.count_ones() as usize] += c / n as i128;
    }
    let scale = BigInt::from(FRACTION as u64 * n as u64);
    let mut acc = Surd::zero(m as u64);
    for (h, &t) in by_weight.iter().enumerate() {
        if t != 0 {
            let w = BigRational::new(BigInt::from(t), &scale * &scale);
            acc = &acc + &cf_cell_surd(m as u64, m as i64 - 2 * h as i64).scale(&w);
        }
    }
    acc
}

/// Rechecks a report against the partition without reusing the refuter's
/// bookkeeping.
pub fn refute_verify(
    report: &WitnessReport,
    m: u32,
    spec: &PartitionSpec,
) -> Result<RefuteVerdict> {
    check_m(m)?;
    let part = read_partition(m, spec)?;
    let i0 = report.i0;
    if report.m != m || i0 == 0 || i0 > m {
        return Err(Error::InvalidSet(format!(
            "report is for m = {}, i0 = {i0}",
            report.m
        )));
    }
    let am = units(&Set::try_from(&report.a_minus)?, m)?;
    let ap = units(&Set::try_from(&report.a_plus)?, m)?;
    let b = units(&Set::try_from(&report.b)?, m)?;
    let n = 1usize << m;
    let mut per_part = vec![(0i128, 0i128); part.num_parts()];
    for blk in 0..n {
        let t = part.part_of(blk);
        per_part[t].0 += am[blk];
        per_part[t].1 += ap[blk];
    }
    let intersections_equal = per_part.iter().all(|(x, y)| x == y);
    let a_minus_inside = (0..n).all(|blk| am[blk] == 0 || minus_side(blk, i0));
    let a_plus_inside = (0..n).all(|blk| ap[blk] == 0 || !minus_side(blk, i0));
    let b_is_half_cube = (0..n).all(|blk| b[blk] == if minus_side(blk, i0) { FRACTION } else { 0 });
    let ind: Vec<i128> = b.iter().map(|&v| (v != 0) as i128).collect();
    // d(A, B) with B's indicator in place of its masses: rescale by 1/64
    let diff = &density(m, &am, &ind) + &density(m, &ap, &ind).scale(&ratio(-1, 1));
    let recomputed = abs(diff.scale(&ratio(FRACTION as i64, 1)));
    let discrepancy_matches = recomputed.to_string() == report.discrepancy;
    Ok(RefuteVerdict {
        intersections_equal,
        a_minus_inside,
        a_plus_inside,
        b_is_half_cube,
        discrepancy_matches,
        recomputed: recomputed.to_string(),
    })
}

/// Partition of `2^m` blocks by the signs of the first `coords` coordinates.
pub fn coordinate_partition(m: u32, coords: u32) -> PartitionSpec {
    let n = 1u64 << m;
    PartitionSpec {
        grid: Some(n),
        parts: (0..1u64 << coords)
            .map(|p| {
                Set::whole_blocks(n, (0..n).filter(|b| b & ((1 << coords) - 1) == p))
                    .expect("blocks in range")
                    .to_spec()
            })
            .collect(),
    }
}

/// Partition of `2^m` blocks from a block-to-part assignment.
pub fn assignment_partition(m: u32, part_of: &[usize]) -> Result<PartitionSpec> {
    let n = 1u64 << m;
    if part_of.len() as u64 != n {
        return Err(Error::GridMismatch(format!(
            "{} assignments for {n} blocks",
            part_of.len()
        )));
    }
    let p = Partition::from_assignment(part_of.to_vec())?;
    Ok(p.to_spec(&IntKernel::uniform_grid(n as usize)))
}
