//! Weak regularity: partitions of a block structure, their energy, the
//! deviation of a pair of sets, and the Conlon-Fox refuter.
//!
//! All partitions here are unions of whole blocks of the graphon. Widths
//! and cell values are held as integers over common denominators, so sums
//! are exact without rational arithmetic in the inner loops.

mod refute;
mod search;

pub use refute::{
    assignment_partition, coordinate_partition, refute_cf, refute_verify, RefuteVerdict,
    WitnessReport, MAX_REFUTE_M,
};
pub use search::{
    deviation_exact, deviation_heuristic, fk_partition, EnergyRecord, FkResult,
    MAX_EXHAUSTIVE_BLOCKS,
};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{fmt_ratio, ratio_to_f64};
use crate::graphons::{CfGraphon, Graphon, Set, SetSpec};

/// Largest number of blocks handled at all.
pub const MAX_BLOCKS: usize = 1 << 22;

/// In-place Walsh-Hadamard transform (unnormalised).
pub fn fwht<T>(v: &mut [T])
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Sub<Output = T>,
{
    let n = v.len();
    assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for i in (0..n).step_by(2 * h) {
            for j in i..i + h {
                let (a, b) = (v[j], v[j + h]);
                v[j] = a + b;
                v[j + h] = a - b;
            }
        }
        h *= 2;
    }
}

#[derive(Debug, Clone)]
enum Cells {
    /// row-major `n x n` numerators
    Dense(Vec<i128>),
    /// cell numerator as a function of the Hamming distance, and its transform
    Cf {
        by_distance: Vec<i128>,
        spectrum: Vec<i128>,
        spectrum_f64: Vec<f64>,
    },
}

/// A block structure with widths `ws[i] / wden` and cells `cell(i,j) / cden`.
#[derive(Debug, Clone)]
pub struct IntKernel {
    n: usize,
    ws: Vec<i128>,
    wden: i128,
    cden: i128,
    cells: Cells,
}

fn lcm_of<'a>(it: impl Iterator<Item = &'a BigInt>) -> BigInt {
    it.fold(BigInt::from(1), |acc, d| acc.lcm(d))
}

fn small(v: &BigInt, what: &str) -> Result<i128> {
    v.to_i64()
        .map(|x| x as i128)
        .ok_or_else(|| Error::Unsupported(format!("{what} too large for exact integer search")))
}

impl IntKernel {
    pub fn from_graphon(g: &Graphon) -> Result<IntKernel> {
        match g {
            Graphon::Constant(s) | Graphon::Step(s) => {
                let n = s.num_blocks();
                let widths: Vec<BigRational> = (0..n).map(|i| s.width(i)).collect();
                let wden = lcm_of(widths.iter().map(|w| w.denom()));
                let cden = lcm_of(
                    (0..n)
                        .flat_map(|i| (0..n).map(move |j| (i, j)))
                        .map(|(i, j)| s.value(i, j).denom()),
                );
                let ws = widths
                    .iter()
                    .map(|w| small(&(w.numer() * (&wden / w.denom())), "block width"))
                    .collect::<Result<_>>()?;
                let mut cells = Vec::with_capacity(n * n);
                for i in 0..n {
                    for j in 0..n {
                        let v = s.value(i, j);
                        cells.push(small(&(v.numer() * (&cden / v.denom())), "cell value")?);
                    }
                }
                Ok(IntKernel {
                    n,
                    ws,
                    wden: small(&wden, "width denominator")?,
                    cden: small(&cden, "cell denominator")?,
                    cells: Cells::Dense(cells),
                })
            }
            Graphon::ConlonFox(c) => IntKernel::from_cf(c),
            _ => Err(Error::Unsupported(format!(
                "{:?} graphons have no exact block structure",
                g.kind()
            ))),
        }
    }

    pub fn from_cf(c: &CfGraphon) -> Result<IntKernel> {
        let cden = c
            .scale()
            .ok_or_else(|| Error::Unsupported(format!("m={} is not a perfect square", c.m())))?
            as i128;
        let n = c.num_blocks() as usize;
        if n > MAX_BLOCKS {
            return Err(Error::TooManyBlocks {
                blocks: n,
                limit: MAX_BLOCKS,
            });
        }
        let m = c.m() as usize;
        let by_distance: Vec<i128> = (0..=m)
            .map(|h| c.cell_scaled(0, (1u64 << h) - 1).unwrap() as i128)
            .collect();
        let mut spectrum: Vec<i128> = (0..n)
            .map(|x| by_distance[(x as u64).count_ones() as usize])
            .collect();
        fwht(&mut spectrum);
        let spectrum_f64 = spectrum.iter().map(|&v| v as f64).collect();
        Ok(IntKernel {
            n,
            ws: vec![1; n],
            wden: n as i128,
            cden,
            cells: Cells::Cf {
                by_distance,
                spectrum,
                spectrum_f64,
            },
        })
    }

    /// `n` equal blocks without cell values, for reading partitions only.
    pub(crate) fn uniform_grid(n: usize) -> IntKernel {
        IntKernel {
            n,
            ws: vec![1; n],
            wden: n as i128,
            cden: 1,
            cells: Cells::Dense(Vec::new()),
        }
    }

    pub fn num_blocks(&self) -> usize {
        self.n
    }

    pub fn width_numerator(&self, i: usize) -> i128 {
        self.ws[i]
    }

    pub fn width_denominator(&self) -> i128 {
        self.wden
    }

    pub fn cell_denominator(&self) -> i128 {
        self.cden
    }

    pub fn cell(&self, i: usize, j: usize) -> i128 {
        match &self.cells {
            Cells::Dense(c) => c[i * self.n + j],
            Cells::Cf { by_distance, .. } => by_distance[(i ^ j).count_ones() as usize],
        }
    }

    pub fn is_uniform(&self) -> bool {
        self.ws.iter().all(|&w| w == self.ws[0])
    }

    /// `out[b] = sum_a v[a] cell(a, b)`, exactly.
    pub fn apply(&self, v: &[i128]) -> Vec<i128> {
        match &self.cells {
            Cells::Dense(c) => (0..self.n)
                .map(|b| {
                    (0..self.n)
                        .filter(|&a| v[a] != 0)
                        .map(|a| v[a] * c[a * self.n + b])
                        .sum()
                })
                .collect(),
            Cells::Cf { spectrum, .. } => {
                let mut t = v.to_vec();
                fwht(&mut t);
                for (x, s) in t.iter_mut().zip(spectrum) {
                    *x *= s;
                }
                fwht(&mut t);
                t.iter().map(|x| x / self.n as i128).collect()
            }
        }
    }

    /// Floating-point [`apply`](Self::apply), for searches.
    pub fn apply_f64(&self, v: &[f64]) -> Vec<f64> {
        match &self.cells {
            Cells::Dense(c) => (0..self.n)
                .map(|b| {
                    (0..self.n)
                        .filter(|&a| v[a] != 0.0)
                        .map(|a| v[a] * c[a * self.n + b] as f64)
                        .sum()
                })
                .collect(),
            Cells::Cf { spectrum_f64, .. } => {
                let mut t = v.to_vec();
                fwht(&mut t);
                for (x, s) in t.iter_mut().zip(spectrum_f64) {
                    *x *= s;
                }
                fwht(&mut t);
                let n = self.n as f64;
                t.iter().map(|x| x / n).collect()
            }
        }
    }

    /// Left breakpoint of block `i` as a rational.
    fn breakpoint(&self, prefix: &[i128], i: usize) -> BigRational {
        BigRational::new(BigInt::from(prefix[i]), BigInt::from(self.wden))
    }

    /// Masses of a set per block, in units of `1 / wden`.
    pub fn masses(&self, set: &Set) -> Result<Vec<i128>> {
        let mut out = vec![0i128; self.n];
        let scale = BigRational::from_integer(BigInt::from(self.wden));
        let to_units = |r: &BigRational| -> Result<i128> {
            let u = r * &scale;
            if !u.is_integer() {
                return Err(Error::GridMismatch(format!(
                    "mass {} is not a multiple of 1/{}",
                    fmt_ratio(r),
                    self.wden
                )));
            }
            small(&u.to_integer(), "mass")
        };
        match set {
            Set::Intervals(iv) => {
                let mut prefix = vec![0i128; self.n + 1];
                for i in 0..self.n {
                    prefix[i + 1] = prefix[i] + self.ws[i];
                }
                for (lo, hi) in iv {
                    let first = (lo * &scale).floor().to_integer().to_i128().unwrap_or(0);
                    let start = prefix.partition_point(|&p| p <= first).saturating_sub(1);
                    for (i, slot) in out.iter_mut().enumerate().skip(start) {
                        let a = self.breakpoint(&prefix, i);
                        if &a >= hi {
                            break;
                        }
                        let b = self.breakpoint(&prefix, i + 1);
                        let l = if lo > &a { lo.clone() } else { a };
                        let h = if hi < &b { hi.clone() } else { b };
                        if h > l {
                            *slot += to_units(&(h - l))?;
                        }
                    }
                }
            }
            Set::Blocks { grid, weights } => {
                if *grid as usize == self.n && self.is_uniform() {
                    for (b, w) in weights {
                        out[*b as usize] = to_units(w)?;
                    }
                } else {
                    // grid blocks must each sit inside one kernel block
                    let mut prefix = vec![0i128; self.n + 1];
                    for i in 0..self.n {
                        prefix[i + 1] = prefix[i] + self.ws[i];
                    }
                    if prefix.iter().any(|p| (p * *grid as i128) % self.wden != 0) {
                        return Err(Error::GridMismatch(format!(
                            "a grid of {grid} blocks does not refine the graphon's blocks"
                        )));
                    }
                    for (b, w) in weights {
                        let left = *b as i128 * self.wden / *grid as i128;
                        let i = prefix.partition_point(|&p| p <= left) - 1;
                        out[i] += to_units(w)?;
                    }
                }
            }
        }
        Ok(out)
    }

    /// A set made of whole blocks.
    pub fn block_set(&self, blocks: impl IntoIterator<Item = usize>) -> Set {
        let mut prefix = vec![0i128; self.n + 1];
        for i in 0..self.n {
            prefix[i + 1] = prefix[i] + self.ws[i];
        }
        let mut chosen: Vec<usize> = blocks.into_iter().collect();
        chosen.sort_unstable();
        chosen.dedup();
        if self.is_uniform() {
            return Set::whole_blocks(self.n as u64, chosen.iter().map(|&b| b as u64))
                .expect("valid blocks");
        }
        let mut iv: Vec<(BigRational, BigRational)> = Vec::new();
        for b in chosen {
            let lo = self.breakpoint(&prefix, b);
            let hi = self.breakpoint(&prefix, b + 1);
            match iv.last_mut() {
                Some(last) if last.1 == lo => last.1 = hi,
                _ => iv.push((lo, hi)),
            }
        }
        Set::Intervals(iv)
    }

    /// A set from masses in units of `1 / wden`.
    pub fn mass_set(&self, masses: &[i128]) -> Set {
        let den = BigInt::from(self.wden);
        if self.is_uniform() {
            return Set::blocks(
                self.n as u64,
                masses
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0)
                    .map(|(b, &v)| (b as u64, BigRational::new(BigInt::from(v), den.clone()))),
            )
            .expect("masses within block widths");
        }
        assert!(
            masses.iter().zip(&self.ws).all(|(&v, &w)| v == 0 || v == w),
            "partial masses need a uniform grid"
        );
        self.block_set(
            masses
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0)
                .map(|(b, _)| b),
        )
    }
}

/// Parts of a partition as listed in a file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<u64>,
    pub parts: Vec<SetSpec>,
}

/// A partition into unions of whole blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    part_of: Vec<usize>,
    k: usize,
}

impl Partition {
    pub fn single(n: usize) -> Partition {
        Partition {
            part_of: vec![0; n],
            k: 1,
        }
    }

    /// Validates a block-to-part assignment; every part must be non-empty.
    pub fn from_assignment(part_of: Vec<usize>) -> Result<Partition> {
        let k = part_of.iter().max().map_or(0, |m| m + 1);
        let mut seen = vec![false; k];
        for &p in &part_of {
            seen[p] = true;
        }
        if let Some(p) = seen.iter().position(|s| !s) {
            return Err(Error::NullPart(p));
        }
        Ok(Partition { part_of, k })
    }

    pub fn from_spec(spec: &PartitionSpec, kernel: &IntKernel) -> Result<Partition> {
        let n = kernel.num_blocks();
        let mut part_of = vec![usize::MAX; n];
        for (p, s) in spec.parts.iter().enumerate() {
            let set = Set::try_from(s)?;
            if let (Some(g), Some(h)) = (spec.grid, set.grid()) {
                if g != h {
                    return Err(Error::GridMismatch(format!(
                        "part {p} uses grid {h}, file declares {g}"
                    )));
                }
            }
            let masses = kernel.masses(&set)?;
            if masses.iter().all(|&v| v == 0) {
                return Err(Error::NullPart(p));
            }
            for (b, &v) in masses.iter().enumerate() {
                if v == 0 {
                    continue;
                }
                if v != kernel.width_numerator(b) {
                    return Err(Error::InvalidPartition(format!(
                        "part {p} covers block {b} only partially; parts must be unions of whole blocks"
                    )));
                }
                if part_of[b] != usize::MAX {
                    return Err(Error::InvalidPartition(format!(
                        "block {b} lies in parts {} and {p}",
                        part_of[b]
                    )));
                }
                part_of[b] = p;
            }
        }
        if let Some(b) = part_of.iter().position(|&p| p == usize::MAX) {
            return Err(Error::InvalidPartition(format!("block {b} is not covered")));
        }
        Ok(Partition {
            part_of,
            k: spec.parts.len(),
        })
    }

    pub fn to_spec(&self, kernel: &IntKernel) -> PartitionSpec {
        PartitionSpec {
            grid: kernel.is_uniform().then_some(kernel.num_blocks() as u64),
            parts: (0..self.k)
                .map(|p| kernel.block_set(self.blocks_of(p)).to_spec())
                .collect(),
        }
    }

    pub fn num_parts(&self) -> usize {
        self.k
    }

    pub fn num_blocks(&self) -> usize {
        self.part_of.len()
    }

    pub fn part_of(&self, block: usize) -> usize {
        self.part_of[block]
    }

    pub fn blocks_of(&self, p: usize) -> impl Iterator<Item = usize> + '_ {
        self.part_of
            .iter()
            .enumerate()
            .filter(move |(_, &q)| q == p)
            .map(|(b, _)| b)
    }

    /// Splits every part by membership in `a` and `b` (block masks),
    /// dropping empty pieces; pieces keep the order of their parents.
    pub fn refine(&self, a: &[bool], b: &[bool]) -> Partition {
        let mut ids = std::collections::BTreeMap::new();
        for (blk, &p) in self.part_of.iter().enumerate() {
            ids.entry((p, !a[blk], !b[blk])).or_insert(0usize);
        }
        for (i, v) in ids.values_mut().enumerate() {
            *v = i;
        }
        let part_of = self
            .part_of
            .iter()
            .enumerate()
            .map(|(blk, &p)| ids[&(p, !a[blk], !b[blk])])
            .collect();
        Partition {
            part_of,
            k: ids.len(),
        }
    }
}

/// Block sums of a partition: `S[p][q]` in units of `1 / (wden^2 cden)`
/// and part sizes in units of `1 / wden`.
#[derive(Debug, Clone)]
pub struct PartSums {
    pub s: Vec<Vec<i128>>,
    pub sizes: Vec<i128>,
}

impl PartSums {
    pub fn new(kernel: &IntKernel, part: &Partition) -> PartSums {
        let k = part.num_parts();
        let n = kernel.num_blocks();
        let mut sizes = vec![0i128; k];
        for b in 0..n {
            sizes[part.part_of(b)] += kernel.width_numerator(b);
        }
        let columns: Vec<Vec<i128>> = {
            use rayon::prelude::*;
            (0..k)
                .into_par_iter()
                .map(|q| {
                    let v: Vec<i128> = (0..n)
                        .map(|b| {
                            if part.part_of(b) == q {
                                kernel.width_numerator(b)
                            } else {
                                0
                            }
                        })
                        .collect();
                    let y = kernel.apply(&v);
                    let mut col = vec![0i128; k];
                    for a in 0..n {
                        col[part.part_of(a)] += kernel.width_numerator(a) * y[a];
                    }
                    col
                })
                .collect()
        };
        let s = (0..k)
            .map(|p| (0..k).map(|q| columns[q][p]).collect())
            .collect();
        PartSums { s, sizes }
    }

    /// `d(U_p, U_q) / (|U_p| |U_q|)` in units of `1 / cden`.
    pub fn normalised(&self, p: usize, q: usize) -> BigRational {
        BigRational::new(
            BigInt::from(self.s[p][q]),
            BigInt::from(self.sizes[p]) * BigInt::from(self.sizes[q]),
        )
    }
}

/// `sum_{p,q} d(U_p,U_q)^2 / (|U_p| |U_q|)`, exactly.
pub fn energy(kernel: &IntKernel, part: &Partition) -> BigRational {
    energy_from_sums(kernel, &PartSums::new(kernel, part))
}

fn energy_from_sums(kernel: &IntKernel, sums: &PartSums) -> BigRational {
    let k = sums.sizes.len();
    let mut acc = BigRational::zero();
    for p in 0..k {
        for q in 0..k {
            let s = BigInt::from(sums.s[p][q]);
            acc += BigRational::new(
                &s * &s,
                BigInt::from(sums.sizes[p]) * BigInt::from(sums.sizes[q]),
            );
        }
    }
    let w = BigInt::from(kernel.width_denominator());
    let c = BigInt::from(kernel.cell_denominator());
    acc / BigRational::from_integer(&w * &w * &c * &c)
}

/// `energy` for a graphon given as a [`PartitionSpec`].
pub fn energy_of(g: &Graphon, spec: &PartitionSpec) -> Result<BigRational> {
    let kernel = IntKernel::from_graphon(g)?;
    let part = Partition::from_spec(spec, &kernel)?;
    Ok(energy(&kernel, &part))
}

/// `d(A,B) - sum_{p,q} d(U_p,U_q)/(|U_p||U_q|) |U_p n A| |U_q n B|` for sets
/// given by block masses in units of `1 / wden`.
pub fn signed_deviation(
    kernel: &IntKernel,
    part: &Partition,
    sums: &PartSums,
    a: &[i128],
    b: &[i128],
) -> BigRational {
    let y = kernel.apply(a);
    let direct: i128 = y.iter().zip(b).map(|(y, b)| y * b).sum();
    let k = part.num_parts();
    let mut ap = vec![0i128; k];
    let mut bq = vec![0i128; k];
    for blk in 0..kernel.num_blocks() {
        ap[part.part_of(blk)] += a[blk];
        bq[part.part_of(blk)] += b[blk];
    }
    let mut structured = BigRational::zero();
    for p in 0..k {
        if ap[p] == 0 {
            continue;
        }
        for q in 0..k {
            if bq[q] != 0 {
                structured +=
                    sums.normalised(p, q) * BigRational::from_integer(BigInt::from(ap[p] * bq[q]));
            }
        }
    }
    let w = BigInt::from(kernel.width_denominator());
    (BigRational::from_integer(BigInt::from(direct)) - structured)
        / BigRational::from_integer(&w * &w * BigInt::from(kernel.cell_denominator()))
}

/// A pair of sets and the deviation it certifies.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationWitness {
    pub a: Set,
    pub b: Set,
    /// absolute deviation
    pub deviation: BigRational,
    /// whether the search covered every pair of block subsets
    pub exhaustive: bool,
}

impl DeviationWitness {
    pub fn deviation_f64(&self) -> f64 {
        ratio_to_f64(&self.deviation)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessRecord {
    pub a: SetSpec,
    pub b: SetSpec,
    pub deviation: String,
    pub deviation_decimal: f64,
    pub exhaustive: bool,
}

impl From<&DeviationWitness> for WitnessRecord {
    fn from(w: &DeviationWitness) -> Self {
        WitnessRecord {
            a: w.a.to_spec(),
            b: w.b.to_spec(),
            deviation: fmt_ratio(&w.deviation),
            deviation_decimal: w.deviation_f64(),
            exhaustive: w.exhaustive,
        }
    }
}

/// Recomputes a witness' deviation from its sets.
pub fn recompute_deviation(
    g: &Graphon,
    spec: &PartitionSpec,
    a: &Set,
    b: &Set,
) -> Result<BigRational> {
    let kernel = IntKernel::from_graphon(g)?;
    let part = Partition::from_spec(spec, &kernel)?;
    let sums = PartSums::new(&kernel, &part);
    let d = signed_deviation(
        &kernel,
        &part,
        &sums,
        &kernel.masses(a)?,
        &kernel.masses(b)?,
    );
    Ok(if d < BigRational::zero() { -d } else { d })
}
