//! Graphons: constant, step, Conlon-Fox, Švejk, half, and the embedded
//! Conlon-Fox copies inside the Švejk graphon.

pub mod cf;
pub mod degrees;
pub mod sets;
pub mod step;
pub mod svejk;

use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::coords::{tower_u64, DEFAULT_TOWER_CAP};
use crate::error::{Error, Result};
use crate::exact::{f64_to_ratio, fmt_ratio, parse_ratio, ratio, ratio_to_f64, Surd};

pub use cf::CfGraphon;
pub use degrees::{degree_table, DegreeRow};
pub use sets::{Set, SetSpec};
pub use step::{square_identity_check, SquareIdentityVerdict, StepGraphon};
pub use svejk::{Part, SvejkGraphon};

/// Upper limit on block pairs visited by exact set densities.
pub const PAIR_BUDGET: u128 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Step,
    ConlonFox,
    Svejk,
    Half,
    Constant,
    Restriction,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Graphon {
    Constant(StepGraphon),
    Step(StepGraphon),
    ConlonFox(CfGraphon),
    Svejk(SvejkGraphon),
    /// `1` iff `x + y >= 1`
    Half,
    /// Segment `n + 1` of the Švejk part `E`, rescaled to the unit square.
    Restriction {
        n: u32,
        svejk: SvejkGraphon,
    },
}

pub fn make_constant(p: BigRational) -> Result<Graphon> {
    if p < BigRational::zero() || p > BigRational::one() {
        return Err(Error::OutOfRange(fmt_ratio(&p)));
    }
    Ok(Graphon::Constant(StepGraphon::constant(p)?))
}

pub fn make_cf(m: u32) -> Result<Graphon> {
    Ok(Graphon::ConlonFox(CfGraphon::new(m)?))
}

pub fn make_svejk() -> Graphon {
    Graphon::Svejk(SvejkGraphon::default())
}

pub fn make_half() -> Graphon {
    Graphon::Half
}

/// The copy of `W_CF^{t(n)}` carried by segment `n + 1` of part `E`.
pub fn extract_cf_copy(n: u32, tower_cap: u32) -> Result<Graphon> {
    // the copy is compared against W_CF^{t(n)}, which needs t(n) <= 62
    if n + 1 > tower_cap || tower_u64(n).is_none_or(|m| m > cf::MAX_M as u64) {
        return Err(Error::LevelTooLarge {
            level: n + 1,
            cap: tower_cap.min(3),
        });
    }
    Ok(Graphon::Restriction {
        n,
        svejk: SvejkGraphon::default(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractReport {
    pub n: u32,
    /// `t(n)`, the parameter of the Conlon-Fox graphon compared against
    pub m: u32,
    pub pairs: u64,
    pub max_abs_diff: f64,
}

/// Compares the extracted copy with `W_CF^{t(n)}` at uniform random pairs.
pub fn compare_extracted_cf(
    n: u32,
    tower_cap: u32,
    pairs: u64,
    seed: u64,
) -> Result<ExtractReport> {
    use rand::Rng;
    let copy = extract_cf_copy(n, tower_cap)?;
    let m = tower_u64(n).expect("checked by extract_cf_copy") as u32;
    let cf = make_cf(m)?;
    let mut rng = crate::sampling::substream(seed, 0);
    let mut max = 0.0f64;
    for _ in 0..pairs {
        let (x, y): (f64, f64) = (rng.gen(), rng.gen());
        max = max.max((copy.value(x, y) - cf.value(x, y)).abs());
    }
    Ok(ExtractReport {
        n,
        m,
        pairs,
        max_abs_diff: max,
    })
}

/// Exact value of a set density, or its approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    pub value: f64,
    pub exact: Option<BigRational>,
}

impl Density {
    fn exact(r: BigRational) -> Density {
        Density {
            value: ratio_to_f64(&r),
            exact: Some(r),
        }
    }
}

impl Graphon {
    pub fn kind(&self) -> Kind {
        match self {
            Graphon::Constant(_) => Kind::Constant,
            Graphon::Step(_) => Kind::Step,
            Graphon::ConlonFox(_) => Kind::ConlonFox,
            Graphon::Svejk(_) => Kind::Svejk,
            Graphon::Half => Kind::Half,
            Graphon::Restriction { .. } => Kind::Restriction,
        }
    }

    /// Whether values and block densities are available as exact rationals.
    pub fn is_exact(&self) -> bool {
        match self {
            Graphon::Constant(_) | Graphon::Step(_) | Graphon::Half => true,
            Graphon::ConlonFox(c) => c.is_exact(),
            _ => false,
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        for v in [x, y] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::OutOfDomain { value: v });
            }
        }
        Ok(self.value(x, y))
    }

    /// Evaluation without the domain check, for points of `[0,1]`.
    pub fn value(&self, x: f64, y: f64) -> f64 {
        match self {
            Graphon::Constant(s) | Graphon::Step(s) => s.eval(x, y),
            Graphon::ConlonFox(c) => c.eval(x, y),
            Graphon::Svejk(s) => s.eval(x, y).expect("point of the unit square"),
            Graphon::Half => {
                if x + y >= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Graphon::Restriction { n, svejk } => {
                let top = 1.0 - f64::EPSILON / 2.0;
                svejk.e_segment_value(*n, x.min(top), y.min(top))
            }
        }
    }

    pub fn eval_exact(&self, x: f64, y: f64) -> Option<BigRational> {
        match self {
            Graphon::Constant(s) | Graphon::Step(s) => {
                Some(s.value(s.block_of(x), s.block_of(y)).clone())
            }
            Graphon::ConlonFox(c) => c.cell_exact(c.block_of(x), c.block_of(y)),
            Graphon::Half => {
                // compare exactly: doubles are dyadic rationals
                let s = f64_to_ratio(x) + f64_to_ratio(y);
                Some(if s >= BigRational::one() {
                    BigRational::one()
                } else {
                    BigRational::zero()
                })
            }
            _ => None,
        }
    }

    /// `int W(x, y) dy` within `tol`, exact where the structure allows.
    pub fn degree(&self, x: f64, tol: f64) -> Result<Density> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::OutOfDomain { value: x });
        }
        match self {
            Graphon::Constant(s) | Graphon::Step(s) => Ok(Density::exact(s.row_sum(s.block_of(x)))),
            // every block sees the same Hamming distance distribution
            Graphon::ConlonFox(c) => Ok(surd_density(c.full_density())),
            Graphon::Restriction { .. } => Ok(Density::exact(ratio(1, 2))),
            Graphon::Half => Ok(Density::exact(f64_to_ratio(x))),
            Graphon::Svejk(s) => {
                let (d, bound) = s.degree_with_bound(x)?;
                if bound > tol {
                    return Err(Error::TailNotConvergent { bound, tol });
                }
                Ok(Density {
                    value: d,
                    exact: None,
                })
            }
        }
    }

    /// `d(A, B) = int_{A x B} W`.
    pub fn density_sets(&self, a: &Set, b: &Set, tol: f64) -> Result<Density> {
        if a.measure().is_zero() || b.measure().is_zero() {
            return Ok(Density::exact(BigRational::zero()));
        }
        match self {
            Graphon::Constant(s) | Graphon::Step(s) => {
                let wa = step_weights(s, a)?;
                let wb = step_weights(s, b)?;
                let mut acc = BigRational::zero();
                for (i, x) in wa.iter().enumerate() {
                    if x.is_zero() {
                        continue;
                    }
                    for (j, y) in wb.iter().enumerate() {
                        if !y.is_zero() {
                            acc += x * y * s.value(i, j);
                        }
                    }
                }
                Ok(Density::exact(acc))
            }
            Graphon::ConlonFox(c) => cf_density(c, a, b),
            Graphon::Restriction { n, .. } => {
                cf_density(&CfGraphon::new(tower_u64(*n).unwrap() as u32)?, a, b)
            }
            Graphon::Half => {
                let ia = as_intervals(a)?;
                let ib = as_intervals(b)?;
                let mut acc = BigRational::zero();
                for (a1, a2) in &ia {
                    for (b1, b2) in &ib {
                        acc += half_rect(a2, b2) - half_rect(a1, b2) - half_rect(a2, b1)
                            + half_rect(a1, b1);
                    }
                }
                Ok(Density::exact(acc))
            }
            Graphon::Svejk(_) => Ok(self.density_quadrature(a, b, tol)),
        }
    }

    /// Midpoint rule on a uniform grid chosen from `tol`.
    fn density_quadrature(&self, a: &Set, b: &Set, tol: f64) -> Density {
        let n = ((4.0 / tol.max(1e-6)).ceil() as u64).clamp(64, 4000);
        let wa = a.to_grid(n).unwrap_or_default();
        let wb = b.to_grid(n).unwrap_or_default();
        let mut acc = 0.0;
        for (i, x) in &wa {
            let xi = (*i as f64 + 0.5) / n as f64;
            for (j, y) in &wb {
                let yj = (*j as f64 + 0.5) / n as f64;
                acc += ratio_to_f64(x) * ratio_to_f64(y) * self.value(xi, yj);
            }
        }
        Density {
            value: acc,
            exact: None,
        }
    }

    pub fn descriptor(&self) -> GraphonDescriptor {
        let mut d = GraphonDescriptor {
            kind: self.kind(),
            parameters: Parameters::default(),
            tail_k: None,
        };
        match self {
            Graphon::Constant(s) => d.parameters.p = Some(fmt_ratio(s.value(0, 0))),
            Graphon::Step(s) => d.parameters.step = Some(s.clone()),
            Graphon::ConlonFox(c) => d.parameters.m = Some(c.m()),
            Graphon::Svejk(s) => d.tail_k = Some(s.tail_k()),
            Graphon::Half => {}
            Graphon::Restriction { n, svejk } => {
                d.parameters.n = Some(*n);
                d.tail_k = Some(svejk.tail_k());
            }
        }
        d
    }
}

fn surd_density(s: Surd) -> Density {
    match s.as_ratio() {
        Some(r) => Density::exact(r),
        None => Density {
            value: s.to_f64(),
            exact: None,
        },
    }
}

/// `|{0 <= x < a, 0 <= y < b, x + y >= 1}|` for `a, b` in `[0,1]`.
fn half_rect(a: &BigRational, b: &BigRational) -> BigRational {
    let s = a + b - BigRational::one();
    if s > BigRational::zero() {
        &s * &s / BigRational::from_integer(BigInt::from(2))
    } else {
        BigRational::zero()
    }
}

fn as_intervals(s: &Set) -> Result<Vec<(BigRational, BigRational)>> {
    match s {
        Set::Intervals(iv) => Ok(iv.clone()),
        Set::Blocks { grid, weights } => {
            let width = ratio(1, *grid as i64);
            weights
                .iter()
                .map(|(k, w)| {
                    if *w != width {
                        return Err(Error::GridMismatch(format!(
                            "partial block {k} has no position inside a non-step graphon"
                        )));
                    }
                    let lo = ratio(*k as i64, *grid as i64);
                    Ok((lo.clone(), lo + width.clone()))
                })
                .collect()
        }
    }
}

/// Mass of a set inside each block of a step graphon.
fn step_weights(s: &StepGraphon, set: &Set) -> Result<Vec<BigRational>> {
    let n = s.num_blocks();
    let mut out = vec![BigRational::zero(); n];
    match set {
        Set::Intervals(_) => {
            for (i, w) in out.iter_mut().enumerate() {
                *w = set
                    .clip(&s.breakpoints()[i], &s.breakpoints()[i + 1])
                    .unwrap();
            }
        }
        Set::Blocks { grid, weights } => {
            let g = BigRational::from_integer(BigInt::from(*grid));
            if s.breakpoints().iter().any(|b| !(b * &g).is_integer()) {
                return Err(Error::GridMismatch(format!(
                    "a grid of {grid} blocks does not refine the step blocks"
                )));
            }
            for (k, w) in weights {
                let i = s.block_of_exact(&ratio(*k as i64, *grid as i64));
                out[i] += w;
            }
        }
    }
    Ok(out)
}

fn cf_density(c: &CfGraphon, a: &Set, b: &Set) -> Result<Density> {
    let row = c.full_density();
    // every block has the same row sum, so a full side factors out
    if a.is_full() {
        return Ok(surd_density(row.scale(&b.measure())));
    }
    if b.is_full() {
        return Ok(surd_density(row.scale(&a.measure())));
    }
    let blocks = c.num_blocks();
    let wa = cf_weights(c, a)?;
    let wb = cf_weights(c, b)?;
    if (wa.len() as u128) * (wb.len() as u128) > PAIR_BUDGET {
        return Err(Error::BudgetExceeded(format!(
            "{} x {} block pairs",
            wa.len(),
            wb.len()
        )));
    }
    // group the mass by inner product, then weight by the cell value
    let m = c.m() as usize;
    let mut by_distance = vec![BigRational::zero(); m + 1];
    for (i, x) in &wa {
        for (j, y) in &wb {
            by_distance[(i ^ j).count_ones() as usize] += x * y;
        }
    }
    debug_assert!(wa.keys().all(|k| *k < blocks));
    let mut acc = Surd::zero(m as u64);
    for (h, w) in by_distance.iter().enumerate() {
        if !w.is_zero() {
            acc = &acc + &cf::cf_cell_surd(m as u64, m as i64 - 2 * h as i64).scale(w);
        }
    }
    Ok(surd_density(acc))
}

/// Set masses per Conlon-Fox block; the set's grid must refine the blocks.
fn cf_weights(c: &CfGraphon, set: &Set) -> Result<std::collections::BTreeMap<u64, BigRational>> {
    let blocks = c.num_blocks();
    let grid = set.grid().unwrap_or(blocks);
    if !grid.is_multiple_of(blocks) {
        return Err(Error::GridMismatch(format!(
            "a grid of {grid} blocks does not refine the {blocks} Conlon-Fox blocks"
        )));
    }
    if let Set::Intervals(iv) = set {
        let n = BigRational::from_integer(BigInt::from(grid));
        let cells: BigInt = iv
            .iter()
            .map(|(a, b)| (b * &n).ceil().to_integer() - (a * &n).floor().to_integer())
            .sum();
        if cells > BigInt::from(PAIR_BUDGET) {
            return Err(Error::BudgetExceeded(format!("{cells} blocks")));
        }
    }
    let r = grid / blocks;
    let mut out = std::collections::BTreeMap::new();
    for (k, w) in set.to_grid(grid)? {
        *out.entry(k / r).or_insert_with(BigRational::zero) += w;
    }
    Ok(out)
}

/// Graphon parameters in a descriptor; unused fields are omitted.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<StepGraphon>,
}

/// Serializable description of a graphon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphonDescriptor {
    pub kind: Kind,
    #[serde(default)]
    pub parameters: Parameters,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_k: Option<u32>,
}

impl GraphonDescriptor {
    pub fn build(&self) -> Result<Graphon> {
        self.build_with_cap(DEFAULT_TOWER_CAP)
    }

    pub fn build_with_cap(&self, tower_cap: u32) -> Result<Graphon> {
        let missing =
            |what: &str| Error::Parse(format!("{:?} graphon needs parameter {what}", self.kind));
        let tail = self.tail_k.unwrap_or(svejk::DEFAULT_TAIL_K);
        match self.kind {
            Kind::Constant => make_constant(parse_ratio(
                self.parameters.p.as_deref().ok_or_else(|| missing("p"))?,
            )?),
            Kind::Step => Ok(Graphon::Step(
                self.parameters
                    .step
                    .clone()
                    .ok_or_else(|| missing("step"))?,
            )),
            Kind::ConlonFox => make_cf(self.parameters.m.ok_or_else(|| missing("m"))?),
            Kind::Svejk => Ok(Graphon::Svejk(SvejkGraphon::new(tail))),
            Kind::Half => Ok(Graphon::Half),
            Kind::Restriction => {
                match extract_cf_copy(self.parameters.n.ok_or_else(|| missing("n"))?, tower_cap)? {
                    Graphon::Restriction { n, .. } => Ok(Graphon::Restriction {
                        n,
                        svejk: SvejkGraphon::new(tail),
                    }),
                    _ => unreachable!(),
                }
            }
        }
    }
}

/// Short forms: `svejk`, `half`, `cf:<m>`, `constant:<p>`, `restriction:<n>`,
/// or a JSON descriptor.
impl FromStr for GraphonDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.starts_with('{') {
            return serde_json::from_str(t).map_err(|e| Error::Parse(e.to_string()));
        }
        let (name, arg) = t.split_once(':').unwrap_or((t, ""));
        let mut d = GraphonDescriptor {
            kind: Kind::Half,
            parameters: Parameters::default(),
            tail_k: None,
        };
        let int = |a: &str| {
            a.parse::<u32>()
                .map_err(|_| Error::Parse(format!("bad integer {a:?}")))
        };
        match name {
            "half" => {}
            "svejk" => d.kind = Kind::Svejk,
            "cf" | "conlon-fox" => {
                d.kind = Kind::ConlonFox;
                d.parameters.m = Some(int(arg)?);
            }
            "constant" => {
                d.kind = Kind::Constant;
                parse_ratio(arg)?;
                d.parameters.p = Some(arg.to_string());
            }
            "restriction" => {
                d.kind = Kind::Restriction;
                d.parameters.n = Some(int(arg)?);
            }
            _ => return Err(Error::Parse(format!("unknown graphon {t:?}"))),
        }
        Ok(d)
    }
}

/// Exact block structure shared by step graphons and Conlon-Fox graphons
/// with a perfect-square parameter.
pub trait BlockKernel: Sync {
    fn num_blocks(&self) -> usize;
    fn width(&self, i: usize) -> BigRational;
    fn cell(&self, i: usize, j: usize) -> BigRational;
    fn width_f64(&self, i: usize) -> f64;
    fn cell_f64(&self, i: usize, j: usize) -> f64;
}

impl BlockKernel for StepGraphon {
    fn num_blocks(&self) -> usize {
        StepGraphon::num_blocks(self)
    }
    fn width(&self, i: usize) -> BigRational {
        StepGraphon::width(self, i)
    }
    fn cell(&self, i: usize, j: usize) -> BigRational {
        self.value(i, j).clone()
    }
    fn width_f64(&self, i: usize) -> f64 {
        StepGraphon::width_f64(self, i)
    }
    fn cell_f64(&self, i: usize, j: usize) -> f64 {
        self.value_f64(i, j)
    }
}

impl BlockKernel for CfGraphon {
    fn num_blocks(&self) -> usize {
        CfGraphon::num_blocks(self) as usize
    }
    fn width(&self, _i: usize) -> BigRational {
        BigRational::new(BigInt::one(), BigInt::from(CfGraphon::num_blocks(self)))
    }
    fn cell(&self, i: usize, j: usize) -> BigRational {
        self.cell_exact(i as u64, j as u64)
            .expect("exact cells need a perfect-square parameter")
    }
    fn width_f64(&self, _i: usize) -> f64 {
        1.0 / CfGraphon::num_blocks(self) as f64
    }
    fn cell_f64(&self, i: usize, j: usize) -> f64 {
        CfGraphon::cell(self, i as u64, j as u64)
    }
}

impl Graphon {
    /// Exact block structure, when there is one.
    pub fn block_kernel(&self) -> Option<&dyn BlockKernel> {
        match self {
            Graphon::Constant(s) | Graphon::Step(s) => Some(s),
            Graphon::ConlonFox(c) if c.is_exact() => Some(c),
            _ => None,
        }
    }
}
