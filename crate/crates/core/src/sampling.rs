//! W-random graphs and induced subgraph densities.
//!
//! Random streams: a sample budget is cut into chunks of [`CHUNK`] samples;
//! chunk `c` draws from ChaCha8 seeded with `seed` on stream `c`. Each sample
//! draws one uniform per vertex, then one per pair in the order
//! `(0,1), (0,2), ..., (0,k-1), (1,2), ...`.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphons::{BlockKernel, Graphon};

pub const CHUNK: u64 = 4096;
pub const MAX_ORDER: usize = 10;
pub const DEFAULT_BUDGET: u128 = 100_000_000;

/// A simple graph on vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SimpleGraph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl SimpleGraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b || a >= n || b >= n {
                return Err(Error::InvalidGraph(format!(
                    "bad edge {a}-{b} on {n} vertices"
                )));
            }
            if !set.insert((a.min(b), a.max(b))) {
                return Err(Error::InvalidGraph(format!("repeated edge {a}-{b}")));
            }
        }
        Ok(SimpleGraph { n, edges: set })
    }

    pub fn empty(n: usize) -> Self {
        SimpleGraph {
            n,
            edges: BTreeSet::new(),
        }
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .collect();
        SimpleGraph { n, edges }
    }

    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidGraph("cycles need three vertices".into()));
        }
        SimpleGraph::new(n, (0..n).map(|i| (i, (i + 1) % n)))
    }

    pub fn path(n: usize) -> Self {
        SimpleGraph::new(n, (1..n).map(|i| (i - 1, i))).expect("path edges are valid")
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    /// Adjacency bitmasks (orders up to 32).
    pub fn masks(&self) -> Vec<u32> {
        let mut m = vec![0u32; self.n];
        for &(a, b) in &self.edges {
            m[a] |= 1 << b;
            m[b] |= 1 << a;
        }
        m
    }

    fn from_masks(masks: &[u32]) -> Self {
        let n = masks.len();
        let edges = (0..n)
            .flat_map(|a| {
                (a + 1..n)
                    .filter(move |&b| masks[a] >> b & 1 == 1)
                    .map(move |b| (a, b))
            })
            .collect();
        SimpleGraph { n, edges }
    }

    /// Relabels vertex `v` as `perm[v]`.
    pub fn relabel(&self, perm: &[usize]) -> Self {
        SimpleGraph::new(self.n, self.edges.iter().map(|&(a, b)| (perm[a], perm[b])))
            .expect("permutation keeps the graph simple")
    }

    pub fn complement(&self) -> Self {
        let n = self.n;
        let edges = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .filter(|e| !self.edges.contains(e))
            .collect();
        SimpleGraph { n, edges }
    }
}

impl fmt::Display for SimpleGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n={}", self.n)?;
        let e: Vec<String> = self.edges.iter().map(|(a, b)| format!("{a}-{b}")).collect();
        write!(f, "edges={}", e.join(" "))
    }
}

impl FromStr for SimpleGraph {
    type Err = Error;

    /// Two lines: `n=<k>` and `edges=<i>-<j> ...`.
    fn from_str(s: &str) -> Result<Self> {
        let mut n = None;
        let mut edges = Vec::new();
        for line in s.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(v) = line.strip_prefix("n=") {
                n = Some(
                    v.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::Parse(format!("bad order {v:?}")))?,
                );
            } else if let Some(v) = line.strip_prefix("edges=") {
                for tok in v.split_whitespace() {
                    let (a, b) = tok
                        .split_once('-')
                        .ok_or_else(|| Error::Parse(format!("bad edge {tok:?}")))?;
                    let p = |t: &str| {
                        t.parse::<usize>()
                            .map_err(|_| Error::Parse(format!("bad edge {tok:?}")))
                    };
                    edges.push((p(a)?, p(b)?));
                }
            } else {
                return Err(Error::Parse(format!("unexpected line {line:?}")));
            }
        }
        SimpleGraph::new(n.ok_or_else(|| Error::Parse("missing n=".into()))?, edges)
    }
}

/// Whether two graphs are isomorphic, by backtracking with degree pruning.
pub fn is_isomorphic(a: &SimpleGraph, b: &SimpleGraph) -> bool {
    if a.n != b.n || a.num_edges() != b.num_edges() {
        return false;
    }
    masks_isomorphic(&a.masks(), &b.masks())
}

pub fn masks_isomorphic(a: &[u32], b: &[u32]) -> bool {
    let n = a.len();
    let da: Vec<u32> = a.iter().map(|m| m.count_ones()).collect();
    let db: Vec<u32> = b.iter().map(|m| m.count_ones()).collect();
    let mut sa = da.clone();
    let mut sb = db.clone();
    sa.sort_unstable();
    sb.sort_unstable();
    if sa != sb {
        return false;
    }
    let mut map = vec![usize::MAX; n];
    let mut used = 0u32;
    fn go(
        v: usize,
        a: &[u32],
        b: &[u32],
        da: &[u32],
        db: &[u32],
        map: &mut [usize],
        used: &mut u32,
    ) -> bool {
        if v == a.len() {
            return true;
        }
        for w in 0..a.len() {
            if *used >> w & 1 == 1 || da[v] != db[w] {
                continue;
            }
            let consistent = (0..v).all(|u| (a[v] >> u & 1) == (b[w] >> map[u] & 1));
            if !consistent {
                continue;
            }
            map[v] = w;
            *used |= 1 << w;
            if go(v + 1, a, b, da, db, map, used) {
                return true;
            }
            *used &= !(1 << w);
        }
        false
    }
    go(0, a, b, &da, &db, &mut map, &mut used)
}

/// Upper-triangle bit code of a relabelled graph (orders up to 11).
fn code(masks: &[u32], order: &[usize]) -> u64 {
    let mut c = 0u64;
    let mut bit = 0;
    for i in 0..order.len() {
        for j in i + 1..order.len() {
            if masks[order[i]] >> order[j] & 1 == 1 {
                c |= 1 << bit;
            }
            bit += 1;
        }
    }
    c
}

/// Canonical representative of the isomorphism class: the relabelling with
/// vertices in non-increasing degree order whose edge code is smallest.
pub fn canonical_form(g: &SimpleGraph) -> SimpleGraph {
    assert!(
        g.n <= MAX_ORDER,
        "canonical forms are limited to order {MAX_ORDER}"
    );
    let masks = g.masks();
    let deg: Vec<u32> = masks.iter().map(|m| m.count_ones()).collect();
    let mut target = deg.clone();
    target.sort_unstable_by(|a, b| b.cmp(a));
    let mut best: Option<(u64, Vec<usize>)> = None;
    let mut order = Vec::with_capacity(g.n);
    fn go(
        masks: &[u32],
        deg: &[u32],
        target: &[u32],
        order: &mut Vec<usize>,
        best: &mut Option<(u64, Vec<usize>)>,
    ) {
        if order.len() == masks.len() {
            let c = code(masks, order);
            if best.as_ref().is_none_or(|(b, _)| c < *b) {
                *best = Some((c, order.clone()));
            }
            return;
        }
        for v in 0..masks.len() {
            if deg[v] == target[order.len()] && !order.contains(&v) {
                order.push(v);
                go(masks, deg, target, order, best);
                order.pop();
            }
        }
    }
    go(&masks, &deg, &target, &mut order, &mut best);
    let (_, order) = best.expect("at least one ordering");
    let mut perm = vec![0; g.n];
    for (pos, &v) in order.iter().enumerate() {
        perm[v] = pos;
    }
    g.relabel(&perm)
}

/// One representative per isomorphism class on `k` vertices, sorted.
pub fn isomorphism_classes(k: usize) -> Vec<SimpleGraph> {
    assert!(k <= 6, "class enumeration is limited to six vertices");
    let pairs = k * (k - 1) / 2;
    let mut seen = BTreeSet::new();
    for c in 0..(1u64 << pairs) {
        let mut masks = vec![0u32; k];
        let mut bit = 0;
        for i in 0..k {
            for j in i + 1..k {
                if c >> bit & 1 == 1 {
                    masks[i] |= 1 << j;
                    masks[j] |= 1 << i;
                }
                bit += 1;
            }
        }
        seen.insert(canonical_form(&SimpleGraph::from_masks(&masks)));
    }
    seen.into_iter().collect()
}

/// All labelled graphs on `0..n` isomorphic to `h`, as adjacency masks.
pub fn labelled_copies(h: &SimpleGraph) -> Vec<Vec<u32>> {
    let n = h.n;
    let mut out = HashSet::new();
    let mut perm: Vec<usize> = (0..n).collect();
    // Heap's algorithm
    let mut c = vec![0usize; n];
    out.insert(h.relabel(&perm).masks());
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            out.insert(h.relabel(&perm).masks());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    let mut v: Vec<_> = out.into_iter().collect();
    v.sort();
    v
}

/// Draws the adjacency masks of a W-random graph of order `k` from `rng`.
pub fn sample_masks<R: Rng>(g: &Graphon, k: usize, rng: &mut R) -> Vec<u32> {
    let xs: Vec<f64> = (0..k).map(|_| rng.gen::<f64>()).collect();
    let mut masks = vec![0u32; k];
    for i in 0..k {
        for j in i + 1..k {
            let u: f64 = rng.gen();
            if u < g.value(xs[i], xs[j]) {
                masks[i] |= 1 << j;
                masks[j] |= 1 << i;
            }
        }
    }
    masks
}

/// A W-random graph of order `k`, deterministic in `seed`.
pub fn w_random_graph(g: &Graphon, k: usize, seed: u64) -> SimpleGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<f64> = (0..k).map(|_| rng.gen::<f64>()).collect();
    let mut edges = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            let u: f64 = rng.gen();
            if u < g.value(xs[i], xs[j]) {
                edges.push((i, j));
            }
        }
    }
    SimpleGraph::new(k, edges).expect("sampled edges are simple")
}

/// The random stream for chunk `chunk` of a run seeded with `seed`.
pub fn substream(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Runs `f(rng, count)` over the chunks of a sample budget in parallel and
/// collects the chunk results in chunk order.
pub fn over_chunks<T: Send>(
    samples: u64,
    seed: u64,
    f: impl Fn(&mut ChaCha8Rng, u64) -> T + Sync,
) -> Vec<T> {
    let chunks = samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = CHUNK.min(samples - c * CHUNK);
            f(&mut substream(seed, c), count)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
}

impl DensityEstimate {
    pub fn bernoulli(hits: u64, samples: u64, seed: u64) -> Self {
        let v = hits as f64 / samples as f64;
        DensityEstimate {
            value: v,
            stderr: (v * (1.0 - v) / samples as f64).sqrt(),
            samples,
            seed,
        }
    }
}

/// Monte Carlo estimate of the induced density `d(H, W)`.
pub fn induced_density_mc(
    h: &SimpleGraph,
    g: &Graphon,
    samples: u64,
    seed: u64,
) -> Result<DensityEstimate> {
    let k = h.order();
    if k > MAX_ORDER {
        return Err(Error::InvalidGraph(format!(
            "order {k} exceeds {MAX_ORDER}"
        )));
    }
    if samples == 0 {
        return Err(Error::InvalidGraph("at least one sample is needed".into()));
    }
    let hm = h.masks();
    let hits: u64 = over_chunks(samples, seed, |rng, count| {
        (0..count)
            .filter(|_| masks_isomorphic(&sample_masks(g, k, rng), &hm))
            .count() as u64
    })
    .into_iter()
    .sum();
    Ok(DensityEstimate::bernoulli(hits, samples, seed))
}

/// Exact induced density on an exact block structure.
///
/// Sums over multisets of blocks for the vertices, weighted by the number
/// of assignments realising them, of the probability that the labelled
/// vertices induce one of the labelled copies of `h`.
pub fn induced_density_exact(
    h: &SimpleGraph,
    g: &dyn BlockKernel,
    budget: u128,
) -> Result<BigRational> {
    let k = h.order();
    let n = g.num_blocks();
    if (n as u128).checked_pow(k as u32).is_none_or(|w| w > budget) {
        return Err(Error::BudgetExceeded(format!(
            "{n} blocks to the power {k}"
        )));
    }
    if k == 0 {
        return Ok(BigRational::one());
    }
    let copies = labelled_copies(h);
    let widths: Vec<BigRational> = (0..n).map(|i| g.width(i)).collect();
    let mut fact = vec![BigInt::one()];
    for i in 1..=k {
        let next = &fact[i - 1] * BigInt::from(i);
        fact.push(next);
    }
    let mut total = BigRational::zero();
    let mut assign = vec![0usize; k];
    loop {
        // multiplicity k! / prod(mult!)
        let mut denom = BigInt::one();
        let mut run = 1;
        for i in 1..=k {
            if i < k && assign[i] == assign[i - 1] {
                run += 1;
            } else {
                denom *= &fact[run];
                run = 1;
            }
        }
        let mut weight = BigRational::from_integer(&fact[k] / denom);
        for &b in &assign {
            weight *= &widths[b];
        }
        let cells: Vec<Vec<BigRational>> = (0..k)
            .map(|i| (0..k).map(|j| g.cell(assign[i], assign[j])).collect())
            .collect();
        let mut prob = BigRational::zero();
        for copy in &copies {
            let mut p = BigRational::one();
            for i in 0..k {
                for j in i + 1..k {
                    if copy[i] >> j & 1 == 1 {
                        p *= &cells[i][j];
                    } else {
                        p *= BigRational::one() - &cells[i][j];
                    }
                    if p.is_zero() {
                        break;
                    }
                }
            }
            prob += p;
        }
        total += weight * prob;
        // next non-decreasing tuple
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(total);
            }
            i -= 1;
            if assign[i] + 1 < n {
                let v = assign[i] + 1;
                for a in assign.iter_mut().skip(i) {
                    *a = v;
                }
                break;
            }
        }
    }
}

/// Estimates of every isomorphism class on `k` vertices from one stream.
#[derive(Debug, Clone, Serialize)]
pub struct ProfileCheck {
    pub classes: Vec<(String, DensityEstimate)>,
    /// sum of the per-class hit counts over the sample count, `"p/q"`
    pub sum: String,
    pub sums_to_one: bool,
}

pub fn density_profile_sum_check(
    k: usize,
    g: &Graphon,
    samples: u64,
    seed: u64,
) -> Result<ProfileCheck> {
    if !(1..=6).contains(&k) || samples == 0 {
        return Err(Error::InvalidGraph(format!(
            "profile needs 1 <= k <= 6 and samples > 0, got k={k}"
        )));
    }
    let classes = isomorphism_classes(k);
    let class_masks: Vec<Vec<u32>> = classes.iter().map(|c| c.masks()).collect();
    let counts = over_chunks(samples, seed, |rng, count| {
        let mut c = vec![0u64; classes.len()];
        for _ in 0..count {
            let s = sample_masks(g, k, rng);
            let idx = class_masks
                .iter()
                .position(|m| masks_isomorphic(&s, m))
                .expect("every graph falls in a class");
            c[idx] += 1;
        }
        c
    });
    let mut totals = vec![0u64; classes.len()];
    for c in counts {
        for (t, v) in totals.iter_mut().zip(c) {
            *t += v;
        }
    }
    let sum = BigRational::new(
        BigInt::from(totals.iter().sum::<u64>()),
        BigInt::from(samples),
    );
    Ok(ProfileCheck {
        classes: classes
            .iter()
            .zip(&totals)
            .map(|(c, &t)| {
                (
                    c.to_string().replace('\n', " "),
                    DensityEstimate::bernoulli(t, samples, seed),
                )
            })
            .collect(),
        sums_to_one: sum.is_one(),
        sum: crate::exact::fmt_ratio(&sum),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeRow {
    pub m: u32,
    pub estimate: DensityEstimate,
    /// `d(H, 1/2)`
    pub limit: f64,
}

/// `d(H, W_CF^m)` for increasing `m`, all from the same seed.
pub fn cf_convergence_probe(
    h: &SimpleGraph,
    ms: &[u32],
    samples: u64,
    seed: u64,
) -> Result<Vec<ProbeRow>> {
    let pairs = h.order() * h.order().saturating_sub(1) / 2;
    let limit = labelled_copies(h).len() as f64 / 2f64.powi(pairs as i32);
    ms.iter()
        .map(|&m| {
            let g = crate::graphons::make_cf(m)?;
            Ok(ProbeRow {
                m,
                estimate: induced_density_mc(h, &g, samples, seed)?,
                limit,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ratio;
    use crate::graphons::{make_cf, make_constant, make_half, StepGraphon};

    #[test]
    fn text_format() {
        let g: SimpleGraph = "n=3\nedges=0-1 2-1".parse().unwrap();
        assert_eq!(g.to_string(), "n=3\nedges=0-1 1-2");
        assert!("n=2\nedges=0-2".parse::<SimpleGraph>().is_err());
        assert!("edges=0-1".parse::<SimpleGraph>().is_err());
        assert_eq!(
            "n=2\nedges=".parse::<SimpleGraph>().unwrap(),
            SimpleGraph::empty(2)
        );
    }

    #[test]
    fn class_counts() {
        // OEIS A000088
        let counts: Vec<usize> = (1..=5).map(|k| isomorphism_classes(k).len()).collect();
        assert_eq!(counts, vec![1, 2, 4, 11, 34]);
    }

    #[test]
    fn isomorphism() {
        let p = SimpleGraph::path(4);
        let q = p.relabel(&[2, 0, 3, 1]);
        assert!(is_isomorphic(&p, &q));
        assert_eq!(canonical_form(&p), canonical_form(&q));
        let star = SimpleGraph::new(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        assert!(!is_isomorphic(&p, &star));
        assert_eq!(labelled_copies(&p).len(), 12);
        assert_eq!(labelled_copies(&SimpleGraph::complete(4)).len(), 1);
        let c5 = SimpleGraph::cycle(5).unwrap();
        assert!(is_isomorphic(&c5, &c5.complement()));
    }

    #[test]
    fn random_graphs() {
        let one = make_constant(ratio(1, 1)).unwrap();
        let zero = make_constant(ratio(0, 1)).unwrap();
        assert_eq!(w_random_graph(&one, 5, 1), SimpleGraph::complete(5));
        assert_eq!(w_random_graph(&zero, 5, 1), SimpleGraph::empty(5));
        let cf = make_cf(4).unwrap();
        assert_eq!(w_random_graph(&cf, 30, 9), w_random_graph(&cf, 30, 9));
    }

    #[test]
    fn mc_examples() {
        let half = make_constant(ratio(1, 2)).unwrap();
        let k2 = SimpleGraph::complete(2);
        let e = induced_density_mc(&k2, &half, 100_000, 3).unwrap();
        assert!((e.value - 0.5).abs() <= 4.0 * e.stderr);
        let e = induced_density_mc(&SimpleGraph::complete(3), &half, 100_000, 3).unwrap();
        assert!((e.value - 0.125).abs() <= 4.0 * e.stderr);
        let e = induced_density_mc(&k2, &make_half(), 100_000, 3).unwrap();
        assert!((e.value - 0.5).abs() <= 4.0 * e.stderr);
        assert_eq!(
            e,
            induced_density_mc(&k2, &make_half(), 100_000, 3).unwrap()
        );
    }

    #[test]
    fn exact_examples() {
        let two = StepGraphon::uniform(vec![
            vec![ratio(1, 1), ratio(1, 2)],
            vec![ratio(1, 2), ratio(0, 1)],
        ])
        .unwrap();
        let k2 = SimpleGraph::complete(2);
        assert_eq!(
            induced_density_exact(&k2, &two, DEFAULT_BUDGET).unwrap(),
            ratio(1, 2)
        );
        let half = StepGraphon::constant(ratio(1, 2)).unwrap();
        assert_eq!(
            induced_density_exact(&SimpleGraph::complete(3), &half, DEFAULT_BUDGET).unwrap(),
            ratio(1, 8)
        );
        let cf = crate::graphons::CfGraphon::new(4).unwrap();
        assert_eq!(
            induced_density_exact(&k2, &cf, DEFAULT_BUDGET).unwrap(),
            ratio(1, 2)
        );
        assert_eq!(
            induced_density_exact(&SimpleGraph::empty(2), &cf, DEFAULT_BUDGET).unwrap(),
            ratio(1, 2)
        );
        assert!(matches!(
            induced_density_exact(&SimpleGraph::complete(3), &cf, 1000),
            Err(Error::BudgetExceeded(_))
        ));
    }

    #[test]
    fn exact_densities_sum_to_one() {
        let g = StepGraphon::uniform(vec![
            vec![ratio(1, 3), ratio(1, 2), ratio(0, 1)],
            vec![ratio(1, 2), ratio(1, 1), ratio(1, 5)],
            vec![ratio(0, 1), ratio(1, 5), ratio(3, 4)],
        ])
        .unwrap();
        for k in 1..=4 {
            let s: BigRational = isomorphism_classes(k)
                .iter()
                .map(|h| induced_density_exact(h, &g, DEFAULT_BUDGET).unwrap())
                .sum();
            assert_eq!(s, BigRational::one(), "k={k}");
        }
    }

    #[test]
    fn exact_matches_direct_assignment_sum() {
        // independent route: all ordered assignments, brute-force isomorphism of each labelled graph
        let g = StepGraphon::uniform(vec![
            vec![ratio(1, 4), ratio(2, 3)],
            vec![ratio(2, 3), ratio(1, 2)],
        ])
        .unwrap();
        let h = SimpleGraph::path(3);
        let mut direct = BigRational::zero();
        for a in 0..8usize {
            let assign = [a & 1, a >> 1 & 1, a >> 2 & 1];
            for code in 0..8u32 {
                let masks = {
                    let mut m = vec![0u32; 3];
                    for (bit, (i, j)) in [(0, 1), (0, 2), (1, 2)].into_iter().enumerate() {
                        if code >> bit & 1 == 1 {
                            m[i] |= 1 << j;
                            m[j] |= 1 << i;
                        }
                    }
                    m
                };
                if !is_isomorphic(&SimpleGraph::from_masks(&masks), &h) {
                    continue;
                }
                let mut p = ratio(1, 8);
                for (bit, (i, j)) in [(0, 1), (0, 2), (1, 2)].into_iter().enumerate() {
                    let c = g.value(assign[i], assign[j]).clone();
                    p *= if code >> bit & 1 == 1 {
                        c
                    } else {
                        BigRational::one() - c
                    };
                }
                direct += p;
            }
        }
        assert_eq!(
            induced_density_exact(&h, &g, DEFAULT_BUDGET).unwrap(),
            direct
        );
    }

    #[test]
    fn profile_sums() {
        for g in [make_constant(ratio(1, 2)).unwrap(), make_half()] {
            let p = density_profile_sum_check(3, &g, 20_000, 5).unwrap();
            assert!(p.sums_to_one);
            assert_eq!(p.sum, "1");
        }
    }

    #[test]
    fn automorphism_relabel_invariance() {
        let g = make_cf(4).unwrap();
        let h = SimpleGraph::path(3);
        let a = induced_density_mc(&h, &g, 50_000, 11).unwrap();
        let b = induced_density_mc(&h.relabel(&[2, 1, 0]), &g, 50_000, 11).unwrap();
        assert_eq!(a, b);
    }
}
