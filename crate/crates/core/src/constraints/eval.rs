//! Evaluation of ordinary and decorated constraints against a graphon.

use std::collections::BTreeMap;

use num_rational::BigRational;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::expr::{Constraint, DecoratedGraph, Expr, GraphTerm};
use super::parts::{PartSampler, PartTable};
use crate::error::{Error, Result};
use crate::exact::{fmt_ratio, ratio_to_f64};
use crate::graphons::Graphon;
use crate::sampling::{
    canonical_form, induced_density_exact, masks_isomorphic, over_chunks, sample_masks, substream,
    SimpleGraph, CHUNK, DEFAULT_BUDGET,
};

/// Sides agree when they differ by at most this many standard errors.
pub const SIGMA: f64 = 4.0;
/// Batches used for standard errors of nonlinear expressions.
const BATCHES: u64 = 32;
/// Upper confidence bound on the root acceptance rate below which a
/// constraint counts as null-satisfied.
pub const NULL_RATE: f64 = 1e-6;
/// One-sided confidence level of that bound.
pub const NULL_CONFIDENCE: f64 = 0.99;
/// Stream salt separating non-root draws from root draws.
const INNER_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Satisfied,
    Violated,
    NullSatisfied,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideValue {
    pub value: f64,
    pub stderr: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatisfactionVerdict {
    pub status: Status,
    pub lhs: SideValue,
    pub rhs: SideValue,
    /// the difference tested: overall for ordinary constraints, the worst root tuple otherwise
    pub difference: f64,
    pub difference_stderr: f64,
    /// standard errors allowed before declaring a violation
    pub threshold: f64,
    pub samples: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roots: Option<RootStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootStats {
    pub tried: u64,
    pub accepted: u64,
    pub used: u64,
    pub acceptance_rate: f64,
    /// one-sided upper confidence bound on the acceptance rate
    pub acceptance_upper: f64,
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, 0.0);
    }
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, var.sqrt())
}

fn f64_leaf(values: &BTreeMap<SimpleGraph, f64>) -> impl FnMut(&GraphTerm) -> f64 + '_ {
    move |t| match t {
        GraphTerm::Plain(g) => values[&canonical_form(g)],
        GraphTerm::Decorated(_) => unreachable!("checked plain"),
    }
}

fn konst(c: &BigRational) -> f64 {
    ratio_to_f64(c)
}

/// Evaluates an ordinary constraint: exactly when the graphon is an exact
/// block structure small enough to enumerate, by Monte Carlo otherwise.
/// All graphs of one order share the same samples.
pub fn evaluate_ordinary(
    c: &Constraint,
    g: &Graphon,
    samples: u64,
    seed: u64,
) -> Result<SatisfactionVerdict> {
    let mut distinct: Vec<SimpleGraph> = Vec::new();
    for t in c.graphs() {
        match t {
            GraphTerm::Plain(h) => {
                let canon = canonical_form(h);
                if !distinct.contains(&canon) {
                    distinct.push(canon);
                }
            }
            GraphTerm::Decorated(_) => {
                return Err(Error::IncompatibleGraphs(
                    "decorated graph in an ordinary constraint".into(),
                ));
            }
        }
    }
    if let Some(k) = g.block_kernel() {
        let exact: Result<BTreeMap<SimpleGraph, BigRational>> = distinct
            .iter()
            .map(|h| induced_density_exact(h, k, DEFAULT_BUDGET).map(|d| (h.clone(), d)))
            .collect();
        if let Ok(values) = exact {
            let mut leaf = |t: &GraphTerm| match t {
                GraphTerm::Plain(h) => values[&canonical_form(h)].clone(),
                GraphTerm::Decorated(_) => unreachable!(),
            };
            let lhs = c.lhs.eval_with(&mut leaf, &|q: &BigRational| q.clone());
            let rhs = c.rhs.eval_with(&mut leaf, &|q: &BigRational| q.clone());
            let side = |v: &BigRational| SideValue {
                value: ratio_to_f64(v),
                stderr: 0.0,
                exact: Some(fmt_ratio(v)),
            };
            let diff = &lhs - &rhs;
            return Ok(SatisfactionVerdict {
                status: if lhs == rhs {
                    Status::Satisfied
                } else {
                    Status::Violated
                },
                lhs: side(&lhs),
                rhs: side(&rhs),
                difference: ratio_to_f64(&diff),
                difference_stderr: 0.0,
                threshold: SIGMA,
                samples: 0,
                roots: None,
            });
        }
    }
    if samples == 0 {
        return Err(Error::InvalidGraph("at least one sample is needed".into()));
    }
    let batches = BATCHES.min(samples);
    // hits[graph][batch]
    let mut hits = vec![vec![0u64; batches as usize]; distinct.len()];
    let mut orders: Vec<usize> = distinct.iter().map(|h| h.order()).collect();
    orders.sort_unstable();
    orders.dedup();
    for &k in &orders {
        let members: Vec<usize> = (0..distinct.len())
            .filter(|&i| distinct[i].order() == k)
            .collect();
        let masks: Vec<Vec<u32>> = members.iter().map(|&i| distinct[i].masks()).collect();
        let per_chunk = over_chunks(samples, seed, |rng, count| {
            let mut local = vec![vec![0u64; batches as usize]; members.len()];
            let chunk_start = rng.get_stream() * CHUNK;
            for s in 0..count {
                let m = sample_masks(g, k, rng);
                let b = ((chunk_start + s) % batches) as usize;
                for (j, hm) in masks.iter().enumerate() {
                    if masks_isomorphic(&m, hm) {
                        local[j][b] += 1;
                    }
                }
            }
            local
        });
        for local in per_chunk {
            for (j, &i) in members.iter().enumerate() {
                for b in 0..batches as usize {
                    hits[i][b] += local[j][b];
                }
            }
        }
    }
    let batch_size =
        |b: u64| -> f64 { (samples / batches + u64::from(b < samples % batches)) as f64 };
    let overall: BTreeMap<SimpleGraph, f64> = distinct
        .iter()
        .enumerate()
        .map(|(i, h)| {
            (
                h.clone(),
                hits[i].iter().sum::<u64>() as f64 / samples as f64,
            )
        })
        .collect();
    let lhs = c.lhs.eval_with(&mut f64_leaf(&overall), &konst);
    let rhs = c.rhs.eval_with(&mut f64_leaf(&overall), &konst);
    let mut per_batch = Vec::with_capacity(batches as usize);
    for b in 0..batches {
        let vals: BTreeMap<SimpleGraph, f64> = distinct
            .iter()
            .enumerate()
            .map(|(i, h)| (h.clone(), hits[i][b as usize] as f64 / batch_size(b)))
            .collect();
        let l = c.lhs.eval_with(&mut f64_leaf(&vals), &konst);
        let r = c.rhs.eval_with(&mut f64_leaf(&vals), &konst);
        per_batch.push((l, r));
    }
    let se = |f: &dyn Fn(&(f64, f64)) -> f64| -> f64 {
        let v: Vec<f64> = per_batch.iter().map(f).collect();
        mean_sd(&v).1 / (batches as f64).sqrt()
    };
    let (lse, rse, dse) = (se(&|p| p.0), se(&|p| p.1), se(&|p| p.0 - p.1));
    let diff = lhs - rhs;
    let satisfied = if dse > 0.0 {
        diff.abs() <= SIGMA * dse
    } else {
        diff.abs() <= 1e-15
    };
    Ok(SatisfactionVerdict {
        status: if satisfied {
            Status::Satisfied
        } else {
            Status::Violated
        },
        lhs: SideValue {
            value: lhs,
            stderr: lse,
            exact: None,
        },
        rhs: SideValue {
            value: rhs,
            stderr: rse,
            exact: None,
        },
        difference: diff,
        difference_stderr: dse,
        threshold: SIGMA,
        samples,
        roots: None,
    })
}

/// How the probability of a decorated graph given its roots is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// draw non-root positions, then take the product of `W` or `1 - W`
    /// over the specified pairs
    Product,
    /// also draw every specified pair and score whether it comes out as required
    Bernoulli,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoratedOptions {
    /// accepted root tuples to use
    pub root_tuples: u64,
    /// give up after this many root draws
    pub max_root_tries: u64,
    /// non-root draws per root tuple
    pub inner_samples: u64,
    pub seed: u64,
    pub estimator: Estimator,
}

impl Default for DecoratedOptions {
    fn default() -> Self {
        DecoratedOptions {
            root_tuples: 1000,
            max_root_tries: 10_000_000,
            inner_samples: 1000,
            seed: 0,
            estimator: Estimator::Product,
        }
    }
}

/// Draws root tuples from their parts, keeping those whose `W` values are
/// positive on root edges and below one on root non-edges.
fn root_tuples(
    h0: &DecoratedGraph,
    g: &Graphon,
    parts: &PartTable,
    opts: &DecoratedOptions,
) -> Result<(Vec<Vec<f64>>, RootStats)> {
    let n = h0.order();
    if n == 0 {
        let stats = RootStats {
            tried: 1,
            accepted: 1,
            used: 1,
            acceptance_rate: 1.0,
            acceptance_upper: 1.0,
        };
        return Ok((vec![Vec::new()], stats));
    }
    let labels: Vec<&str> = h0.vertices().iter().map(|v| v.label.as_str()).collect();
    let samplers = parts.samplers(&labels)?;
    let pairs: Vec<((usize, usize), bool)> = h0.specified_pairs().collect();
    let accept = |xs: &[f64]| {
        pairs.iter().all(|&((i, j), edge)| {
            let w = g.value(xs[i], xs[j]);
            if edge {
                w > 0.0
            } else {
                w < 1.0
            }
        })
    };
    const WAVE: u64 = 64;
    let mut tuples = Vec::new();
    let mut tried = 0u64;
    let mut chunk = 0u64;
    while (tuples.len() as u64) < opts.root_tuples && tried < opts.max_root_tries {
        let wave: Vec<(u64, Vec<Vec<f64>>)> = (chunk..chunk + WAVE)
            .into_par_iter()
            .map(|c| {
                let start = c * CHUNK;
                let count = CHUNK.min(opts.max_root_tries.saturating_sub(start));
                let mut rng = substream(opts.seed, c);
                let mut out = Vec::new();
                for _ in 0..count {
                    let xs: Vec<f64> = samplers.iter().map(|s| s.sample(&mut rng)).collect();
                    if accept(&xs) {
                        out.push(xs);
                    }
                }
                (count, out)
            })
            .collect();
        for (count, out) in wave {
            tried += count;
            tuples.extend(out);
        }
        chunk += WAVE;
    }
    let accepted = tuples.len() as u64;
    tuples.truncate(opts.root_tuples as usize);
    let upper = if accepted == 0 {
        1.0 - (1.0 - NULL_CONFIDENCE).powf(1.0 / tried as f64)
    } else {
        // normal approximation above zero successes
        let p = accepted as f64 / tried as f64;
        (p + 2.326 * (p * (1.0 - p) / tried as f64).sqrt()).min(1.0)
    };
    let stats = RootStats {
        tried,
        accepted,
        used: tuples.len() as u64,
        acceptance_rate: accepted as f64 / tried.max(1) as f64,
        acceptance_upper: upper,
    };
    Ok((tuples, stats))
}

/// Samplers and relation lists for the non-root part of a decorated graph.
struct Inner {
    samplers: Vec<PartSampler>,
    roots: usize,
    pairs: Vec<((usize, usize), bool)>,
}

impl Inner {
    fn new(h: &DecoratedGraph, parts: &PartTable) -> Result<Inner> {
        let roots = h.num_roots();
        let labels: Vec<&str> = h.vertices()[roots..]
            .iter()
            .map(|v| v.label.as_str())
            .collect();
        Ok(Inner {
            samplers: parts.samplers(&labels)?,
            roots,
            pairs: h
                .specified_pairs()
                .filter(|((_, j), _)| *j >= roots)
                .collect(),
        })
    }

    /// One draw of the probability (or indicator) that `h` appears given the roots.
    fn draw<R: Rng>(&self, g: &Graphon, xs: &[f64], est: Estimator, rng: &mut R) -> f64 {
        let mut pos = xs.to_vec();
        pos.extend(self.samplers.iter().map(|s| s.sample(rng)));
        debug_assert_eq!(pos.len(), self.roots + self.samplers.len());
        let mut p = 1.0;
        for &((i, j), edge) in &self.pairs {
            let w = g.value(pos[i], pos[j]);
            match est {
                Estimator::Product => p *= if edge { w } else { 1.0 - w },
                Estimator::Bernoulli => {
                    let u: f64 = rng.gen();
                    if (u < w) != edge {
                        p = 0.0;
                    }
                }
            }
        }
        p
    }
}

/// Per root tuple: each graph's batch means over the non-root draws.
fn tuple_batches(
    graphs: &[Inner],
    g: &Graphon,
    xs: &[f64],
    index: u64,
    opts: &DecoratedOptions,
) -> Vec<Vec<f64>> {
    let batches = BATCHES.min(opts.inner_samples).max(1);
    let mut sums = vec![vec![0.0; batches as usize]; graphs.len()];
    let mut counts = vec![0u64; batches as usize];
    let mut rng = substream(opts.seed ^ INNER_SALT, index);
    for s in 0..opts.inner_samples {
        let b = (s % batches) as usize;
        counts[b] += 1;
        for (k, inner) in graphs.iter().enumerate() {
            sums[k][b] += inner.draw(g, xs, opts.estimator, &mut rng);
        }
    }
    sums.into_iter()
        .map(|row| {
            row.iter()
                .zip(&counts)
                .map(|(s, &c)| s / c as f64)
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoratedEstimate {
    pub value: f64,
    pub stderr: f64,
    pub roots: RootStats,
}

/// Probability of a decorated graph, averaged over accepted root tuples.
/// No permutation of the non-root vertices is allowed.
pub fn decorated_probability(
    h: &DecoratedGraph,
    g: &Graphon,
    parts: &PartTable,
    opts: &DecoratedOptions,
) -> Result<DecoratedEstimate> {
    let (tuples, stats) = root_tuples(&h.root_graph(), g, parts, opts)?;
    if tuples.is_empty() {
        return Ok(DecoratedEstimate {
            value: 0.0,
            stderr: 0.0,
            roots: stats,
        });
    }
    let inner = [Inner::new(h, parts)?];
    let per: Vec<Vec<f64>> = tuples
        .par_iter()
        .enumerate()
        .map(|(t, xs)| tuple_batches(&inner, g, xs, t as u64, opts).remove(0))
        .collect();
    let means: Vec<f64> = per
        .iter()
        .map(|b| b.iter().sum::<f64>() / b.len() as f64)
        .collect();
    let (value, stderr) = if means.len() >= 2 {
        let (m, sd) = mean_sd(&means);
        (m, sd / (means.len() as f64).sqrt())
    } else {
        let (m, sd) = mean_sd(&per[0]);
        (m, sd / (per[0].len() as f64).sqrt())
    };
    Ok(DecoratedEstimate {
        value,
        stderr,
        roots: stats,
    })
}

/// Checks a decorated constraint on sampled root tuples: each tuple must
/// balance within a threshold that grows with the number of tuples tested.
pub fn evaluate_decorated(
    c: &Constraint,
    g: &Graphon,
    parts: &PartTable,
    opts: &DecoratedOptions,
) -> Result<SatisfactionVerdict> {
    let h0 = c.root_graph()?;
    let mut graphs: Vec<DecoratedGraph> = Vec::new();
    for t in c.graphs() {
        if let GraphTerm::Decorated(d) = t {
            if !graphs.contains(d) {
                graphs.push(d.clone());
            }
        }
    }
    let (tuples, stats) = root_tuples(&h0, g, parts, opts)?;
    if tuples.is_empty() {
        let null = stats.acceptance_upper < NULL_RATE;
        let zero = SideValue {
            value: 0.0,
            stderr: 0.0,
            exact: None,
        };
        return Ok(SatisfactionVerdict {
            status: if null {
                Status::NullSatisfied
            } else {
                Status::Inconclusive
            },
            lhs: zero.clone(),
            rhs: zero,
            difference: 0.0,
            difference_stderr: 0.0,
            threshold: SIGMA,
            samples: 0,
            roots: Some(stats),
        });
    }
    let inner: Vec<Inner> = graphs
        .iter()
        .map(|h| Inner::new(h, parts))
        .collect::<Result<_>>()?;
    let index_of = |d: &DecoratedGraph| graphs.iter().position(|x| x == d).unwrap();
    let side = |e: &Expr, vals: &[f64]| -> f64 {
        let mut leaf = |t: &GraphTerm| match t {
            GraphTerm::Decorated(d) => vals[index_of(d)],
            GraphTerm::Plain(_) => unreachable!("checked decorated"),
        };
        e.eval_with(&mut leaf, &konst)
    };
    // per tuple: (lhs, rhs, difference stderr)
    let per: Vec<(f64, f64, f64)> = tuples
        .par_iter()
        .enumerate()
        .map(|(t, xs)| {
            let b = tuple_batches(&inner, g, xs, t as u64, opts);
            let nb = b[0].len();
            let full: Vec<f64> = b
                .iter()
                .map(|row| row.iter().sum::<f64>() / nb as f64)
                .collect();
            let diffs: Vec<f64> = (0..nb)
                .map(|k| {
                    let vals: Vec<f64> = b.iter().map(|row| row[k]).collect();
                    side(&c.lhs, &vals) - side(&c.rhs, &vals)
                })
                .collect();
            let se = mean_sd(&diffs).1 / (nb as f64).sqrt();
            (side(&c.lhs, &full), side(&c.rhs, &full), se)
        })
        .collect();
    let count = per.len() as f64;
    // Bonferroni over tuples, never below SIGMA
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let threshold = normal.inverse_cdf(1.0 - 1e-3 / (2.0 * count)).max(SIGMA);
    // a tuple whose draws all agree reports no spread; fall back to the pooled level
    let pooled = (per.iter().map(|p| p.2 * p.2).sum::<f64>() / count).sqrt();
    let mut worst = (0.0f64, 0.0f64, f64::NEG_INFINITY);
    let mut violated = false;
    for &(l, r, se) in &per {
        let se = se.max(pooled);
        let d = l - r;
        let excess = d.abs() - threshold * se;
        if excess > 1e-12 {
            violated = true;
        }
        if excess > worst.2 {
            worst = (d, se, excess);
        }
    }
    let agg = |f: &dyn Fn(&(f64, f64, f64)) -> f64| -> (f64, f64) {
        let v: Vec<f64> = per.iter().map(f).collect();
        let (m, sd) = mean_sd(&v);
        (m, sd / count.sqrt())
    };
    let (lv, ls) = agg(&|p| p.0);
    let (rv, rs) = agg(&|p| p.1);
    Ok(SatisfactionVerdict {
        status: if violated {
            Status::Violated
        } else {
            Status::Satisfied
        },
        lhs: SideValue {
            value: lv,
            stderr: ls,
            exact: None,
        },
        rhs: SideValue {
            value: rv,
            stderr: rs,
            exact: None,
        },
        difference: worst.0,
        difference_stderr: worst.1,
        threshold,
        samples: per.len() as u64 * opts.inner_samples,
        roots: Some(stats),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::parse::{expand_unspecified, parse_constraint, parse_expression};
    use crate::exact::ratio;
    use crate::graphons::{make_cf, make_constant, Set, StepGraphon};

    fn ordinary(text: &str, g: &Graphon) -> SatisfactionVerdict {
        evaluate_ordinary(&parse_constraint(text).unwrap(), g, 20_000, 3).unwrap()
    }

    #[test]
    fn ordinary_on_constant_half() {
        let g = make_constant(ratio(1, 2)).unwrap();
        let v = ordinary("K2 = 0.5", &g);
        assert_eq!(v.status, Status::Satisfied);
        assert_eq!(v.lhs.exact.as_deref(), Some("1/2"));
        assert_eq!(ordinary("K3 = 0.125", &g).status, Status::Satisfied);
        assert_eq!(ordinary("K2 = 0.6", &g).status, Status::Violated);
        assert_eq!(
            ordinary("K2 * K2 + 0.25 = K2", &g).status,
            Status::Satisfied
        );
    }

    #[test]
    fn ordinary_monte_carlo() {
        // m = 10 is not a perfect square, so there is no exact path
        let g = make_cf(10).unwrap();
        let v = ordinary("K2 = 0.5", &g);
        assert!(v.difference_stderr > 0.0);
        assert_eq!(v.status, Status::Satisfied, "{v:?}");
        assert_eq!(ordinary("K2 = 0.6", &g).status, Status::Violated);
        // shared samples make sums exactly additive
        let a = ordinary("K3 + C4 = 0", &g).lhs.value;
        let b = ordinary("K3 = 0", &g).lhs.value + ordinary("C4 = 0", &g).lhs.value;
        assert_eq!(a, b);
    }

    /// `A = [0, 1/2)`, `B = [1/2, 1)`: one on `A x A`, zero on `B x B`, half across.
    fn two_part() -> (Graphon, PartTable) {
        let s = StepGraphon::new(
            vec![ratio(0, 1), ratio(1, 2), ratio(1, 1)],
            vec![
                vec![ratio(1, 1), ratio(1, 2)],
                vec![ratio(1, 2), ratio(0, 1)],
            ],
        )
        .unwrap();
        let parts = PartTable::from_sets(vec![
            ("A".into(), Set::interval(ratio(0, 1), ratio(1, 2)).unwrap()),
            ("B".into(), Set::interval(ratio(1, 2), ratio(1, 1)).unwrap()),
        ])
        .unwrap();
        (Graphon::Step(s), parts)
    }

    fn decorated(text: &str) -> DecoratedGraph {
        match parse_expression(text).unwrap() {
            Expr::Graph(GraphTerm::Decorated(d)) => d,
            _ => panic!(),
        }
    }

    const FIGURE: &str = "D{roots: [A]1 [A]2; free: (B)3 (B)4; 1-2 1-3 2~3 1-4 2-4 3~4}";

    #[test]
    fn figure_probability() {
        let (g, parts) = two_part();
        let opts = DecoratedOptions {
            root_tuples: 100,
            inner_samples: 100,
            ..Default::default()
        };
        let p = decorated_probability(&decorated(FIGURE), &g, &parts, &opts).unwrap();
        assert_eq!(p.value, 1.0 / 16.0);
        let opts = DecoratedOptions {
            estimator: Estimator::Bernoulli,
            ..opts
        };
        let p = decorated_probability(&decorated(FIGURE), &g, &parts, &opts).unwrap();
        assert!((p.value - 1.0 / 16.0).abs() <= 4.0 * p.stderr);
        assert!((p.value - 2.0 / 16.0).abs() > 4.0 * p.stderr);

        let v = evaluate_decorated(
            &parse_constraint(&format!("{FIGURE} = 1/16")).unwrap(),
            &g,
            &parts,
            &opts,
        )
        .unwrap();
        assert_eq!(v.status, Status::Satisfied);
        let v = evaluate_decorated(
            &parse_constraint(&format!("{FIGURE} = 1/8")).unwrap(),
            &g,
            &parts,
            &opts,
        )
        .unwrap();
        assert_eq!(v.status, Status::Violated);
    }

    #[test]
    fn edge_inside_b_has_probability_zero() {
        let (g, parts) = two_part();
        let h = decorated("D{roots: [A]1; free: (B)2 (B)3; 2-3}");
        let p = decorated_probability(&h, &g, &parts, &DecoratedOptions::default()).unwrap();
        assert_eq!(p.value, 0.0);
    }

    #[test]
    fn impossible_roots_are_null_satisfied() {
        let (g, parts) = two_part();
        let c = parse_constraint("D{roots: [A]1 [A]2; free: ; 1~2} = 1/2").unwrap();
        let v = evaluate_decorated(&c, &g, &parts, &DecoratedOptions::default()).unwrap();
        assert_eq!(v.status, Status::NullSatisfied);
        let few = DecoratedOptions {
            max_root_tries: 10_000,
            ..Default::default()
        };
        assert_eq!(
            evaluate_decorated(&c, &g, &parts, &few).unwrap().status,
            Status::Inconclusive
        );
    }

    #[test]
    fn unspecified_pair_is_the_sum_of_completions() {
        let (g, parts) = two_part();
        let h = decorated("D{roots: [A]1; free: (A)2 (B)3; 1-2 1-3}");
        let opts = DecoratedOptions {
            root_tuples: 200,
            inner_samples: 200,
            estimator: Estimator::Bernoulli,
            ..Default::default()
        };
        let whole = decorated_probability(&h, &g, &parts, &opts).unwrap();
        let Expr::Sum(parts_expr) = expand_unspecified(&h) else {
            panic!()
        };
        let (mut sum, mut var) = (0.0, 0.0);
        for e in parts_expr {
            let Expr::Graph(GraphTerm::Decorated(d)) = e else {
                panic!()
            };
            let p = decorated_probability(&d, &g, &parts, &opts).unwrap();
            sum += p.value;
            var += p.stderr * p.stderr;
        }
        assert!((whole.value - sum).abs() <= 4.0 * (var + whole.stderr.powi(2)).sqrt());
        assert!((whole.value - 0.5).abs() <= 4.0 * whole.stderr);
    }

    #[test]
    fn rootless_graph_is_a_labelled_copy_probability() {
        // one part covering everything, K3 on three labelled vertices: p^3
        let g = make_constant(ratio(1, 2)).unwrap();
        let parts = PartTable::from_sets(vec![("U".into(), Set::full())]).unwrap();
        let h = decorated("D{roots: ; free: (U)1 (U)2 (U)3; 1-2 1-3 2-3}");
        let p = decorated_probability(&h, &g, &parts, &DecoratedOptions::default()).unwrap();
        assert_eq!(p.value, 0.125);
        // the induced density of the path on three vertices counts its 3
        // labelled copies; a single labelling has a third of it
        let path = decorated("D{roots: ; free: (U)1 (U)2 (U)3; 1-2 2-3 1~3}");
        let p = decorated_probability(&path, &g, &parts, &DecoratedOptions::default()).unwrap();
        let k = g.block_kernel().unwrap();
        let induced = induced_density_exact(&SimpleGraph::path(3), k, DEFAULT_BUDGET).unwrap();
        assert_eq!(p.value, ratio_to_f64(&induced) / 3.0);
    }
}
