//! Parts of a partitioned graphon: measures, degrees, and where the parts lie.

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::expr::is_label;
use crate::error::{Error, Result};
use crate::exact::ratio_to_f64;
use crate::graphons::svejk::table_degree_numerator;
use crate::graphons::{Graphon, Part, Set, SetSpec};

/// Degree expected on a part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeRule {
    Exact(f64),
    /// only a lower bound is known; matched as the largest degree present
    AtLeast(f64),
}

impl DegreeRule {
    pub fn value(&self) -> f64 {
        match self {
            DegreeRule::Exact(d) | DegreeRule::AtLeast(d) => *d,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartEntry {
    pub name: String,
    pub measure: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<DegreeRule>,
    /// where the part lies, once known
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub set: Option<SetSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartTable {
    pub parts: Vec<PartEntry>,
}

impl PartTable {
    /// Validates names, measures (positive, summing to 1) and degrees (distinct).
    pub fn new(parts: Vec<PartEntry>) -> Result<PartTable> {
        for (i, p) in parts.iter().enumerate() {
            if !is_label(&p.name) || parts[..i].iter().any(|q| q.name == p.name) {
                return Err(Error::InvalidPartition(format!(
                    "bad or repeated part name {:?}",
                    p.name
                )));
            }
            if p.measure.is_nan() || p.measure <= 0.0 {
                return Err(Error::InvalidPartition(format!(
                    "part {} has measure {}",
                    p.name, p.measure
                )));
            }
            if let Some(d) = p.degree {
                if parts[..i]
                    .iter()
                    .any(|q| q.degree.is_some_and(|e| e.value() == d.value()))
                {
                    return Err(Error::InvalidPartition(format!(
                        "degree {} repeated",
                        d.value()
                    )));
                }
            }
        }
        let total: f64 = parts.iter().map(|p| p.measure).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidPartition(format!(
                "part measures sum to {total}"
            )));
        }
        Ok(PartTable { parts })
    }

    /// Parts given by sets; measures are taken from the sets.
    pub fn from_sets(parts: Vec<(String, Set)>) -> Result<PartTable> {
        PartTable::new(
            parts
                .into_iter()
                .map(|(name, set)| PartEntry {
                    name,
                    measure: set.measure_f64(),
                    degree: None,
                    set: Some(set.to_spec()),
                })
                .collect(),
        )
    }

    /// The ten parts of the Švejk graphon with their tabulated degrees.
    pub fn svejk_expected() -> PartTable {
        let parts = Part::ALL
            .iter()
            .map(|&p| {
                let d = table_degree_numerator(p) as f64 / 104.0;
                PartEntry {
                    name: p.name().to_string(),
                    measure: p.length() as f64 / 13.0,
                    degree: Some(if p == Part::Q {
                        DegreeRule::AtLeast(d)
                    } else {
                        DegreeRule::Exact(d)
                    }),
                    set: None,
                }
            })
            .collect();
        PartTable::new(parts).expect("valid table")
    }

    pub fn get(&self, name: &str) -> Option<&PartEntry> {
        self.parts.iter().find(|p| p.name == name)
    }

    /// Samplers for the named parts, in order; every part must have a set.
    pub fn samplers(&self, names: &[&str]) -> Result<Vec<PartSampler>> {
        names
            .iter()
            .map(|n| {
                let p = self
                    .get(n)
                    .ok_or_else(|| Error::InvalidGraph(format!("no part named {n}")))?;
                let spec = p.set.as_ref().ok_or_else(|| {
                    Error::InvalidPartition(format!("part {n} has no location; fit it first"))
                })?;
                PartSampler::new(&Set::try_from(spec)?)
            })
            .collect()
    }
}

/// Uniform sampling from a set: pick a piece by measure, then a point in it.
#[derive(Debug, Clone)]
pub struct PartSampler {
    /// `(start, length, cumulative measure)`
    pieces: Vec<(f64, f64, f64)>,
}

impl PartSampler {
    pub fn new(set: &Set) -> Result<PartSampler> {
        let raw: Vec<(f64, f64)> = match set {
            Set::Intervals(iv) => iv
                .iter()
                .map(|(a, b)| (ratio_to_f64(a), ratio_to_f64(&(b - a))))
                .collect(),
            // a partial block mass is placed at the left of its block
            Set::Blocks { grid, weights } => weights
                .iter()
                .map(|(b, w)| (*b as f64 / *grid as f64, ratio_to_f64(w)))
                .collect(),
        };
        let mut acc = 0.0;
        let pieces: Vec<(f64, f64, f64)> = raw
            .into_iter()
            .filter(|(_, l)| *l > 0.0)
            .map(|(s, l)| {
                acc += l;
                (s, l, acc)
            })
            .collect();
        if pieces.is_empty() {
            return Err(Error::InvalidSet("cannot sample from a null set".into()));
        }
        Ok(PartSampler { pieces })
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let total = self.pieces.last().unwrap().2;
        let u = rng.gen::<f64>() * total;
        let i = self
            .pieces
            .partition_point(|p| p.2 <= u)
            .min(self.pieces.len() - 1);
        let (s, l, c) = self.pieces[i];
        // reuse the position inside the piece
        let v = s + (u - (c - l)).clamp(0.0, l);
        v.min(s + l * (1.0 - f64::EPSILON))
            .min(1.0 - f64::EPSILON / 2.0)
    }
}

/// Assigns the midpoints of `grid` equal cells to parts by nearest expected
/// degree within `tol`, then fits each part's location, degree and measure.
///
/// `measure_tol` is relative: a fitted measure may differ from the expected
/// one by at most `measure_tol` times the expected measure.
pub fn partition_by_degree(
    g: &Graphon,
    expected: &PartTable,
    tol: f64,
    grid: usize,
    measure_tol: f64,
) -> Result<PartTable> {
    let rules: Vec<DegreeRule> = expected
        .parts
        .iter()
        .map(|p| {
            p.degree.ok_or_else(|| {
                Error::InvalidPartition(format!("part {} has no expected degree", p.name))
            })
        })
        .collect::<Result<_>>()?;
    for (i, a) in rules.iter().enumerate() {
        for b in &rules[..i] {
            if (a.value() - b.value()).abs() <= 2.0 * tol {
                return Err(Error::PreconditionViolated(format!(
                    "expected degrees {} and {} are not separated by more than 2 * {tol}",
                    a.value(),
                    b.value()
                )));
            }
        }
    }
    let bounded = rules
        .iter()
        .position(|r| matches!(r, DegreeRule::AtLeast(_)));
    let samples: Vec<(f64, f64)> = (0..grid)
        .into_par_iter()
        .map(|i| {
            let x = (i as f64 + 0.5) / grid as f64;
            g.degree(x, tol).map(|d| (x, d.value))
        })
        .collect::<Result<_>>()?;
    let mut assign = Vec::with_capacity(grid);
    for &(x, d) in &samples {
        let nearest = rules
            .iter()
            .enumerate()
            .filter(|(_, r)| matches!(r, DegreeRule::Exact(_)))
            .map(|(i, r)| (i, (r.value() - d).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        let part = match nearest {
            Some((i, dist)) if dist <= tol => i,
            _ => match bounded {
                Some(b) if d >= rules[b].value() - tol => b,
                _ => return Err(Error::DegreeUnassignable { x, degree: d }),
            },
        };
        assign.push(part);
    }
    let mut fitted = Vec::with_capacity(rules.len());
    for (p, entry) in expected.parts.iter().enumerate() {
        let cells: Vec<usize> = (0..grid).filter(|&i| assign[i] == p).collect();
        let measure = cells.len() as f64 / grid as f64;
        if (measure - entry.measure).abs() > measure_tol * entry.measure {
            return Err(Error::MeasureMismatch {
                part: entry.name.clone(),
                found: measure,
                expected: entry.measure,
            });
        }
        let degree = cells.iter().map(|&i| samples[i].1).sum::<f64>() / cells.len() as f64;
        let mut iv: Vec<(BigRational, BigRational)> = Vec::new();
        let den = BigInt::from(grid);
        for &c in &cells {
            let lo = BigRational::new(BigInt::from(c), den.clone());
            let hi = BigRational::new(BigInt::from(c + 1), den.clone());
            match iv.last_mut() {
                Some(last) if last.1 == lo => last.1 = hi,
                _ => iv.push((lo, hi)),
            }
        }
        fitted.push(PartEntry {
            name: entry.name.clone(),
            measure,
            degree: Some(match rules[p] {
                DegreeRule::Exact(_) => DegreeRule::Exact(degree),
                DegreeRule::AtLeast(_) => DegreeRule::AtLeast(degree),
            }),
            set: Some(Set::Intervals(iv).to_spec()),
        });
    }
    Ok(PartTable { parts: fitted })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ratio;
    use crate::graphons::{make_constant, make_svejk};

    fn one_part(d: f64) -> PartTable {
        PartTable::new(vec![PartEntry {
            name: "A".into(),
            measure: 1.0,
            degree: Some(DegreeRule::Exact(d)),
            set: None,
        }])
        .unwrap()
    }

    #[test]
    fn constant_graphon() {
        let g = make_constant(ratio(1, 2)).unwrap();
        let t = partition_by_degree(&g, &one_part(0.5), 1e-9, 100, 0.02).unwrap();
        assert_eq!(t.parts[0].measure, 1.0);
        assert_eq!(t.parts[0].set, Some(Set::full().to_spec()));

        let two = PartTable::new(vec![
            PartEntry {
                name: "A".into(),
                measure: 0.5,
                degree: Some(DegreeRule::Exact(0.25)),
                set: None,
            },
            PartEntry {
                name: "B".into(),
                measure: 0.5,
                degree: Some(DegreeRule::Exact(0.75)),
                set: None,
            },
        ])
        .unwrap();
        assert!(matches!(
            partition_by_degree(&g, &two, 1e-6, 100, 0.02),
            Err(Error::DegreeUnassignable { .. })
        ));
    }

    #[test]
    fn svejk_table_recovered() {
        let g = make_svejk();
        let t = partition_by_degree(&g, &PartTable::svejk_expected(), 1e-6, 13 * 40, 0.02).unwrap();
        for (p, e) in t.parts.iter().zip(PartTable::svejk_expected().parts) {
            assert!(
                (p.measure - e.measure).abs() < 1e-12,
                "{} {}",
                p.name,
                p.measure
            );
            match (p.degree.unwrap(), e.degree.unwrap()) {
                (DegreeRule::Exact(a), DegreeRule::Exact(b)) => assert!((a - b).abs() < 1e-6),
                (DegreeRule::AtLeast(a), DegreeRule::AtLeast(b)) => assert!(a >= b),
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn table_validation() {
        let mut bad = one_part(0.5);
        bad.parts[0].measure = 0.9;
        assert!(PartTable::new(bad.parts).is_err());
        let t = PartTable::from_sets(vec![
            ("A".into(), Set::interval(ratio(0, 1), ratio(1, 2)).unwrap()),
            ("B".into(), Set::interval(ratio(1, 2), ratio(1, 1)).unwrap()),
        ])
        .unwrap();
        let s = t.samplers(&["B"]).unwrap();
        let mut rng = crate::sampling::substream(1, 0);
        for _ in 0..1000 {
            let x = s[0].sample(&mut rng);
            assert!((0.5..1.0).contains(&x));
        }
        assert!(t.samplers(&["C"]).is_err());
    }
}
