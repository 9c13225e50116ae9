//! Degree tables: sampled degrees per part against their expected values.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::svejk::{table_degree_numerator, Part};
use super::Graphon;
use crate::error::Result;
use crate::exact::fmt_ratio;
use crate::sampling::substream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeRow {
    pub part: String,
    /// expected degree as written in the table, e.g. `32/104`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_value: Option<f64>,
    /// the expected value is only a lower bound
    pub lower_bound: bool,
    pub points: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// largest distance from the expected value (shortfall for a lower bound)
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matches: Option<bool>,
}

impl DegreeRow {
    fn new(
        part: &str,
        expected: Option<(String, f64, bool)>,
        degrees: &[f64],
        tol: f64,
    ) -> DegreeRow {
        let min = degrees.iter().copied().fold(f64::INFINITY, f64::min);
        let max = degrees.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = degrees.iter().sum::<f64>() / degrees.len() as f64;
        let (text, value, lower) = match expected {
            Some((t, v, l)) => (Some(t), Some(v), l),
            None => (None, None, false),
        };
        let max_error = value.map(|e| {
            if lower {
                (e - min).max(0.0)
            } else {
                (max - e).abs().max((min - e).abs())
            }
        });
        DegreeRow {
            part: part.to_string(),
            expected: text,
            expected_value: value,
            lower_bound: lower,
            points: degrees.len(),
            min,
            max,
            mean,
            max_error,
            matches: max_error.map(|e| e <= tol),
        }
    }
}

fn sample_degrees(
    g: &Graphon,
    lo: f64,
    hi: f64,
    points: usize,
    seed: u64,
    stream: u64,
    tol: f64,
) -> Result<Vec<f64>> {
    let mut rng = substream(seed, stream);
    (0..points)
        .map(|_| {
            let x = lo + (hi - lo) * rng.gen::<f64>();
            g.degree(x.min(hi - f64::EPSILON), tol).map(|d| d.value)
        })
        .collect()
}

/// Degrees at `points` uniform points of each part.
///
/// The Švejk graphon is split into its ten parts with their tabulated
/// degrees. Other graphons form a single part `U`, with an expected value
/// when the degree is the same everywhere.
pub fn degree_table(g: &Graphon, points: usize, seed: u64, tol: f64) -> Result<Vec<DegreeRow>> {
    match g {
        Graphon::Svejk(_) => Part::ALL
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let lo = p.offset() as f64 / 13.0;
                let hi = (p.offset() + p.length()) as f64 / 13.0;
                let d = sample_degrees(g, lo, hi, points, seed, i as u64, tol)?;
                let num = table_degree_numerator(p);
                let expected = (format!("{num}/104"), num as f64 / 104.0, p == Part::Q);
                Ok(DegreeRow::new(p.name(), Some(expected), &d, tol))
            })
            .collect(),
        _ => {
            let d = sample_degrees(g, 0.0, 1.0, points, seed, 0, tol)?;
            let expected = match g {
                Graphon::Constant(_) | Graphon::ConlonFox(_) | Graphon::Restriction { .. } => {
                    let d = g.degree(0.5, tol)?;
                    Some((
                        d.exact
                            .as_ref()
                            .map_or_else(|| d.value.to_string(), fmt_ratio),
                        d.value,
                        false,
                    ))
                }
                _ => None,
            };
            Ok(vec![DegreeRow::new("U", expected, &d, tol)])
        }
    }
}
