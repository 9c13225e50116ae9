//! One function per subcommand.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use graphon_core::constraints::{
    evaluate_decorated, evaluate_ordinary, parse_constraint_file, parse_expression,
    partition_by_degree, render_constraint, DecoratedOptions, Expr, GraphTerm, PartTable,
    SatisfactionVerdict, Status,
};
use graphon_core::exact::{fmt_decimal, fmt_number, fmt_ratio, parse_ratio, ratio_to_f64};
use graphon_core::graphons::{compare_extracted_cf, degree_table, Graphon, GraphonDescriptor};
use graphon_core::regularity::{
    coordinate_partition, deviation_exact, deviation_heuristic, energy, fk_partition, refute_cf,
    refute_verify, IntKernel, Partition, PartitionSpec, WitnessRecord, MAX_EXHAUSTIVE_BLOCKS,
};
use graphon_core::sampling::{
    induced_density_exact, induced_density_mc, w_random_graph, SimpleGraph, DEFAULT_BUDGET,
};
use serde_json::json;

use crate::report::{csv, Outcome, RunConfig};
use crate::{Command, EXIT_MISMATCH};

/// Inputs hashed into the record, and the outcome.
pub type Run = (Vec<Vec<u8>>, Outcome);

pub fn run(cmd: &Command, cfg: &RunConfig) -> Result<Run> {
    match cmd {
        Command::Eval { graphon, x, y } => eval(cfg, graphon, x, y),
        Command::Degrees { graphon, points } => degrees(cfg, graphon, *points),
        Command::Sample { graphon, order } => sample(cfg, graphon, *order),
        Command::Density { graphon, graph, mc } => density(cfg, graphon, graph, *mc),
        Command::Partition {
            graphon,
            epsilon,
            restarts,
            out,
            trace,
        } => partition(
            cfg,
            graphon,
            epsilon,
            *restarts,
            out.as_deref(),
            trace.as_deref(),
        ),
        Command::Deviation {
            graphon,
            partition,
            heuristic,
            restarts,
        } => deviation(cfg, graphon, partition, *heuristic, *restarts),
        Command::Refute {
            m,
            partition,
            coords,
            out,
        } => refute(*m, partition.as_deref(), *coords, out.as_deref()),
        Command::Constraint {
            file,
            graphon,
            parts,
            fit_degrees,
            roots,
            inner,
            max_root_tries,
            estimator,
        } => {
            let opts = DecoratedOptions {
                root_tuples: *roots,
                max_root_tries: *max_root_tries,
                inner_samples: *inner,
                seed: cfg.seed,
                estimator: (*estimator).into(),
            };
            constraint(cfg, file, graphon, parts.as_deref(), *fit_degrees, &opts)
        }
        Command::ExtractCf { n, pairs } => extract_cf(cfg, *n, *pairs),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Parses a graphon argument; the returned bytes identify it in the digest.
fn graphon(cfg: &RunConfig, arg: &str) -> Result<(Graphon, Vec<u8>)> {
    let text = match arg.strip_prefix('@') {
        Some(path) => read(Path::new(path))?,
        None => arg.to_string(),
    };
    let mut d: GraphonDescriptor = text.parse()?;
    d.tail_k.get_or_insert(cfg.tail_k);
    let g = d.build_with_cap(cfg.tower_cap)?;
    Ok((g, serde_json::to_vec(&d)?))
}

fn number(x: &str) -> Result<f64> {
    Ok(ratio_to_f64(&parse_ratio(x)?))
}

fn eval(cfg: &RunConfig, arg: &str, x: &str, y: &str) -> Result<Run> {
    let (g, id) = graphon(cfg, arg)?;
    let (xv, yv) = (number(x)?, number(y)?);
    let v = g.eval(xv, yv)?;
    let shown = fmt_number(g.eval_exact(xv, yv).as_ref(), v, cfg.decimal);
    let out = Outcome::new(
        json!({ "x": x, "y": y, "value": shown }),
        vec!["x", "y", "value"],
        vec![vec![x.into(), y.into(), shown.clone()]],
    );
    Ok((vec![id, x.into(), y.into()], out))
}

fn degrees(cfg: &RunConfig, arg: &str, points: usize) -> Result<Run> {
    let (g, id) = graphon(cfg, arg)?;
    if points == 0 {
        bail!("--points must be positive");
    }
    let rows = degree_table(&g, points, cfg.seed, cfg.tol)?;
    let failed = rows.iter().any(|r| r.matches == Some(false));
    let opt = |v: Option<f64>| v.map(fmt_decimal).unwrap_or_default();
    let table = rows
        .iter()
        .map(|r| {
            vec![
                r.part.clone(),
                r.expected.clone().unwrap_or_default(),
                r.lower_bound.to_string(),
                r.points.to_string(),
                fmt_decimal(r.min),
                fmt_decimal(r.max),
                fmt_decimal(r.mean),
                opt(r.max_error),
                r.matches.map(|m| m.to_string()).unwrap_or_default(),
            ]
        })
        .collect();
    let out = Outcome::new(
        json!({ "rows": rows, "all_match": !failed }),
        vec![
            "part",
            "expected",
            "lower_bound",
            "points",
            "min",
            "max",
            "mean",
            "max_error",
            "matches",
        ],
        table,
    );
    Ok((
        vec![id],
        out.with_code(if failed { EXIT_MISMATCH } else { 0 }),
    ))
}

fn sample(cfg: &RunConfig, arg: &str, order: usize) -> Result<Run> {
    let (g, id) = graphon(cfg, arg)?;
    let h = w_random_graph(&g, order, cfg.seed);
    let edges: Vec<[usize; 2]> = h.edges().map(|(a, b)| [a, b]).collect();
    let rows = edges
        .iter()
        .map(|e| vec![e[0].to_string(), e[1].to_string()])
        .collect();
    let out = Outcome::new(
        json!({ "order": order, "edges": edges }),
        vec!["a", "b"],
        rows,
    );
    Ok((vec![id, order.to_string().into_bytes()], out))
}

fn plain_graph(text: &str) -> Result<SimpleGraph> {
    match parse_expression(text)? {
        Expr::Graph(GraphTerm::Plain(h)) => Ok(h),
        _ => bail!("{text:?} is not a single plain graph"),
    }
}

fn density(cfg: &RunConfig, arg: &str, graph: &str, force_mc: bool) -> Result<Run> {
    let (g, id) = graphon(cfg, arg)?;
    let h = plain_graph(graph)?;
    let exact = match g.block_kernel() {
        Some(k) if !force_mc => induced_density_exact(&h, k, DEFAULT_BUDGET).ok(),
        _ => None,
    };
    let (outputs, row) = match exact {
        Some(d) => {
            let v = fmt_number(Some(&d), ratio_to_f64(&d), cfg.decimal);
            (
                json!({ "graph": graph, "value": v, "stderr": "0", "exact": true, "samples": 0 }),
                vec![graph.to_string(), v, "0".into(), "true".into(), "0".into()],
            )
        }
        None => {
            let e = induced_density_mc(&h, &g, cfg.samples, cfg.seed)?;
            let (v, s) = (fmt_decimal(e.value), fmt_decimal(e.stderr));
            (
                json!({ "graph": graph, "value": v, "stderr": s, "exact": false, "samples": e.samples }),
                vec![
                    graph.to_string(),
                    v,
                    s,
                    "false".into(),
                    e.samples.to_string(),
                ],
            )
        }
    };
    let out = Outcome::new(
        outputs,
        vec!["graph", "value", "stderr", "exact", "samples"],
        vec![row],
    );
    Ok((vec![id, graph.into()], out))
}

fn partition(
    cfg: &RunConfig,
    arg: &str,
    epsilon: &str,
    restarts: u32,
    out: Option<&Path>,
    trace_path: Option<&Path>,
) -> Result<Run> {
    let (g, id) = graphon(cfg, arg)?;
    let eps = parse_ratio(epsilon)?;
    let kernel = IntKernel::from_graphon(&g)?;
    let r = fk_partition(&kernel, &eps, restarts, cfg.seed)?;
    let spec = r.partition.to_spec(&kernel);
    if let Some(p) = out {
        write(p, &serde_json::to_string_pretty(&spec)?)?;
    }
    let header = vec![
        "step",
        "parts",
        "energy",
        "energy_decimal",
        "deviation_decimal",
    ];
    let rows: Vec<Vec<String>> = r
        .trace
        .iter()
        .map(|t| {
            vec![
                t.step.to_string(),
                t.parts.to_string(),
                t.energy.clone(),
                fmt_decimal(t.energy_decimal),
                fmt_decimal(t.deviation_decimal),
            ]
        })
        .collect();
    if let Some(p) = trace_path {
        write(p, &csv(&header, &rows))?;
    }
    let outputs = json!({
        "epsilon": fmt_ratio(&eps),
        "parts": r.partition.num_parts(),
        "steps": r.trace.len() - 1,
        "final_deviation": WitnessRecord::from(&r.witness),
        "trace": r.trace,
        "partition": spec,
    });
    Ok((
        vec![id, epsilon.into()],
        Outcome::new(outputs, header, rows),
    ))
}

fn deviation(
    cfg: &RunConfig,
    arg: &str,
    path: &Path,
    heuristic: bool,
    restarts: u32,
) -> Result<Run> {
    let (g, id) = graphon(cfg, arg)?;
    let text = read(path)?;
    let spec: PartitionSpec =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let kernel = IntKernel::from_graphon(&g)?;
    let part = Partition::from_spec(&spec, &kernel)?;
    let w = if heuristic || kernel.num_blocks() > MAX_EXHAUSTIVE_BLOCKS {
        deviation_heuristic(&kernel, &part, restarts, cfg.seed)
    } else {
        deviation_exact(&kernel, &part)?
    };
    let e = energy(&kernel, &part);
    let rec = WitnessRecord::from(&w);
    let shown = fmt_number(Some(&w.deviation), w.deviation_f64(), cfg.decimal);
    let rows = vec![vec![
        part.num_parts().to_string(),
        shown,
        rec.exhaustive.to_string(),
        fmt_ratio(&e),
    ]];
    let outputs = json!({ "parts": part.num_parts(), "witness": rec, "energy": fmt_ratio(&e) });
    let out = Outcome::new(
        outputs,
        vec!["parts", "deviation", "exhaustive", "energy"],
        rows,
    );
    Ok((vec![id, text.into_bytes()], out))
}

fn refute(m: u32, path: Option<&Path>, coords: Option<u32>, out: Option<&Path>) -> Result<Run> {
    let (spec, input) = match (path, coords) {
        (Some(p), _) => {
            let text = read(p)?;
            let spec: PartitionSpec =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
            (spec, text.into_bytes())
        }
        (None, c) => {
            let c = c.unwrap_or(0);
            if c > m {
                return Err(anyhow!(graphon_core::Error::OutOfRange(format!(
                    "{c} coordinates of {m}"
                ))));
            }
            (
                coordinate_partition(m, c),
                format!("coords:{c}").into_bytes(),
            )
        }
    };
    let report = refute_cf(m, &spec)?;
    let verdict = refute_verify(&report, m, &spec)?;
    if let Some(p) = out {
        write(p, &serde_json::to_string_pretty(&report)?)?;
    }
    let ok = verdict.verified();
    let rows = vec![vec![
        m.to_string(),
        spec.parts.len().to_string(),
        report.i0.to_string(),
        report.discrepancy.clone(),
        fmt_decimal(report.discrepancy_decimal),
        report.implied_epsilon.clone(),
        ok.to_string(),
    ]];
    let outputs = json!({ "report": report, "verdict": verdict, "verified": ok });
    let header = vec![
        "m",
        "parts",
        "i0",
        "discrepancy",
        "discrepancy_decimal",
        "implied_epsilon",
        "verified",
    ];
    let outcome = Outcome::new(outputs, header, rows).with_code(if ok { 0 } else { EXIT_MISMATCH });
    Ok((vec![m.to_string().into_bytes(), input], outcome))
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Satisfied => "satisfied",
        Status::Violated => "violated",
        Status::NullSatisfied => "null-satisfied",
        Status::Inconclusive => "inconclusive",
    }
}

fn constraint(
    cfg: &RunConfig,
    file: &Path,
    arg: &str,
    parts_path: Option<&Path>,
    fit: bool,
    opts: &DecoratedOptions,
) -> Result<Run> {
    let (g, id) = graphon(cfg, arg)?;
    let text = read(file)?;
    let parsed = parse_constraint_file(&text).with_context(|| format!("in {}", file.display()))?;
    let mut inputs = vec![id, text.into_bytes()];
    let table = if let Some(p) = parts_path {
        let t = read(p)?;
        let table: PartTable =
            serde_json::from_str(&t).with_context(|| format!("parsing {}", p.display()))?;
        inputs.push(t.into_bytes());
        Some(PartTable::new(table.parts)?)
    } else if fit {
        Some(partition_by_degree(
            &g,
            &PartTable::svejk_expected(),
            1e-6,
            13 * 40,
            0.02,
        )?)
    } else {
        parsed.parts.clone()
    };
    let mut verdicts: Vec<(String, SatisfactionVerdict)> = Vec::new();
    for c in &parsed.constraints {
        let v = if c.is_decorated() {
            let t = table.as_ref().ok_or_else(|| {
                anyhow!("decorated constraints need parts: declare them or pass --parts")
            })?;
            evaluate_decorated(c, &g, t, opts)?
        } else {
            evaluate_ordinary(c, &g, cfg.samples, cfg.seed)?
        };
        verdicts.push((render_constraint(c), v));
    }
    let violated = verdicts.iter().any(|(_, v)| v.status == Status::Violated);
    let side = |s: &graphon_core::constraints::SideValue| match &s.exact {
        Some(e) if !cfg.decimal => e.clone(),
        _ => fmt_decimal(s.value),
    };
    let rows = verdicts
        .iter()
        .map(|(c, v)| {
            vec![
                c.clone(),
                status_name(v.status).into(),
                side(&v.lhs),
                fmt_decimal(v.lhs.stderr),
                side(&v.rhs),
                fmt_decimal(v.rhs.stderr),
                fmt_decimal(v.difference),
                fmt_decimal(v.difference_stderr),
            ]
        })
        .collect();
    let outputs = json!({
        "verdicts": verdicts.iter().map(|(c, v)| json!({ "constraint": c, "verdict": v })).collect::<Vec<_>>(),
        "parts": table,
    });
    let header = vec![
        "constraint",
        "status",
        "lhs",
        "lhs_stderr",
        "rhs",
        "rhs_stderr",
        "difference",
        "difference_stderr",
    ];
    let out =
        Outcome::new(outputs, header, rows).with_code(if violated { EXIT_MISMATCH } else { 0 });
    Ok((inputs, out))
}

fn extract_cf(cfg: &RunConfig, n: u32, pairs: u64) -> Result<Run> {
    let r = compare_extracted_cf(n, cfg.tower_cap, pairs, cfg.seed)?;
    let ok = r.max_abs_diff == 0.0;
    let rows = vec![vec![
        r.n.to_string(),
        r.m.to_string(),
        r.pairs.to_string(),
        fmt_decimal(r.max_abs_diff),
    ]];
    let out = Outcome::new(json!(r), vec!["n", "m", "pairs", "max_abs_diff"], rows);
    Ok((
        vec![n.to_string().into_bytes()],
        out.with_code(if ok { 0 } else { EXIT_MISMATCH }),
    ))
}
