use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn graphon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_graphon"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!(
            "{e}: {}{}",
            String::from_utf8_lossy(&o.stdout),
            String::from_utf8_lossy(&o.stderr)
        )
    })
}

fn csv_rows(o: &Output) -> Vec<Vec<String>> {
    String::from_utf8_lossy(&o.stdout)
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn temp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("graphon-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn eval_examples() {
    let q = graphon(&["eval", "svejk", "19/26", "21/26"]);
    assert_eq!(code(&q), 0);
    assert_eq!(json(&q)["outputs"]["value"], "1");
    assert_eq!(
        json(&graphon(&["eval", "cf:4", "0.01", "0.02"]))["outputs"]["value"],
        "1"
    );
    assert_eq!(
        json(&graphon(&["eval", "constant:1/2", "0.3", "0.9"]))["outputs"]["value"],
        "1/2"
    );
    let dec = graphon(&["eval", "constant:1/3", "0.3", "0.9", "--decimal"]);
    assert_eq!(json(&dec)["outputs"]["value"], "0.333333333333333");
    assert_eq!(code(&graphon(&["eval", "half", "1.5", "0"])), 1);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&graphon(&["frobnicate"])), 1);
    assert_eq!(code(&graphon(&["eval", "nope", "0", "0"])), 1);
    assert_eq!(code(&graphon(&["--help"])), 0);
}

#[test]
fn degree_tables() {
    let o = graphon(&["degrees", "svejk", "--points", "50"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["outputs"]["all_match"], true);
    assert_eq!(v["outputs"]["rows"].as_array().unwrap().len(), 10);
    let c = graphon(&["degrees", "constant:2/5", "--format", "csv"]);
    assert_eq!(code(&c), 0);
    assert_eq!(csv_rows(&c)[0][1], "2/5");
    assert_eq!(
        code(&graphon(&[
            "degrees", "svejk", "--tail-k", "3", "--points", "5"
        ])),
        1
    );
}

#[test]
fn sample_and_density() {
    let a = graphon(&["sample", "cf:4", "6", "--seed", "5"]);
    let b = graphon(&["sample", "cf:4", "6", "--seed", "5"]);
    assert_eq!(a.stdout, b.stdout);
    let d = json(&graphon(&["density", "cf:4", "K3"]));
    assert_eq!(d["outputs"]["exact"], true);
    let mc = json(&graphon(&[
        "density",
        "cf:4",
        "K3",
        "--mc",
        "--samples",
        "100000",
    ]));
    let exact = 17.0 / 128.0;
    let v: f64 = mc["outputs"]["value"].as_str().unwrap().parse().unwrap();
    let s: f64 = mc["outputs"]["stderr"].as_str().unwrap().parse().unwrap();
    assert_eq!(d["outputs"]["value"], "17/128");
    assert!((v - exact).abs() <= 4.0 * s);
}

#[test]
fn partition_then_deviation() {
    let out = temp("cf4.json");
    let trace = temp("cf4.csv");
    let p = graphon(&[
        "partition",
        "cf:4",
        "--epsilon",
        "0.3",
        "--out",
        out.to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(code(&p), 0);
    assert!(std::fs::read_to_string(&trace)
        .unwrap()
        .starts_with("step,parts,energy"));
    let d = json(&graphon(&["deviation", "cf:4", out.to_str().unwrap()]));
    let dev: f64 = d["outputs"]["witness"]["deviation_decimal"]
        .as_f64()
        .unwrap();
    assert!(dev <= 0.3);
    assert_eq!(d["outputs"]["witness"]["exhaustive"], true);

    let c = graphon(&[
        "partition",
        "constant:1/2",
        "--epsilon",
        "0.1",
        "--format",
        "csv",
    ]);
    assert_eq!(csv_rows(&c).len(), 1);
}

#[test]
fn energy_trace_steps_meet_the_increment() {
    let o = graphon(&["partition", "cf:9", "--epsilon", "0.05", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let energies: Vec<f64> = csv_rows(&o).iter().map(|r| r[3].parse().unwrap()).collect();
    for w in energies.windows(2) {
        assert!(w[1] - w[0] >= 0.0025 - 1e-12);
    }
}

#[test]
fn refute_exit_codes() {
    let single = graphon(&["refute", "16"]);
    assert_eq!(code(&single), 0);
    assert_eq!(json(&single)["outputs"]["verified"], true);
    let report = temp("refute.json");
    let two = graphon(&[
        "refute",
        "16",
        "--coords",
        "2",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code(&two), 0);
    let eps: f64 = json(&two)["outputs"]["report"]["discrepancy_decimal"]
        .as_f64()
        .unwrap();
    assert!(eps >= 2f64.powi(-15));
    assert!(std::fs::read_to_string(&report)
        .unwrap()
        .contains("\"discrepancy\""));
    assert_eq!(code(&graphon(&["refute", "16", "--coords", "4"])), 3);
}

#[test]
fn constraint_files() {
    let file = data("constant-half.constraint");
    let o = graphon(&[
        "constraint",
        file.to_str().unwrap(),
        "constant:1/2",
        "--format",
        "csv",
    ]);
    assert_eq!(code(&o), 2);
    let status: Vec<String> = csv_rows(&o).iter().map(|r| r[1].clone()).collect();
    assert_eq!(status, ["satisfied", "violated", "satisfied"]);

    let file = data("two-halves.constraint");
    let g = format!("@{}", data("two-halves.json").display());
    let o = graphon(&[
        "constraint",
        file.to_str().unwrap(),
        &g,
        "--roots",
        "200",
        "--inner",
        "200",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let v = json(&o);
    let first = &v["outputs"]["verdicts"][0]["verdict"];
    assert_eq!(first["status"], "satisfied");
    assert_eq!(first["lhs"]["value"].as_f64().unwrap(), 1.0 / 16.0);
}

#[test]
fn constraint_parse_errors_name_the_line() {
    let bad = temp("bad.constraint");
    std::fs::write(&bad, "# ok\nK2 = 1/2\nK2 +\n").unwrap();
    let o = graphon(&["constraint", bad.to_str().unwrap(), "half"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn extracted_copies() {
    for n in ["0", "1", "2"] {
        let o = graphon(&["extract-cf", n]);
        assert_eq!(code(&o), 0);
        assert_eq!(json(&o)["outputs"]["max_abs_diff"], 0.0);
    }
    assert_eq!(code(&graphon(&["extract-cf", "2", "--tower-cap", "2"])), 3);
}

#[test]
fn records_are_reproducible() {
    let args = [
        "density",
        "cf:10",
        "C4",
        "--samples",
        "20000",
        "--seed",
        "11",
    ];
    let a = graphon(&args);
    let b = graphon(&args);
    assert_eq!(a.stdout, b.stdout);
    let c = graphon(&[
        "density",
        "cf:10",
        "C4",
        "--samples",
        "20000",
        "--seed",
        "12",
    ]);
    assert_ne!(json(&a)["inputs_digest"], Value::Null);
    assert_ne!(a.stdout, c.stdout);
}
