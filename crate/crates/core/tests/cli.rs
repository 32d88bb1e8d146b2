//! The `jacobi-ode` binary: exit codes, schema conformance and text/JSON parity.

use std::process::{Command, Output};

use serde_json::Value;

const EX1: [&str; 8] = [
    "--phi",
    "1/u",
    "--jx",
    "x",
    "--ju",
    "x*(u^2-x+1)/u",
    "--region",
    "x=0:1,u=0.5:2",
];

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jacobi-ode"))
        .args(args)
        .env_remove("JACOBI_ODE_SEED")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut all = args.to_vec();
    all.push("--json");
    let o = run(&all);
    let v = serde_json::from_str(&stdout(&o)).unwrap_or_else(|e| panic!("{e}: {}", stdout(&o)));
    (code(&o), v)
}

fn solve(extra: &[&str]) -> Vec<String> {
    let mut v = vec!["solve".to_string()];
    v.extend(extra.iter().map(|s| s.to_string()));
    v
}

fn strs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

fn validator() -> jsonschema::Validator {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/schema/report.schema.json")).unwrap();
    jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).unwrap()
}

fn assert_valid(v: &Value) {
    let errors: Vec<String> = validator().iter_errors(v).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}\n{v:#}");
}

#[test]
fn reciprocal_equation_with_field() {
    let args = solve(&EX1);
    let (status, v) = json(&strs(&args));
    assert_eq!(status, 0);
    assert_valid(&v);
    assert_eq!(v["result"]["branch"], "SDelta");
    assert_eq!(v["result"]["mu"], "u");
    assert_eq!(v["result"]["kind"], "symbolic");
    assert_eq!(v["jacobi"]["source"], "UserSupplied");
    assert_eq!(v["curvature"]["class"], "general");
    assert_eq!(v["verification"]["overall"], true);
    for section in ["problem", "curvature", "jacobi", "result", "verification", "meta"] {
        assert!(v.get(section).is_some(), "missing {section}");
    }
}

#[test]
fn curvature_of_linear_right_hand_side() {
    let o = run(&["curvature", "--phi", "u"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("  expr: -1\n"), "{}", stdout(&o));
    let (_, v) = json(&["curvature", "--phi", "u"]);
    assert_eq!(v["curvature"]["k"], -1.0);
    assert_valid(&v);
}

#[test]
fn general_curvature_needs_a_field() {
    let o = run(&["solve", "--phi", "1/u", "--region", "x=0:1,u=0.5:2"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error[requires_jacobi_field]"));
}

#[test]
fn usage_and_parse_errors() {
    assert_eq!(code(&run(&["solve"])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
    let o = run(&["solve", "--phi", "u^", "--region", "x=0:1,u=0:1"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error[parse]"));
    let o = run(&["curvature", "--phi", "u", "--region", "x=0:1"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error[region]"));
}

#[test]
fn other_failures_exit_with_four() {
    let o = run(&["solve", "--phi", "1/u", "--jx", "x^2", "--region", "x=0:1,u=0.5:2"]);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error[not_a_jacobi_field]"));
}

#[test]
fn verification_failure_exits_with_one() {
    let base = ["verify", "--phi", "1/u", "--region", "x=0:1,u=0.5:2"];
    let mut bad = base.to_vec();
    bad.push("--integral=-x + u^2");
    let (status, v) = json(&bad);
    assert_eq!(status, 1);
    assert_valid(&v);
    let note = v["verification"]["checks"][0]["note"].as_str().unwrap();
    assert!(note.contains("A(I) = 1"), "{note}");
    let mut good = base.to_vec();
    good.extend(["--integral", "u^2/2 - x", "--mu", "u", "--jx", "x", "--ju", "x*(u^2-x+1)/u"]);
    let (status, v) = json(&good);
    assert_eq!(status, 0);
    assert_eq!(v["verification"]["checks"].as_array().unwrap().len(), 4);
}

#[test]
fn bracket_of_a_non_symmetry() {
    let mut args = vec!["bracket"];
    args.extend(EX1);
    let (status, v) = json(&args);
    assert_eq!(status, 0);
    assert_valid(&v);
    assert_eq!(v["bracket"]["dx"], "-1");
    assert_eq!(v["bracket"]["is_symmetry"], false);
    let (_, v) = json(&["bracket", "--phi", "u", "--ju", "u", "--region", "x=0:1,u=0.5:1"]);
    assert_eq!(v["bracket"]["is_symmetry"], true);
}

#[test]
fn classify_reports_evidence() {
    let (status, v) = json(&["classify", "--phi", "u/(1 + x^2)", "--region", "x=0:1,u=0:1"]);
    assert_eq!(status, 0);
    assert_valid(&v);
    assert_eq!(v["curvature"]["class"], "x_only");
    assert!(v["evidence"]["du"].is_object());
}

#[test]
fn seed_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_jacobi-ode"))
        .args(["curvature", "--phi", "u", "--json"])
        .env("JACOBI_ODE_SEED", "42")
        .output()
        .unwrap();
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["meta"]["seed"], 42);
    let (_, v) = json(&["curvature", "--phi", "u", "--seed", "9"]);
    assert_eq!(v["meta"]["seed"], 9);
}

#[test]
fn dumps_grid_and_delta() {
    let dir = std::env::temp_dir().join(format!("jacobi-ode-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let (grid, delta) = (dir.join("grid.csv"), dir.join("delta.csv"));
    let o = run(&[
        "solve",
        "--phi",
        "u/(1 + x^2)",
        "--region",
        "x=0:1,u=0.5:1.5",
        "--dump-grid",
        grid.to_str().unwrap(),
        "--dump-delta",
        delta.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let grid = std::fs::read_to_string(&grid).unwrap();
    assert_eq!(grid.lines().next(), Some("x,u,I"));
    assert_eq!(grid.lines().count(), 201 * 201 + 1);
    let delta = std::fs::read_to_string(&delta).unwrap();
    assert_eq!(delta.lines().next(), Some("x,delta,delta_prime"));
    assert_eq!(delta.lines().count(), 402);
    // symbolic first integrals have no grid
    let o = run(&["solve", "--phi", "u", "--dump-grid", dir.join("none.csv").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    std::fs::remove_dir_all(&dir).ok();
}

/// Numbers among scalar leaves, as printed.
fn json_numbers(v: &Value, out: &mut Vec<String>) {
    match v {
        Value::Number(n) => out.push(n.to_string()),
        Value::String(s) => {
            if let Ok(Value::Number(n)) = serde_json::from_str::<Value>(s) {
                out.push(n.to_string());
            }
        }
        Value::Array(items) => items.iter().for_each(|i| json_numbers(i, out)),
        Value::Object(m) => m.values().for_each(|i| json_numbers(i, out)),
        _ => {}
    }
}

/// Numbers in `key: value` lines of the text report.
fn text_numbers(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for line in text.lines() {
        let Some((_, value)) = line.split_once(": ") else { continue };
        if let Ok(v) = serde_json::from_str::<Value>(value) {
            json_numbers(&v, &mut out);
        }
    }
    out
}

#[test]
fn text_and_json_report_identical_numbers() {
    let cases: Vec<Vec<String>> = vec![
        solve(&EX1),
        solve(&["--phi", "e^x + sqrt(2*u*e^x - e^(2*x) - u^2 + 1)", "--region", "x=0:0.8,u=1.3:1.9"]),
        solve(&["--phi", "u/(1 + x^2)", "--region", "x=0:1,u=0.5:1.5"]),
        vec!["curvature".into(), "--phi".into(), "u".into()],
    ];
    for args in cases {
        let args = strs(&args);
        let text = stdout(&run(&args));
        let (_, v) = json(&args);
        assert_valid(&v);
        let mut from_json = Vec::new();
        json_numbers(&v, &mut from_json);
        let mut from_text = text_numbers(&text);
        from_json.sort();
        from_text.sort();
        assert!(!from_json.is_empty());
        assert_eq!(from_json, from_text, "{args:?}\n{text}");
    }
}
