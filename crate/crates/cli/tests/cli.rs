use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bicub(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bicub"))
        .args(args)
        .output()
        .expect("bicub runs")
}

fn structured(args: &[&str]) -> Value {
    let mut all = args.to_vec();
    all.extend(["--out", "structured"]);
    let out = bicub(&all);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("structured output is JSON")
}

const EXAMPLE_ONE: [&str; 11] = [
    "integrate",
    "--g",
    "exp(4*x*y)",
    "--a",
    "1",
    "--b",
    "2",
    "--l",
    "x^2/5",
    "--u",
    "x^3/5",
];
const EXAMPLE_TWO: [&str; 11] = [
    "integrate",
    "--g",
    "sin(x*y)/5",
    "--a",
    "1",
    "--b",
    "4",
    "--l",
    "x",
    "--u",
    "2*x^2",
];

#[test]
fn example_one_with_bounds_file() {
    let dir = tempfile::tempdir().unwrap();
    let bounds = dir.path().join("example.bounds");
    std::fs::write(
        &bounds,
        "M = 5.07104e5\nD = 0.6923076923076923\nderiv_sup_x = 1677.7216\nderiv_sup_y = 15735.1936\n",
    )
    .unwrap();
    let mut args = EXAMPLE_ONE.to_vec();
    args.extend([
        "--rule",
        "simpson",
        "--eps",
        "1e-10",
        "--bounds-file",
        bounds.to_str().unwrap(),
    ]);
    let doc = structured(&args);
    assert_eq!(doc["display"]["value"], "1.92660e3");
    assert_eq!(doc["mode"], "relative");
    assert_eq!(doc["plan"]["n1"], 1810);
    assert_eq!(doc["bounds"]["provenance"], "injected");
    assert_eq!(doc["config"]["control"]["eps"], 1e-10);
    assert!(doc["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert_eq!(doc["nodes_evaluated"], doc["plan"]["total_nodes"]);
}

#[test]
fn example_two_is_absolute() {
    let mut args = EXAMPLE_TWO.to_vec();
    args.extend(["--eps", "1e-4"]);
    let doc = structured(&args);
    assert_eq!(doc["display"]["abs_bound"], "1.86000e-3");
    assert_eq!(doc["mode"], "absolute");
    let value = doc["value"].as_f64().unwrap();
    assert!((value + 0.00734).abs() < 1e-5, "{value}");
}

#[test]
fn text_output_leads_with_the_headline() {
    let mut args = EXAMPLE_TWO.to_vec();
    args.extend(["--eps", "1e-4"]);
    let out = bicub(&args);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("value: -7.34"), "{text}");
    assert!(text.contains("\nmode: absolute\n"));
    assert!(text.contains("config.control.rule_name: simpson"));
    assert!(text.contains("wall_time_s: "));
}

#[test]
fn relative_target_defaults_eps_to_target() {
    let doc = structured(&[
        "integrate",
        "--g",
        "3+x*y",
        "--a",
        "0",
        "--b",
        "2",
        "--l",
        "0",
        "--u",
        "x",
        "--target-rel",
        "1e-8",
    ]);
    assert_eq!(doc["config"]["control"]["eps"], 1e-8);
    assert_eq!(doc["target"]["kind"], "relative");
    assert_eq!(doc["converged"], true);
    assert!(doc["rel_estimate"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn problem_file_matches_inline_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.toml");
    std::fs::write(
        &path,
        "a = 1\nb = 4\nl_expr = \"x\"\nu_expr = \"2*x^2\"\ng_expr = \"sin(x*y)/5\"\n",
    )
    .unwrap();
    let from_file = structured(&["integrate", "--problem", path.to_str().unwrap(), "--eps", "1e-4"]);
    let mut args = EXAMPLE_TWO.to_vec();
    args.extend(["--eps", "1e-4"]);
    let inline = structured(&args);
    assert_eq!(from_file["value"], inline["value"]);
}

#[test]
fn tolerance_below_roundoff_exits_3() {
    let out = bicub(&[
        "integrate",
        "--g",
        "1",
        "--a",
        "0",
        "--b",
        "1",
        "--l",
        "0",
        "--u",
        "1",
        "--eps",
        "1e-20",
        "--mu",
        "1e-16",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("roundoff bound 4e-16"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn numerical_failures_exit_3() {
    let crossing = bicub(&["integrate", "--g", "1", "--a", "0", "--b", "1", "--l", "x", "--u", "-x"]);
    assert_eq!(crossing.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&crossing.stderr).contains("crossing limits unsupported"));
    let pole = bicub(&[
        "integrate",
        "--g",
        "1/(x-0.5)",
        "--a",
        "0",
        "--b",
        "1",
        "--l",
        "-1",
        "--u",
        "1",
    ]);
    assert_eq!(pole.status.code(), Some(3));
}

#[test]
fn usage_errors_exit_2() {
    let cases: [&[&str]; 6] = [
        &["integrate", "--g", "1", "--a", "0", "--b", "1", "--l", "0"],
        &[
            "integrate",
            "--g",
            "1",
            "--a",
            "0",
            "--b",
            "1",
            "--l",
            "0",
            "--u",
            "1",
            "--target-rel",
            "1e-3",
            "--target-abs",
            "1e-3",
        ],
        &["integrate", "--g", "1+", "--a", "0", "--b", "1", "--l", "0", "--u", "1"],
        &[
            "integrate",
            "--g",
            "1",
            "--a",
            "0",
            "--b",
            "1",
            "--l",
            "0",
            "--u",
            "1",
            "--rule",
            "boole",
        ],
        &["integrate", "--problem", "/nonexistent/p.toml"],
        &["frobnicate"],
    ];
    for args in cases {
        let out = bicub(args);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn describe_rule_lists_the_panel() {
    let doc = structured(&["describe-rule", "simpson"]);
    assert_eq!(doc["order"], 4);
    assert_eq!(doc["err_const"], 16.0 / 180.0);
    assert_eq!(doc["nodes_for_10_panels"], 21);
    let gauss = structured(&["describe-rule", "gauss_legendre_2"]);
    assert_eq!(gauss["shares_endpoints"], false);
}

#[test]
fn check_bounds_reports_scaling_without_integrating() {
    let mut args = EXAMPLE_TWO.to_vec();
    args[0] = "check-bounds";
    args.extend(["--eps", "1e-4"]);
    let doc = structured(&args);
    assert!((doc["M"].as_f64().unwrap() - 18.6).abs() < 0.0186);
    assert!((doc["bounds"]["D"].as_f64().unwrap() - 28.0 / 31.0).abs() < 1e-12);
    assert_eq!(doc["m2"], 31.0);
    assert!(doc["plan"]["n1"].as_u64().unwrap() > 0);
    assert!(doc.get("value").is_none());
}

/// Key paths with their JSON types; values themselves may change.
fn shape(prefix: &str, v: &Value, out: &mut Vec<String>) {
    match v {
        Value::Object(m) => {
            for (k, child) in m {
                shape(&format!("{prefix}/{k}"), child, out);
            }
        }
        Value::Array(items) => {
            out.push(format!("{prefix}: array"));
            if let Some(first) = items.first() {
                shape(&format!("{prefix}[]"), first, out);
            }
        }
        Value::Null => out.push(format!("{prefix}: null")),
        Value::Bool(_) => out.push(format!("{prefix}: bool")),
        Value::Number(_) => out.push(format!("{prefix}: number")),
        Value::String(_) => out.push(format!("{prefix}: string")),
    }
}

#[test]
fn structured_schema_matches_golden_file() {
    let args = [
        "integrate",
        "--g",
        "1 + x^2*y - y^3",
        "--a",
        "0",
        "--b",
        "1",
        "--l",
        "-x",
        "--u",
        "1+x",
        "--eps",
        "1e-8",
        "--target-rel",
        "1e-9",
    ];
    let first = structured(&args);
    let second = structured(&args);
    let strip = |mut v: Value| {
        v.as_object_mut().unwrap().remove("wall_time_s");
        v
    };
    assert_eq!(strip(first.clone()), strip(second), "reports differ between runs");

    let mut lines = Vec::new();
    shape("", &first, &mut lines);
    let actual = lines.join("\n") + "\n";
    let golden = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/report_schema.txt");
    if std::env::var_os("BLESS").is_some() {
        std::fs::write(&golden, &actual).unwrap();
    }
    let expected = std::fs::read_to_string(&golden).expect("golden file exists; rerun with BLESS=1 to create it");
    assert_eq!(actual, expected);
}
