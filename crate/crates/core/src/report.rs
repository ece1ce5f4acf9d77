//! Report documents: a structured (JSON) form and a plain-text form.
//!
//! Numbers appear at full precision; the `display` block repeats the headline
//! quantities to six significant digits. Non-finite numbers are written as
//! the strings `"inf"`, `"-inf"` or `"nan"`.

use serde_json::{json, Map, Value};

use crate::controller::CubatureReport;

pub const SCHEMA: &str = "bicubature.report/1";

/// Six significant digits in exponent form, e.g. `1.92660e3`.
pub fn display6(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.5e}")
    } else {
        non_finite_label(v).to_string()
    }
}

fn non_finite_label(v: f64) -> &'static str {
    if v.is_nan() {
        "nan"
    } else if v > 0.0 {
        "inf"
    } else {
        "-inf"
    }
}

fn number(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(non_finite_label(v))
    }
}

const DISPLAYED: [&str; 7] = [
    "value",
    "abs_bound",
    "rel_estimate",
    "qc_g",
    "M",
    "eps",
    "roundoff_bound",
];

/// Structured document with every report field plus `extra` top-level entries.
pub fn to_structured(report: &CubatureReport, extra: Vec<(String, Value)>) -> Value {
    let mut doc = match serde_json::to_value(report).expect("report serializes") {
        Value::Object(m) => m,
        _ => unreachable!("report is a struct"),
    };
    // serde_json writes non-finite floats as null; keep them distinguishable
    doc.insert("rel_estimate".into(), number(report.rel_estimate));
    if let Some(Value::Array(passes)) = doc.get_mut("refinement_history") {
        for (p, pass) in passes.iter_mut().zip(&report.refinement_history) {
            p["rel_estimate"] = number(pass.rel_estimate);
        }
    }
    let display: Map<String, Value> = DISPLAYED
        .iter()
        .map(|&k| {
            let v = match k {
                "value" => report.value,
                "abs_bound" => report.abs_bound,
                "rel_estimate" => report.rel_estimate,
                "qc_g" => report.qc_g,
                "M" => report.big_m,
                "eps" => report.eps,
                _ => report.roundoff_bound,
            };
            (k.to_string(), json!(display6(v)))
        })
        .collect();
    let mut out = Map::new();
    out.insert("schema".into(), json!(SCHEMA));
    out.append(&mut doc);
    out.insert("display".into(), Value::Object(display));
    for (k, v) in extra {
        out.insert(k, v);
    }
    Value::Object(out)
}

/// `key: value` lines, nested objects flattened with dotted keys.
pub fn to_text(report: &CubatureReport, extra: Vec<(String, Value)>) -> String {
    let doc = to_structured(report, extra);
    let mut out = String::new();
    flatten("", &doc, &mut out);
    out
}

fn flatten(prefix: &str, v: &Value, out: &mut String) {
    match v {
        Value::Object(m) => {
            for (k, child) in m {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, child, out);
            }
        }
        Value::Array(items) if items.iter().any(|i| i.is_object()) => {
            for (i, child) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), child, out);
            }
        }
        Value::Number(n) => {
            let f = n.as_f64().unwrap_or(f64::NAN);
            if n.is_f64() {
                out.push_str(&format!("{prefix}: {f:?} ({})\n", display6(f)));
            } else {
                out.push_str(&format!("{prefix}: {n}\n"));
            }
        }
        Value::String(s) => out.push_str(&format!("{prefix}: {s}\n")),
        other => out.push_str(&format!("{prefix}: {other}\n")),
    }
}
