//! Browser bindings for the bicubature library.
//!
//! Three operations, each taking and returning JSON strings so the page needs
//! no generated type glue:
//!
//! * `integrate(request)`: a full report for a problem given as expressions.
//! * `preview(request)`: the region outline and the row layout of the plan,
//!   in original coordinates, for drawing.
//! * `describe_rule(name)`: a rule's order, error constant, nodes and weights.
//!
//! The logic lives in plain functions returning `Result<String, String>`; the
//! `#[wasm_bindgen]` exports only convert the error side to a JS value.

use bicubature::controller;
use bicubature::problem_file::ProblemSpec;
use bicubature::report;
use bicubature::{get_rule, ControlConfig, Domain, Prepared, Target, TargetKind};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

/// Largest number of rows sent back for drawing.
const MAX_DRAWN_ROWS: usize = 240;
/// Nodes are listed only when the whole plan has at most this many.
const MAX_DRAWN_NODES: usize = 6000;
const OUTLINE_POINTS: usize = 200;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Request {
    pub g: String,
    pub a: f64,
    pub b: f64,
    pub l: String,
    pub u: String,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_rule")]
    pub rule: String,
    #[serde(default)]
    pub target_rel: Option<f64>,
    #[serde(default)]
    pub target_abs: Option<f64>,
}

fn default_eps() -> f64 {
    1e-6
}

fn default_rule() -> String {
    "simpson".into()
}

impl Request {
    fn parse(json: &str) -> Result<Self, String> {
        serde_json::from_str(json).map_err(|e| format!("bad request: {e}"))
    }

    fn config(&self) -> Result<ControlConfig, String> {
        let target = match (self.target_rel, self.target_abs) {
            (Some(_), Some(_)) => return Err("give at most one of target_rel and target_abs".into()),
            (Some(v), None) => Some(Target {
                kind: TargetKind::Relative,
                value: v,
            }),
            (None, Some(v)) => Some(Target {
                kind: TargetKind::Absolute,
                value: v,
            }),
            (None, None) => None,
        };
        Ok(ControlConfig {
            eps: self.eps,
            rule_name: self.rule.clone(),
            target,
            ..Default::default()
        })
    }

    fn spec(&self) -> ProblemSpec {
        ProblemSpec {
            a: self.a,
            b: self.b,
            l_expr: self.l.clone(),
            u_expr: self.u.clone(),
            g_expr: self.g.clone(),
            bounds: Default::default(),
        }
    }
}

pub fn integrate_json(request: &str) -> Result<String, String> {
    let req = Request::parse(request)?;
    let cfg = req.config()?;
    let (region, integrand) = req.spec().build().map_err(|e| e.to_string())?;
    let rep = controller::refine_until(&region, &integrand, &cfg).map_err(|e| e.to_string())?;
    Ok(report::to_structured(&rep, Vec::new()).to_string())
}

#[derive(Debug, Serialize)]
struct Outline {
    x: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct DrawnRow {
    x: f64,
    lower: f64,
    upper: f64,
    n2: usize,
}

#[derive(Debug, Serialize)]
struct Preview {
    outline: Outline,
    n1: usize,
    h: f64,
    total_nodes: usize,
    big_m: f64,
    abs_bound: f64,
    /// Every row, or an even subsample of them when there are many.
    rows: Vec<DrawnRow>,
    rows_total: usize,
    /// `(x, y)` pairs, present only for small plans.
    nodes: Option<Vec<[f64; 2]>>,
}

pub fn preview_json(request: &str) -> Result<String, String> {
    let req = Request::parse(request)?;
    let cfg = req.config()?;
    let (region, integrand) = req.spec().build().map_err(|e| e.to_string())?;
    let prep = Prepared::new(&region, &integrand, &cfg).map_err(|e| e.to_string())?;
    let plan = prep.plan(cfg.eps).map_err(|e| e.to_string())?;
    let np = &prep.problem;

    let xs: Vec<f64> = (0..OUTLINE_POINTS)
        .map(|i| bicubature::bounds::grid_coord(req.a, req.b, i, OUTLINE_POINTS))
        .collect();
    let outline = Outline {
        lower: xs.iter().map(|&x| region.lower(x)).collect(),
        upper: xs.iter().map(|&x| region.upper(x)).collect(),
        x: xs,
    };
    let stride = plan.rows.len().div_ceil(MAX_DRAWN_ROWS).max(1);
    let rows = plan
        .rows
        .iter()
        .step_by(stride)
        .map(|r| {
            let (x, lower) = np.to_original(r.x, r.lower);
            let (_, upper) = np.to_original(r.x, r.upper);
            DrawnRow {
                x,
                lower,
                upper,
                n2: r.n2,
            }
        })
        .collect();
    let total_nodes = plan.total_nodes(&prep.rule);
    let nodes = (total_nodes <= MAX_DRAWN_NODES).then(|| {
        let mut pts = Vec::with_capacity(total_nodes);
        for i in 0..plan.rows.len() {
            if let Some((zs, _)) = plan.row_expansion(i, &prep.rule) {
                pts.extend(zs.iter().map(|&z| {
                    let (x, y) = np.to_original(plan.rows[i].x, z);
                    [x, y]
                }));
            }
        }
        pts
    });
    let preview = Preview {
        outline,
        n1: plan.n1,
        h: plan.h,
        total_nodes,
        big_m: np.big_m,
        abs_bound: np.big_m * cfg.eps,
        rows,
        rows_total: plan.rows.len(),
        nodes,
    };
    serde_json::to_string(&preview).map_err(|e| e.to_string())
}

pub fn describe_rule_json(name: &str) -> Result<String, String> {
    let rule = get_rule(name).map_err(|e| e.to_string())?;
    serde_json::to_string(&rule).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn integrate(request: &str) -> Result<String, JsValue> {
    integrate_json(request).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn preview(request: &str) -> Result<String, JsValue> {
    preview_json(request).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn describe_rule(name: &str) -> Result<String, JsValue> {
    describe_rule_json(name).map_err(|e| JsValue::from_str(&e))
}
