//! Registry of positive-weight interpolatory quadrature rules.
//!
//! A rule is described on a single panel `[0, 1]`: relative node positions and
//! weights that sum to one. [`composite_expansion`] tiles the panel over an
//! interval and merges the endpoints shared by adjacent panels.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleSpec {
    pub name: String,
    /// Convergence order `r`: the error decays like `h^r`.
    pub order: u32,
    /// Error constant `A(r)` in `A(r) (b-a) h^r max|f^(r)|`, `h` being the panel length.
    pub err_const: f64,
    /// Relative node positions within one panel, ascending, in `[0, 1]`.
    pub panel_nodes: Vec<f64>,
    /// Per-panel weights, strictly positive, summing to 1.
    pub panel_weights: Vec<f64>,
}

pub const RULE_NAMES: [&str; 3] = ["trapezium", "simpson", "gauss_legendre_2"];

pub fn get_rule(name: &str) -> Result<RuleSpec> {
    let rule = match name {
        "trapezium" => RuleSpec {
            name: name.to_string(),
            order: 2,
            err_const: 1.0 / 12.0,
            panel_nodes: vec![0.0, 1.0],
            panel_weights: vec![0.5, 0.5],
        },
        // 16/180 rather than the classical 1/2880: the panel length is twice the
        // node spacing and the constant is kept at the conservative value.
        "simpson" => RuleSpec {
            name: name.to_string(),
            order: 4,
            err_const: 16.0 / 180.0,
            panel_nodes: vec![0.0, 0.5, 1.0],
            panel_weights: vec![1.0 / 6.0, 4.0 / 6.0, 1.0 / 6.0],
        },
        "gauss_legendre_2" => {
            let off = 3f64.sqrt() / 6.0;
            RuleSpec {
                name: name.to_string(),
                order: 4,
                err_const: 1.0 / 4320.0,
                panel_nodes: vec![0.5 - off, 0.5 + off],
                panel_weights: vec![0.5, 0.5],
            }
        }
        other => return Err(Error::UnknownRule(other.to_string())),
    };
    Ok(rule)
}

impl RuleSpec {
    /// True when the panel's first and last nodes sit on the panel boundary,
    /// so adjacent panels share a node.
    pub fn shares_endpoints(&self) -> bool {
        self.panel_nodes.first() == Some(&0.0) && self.panel_nodes.last() == Some(&1.0)
    }

    /// Number of distinct nodes produced by a composite expansion over `n` panels.
    pub fn composite_len(&self, n: usize) -> usize {
        let per = self.panel_nodes.len();
        if n == 0 {
            0
        } else if self.shares_endpoints() {
            n * (per - 1) + 1
        } else {
            n * per
        }
    }
}

/// Nodes and weights of the composite rule on `[p, q]` with `n` equal panels.
///
/// Weights are full weights (they sum to `q - p`), not reduced ones.
pub fn composite_expansion(rule: &RuleSpec, n: usize, interval: (f64, f64)) -> Result<(Vec<f64>, Vec<f64>)> {
    let (p, q) = interval;
    if n == 0 {
        return Err(Error::InvalidArgument(
            "composite expansion needs at least one subinterval".into(),
        ));
    }
    if !(p < q) {
        return Err(Error::InvalidArgument(format!(
            "composite expansion needs p < q, got [{p}, {q}]"
        )));
    }
    let len = rule.composite_len(n);
    let mut nodes = Vec::with_capacity(len);
    let mut weights = Vec::with_capacity(len);
    expand_into(rule, n, p, q, &mut nodes, &mut weights);
    Ok((nodes, weights))
}

/// Same as [`composite_expansion`] but reuses the caller's buffers and skips validation.
pub(crate) fn expand_into(rule: &RuleSpec, n: usize, p: f64, q: f64, nodes: &mut Vec<f64>, weights: &mut Vec<f64>) {
    nodes.clear();
    weights.clear();
    let width = q - p;
    let panel = width / n as f64;
    let shared = rule.shares_endpoints();
    let nf = n as f64;
    for k in 0..n {
        for (idx, (&t, &wt)) in rule.panel_nodes.iter().zip(&rule.panel_weights).enumerate() {
            let c = wt * panel;
            if shared && idx == 0 && k > 0 {
                // merge with the previous panel's right endpoint
                if let Some(last) = weights.last_mut() {
                    *last += c;
                }
                continue;
            }
            let x = if shared && t == 1.0 && k + 1 == n {
                q
            } else {
                p + width * ((k as f64 + t) / nf)
            };
            nodes.push(x);
            weights.push(c);
        }
    }
}

/// One-dimensional composite quadrature of `f` on `[p, q]`.
pub fn integrate_1d<F: Fn(f64) -> f64>(rule: &RuleSpec, n: usize, interval: (f64, f64), f: F) -> Result<f64> {
    let (nodes, weights) = composite_expansion(rule, n, interval)?;
    Ok(nodes.iter().zip(&weights).map(|(&x, &c)| c * f(x)).sum())
}
