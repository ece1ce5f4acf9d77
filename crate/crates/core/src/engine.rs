//! Stepsize selection, grid planning and evaluation of the composite cubature.
//!
//! The cubature is a composite rule along the outer axis whose every node
//! carries a row: a composite rule across `[l(x_i), u(x_i)]`. Rows are sized
//! with `k = h`, so one stepsize governs both axes.

use serde::Serialize;

use crate::bounds::BoundSet;
use crate::error::{Error, Result};
use crate::problem::Domain;
use crate::rules::{self, RuleSpec};

/// One outer node and its cross-section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Row {
    pub x: f64,
    /// Composite outer weight of `x`.
    pub weight: f64,
    pub lower: f64,
    pub upper: f64,
    pub n2: usize,
    /// `(upper - lower) / n2`, or 0 for an empty row.
    pub k_star: f64,
}

impl Row {
    pub fn breadth(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPlan {
    /// Stepsize requested by the tolerance.
    pub h: f64,
    /// Outer panel length actually used, `(q - p) / n1`.
    pub h_star: f64,
    pub n1: usize,
    pub interval: (f64, f64),
    pub rows: Vec<Row>,
}

impl GridPlan {
    pub fn extent(&self) -> f64 {
        self.interval.1 - self.interval.0
    }

    pub fn outer_nodes(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(|r| r.x)
    }

    pub fn row_counts(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.n2).collect()
    }

    pub fn max_k_star(&self) -> f64 {
        self.rows.iter().map(|r| r.k_star).fold(0.0, f64::max)
    }

    pub fn max_breadth(&self) -> f64 {
        self.rows.iter().map(Row::breadth).fold(0.0, f64::max)
    }

    /// Integrand evaluations one pass over the plan costs.
    pub fn total_nodes(&self, rule: &RuleSpec) -> usize {
        self.rows.iter().map(|r| rule.composite_len(r.n2)).sum()
    }

    /// Nodes and full weights of row `i`; `None` for empty rows.
    ///
    /// Rows are expanded on demand: a refined plan can have well over 10^8 nodes.
    pub fn row_expansion(&self, i: usize, rule: &RuleSpec) -> Option<(Vec<f64>, Vec<f64>)> {
        let row = self.rows.get(i)?;
        if row.n2 == 0 {
            return None;
        }
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        rules::expand_into(rule, row.n2, row.lower, row.upper, &mut nodes, &mut weights);
        Some((nodes, weights))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CubatureValue {
    pub value: f64,
    pub nodes_evaluated: usize,
    pub roundoff_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalOptions {
    /// Bound on the unit roundoff, used for the reported roundoff bound.
    pub mu: f64,
    /// Neumaier-compensated sums instead of plain left-to-right ones.
    pub compensated: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            mu: 1e-16,
            compensated: false,
        }
    }
}

/// `4 (b - a) D mu`.
pub fn roundoff_bound(extent: f64, d: f64, mu: f64) -> f64 {
    4.0 * extent * d * mu
}

/// `h = ((eps - 4 (b-a) D mu) / (A (b-a) D (Sx + Sy)))^(1/r)`, capped at the extent.
pub fn select_stepsize(eps: f64, mu: f64, rule: &RuleSpec, extent: f64, bounds: &BoundSet) -> Result<f64> {
    if !(extent > 0.0 && extent.is_finite()) {
        return Err(Error::InvalidArgument(format!("extent must be positive, got {extent}")));
    }
    if !(mu >= 0.0) {
        return Err(Error::InvalidArgument(format!("mu must be non-negative, got {mu}")));
    }
    let floor = roundoff_bound(extent, bounds.d, mu);
    if !(eps > floor) || !eps.is_finite() {
        return Err(Error::ToleranceBelowRoundoff { eps, floor });
    }
    let denom = rule.err_const * extent * bounds.d * (bounds.deriv_sup_x + bounds.deriv_sup_y);
    if denom == 0.0 {
        return Ok(extent);
    }
    let h = ((eps - floor) / denom).powf(1.0 / rule.order as f64);
    if h.is_finite() {
        Ok(h.min(extent))
    } else {
        Ok(extent)
    }
}

// Upper limit on panel counts; beyond this the plan cannot be evaluated anyway.
const MAX_PANELS: f64 = 1e12;

fn panel_count(len: f64, h: f64) -> Result<usize> {
    let n = (len / h).ceil();
    if n > MAX_PANELS || !n.is_finite() {
        return Err(Error::InvalidArgument(format!("stepsize {h:e} needs {n:e} panels")));
    }
    Ok(n as usize)
}

fn row_bounds<D: Domain + ?Sized>(domain: &D, x: f64) -> Result<(f64, f64)> {
    let (lo, hi) = (domain.lower(x), domain.upper(x));
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::NonFinite {
            x,
            y: f64::NAN,
            value: if lo.is_finite() { hi } else { lo },
        });
    }
    if hi < lo {
        if lo - hi > 1e-12 * lo.abs().max(hi.abs()).max(1.0) {
            return Err(Error::CrossingLimits {
                x,
                lower: lo,
                upper: hi,
            });
        }
        return Ok((lo, lo));
    }
    Ok((lo, hi))
}

fn outer_rows<D: Domain + ?Sized>(domain: &D, rule: &RuleSpec, n1: usize) -> Result<Vec<(f64, f64, f64, f64)>> {
    let (nodes, weights) = rules::composite_expansion(rule, n1, domain.outer())?;
    nodes
        .into_iter()
        .zip(weights)
        .map(|(x, c)| {
            let (lo, hi) = row_bounds(domain, x)?;
            Ok((x, c, lo, hi))
        })
        .collect()
}

fn make_row((x, weight, lower, upper): (f64, f64, f64, f64), n2: usize) -> Row {
    let k_star = if n2 == 0 { 0.0 } else { (upper - lower) / n2 as f64 };
    Row {
        x,
        weight,
        lower,
        upper,
        n2,
        k_star,
    }
}

/// Plans the grid for stepsize `h`: `N1 = ceil((q-p)/h)` outer panels and
/// `N2,i = ceil((u(x_i) - l(x_i))/h)` panels in every row.
pub fn plan_grid<D: Domain + ?Sized>(h: f64, domain: &D, rule: &RuleSpec) -> Result<GridPlan> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("stepsize must be positive, got {h}")));
    }
    let (p, q) = domain.outer();
    let n1 = panel_count(q - p, h)?.max(1);
    let rows = outer_rows(domain, rule, n1)?
        .into_iter()
        .map(|r| {
            let breadth = r.3 - r.2;
            let n2 = if breadth > 0.0 { panel_count(breadth, h)? } else { 0 };
            Ok(make_row(r, n2))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GridPlan {
        h,
        h_star: (q - p) / n1 as f64,
        n1,
        interval: (p, q),
        rows,
    })
}

/// A plan with prescribed panel counts, e.g. to replay a normalized plan on the
/// original region.
pub fn plan_with_counts<D: Domain + ?Sized>(
    domain: &D,
    rule: &RuleSpec,
    n1: usize,
    row_counts: &[usize],
) -> Result<GridPlan> {
    let (p, q) = domain.outer();
    let outer = outer_rows(domain, rule, n1)?;
    if outer.len() != row_counts.len() {
        return Err(Error::InvalidArgument(format!(
            "{} row counts given for {} outer nodes",
            row_counts.len(),
            outer.len()
        )));
    }
    let rows = outer
        .into_iter()
        .zip(row_counts)
        .map(|(r, &n2)| if r.3 > r.2 { make_row(r, n2) } else { make_row(r, 0) })
        .collect();
    let h_star = (q - p) / n1 as f64;
    Ok(GridPlan {
        h: h_star,
        h_star,
        n1,
        interval: (p, q),
        rows,
    })
}

#[derive(Default)]
struct Sum {
    total: f64,
    comp: f64,
}

impl Sum {
    #[inline]
    fn add(&mut self, v: f64, compensated: bool) {
        if compensated {
            let t = self.total + v;
            if self.total.abs() >= v.abs() {
                self.comp += (self.total - t) + v;
            } else {
                self.comp += (v - t) + self.total;
            }
            self.total = t;
        } else {
            self.total += v;
        }
    }

    fn value(&self) -> f64 {
        self.total + self.comp
    }
}

fn row_sum<G>(g: &G, row: &Row, rule: &RuleSpec, compensated: bool) -> Result<f64>
where
    G: Fn(f64, f64) -> f64 + Sync,
{
    if row.n2 == 0 {
        return Ok(0.0);
    }
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    rules::expand_into(rule, row.n2, row.lower, row.upper, &mut nodes, &mut weights);
    let mut sum = Sum::default();
    for (&y, &c) in nodes.iter().zip(&weights) {
        let v = g(row.x, y);
        if !v.is_finite() {
            return Err(Error::NonFinite { x: row.x, y, value: v });
        }
        sum.add(c * v, compensated);
    }
    Ok(sum.value())
}

/// Evaluates the planned cubature of `g`.
///
/// Rows may be computed concurrently; the cross-row sum always runs in
/// ascending row order, so the result is bitwise reproducible.
pub fn evaluate<G>(g: &G, plan: &GridPlan, rule: &RuleSpec, opts: &EvalOptions) -> Result<CubatureValue>
where
    G: Fn(f64, f64) -> f64 + Sync,
{
    #[cfg(feature = "parallel")]
    let row_values: Vec<f64> = {
        use rayon::prelude::*;
        plan.rows
            .par_iter()
            .map(|row| row_sum(g, row, rule, opts.compensated))
            .collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let row_values: Vec<f64> = plan
        .rows
        .iter()
        .map(|row| row_sum(g, row, rule, opts.compensated))
        .collect::<Result<_>>()?;

    let mut sum = Sum::default();
    for (row, v) in plan.rows.iter().zip(&row_values) {
        sum.add(row.weight * v, opts.compensated);
    }
    Ok(CubatureValue {
        value: sum.value(),
        nodes_evaluated: plan.total_nodes(rule),
        roundoff_bound: roundoff_bound(plan.extent(), plan.max_breadth(), opts.mu),
    })
}
