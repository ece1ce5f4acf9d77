//! Reference integrator for tests and validation.
//!
//! Works on the original region with composite two-point Gauss-Legendre
//! panels: `N` panels along `x` and `N` panels across every row, doubling `N`.
//! The error of these values falls off as `N^-4`, so each pair of neighbours
//! is Richardson-extrapolated, `(16 v(2N) - v(N)) / 15`, and the iteration
//! stops once two successive extrapolants agree. It shares nothing with the
//! engine's stepsize selection or row planning, only the rule registry.

use crate::error::{Error, Result};
use crate::problem::{Domain, Integrand, Region};
use crate::rules::{self, RuleSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Last extrapolated value.
    pub value: f64,
    /// Raw, unextrapolated values by panel count.
    pub resolution_sequence: Vec<(usize, f64)>,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub initial_panels: usize,
    pub max_doublings: u32,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            initial_panels: 16,
            max_doublings: 8,
        }
    }
}

fn gauss_product(region: &Region, integrand: &Integrand, rule: &RuleSpec, n: usize) -> Result<f64> {
    let (xs, cx) = rules::composite_expansion(rule, n, region.outer())?;
    let row = |x: f64| -> Result<f64> {
        let (lo, hi) = (region.lower(x), region.upper(x));
        if !(hi > lo) {
            return Ok(0.0);
        }
        let (ys, cy) = rules::composite_expansion(rule, n, (lo, hi))?;
        let mut s = 0.0;
        for (&y, &c) in ys.iter().zip(&cy) {
            let v = integrand.eval(x, y);
            if !v.is_finite() {
                return Err(Error::NonFinite { x, y, value: v });
            }
            s += c * v;
        }
        Ok(s)
    };
    #[cfg(feature = "parallel")]
    let rows: Vec<f64> = {
        use rayon::prelude::*;
        xs.par_iter().map(|&x| row(x)).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<f64> = xs.iter().map(|&x| row(x)).collect::<Result<_>>()?;
    Ok(rows.iter().zip(&cx).map(|(r, c)| r * c).sum())
}

pub fn reference_integral(region: &Region, integrand: &Integrand, rel_target: f64) -> Result<OracleResult> {
    reference_integral_with(region, integrand, rel_target, OracleConfig::default())
}

pub fn reference_integral_with(
    region: &Region,
    integrand: &Integrand,
    rel_target: f64,
    cfg: OracleConfig,
) -> Result<OracleResult> {
    if !(rel_target >= 1e-13) {
        return Err(Error::InvalidArgument(format!(
            "rel_target must be >= 1e-13, got {rel_target}"
        )));
    }
    if cfg.initial_panels == 0 {
        return Err(Error::InvalidArgument("initial_panels must be positive".into()));
    }
    let rule = rules::get_rule("gauss_legendre_2")?;
    let gain = 2f64.powi(rule.order as i32);
    let mut n = cfg.initial_panels;
    let mut seq = vec![(n, gauss_product(region, integrand, &rule, n)?)];
    let mut extrapolated: Option<f64> = None;
    let mut last_change = f64::INFINITY;
    for _ in 0..cfg.max_doublings {
        n *= 2;
        let v = gauss_product(region, integrand, &rule, n)?;
        let prev = seq.last().expect("non-empty").1;
        seq.push((n, v));
        let r = (gain * v - prev) / (gain - 1.0);
        if let Some(before) = extrapolated {
            last_change = (r - before).abs();
            if last_change <= rel_target * r.abs().max(f64::MIN_POSITIVE) {
                return Ok(OracleResult {
                    value: r,
                    resolution_sequence: seq,
                    converged: true,
                });
            }
        }
        extrapolated = Some(r);
    }
    Err(Error::OracleNotConverged {
        doublings: cfg.max_doublings,
        last_change,
    })
}
