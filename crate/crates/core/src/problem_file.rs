//! Problem and bounds files (TOML).
//!
//! ```toml
//! a = 1.0
//! b = 2.0
//! l_expr = "x^2/5"
//! u_expr = "x^3/5"
//! g_expr = "exp(4*x*y)"
//!
//! [bounds]          # optional; any subset of the four keys
//! M = 5.07104e5
//! D = 0.6923076923076923
//! deriv_sup_x = 1.67772e3
//! deriv_sup_y = 1.57351e4
//! ```
//!
//! A bounds file holds the `[bounds]` keys at top level.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bounds::BoundOverrides;
use crate::error::{Error, Result};
use crate::expr;
use crate::problem::{Integrand, Region};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub a: f64,
    pub b: f64,
    pub l_expr: String,
    pub u_expr: String,
    pub g_expr: String,
    #[serde(default, skip_serializing_if = "BoundOverrides::is_empty")]
    pub bounds: BoundOverrides,
}

impl ProblemSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::ProblemFile(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("problem spec serializes")
    }

    /// Parses the expressions into a region and an integrand carrying the file's bounds.
    pub fn build(&self) -> Result<(Region, Integrand)> {
        let l = expr::parse(&self.l_expr, &["x"])?;
        let u = expr::parse(&self.u_expr, &["x"])?;
        let g = expr::parse(&self.g_expr, &["x", "y"])?;
        let region = Region::from_arcs(
            self.a,
            self.b,
            Arc::new(move |x| l.eval(&[x])),
            Arc::new(move |x| u.eval(&[x])),
        )?;
        let integrand = Integrand::from_arc(Arc::new(move |x, y| g.eval(&[x, y]))).with_analytic_bounds(self.bounds);
        Ok((region, integrand))
    }
}

pub fn parse_bounds_file(text: &str) -> Result<BoundOverrides> {
    let b: BoundOverrides = toml::from_str(text).map_err(|e| Error::ProblemFile(e.to_string()))?;
    b.validate()?;
    Ok(b)
}
