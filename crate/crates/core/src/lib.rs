//! Bivariate integration over `a <= x <= b, l(x) <= y <= u(x)` with composite
//! positive-weight interpolatory cubature and a priori error control.
//!
//! The problem is mapped onto the unit square and scaled by
//! `M = max(1, max |G~ m1 m2|)`, so the scaled integral has magnitude at most
//! one and absolute control on it is well posed. The result reports both the
//! absolute bound `M eps` and the relative estimate `eps / |Qc[g]|`, picks the
//! cheaper of the two modes from the size of the answer, and can rerun with a
//! tightened tolerance until a target is met.
//!
//! ```
//! use bicubature::{refine_until, ControlConfig, Integrand, Region, Target, TargetKind};
//!
//! let region = Region::new(0.0, 1.0, |_| 0.0, |x| x).unwrap();
//! let g = Integrand::new(|x, y| 10.0 * (x + y).exp());
//! let cfg = ControlConfig {
//!     eps: 1e-6,
//!     target: Some(Target { kind: TargetKind::Relative, value: 1e-8 }),
//!     ..Default::default()
//! };
//! let report = refine_until(&region, &g, &cfg).unwrap();
//! assert!(report.rel_estimate <= 1e-8);
//! let exact = 5.0 * (std::f64::consts::E - 1.0).powi(2);
//! assert!(((report.value - exact) / exact).abs() <= report.rel_estimate);
//! ```

// `!(a > b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod controller;
pub mod engine;
pub mod error;
pub mod expr;
pub mod oracle;
pub mod problem;
pub mod problem_file;
pub mod report;
pub mod rules;

pub use bounds::{Axis, BoundOverrides, BoundSet, Provenance, SamplingConfig};
pub use controller::{
    refine_until, run_once, ControlConfig, CubatureReport, Mode, Pass, PlanSummary, Prepared, Target, TargetKind,
};
pub use engine::{CubatureValue, EvalOptions, GridPlan, Row};
pub use error::{Error, Result};
pub use problem::{normalize, Domain, Integrand, NormalizedProblem, Region};
pub use problem_file::ProblemSpec;
pub use rules::{get_rule, RuleSpec};
