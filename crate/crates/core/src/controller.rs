//! The driver: normalize, bound, plan, evaluate, report, refine.
//!
//! The cubature always runs under absolute control on the scaled integrand
//! `g`, whose integral has magnitude at most one. `M * eps` then bounds the
//! absolute error of the original integral and `eps / |Qc[g]|` estimates a
//! bound on its relative error.

use serde::Serialize;

use crate::bounds::{self, BoundOverrides, BoundSet, SamplingConfig};
use crate::engine::{self, EvalOptions, GridPlan};
use crate::error::{Error, Result};
use crate::problem::{self, Integrand, NormalizedProblem, Region};
use crate::rules::{self, RuleSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    Absolute,
    Relative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Target {
    pub kind: TargetKind,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlConfig {
    pub eps: f64,
    pub mu: f64,
    pub rule_name: String,
    pub target: Option<Target>,
    pub max_refinements: usize,
    pub sampling: SamplingConfig,
    pub overrides: BoundOverrides,
    pub compensated: bool,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self {
            eps: 1e-6,
            mu: 1e-16,
            rule_name: "simpson".into(),
            target: None,
            max_refinements: 5,
            sampling: SamplingConfig::default(),
            overrides: BoundOverrides::default(),
            compensated: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Relative,
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanSummary {
    pub n1: usize,
    pub total_nodes: usize,
    pub h: f64,
    pub h_star: f64,
    pub max_k_star: f64,
}

impl PlanSummary {
    fn of(plan: &GridPlan, rule: &RuleSpec) -> Self {
        Self {
            n1: plan.n1,
            total_nodes: plan.total_nodes(rule),
            h: plan.h,
            h_star: plan.h_star,
            max_k_star: plan.max_k_star(),
        }
    }
}

/// One pass of the algorithm at a fixed working tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Pass {
    pub eps: f64,
    /// Tolerance divisor that produced this pass from the previous one.
    pub eta: Option<f64>,
    pub qc_g: f64,
    pub rel_estimate: f64,
    pub abs_bound: f64,
    pub plan: PlanSummary,
    pub nodes_evaluated: usize,
    pub roundoff_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CubatureReport {
    /// `M * Qc[g]`.
    pub value: f64,
    pub mode: Mode,
    /// `M * eps`.
    pub abs_bound: f64,
    /// `eps / |Qc[g]|`, infinite when `Qc[g] = 0`.
    pub rel_estimate: f64,
    pub qc_g: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
    pub eps: f64,
    pub mu: f64,
    pub rule: String,
    pub m1: f64,
    pub m2: f64,
    pub l1: f64,
    pub u1: f64,
    pub plan: PlanSummary,
    pub nodes_evaluated: usize,
    pub roundoff_bound: f64,
    pub bounds: BoundSet,
    pub target: Option<Target>,
    pub converged: bool,
    pub refinement_history: Vec<Pass>,
    pub warnings: Vec<String>,
}

/// A normalized problem with its bounds, ready to be run at any tolerance.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub problem: NormalizedProblem,
    pub bounds: BoundSet,
    pub rule: RuleSpec,
    pub mu: f64,
    pub compensated: bool,
}

impl Prepared {
    pub fn new(region: &Region, integrand: &Integrand, cfg: &ControlConfig) -> Result<Self> {
        let rule = rules::get_rule(&cfg.rule_name)?;
        let overrides = cfg.overrides.or(integrand.analytic_bounds);
        overrides.validate()?;
        let integrand = integrand.clone().with_analytic_bounds(overrides);
        let problem = problem::normalize(region, &integrand, &cfg.sampling)?;
        let bounds = bounds::estimate_bounds(&problem, rule.order, &cfg.sampling)?;
        Ok(Self {
            problem,
            bounds,
            rule,
            mu: cfg.mu,
            compensated: cfg.compensated,
        })
    }

    /// Smallest admissible working tolerance: `4 (b-a) D mu` on the unit extent.
    pub fn roundoff_floor(&self) -> f64 {
        engine::roundoff_bound(1.0, self.bounds.d, self.mu)
    }

    pub fn plan(&self, eps: f64) -> Result<GridPlan> {
        let h = engine::select_stepsize(eps, self.mu, &self.rule, 1.0, &self.bounds)?;
        engine::plan_grid(h, &self.problem, &self.rule)
    }

    pub fn run(&self, eps: f64) -> Result<Pass> {
        let plan = self.plan(eps)?;
        let np = &self.problem;
        let opts = EvalOptions {
            mu: self.mu,
            compensated: self.compensated,
        };
        let cv = engine::evaluate(&|w, z| np.eval_g(w, z), &plan, &self.rule, &opts)?;
        let qc_g = cv.value;
        Ok(Pass {
            eps,
            eta: None,
            qc_g,
            rel_estimate: if qc_g == 0.0 { f64::INFINITY } else { eps / qc_g.abs() },
            abs_bound: np.big_m * eps,
            plan: PlanSummary::of(&plan, &self.rule),
            nodes_evaluated: cv.nodes_evaluated,
            roundoff_bound: cv.roundoff_bound,
        })
    }

    fn report(
        &self,
        history: Vec<Pass>,
        target: Option<Target>,
        converged: bool,
        mut warnings: Vec<String>,
    ) -> CubatureReport {
        let last = *history.last().expect("at least one pass");
        let np = &self.problem;
        let value = np.big_m * last.qc_g;
        let mode = mode_for(value);
        if matches!(
            target,
            Some(Target {
                kind: TargetKind::Relative,
                ..
            })
        ) && mode == Mode::Absolute
        {
            warnings.push(format!(
                "|value| = {:.5e} <= 1: relative control was requested but absolute control is favoured; \
                 the absolute bound M*eps = {:.5e} is the meaningful estimate",
                value.abs(),
                last.abs_bound
            ));
        }
        if last.qc_g == 0.0 {
            warnings.push("Qc[g] = 0: the relative error estimate is infinite".into());
        }
        CubatureReport {
            value,
            mode,
            abs_bound: last.abs_bound,
            rel_estimate: last.rel_estimate,
            qc_g: last.qc_g,
            big_m: np.big_m,
            eps: last.eps,
            mu: self.mu,
            rule: self.rule.name.clone(),
            m1: np.m1,
            m2: np.m2,
            l1: np.l1,
            u1: np.u1,
            plan: last.plan,
            nodes_evaluated: last.nodes_evaluated,
            roundoff_bound: last.roundoff_bound,
            bounds: self.bounds,
            target,
            converged,
            refinement_history: history,
            warnings,
        }
    }
}

/// Relative control pays off only when the integral exceeds one in magnitude.
pub fn mode_for(value: f64) -> Mode {
    if value.abs() > 1.0 {
        Mode::Relative
    } else {
        Mode::Absolute
    }
}

/// Single pass at `cfg.eps`.
pub fn run_once(region: &Region, integrand: &Integrand, cfg: &ControlConfig) -> Result<CubatureReport> {
    let prep = Prepared::new(region, integrand, cfg)?;
    let pass = prep.run(cfg.eps)?;
    Ok(prep.report(vec![pass], cfg.target, true, Vec::new()))
}

/// Refinement divisor: how many times too large the estimate is, rounded up.
pub fn eta(estimate: f64, target: f64) -> f64 {
    (estimate / target).ceil()
}

// Margin below the absolute target when choosing eps directly from M.
const ABSOLUTE_MARGIN: f64 = 1e-3;

/// Runs until the target is met or the refinement budget is spent.
///
/// Relative targets divide eps by `eta = ceil(estimate / target)` and rerun.
/// Absolute targets need no rerun: `M` is known before the first pass, so eps
/// is chosen as `(1 - 1e-3) target / M` up front.
pub fn refine_until(region: &Region, integrand: &Integrand, cfg: &ControlConfig) -> Result<CubatureReport> {
    let Some(target) = cfg.target else {
        return run_once(region, integrand, cfg);
    };
    if !(target.value > 0.0 && target.value.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "target must be positive, got {}",
            target.value
        )));
    }
    let prep = Prepared::new(region, integrand, cfg)?;
    refine_prepared(&prep, cfg.eps, target, cfg.max_refinements)
}

pub fn refine_prepared(prep: &Prepared, eps: f64, target: Target, max_refinements: usize) -> Result<CubatureReport> {
    match target.kind {
        TargetKind::Absolute => {
            let direct = (1.0 - ABSOLUTE_MARGIN) * target.value / prep.problem.big_m;
            let pass = prep.run(eps.min(direct))?;
            let ok = pass.abs_bound <= target.value;
            Ok(prep.report(vec![pass], Some(target), ok, Vec::new()))
        }
        TargetKind::Relative => {
            let mut history = vec![prep.run(eps)?];
            let mut warnings = Vec::new();
            loop {
                let last = *history.last().expect("non-empty");
                if last.rel_estimate <= target.value {
                    return Ok(prep.report(history, Some(target), true, warnings));
                }
                if !last.rel_estimate.is_finite() {
                    warnings.push("cannot refine: relative estimate is infinite".into());
                    return Ok(prep.report(history, Some(target), false, warnings));
                }
                if history.len() > max_refinements {
                    warnings.push(format!("refinement budget of {max_refinements} exhausted"));
                    return Ok(prep.report(history, Some(target), false, warnings));
                }
                let factor = eta(last.rel_estimate, target.value);
                let next_eps = last.eps / factor;
                let floor = prep.roundoff_floor();
                if !(next_eps > floor) {
                    return Err(Error::ToleranceBelowRoundoff { eps: next_eps, floor });
                }
                let mut pass = prep.run(next_eps)?;
                pass.eta = Some(factor);
                history.push(pass);
            }
        }
    }
}
