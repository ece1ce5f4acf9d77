//! Grid estimates of the suprema the error formulas need.
//!
//! Everything here samples a region in parametric coordinates `(s, t)`, with
//! `w = p + (q - p) s` along the outer axis and `z = l(w) + (u(w) - l(w)) t`
//! across it, so every sample lies inside the region. After the base grid the
//! best few samples are re-gridded at ten times the density, `refine_rounds`
//! times over.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{Domain, NormalizedProblem};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplingConfig {
    pub grid_points_per_axis: usize,
    pub refine_rounds: usize,
    /// How many of the best samples get a refined neighborhood.
    pub refine_candidates: usize,
    pub safety_factor: f64,
    /// Finite-difference step on the unit axis; `None` picks `eps^(1/(r+2))`.
    pub fd_step: Option<f64>,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            grid_points_per_axis: 201,
            refine_rounds: 2,
            refine_candidates: 4,
            safety_factor: 1.1,
            fd_step: None,
        }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_points_per_axis < 2 {
            return Err(Error::InvalidArgument("grid_points_per_axis must be at least 2".into()));
        }
        if !(self.safety_factor >= 1.0 && self.safety_factor.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "safety_factor must be a finite value >= 1, got {}",
                self.safety_factor
            )));
        }
        if let Some(h) = self.fd_step {
            if !(h > 0.0 && h < 0.1) {
                return Err(Error::InvalidArgument(format!("fd_step must lie in (0, 0.1), got {h}")));
            }
        }
        Ok(())
    }
}

/// User-supplied values that replace grid estimates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundOverrides {
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub big_m: Option<f64>,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deriv_sup_x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deriv_sup_y: Option<f64>,
}

impl BoundOverrides {
    /// Fields set in `self` win over those in `other`.
    pub fn or(self, other: BoundOverrides) -> BoundOverrides {
        BoundOverrides {
            big_m: self.big_m.or(other.big_m),
            d: self.d.or(other.d),
            deriv_sup_x: self.deriv_sup_x.or(other.deriv_sup_x),
            deriv_sup_y: self.deriv_sup_y.or(other.deriv_sup_y),
        }
    }

    pub fn is_empty(&self) -> bool {
        *self == BoundOverrides::default()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("D", self.d),
            ("deriv_sup_x", self.deriv_sup_x),
            ("deriv_sup_y", self.deriv_sup_y),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "injected {name} must be finite and >= 0, got {v}"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Injected,
    GridEstimated,
    /// Some fields injected, the rest estimated.
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundSet {
    #[serde(rename = "D")]
    pub d: f64,
    pub deriv_sup_x: f64,
    pub deriv_sup_y: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    W,
    Z,
}

impl Axis {
    fn label(self) -> char {
        match self {
            Axis::W => 'w',
            Axis::Z => 'z',
        }
    }
}

/// The `i`-th of `n` equally spaced points on `[p, q]`, hitting both ends exactly.
pub fn grid_coord(p: f64, q: f64, i: usize, n: usize) -> f64 {
    if i + 1 == n {
        q
    } else {
        p + (q - p) * (i as f64 / (n - 1) as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridMax {
    pub value: f64,
    pub at: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrema {
    pub min: f64,
    pub argmin: f64,
    pub max: f64,
    pub argmax: f64,
}

/// Parametric sample: `(s, t, value)`.
type Sample = (f64, f64, f64);

fn point_at<D: Domain + ?Sized>(domain: &D, s: f64, t: f64) -> (f64, f64) {
    let (p, q) = domain.outer();
    let w = if s >= 1.0 { q } else { p + (q - p) * s };
    let (lo, hi) = (domain.lower(w), domain.upper(w));
    let z = if t >= 1.0 { hi } else { lo + (hi - lo) * t };
    (w, z)
}

/// Maximizes `score` over the region. `score` returns `Ok(None)` where no
/// estimate is available at a point.
fn maximize_on_region<D, S>(domain: &D, cfg: &SamplingConfig, score: S) -> Result<Option<GridMax>>
where
    D: Domain + ?Sized,
    S: Fn(f64, f64) -> Result<Option<f64>>,
{
    let n = cfg.grid_points_per_axis;
    let mut samples: Vec<Sample> = Vec::with_capacity(n * n);
    for i in 0..n {
        let s = grid_coord(0.0, 1.0, i, n);
        for j in 0..n {
            let t = grid_coord(0.0, 1.0, j, n);
            let (w, z) = point_at(domain, s, t);
            if let Some(v) = score(w, z)? {
                samples.push((s, t, v));
            }
        }
    }
    let mut best = top_samples(&samples, cfg.refine_candidates.max(1));
    let mut spacing = 1.0 / (n - 1) as f64;
    for _ in 0..cfg.refine_rounds {
        let mut round = Vec::new();
        for &(s0, t0, _) in &best {
            for i in 0..=20 {
                let s = (s0 + spacing * (i as f64 / 10.0 - 1.0)).clamp(0.0, 1.0);
                for j in 0..=20 {
                    let t = (t0 + spacing * (j as f64 / 10.0 - 1.0)).clamp(0.0, 1.0);
                    let (w, z) = point_at(domain, s, t);
                    if let Some(v) = score(w, z)? {
                        round.push((s, t, v));
                    }
                }
            }
        }
        round.extend_from_slice(&best);
        best = top_samples(&round, cfg.refine_candidates.max(1));
        spacing /= 10.0;
    }
    Ok(best.first().map(|&(s, t, v)| GridMax {
        value: v,
        at: point_at(domain, s, t),
    }))
}

/// The `k` largest samples, skipping near-duplicates of the same grid cell.
fn top_samples(samples: &[Sample], k: usize) -> Vec<Sample> {
    let mut sorted: Vec<Sample> = samples.to_vec();
    sorted.sort_by(|a, b| b.2.total_cmp(&a.2));
    let mut out: Vec<Sample> = Vec::with_capacity(k);
    for cand in sorted {
        if out.len() == k {
            break;
        }
        if out.iter().all(|o| o.0 != cand.0 || o.1 != cand.1) {
            out.push(cand);
        }
    }
    out
}

/// Grid-refined maximum of `|f|` over the region, without any safety factor.
pub fn grid_max_abs<D, F>(f: F, domain: &D, cfg: &SamplingConfig) -> Result<GridMax>
where
    D: Domain + ?Sized,
    F: Fn(f64, f64) -> f64,
{
    cfg.validate()?;
    let found = maximize_on_region(domain, cfg, |w, z| {
        let v = f(w, z);
        if v.is_finite() {
            Ok(Some(v.abs()))
        } else {
            Err(Error::NonFinite { x: w, y: z, value: v })
        }
    })?;
    Ok(found.expect("every sample yields a value"))
}

/// `safety_factor` times the grid-refined maximum of `|f|` over the region.
pub fn sup_abs_on_region<D, F>(f: F, domain: &D, cfg: &SamplingConfig) -> Result<f64>
where
    D: Domain + ?Sized,
    F: Fn(f64, f64) -> f64,
{
    Ok(cfg.safety_factor * grid_max_abs(f, domain, cfg)?.value)
}

/// Grid-refined minimum and maximum of a univariate function.
pub fn extrema_1d<F: Fn(f64) -> f64>(f: F, interval: (f64, f64), cfg: &SamplingConfig) -> Result<Extrema> {
    cfg.validate()?;
    let (p, q) = interval;
    let n = cfg.grid_points_per_axis;
    let eval = |x: f64| {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite {
                x,
                y: f64::NAN,
                value: v,
            })
        }
    };
    let mut ext = Extrema {
        min: f64::INFINITY,
        argmin: p,
        max: f64::NEG_INFINITY,
        argmax: p,
    };
    let take = |x: f64, v: f64, ext: &mut Extrema| {
        if v < ext.min {
            ext.min = v;
            ext.argmin = x;
        }
        if v > ext.max {
            ext.max = v;
            ext.argmax = x;
        }
    };
    for i in 0..n {
        let x = grid_coord(p, q, i, n);
        take(x, eval(x)?, &mut ext);
    }
    let mut spacing = (q - p) / (n - 1) as f64;
    for _ in 0..cfg.refine_rounds {
        let centers = [ext.argmin, ext.argmax];
        for c in centers {
            for i in 0..=20 {
                let x = (c + spacing * (i as f64 / 10.0 - 1.0)).clamp(p, q);
                take(x, eval(x)?, &mut ext);
            }
        }
        spacing /= 10.0;
    }
    Ok(ext)
}

/// Grid-refined `max (u - l)` over the outer interval. No safety factor is applied.
pub fn breadth_d<D: Domain + ?Sized>(domain: &D, cfg: &SamplingConfig) -> Result<f64> {
    let (p, q) = domain.outer();
    let ext = extrema_1d(
        |t| {
            let (lo, hi) = (domain.lower(t), domain.upper(t));
            hi - lo
        },
        (p, q),
        cfg,
    )?;
    if ext.min < -1e-12 * ext.max.abs().max(1.0) {
        let t = ext.argmin;
        return Err(Error::CrossingLimits {
            x: t,
            lower: domain.lower(t),
            upper: domain.upper(t),
        });
    }
    Ok(ext.max.max(0.0))
}

/// Finite-difference weights for the `order`-th derivative at 0 using the
/// given integer offsets (Fornberg's recurrence).
pub fn fd_weights(order: usize, offsets: &[f64]) -> Vec<f64> {
    let n = offsets.len();
    assert!(n > order, "need more points than the derivative order");
    // c[j][k]: weight of node j for derivative k
    let mut c = vec![vec![0.0; order + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = offsets[0];
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = offsets[i];
        for j in 0..i {
            let c3 = offsets[i] - offsets[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// Central, forward and backward stencils, each second-order accurate.
fn stencils(order: u32) -> [(Vec<f64>, Vec<f64>); 3] {
    let r = order as i64;
    let half = (r + 1) / 2;
    let central: Vec<f64> = (-half..=half).map(|o| o as f64).collect();
    let forward: Vec<f64> = (0..=r + 1).map(|o| o as f64).collect();
    let backward: Vec<f64> = (0..=r + 1).map(|o| -o as f64).collect();
    [central, forward, backward].map(|offs| {
        let w = fd_weights(order as usize, &offs);
        (offs, w)
    })
}

const MEMBERSHIP_SLACK: f64 = 1e-12;

fn in_region(np: &NormalizedProblem, w: f64, z: f64) -> bool {
    (-MEMBERSHIP_SLACK..=1.0 + MEMBERSHIP_SLACK).contains(&w)
        && z >= np.l_tilde(w) - MEMBERSHIP_SLACK
        && z <= np.u_tilde(w) + MEMBERSHIP_SLACK
}

fn in_unit_square(w: f64, z: f64) -> bool {
    let range = -MEMBERSHIP_SLACK..=1.0 + MEMBERSHIP_SLACK;
    range.contains(&w) && range.contains(&z)
}

/// Richardson-extrapolated order-`r` difference of `g` along `axis` at `(w, z)`.
///
/// Stencils are tried inside the region first; where none fits (corners,
/// slivers) a stencil inside the unit square is used, on which `g` is total.
fn fd_estimate(
    np: &NormalizedProblem,
    axis: Axis,
    order: u32,
    step: f64,
    stencils: &[(Vec<f64>, Vec<f64>); 3],
    w: f64,
    z: f64,
) -> Option<f64> {
    let at = |o: f64, h: f64| match axis {
        Axis::W => (w + o * h, z),
        Axis::Z => (w, z + o * h),
    };
    let fits = |offs: &[f64], inside: &dyn Fn(f64, f64) -> bool| {
        offs.iter().all(|&o| {
            let (a, b) = at(o, step);
            let (c, d) = at(o, step / 2.0);
            inside(a, b) && inside(c, d)
        })
    };
    let region_check = |a: f64, b: f64| in_region(np, a, b);
    let square_check = |a: f64, b: f64| in_unit_square(a, b);
    let chosen = stencils
        .iter()
        .find(|(offs, _)| fits(offs, &region_check))
        .or_else(|| stencils.iter().find(|(offs, _)| fits(offs, &square_check)))?;
    let apply = |h: f64| -> Option<f64> {
        let mut acc = 0.0;
        for (&o, &c) in chosen.0.iter().zip(&chosen.1) {
            let (a, b) = at(o, h);
            let v = np.eval_g(a, b);
            if !v.is_finite() {
                return None;
            }
            acc += c * v;
        }
        Some(acc / h.powi(order as i32))
    };
    let coarse = apply(step)?;
    let fine = apply(step / 2.0)?;
    Some((4.0 * fine - coarse) / 3.0)
}

/// Raw grid-refined `max |d^r g / d axis^r|` over the normalized region.
pub fn derivative_grid_max(np: &NormalizedProblem, axis: Axis, order: u32, cfg: &SamplingConfig) -> Result<f64> {
    cfg.validate()?;
    if order == 0 {
        return Err(Error::InvalidArgument("derivative order must be positive".into()));
    }
    let step = cfg
        .fd_step
        .unwrap_or_else(|| f64::EPSILON.powf(1.0 / (order as f64 + 2.0)));
    let st = stencils(order);
    let found = maximize_on_region(np, cfg, |w, z| {
        Ok(fd_estimate(np, axis, order, step, &st, w, z).map(f64::abs))
    })?;
    found.map(|m| m.value).ok_or(Error::StencilDoesNotFit {
        axis: axis.label(),
        order,
    })
}

/// `max |d^r g / d axis^r|`: the injected value when one is present, else the
/// safety-scaled grid estimate.
pub fn derivative_sup(np: &NormalizedProblem, axis: Axis, order: u32, cfg: &SamplingConfig) -> Result<f64> {
    let injected = match axis {
        Axis::W => np.overrides().deriv_sup_x,
        Axis::Z => np.overrides().deriv_sup_y,
    };
    if let Some(v) = injected {
        return Ok(v);
    }
    Ok(cfg.safety_factor * derivative_grid_max(np, axis, order, cfg)?)
}

/// Assembles the bound set for a normalized problem and a rule of order `order`.
pub fn estimate_bounds(np: &NormalizedProblem, order: u32, cfg: &SamplingConfig) -> Result<BoundSet> {
    let ov = np.overrides();
    ov.validate()?;
    let d = match ov.d {
        Some(d) => d,
        None => breadth_d(np, cfg)?,
    };
    let deriv_sup_x = derivative_sup(np, Axis::W, order, cfg)?;
    let deriv_sup_y = derivative_sup(np, Axis::Z, order, cfg)?;
    let injected = [ov.d.is_some(), ov.deriv_sup_x.is_some(), ov.deriv_sup_y.is_some()];
    let provenance = if injected.iter().all(|&b| b) {
        Provenance::Injected
    } else if injected.iter().any(|&b| b) {
        Provenance::Mixed
    } else {
        Provenance::GridEstimated
    };
    Ok(BoundSet {
        d,
        deriv_sup_x,
        deriv_sup_y,
        provenance,
    })
}
