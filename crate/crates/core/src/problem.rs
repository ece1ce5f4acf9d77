//! Integration problems over `a <= x <= b, l(x) <= y <= u(x)` and their
//! affine normalization onto the unit square.

use std::fmt;
use std::sync::Arc;

use crate::bounds::{self, BoundOverrides, SamplingConfig};
use crate::error::{Error, Result};

pub type LimitFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type Field = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Outer interval plus lower and upper limit functions of the outer variable.
pub trait Domain: Sync {
    fn outer(&self) -> (f64, f64);
    fn lower(&self, t: f64) -> f64;
    fn upper(&self, t: f64) -> f64;
}

#[derive(Clone)]
pub struct Region {
    a: f64,
    b: f64,
    lower: LimitFn,
    upper: LimitFn,
}

impl Region {
    pub fn new<L, U>(a: f64, b: f64, lower: L, upper: U) -> Result<Self>
    where
        L: Fn(f64) -> f64 + Send + Sync + 'static,
        U: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::from_arcs(a, b, Arc::new(lower), Arc::new(upper))
    }

    pub fn from_arcs(a: f64, b: f64, lower: LimitFn, upper: LimitFn) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidArgument(format!(
                "need finite a < b, got a = {a}, b = {b}"
            )));
        }
        Ok(Self { a, b, lower, upper })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

impl fmt::Debug for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Region")
            .field("a", &self.a)
            .field("b", &self.b)
            .finish_non_exhaustive()
    }
}

impl Domain for Region {
    fn outer(&self) -> (f64, f64) {
        (self.a, self.b)
    }
    fn lower(&self, x: f64) -> f64 {
        (self.lower)(x)
    }
    fn upper(&self, x: f64) -> f64 {
        (self.upper)(x)
    }
}

/// The integrand `G(x, y)`, optionally carrying user-supplied suprema.
#[derive(Clone)]
pub struct Integrand {
    eval: Field,
    pub analytic_bounds: BoundOverrides,
}

impl Integrand {
    pub fn new<G>(g: G) -> Self
    where
        G: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self::from_arc(Arc::new(g))
    }

    pub fn from_arc(eval: Field) -> Self {
        Self {
            eval,
            analytic_bounds: BoundOverrides::default(),
        }
    }

    pub fn with_analytic_bounds(mut self, bounds: BoundOverrides) -> Self {
        self.analytic_bounds = bounds;
        self
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        (self.eval)(x, y)
    }
}

impl fmt::Debug for Integrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Integrand")
            .field("analytic_bounds", &self.analytic_bounds)
            .finish_non_exhaustive()
    }
}

/// The problem mapped to `w, z in [0, 1]` and scaled so that `|g| <= 1`.
#[derive(Clone, Debug)]
pub struct NormalizedProblem {
    region: Region,
    integrand: Integrand,
    pub m1: f64,
    pub m2: f64,
    pub l1: f64,
    pub u1: f64,
    pub big_m: f64,
    /// Grid estimate of `max |G~ m1 m2|` over the normalized region.
    pub sup_estimate: f64,
    scale: f64,
}

impl NormalizedProblem {
    /// `g(w, z) = G(m1 w + a, m2 z + l1) m1 m2 / M`.
    #[inline]
    pub fn eval_g(&self, w: f64, z: f64) -> f64 {
        self.integrand.eval(self.m1 * w + self.region.a, self.m2 * z + self.l1) * self.scale
    }

    /// `G~(w, z) m1 m2`, the unscaled integrand in normalized coordinates.
    #[inline]
    pub fn eval_scaled_integrand(&self, w: f64, z: f64) -> f64 {
        self.integrand.eval(self.m1 * w + self.region.a, self.m2 * z + self.l1) * (self.m1 * self.m2)
    }

    pub fn l_tilde(&self, w: f64) -> f64 {
        (self.region.lower(self.m1 * w + self.region.a) - self.l1) / self.m2
    }

    pub fn u_tilde(&self, w: f64) -> f64 {
        (self.region.upper(self.m1 * w + self.region.a) - self.l1) / self.m2
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn integrand(&self) -> &Integrand {
        &self.integrand
    }

    pub fn overrides(&self) -> &BoundOverrides {
        &self.integrand.analytic_bounds
    }

    /// Maps a normalized point back to `(x, y)`.
    pub fn to_original(&self, w: f64, z: f64) -> (f64, f64) {
        (self.m1 * w + self.region.a, self.m2 * z + self.l1)
    }
}

impl Domain for NormalizedProblem {
    fn outer(&self) -> (f64, f64) {
        (0.0, 1.0)
    }
    fn lower(&self, w: f64) -> f64 {
        self.l_tilde(w)
    }
    fn upper(&self, w: f64) -> f64 {
        self.u_tilde(w)
    }
}

/// Relative slack allowed when comparing `l(x)` against `u(x)`.
const CROSSING_SLACK: f64 = 1e-12;

pub fn normalize(region: &Region, integrand: &Integrand, cfg: &SamplingConfig) -> Result<NormalizedProblem> {
    cfg.validate()?;
    let (a, b) = (region.a, region.b);

    for i in 0..cfg.grid_points_per_axis {
        let x = bounds::grid_coord(a, b, i, cfg.grid_points_per_axis);
        let (lo, hi) = (region.lower(x), region.upper(x));
        if !lo.is_finite() || !hi.is_finite() {
            let bad = if lo.is_finite() { hi } else { lo };
            return Err(Error::NonFinite {
                x,
                y: f64::NAN,
                value: bad,
            });
        }
        if lo - hi > CROSSING_SLACK * lo.abs().max(hi.abs()).max(1.0) {
            return Err(Error::CrossingLimits {
                x,
                lower: lo,
                upper: hi,
            });
        }
    }

    let lower_ext = bounds::extrema_1d(|x| region.lower(x), (a, b), cfg)?;
    let upper_ext = bounds::extrema_1d(|x| region.upper(x), (a, b), cfg)?;
    let l1 = lower_ext.min.min(upper_ext.min);
    let u1 = lower_ext.max.max(upper_ext.max);
    let m1 = b - a;
    let m2 = u1 - l1;
    if !(m2 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "region has zero height: l and u both equal {l1} everywhere"
        )));
    }

    let mut np = NormalizedProblem {
        region: region.clone(),
        integrand: integrand.clone(),
        m1,
        m2,
        l1,
        u1,
        big_m: 1.0,
        sup_estimate: 0.0,
        scale: m1 * m2,
    };

    // The grid pass also screens the integrand for non-finite values.
    let sup = bounds::grid_max_abs(|w, z| np.eval_scaled_integrand(w, z), &np, cfg).map_err(|e| match e {
        Error::NonFinite { x: w, y: z, value } => {
            let (x, y) = np.to_original(w, z);
            Error::NonFinite { x, y, value }
        }
        other => other,
    })?;
    np.sup_estimate = sup.value;

    np.big_m = match integrand.analytic_bounds.big_m {
        Some(m) if m.is_finite() && m >= 1.0 => m,
        Some(m) => {
            return Err(Error::InvalidArgument(format!(
                "injected M must be finite and >= 1, got {m}"
            )))
        }
        None => sup.value.max(1.0),
    };
    np.scale = m1 * m2 / np.big_m;
    Ok(np)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn example_one() -> (Region, Integrand) {
        let r = Region::new(1.0, 2.0, |x| x * x / 5.0, |x| x * x * x / 5.0).unwrap();
        (r, Integrand::new(|x, y| (4.0 * x * y).exp()))
    }

    fn example_two() -> (Region, Integrand) {
        let r = Region::new(1.0, 4.0, |x| x, |x| 2.0 * x * x).unwrap();
        (r, Integrand::new(|x, y| (x * y).sin() / 5.0))
    }

    #[test]
    fn example_one_transform() {
        let (r, g) = example_one();
        let np = normalize(&r, &g, &SamplingConfig::default()).unwrap();
        assert_eq!(np.m1, 1.0);
        assert_relative_eq!(np.m2, 7.0 / 5.0, max_relative = 1e-14);
        assert_relative_eq!(np.l1, 0.2, max_relative = 1e-14);
        assert_relative_eq!(np.u1, 1.6, max_relative = 1e-14);
        let exact_m = 1.4 * 12.8f64.exp();
        assert_relative_eq!(np.big_m, 5.07104e5, max_relative = 1e-3);
        assert_relative_eq!(np.big_m, exact_m, max_relative = 1e-12);
        assert_relative_eq!(np.eval_g(1.0, 1.0), 1.0, epsilon = 1e-9);
        // breadth vanishes at w = 0
        assert_eq!(np.u_tilde(0.0) - np.l_tilde(0.0), 0.0);
    }

    #[test]
    fn example_two_transform() {
        let (r, g) = example_two();
        let np = normalize(&r, &g, &SamplingConfig::default()).unwrap();
        assert_eq!(np.m1, 3.0);
        assert_eq!(np.m2, 31.0);
        assert_relative_eq!(np.big_m, 93.0 / 5.0, max_relative = 1e-6);
        // g = sin((3w+1)(31z+1)) up to the ratio (93/5)/M
        let g00 = np.eval_g(0.0, 0.0) * np.big_m / (93.0 / 5.0);
        assert_relative_eq!(g00, 1f64.sin(), max_relative = 1e-14);
        assert_relative_eq!(np.eval_g(0.0, 0.0), 0.84147, max_relative = 1e-5);
    }

    #[test]
    fn already_normalized_problem() {
        let r = Region::new(0.0, 1.0, |_| 0.0, |_| 1.0).unwrap();
        let g = Integrand::new(|x, y| 0.5 * (x - y).cos());
        let np = normalize(&r, &g, &SamplingConfig::default()).unwrap();
        assert_eq!((np.m1, np.m2, np.big_m), (1.0, 1.0, 1.0));
        for (w, z) in [(0.1, 0.2), (0.9, 0.3), (0.5, 0.5)] {
            assert_eq!(np.eval_g(w, z), 0.5 * (w - z).cos());
        }
        let half = normalize(&r, &Integrand::new(|_, _| 0.5), &SamplingConfig::default()).unwrap();
        assert_eq!(half.eval_g(0.3, 0.7), 0.5);
    }

    #[test]
    fn crossing_limits_rejected() {
        let r = Region::new(0.0, 1.0, |x| x, |x| 1.0 - x).unwrap();
        let err = normalize(&r, &Integrand::new(|_, _| 1.0), &SamplingConfig::default()).unwrap_err();
        assert!(matches!(err, Error::CrossingLimits { .. }));
        assert!(err.to_string().contains("crossing limits unsupported"));
    }

    #[test]
    fn non_finite_integrand_rejected() {
        let r = Region::new(0.0, 1.0, |_| 0.0, |_| 1.0).unwrap();
        let err = normalize(&r, &Integrand::new(|x, _| 1.0 / x), &SamplingConfig::default()).unwrap_err();
        match err {
            Error::NonFinite { x, .. } => assert_eq!(x, 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_interval_rejected() {
        assert!(Region::new(2.0, 1.0, |_| 0.0, |_| 1.0).is_err());
        assert!(Region::new(0.0, f64::NAN, |_| 0.0, |_| 1.0).is_err());
    }

    #[test]
    fn injected_m_is_used_verbatim() {
        let (r, g) = example_one();
        let g = g.with_analytic_bounds(BoundOverrides {
            big_m: Some(5.07104e5),
            ..Default::default()
        });
        let np = normalize(&r, &g, &SamplingConfig::default()).unwrap();
        assert_eq!(np.big_m, 5.07104e5);
        let bad = Integrand::new(|_, _| 1.0).with_analytic_bounds(BoundOverrides {
            big_m: Some(0.5),
            ..Default::default()
        });
        assert!(normalize(&r, &bad, &SamplingConfig::default()).is_err());
    }

    #[test]
    fn normalized_limits_span_unit_interval() {
        let (r, g) = example_two();
        let cfg = SamplingConfig::default();
        let np = normalize(&r, &g, &cfg).unwrap();
        let n = cfg.grid_points_per_axis;
        let ws: Vec<f64> = (0..n).map(|i| bounds::grid_coord(0.0, 1.0, i, n)).collect();
        let umax = ws.iter().map(|&w| np.u_tilde(w)).fold(f64::MIN, f64::max);
        let lmin = ws.iter().map(|&w| np.l_tilde(w)).fold(f64::MAX, f64::min);
        assert!((umax - 1.0).abs() <= 1e-12);
        assert!(lmin.abs() <= 1e-12);
        for &w in &ws {
            assert!(np.l_tilde(w) >= -1e-12 && np.l_tilde(w) <= np.u_tilde(w) && np.u_tilde(w) <= 1.0 + 1e-12);
        }
    }
}
