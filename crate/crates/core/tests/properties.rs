use bicubature::bounds::{grid_coord, BoundOverrides, SamplingConfig};
use bicubature::engine::{self, EvalOptions};
use bicubature::oracle::reference_integral;
use bicubature::{get_rule, normalize, run_once, ControlConfig, Integrand, Mode, Prepared, Region};
use proptest::prelude::*;
use rand::{rngs::StdRng, Rng, SeedableRng};

fn example_one() -> (Region, Integrand) {
    (
        Region::new(1.0, 2.0, |x| x * x / 5.0, |x| x * x * x / 5.0).unwrap(),
        Integrand::new(|x, y| (4.0 * x * y).exp()),
    )
}

fn example_two() -> (Region, Integrand) {
    (
        Region::new(1.0, 4.0, |x| x, |x| 2.0 * x * x).unwrap(),
        Integrand::new(|x, y| (x * y).sin() / 5.0),
    )
}

#[test]
fn scaling_identity_on_random_samples() {
    let mu = 1e-16;
    let mut rng = StdRng::seed_from_u64(7);
    for (region, g) in [example_one(), example_two()] {
        let np = normalize(&region, &g, &SamplingConfig::default()).unwrap();
        for _ in 0..10_000 {
            let (w, z): (f64, f64) = (rng.gen(), rng.gen());
            let lhs = np.big_m * np.eval_g(w, z);
            let rhs = np.eval_scaled_integrand(w, z);
            assert!((lhs - rhs).abs() <= 8.0 * mu * np.big_m, "w={w} z={z}: {lhs} vs {rhs}");
        }
    }
}

#[test]
fn scaled_integrand_peaks_at_one() {
    let cfg = SamplingConfig::default();
    for (region, g) in [example_one(), example_two()] {
        let np = normalize(&region, &g, &cfg).unwrap();
        assert!(np.big_m > 1.0);
        let n = cfg.grid_points_per_axis;
        let mut peak = 0.0f64;
        for i in 0..n {
            let w = grid_coord(0.0, 1.0, i, n);
            let (lo, hi) = (np.l_tilde(w), np.u_tilde(w));
            for j in 0..n {
                peak = peak.max(np.eval_g(w, grid_coord(lo, hi, j, n)).abs());
            }
        }
        assert!(peak <= 1.0 + 1e-15 && peak >= 1.0 / cfg.safety_factor, "peak {peak}");
    }
}

/// `c e^{k(x+y)}` on the unit square, with its true suprema injected.
fn exponential_fixture(c: f64, k: f64) -> (Region, Integrand, BoundOverrides, f64) {
    let big_m = (c.abs() * (2.0 * k).exp()).max(1.0);
    let sup = c.abs() * k.powi(4) * (2.0 * k).exp() / big_m;
    let overrides = BoundOverrides {
        big_m: Some(big_m),
        d: Some(1.0),
        deriv_sup_x: Some(sup),
        deriv_sup_y: Some(sup),
    };
    let exact = c * ((k.exp() - 1.0) / k).powi(2);
    let region = Region::new(0.0, 1.0, |_| 0.0, |_| 1.0).unwrap();
    (
        region,
        Integrand::new(move |x, y| c * (k * (x + y)).exp()),
        overrides,
        exact,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bounds_are_conservative_with_true_suprema(
        c in prop_oneof![-6.0..-0.05f64, 0.05..6.0f64],
        k in 0.1..2.0f64,
        eps_exp in -9.0..-4.0f64,
    ) {
        let (region, g, overrides, exact) = exponential_fixture(c, k);
        let cfg = ControlConfig { eps: 10f64.powf(eps_exp), overrides, ..Default::default() };
        let rep = run_once(&region, &g, &cfg).unwrap();
        let err = (rep.value - exact).abs();
        prop_assert!(err <= rep.abs_bound, "err {err} > abs_bound {}", rep.abs_bound);
        prop_assert!(err / exact.abs() <= rep.rel_estimate, "rel err {} > {}", err / exact.abs(), rep.rel_estimate);
        prop_assert_eq!(rep.mode == Mode::Relative, rep.value.abs() > 1.0);
    }

    #[test]
    fn report_identities_hold_exactly(c in -4.0..4.0f64, k in 0.1..1.5f64) {
        let (region, g, overrides, _) = exponential_fixture(c, k);
        let rep = run_once(&region, &g, &ControlConfig { eps: 1e-7, overrides, ..Default::default() }).unwrap();
        prop_assert_eq!(rep.value, rep.big_m * rep.qc_g);
        prop_assert_eq!(rep.abs_bound, rep.big_m * rep.eps);
        if rep.qc_g == 0.0 {
            prop_assert!(rep.rel_estimate.is_infinite());
        } else {
            prop_assert_eq!(rep.rel_estimate, rep.eps / rep.qc_g.abs());
        }
    }

    #[test]
    fn normalized_and_original_cubatures_agree(
        a in -3.0..3.0f64,
        len in 0.2..3.0f64,
        base in -2.0..2.0f64,
        slope in -1.0..1.0f64,
        width in 0.1..2.0f64,
        bulge in 0.0..1.0f64,
        rule_name in prop::sample::select(vec!["simpson", "trapezium", "gauss_legendre_2"]),
    ) {
        let region = Region::new(
            a,
            a + len,
            move |x| base + slope * x,
            move |x| base + slope * x + width + bulge * (x - a) * (x - a),
        )
        .unwrap();
        let g = Integrand::new(|x, y| (0.3 * x - 0.2 * y).cos() + 0.1 * x * y);
        let rule = get_rule(rule_name).unwrap();
        let np = normalize(&region, &g, &SamplingConfig::default()).unwrap();
        let plan = engine::plan_grid(0.03, &np, &rule).unwrap();
        let opts = EvalOptions::default();
        let scaled = engine::evaluate(&|w, z| np.eval_g(w, z), &plan, &rule, &opts).unwrap().value;
        let replay = engine::plan_with_counts(&region, &rule, plan.n1, &plan.row_counts()).unwrap();
        let direct = engine::evaluate(&|x, y| g.eval(x, y), &replay, &rule, &opts).unwrap().value;
        let value = np.big_m * scaled;
        prop_assert!(
            (direct - value).abs() <= 1e-12 * value.abs().max(1.0) * np.big_m,
            "direct {direct} vs M Qc {value}"
        );
    }
}

#[test]
fn repeated_runs_are_bitwise_identical() {
    let (region, g) = example_two();
    let cfg = ControlConfig {
        eps: 1e-5,
        ..Default::default()
    };
    let a = run_once(&region, &g, &cfg).unwrap();
    let b = run_once(&region, &g, &cfg).unwrap();
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    assert_eq!(a.bounds, b.bounds);
    assert_eq!(a.nodes_evaluated, b.nodes_evaluated);
}

#[test]
fn engine_agrees_with_oracle_within_its_estimate() {
    let fixtures = [
        example_two(),
        (
            Region::new(0.0, 2.0, |x| -x, |x| x * x).unwrap(),
            Integrand::new(|x, y| 3.0 + (x * y).cos()),
        ),
        (
            Region::new(-1.0, 1.0, |x| 0.5 * x * x, |x| 1.0 + x.cos()).unwrap(),
            Integrand::new(|x, y| (x + 2.0 * y).exp()),
        ),
    ];
    for (region, g) in fixtures {
        let prep = Prepared::new(&region, &g, &ControlConfig::default()).unwrap();
        let pass = prep.run(1e-7).unwrap();
        let value = prep.problem.big_m * pass.qc_g;
        let oracle = reference_integral(&region, &g, 1e-10).unwrap().value;
        let err = (value - oracle).abs();
        assert!(err <= pass.abs_bound, "err {err} vs abs_bound {}", pass.abs_bound);
        assert!(
            err / oracle.abs() <= pass.rel_estimate,
            "rel err {} vs {}",
            err / oracle.abs(),
            pass.rel_estimate
        );
    }
}
