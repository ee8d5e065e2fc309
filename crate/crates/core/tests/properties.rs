use proptest::prelude::*;
use randinf::estimators::{crd_gap_formula, factorial_gap_formula, pair_report_from_differences, variance_report};
use randinf::inference::{
    fiducial_interval_exact, frt_exact, frt_monte_carlo_seeded, neyman_ci, normal_test, CrdRandomization, FrtOptions,
    Method, Statistic,
};
use randinf::population::{ObservedData, PotentialTable};
use randinf::regression::ols_fit;

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300) || (a - b).abs() <= 1e-300
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Outcomes and labels with at least two units in each arm.
fn observed(max_n: usize) -> impl Strategy<Value = ObservedData> {
    (4usize..=max_n)
        .prop_flat_map(|n| (prop::collection::vec(-100.0f64..100.0, n), 2usize..=n - 2, Just(n)))
        .prop_flat_map(|(y, n1, n)| {
            let mut t = vec![0u8; n];
            t[..n1].fill(1);
            (Just(y), Just(n1), Just(t).prop_shuffle())
        })
        .prop_map(|(y, _, t)| ObservedData::new(y, t).unwrap())
}

/// Outcomes on a coarse dyadic grid, so every sum is exact and
/// mathematically tied assignments tie in floating point too.
fn observed_grid(max_n: usize) -> impl Strategy<Value = ObservedData> {
    observed(max_n).prop_map(|d| {
        let y = d.yobs().iter().map(|y| (y / 8.0).round() / 8.0).collect();
        ObservedData::new(y, d.labels().to_vec()).unwrap()
    })
}

fn identity_config() -> ProptestConfig {
    ProptestConfig { cases: 1000, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(identity_config())]

    #[test]
    fn score_variance_is_scaled_fisher_variance(d in observed(60)) {
        let v = variance_report(&d).unwrap();
        let n = d.n() as f64;
        prop_assert!(rel_close(v.v_score, (n - 1.0) / n * v.v_fisher, 1e-10));
    }

    #[test]
    fn total_variance_decomposes_by_arm(d in observed(60)) {
        let v = variance_report(&d).unwrap();
        let (n, n1, n0) = (d.n() as f64, d.n1() as f64, d.n0() as f64);
        let ybar = mean(d.yobs());
        let (m1, m0) = (mean(&d.treated()), mean(&d.control()));
        let lhs = (n - 1.0) * v.ssq;
        let rhs = (n1 - 1.0) * v.s1sq + (n0 - 1.0) * v.s0sq + n1 * (m1 - ybar).powi(2) + n0 * (m0 - ybar).powi(2);
        prop_assert!(rel_close(lhs, rhs, 1e-10), "{lhs} vs {rhs}");
    }

    #[test]
    fn pair_variance_gap_identity(diffs in prop::collection::vec(-50.0f64..50.0, 2..80)) {
        let r = pair_report_from_differences(diffs.clone()).unwrap();
        let n = diffs.len() as f64;
        let lhs = r.v_fisher - r.v_neyman;
        let rhs = (r.tau_hat * r.tau_hat - r.v_fisher) / (n - 1.0);
        // Both sides are differences of O(v_fisher) terms.
        prop_assert!((lhs - rhs).abs() <= 1e-10 * r.v_fisher.max(r.tau_hat * r.tau_hat).max(1e-300));
    }

    #[test]
    fn residual_sandwich_matches_closed_form(d in observed(60)) {
        let v = variance_report(&d).unwrap();
        let fit = ols_fit(&d).unwrap();
        prop_assert!(rel_close(fit.hw_variance(&d), v.v_hw, 1e-10));
        prop_assert!(rel_close(fit.ols_variance(&d), v.v_ols, 1e-10));
    }

    #[test]
    fn ols_slope_is_difference_in_means(d in observed(60)) {
        let v = variance_report(&d).unwrap();
        let fit = ols_fit(&d).unwrap();
        let scale = d.yobs().iter().fold(0.0f64, |m, y| m.max(y.abs()));
        prop_assert!((fit.beta_hat - v.tau_hat).abs() <= 1e-10 * scale.max(1e-300));
    }
}

proptest! {
    #[test]
    fn location_shift_leaves_estimates_unchanged(d in observed(40), c in -1e3f64..1e3) {
        let moved = ObservedData::new(d.yobs().iter().map(|y| y + c).collect(), d.labels().to_vec()).unwrap();
        let (a, b) = (variance_report(&d).unwrap(), variance_report(&moved).unwrap());
        let scale = 1.0 + c.abs();
        prop_assert!((a.tau_hat - b.tau_hat).abs() <= 1e-9 * scale);
        prop_assert!((a.v_neyman - b.v_neyman).abs() <= 1e-9 * scale * (1.0 + a.v_neyman));
    }

    #[test]
    fn larger_variance_never_gives_smaller_p(est in -10.0f64..10.0, v1 in 1e-6f64..10.0, extra in 0.0f64..10.0) {
        let small = normal_test(Method::Neyman, est, v1);
        let large = normal_test(Method::FisherNormal, est, v1 + extra);
        prop_assert!(large.p_value >= small.p_value);
        prop_assert!((0.0..=1.0).contains(&small.p_value));
    }

    #[test]
    fn exact_p_is_a_count_over_enumeration(d in observed_grid(10)) {
        let t = frt_exact(&d, Statistic::DiffInMeans, 1 << 20).unwrap();
        prop_assert!(t.enumerated > 0);
        prop_assert!(t.extreme_count >= 1, "the observed assignment ties itself");
        prop_assert_eq!(t.p_value, t.extreme_count as f64 / t.enumerated as f64);
    }

    #[test]
    fn exact_p_is_monotone_in_threshold(d in observed(10), a in 0.0f64..50.0, b in 0.0f64..50.0) {
        let engine = CrdRandomization::new(&d, Statistic::DiffInMeans).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let count = |thr: f64| engine.count_extreme_range(thr, 0, 1 << 20);
        prop_assert!(count(hi) <= count(lo));
    }

    #[test]
    fn swapping_labels_keeps_exact_p(d in observed_grid(10)) {
        let flipped = ObservedData::new(d.yobs().to_vec(), d.labels().iter().map(|t| 1 - t).collect()).unwrap();
        let a = frt_exact(&d, Statistic::DiffInMeans, 1 << 20).unwrap();
        let b = frt_exact(&flipped, Statistic::DiffInMeans, 1 << 20).unwrap();
        prop_assert_eq!(a.extreme_count, b.extreme_count);
    }

    #[test]
    fn neyman_intervals_nest(d in observed(40)) {
        let v = variance_report(&d).unwrap();
        prop_assume!(v.v_neyman > 0.0);
        let wide = neyman_ci(&d, 0.95).unwrap();
        let narrow = neyman_ci(&d, 0.90).unwrap();
        prop_assert!(wide.lower <= narrow.lower && narrow.upper <= wide.upper);
        prop_assert!(wide.lower <= wide.upper);
    }

    #[test]
    fn exact_fiducial_interval_contains_estimate(d in observed(10)) {
        let v = variance_report(&d).unwrap();
        prop_assume!(v.v_neyman > 0.0);
        let fi = fiducial_interval_exact(&d, 0.95, 1 << 20).unwrap();
        prop_assert!(fi.lower <= fi.upper);
        prop_assert!(fi.contains(v.tau_hat), "{:?} misses {}", fi, v.tau_hat);
    }

    #[test]
    fn seeded_frt_ignores_thread_count(d in observed(30), seed in any::<u64>()) {
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| frt_monte_carlo_seeded(&d, Statistic::DiffInMeans, 20_000, seed, FrtOptions::default()).unwrap())
        };
        prop_assert_eq!(run(1), run(3));
    }

    #[test]
    fn one_factor_gap_is_the_balanced_crd_gap(y1 in prop::collection::vec(-5.0f64..5.0, 4..40), shift in -3.0f64..3.0) {
        // K = 1 with r units per arm and the same population as a balanced CRD.
        let r = y1.len() / 2;
        let y1 = &y1[..2 * r];
        let y0: Vec<f64> = y1.iter().map(|y| y - shift + 0.1 * y * y).collect();
        let pop = PotentialTable::new(y1.to_vec(), y0.clone()).unwrap();
        let s = pop.summarize();
        let crd = crd_gap_formula(&s, r, r);
        let fact = factorial_gap_formula(&[s.ybar1, s.ybar0], 1, r).unwrap();
        prop_assert!(rel_close(crd, fact, 1e-12) || (crd - fact).abs() < 1e-15);
    }
}
