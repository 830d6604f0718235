mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ttlcache_core::coverage::{utility_poisson_closed_form, CoverageDistribution};
use ttlcache_core::demand::compute_demand_tables;
use ttlcache_core::planner::{evaluate_loads, CachingMode, Planner, PIECE_MERGE_TOL};
use ttlcache_core::{Catalog, InterRequestDistribution, TimeGrid};

use common::{poisson_series_utility, random_gamma, random_owned, Shape};

/// Composite Simpson rule.
fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (hi - lo) / n as f64;
    let inner: f64 = (1..n)
        .map(|k| f(lo + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    (f(lo) + f(hi) + inner) * h / 3.0
}

fn weibull_survival(shape: f64, rate: f64) -> impl Fn(f64) -> f64 {
    let scale = 1.0 / (rate * statrs::function::gamma::gamma(1.0 + 1.0 / shape));
    move |t: f64| (-(t / scale).powf(shape)).exp()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn demand_rows_are_distributions(shape in 0.2f64..=1.0, rate in 0.1f64..50.0, k in 1usize..8, u in 0.05f64..2.0) {
        let dist = if shape == 1.0 {
            InterRequestDistribution::exponential(rate).unwrap()
        } else {
            InterRequestDistribution::weibull(shape, rate).unwrap()
        };
        let catalog = Catalog::explicit(vec![1.0], vec![dist]).unwrap();
        let grid = TimeGrid::new(u / rate, k).unwrap();
        let t = compute_demand_tables(&catalog, &grid);
        let f_sum: f64 = t.f[0].iter().sum();
        let a_sum: f64 = t.a[0].iter().sum();
        prop_assert!((f_sum - 1.0).abs() < 1e-12);
        prop_assert!((a_sum - 1.0 / rate).abs() < 1e-7 / rate);
        prop_assert!(t.f[0].iter().chain(&t.a[0]).all(|v| *v >= 0.0));
        prop_assert!(t.hazard_monotone());
    }

    #[test]
    fn occupancy_is_integrated_survival(shape in 0.3f64..1.0, rate in 0.5f64..5.0, k in 1usize..5) {
        let dist = InterRequestDistribution::weibull(shape, rate).unwrap();
        let catalog = Catalog::explicit(vec![1.0], vec![dist]).unwrap();
        let period = 0.5 / rate;
        let t = compute_demand_tables(&catalog, &TimeGrid::new(period, k).unwrap());
        let s = weibull_survival(shape, rate);
        for j in 0..k {
            let (lo, hi) = (j as f64 * period, (j + 1) as f64 * period);
            // substitute t = lo + (hi - lo) v^2 to tame the cusp at zero
            let a = simpson(|v| s(lo + (hi - lo) * v * v) * 2.0 * v * (hi - lo), 0.0, 1.0, 4000);
            prop_assert!((t.a[0][j] - a).abs() < 1e-8 * period.max(1.0), "slot {}: {} vs {}", j, t.a[0][j], a);
            prop_assert!((t.f[0][j] - (s(lo) - s(hi))).abs() < 1e-12);
        }
    }

    #[test]
    fn utility_matches_its_pieces(seed in any::<u64>(), mu in 0.0f64..=1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cov = CoverageDistribution::explicit(random_gamma(&mut rng, 30)).unwrap();
        let direct: f64 = cov.gamma().iter().enumerate().map(|(b, g)| g * (b as f64 * mu).min(1.0)).sum();
        prop_assert!((cov.utility(mu).unwrap() - direct).abs() < 1e-12);
        prop_assert!((cov.breakpoints().evaluate(mu) - direct).abs() < 1e-12);
        prop_assert!((cov.breakpoints().merged(PIECE_MERGE_TOL).evaluate(mu) - direct).abs() < 1e-9);
        prop_assert!((cov.utility(1.0).unwrap() - (1.0 - cov.gamma()[0])).abs() < 1e-12);
    }

    #[test]
    fn poisson_closed_form_matches_series(lambda in 0.01f64..20.0, mu in 0.0f64..=1.0) {
        let closed = utility_poisson_closed_form(lambda, mu).unwrap();
        prop_assert!((closed - poisson_series_utility(lambda, mu)).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn optimal_policies_are_feasible_and_ordered(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shape = Shape {
            max_files: 8,
            max_updates: 4,
            max_b: 6,
            weibull_shape: None,
            max_c_sbs: 0.5,
            max_c_cache: 0.02,
        };
        let owned = random_owned(&mut rng, &shape);
        let inst = owned.instance();
        let planner = Planner::default();
        let total: f64 = inst.weighted_rates().iter().sum();
        let mut loads = Vec::new();
        for mode in CachingMode::ALL {
            let r = planner.solve(&inst, mode).unwrap();
            r.policy.validate(&owned.tables, &owned.catalog, owned.capacity).unwrap();
            let again = evaluate_loads(&r.policy, &owned.tables, &owned.coverage, &owned.costs, &owned.catalog).unwrap();
            prop_assert_eq!(again, r.loads);
            prop_assert!((r.loads.r_sbs + r.loads.r_mbs - total).abs() < 1e-9 * total);
            prop_assert!(r.loads.r_cache >= 0.0);
            loads.push((mode, r.loads.w));
        }
        let w = |m| loads.iter().find(|(x, _)| *x == m).unwrap().1;
        let tol = 1e-4 * w(CachingMode::Static).abs().max(1e-9);
        prop_assert!(w(CachingMode::Sttl) <= w(CachingMode::Fttl) + tol);
        prop_assert!(w(CachingMode::Fttl) <= w(CachingMode::Ttl) + tol);
        prop_assert!(w(CachingMode::Sttl) <= w(CachingMode::Static) + tol);
    }
}
