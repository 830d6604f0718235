//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ttlcache_core::coverage::utility_poisson_closed_form;
use ttlcache_core::figures::{run_figure, FigureId};
use ttlcache_core::planner::{solve_single_cache_greedy, Formulation};
use ttlcache_core::scenario::Scenario;
use ttlcache_core::simulator::run_replications;
use ttlcache_core::{
    derive_code_params, CachingMode, CoverageDistribution, Planner, PlannerOptions, SolverStatus,
};

use common::{poisson_series_utility, random_gamma, random_owned, rel, Shape};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    check(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:?}"))
}

fn closed_form_utility() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut mus: Vec<f64> = (1..=10).map(|k| 1.0 / k as f64).collect();
    mus.extend((0..50).map(|_| rng.random::<f64>()));
    let mut worst: f64 = 0.0;
    for lambda in [0.1, 1.5625, 5.0] {
        for &mu in &mus {
            let closed = utility_poisson_closed_form(lambda, mu).map_err(|e| e.to_string())?;
            let series = poisson_series_utility(lambda, mu);
            worst = worst.max((closed - series).abs());
        }
    }
    check(worst <= 1e-10, || format!("max error {worst:e}"))?;
    within(started.elapsed(), Duration::from_secs(1))?;
    Ok(format!("180 points, max error {worst:.1e}"))
}

fn utility_monotone_concave() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut violations = 0;
    for _ in 0..1000 {
        let cov = CoverageDistribution::explicit(random_gamma(&mut rng, 40)).map_err(|e| e.to_string())?;
        for _ in 0..100 {
            let (m1, m2, a): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
            let g = |m: f64| cov.utility(m).unwrap();
            let (lo, hi) = (m1.min(m2), m1.max(m2));
            if g(lo) > g(hi) + 1e-12 {
                violations += 1;
            }
            let mix = (a * m1 + (1.0 - a) * m2).clamp(0.0, 1.0);
            if g(mix) < a * g(m1) + (1.0 - a) * g(m2) - 1e-12 {
                violations += 1;
            }
        }
    }
    check(violations == 0, || format!("{violations} violations"))?;
    within(started.elapsed(), Duration::from_secs(10))?;
    Ok("100000 triples".into())
}

fn static_optimal_under_poisson() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let shape = Shape {
        max_files: 20,
        max_updates: 6,
        max_b: 20,
        weibull_shape: Some(1.0),
        max_c_sbs: 0.5,
        max_c_cache: 0.01,
    };
    let planner = Planner::default();
    let mut worst: f64 = 0.0;
    for t in 0..25 {
        let owned = random_owned(&mut rng, &shape);
        let inst = owned.instance();
        let sttl = planner.solve(&inst, CachingMode::Sttl).map_err(|e| e.to_string())?;
        let stat = planner.solve(&inst, CachingMode::Static).map_err(|e| e.to_string())?;
        let err = (sttl.loads.w - stat.loads.w).abs() / stat.loads.w.abs();
        check(err <= 1e-6, || format!("instance {t}: sttl {} static {}", sttl.loads.w, stat.loads.w))?;
        worst = worst.max(err);
    }
    within(started.elapsed(), Duration::from_secs(120))?;
    Ok(format!("25 instances, max relative gap {worst:.1e}"))
}

fn greedy_equals_lp() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let shape = Shape {
        max_files: 20,
        max_updates: 6,
        max_b: 1,
        weibull_shape: None,
        max_c_sbs: 0.9,
        max_c_cache: 0.0,
    };
    let planner = Planner::default();
    let single = CoverageDistribution::single_cache();
    let mut worst: f64 = 0.0;
    for t in 0..100 {
        let mut owned = random_owned(&mut rng, &shape);
        owned.coverage = single.clone();
        check(owned.tables.hazard_monotone(), || format!("instance {t}: hazard ratio not monotone"))?;
        let greedy = solve_single_cache_greedy(&owned.tables, &owned.costs, &owned.catalog, owned.capacity)
            .map_err(|e| format!("instance {t}: {e}"))?;
        let lp = planner.solve(&owned.instance(), CachingMode::Sttl).map_err(|e| e.to_string())?;
        let err = (greedy.loads.w - lp.loads.w).abs();
        check(err <= 1e-8, || format!("instance {t}: greedy {} lp {}", greedy.loads.w, lp.loads.w))?;
        let monotone = greedy.policy.mu.iter().all(|row| row.windows(2).all(|w| w[1] <= w[0]));
        check(monotone, || format!("instance {t}: greedy policy not monotone"))?;
        worst = worst.max(err);
    }
    within(started.elapsed(), Duration::from_secs(60))?;
    Ok(format!("100 instances, max difference {worst:.1e}"))
}

fn mode_ordering() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let shape = Shape {
        max_files: 10,
        max_updates: 4,
        max_b: 8,
        weibull_shape: None,
        max_c_sbs: 0.5,
        max_c_cache: 0.01,
    };
    let planner = Planner::new(PlannerOptions {
        gap_tol: 0.0,
        ..Default::default()
    });
    let mut certified = 0;
    let mut attempts = 0;
    while certified < 50 && attempts < 200 {
        attempts += 1;
        let owned = random_owned(&mut rng, &shape);
        let inst = owned.instance();
        let solve = |m| planner.solve(&inst, m).map_err(|e| e.to_string());
        let (sttl, fttl, ttl) = (solve(CachingMode::Sttl)?, solve(CachingMode::Fttl)?, solve(CachingMode::Ttl)?);
        if fttl.solver_status != SolverStatus::Optimal || ttl.solver_status != SolverStatus::Optimal {
            continue;
        }
        certified += 1;
        let (s, f, t) = (sttl.loads.w, fttl.loads.w, ttl.loads.w);
        check(s <= f + 1e-6 * f.abs() && f <= t + 1e-6 * t.abs(), || {
            format!("instance {attempts}: sttl {s} fttl {f} ttl {t}")
        })?;
    }
    check(certified == 50, || format!("only {certified} of {attempts} instances certified"))?;
    within(started.elapsed(), Duration::from_secs(600))?;
    Ok(format!("50 certified instances ({attempts} drawn)"))
}

fn formulation_equivalence() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let shape = Shape {
        max_files: 12,
        max_updates: 5,
        max_b: 12,
        weibull_shape: None,
        max_c_sbs: 0.5,
        max_c_cache: 0.01,
    };
    let with = |f| {
        Planner::new(PlannerOptions {
            formulation: f,
            ..Default::default()
        })
    };
    let (epigraph, segments) = (with(Formulation::Epigraph), with(Formulation::Segments));
    let mut worst: f64 = 0.0;
    for t in 0..20 {
        let owned = random_owned(&mut rng, &shape);
        let inst = owned.instance();
        let a = epigraph.solve(&inst, CachingMode::Sttl).map_err(|e| e.to_string())?;
        let b = segments.solve(&inst, CachingMode::Sttl).map_err(|e| e.to_string())?;
        let err = rel(a.objective_value, b.objective_value);
        check(err <= 1e-7, || format!("instance {t}: {} vs {}", a.objective_value, b.objective_value))?;
        worst = worst.max(err);
    }
    within(started.elapsed(), Duration::from_secs(60))?;
    Ok(format!("20 instances, max difference {worst:.1e}"))
}

fn reference_scenario(shape: f64) -> Scenario {
    let mut s = Scenario::default();
    s.catalog.weibull_shape = shape;
    s.solver.time_limit_s = Some(60.0);
    s
}

fn solve_all(s: &Scenario, modes: &[CachingMode]) -> Result<Vec<f64>, String> {
    let model = s.build().map_err(|e| e.to_string())?;
    let inst = model.instance().map_err(|e| e.to_string())?;
    let planner = s.planner().map_err(|e| e.to_string())?;
    modes
        .iter()
        .map(|&m| planner.solve(&inst, m).map(|r| r.loads.w_normalized).map_err(|e| e.to_string()))
        .collect()
}

fn headline_reduction() -> Outcome {
    let w = solve_all(&reference_scenario(0.6), &[CachingMode::Static, CachingMode::Sttl])?;
    let reduction = (w[0] - w[1]) / w[0];
    check((0.08..=0.12).contains(&reduction), || {
        format!("static {:.6} sttl {:.6} reduction {:.2}%", w[0], w[1], 100.0 * reduction)
    })?;
    Ok(format!("N=100: static {:.4}, sttl {:.4}, reduction {:.2}%", w[0], w[1], 100.0 * reduction))
}

fn shape_endpoints() -> Outcome {
    let modes = [CachingMode::Ttl, CachingMode::Fttl, CachingMode::Sttl];
    let w = solve_all(&reference_scenario(1.0), &modes)?;
    let (ttl, fttl, sttl) = (w[0], w[1], w[2]);
    check((fttl - sttl).abs() <= 1e-6, || format!("a=1: fttl {fttl} sttl {sttl}"))?;
    check(fttl < ttl && sttl < ttl, || format!("a=1: ttl {ttl} not above fttl {fttl}"))?;
    let w = solve_all(&reference_scenario(0.1), &modes)?;
    let lo = w.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let spread = (hi - lo) / lo;
    check(spread <= 0.01, || format!("a=0.1: loads {w:?} spread {:.3}%", 100.0 * spread))?;
    Ok(format!(
        "a=1: ttl {ttl:.4} fttl {fttl:.6} sttl {sttl:.6}; a=0.1 spread {:.3}%",
        100.0 * spread
    ))
}

fn desk_scenario() -> Scenario {
    let mut s = Scenario::default();
    s.catalog.n_files = 20;
    s.cache.capacity = 2.0;
    s.simulation.target_requests = 1e5;
    s.simulation.replications = 20;
    s
}

fn simulator_validation() -> Outcome {
    let started = Instant::now();
    let mut s = desk_scenario();
    s.costs.c_cache = 1e-3;
    let model = s.build().map_err(|e| e.to_string())?;
    let inst = model.instance().map_err(|e| e.to_string())?;
    let planner = s.planner().map_err(|e| e.to_string())?;
    let mut summary = Vec::new();
    for mode in CachingMode::ALL {
        let report = planner.solve(&inst, mode).map_err(|e| e.to_string())?;
        let exact = report.loads.w_normalized;
        let config = s.sim_config(&model, report.policy).map_err(|e| e.to_string())?;
        let runs = run_replications(&config, &s.replication_seeds()).map_err(|e| e.to_string())?;
        let mut covered = 0;
        let mut worst: f64 = 0.0;
        for r in &runs {
            check(r.requests >= 100_000 - 2_000, || format!("{mode}: only {} requests", r.requests))?;
            worst = worst.max((r.loads.w_normalized - exact).abs() / exact);
            if (r.loads.w_normalized - exact).abs() <= r.half_widths.w_normalized {
                covered += 1;
            }
        }
        check(worst <= 0.02, || format!("{mode}: relative error {:.2}%", 100.0 * worst))?;
        check(covered >= 18, || format!("{mode}: CI covered {covered}/20"))?;
        summary.push(format!("{mode} {covered}/20 max {:.2}%", 100.0 * worst));
    }
    within(started.elapsed(), Duration::from_secs(300))?;
    Ok(summary.join(", "))
}

fn asynchronous_not_better() -> Outcome {
    let mut s = desk_scenario();
    s.simulation.replications = 10;
    let values = FigureId::UpdateCost.default_values();
    let data = run_figure(&s, FigureId::UpdateCost, &values).map_err(|e| e.to_string())?;
    let col = |name: &str| data.column(name).ok_or_else(|| format!("missing column {name}"));
    let mut smallest = f64::INFINITY;
    for mode in ["sttl", "ttl"] {
        let (sync, sync_hw) = (col(&format!("{mode}_sync"))?, col(&format!("{mode}_sync_hw"))?);
        let (asy, asy_hw) = (col(&format!("{mode}_async"))?, col(&format!("{mode}_async_hw"))?);
        for (p, x) in values.iter().enumerate() {
            let hw = (sync_hw[p].powi(2) + asy_hw[p].powi(2)).sqrt();
            let margin = (asy[p] - sync[p]) / hw;
            smallest = smallest.min(margin);
            check(asy[p] >= sync[p] - hw, || {
                format!("{mode} c_cache={x}: async {:.5} sync {:.5} hw {:.5}", asy[p], sync[p], hw)
            })?;
        }
    }
    Ok(format!(
        "{} cost points, smallest (async - sync) / half-width {smallest:.2}",
        values.len()
    ))
}

fn worked_code_example() -> Outcome {
    let r = |n, d| Ratio::new(n, d);
    let row = [r(1, 1), r(2, 3), r(2, 3), r(2, 3), r(2, 3), r(1, 3), r(0, 1)];
    let p = derive_code_params(&row, 3, 1.0).map_err(|e| e.to_string())?;
    check(p.k == 3 && p.n == 9 && p.per_slot_counts == vec![3, 2, 2, 2, 2, 1, 0], || {
        format!("k {} n {} counts {:?}", p.k, p.n, p.per_slot_counts)
    })?;
    Ok("k=3 n=9 counts (3,2,2,2,2,1,0)".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("Poisson closed-form utility", closed_form_utility),
        ("utility monotone and concave", utility_monotone_concave),
        ("static optimal under Poisson requests", static_optimal_under_poisson),
        ("single-cache greedy equals LP", greedy_equals_lp),
        ("mode ordering sttl <= fttl <= ttl", mode_ordering),
        ("epigraph and segment formulations agree", formulation_equivalence),
        ("full-scale update gain over static", headline_reduction),
        ("Weibull shape endpoints", shape_endpoints),
        ("simulator matches analytical loads", simulator_validation),
        ("asynchronous updates not better", asynchronous_not_better),
        ("worked code-parameter example", worked_code_example),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let id = k + 1;
        if !filter.is_empty() && !filter.iter().any(|f| *f == id.to_string()) {
            continue;
        }
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {id:>2} PASS [{secs:7.2}s] {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id:>2} FAIL [{secs:7.2}s] {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
