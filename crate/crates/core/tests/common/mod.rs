#![allow(dead_code)]

use rand::Rng;
use ttlcache_core::demand::{compute_demand_tables, zipf_popularity};
use ttlcache_core::*;

/// An instance together with the data it borrows.
pub struct Owned {
    pub catalog: Catalog,
    pub tables: DemandTables,
    pub coverage: CoverageDistribution,
    pub costs: CostModel,
    pub capacity: f64,
}

impl Owned {
    pub fn instance(&self) -> Instance<'_> {
        Instance::new(&self.catalog, &self.tables, &self.coverage, self.costs, self.capacity).unwrap()
    }
}

pub struct Shape {
    pub max_files: usize,
    pub max_updates: usize,
    /// Largest `b` with positive coverage probability.
    pub max_b: usize,
    /// `None` draws a Weibull shape in `[0.2, 1]` per file.
    pub weibull_shape: Option<f64>,
    pub max_c_sbs: f64,
    pub max_c_cache: f64,
}

pub fn random_gamma<R: Rng>(rng: &mut R, max_b: usize) -> Vec<f64> {
    let len = rng.random_range(2..=max_b + 1);
    let raw: Vec<f64> = (0..len).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    let mut gamma: Vec<f64> = raw.iter().map(|g| g / total).collect();
    let head: f64 = gamma[..len - 1].iter().sum();
    gamma[len - 1] = (1.0 - head).max(0.0);
    gamma
}

pub fn random_owned<R: Rng>(rng: &mut R, shape: &Shape) -> Owned {
    let n = rng.random_range(2..=shape.max_files);
    let k = rng.random_range(1..=shape.max_updates);
    let aggregate = rng.random_range(5.0..200.0);
    let alpha = rng.random_range(0.0..1.2);
    let sizes: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    let shapes: Vec<f64> = (0..n)
        .map(|_| shape.weibull_shape.unwrap_or_else(|| rng.random_range(0.2..=1.0)))
        .collect();
    let dists = zipf_popularity(n, alpha)
        .iter()
        .zip(&shapes)
        .map(|(p, &a)| {
            let rate = p * aggregate;
            if a == 1.0 {
                InterRequestDistribution::exponential(rate)
            } else {
                InterRequestDistribution::weibull(a, rate)
            }
            .unwrap()
        })
        .collect();
    let catalog = Catalog::explicit(sizes.clone(), dists).unwrap();
    let period = rng.random_range(0.05..1.0) * n as f64 / aggregate;
    let grid = TimeGrid::new(period, k).unwrap();
    let tables = compute_demand_tables(&catalog, &grid);
    let coverage = CoverageDistribution::explicit(random_gamma(rng, shape.max_b)).unwrap();
    let costs = CostModel::new(
        1.0,
        rng.random_range(0.0..=shape.max_c_sbs),
        rng.random_range(0.0..=shape.max_c_cache),
    )
    .unwrap();
    let capacity = rng.random_range(0.05..0.6) * sizes.iter().sum::<f64>();
    Owned {
        catalog,
        tables,
        coverage,
        costs,
        capacity,
    }
}

/// `sum_b gamma_b min{1, b mu}` with the Poisson pmf summed until the terms
/// vanish.
pub fn poisson_series_utility(lambda: f64, mu: f64) -> f64 {
    let mut term = (-lambda).exp();
    let mut total = 0.0;
    let mut b = 0usize;
    loop {
        total += term * (b as f64 * mu).min(1.0);
        b += 1;
        term *= lambda / b as f64;
        if b as f64 > lambda && term < 1e-300 {
            break;
        }
    }
    total
}

/// Relative difference with unit floor.
pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}
