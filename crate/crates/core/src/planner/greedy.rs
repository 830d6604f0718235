//! Fractional-knapsack solvers for the two cases with a closed-form
//! optimum: static caching, and a single cache without update cost.

use std::cmp::Ordering;

use super::{CachingMode, CachingPolicy, Instance};
use crate::error::{Error, Result};

struct Item {
    file: usize,
    index: usize,
    density: f64,
    weight: f64,
    /// Amount of `mu` this item carries when taken whole.
    span: f64,
}

fn by_density(a: &Item, b: &Item) -> Ordering {
    b.density
        .total_cmp(&a.density)
        .then(a.file.cmp(&b.file))
        .then(a.index.cmp(&b.index))
}

/// Takes items in order until `capacity` binds; returns the fraction taken
/// of each item.
fn fill(items: &[Item], capacity: f64) -> Vec<f64> {
    let mut left = capacity.max(0.0);
    items
        .iter()
        .map(|it| {
            if it.weight <= left {
                left -= it.weight;
                1.0
            } else {
                let frac = left / it.weight;
                left = 0.0;
                frac
            }
        })
        .collect()
}

/// Optimal static policy: per file the utility pieces are knapsack items
/// with value `dc * ws_i * SF_i * slope` and weight `ws_i * SA_i * length`,
/// where `SF`, `SA` are the table row sums (`1` and `1/omega_i`).
pub fn solve_static_policy(instance: &Instance<'_>) -> CachingPolicy {
    let tables = instance.tables;
    let n = tables.n_files();
    let n_slots = tables.n_slots();
    let delta = instance.costs.delta();
    if delta <= 0.0 {
        return CachingPolicy::zero(CachingMode::Static, n, n_slots);
    }
    let ws = instance.weighted_rates();
    let pieces = instance.coverage.breakpoints();
    let mut items = Vec::new();
    for i in 0..n {
        let sf: f64 = tables.f[i].iter().sum();
        let sa: f64 = tables.a[i].iter().sum();
        for (s, p) in pieces.pieces().iter().enumerate() {
            if p.slope <= 0.0 || p.length() <= 0.0 {
                continue;
            }
            items.push(Item {
                file: i,
                index: s,
                density: delta * sf * p.slope / sa,
                weight: ws[i] * sa * p.length(),
                span: p.length(),
            });
        }
    }
    items.sort_by(by_density);
    let taken = fill(&items, instance.capacity);
    let mut mu0 = vec![0.0; n];
    for (it, t) in items.iter().zip(taken) {
        mu0[it.file] += t * it.span;
    }
    let mu = mu0.iter().map(|&m| vec![m.min(1.0); n_slots]).collect();
    CachingPolicy {
        mode: CachingMode::Static,
        mu,
        nu: None,
        beta: None,
    }
}

/// Single-cache greedy: slot items `(i, j)` with weight `ws_i A_{i,j}` are
/// taken by descending `F_{i,j} / A_{i,j}`; ties go to the lower file, then
/// the lower slot.
pub fn solve_single_cache_policy(instance: &Instance<'_>) -> Result<CachingPolicy> {
    let tables = instance.tables;
    let costs = instance.costs;
    if costs.c_cache != 0.0 {
        return Err(Error::Mode(format!(
            "single-cache greedy needs zero update cost, got c_cache = {}; use the LP path",
            costs.c_cache
        )));
    }
    if costs.delta() <= 0.0 {
        return Err(Error::Mode(format!(
            "single-cache greedy needs c_mbs > c_sbs, got {} <= {}; use the LP path",
            costs.c_mbs, costs.c_sbs
        )));
    }
    if !tables.hazard_monotone() {
        return Err(Error::Mode(
            "single-cache greedy needs a non-increasing hazard ratio; use the LP path".into(),
        ));
    }
    let gamma = instance.coverage.gamma();
    let single = gamma.get(1).is_some_and(|g| (g - 1.0).abs() <= 1e-12);
    if !single {
        return Err(Error::Mode(
            "single-cache greedy needs every user covered by exactly one cache; use the LP path".into(),
        ));
    }
    let n = tables.n_files();
    let n_slots = tables.n_slots();
    let ws = instance.weighted_rates();
    let mut items = Vec::with_capacity(n * n_slots);
    for i in 0..n {
        // running minimum keeps rounding noise from reordering a file's slots
        let mut ratio = f64::INFINITY;
        for j in 0..n_slots {
            ratio = ratio.min(tables.hazard_ratio[i][j]);
            items.push(Item {
                file: i,
                index: j,
                density: ratio,
                weight: ws[i] * tables.a[i][j],
                span: 1.0,
            });
        }
    }
    items.sort_by(by_density);
    let taken = fill(&items, instance.capacity);
    let mut mu = vec![vec![0.0; n_slots]; n];
    for (it, t) in items.iter().zip(taken) {
        mu[it.file][it.index] = t;
    }
    Ok(CachingPolicy {
        mode: CachingMode::Sttl,
        mu,
        nu: None,
        beta: None,
    })
}
