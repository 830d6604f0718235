//! Step policies as a multiple-choice program.
//!
//! A TTL or FTTL row is fixed by its last cached slot `L` and its level
//! `nu`: `mu_{i,j} = nu` for `j <= L` and `0` after. For fixed `L` the
//! file's contribution to the load is concave piecewise linear in `nu`
//! with the same breakpoints as `g`, so it is enough to offer the levels at
//! those breakpoints and let the file mix two neighbouring levels. One
//! binary `y_{i,L}` per file and last slot selects `L`; the weights
//! `z_{i,L,s}` of level `s` satisfy `sum_s z_{i,L,s} <= y_{i,L}`. A mixture of
//! non-neighbouring levels only underestimates the utility (Jensen), so the
//! decoded `nu = sum_s z_{i,L,s} nu_s` is never worse than the program says.
//!
//! The LP relaxation is the perspective of each file's concave contribution,
//! which is far tighter than the `beta` indicator rows.

use super::{CachingMode, Instance, RawPolicy, PIECE_MERGE_TOL};
use crate::lp::{Program, RowKind};

#[derive(Debug, Clone)]
pub struct ChoiceProgram {
    pub program: Program,
    n_slots: usize,
    levels: Vec<f64>,
    /// `y[i][L]`; for TTL this is also the weight of the single level 1.
    y: Vec<Vec<usize>>,
    /// `z[i][L][s]`, empty for TTL.
    z: Vec<Vec<Vec<usize>>>,
}

impl ChoiceProgram {
    pub fn decode(&self, x: &[f64]) -> RawPolicy {
        let n = self.y.len();
        let mut mu = vec![vec![0.0; self.n_slots]; n];
        for i in 0..n {
            for last in 0..self.n_slots {
                let level = if self.z[i].is_empty() {
                    x[self.y[i][last]]
                } else {
                    self.z[i][last]
                        .iter()
                        .zip(&self.levels)
                        .map(|(&z, nu)| x[z] * nu)
                        .sum()
                };
                for m in &mut mu[i][..=last] {
                    *m += level;
                }
            }
        }
        RawPolicy {
            mu,
            nu: None,
            beta: None,
        }
    }

    /// Encodes a step policy given per file as `(last slot, level)`, or
    /// `None` when nothing is cached.
    pub fn encode(&self, steps: &[Option<(usize, f64)>]) -> Vec<f64> {
        let mut x = vec![0.0; self.program.num_vars()];
        for (i, step) in steps.iter().enumerate() {
            let Some((last, nu)) = *step else { continue };
            if nu <= 0.0 {
                continue;
            }
            x[self.y[i][last]] = 1.0;
            if self.z[i].is_empty() {
                continue;
            }
            let z = &self.z[i][last];
            let s = self.levels.partition_point(|&l| l < nu).min(self.levels.len() - 1);
            if s == 0 {
                x[z[0]] = (nu / self.levels[0]).min(1.0);
            } else {
                let (lo, hi) = (self.levels[s - 1], self.levels[s]);
                let theta = ((nu - lo) / (hi - lo)).clamp(0.0, 1.0);
                x[z[s]] = theta;
                x[z[s - 1]] = 1.0 - theta;
            }
        }
        x
    }
}

/// Reads `(last slot, level)` per file off a step-shaped `mu` row set.
pub fn steps_of(mu: &[Vec<f64>], zero_tol: f64) -> Vec<Option<(usize, f64)>> {
    mu.iter()
        .map(|row| {
            let on = row.iter().take_while(|&&m| m > zero_tol).count();
            (on > 0).then(|| (on - 1, row[0]))
        })
        .collect()
}

pub fn build_step_choice_program(instance: &Instance<'_>, mode: CachingMode) -> ChoiceProgram {
    assert!(matches!(mode, CachingMode::Ttl | CachingMode::Fttl));
    let tables = instance.tables;
    let n = tables.n_files();
    let n_slots = tables.n_slots();
    let ws = instance.weighted_rates();
    let costs = instance.costs;
    let delta = costs.delta();
    let b_count = instance.coverage.n_sbs() as f64;
    let levels: Vec<f64> = if mode == CachingMode::Ttl {
        vec![1.0]
    } else {
        instance
            .coverage
            .breakpoints()
            .merged(PIECE_MERGE_TOL)
            .pieces()
            .iter()
            .map(|p| p.end)
            .collect()
    };
    let utilities: Vec<f64> = levels
        .iter()
        .map(|&l| instance.coverage.utility_unchecked(l))
        .collect();

    let mut program = Program::new(format!("{}_choice", mode.name()));
    program.objective_offset = costs.c_mbs * ws.iter().sum::<f64>();
    let mut y = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    let mut cap_terms = Vec::new();
    for i in 0..n {
        let f = &tables.f[i];
        let a = &tables.a[i];
        let total_f: f64 = f.iter().sum();
        let mut y_row = Vec::with_capacity(n_slots);
        let mut z_row = Vec::with_capacity(n_slots);
        let mut f_cum = 0.0;
        let mut a_cum = 0.0;
        for last in 0..n_slots {
            f_cum += f[last];
            a_cum += a[last];
            let f_tail = (total_f - f_cum).max(0.0);
            // load change per unit weight of the option with level nu
            let option_cost = |nu: f64, g: f64| {
                costs.c_cache * b_count * ws[i] * nu * f_tail - delta * ws[i] * f_cum * g
            };
            if mode == CachingMode::Ttl {
                let id = program.add_binary(format!("y_{i}_{last}"), option_cost(1.0, utilities[0]));
                cap_terms.push((id, ws[i] * a_cum));
                y_row.push(id);
                z_row.push(Vec::new());
            } else {
                let yid = program.add_binary(format!("y_{i}_{last}"), 0.0);
                let mut zs = Vec::with_capacity(levels.len());
                for (s, (&nu, &g)) in levels.iter().zip(&utilities).enumerate() {
                    let id = program.add_var(format!("z_{i}_{last}_{s}"), 0.0, 1.0, option_cost(nu, g));
                    cap_terms.push((id, ws[i] * a_cum * nu));
                    zs.push(id);
                }
                y_row.push(yid);
                z_row.push(zs);
            }
        }
        y.push(y_row);
        z.push(z_row);
    }
    program.add_row("cap", cap_terms, RowKind::Le, instance.capacity);
    for i in 0..n {
        let terms = y[i].iter().map(|&id| (id, 1.0)).collect();
        program.add_row(format!("choose_{i}"), terms, RowKind::Le, 1.0);
    }
    if mode == CachingMode::Fttl {
        for i in 0..n {
            for last in 0..n_slots {
                let mut terms: Vec<(usize, f64)> = z[i][last].iter().map(|&id| (id, 1.0)).collect();
                terms.push((y[i][last], -1.0));
                program.add_row(format!("mix_{i}_{last}"), terms, RowKind::Le, 0.0);
            }
        }
    }
    let z = if mode == CachingMode::Ttl {
        vec![Vec::new(); n]
    } else {
        z
    };
    ChoiceProgram {
        program,
        n_slots,
        levels,
        y,
        z,
    }
}
