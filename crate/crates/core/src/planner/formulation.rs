//! Construction of the load-minimization program.
//!
//! All three formulations share the capacity row, the monotonicity rows and,
//! for TTL/FTTL, the step-policy rows. They differ only in how the concave
//! utility `g(mu)` enters the objective:
//!
//! * `Epigraph`: one variable `xi_{b,i,j}` in `[0, 1]` per coverage count `b`
//!   with `xi_{b,i,j} <= b mu_{i,j}`;
//! * `Tangent`: one variable `eta_{i,j}` per slot, bounded above by every
//!   linear piece of `g`;
//! * `Segments`: `mu_{i,j}` is split into increments `delta_{i,j,s}` over the
//!   linear pieces of `g` and eliminated; `g(mu)` is then the slope-weighted
//!   sum of the increments.

use serde::{Deserialize, Serialize};

use super::{CachingMode, Instance};
use crate::coverage::PiecewiseLinear;
use crate::lp::{Program, RowKind};

/// Relative slope tolerance below which neighbouring pieces of `g` are
/// merged before building the tangent and segment formulations.
pub const PIECE_MERGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formulation {
    Epigraph,
    Tangent,
    #[default]
    Segments,
}

/// Program variables making up one `mu_{i,j}`.
#[derive(Debug, Clone)]
struct SlotVars {
    mu: Option<usize>,
    segments: Vec<usize>,
    xi: Vec<usize>,
    eta: Option<usize>,
}

/// A built program together with the map between policies and program
/// variables.
#[derive(Debug, Clone)]
pub struct EpigraphProgram {
    pub program: Program,
    mode: CachingMode,
    formulation: Formulation,
    n_slots: usize,
    slots: Vec<Vec<SlotVars>>,
    nu: Option<Vec<usize>>,
    beta: Option<Vec<Vec<usize>>>,
    pieces: PiecewiseLinear,
    gamma: Vec<f64>,
}

/// Decoded program solution, before canonicalization.
#[derive(Debug, Clone)]
pub struct RawPolicy {
    pub mu: Vec<Vec<f64>>,
    pub nu: Option<Vec<f64>>,
    pub beta: Option<Vec<Vec<f64>>>,
}

impl EpigraphProgram {
    pub fn mode(&self) -> CachingMode {
        self.mode
    }

    pub fn formulation(&self) -> Formulation {
        self.formulation
    }

    /// Reads `mu` (expanded to all slots), `nu` and `beta` from `x`.
    pub fn decode(&self, x: &[f64]) -> RawPolicy {
        let mu = self
            .slots
            .iter()
            .map(|row| {
                let vals: Vec<f64> = row
                    .iter()
                    .map(|v| match v.mu {
                        Some(m) => x[m],
                        None => v.segments.iter().map(|&d| x[d]).sum(),
                    })
                    .collect();
                if vals.len() == self.n_slots {
                    vals
                } else {
                    vec![vals[0]; self.n_slots]
                }
            })
            .collect();
        RawPolicy {
            mu,
            nu: self.nu.as_ref().map(|nu| nu.iter().map(|&v| x[v]).collect()),
            beta: self
                .beta
                .as_ref()
                .map(|b| b.iter().map(|row| row.iter().map(|&v| x[v]).collect()).collect()),
        }
    }

    /// Maps a policy onto program variables, filling the utility variables
    /// at their tightest feasible values. `mu` must have one column per
    /// slot of the tables the program was built from.
    pub fn encode(&self, mu: &[Vec<f64>], nu: Option<&[f64]>, beta: Option<&[Vec<bool>]>) -> Vec<f64> {
        let mut x = vec![0.0; self.program.num_vars()];
        for (i, row) in self.slots.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let m = mu[i][j];
                if let Some(id) = v.mu {
                    x[id] = m;
                }
                let mut left = m;
                for (&d, piece) in v.segments.iter().zip(self.pieces.pieces()) {
                    let take = left.min(piece.length()).max(0.0);
                    x[d] = take;
                    left -= take;
                }
                for (b, &id) in v.xi.iter().enumerate() {
                    x[id] = (b as f64 * m).min(1.0);
                }
                if let Some(id) = v.eta {
                    x[id] = self.pieces.evaluate(m);
                }
            }
        }
        if let Some(ids) = &self.nu {
            for (i, &id) in ids.iter().enumerate() {
                x[id] = nu.map_or(mu[i][0], |nu| nu[i]);
            }
        }
        if let Some(ids) = &self.beta {
            for (i, row) in ids.iter().enumerate() {
                for (j, &id) in row.iter().enumerate() {
                    let on = beta.map_or(mu[i][j] > 0.0, |b| b[i][j]);
                    x[id] = if on { 1.0 } else { 0.0 };
                }
            }
        }
        x
    }

    /// `g(mu_{i,j})` as represented by the program's utility variables.
    fn utility_terms(&self, v: &SlotVars, weight: f64) -> Vec<(usize, f64)> {
        let mut terms = Vec::new();
        for (&d, piece) in v.segments.iter().zip(self.pieces.pieces()) {
            terms.push((d, weight * piece.slope));
        }
        for (b, &id) in v.xi.iter().enumerate() {
            terms.push((id, weight * self.gamma[b]));
        }
        if let Some(id) = v.eta {
            terms.push((id, weight));
        }
        terms
    }
}

fn mu_terms(v: &SlotVars, coef: f64) -> Vec<(usize, f64)> {
    match v.mu {
        Some(m) => vec![(m, coef)],
        None => v.segments.iter().map(|&d| (d, coef)).collect(),
    }
}

/// Builds the program minimizing the network load of `instance` under
/// `mode`; its objective (offset included) equals `W` at every feasible
/// point where the utility variables are tight.
///
/// Static mode collapses the slots into one (the policy is constant), so
/// its program has a single `mu` per file.
pub fn build_epigraph_program(instance: &Instance<'_>, mode: CachingMode, formulation: Formulation) -> EpigraphProgram {
    let tables = instance.tables;
    let n = tables.n_files();
    let n_slots = tables.n_slots();
    let ws = instance.weighted_rates();
    let costs = instance.costs;
    let delta = costs.c_mbs - costs.c_sbs;
    let b_count = instance.coverage.n_sbs() as f64;
    let gamma = instance.coverage.gamma().to_vec();
    let pieces = instance.coverage.breakpoints().merged(PIECE_MERGE_TOL);

    let (f, a): (Vec<Vec<f64>>, Vec<Vec<f64>>) = if mode == CachingMode::Static {
        (
            tables.f.iter().map(|r| vec![r.iter().sum()]).collect(),
            tables.a.iter().map(|r| vec![r.iter().sum()]).collect(),
        )
    } else {
        (tables.f.clone(), tables.a.clone())
    };
    let slots_built = f[0].len();

    let mut program = Program::new(format!("{}_{:?}", mode.name(), formulation).to_lowercase());
    program.objective_offset = costs.c_mbs * ws.iter().sum::<f64>();

    let mut slots: Vec<Vec<SlotVars>> = Vec::with_capacity(n);
    for i in 0..n {
        let total_f: f64 = f[i].iter().sum();
        let mut row = Vec::with_capacity(slots_built);
        for j in 0..slots_built {
            let update = if j == 0 {
                costs.c_cache * b_count * ws[i] * (total_f - f[i][0])
            } else {
                -costs.c_cache * b_count * ws[i] * f[i][j]
            };
            let gain = delta * ws[i] * f[i][j];
            let mut v = SlotVars {
                mu: None,
                segments: Vec::new(),
                xi: Vec::new(),
                eta: None,
            };
            match formulation {
                Formulation::Segments => {
                    for (s, piece) in pieces.pieces().iter().enumerate() {
                        let id = program.add_var(
                            format!("d_{i}_{j}_{s}"),
                            0.0,
                            piece.length(),
                            update - gain * piece.slope,
                        );
                        v.segments.push(id);
                    }
                }
                Formulation::Epigraph => {
                    v.mu = Some(program.add_var(format!("mu_{i}_{j}"), 0.0, 1.0, update));
                    for (b, g) in gamma.iter().enumerate() {
                        v.xi.push(program.add_var(format!("xi_{b}_{i}_{j}"), 0.0, 1.0, -gain * g));
                    }
                }
                Formulation::Tangent => {
                    v.mu = Some(program.add_var(format!("mu_{i}_{j}"), 0.0, 1.0, update));
                    v.eta = Some(program.add_var(
                        format!("eta_{i}_{j}"),
                        0.0,
                        pieces.full_value(),
                        -gain,
                    ));
                }
            }
            row.push(v);
        }
        slots.push(row);
    }

    let mut cap_terms = Vec::new();
    for i in 0..n {
        for j in 0..slots_built {
            cap_terms.extend(mu_terms(&slots[i][j], ws[i] * a[i][j]));
        }
    }
    program.add_row("cap", cap_terms, RowKind::Le, instance.capacity);

    for i in 0..n {
        for j in 1..slots_built {
            let mut terms = mu_terms(&slots[i][j], 1.0);
            terms.extend(mu_terms(&slots[i][j - 1], -1.0));
            program.add_row(format!("mono_{i}_{j}"), terms, RowKind::Le, 0.0);
        }
    }

    for i in 0..n {
        for j in 0..slots_built {
            let v = &slots[i][j];
            for (b, &id) in v.xi.iter().enumerate() {
                let mu = v.mu.expect("epigraph slots carry mu");
                program.add_row(
                    format!("xi_{b}_{i}_{j}"),
                    vec![(id, 1.0), (mu, -(b as f64))],
                    RowKind::Le,
                    0.0,
                );
            }
            if let Some(eta) = v.eta {
                let mu = v.mu.expect("tangent slots carry mu");
                for (s, piece) in pieces.pieces().iter().enumerate() {
                    // eta <= value_at_start + slope (mu - start)
                    program.add_row(
                        format!("tan_{i}_{j}_{s}"),
                        vec![(eta, 1.0), (mu, -piece.slope)],
                        RowKind::Le,
                        piece.value_at_start - piece.slope * piece.start,
                    );
                }
            }
        }
    }

    let mut built = EpigraphProgram {
        program,
        mode,
        formulation,
        n_slots,
        slots,
        nu: None,
        beta: None,
        pieces,
        gamma,
    };
    if matches!(mode, CachingMode::Ttl | CachingMode::Fttl) {
        add_step_rows(&mut built, mode == CachingMode::Ttl);
    }
    built
}

/// Rows forcing `mu_{i,j} = nu_i beta_{i,j}` with binary `beta`, plus two
/// families of valid cuts: `beta` is non-increasing in `j`, and
/// `g(mu_{i,j}) <= g(1) beta_{i,j}`. Both hold for the canonical `beta`
/// (indicator of `mu > 0`) of every feasible step policy.
fn add_step_rows(built: &mut EpigraphProgram, ttl: bool) {
    let n = built.slots.len();
    let k1 = built.slots[0].len();
    let full = built.pieces.full_value();
    let nu: Option<Vec<usize>> = (!ttl).then(|| {
        (0..n)
            .map(|i| built.program.add_var(format!("nu_{i}"), 0.0, 1.0, 0.0))
            .collect()
    });
    let mut beta = Vec::with_capacity(n);
    for i in 0..n {
        let row: Vec<usize> = (0..k1)
            .map(|j| built.program.add_binary(format!("beta_{i}_{j}"), 0.0))
            .collect();
        beta.push(row);
    }
    for i in 0..n {
        for j in 0..k1 {
            let v = built.slots[i][j].clone();
            let b = beta[i][j];
            // mu <= beta; the lower half of that constraint is the bound mu >= 0
            let mut terms = mu_terms(&v, 1.0);
            terms.push((b, -1.0));
            built.program.add_row(format!("on_{i}_{j}"), terms, RowKind::Le, 0.0);
            match &nu {
                Some(nu) => {
                    // nu - (1 - beta) <= mu <= nu + (1 - beta)
                    let mut lo = mu_terms(&v, -1.0);
                    lo.push((nu[i], 1.0));
                    lo.push((b, 1.0));
                    built.program.add_row(format!("lo_{i}_{j}"), lo, RowKind::Le, 1.0);
                    let mut hi = mu_terms(&v, 1.0);
                    hi.push((nu[i], -1.0));
                    hi.push((b, 1.0));
                    built.program.add_row(format!("hi_{i}_{j}"), hi, RowKind::Le, 1.0);
                }
                None => {
                    // nu = 1: beta <= mu; the upper half is implied by mu <= 1
                    let mut lo = mu_terms(&v, -1.0);
                    lo.push((b, 1.0));
                    built.program.add_row(format!("lo_{i}_{j}"), lo, RowKind::Le, 0.0);
                }
            }
            if j > 0 {
                built.program.add_row(
                    format!("ord_{i}_{j}"),
                    vec![(b, 1.0), (beta[i][j - 1], -1.0)],
                    RowKind::Le,
                    0.0,
                );
            }
            let mut util = built.utility_terms(&v, 1.0);
            util.push((b, -full));
            built.program.add_row(format!("util_{i}_{j}"), util, RowKind::Le, 0.0);
        }
    }
    built.nu = nu;
    built.beta = Some(beta);
}
