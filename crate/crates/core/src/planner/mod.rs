//! Network-load minimization over coded TTL caching policies.
//!
//! The load of a policy `mu` is
//!
//! ```text
//! W = c_mbs R_mbs + c_sbs R_sbs + c_cache R_cache
//! R_sbs   = sum_i ws_i sum_j F_{i,j} g(mu_{i,j})
//! R_mbs   = sum_i ws_i - R_sbs
//! R_cache = B sum_i ws_i sum_j (mu_{i,0} - mu_{i,j}) F_{i,j}
//! ```
//!
//! with `ws_i = omega_i s_i`, minimized subject to the cache capacity
//! `sum_i ws_i sum_j A_{i,j} mu_{i,j} <= C` and `mu` non-increasing in `j`.

mod choice;
mod formulation;
mod greedy;

use std::time::{Duration, Instant};

use log::{debug, warn};
use serde::{Deserialize, Serialize};

pub use choice::{build_step_choice_program, ChoiceProgram};
pub use formulation::{build_epigraph_program, EpigraphProgram, Formulation, RawPolicy, PIECE_MERGE_TOL};

use crate::coverage::CoverageDistribution;
use crate::demand::{Catalog, DemandTables};
use crate::error::{invalid, Error, Result};
use crate::lp::{BranchAndBound, LpBackend, LpStatus, MipStatus, RevisedSimplex};

/// Tolerance on the capacity constraint when validating a policy.
pub const CAPACITY_TOL: f64 = 1e-7;
/// Tolerance on `|mu_{i,j} - nu_i beta_{i,j}|` for step policies.
pub const STEP_TOL: f64 = 1e-6;
/// `mu` values at or below this are treated as "not cached".
pub const ZERO_TOL: f64 = 1e-9;

/// Cost per unit of data downloaded from the macro station, from a small
/// station, and moved into the caches by updates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub c_mbs: f64,
    pub c_sbs: f64,
    pub c_cache: f64,
}

impl CostModel {
    pub fn new(c_mbs: f64, c_sbs: f64, c_cache: f64) -> Result<Self> {
        for (field, v) in [("c_mbs", c_mbs), ("c_sbs", c_sbs), ("c_cache", c_cache)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(field, format!("{v} must be finite and non-negative")));
            }
        }
        Ok(Self { c_mbs, c_sbs, c_cache })
    }

    /// Saving per unit served by a small station instead of the macro station.
    pub fn delta(&self) -> f64 {
        self.c_mbs - self.c_sbs
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            c_mbs: self.c_mbs * factor,
            c_sbs: self.c_sbs * factor,
            c_cache: self.c_cache * factor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CachingMode {
    Ttl,
    Fttl,
    Sttl,
    Static,
}

impl CachingMode {
    pub const ALL: [CachingMode; 4] = [Self::Ttl, Self::Fttl, Self::Sttl, Self::Static];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Ttl => "ttl",
            Self::Fttl => "fttl",
            Self::Sttl => "sttl",
            Self::Static => "static",
        }
    }
}

impl std::fmt::Display for CachingMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Fraction `mu[i][j]` of file `i` held by every small station during slot
/// `j` after the file's last request. Step policies (TTL, FTTL) also carry
/// their level `nu` and on/off indicators `beta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CachingPolicy {
    pub mode: CachingMode,
    pub mu: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<Vec<bool>>>,
}

impl CachingPolicy {
    /// Caches nothing.
    pub fn zero(mode: CachingMode, n_files: usize, n_slots: usize) -> Self {
        let step = matches!(mode, CachingMode::Ttl | CachingMode::Fttl);
        Self {
            mode,
            mu: vec![vec![0.0; n_slots]; n_files],
            nu: step.then(|| vec![if mode == CachingMode::Ttl { 1.0 } else { 0.0 }; n_files]),
            beta: step.then(|| vec![vec![false; n_slots]; n_files]),
        }
    }

    pub fn n_files(&self) -> usize {
        self.mu.len()
    }

    pub fn n_slots(&self) -> usize {
        self.mu.first().map_or(0, |r| r.len())
    }

    /// Left-hand side of the capacity constraint.
    pub fn cache_usage(&self, tables: &DemandTables, catalog: &Catalog) -> f64 {
        let ws = weighted_rates(catalog);
        self.mu
            .iter()
            .zip(&tables.a)
            .zip(&ws)
            .map(|((mu, a), w)| w * mu.iter().zip(a).map(|(m, a)| m * a).sum::<f64>())
            .sum()
    }

    fn check_shape(&self, n_files: usize, n_slots: usize) -> Result<()> {
        if self.mu.len() != n_files || self.mu.iter().any(|r| r.len() != n_slots) {
            return Err(Error::Dimension(format!(
                "policy is {}x{}, expected {n_files}x{n_slots}",
                self.mu.len(),
                self.n_slots()
            )));
        }
        Ok(())
    }

    /// Range, monotonicity and mode-specific structure, without capacity.
    pub fn validate_structure(&self, n_files: usize, n_slots: usize) -> Result<()> {
        self.check_shape(n_files, n_slots)?;
        for (i, row) in self.mu.iter().enumerate() {
            for (j, &m) in row.iter().enumerate() {
                if !(-ZERO_TOL..=1.0 + ZERO_TOL).contains(&m) {
                    return Err(Error::PolicyInvariant(format!("mu[{i}][{j}] = {m} outside [0, 1]")));
                }
                if j > 0 && m > row[j - 1] + ZERO_TOL {
                    return Err(Error::PolicyInvariant(format!(
                        "mu[{i}] increases from {} to {m} at slot {j}",
                        row[j - 1]
                    )));
                }
                if self.mode == CachingMode::Static && (m - row[0]).abs() > ZERO_TOL {
                    return Err(Error::PolicyInvariant(format!(
                        "static policy changes in file {i} at slot {j}"
                    )));
                }
            }
        }
        if matches!(self.mode, CachingMode::Ttl | CachingMode::Fttl) {
            let (Some(nu), Some(beta)) = (&self.nu, &self.beta) else {
                return Err(Error::PolicyInvariant(format!(
                    "{} policy needs nu and beta",
                    self.mode
                )));
            };
            if nu.len() != n_files || beta.len() != n_files || beta.iter().any(|r| r.len() != n_slots) {
                return Err(Error::Dimension("nu/beta do not match mu".into()));
            }
            for i in 0..n_files {
                if self.mode == CachingMode::Ttl && (nu[i] - 1.0).abs() > STEP_TOL {
                    return Err(Error::PolicyInvariant(format!("TTL level nu[{i}] = {} != 1", nu[i])));
                }
                for j in 0..n_slots {
                    let expect = if beta[i][j] { nu[i] } else { 0.0 };
                    if (self.mu[i][j] - expect).abs() > STEP_TOL {
                        return Err(Error::PolicyInvariant(format!(
                            "mu[{i}][{j}] = {} is not nu * beta = {expect}",
                            self.mu[i][j]
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Every invariant including `usage <= capacity + CAPACITY_TOL`.
    pub fn validate(&self, tables: &DemandTables, catalog: &Catalog, capacity: f64) -> Result<()> {
        self.validate_structure(tables.n_files(), tables.n_slots())?;
        let usage = self.cache_usage(tables, catalog);
        if usage > capacity + CAPACITY_TOL {
            return Err(Error::PolicyInvariant(format!(
                "cache usage {usage} exceeds capacity {capacity}"
            )));
        }
        Ok(())
    }
}

/// Data rates of a policy and its cost-weighted load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadBreakdown {
    pub r_sbs: f64,
    pub r_mbs: f64,
    pub r_cache: f64,
    pub w: f64,
    /// `w` divided by the aggregate request rate.
    pub w_normalized: f64,
}

impl LoadBreakdown {
    /// Fraction of requested data served by the macro station.
    pub fn mbs_fraction(&self) -> f64 {
        let total = self.r_sbs + self.r_mbs;
        if total > 0.0 {
            self.r_mbs / total
        } else {
            0.0
        }
    }
}

fn weighted_rates(catalog: &Catalog) -> Vec<f64> {
    catalog
        .distributions()
        .iter()
        .zip(catalog.sizes())
        .map(|(d, s)| d.rate() * s)
        .collect()
}

/// Rates and load of `policy`.
pub fn evaluate_loads(
    policy: &CachingPolicy,
    tables: &DemandTables,
    cov: &CoverageDistribution,
    costs: &CostModel,
    catalog: &Catalog,
) -> Result<LoadBreakdown> {
    if tables.n_files() != catalog.n_files() {
        return Err(Error::Dimension(format!(
            "tables hold {} files, catalog {}",
            tables.n_files(),
            catalog.n_files()
        )));
    }
    policy.validate_structure(tables.n_files(), tables.n_slots())?;
    let ws = weighted_rates(catalog);
    let b = cov.n_sbs() as f64;
    let mut r_sbs = 0.0;
    let mut r_cache = 0.0;
    for i in 0..tables.n_files() {
        let mu = &policy.mu[i];
        let f = &tables.f[i];
        let mut served = 0.0;
        let mut updated = 0.0;
        for j in 0..mu.len() {
            let m = mu[j].clamp(0.0, 1.0);
            served += f[j] * cov.utility_unchecked(m);
            updated += (mu[0].clamp(0.0, 1.0) - m) * f[j];
        }
        r_sbs += ws[i] * served;
        r_cache += ws[i] * updated;
    }
    r_cache *= b;
    let total: f64 = ws.iter().sum();
    let r_mbs = total - r_sbs;
    let w = costs.c_mbs * r_mbs + costs.c_sbs * r_sbs + costs.c_cache * r_cache;
    Ok(LoadBreakdown {
        r_sbs,
        r_mbs,
        r_cache,
        w,
        w_normalized: w / catalog.aggregate_rate(),
    })
}

/// One problem instance: demand, coverage, costs and cache capacity.
#[derive(Debug, Clone, Copy)]
pub struct Instance<'a> {
    pub catalog: &'a Catalog,
    pub tables: &'a DemandTables,
    pub coverage: &'a CoverageDistribution,
    pub costs: CostModel,
    pub capacity: f64,
}

impl<'a> Instance<'a> {
    pub fn new(
        catalog: &'a Catalog,
        tables: &'a DemandTables,
        coverage: &'a CoverageDistribution,
        costs: CostModel,
        capacity: f64,
    ) -> Result<Self> {
        if tables.n_files() != catalog.n_files() {
            return Err(Error::Dimension(format!(
                "tables hold {} files, catalog {}",
                tables.n_files(),
                catalog.n_files()
            )));
        }
        if !(capacity >= 0.0 && capacity.is_finite()) {
            return Err(invalid("capacity", format!("{capacity} must be finite and non-negative")));
        }
        Ok(Self {
            catalog,
            tables,
            coverage,
            costs,
            capacity,
        })
    }

    /// `omega_i s_i` per file.
    pub fn weighted_rates(&self) -> Vec<f64> {
        weighted_rates(self.catalog)
    }

    pub fn evaluate(&self, policy: &CachingPolicy) -> Result<LoadBreakdown> {
        evaluate_loads(policy, self.tables, self.coverage, &self.costs, self.catalog)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum SolverStatus {
    Optimal,
    /// Best policy found within the search budget, with its proven
    /// relative gap.
    Feasible { gap: f64 },
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub policy: CachingPolicy,
    pub loads: LoadBreakdown,
    /// Network load `W` of the returned policy.
    pub objective_value: f64,
    pub solver_status: SolverStatus,
    /// Wall-clock seconds.
    pub solve_time: f64,
    /// Branch-and-bound nodes (zero for LP and greedy solves).
    pub nodes: usize,
}

/// How TTL and FTTL step policies are modelled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepModel {
    /// `mu` with binary on/off indicators `beta` and level `nu`, as in
    /// [`build_epigraph_program`].
    Indicator,
    /// One binary per file and last cached slot, see
    /// [`build_step_choice_program`].
    #[default]
    Choice,
}

#[derive(Debug, Clone)]
pub struct PlannerOptions {
    pub formulation: Formulation,
    pub step_model: StepModel,
    /// Relative optimality gap at which branch-and-bound stops.
    pub gap_tol: f64,
    pub node_limit: usize,
    pub time_limit: Option<Duration>,
}

impl Default for PlannerOptions {
    fn default() -> Self {
        Self {
            formulation: Formulation::Segments,
            step_model: StepModel::Choice,
            gap_tol: 1e-4,
            node_limit: 1_000_000,
            time_limit: None,
        }
    }
}

/// Solves instances in any caching mode with the bundled simplex and
/// branch-and-bound.
#[derive(Debug, Clone, Default)]
pub struct Planner {
    pub options: PlannerOptions,
    pub backend: RevisedSimplex,
}

impl Planner {
    pub fn new(options: PlannerOptions) -> Self {
        Self {
            options,
            backend: RevisedSimplex::default(),
        }
    }

    pub fn solve(&self, instance: &Instance<'_>, mode: CachingMode) -> Result<SolveReport> {
        let started = Instant::now();
        let n = instance.tables.n_files();
        let k1 = instance.tables.n_slots();
        if instance.costs.delta() <= 0.0 {
            // Caching can only add cost: serving from a small station saves
            // nothing and updates are never negative.
            let policy = CachingPolicy::zero(mode, n, k1);
            return finish(instance, policy, SolverStatus::Optimal, started, 0);
        }
        match mode {
            CachingMode::Static => {
                let policy = greedy::solve_static_policy(instance);
                finish(instance, policy, SolverStatus::Optimal, started, 0)
            }
            CachingMode::Sttl => self.solve_lp(instance, mode, started),
            CachingMode::Ttl => self.solve_mip(instance, mode, started, &[]),
            CachingMode::Fttl => {
                // every TTL policy is an FTTL policy, so its optimum is a
                // valid starting incumbent
                let ttl = self.solve_mip(instance, CachingMode::Ttl, Instant::now(), &[])?;
                self.solve_mip(instance, mode, started, &[ttl.policy.mu])
            }
        }
    }

    /// Static mode through the LP rather than the knapsack greedy.
    pub fn solve_static_lp(&self, instance: &Instance<'_>) -> Result<SolveReport> {
        self.solve_lp(instance, CachingMode::Static, Instant::now())
    }

    fn solve_lp(&self, instance: &Instance<'_>, mode: CachingMode, started: Instant) -> Result<SolveReport> {
        let built = build_epigraph_program(instance, mode, self.options.formulation);
        let sol = self
            .backend
            .solve(&built.program)
            .map_err(|e| Error::Solver(e.to_string()))?;
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => {
                return Err(Error::Internal(
                    "load minimization reported infeasible although caching nothing is feasible".into(),
                ))
            }
            LpStatus::Unbounded => return Err(Error::Internal("load minimization reported unbounded".into())),
            LpStatus::IterationLimit => return Err(Error::Solver("simplex iteration limit reached".into())),
        }
        debug!(
            "{mode} lp: {} vars, {} rows, {} iterations",
            built.program.num_vars(),
            built.program.num_rows(),
            sol.iterations
        );
        let policy = canonicalize(built.decode(&sol.x), mode);
        let report = finish(instance, policy, SolverStatus::Optimal, started, 0)?;
        check_objective(&report, sol.objective + built.program.objective_offset);
        Ok(report)
    }

    /// Branch-and-bound for step policies; `extra_seeds` are feasible step
    /// policies offered as incumbents.
    fn solve_mip(
        &self,
        instance: &Instance<'_>,
        mode: CachingMode,
        started: Instant,
        extra_seeds: &[Vec<Vec<f64>>],
    ) -> Result<SolveReport> {
        let n = instance.tables.n_files();
        let k1 = instance.tables.n_slots();
        let zero = vec![vec![0.0; k1]; n];
        let stat = greedy::solve_static_policy(instance);
        let stat_mu: Vec<Vec<f64>> = match mode {
            // whole files only
            CachingMode::Ttl => stat
                .mu
                .iter()
                .map(|r| r.iter().map(|&m| if m >= 1.0 - ZERO_TOL { 1.0 } else { 0.0 }).collect())
                .collect(),
            _ => stat.mu,
        };

        let mut bnb = BranchAndBound::new(self.backend.clone());
        bnb.gap_tol = self.options.gap_tol;
        bnb.node_limit = self.options.node_limit;
        bnb.time_limit = self.options.time_limit;
        let (program, sol, raw) = match self.options.step_model {
            StepModel::Indicator => {
                let built = build_epigraph_program(instance, mode, self.options.formulation);
                let mut seeds = vec![built.encode(&zero, None, None), built.encode(&stat_mu, None, None)];
                seeds.extend(extra_seeds.iter().map(|mu| built.encode(mu, None, None)));
                let sol = bnb.solve(&built.program, &seeds);
                let raw = sol.as_ref().map(|s| built.decode(&s.x)).ok();
                (built.program, sol, raw)
            }
            StepModel::Choice => {
                let built = build_step_choice_program(instance, mode);
                let mut seeds = vec![
                    built.encode(&choice::steps_of(&zero, ZERO_TOL)),
                    built.encode(&choice::steps_of(&stat_mu, ZERO_TOL)),
                ];
                seeds.extend(extra_seeds.iter().map(|mu| built.encode(&choice::steps_of(mu, ZERO_TOL))));
                let sol = bnb.solve(&built.program, &seeds);
                let raw = sol.as_ref().map(|s| built.decode(&s.x)).ok();
                (built.program, sol, raw)
            }
        };
        let sol = sol.map_err(|e| Error::Solver(e.to_string()))?;
        debug!(
            "{mode} milp: {} vars ({} binary), {} rows, {} nodes, status {:?}",
            program.num_vars(),
            program.num_integer(),
            program.num_rows(),
            sol.nodes,
            sol.status
        );
        let status = match sol.status {
            MipStatus::Optimal => SolverStatus::Optimal,
            MipStatus::Feasible { gap } => {
                warn!("{mode} search stopped with relative gap {gap:.3e}");
                SolverStatus::Feasible { gap }
            }
            MipStatus::Infeasible | MipStatus::Unbounded => {
                return Err(Error::Internal(format!(
                    "{mode} search ended {:?} although caching nothing is feasible",
                    sol.status
                )))
            }
        };
        let raw = raw.ok_or_else(|| Error::Internal("missing solution".into()))?;
        let policy = canonicalize(raw, mode);
        let report = finish(instance, policy, status, started, sol.nodes)?;
        check_objective(&report, sol.objective);
        Ok(report)
    }
}

fn check_objective(report: &SolveReport, program_objective: f64) {
    let diff = (report.objective_value - program_objective).abs();
    if diff > 1e-6 * report.objective_value.abs().max(1.0) {
        warn!(
            "re-evaluated load {} differs from program objective {program_objective}",
            report.objective_value
        );
    }
}

/// Clamps to `[0, 1]`, repairs monotonicity by running minimum, and for
/// step policies snaps `mu` to `nu * beta` with `beta` the indicator of
/// `mu > ZERO_TOL`.
fn canonicalize(raw: RawPolicy, mode: CachingMode) -> CachingPolicy {
    let mut mu = raw.mu;
    for row in &mut mu {
        let mut cap: f64 = 1.0;
        for m in row.iter_mut() {
            let v = m.clamp(0.0, 1.0);
            let v = if v <= ZERO_TOL { 0.0 } else { v };
            cap = cap.min(v);
            *m = cap;
        }
    }
    match mode {
        CachingMode::Ttl | CachingMode::Fttl => {
            let mut nu = Vec::with_capacity(mu.len());
            let mut beta = Vec::with_capacity(mu.len());
            for row in &mut mu {
                let level = if mode == CachingMode::Ttl { 1.0 } else { row[0] };
                let on: Vec<bool> = row.iter().map(|&m| m > ZERO_TOL).collect();
                for (m, &b) in row.iter_mut().zip(&on) {
                    *m = if b { level } else { 0.0 };
                }
                nu.push(if mode == CachingMode::Ttl || on[0] { level } else { 0.0 });
                beta.push(on);
            }
            CachingPolicy {
                mode,
                mu,
                nu: Some(nu),
                beta: Some(beta),
            }
        }
        CachingMode::Static => {
            for row in &mut mu {
                let v = row[0];
                row.iter_mut().for_each(|m| *m = v);
            }
            CachingPolicy {
                mode,
                mu,
                nu: None,
                beta: None,
            }
        }
        CachingMode::Sttl => CachingPolicy {
            mode,
            mu,
            nu: None,
            beta: None,
        },
    }
}

fn finish(
    instance: &Instance<'_>,
    policy: CachingPolicy,
    status: SolverStatus,
    started: Instant,
    nodes: usize,
) -> Result<SolveReport> {
    policy.validate(instance.tables, instance.catalog, instance.capacity)?;
    let loads = instance.evaluate(&policy)?;
    Ok(SolveReport {
        policy,
        loads,
        objective_value: loads.w,
        solver_status: status,
        solve_time: started.elapsed().as_secs_f64(),
        nodes,
    })
}

fn solve_mode(
    tables: &DemandTables,
    cov: &CoverageDistribution,
    costs: &CostModel,
    catalog: &Catalog,
    cache_capacity: f64,
    mode: CachingMode,
) -> Result<SolveReport> {
    let inst = Instance::new(catalog, tables, cov, *costs, cache_capacity)?;
    Planner::default().solve(&inst, mode)
}

/// Optimal stepwise-decreasing policy (a linear program).
pub fn solve_sttl(
    tables: &DemandTables,
    cov: &CoverageDistribution,
    costs: &CostModel,
    catalog: &Catalog,
    cache_capacity: f64,
) -> Result<SolveReport> {
    solve_mode(tables, cov, costs, catalog, cache_capacity, CachingMode::Sttl)
}

/// Optimal fixed-fraction TTL policy (branch-and-bound, default gap 1e-4).
pub fn solve_fttl(
    tables: &DemandTables,
    cov: &CoverageDistribution,
    costs: &CostModel,
    catalog: &Catalog,
    cache_capacity: f64,
) -> Result<SolveReport> {
    solve_mode(tables, cov, costs, catalog, cache_capacity, CachingMode::Fttl)
}

/// Optimal whole-file TTL policy.
pub fn solve_ttl(
    tables: &DemandTables,
    cov: &CoverageDistribution,
    costs: &CostModel,
    catalog: &Catalog,
    cache_capacity: f64,
) -> Result<SolveReport> {
    solve_mode(tables, cov, costs, catalog, cache_capacity, CachingMode::Ttl)
}

/// Optimal static policy; file sizes may differ.
pub fn solve_static(
    tables: &DemandTables,
    cov: &CoverageDistribution,
    costs: &CostModel,
    catalog: &Catalog,
    cache_capacity: f64,
) -> Result<SolveReport> {
    solve_mode(tables, cov, costs, catalog, cache_capacity, CachingMode::Static)
}

/// Knapsack greedy for a single cache with zero update cost and a
/// non-increasing hazard ratio; errors with `Error::Mode` otherwise.
pub fn solve_single_cache_greedy(
    tables: &DemandTables,
    costs: &CostModel,
    catalog: &Catalog,
    cache_capacity: f64,
) -> Result<SolveReport> {
    let started = Instant::now();
    let cov = CoverageDistribution::single_cache();
    let inst = Instance::new(catalog, tables, &cov, *costs, cache_capacity)?;
    let policy = greedy::solve_single_cache_policy(&inst)?;
    finish(&inst, policy, SolverStatus::Optimal, started, 0)
}
