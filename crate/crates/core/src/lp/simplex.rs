//! Bounded-variable primal revised simplex.
//!
//! Rows are carried in computational form `A x - r = 0` where each row
//! logical `r_i` inherits the row bounds, so every variable is boxed and the
//! all-logical basis is always available. The basis inverse is kept in
//! product form (an eta file over `B0 = -I`) and rebuilt periodically.
//! Phase 1 minimizes the sum of bound violations of the basic variables
//! (composite costs, first-breakpoint ratio test); phase 2 uses a Harris
//! two-pass ratio test, and Bland's rule takes over while stalling.

use log::debug;

use super::{Basis, LpBackend, LpError, LpSolution, LpStatus, Program, RowKind, VarStatus};

const NONE: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct RevisedSimplex {
    pub primal_tol: f64,
    pub dual_tol: f64,
    pub pivot_tol: f64,
    pub refactor_interval: usize,
    /// `None` picks a limit proportional to the problem size.
    pub max_iterations: Option<usize>,
}

impl Default for RevisedSimplex {
    fn default() -> Self {
        Self {
            primal_tol: 1e-9,
            dual_tol: 1e-9,
            pivot_tol: 1e-9,
            refactor_interval: 100,
            max_iterations: None,
        }
    }
}

impl LpBackend for RevisedSimplex {
    fn solve_with(
        &self,
        program: &Program,
        bounds: Option<&[(f64, f64)]>,
        warm_start: Option<&Basis>,
    ) -> Result<LpSolution, LpError> {
        let mut state = State::new(self, program, bounds)?;
        state.start(warm_start);
        state.run()
    }
}

struct Csc {
    start: Vec<usize>,
    rows: Vec<usize>,
    vals: Vec<f64>,
}

struct Eta {
    pivot: usize,
    pivot_value: f64,
    others: Vec<(usize, f64)>,
}

/// `B^-1 = E_k ... E_1 (-I)`.
#[derive(Default)]
struct Factor {
    etas: Vec<Eta>,
}

impl Factor {
    fn ftran(&self, v: &mut [f64]) {
        for x in v.iter_mut() {
            *x = -*x;
        }
        for eta in &self.etas {
            let xr = v[eta.pivot];
            if xr != 0.0 {
                v[eta.pivot] = xr * eta.pivot_value;
                for &(i, e) in &eta.others {
                    v[i] += e * xr;
                }
            }
        }
    }

    fn btran(&self, c: &mut [f64]) {
        for eta in self.etas.iter().rev() {
            let mut s = c[eta.pivot] * eta.pivot_value;
            for &(i, e) in &eta.others {
                s += c[i] * e;
            }
            c[eta.pivot] = s;
        }
        for x in c.iter_mut() {
            *x = -*x;
        }
    }

    /// Appends the eta that swaps column `alpha` (= B^-1 a_q) in at `pivot`.
    fn push(&mut self, alpha: &[f64], pivot: usize) {
        let ar = alpha[pivot];
        let others = alpha
            .iter()
            .enumerate()
            .filter(|&(i, &a)| i != pivot && a != 0.0)
            .map(|(i, &a)| (i, -a / ar))
            .collect();
        self.etas.push(Eta {
            pivot,
            pivot_value: 1.0 / ar,
            others,
        });
    }
}

enum Step {
    Continue,
    Optimal,
    Infeasible,
    Unbounded,
}

struct State<'a> {
    opts: &'a RevisedSimplex,
    m: usize,
    n: usize,
    a: Csc,
    cost: Vec<f64>,
    cost_scale: f64,
    lo: Vec<f64>,
    up: Vec<f64>,
    x: Vec<f64>,
    status: Vec<VarStatus>,
    head: Vec<usize>,
    factor: Factor,
    since_refactor: usize,
    iterations: usize,
    degenerate_run: usize,
    bland: bool,
    // scratch
    work: Vec<f64>,
    duals: Vec<f64>,
}

impl<'a> State<'a> {
    fn new(opts: &'a RevisedSimplex, program: &Program, bounds: Option<&[(f64, f64)]>) -> Result<Self, LpError> {
        let n = program.vars.len();
        let m = program.rows.len();
        if let Some(b) = bounds {
            if b.len() != n {
                return Err(LpError::Malformed(format!("{} bounds for {n} variables", b.len())));
            }
        }
        let mut counts = vec![0usize; n];
        for (ri, row) in program.rows.iter().enumerate() {
            for &(j, v) in &row.terms {
                if j >= n {
                    return Err(LpError::Malformed(format!("row {ri} references variable {j}")));
                }
                if !v.is_finite() {
                    return Err(LpError::Malformed(format!("row {ri} has a non-finite coefficient")));
                }
                counts[j] += 1;
            }
        }
        let mut start = vec![0usize; n + 1];
        for j in 0..n {
            start[j + 1] = start[j] + counts[j];
        }
        let nnz = start[n];
        let mut fill = start.clone();
        let mut rows = vec![0usize; nnz];
        let mut vals = vec![0f64; nnz];
        for (ri, row) in program.rows.iter().enumerate() {
            for &(j, v) in &row.terms {
                rows[fill[j]] = ri;
                vals[fill[j]] = v;
                fill[j] += 1;
            }
        }

        let mut lo = Vec::with_capacity(n + m);
        let mut up = Vec::with_capacity(n + m);
        for (j, var) in program.vars.iter().enumerate() {
            let (l, u) = bounds.map(|b| b[j]).unwrap_or((var.lower, var.upper));
            if l > u || l.is_nan() || u.is_nan() || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return Err(LpError::Malformed(format!("variable `{}` has bounds [{l}, {u}]", var.name)));
            }
            lo.push(l);
            up.push(u);
        }
        for row in &program.rows {
            let (l, u) = match row.kind {
                RowKind::Le => (f64::NEG_INFINITY, row.rhs),
                RowKind::Ge => (row.rhs, f64::INFINITY),
                RowKind::Eq => (row.rhs, row.rhs),
            };
            lo.push(l);
            up.push(u);
        }

        let max_cost = program.vars.iter().map(|v| v.cost.abs()).fold(0.0, f64::max);
        let cost_scale = if max_cost > 0.0 { max_cost } else { 1.0 };
        let mut cost: Vec<f64> = program.vars.iter().map(|v| v.cost / cost_scale).collect();
        cost.resize(n + m, 0.0);

        Ok(Self {
            opts,
            m,
            n,
            a: Csc { start, rows, vals },
            cost,
            cost_scale,
            lo,
            up,
            x: vec![0.0; n + m],
            status: vec![VarStatus::AtLower; n + m],
            head: vec![NONE; m],
            factor: Factor::default(),
            since_refactor: 0,
            iterations: 0,
            degenerate_run: 0,
            bland: false,
            work: vec![0.0; m],
            duals: vec![0.0; m],
        })
    }

    fn place_nonbasic(&mut self, j: usize, hint: VarStatus) {
        let (l, u) = (self.lo[j], self.up[j]);
        let status = match hint {
            VarStatus::AtUpper if u.is_finite() => VarStatus::AtUpper,
            _ if l.is_finite() => VarStatus::AtLower,
            _ if u.is_finite() => VarStatus::AtUpper,
            _ => VarStatus::Zero,
        };
        self.status[j] = status;
        self.x[j] = match status {
            VarStatus::AtLower => l,
            VarStatus::AtUpper => u,
            _ => 0.0,
        };
    }

    fn start(&mut self, warm: Option<&Basis>) {
        let total = self.n + self.m;
        let usable = warm.filter(|b| {
            b.statuses.len() == total
                && b.statuses.iter().filter(|s| **s == VarStatus::Basic).count() == self.m
        });
        match usable {
            Some(basis) => {
                let mut p = 0;
                for j in 0..total {
                    if basis.statuses[j] == VarStatus::Basic {
                        self.status[j] = VarStatus::Basic;
                        self.head[p] = j;
                        p += 1;
                    } else {
                        self.place_nonbasic(j, basis.statuses[j]);
                    }
                }
            }
            None => {
                for j in 0..self.n {
                    self.place_nonbasic(j, VarStatus::AtLower);
                }
                for i in 0..self.m {
                    self.status[self.n + i] = VarStatus::Basic;
                    self.head[i] = self.n + i;
                }
            }
        }
        self.reinvert();
    }

    fn nnz(&self, j: usize) -> usize {
        if j < self.n {
            self.a.start[j + 1] - self.a.start[j]
        } else {
            1
        }
    }

    fn scatter_column(&self, j: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        if j < self.n {
            for k in self.a.start[j]..self.a.start[j + 1] {
                out[self.a.rows[k]] = self.a.vals[k];
            }
        } else {
            out[j - self.n] = -1.0;
        }
    }

    /// `y . a_j`
    fn dot_column(&self, y: &[f64], j: usize) -> f64 {
        if j < self.n {
            (self.a.start[j]..self.a.start[j + 1])
                .map(|k| y[self.a.rows[k]] * self.a.vals[k])
                .sum()
        } else {
            -y[j - self.n]
        }
    }

    /// Rebuilds the eta file for the current basic set. Structural columns
    /// that turn out dependent are dropped in favour of row logicals.
    fn reinvert(&mut self) {
        self.factor.etas.clear();
        self.since_refactor = 0;
        let m = self.m;
        let mut occupied = vec![false; m];
        let mut new_head = vec![NONE; m];
        let mut structurals = Vec::new();
        for &v in &self.head {
            if v == NONE {
                continue;
            }
            if v >= self.n {
                let r = v - self.n;
                occupied[r] = true;
                new_head[r] = v;
            } else {
                structurals.push(v);
            }
        }
        structurals.sort_by_key(|&j| (self.nnz(j), j));
        let mut alpha = vec![0.0; m];
        for q in structurals {
            self.scatter_column(q, &mut alpha);
            self.factor.ftran(&mut alpha);
            let mut best = NONE;
            let mut best_abs = 0.0;
            for (r, &a) in alpha.iter().enumerate() {
                if !occupied[r] && a.abs() > best_abs {
                    best_abs = a.abs();
                    best = r;
                }
            }
            if best == NONE || best_abs < 1e-9 {
                let hint = if self.up[q].is_finite() && self.x[q] > 0.5 * (self.lo[q] + self.up[q]) {
                    VarStatus::AtUpper
                } else {
                    VarStatus::AtLower
                };
                self.place_nonbasic(q, hint);
                debug!("reinvert: dropped dependent column {q}");
                continue;
            }
            self.factor.push(&alpha, best);
            occupied[best] = true;
            new_head[best] = q;
        }
        for r in 0..m {
            if !occupied[r] {
                new_head[r] = self.n + r;
                self.status[self.n + r] = VarStatus::Basic;
            }
        }
        self.head = new_head;
        self.recompute_basic_values();
    }

    fn recompute_basic_values(&mut self) {
        let mut v = vec![0.0; self.m];
        for j in 0..self.n + self.m {
            if self.status[j] == VarStatus::Basic {
                continue;
            }
            let xj = self.x[j];
            if xj == 0.0 {
                continue;
            }
            if j < self.n {
                for k in self.a.start[j]..self.a.start[j + 1] {
                    v[self.a.rows[k]] -= self.a.vals[k] * xj;
                }
            } else {
                v[j - self.n] += xj;
            }
        }
        self.factor.ftran(&mut v);
        for (p, &j) in self.head.iter().enumerate() {
            self.x[j] = v[p];
        }
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let tol = self.opts.primal_tol;
        if self.x[j] < self.lo[j] - tol {
            -1.0
        } else if self.x[j] > self.up[j] + tol {
            1.0
        } else {
            0.0
        }
    }

    fn iteration_limit(&self) -> usize {
        self.opts
            .max_iterations
            .unwrap_or_else(|| 50_000 + 50 * (self.n + self.m))
    }

    fn run(&mut self) -> Result<LpSolution, LpError> {
        let limit = self.iteration_limit();
        let mut verified = false;
        loop {
            if self.iterations >= limit {
                return Ok(self.finish(LpStatus::IterationLimit));
            }
            if self.since_refactor >= self.opts.refactor_interval {
                self.reinvert();
            }
            match self.iterate()? {
                Step::Continue => {
                    verified = false;
                    continue;
                }
                outcome => {
                    // Confirm the verdict on a fresh factorization.
                    if !verified && self.since_refactor > 0 {
                        self.reinvert();
                        verified = true;
                        continue;
                    }
                    let status = match outcome {
                        Step::Optimal => LpStatus::Optimal,
                        Step::Infeasible => LpStatus::Infeasible,
                        Step::Unbounded => LpStatus::Unbounded,
                        Step::Continue => unreachable!(),
                    };
                    return Ok(self.finish(status));
                }
            }
        }
    }

    fn iterate(&mut self) -> Result<Step, LpError> {
        let m = self.m;
        let total = self.n + m;
        // basic costs for this phase
        let mut phase_one = false;
        for p in 0..m {
            let j = self.head[p];
            let inf = self.infeasibility(j);
            if inf != 0.0 {
                phase_one = true;
            }
            self.duals[p] = inf;
        }
        if !phase_one {
            for p in 0..m {
                self.duals[p] = self.cost[self.head[p]];
            }
        }
        let mut y = std::mem::take(&mut self.duals);
        self.factor.btran(&mut y);

        // pricing
        let tol = self.opts.dual_tol;
        let mut entering = NONE;
        let mut best = 0.0;
        let mut entering_d = 0.0;
        for j in 0..total {
            let st = self.status[j];
            if st == VarStatus::Basic || self.lo[j] == self.up[j] {
                continue;
            }
            let c = if phase_one { 0.0 } else { self.cost[j] };
            let d = c - self.dot_column(&y, j);
            let eligible = match st {
                VarStatus::AtLower => d < -tol,
                VarStatus::AtUpper => d > tol,
                VarStatus::Zero => d.abs() > tol,
                VarStatus::Basic => false,
            };
            if !eligible {
                continue;
            }
            if self.bland {
                entering = j;
                entering_d = d;
                break;
            }
            let score = d.abs();
            if score > best {
                best = score;
                entering = j;
                entering_d = d;
            }
        }
        self.duals = y;
        if entering == NONE {
            return Ok(if phase_one { Step::Infeasible } else { Step::Optimal });
        }

        let q = entering;
        let dir = if entering_d < 0.0 { 1.0 } else { -1.0 };
        let mut alpha = std::mem::take(&mut self.work);
        self.scatter_column(q, &mut alpha);
        self.factor.ftran(&mut alpha);

        let ptol = self.opts.pivot_tol;
        let ftol = self.opts.primal_tol;
        // rate of change of each basic variable per unit step
        let rate = |p: usize| -dir * alpha[p];

        // Bound on the step imposed by basic position p: (relaxed, exact, target).
        let limit_for = |p: usize, relax: f64| -> Option<(f64, f64, f64)> {
            let rp = rate(p);
            if rp.abs() < ptol {
                return None;
            }
            let k = self.head[p];
            let xv = self.x[k];
            let (l, u) = (self.lo[k], self.up[k]);
            if rp < 0.0 {
                if xv > u + ftol {
                    let d = (xv - u) / -rp;
                    Some((d, d, u))
                } else if xv < l - ftol || !l.is_finite() {
                    None
                } else {
                    Some(((xv - l + relax) / -rp, ((xv - l) / -rp).max(0.0), l))
                }
            } else if xv < l - ftol {
                let d = (l - xv) / rp;
                Some((d, d, l))
            } else if xv > u + ftol || !u.is_finite() {
                None
            } else {
                Some(((u - xv + relax) / rp, ((u - xv) / rp).max(0.0), u))
            }
        };

        let flip = self.up[q] - self.lo[q];
        let mut leave = NONE;
        let mut theta;
        let mut target = 0.0;
        if self.bland {
            theta = f64::INFINITY;
            let mut leave_var = NONE;
            for p in 0..m {
                if let Some((_, exact, t)) = limit_for(p, 0.0) {
                    let k = self.head[p];
                    if exact < theta || (exact == theta && k < leave_var) {
                        theta = exact;
                        leave = p;
                        leave_var = k;
                        target = t;
                    }
                }
            }
        } else {
            let mut theta_max = f64::INFINITY;
            for p in 0..m {
                if let Some((relaxed, _, _)) = limit_for(p, ftol) {
                    theta_max = theta_max.min(relaxed);
                }
            }
            theta = f64::INFINITY;
            if theta_max.is_finite() {
                let mut best_pivot = 0.0;
                for p in 0..m {
                    if let Some((_, exact, t)) = limit_for(p, ftol) {
                        if exact <= theta_max && alpha[p].abs() > best_pivot {
                            best_pivot = alpha[p].abs();
                            leave = p;
                            theta = exact;
                            target = t;
                        }
                    }
                }
            }
        }

        if flip <= theta {
            if !flip.is_finite() {
                self.work = alpha;
                if phase_one {
                    return Err(LpError::Numerical(
                        "phase 1 direction without a breakpoint".to_string(),
                    ));
                }
                return Ok(Step::Unbounded);
            }
            // bound flip: basis unchanged
            theta = flip;
            for p in 0..m {
                let k = self.head[p];
                self.x[k] += theta * rate(p);
            }
            if dir > 0.0 {
                self.status[q] = VarStatus::AtUpper;
                self.x[q] = self.up[q];
            } else {
                self.status[q] = VarStatus::AtLower;
                self.x[q] = self.lo[q];
            }
            self.iterations += 1;
            self.degenerate_run = 0;
            self.bland = false;
            self.work = alpha;
            return Ok(Step::Continue);
        }

        for p in 0..m {
            let k = self.head[p];
            self.x[k] += theta * rate(p);
        }
        self.x[q] += dir * theta;
        let k = self.head[leave];
        self.x[k] = target;
        self.status[k] = if target == self.lo[k] {
            VarStatus::AtLower
        } else {
            VarStatus::AtUpper
        };
        self.status[q] = VarStatus::Basic;
        self.head[leave] = q;
        self.factor.push(&alpha, leave);
        self.since_refactor += 1;
        self.iterations += 1;

        if theta < 1e-12 {
            self.degenerate_run += 1;
            if self.degenerate_run > 50 {
                self.bland = true;
            }
        } else {
            self.degenerate_run = 0;
            self.bland = false;
        }
        self.work = alpha;
        Ok(Step::Continue)
    }

    fn finish(&mut self, status: LpStatus) -> LpSolution {
        let m = self.m;
        let mut y: Vec<f64> = self
            .head
            .iter()
            .map(|&j| self.cost[j] * self.cost_scale)
            .collect();
        self.factor.btran(&mut y);
        let reduced_costs = (0..self.n)
            .map(|j| self.cost[j] * self.cost_scale - self.dot_column(&y, j))
            .collect();
        let x: Vec<f64> = self.x[..self.n].to_vec();
        let objective = x
            .iter()
            .zip(&self.cost)
            .map(|(x, c)| x * c * self.cost_scale)
            .sum();
        debug!(
            "simplex finished: {status:?} after {} iterations ({m} rows, {} columns)",
            self.iterations, self.n
        );
        LpSolution {
            status,
            x,
            row_duals: y,
            reduced_costs,
            objective,
            iterations: self.iterations,
            basis: Some(Basis {
                statuses: self.status.clone(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::RowKind;

    fn solve(p: &Program) -> LpSolution {
        RevisedSimplex::default().solve(p).unwrap()
    }

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let mut p = Program::new("t");
        let x = p.add_var("x", 0.0, f64::INFINITY, -3.0);
        let y = p.add_var("y", 0.0, f64::INFINITY, -5.0);
        p.add_row("a", vec![(x, 1.0)], RowKind::Le, 4.0);
        p.add_row("b", vec![(y, 2.0)], RowKind::Le, 12.0);
        p.add_row("c", vec![(x, 3.0), (y, 2.0)], RowKind::Le, 18.0);
        let s = solve(&p);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 6.0).abs() < 1e-9);
        assert!((s.objective + 36.0).abs() < 1e-9);
        // duals: (0, 1.5, 1) for the maximization, negated for minimization
        assert!((s.row_duals[1] + 1.5).abs() < 1e-9);
        assert!((s.row_duals[2] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn needs_phase_one() {
        // min x + y s.t. x + y >= 2, x - y = 0.5, x,y in [0, 10]
        let mut p = Program::new("p1");
        let x = p.add_var("x", 0.0, 10.0, 1.0);
        let y = p.add_var("y", 0.0, 10.0, 1.0);
        p.add_row("s", vec![(x, 1.0), (y, 1.0)], RowKind::Ge, 2.0);
        p.add_row("d", vec![(x, 1.0), (y, -1.0)], RowKind::Eq, 0.5);
        let s = solve(&p);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 1.25).abs() < 1e-9 && (s.x[1] - 0.75).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut p = Program::new("inf");
        let x = p.add_var("x", 0.0, 1.0, 1.0);
        p.add_row("r", vec![(x, 1.0)], RowKind::Ge, 2.0);
        assert_eq!(solve(&p).status, LpStatus::Infeasible);

        let mut p = Program::new("unb");
        let x = p.add_var("x", 0.0, f64::INFINITY, -1.0);
        let y = p.add_var("y", 0.0, f64::INFINITY, 0.0);
        p.add_row("r", vec![(x, 1.0), (y, -1.0)], RowKind::Le, 1.0);
        assert_eq!(solve(&p).status, LpStatus::Unbounded);
    }

    #[test]
    fn free_variables_and_bound_flips() {
        // min -x - 2y + z, x,y in [0,1], z free, z >= x + y - 1.5
        let mut p = Program::new("free");
        let x = p.add_var("x", 0.0, 1.0, -1.0);
        let y = p.add_var("y", 0.0, 1.0, -2.0);
        let z = p.add_var("z", f64::NEG_INFINITY, f64::INFINITY, 1.0);
        p.add_row("r", vec![(z, 1.0), (x, -1.0), (y, -1.0)], RowKind::Ge, -1.5);
        let s = solve(&p);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - (-1.0 - 2.0 + 0.5)).abs() < 1e-9);
    }

    #[test]
    fn warm_start_after_bound_change() {
        let mut p = Program::new("ws");
        let x = p.add_var("x", 0.0, 1.0, -1.0);
        let y = p.add_var("y", 0.0, 1.0, -1.0);
        p.add_row("c", vec![(x, 1.0), (y, 1.0)], RowKind::Le, 1.5);
        let solver = RevisedSimplex::default();
        let first = solver.solve(&p).unwrap();
        assert!((first.objective + 1.5).abs() < 1e-9);
        let bounds = vec![(0.0, 0.2), (0.0, 1.0)];
        let second = solver
            .solve_with(&p, Some(&bounds), first.basis.as_ref())
            .unwrap();
        assert_eq!(second.status, LpStatus::Optimal);
        assert!((second.objective + 1.2).abs() < 1e-9);
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example cycles under naive Dantzig pricing.
        let mut p = Program::new("beale");
        let x: Vec<usize> = [-0.75, 150.0, -0.02, 6.0]
            .iter()
            .enumerate()
            .map(|(i, c)| p.add_var(format!("x{i}"), 0.0, f64::INFINITY, *c))
            .collect();
        p.add_row("r1", vec![(x[0], 0.25), (x[1], -60.0), (x[2], -0.04), (x[3], 9.0)], RowKind::Le, 0.0);
        p.add_row("r2", vec![(x[0], 0.5), (x[1], -90.0), (x[2], -0.02), (x[3], 3.0)], RowKind::Le, 0.0);
        p.add_row("r3", vec![(x[2], 1.0)], RowKind::Le, 1.0);
        let s = solve(&p);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 0.05).abs() < 1e-9);
    }
}
