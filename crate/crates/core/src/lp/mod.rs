//! Backend-neutral linear and mixed-integer programs, plus the bundled
//! solvers: a bounded-variable revised simplex and a best-first
//! branch-and-bound on top of it.

mod branch;
mod mps;
mod simplex;

pub use branch::{BranchAndBound, MipSolution, MipStatus};
pub use mps::write_mps;
pub use simplex::RevisedSimplex;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowKind {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub cost: f64,
    pub integer: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub kind: RowKind,
    pub rhs: f64,
}

impl Row {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * x[j]).sum()
    }

    pub fn violation(&self, x: &[f64]) -> f64 {
        let act = self.activity(x);
        match self.kind {
            RowKind::Le => (act - self.rhs).max(0.0),
            RowKind::Ge => (self.rhs - act).max(0.0),
            RowKind::Eq => (act - self.rhs).abs(),
        }
    }
}

/// `minimize cost . x + objective_offset` subject to the rows and the
/// variable bounds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Program {
    pub name: String,
    pub vars: Vec<Variable>,
    pub rows: Vec<Row>,
    pub objective_offset: f64,
}

impl Program {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, cost: f64) -> usize {
        self.vars.push(Variable {
            name: name.into(),
            lower,
            upper,
            cost,
            integer: false,
        });
        self.vars.len() - 1
    }

    pub fn add_binary(&mut self, name: impl Into<String>, cost: f64) -> usize {
        let id = self.add_var(name, 0.0, 1.0, cost);
        self.vars[id].integer = true;
        id
    }

    pub fn add_row(&mut self, name: impl Into<String>, terms: Vec<(usize, f64)>, kind: RowKind, rhs: f64) -> usize {
        self.rows.push(Row {
            name: name.into(),
            terms,
            kind,
            rhs,
        });
        self.rows.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_integer(&self) -> usize {
        self.vars.iter().filter(|v| v.integer).count()
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.vars.iter().map(|v| (v.lower, v.upper)).collect()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.objective_offset + self.vars.iter().zip(x).map(|(v, x)| v.cost * x).sum::<f64>()
    }

    /// Largest bound or row violation of `x`, and whether integer
    /// variables are within `int_tol` of an integer.
    pub fn max_violation(&self, x: &[f64], int_tol: f64) -> (f64, bool) {
        let mut worst: f64 = 0.0;
        let mut integral = true;
        for (v, &xv) in self.vars.iter().zip(x) {
            worst = worst.max(v.lower - xv).max(xv - v.upper);
            if v.integer && (xv - xv.round()).abs() > int_tol {
                integral = false;
            }
        }
        for r in &self.rows {
            worst = worst.max(r.violation(x));
        }
        (worst, integral)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// Status of one variable (structural or row logical) in a basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable held at zero.
    Zero,
}

/// Basis statuses for the structural variables followed by one logical
/// per row; usable as a warm start.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Basis {
    pub statuses: Vec<VarStatus>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    /// Row duals `y` with `reduced_cost = cost - A^T y`.
    pub row_duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub basis: Option<Basis>,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum LpError {
    #[error("malformed program: {0}")]
    Malformed(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Solver interface: load a program (with optional bound overrides and a
/// warm-start basis), solve, and return status, values and duals.
/// Implementations must be shareable across threads; each call works on
/// its own state.
pub trait LpBackend: Send + Sync {
    fn solve_with(
        &self,
        program: &Program,
        bounds: Option<&[(f64, f64)]>,
        warm_start: Option<&Basis>,
    ) -> Result<LpSolution, LpError>;

    fn solve(&self, program: &Program) -> Result<LpSolution, LpError> {
        self.solve_with(program, None, None)
    }
}
