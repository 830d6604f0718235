use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use log::debug;

use super::{Basis, LpBackend, LpError, LpStatus, Program};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MipStatus {
    /// Search tree exhausted; the incumbent is within the gap tolerance.
    Optimal,
    /// A limit was hit; `gap` is the proven relative gap of the incumbent.
    Feasible { gap: f64 },
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct MipSolution {
    pub status: MipStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub best_bound: f64,
    pub nodes: usize,
}

/// Best-first branch-and-bound over the integer variables, using LP
/// relaxations for bounds. Until the first incumbent is found the search
/// dives depth-first. A rounding heuristic runs at the root and
/// periodically afterwards.
#[derive(Debug, Clone)]
pub struct BranchAndBound<B> {
    pub backend: B,
    /// Relative gap at which a node is pruned.
    pub gap_tol: f64,
    pub abs_tol: f64,
    pub int_tol: f64,
    pub node_limit: usize,
    pub time_limit: Option<Duration>,
    pub heuristic_interval: usize,
}

impl<B: LpBackend> BranchAndBound<B> {
    pub fn new(backend: B) -> Self {
        Self {
            backend,
            gap_tol: 1e-4,
            abs_tol: 1e-9,
            int_tol: 1e-6,
            node_limit: 1_000_000,
            time_limit: None,
            heuristic_interval: 25,
        }
    }
}

struct Node {
    bound: f64,
    id: usize,
    depth: usize,
    bounds: Vec<(f64, f64)>,
    basis: Option<Arc<Basis>>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // max-heap: smallest bound first, then oldest node
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

struct Incumbent {
    x: Vec<f64>,
    objective: f64,
}

impl<B: LpBackend> BranchAndBound<B> {
    fn prune_threshold(&self, incumbent: &Option<Incumbent>) -> f64 {
        match incumbent {
            Some(inc) => {
                inc.objective - self.abs_tol.max(self.gap_tol * inc.objective.abs())
            }
            None => f64::INFINITY,
        }
    }

    fn gap(&self, incumbent: f64, bound: f64) -> f64 {
        ((incumbent - bound) / incumbent.abs().max(1e-12)).max(0.0)
    }

    fn offer(&self, program: &Program, x: Vec<f64>, incumbent: &mut Option<Incumbent>) -> bool {
        let (viol, integral) = program.max_violation(&x, self.int_tol);
        if viol > 1e-7 || !integral {
            return false;
        }
        let mut x = x;
        for (v, xv) in program.vars.iter().zip(x.iter_mut()) {
            if v.integer {
                *xv = xv.round();
            }
        }
        let objective = program.objective(&x);
        if incumbent.as_ref().is_none_or(|inc| objective < inc.objective - 1e-12) {
            *incumbent = Some(Incumbent { x, objective });
            return true;
        }
        false
    }

    /// Fixes every integer variable to its rounded LP value and re-solves.
    fn round_and_fix(
        &self,
        program: &Program,
        bounds: &[(f64, f64)],
        x: &[f64],
        basis: Option<&Basis>,
    ) -> Result<Option<Vec<f64>>, LpError> {
        let mut fixed = bounds.to_vec();
        for (j, v) in program.vars.iter().enumerate() {
            if v.integer {
                let r = x[j].round().clamp(bounds[j].0, bounds[j].1);
                fixed[j] = (r, r);
            }
        }
        let sol = self.backend.solve_with(program, Some(&fixed), basis)?;
        Ok((sol.status == LpStatus::Optimal).then_some(sol.x))
    }

    /// Solves `program`; `seeds` are candidate feasible points tried as
    /// initial incumbents.
    pub fn solve(&self, program: &Program, seeds: &[Vec<f64>]) -> Result<MipSolution, LpError> {
        let started = Instant::now();
        let mut incumbent: Option<Incumbent> = None;
        for seed in seeds {
            if seed.len() == program.num_vars() {
                self.offer(program, seed.clone(), &mut incumbent);
            }
        }
        let integer_vars: Vec<usize> = (0..program.num_vars())
            .filter(|&j| program.vars[j].integer)
            .collect();

        let mut open = BinaryHeap::new();
        let mut dive: Vec<Node> = Vec::new();
        let mut next_id = 0usize;
        let root = Node {
            bound: f64::NEG_INFINITY,
            id: next_id,
            depth: 0,
            bounds: program.bounds(),
            basis: None,
        };
        next_id += 1;
        dive.push(root);

        let mut nodes = 0usize;
        let mut limit_hit = false;
        let mut root_unbounded = false;
        loop {
            let node = if incumbent.is_none() {
                match dive.pop() {
                    Some(n) => n,
                    None => match open.pop() {
                        Some(n) => n,
                        None => break,
                    },
                }
            } else {
                // flush any remaining dive nodes into the best-first queue
                open.extend(dive.drain(..));
                match open.pop() {
                    Some(n) => n,
                    None => break,
                }
            };
            if node.bound >= self.prune_threshold(&incumbent) {
                continue;
            }
            if nodes >= self.node_limit
                || self.time_limit.is_some_and(|t| started.elapsed() >= t)
            {
                // keep the node so that its bound counts in the final gap
                open.push(node);
                limit_hit = true;
                break;
            }
            nodes += 1;

            let sol = self
                .backend
                .solve_with(program, Some(&node.bounds), node.basis.as_deref())?;
            match sol.status {
                LpStatus::Optimal => {}
                LpStatus::Infeasible => continue,
                LpStatus::Unbounded => {
                    if node.depth == 0 {
                        root_unbounded = true;
                        break;
                    }
                    continue;
                }
                LpStatus::IterationLimit => {
                    return Err(LpError::Numerical(format!(
                        "node LP hit its iteration limit after {} iterations",
                        sol.iterations
                    )))
                }
            }
            let bound = program.objective_offset + sol.objective;
            if bound >= self.prune_threshold(&incumbent) {
                continue;
            }

            // most fractional integer variable
            let mut branch_var = None;
            let mut best_frac = self.int_tol;
            for &j in &integer_vars {
                let f = sol.x[j] - sol.x[j].floor();
                let dist = f.min(1.0 - f);
                if dist > best_frac {
                    best_frac = dist;
                    branch_var = Some(j);
                }
            }
            let Some(j) = branch_var else {
                self.offer(program, sol.x, &mut incumbent);
                continue;
            };

            if nodes == 1 || nodes.is_multiple_of(self.heuristic_interval.max(1)) {
                if let Some(x) = self.round_and_fix(program, &node.bounds, &sol.x, sol.basis.as_ref())? {
                    if self.offer(program, x, &mut incumbent) {
                        debug!("heuristic incumbent {:?} at node {nodes}", incumbent.as_ref().map(|i| i.objective));
                    }
                }
            }

            let basis = sol.basis.map(Arc::new);
            let value = sol.x[j];
            let mut down = node.bounds.clone();
            down[j].1 = value.floor();
            let mut up = node.bounds;
            up[j].0 = value.ceil();
            let mut children = [
                Node {
                    bound,
                    id: next_id,
                    depth: node.depth + 1,
                    bounds: down,
                    basis: basis.clone(),
                },
                Node {
                    bound,
                    id: next_id + 1,
                    depth: node.depth + 1,
                    bounds: up,
                    basis,
                },
            ];
            next_id += 2;
            if incumbent.is_none() {
                // dive toward the rounding direction first (pushed last)
                if value - value.floor() >= 0.5 {
                    children.swap(0, 1);
                }
                dive.extend(children);
            } else {
                open.extend(children);
            }
        }

        if root_unbounded {
            return Ok(MipSolution {
                status: MipStatus::Unbounded,
                x: Vec::new(),
                objective: f64::NEG_INFINITY,
                best_bound: f64::NEG_INFINITY,
                nodes,
            });
        }
        let remaining_bound = open
            .iter()
            .chain(dive.iter())
            .map(|n| n.bound)
            .fold(f64::INFINITY, f64::min);
        match incumbent {
            None => Ok(MipSolution {
                status: if limit_hit {
                    MipStatus::Feasible { gap: f64::INFINITY }
                } else {
                    MipStatus::Infeasible
                },
                x: Vec::new(),
                objective: f64::INFINITY,
                best_bound: remaining_bound,
                nodes,
            }),
            Some(inc) => {
                let best_bound = remaining_bound.min(inc.objective);
                let status = if limit_hit {
                    MipStatus::Feasible {
                        gap: self.gap(inc.objective, best_bound),
                    }
                } else {
                    MipStatus::Optimal
                };
                debug!("branch-and-bound: {status:?} after {nodes} nodes in {:?}", started.elapsed());
                Ok(MipSolution {
                    status,
                    x: inc.x,
                    objective: inc.objective,
                    best_bound,
                    nodes,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{RevisedSimplex, RowKind};

    #[test]
    fn small_knapsack() {
        // max 5a + 4b + 3c s.t. 2a + 3b + c <= 5, 4a + b + 2c <= 11, 3a + 4b + 2c <= 8
        let mut p = Program::new("k");
        let v: Vec<usize> = [5.0, 4.0, 3.0]
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let id = p.add_var(format!("x{i}"), 0.0, 10.0, -c);
                p.vars[id].integer = true;
                id
            })
            .collect();
        p.add_row("r1", vec![(v[0], 2.0), (v[1], 3.0), (v[2], 1.0)], RowKind::Le, 5.0);
        p.add_row("r2", vec![(v[0], 4.0), (v[1], 1.0), (v[2], 2.0)], RowKind::Le, 11.0);
        p.add_row("r3", vec![(v[0], 3.0), (v[1], 4.0), (v[2], 2.0)], RowKind::Le, 8.0);
        let mut bb = BranchAndBound::new(RevisedSimplex::default());
        bb.gap_tol = 0.0;
        let s = bb.solve(&p, &[]).unwrap();
        assert_eq!(s.status, MipStatus::Optimal);
        // brute force
        let mut best = 0.0f64;
        for a in 0..=10 {
            for b in 0..=10 {
                for c in 0..=10 {
                    let (a, b, c) = (a as f64, b as f64, c as f64);
                    if 2.0 * a + 3.0 * b + c <= 5.0 && 4.0 * a + b + 2.0 * c <= 11.0 && 3.0 * a + 4.0 * b + 2.0 * c <= 8.0 {
                        best = best.max(5.0 * a + 4.0 * b + 3.0 * c);
                    }
                }
            }
        }
        assert!((s.objective + best).abs() < 1e-9);
    }

    #[test]
    fn infeasible_integer_program() {
        let mut p = Program::new("i");
        let x = p.add_binary("x", 1.0);
        p.add_row("r", vec![(x, 2.0)], RowKind::Eq, 1.0);
        let bb = BranchAndBound::new(RevisedSimplex::default());
        assert_eq!(bb.solve(&p, &[]).unwrap().status, MipStatus::Infeasible);
    }

    #[test]
    fn node_limit_reports_gap() {
        let mut p = Program::new("g");
        let vars: Vec<usize> = (0..12).map(|i| p.add_binary(format!("b{i}"), -((i % 5) as f64 + 1.3))).collect();
        p.add_row(
            "cap",
            vars.iter().enumerate().map(|(i, &v)| (v, 1.0 + (i % 3) as f64 * 0.7)).collect(),
            RowKind::Le,
            7.1,
        );
        let mut bb = BranchAndBound::new(RevisedSimplex::default());
        bb.node_limit = 3;
        bb.gap_tol = 0.0;
        let zero = vec![0.0; 12];
        let s = bb.solve(&p, &[zero]).unwrap();
        match s.status {
            MipStatus::Feasible { gap } => assert!(gap >= 0.0 && s.best_bound <= s.objective),
            MipStatus::Optimal => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
