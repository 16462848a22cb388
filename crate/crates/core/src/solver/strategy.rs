use std::collections::VecDeque;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Col;
use rayon::prelude::*;

use super::{inf_norm, DiscreteSystem, NodePolicy};
use crate::error::{Error, Result};
use crate::geometry::ArmTarget;

/// Damping factor `θ` of the Jacobi step `τ(x) = θ / L(x)`.
pub const JACOBI_DAMPING: f64 = 0.9;
/// Consecutive residual increases that abort the Jacobi sweep.
const DIVERGENCE_WINDOW: usize = 10_000;
const HISTORY_TAIL: usize = 16;
const MAX_POLICY_ITERATIONS: usize = 200;
/// Policy iterations without residual decrease before giving up.
const STALL_LIMIT: usize = 8;

/// A way of driving `F_h[u] − f` to zero.
pub trait SolverStrategy: Send + Sync {
    fn name(&self) -> &'static str;

    /// Iterates from `initial` (interior-slot values) until the residual sup
    /// norm is at most `tol`. Returns the interior values and the number of
    /// iterations taken.
    fn solve(
        &self,
        system: &DiscreteSystem,
        initial: Vec<f64>,
        tol: f64,
        max_iter: usize,
    ) -> Result<(Vec<f64>, usize)>;
}

/// Damped nonlinear Jacobi: `u ← u + τ(x)(F_h[u](x) − f(x))` with
/// `τ(x) = θ / L(x)`. Every sweep reads only the previous iterate.
pub struct Jacobi {
    pub damping: f64,
}

/// Howard's policy iteration: freeze the active frame and coefficient
/// choice at every node, solve the resulting linear M-matrix system with a
/// sparse LU factorization, repeat.
pub struct Howard;

static JACOBI: Jacobi = Jacobi {
    damping: JACOBI_DAMPING,
};
static HOWARD: Howard = Howard;
static STRATEGIES: [&dyn SolverStrategy; 2] = [&HOWARD, &JACOBI];

pub fn strategies() -> &'static [&'static dyn SolverStrategy] {
    &STRATEGIES
}

pub fn strategy_by_name(name: &str) -> Result<&'static dyn SolverStrategy> {
    STRATEGIES
        .iter()
        .copied()
        .find(|s| s.name() == name)
        .ok_or_else(|| Error::UnknownName {
            kind: "solver strategy",
            name: name.to_string(),
        })
}

fn push_history(history: &mut VecDeque<f64>, v: f64) {
    if history.len() == HISTORY_TAIL {
        history.pop_front();
    }
    history.push_back(v);
}

impl SolverStrategy for Jacobi {
    fn name(&self) -> &'static str {
        "jacobi"
    }

    fn solve(
        &self,
        system: &DiscreteSystem,
        mut x: Vec<f64>,
        tol: f64,
        max_iter: usize,
    ) -> Result<(Vec<f64>, usize)> {
        let steps: Vec<f64> = (0..system.unknowns())
            .into_par_iter()
            .map(|k| self.damping / system.center_bound(k))
            .collect();
        let mut values = system.node_values.clone();
        let mut history = VecDeque::with_capacity(HISTORY_TAIL);
        let mut previous = f64::INFINITY;
        let mut increases = 0usize;
        for it in 0..max_iter {
            system.write_interior(&mut values, &x);
            let r = system.residual(&values);
            let norm = inf_norm(&r);
            push_history(&mut history, norm);
            if norm <= tol {
                return Ok((x, it));
            }
            if norm > previous {
                increases += 1;
                if increases >= DIVERGENCE_WINDOW {
                    return Err(Error::NonConvergence {
                        iterations: it,
                        residual: norm,
                        tail: history.into(),
                    });
                }
            } else {
                increases = 0;
            }
            previous = norm;
            x.par_iter_mut()
                .zip(&r)
                .zip(&steps)
                .for_each(|((xk, rk), tau)| *xk += tau * rk);
        }
        system.write_interior(&mut values, &x);
        let norm = inf_norm(&system.residual(&values));
        if norm <= tol {
            return Ok((x, max_iter));
        }
        push_history(&mut history, norm);
        Err(Error::NonConvergence {
            iterations: max_iter,
            residual: norm,
            tail: history.into(),
        })
    }
}

impl Howard {
    /// Row `k` of the Jacobian of `F_h` for a frozen policy.
    fn row(system: &DiscreteSystem, k: usize, policy: &NodePolicy) -> Vec<(usize, f64)> {
        let mask = &system.mask;
        let frame = system.operator.operator().frames(mask.stencil())[policy.frame];
        let mut diag = 0.0;
        let mut row = Vec::with_capacity(5);
        for (slot, &d) in frame.iter().enumerate() {
            let c = policy.coefficients[slot];
            let [plus, minus] = mask.arms(k, d);
            let span = plus.t + minus.t;
            for arm in [plus, minus] {
                let w = 2.0 * c / (arm.t * span);
                diag -= w;
                if let ArmTarget::Node(g) = arm.target {
                    if let Some(j) = mask.slot(g as usize) {
                        row.push((j, w));
                    }
                }
            }
        }
        row.push((k, diag));
        row
    }
}

impl SolverStrategy for Howard {
    fn name(&self) -> &'static str {
        "howard"
    }

    fn solve(
        &self,
        system: &DiscreteSystem,
        mut x: Vec<f64>,
        tol: f64,
        max_iter: usize,
    ) -> Result<(Vec<f64>, usize)> {
        let n = system.unknowns();
        if n == 0 {
            return Ok((x, 0));
        }
        let mut values = system.node_values.clone();
        let mut frames: Vec<Option<usize>> = vec![None; n];
        let mut history = VecDeque::with_capacity(HISTORY_TAIL);
        let mut best = f64::INFINITY;
        let mut stalled = 0usize;
        let limit = max_iter.min(MAX_POLICY_ITERATIONS);
        for it in 0..=limit {
            system.write_interior(&mut values, &x);
            let evaluated: Vec<(f64, NodePolicy)> = (0..n)
                .into_par_iter()
                .map(|k| system.evaluate(&values, k, frames[k]))
                .collect();
            let r: Vec<f64> = evaluated
                .iter()
                .zip(&system.source)
                .map(|((v, _), f)| v - f)
                .collect();
            let norm = inf_norm(&r);
            push_history(&mut history, norm);
            if norm <= tol {
                return Ok((x, it));
            }
            if it == limit {
                break;
            }
            if norm < best {
                best = norm;
                stalled = 0;
            } else {
                stalled += 1;
                if stalled >= STALL_LIMIT {
                    break;
                }
            }
            for (slot, (_, p)) in frames.iter_mut().zip(&evaluated) {
                *slot = Some(p.frame);
            }

            let rows: Vec<Vec<(usize, f64)>> = (0..n)
                .into_par_iter()
                .map(|k| Howard::row(system, k, &evaluated[k].1))
                .collect();
            let triplets: Vec<Triplet<usize, usize, f64>> = rows
                .iter()
                .enumerate()
                .flat_map(|(k, row)| row.iter().map(move |&(j, w)| Triplet::new(k, j, w)))
                .collect();
            let jac = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
                .map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
            let lu = jac
                .as_ref()
                .sp_lu()
                .map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
            let rhs = Col::<f64>::from_fn(n, |k| -r[k]);
            let delta = lu.solve(&rhs);
            for (k, xk) in x.iter_mut().enumerate() {
                *xk += delta[k];
            }
        }
        Err(Error::NonConvergence {
            iterations: limit,
            residual: history.back().copied().unwrap_or(f64::NAN),
            tail: history.into(),
        })
    }
}
