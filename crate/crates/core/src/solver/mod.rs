//! Monotone wide-stencil discretization of `M±(D²u) = f` with Dirichlet data.
//!
//! At an interior node the operator takes, for every orthogonal lattice frame
//! `(e, e⊥)`, the sum of the weighted unequal-arm second differences along
//! `e` and `e⊥`, and then the max (`M⁺`) or min (`M⁻`) over frames. Each
//! per-direction weight is `Λ` or `λ` depending on the sign of the second
//! difference, so the scheme is nondecreasing in neighbor values and
//! decreasing in the center value.

mod operator;
mod strategy;

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ArmTarget, GridMask, Piece, Point, Role};
use crate::pucci::EllipticityPair;

pub use operator::{
    operator_by_name, operators, ExtremalOperator, FrameSelection, Laplace, OperatorTag, PucciMinus,
    PucciPlus,
};
pub use strategy::{strategies, strategy_by_name, Howard, Jacobi, SolverStrategy, JACOBI_DAMPING};

pub use crate::stencil::{Direction, StencilSet};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 5_000_000;
pub const DEFAULT_STRATEGY: &str = "howard";

/// Unequal-arm three-point second difference along a ray:
/// `2/(t⁺+t⁻) · [(u⁺ − u)/t⁺ + (u⁻ − u)/t⁻]`.
#[inline]
pub fn second_difference(center: f64, plus: f64, minus: f64, t_plus: f64, t_minus: f64) -> f64 {
    2.0 / (t_plus + t_minus) * ((plus - center) / t_plus + (minus - center) / t_minus)
}

/// Everything a strategy needs: the mask, the operator, boundary values
/// frozen onto nodes and cut-arm hits, and the source sampled at interior
/// nodes.
pub struct DiscreteSystem {
    pub mask: Arc<GridMask>,
    pub operator: OperatorTag,
    pub ell: EllipticityPair,
    /// Values on every grid node: Dirichlet data on boundary nodes, boundary
    /// data extended to exterior nodes, and the current iterate on interior
    /// nodes.
    pub node_values: Vec<f64>,
    pub hit_values: Vec<f64>,
    pub source: Vec<f64>,
}

/// Linearization of the operator at one node for a fixed frame and fixed
/// per-direction coefficients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodePolicy {
    pub frame: usize,
    pub coefficients: [f64; 2],
}

impl DiscreteSystem {
    pub fn new(
        mask: Arc<GridMask>,
        operator: OperatorTag,
        ell: EllipticityPair,
        source: &(dyn Fn(Point) -> f64 + Sync),
        boundary: &(dyn Fn(Point, Piece) -> f64 + Sync),
    ) -> Result<Self> {
        ell.validate()?;
        let spec = mask.spec().clone();
        let node_values: Vec<f64> = (0..mask.node_count())
            .into_par_iter()
            .map(|idx| {
                let p = mask.point(idx);
                match mask.role(idx) {
                    Role::Interior => 0.0,
                    Role::DirichletOuter => boundary(p, Piece::Outer),
                    Role::DirichletWall => boundary(p, Piece::Wall),
                    Role::Exterior => boundary(p, spec.piece_of(p)),
                }
            })
            .collect();
        let hit_values: Vec<f64> = mask
            .hits()
            .par_iter()
            .map(|hit| boundary(hit.point, hit.piece))
            .collect();
        let source: Vec<f64> = mask
            .interior()
            .par_iter()
            .map(|&g| source(mask.point(g as usize)))
            .collect();
        if let Some(bad) = hit_values.iter().chain(&source).find(|v| !v.is_finite()) {
            return Err(Error::Assembly(format!("non-finite boundary or source value {bad}")));
        }
        Ok(DiscreteSystem {
            mask,
            operator,
            ell,
            node_values,
            hit_values,
            source,
        })
    }

    pub fn unknowns(&self) -> usize {
        self.mask.interior().len()
    }

    fn target_value(&self, values: &[f64], target: ArmTarget) -> f64 {
        match target {
            ArmTarget::Node(g) => values[g as usize],
            ArmTarget::Hit(h) => self.hit_values[h as usize],
        }
    }

    /// Directional second difference at interior slot `k` along direction `d`,
    /// reading neighbor values from the global array `values`.
    pub fn directional(&self, values: &[f64], k: usize, d: usize) -> f64 {
        let [plus, minus] = self.mask.arms(k, d);
        let center = values[self.mask.interior()[k] as usize];
        second_difference(
            center,
            self.target_value(values, plus.target),
            self.target_value(values, minus.target),
            plus.t,
            minus.t,
        )
    }

    fn frame_value(&self, values: &[f64], k: usize, frame: [usize; 2]) -> (f64, [f64; 2]) {
        let op = self.operator.operator();
        let mut total = 0.0;
        let mut coeffs = [0.0; 2];
        for (slot, &d) in frame.iter().enumerate() {
            let s = self.directional(values, k, d);
            let c = op.coefficient(&self.ell, s);
            coeffs[slot] = c;
            total += c * s;
        }
        (total, coeffs)
    }

    /// `F_h[u]` at interior slot `k`, with the maximizing (or minimizing)
    /// frame. Ties keep `prefer` when given, otherwise the first frame.
    pub fn evaluate(&self, values: &[f64], k: usize, prefer: Option<usize>) -> (f64, NodePolicy) {
        let op = self.operator.operator();
        let frames = op.frames(self.mask.stencil());
        let sel = op.selection();
        let start = prefer.unwrap_or(0);
        let (mut best, mut coeffs) = self.frame_value(values, k, frames[start]);
        let mut best_frame = start;
        for (fi, &frame) in frames.iter().enumerate() {
            if fi == start {
                continue;
            }
            let (v, c) = self.frame_value(values, k, frame);
            let margin = 1e-13 * (1.0 + best.abs());
            let better = match sel {
                FrameSelection::Max => v > best + margin,
                FrameSelection::Min => v < best - margin,
            };
            if better {
                best = v;
                coeffs = c;
                best_frame = fi;
            }
        }
        (
            best,
            NodePolicy {
                frame: best_frame,
                coefficients: coeffs,
            },
        )
    }

    /// `F_h[u](x) − f(x)` at every interior slot.
    pub fn residual(&self, values: &[f64]) -> Vec<f64> {
        (0..self.unknowns())
            .into_par_iter()
            .map(|k| self.evaluate(values, k, None).0 - self.source[k])
            .collect()
    }

    /// Upper bound on `|∂F_h/∂u(x)|`: the largest center weight any frame can
    /// put on node `x`.
    pub fn center_bound(&self, k: usize) -> f64 {
        let op = self.operator.operator();
        let cmax = op.max_coefficient(&self.ell);
        op.frames(self.mask.stencil())
            .iter()
            .map(|frame| {
                frame
                    .iter()
                    .map(|&d| {
                        let [p, m] = self.mask.arms(k, d);
                        2.0 * cmax / (p.t * m.t)
                    })
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn write_interior(&self, values: &mut [f64], unknowns: &[f64]) {
        for (k, &g) in self.mask.interior().iter().enumerate() {
            values[g as usize] = unknowns[k];
        }
    }
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.par_iter().map(|x| x.abs()).reduce(|| 0.0, f64::max)
}

/// A Dirichlet problem on a rasterized domain.
pub struct DirichletProblem<'a> {
    pub mask: Arc<GridMask>,
    pub operator: OperatorTag,
    pub ell: EllipticityPair,
    pub source: &'a (dyn Fn(Point) -> f64 + Sync),
    pub boundary: &'a (dyn Fn(Point, Piece) -> f64 + Sync),
    pub source_description: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub strategy: String,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            strategy: DEFAULT_STRATEGY.to_string(),
        }
    }
}

/// A solved field with the data it was solved from.
#[derive(Clone, Debug)]
pub struct SolutionField {
    pub mask: Arc<GridMask>,
    /// One value per grid node; see [`DiscreteSystem::node_values`].
    pub values: Vec<f64>,
    pub hit_values: Vec<f64>,
    pub source: Vec<f64>,
    pub residual_inf: f64,
    pub iterations: usize,
    pub operator: OperatorTag,
    pub ell: EllipticityPair,
    pub source_description: String,
    pub strategy: String,
}

/// Solves `F_h[u] = f` to `max |F_h[u] − f| <= tol` with the named strategy.
pub fn solve_dirichlet(problem: &DirichletProblem<'_>, options: &SolveOptions) -> Result<SolutionField> {
    if !(options.tol > 0.0) {
        return Err(Error::InvalidProblem(format!("tolerance {} must be positive", options.tol)));
    }
    let strategy = strategy_by_name(&options.strategy)?;
    let system = DiscreteSystem::new(
        problem.mask.clone(),
        problem.operator,
        problem.ell,
        problem.source,
        problem.boundary,
    )?;
    let unknowns = vec![0.0; system.unknowns()];
    let (unknowns, iterations) = strategy.solve(&system, unknowns, options.tol, options.max_iter)?;
    let mut values = system.node_values.clone();
    system.write_interior(&mut values, &unknowns);
    let residual_inf = inf_norm(&system.residual(&values));
    if residual_inf > options.tol {
        return Err(Error::NonConvergence {
            iterations,
            residual: residual_inf,
            tail: vec![residual_inf],
        });
    }
    Ok(SolutionField {
        mask: system.mask,
        values,
        hit_values: system.hit_values,
        source: system.source,
        residual_inf,
        iterations,
        operator: problem.operator,
        ell: problem.ell,
        source_description: problem.source_description.clone(),
        strategy: strategy.name().to_string(),
    })
}

/// Per-node residual `F_h[u] − f` of a field, in interior-slot order, and its
/// sup norm.
pub fn residual_profile(field: &SolutionField) -> (Vec<f64>, f64) {
    let system = field.system();
    let r = system.residual(&field.values);
    let norm = inf_norm(&r);
    (r, norm)
}

/// Run metadata written next to a field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldMetadata {
    pub operator: OperatorTag,
    pub ell: EllipticityPair,
    pub h: f64,
    #[serde(rename = "W")]
    pub width: u32,
    pub tol: f64,
    pub iterations: usize,
    pub residual_inf: f64,
    pub strategy: String,
    pub source: String,
}

impl SolutionField {
    /// Rebuilds the discrete system around this field's frozen data.
    pub fn system(&self) -> DiscreteSystem {
        DiscreteSystem {
            mask: self.mask.clone(),
            operator: self.operator,
            ell: self.ell,
            node_values: self.values.clone(),
            hit_values: self.hit_values.clone(),
            source: self.source.clone(),
        }
    }

    pub fn value_at(&self, i: i64, j: i64) -> Option<f64> {
        self.mask.index(i, j).map(|idx| self.values[idx])
    }

    /// Values at interior slots.
    pub fn interior_values(&self) -> Vec<f64> {
        self.mask
            .interior()
            .iter()
            .map(|&g| self.values[g as usize])
            .collect()
    }

    /// Bilinear interpolation of the node values (exterior nodes carry the
    /// extended boundary data).
    pub fn sample(&self, p: Point) -> f64 {
        let h = self.mask.h();
        let n = self.mask.half_width();
        let fx = p[0] / h;
        let fy = p[1] / h;
        let i0 = (fx.floor() as i64).clamp(-n, n - 1);
        let j0 = (fy.floor() as i64).clamp(-n, n - 1);
        let (tx, ty) = (fx - i0 as f64, fy - j0 as f64);
        let v = |i: i64, j: i64| self.value_at(i, j).expect("clamped to grid");
        let near = |t: f64| t.abs() < 1e-12;
        // Exact node hits skip the neighbors entirely.
        if near(tx) && near(ty) {
            return v(i0, j0);
        }
        (1.0 - tx) * (1.0 - ty) * v(i0, j0)
            + tx * (1.0 - ty) * v(i0 + 1, j0)
            + (1.0 - tx) * ty * v(i0, j0 + 1)
            + tx * ty * v(i0 + 1, j0 + 1)
    }

    /// Sup norm over interior and Dirichlet nodes.
    pub fn sup_norm(&self) -> f64 {
        self.mask
            .roles()
            .iter()
            .zip(&self.values)
            .filter(|(r, _)| **r != Role::Exterior)
            .map(|(_, v)| v.abs())
            .fold(0.0, f64::max)
    }

    /// Multiplies the field (and its data) by `t`.
    pub fn scaled(&self, t: f64) -> SolutionField {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= t);
        out.hit_values.iter_mut().for_each(|v| *v *= t);
        out.source.iter_mut().for_each(|v| *v *= t);
        out.residual_inf *= t.abs();
        out
    }

    pub fn metadata(&self, tol: f64) -> FieldMetadata {
        FieldMetadata {
            operator: self.operator,
            ell: self.ell,
            h: self.mask.h(),
            width: self.mask.stencil().width(),
            tol,
            iterations: self.iterations,
            residual_inf: self.residual_inf,
            strategy: self.strategy.clone(),
            source: self.source_description.clone(),
        }
    }

    /// Writes `(i, j, x1, x2, role, u, residual)` for every non-exterior node;
    /// the residual column is empty on Dirichlet nodes.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let (residual, _) = residual_profile(self);
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["i", "j", "x1", "x2", "role", "u", "residual"])?;
        for idx in 0..self.mask.node_count() {
            let role = self.mask.role(idx);
            if role == Role::Exterior {
                continue;
            }
            let (i, j) = self.mask.coords(idx);
            let p = self.mask.point(idx);
            let r = self
                .mask
                .slot(idx)
                .map(|k| residual[k].to_string())
                .unwrap_or_default();
            w.write_record([
                i.to_string(),
                j.to_string(),
                p[0].to_string(),
                p[1].to_string(),
                role.as_str().to_string(),
                self.values[idx].to_string(),
                r,
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
