use serde::{Deserialize, Serialize};

use super::closure_nodes;
use crate::dini::Modulus;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::solver::SolutionField;

/// Smallest `r/h` at which a discrete `L²(B_r)` norm is taken.
const MIN_BALL_CELLS: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormKind {
    #[serde(rename = "C01")]
    C01,
    #[serde(rename = "C1Dini")]
    C1Dini,
    #[serde(rename = "Cm1Dini")]
    Cm1Dini,
}

/// Grid samples of a function around the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct Samples {
    /// Grid spacing; the cell area `h²` weights discrete `L²` norms.
    pub h: f64,
    pub points: Vec<Point>,
    pub values: Vec<f64>,
    pub at_origin: f64,
}

impl Samples {
    /// Closure nodes of a solved field.
    pub fn from_field(field: &SolutionField) -> Samples {
        let (points, values) = closure_nodes(field).unzip();
        Samples {
            h: field.mask.h(),
            points,
            values,
            at_origin: field.values[field.mask.origin_index()],
        }
    }

    /// Samples `f` on the nodes `(ih, jh)` of `[-R, R]²` inside `B_R` that
    /// satisfy `keep`.
    pub fn from_fn(h: f64, radius: f64, f: impl Fn(Point) -> f64, keep: impl Fn(Point) -> bool) -> Samples {
        let n = (radius / h).floor() as i64;
        let mut points = Vec::new();
        let mut values = Vec::new();
        for j in -n..=n {
            for i in -n..=n {
                let p = [i as f64 * h, j as f64 * h];
                if p[0].hypot(p[1]) <= radius && keep(p) {
                    points.push(p);
                    values.push(f(p));
                }
            }
        }
        Samples {
            h,
            points,
            values,
            at_origin: f([0.0, 0.0]),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointwiseNorm {
    pub kind: NormKind,
    pub constant: f64,
    /// Least-squares linear part (C1Dini only).
    pub gradient: Option<Point>,
    /// Set when ω vanishes where the numerator does not.
    pub unbounded: bool,
    pub pass: bool,
}

/// Pointwise regularity constant of sampled data at the origin:
///
/// * `C01`: `sup |f(x) − f(0)| / |x|`;
/// * `C1Dini`: least-squares linear part `ℓ`, then
///   `sup |f(x) − f(0) − ℓ·x| / (|x| ω(|x|))`;
/// * `Cm1Dini`: `max_r ‖f‖_{L²(B_r)} / ω(r)` over dyadic `r ≥ 4h`.
pub fn check_pointwise_norms(samples: &Samples, kind: NormKind, omega: Option<&Modulus>) -> Result<PointwiseNorm> {
    let need_omega = || {
        omega.ok_or_else(|| Error::InvalidProblem(format!("{kind:?} needs a modulus")))
    };
    let tiny = 1e-14 * samples.values.iter().map(|v| v.abs()).fold(1.0, f64::max);
    let mut unbounded = false;
    let (constant, gradient) = match kind {
        NormKind::C01 => {
            let c = samples
                .points
                .iter()
                .zip(&samples.values)
                .filter(|(p, _)| p[0] != 0.0 || p[1] != 0.0)
                .map(|(p, v)| (v - samples.at_origin).abs() / p[0].hypot(p[1]))
                .fold(0.0, f64::max);
            (c, None)
        }
        NormKind::C1Dini => {
            let omega = need_omega()?;
            let l = linear_part(samples);
            let mut c = 0.0f64;
            for (p, v) in samples.points.iter().zip(&samples.values) {
                let r = p[0].hypot(p[1]);
                if r == 0.0 {
                    continue;
                }
                let num = (v - samples.at_origin - l[0] * p[0] - l[1] * p[1]).abs();
                let den = r * omega.eval(r.min(omega.domain_radius))?;
                if den > 0.0 {
                    c = c.max(num / den);
                } else if num > tiny {
                    unbounded = true;
                }
            }
            (c, Some(l))
        }
        NormKind::Cm1Dini => {
            let omega = need_omega()?;
            let reach = samples
                .points
                .iter()
                .map(|p| p[0].hypot(p[1]))
                .fold(0.0, f64::max)
                .min(omega.domain_radius);
            let mut r = 2f64.powi(reach.log2().floor() as i32);
            let mut c = 0.0f64;
            while r >= MIN_BALL_CELLS * samples.h {
                let sq: f64 = samples
                    .points
                    .iter()
                    .zip(&samples.values)
                    .filter(|(p, _)| p[0].hypot(p[1]) <= r)
                    .map(|(_, v)| v * v)
                    .sum();
                let norm = (sq * samples.h * samples.h).sqrt();
                let w = omega.eval(r)?;
                if w > 0.0 {
                    c = c.max(norm / w);
                } else if norm > tiny {
                    unbounded = true;
                }
                r *= 0.5;
            }
            (c, None)
        }
    };
    Ok(PointwiseNorm {
        kind,
        constant,
        gradient,
        unbounded,
        pass: !unbounded && constant.is_finite(),
    })
}

/// Least-squares `ℓ` minimizing `Σ (f(x) − f(0) − ℓ·x)²`.
fn linear_part(samples: &Samples) -> Point {
    let (mut sxx, mut sxy, mut syy, mut bx, mut by) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (p, v) in samples.points.iter().zip(&samples.values) {
        let d = v - samples.at_origin;
        sxx += p[0] * p[0];
        sxy += p[0] * p[1];
        syy += p[1] * p[1];
        bx += p[0] * d;
        by += p[1] * d;
    }
    let det = sxx * syy - sxy * sxy;
    if det.abs() <= f64::EPSILON * (sxx * syy).max(f64::MIN_POSITIVE) {
        return [0.0, 0.0];
    }
    [(syy * bx - sxy * by) / det, (sxx * by - sxy * bx) / det]
}
