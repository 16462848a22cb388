use serde::{Deserialize, Serialize};

use super::{closure_nodes, fit_exponent, run_scenario, ProblemSpec, ScenarioKind, FIRST_INDEX, FLAT_BALL};
use crate::error::{Error, Result};
use crate::geometry::DomainSpec;
use crate::solver::SolutionField;

/// Last dyadic index of the `C^{1,α}` fit window `[2^{-6}, 2^{-2}]`.
const FIT_LAST_INDEX: i32 = 6;
/// Relative size of `sup|u − a x₂|` below which the field counts as linear.
const LINEAR_THRESHOLD: f64 = 1e-7;
pub const C1ALPHA_STABILITY: f64 = 0.20;
pub const HOPF_STABILITY: f64 = 0.25;

pub(crate) struct C1AlphaFit {
    pub a: f64,
    pub alpha: Option<f64>,
    pub c_bound: f64,
}

/// Least-squares `a` of `u ≈ a x₂` on `B_{1/8}⁺`, then the slope `1 + α` of
/// `log sup_{B_r⁺}|u − a x₂|` against `log r` over `r ∈ [2^{-6}, 2^{-2}]`.
pub(crate) fn c1alpha_fit(field: &SolutionField) -> C1AlphaFit {
    let nodes: Vec<_> = closure_nodes(field).collect();
    let (mut num, mut den) = (0.0, 0.0);
    for (p, u) in &nodes {
        if p[0].hypot(p[1]) <= FLAT_BALL {
            num += u * p[1];
            den += p[1] * p[1];
        }
    }
    let a = num / den;
    let sup_u = nodes.iter().map(|(_, u)| u.abs()).fold(0.0, f64::max);
    let errors: Vec<(f64, f64)> = (FIRST_INDEX as i32..=FIT_LAST_INDEX)
        .map(|k| {
            let r = 0.5f64.powi(k);
            let e = nodes
                .iter()
                .filter(|(p, _)| p[0].hypot(p[1]) <= r)
                .map(|(p, u)| (u - a * p[1]).abs())
                .fold(0.0, f64::max);
            (r, e)
        })
        .collect();
    let worst = errors.iter().map(|e| e.1).fold(0.0, f64::max);
    let alpha = if worst <= LINEAR_THRESHOLD * sup_u.max(f64::MIN_POSITIVE) {
        None
    } else {
        Some(fit_exponent(&errors) - 1.0)
    };
    C1AlphaFit {
        a,
        alpha,
        c_bound: a.abs() / sup_u,
    }
}

/// `min u/x₂` over closure nodes in `B_{1/8}` with `x₂ > 0`.
pub(crate) fn hopf_constant(field: &SolutionField) -> f64 {
    closure_nodes(field)
        .filter(|(p, _)| p[1] > 0.0 && p[0].hypot(p[1]) <= FLAT_BALL)
        .map(|(p, u)| u / p[1])
        .fold(f64::INFINITY, f64::min)
}

fn relative_spread(values: &[f64]) -> f64 {
    values
        .windows(2)
        .map(|w| ((w[1] - w[0]) / w[0]).abs())
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct C1AlphaRow {
    pub h: f64,
    pub a: f64,
    /// `None` when the solution is linear to solver tolerance.
    pub alpha: Option<f64>,
    /// Measured `C` in `|a| ≤ C‖u‖∞`.
    pub c: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct C1AlphaStudy {
    pub rows: Vec<C1AlphaRow>,
    /// Largest relative change of `α` between consecutive grids.
    pub alpha_spread: f64,
    pub pass: bool,
}

fn with_h(template: &ProblemSpec, kind: ScenarioKind, h: f64) -> Result<ProblemSpec> {
    if template.scenario != kind {
        return Err(Error::InvalidProblem(format!(
            "expected a {} template, got {}",
            kind.name(),
            template.scenario.name()
        )));
    }
    let mut spec = template.clone();
    spec.h = h;
    Ok(spec)
}

/// Runs the flat-boundary `C^{1,α}` fit on each grid of `h_list`. Passes when
/// every fitted `α` is positive and consecutive grids agree within 20%
/// (an exactly linear solution passes trivially).
pub fn flat_c1alpha_check(template: &ProblemSpec, h_list: &[f64]) -> Result<C1AlphaStudy> {
    let mut rows = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let (_, report) = run_scenario(&with_h(template, ScenarioKind::FlatC1alpha, h)?)?;
        let c = &report.constants;
        rows.push(C1AlphaRow {
            h,
            a: c["a"],
            alpha: c.get("alpha").copied(),
            c: c["C"],
        });
    }
    let alphas: Vec<f64> = rows.iter().filter_map(|r| r.alpha).collect();
    let alpha_spread = relative_spread(&alphas);
    let pass = if alphas.is_empty() {
        true
    } else {
        alphas.len() == rows.len()
            && alphas.iter().all(|&a| a > 0.0)
            && alpha_spread <= C1ALPHA_STABILITY
            && rows.iter().all(|r| r.c.is_finite())
    };
    Ok(C1AlphaStudy {
        rows,
        alpha_spread,
        pass,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HopfRow {
    /// Grid spacing (flat study) or notch offset (notch study).
    pub param: f64,
    pub c: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatHopfStudy {
    pub rows: Vec<HopfRow>,
    pub c_spread: f64,
    pub pass: bool,
}

/// `c = min u/x₂` on `B_{1/8}⁺` for the normalized flat Hopf problem on each
/// grid. Passes when every `c > 0` and consecutive grids agree within 25%.
pub fn flat_hopf_check(template: &ProblemSpec, h_list: &[f64]) -> Result<FlatHopfStudy> {
    let mut rows = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let (_, report) = run_scenario(&with_h(template, ScenarioKind::FlatHopf, h)?)?;
        rows.push(HopfRow {
            param: h,
            c: report.constants["c"],
        });
    }
    let cs: Vec<f64> = rows.iter().map(|r| r.c).collect();
    let c_spread = relative_spread(&cs);
    let pass = cs.iter().all(|&c| c > 0.0) && c_spread <= HOPF_STABILITY;
    Ok(FlatHopfStudy { rows, c_spread, pass })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NotchStudy {
    pub rows: Vec<HopfRow>,
    pub min_c: f64,
    pub pass: bool,
}

/// `c(a) = min u/x₂` on `B_{1/8}⁺` for the notch problem at each offset.
pub fn notch_hopf_check(template: &ProblemSpec, a_values: &[f64]) -> Result<NotchStudy> {
    let base = with_h(template, ScenarioKind::NotchHopf, template.h)?;
    let mut rows = Vec::with_capacity(a_values.len());
    for &a in a_values {
        let mut spec = base.clone();
        spec.domain = DomainSpec::Notch {
            a,
            radius: base.domain.radius(),
        };
        let (_, report) = run_scenario(&spec)?;
        rows.push(HopfRow {
            param: a,
            c: report.constants["c"],
        });
    }
    let min_c = rows.iter().map(|r| r.c).fold(f64::INFINITY, f64::min);
    Ok(NotchStudy {
        rows,
        min_c,
        pass: min_c > 0.0,
    })
}
