//! Boundary growth experiments: solve a scenario's extremal equation on its
//! model domain, then read off the dyadic profiles
//!
//! * `Q(r) = sup_{Ω∩B_r} |u − u(0)| / r` (boundary Lipschitz quotient),
//! * `q(r) = u(r·l) / (r·l₂)` (normal growth along a probe direction `l`),
//!
//! and judge them against the expected trend of the scenario.

mod data;
mod flat;
mod norms;
mod scenario;

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::certify::{growth_product, Sign};
use crate::error::{Error, Result};
use crate::geometry::{rasterize, DomainSpec, GridMask, Point, Role};
use crate::pucci::EllipticityPair;
use crate::solver::{solve_dirichlet, DirichletProblem, OperatorTag, SolutionField, SolveOptions, StencilSet};

pub use data::{BoundaryData, SourceData};
pub use flat::{
    flat_c1alpha_check, flat_hopf_check, notch_hopf_check, C1AlphaRow, C1AlphaStudy, FlatHopfStudy,
    HopfRow, NotchStudy,
};
pub use norms::{check_pointwise_norms, NormKind, PointwiseNorm, Samples};
pub use scenario::{scenario_by_name, scenarios, Scenario, ScenarioKind, TREND_START};

pub const GROWTH_CSV_HEADER: [&str; 8] = ["k", "r", "l1", "l2", "Q", "q", "omega_tilde_predicted", "verdict"];

/// Smallest node count in `(Ω ∩ B_r) \ B_{r/2}` for `Q(r)` to count.
pub const MIN_ANNULUS_NODES: usize = 20;
/// Smallest `r/h` at which a probe value `u(r·l)` counts.
pub const MIN_PROBE_CELLS: f64 = 2.0;
/// First dyadic index of every profile (`r = 1/4`).
pub const FIRST_INDEX: u32 = 2;
/// Radius of the ball the `C^{1,α}` and Hopf constants are measured on.
pub const FLAT_BALL: f64 = 0.125;

/// Parameters of the cumulative factor `ω̃(2^{-k}) = ∏(1 ± c₀ω(2^{-i}))`
/// printed next to each profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmegaTildeParams {
    pub c0: f64,
    pub eta: f64,
}

impl Default for OmegaTildeParams {
    fn default() -> Self {
        OmegaTildeParams { c0: 0.125, eta: 0.5 }
    }
}

/// Everything needed to run one scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub scenario: ScenarioKind,
    pub domain: DomainSpec,
    pub operator: OperatorTag,
    pub ell: EllipticityPair,
    pub boundary: BoundaryData,
    #[serde(default)]
    pub source: SourceData,
    pub h: f64,
    #[serde(rename = "W")]
    pub width: u32,
    /// Unit probe directions with `l₂ > 0`; the first one is the primary.
    pub probes: Vec<Point>,
    /// Last dyadic index `K` of the profile.
    #[serde(rename = "K")]
    pub horizon: u32,
    #[serde(default)]
    pub solve: SolveOptions,
    #[serde(default)]
    pub omega_tilde: OmegaTildeParams,
}

impl ProblemSpec {
    /// The canonical configuration of a scenario at grid spacing `h`.
    pub fn canonical(kind: ScenarioKind, h: f64) -> ProblemSpec {
        kind.scenario().canonical(h)
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        self.ell.validate()?;
        if !(self.h > 0.0) {
            return Err(Error::InvalidProblem(format!("grid spacing {} must be positive", self.h)));
        }
        if self.probes.is_empty() {
            return Err(Error::InvalidProblem("at least one probe direction is required".into()));
        }
        for l in &self.probes {
            if (l[0].hypot(l[1]) - 1.0).abs() > 1e-9 || !(l[1] > 0.0) {
                return Err(Error::InvalidProblem(format!(
                    "probe {l:?} must be a unit vector with l2 > 0"
                )));
            }
        }
        if self.horizon < FIRST_INDEX + 1 {
            return Err(Error::InvalidProblem(format!(
                "horizon K = {} must be at least {}",
                self.horizon,
                FIRST_INDEX + 1
            )));
        }
        self.boundary.validate(&self.domain)?;
        self.source.validate()?;
        self.scenario.scenario().check_compatible(self)
    }
}

/// One named pass/fail judgement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(name: &str, pass: bool, detail: String) -> Self {
        Verdict {
            name: name.to_string(),
            pass,
            detail,
        }
    }
}

/// Dyadic growth profile of a solved scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub scenario: ScenarioKind,
    pub h: f64,
    /// Dyadic indices `k`, with `r_k = 2^{-k}`.
    pub ks: Vec<u32>,
    pub radii: Vec<f64>,
    #[serde(rename = "Q")]
    pub big_q: Vec<f64>,
    /// Whether `Q(r_k)` has enough nodes in its annulus.
    pub big_q_resolved: Vec<bool>,
    pub probes: Vec<Point>,
    /// `q[p][k]` for probe `p`.
    pub q: Vec<Vec<f64>>,
    /// Whether `r_k ≥ 2h`, so the probe point is off the wall by a cell.
    pub q_resolved: Vec<bool>,
    /// Slope of `log sup_{B_r}|u − u(0)|` against `log r` over resolved radii.
    pub fitted_exponent: f64,
    /// `u(e₂/2)` before normalization, when the scenario normalizes.
    pub normalization: Option<f64>,
    /// `ω̃(r_k)` from the growth (+) or decay (−) product, when applicable.
    pub omega_tilde: Option<Vec<f64>>,
    /// Measured constants (flat-boundary scenarios).
    pub constants: BTreeMap<String, f64>,
    pub verdicts: Vec<Verdict>,
}

impl GrowthReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    fn index_of(&self, k: u32) -> Option<usize> {
        self.ks.iter().position(|&x| x == k)
    }

    /// Resolved `(k, q)` pairs of probe `p`.
    pub fn resolved_q(&self, p: usize) -> Vec<(u32, f64)> {
        self.ks
            .iter()
            .zip(&self.q[p])
            .zip(&self.q_resolved)
            .filter(|(_, &ok)| ok)
            .map(|((&k, &v), _)| (k, v))
            .collect()
    }

    /// Resolved `(k, Q)` pairs.
    pub fn resolved_big_q(&self) -> Vec<(u32, f64)> {
        self.ks
            .iter()
            .zip(&self.big_q)
            .zip(&self.big_q_resolved)
            .filter(|(_, &ok)| ok)
            .map(|((&k, &v), _)| (k, v))
            .collect()
    }

    /// `ω̃(r_k)/ω̃(r_j)`.
    pub fn omega_tilde_ratio(&self, k: u32, j: u32) -> Option<f64> {
        let w = self.omega_tilde.as_ref()?;
        Some(w[self.index_of(k)?] / w[self.index_of(j)?])
    }

    /// Rows of `(k, r, l1, l2, Q, q, omega_tilde_predicted, verdict)`, one
    /// per probe and radius. Unresolved entries are empty and their verdict
    /// is `excluded`.
    pub fn csv_records(&self) -> Vec<[String; 8]> {
        let overall = if self.passed() { "pass" } else { "fail" };
        let mut rows = Vec::with_capacity(self.probes.len() * self.ks.len());
        for (p, l) in self.probes.iter().enumerate() {
            for (i, &k) in self.ks.iter().enumerate() {
                let big_q = if self.big_q_resolved[i] {
                    self.big_q[i].to_string()
                } else {
                    String::new()
                };
                let q = if self.q_resolved[i] {
                    self.q[p][i].to_string()
                } else {
                    String::new()
                };
                let wt = self
                    .omega_tilde
                    .as_ref()
                    .map(|v| v[i].to_string())
                    .unwrap_or_default();
                let verdict = if self.q_resolved[i] || self.big_q_resolved[i] {
                    overall
                } else {
                    "excluded"
                };
                rows.push([
                    k.to_string(),
                    self.radii[i].to_string(),
                    l[0].to_string(),
                    l[1].to_string(),
                    big_q,
                    q,
                    wt,
                    verdict.to_string(),
                ]);
            }
        }
        rows
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(GROWTH_CSV_HEADER)?;
        for row in self.csv_records() {
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Rasterizes and solves the scenario's Dirichlet problem, without
/// normalization.
pub fn solve_spec(spec: &ProblemSpec) -> Result<SolutionField> {
    let stencil = StencilSet::new(spec.width)?;
    let mask = Arc::new(rasterize(&spec.domain, spec.h, &stencil)?);
    let boundary = spec.boundary.function(&spec.domain)?;
    let source = spec.source.function();
    let problem = DirichletProblem {
        mask,
        operator: spec.operator,
        ell: spec.ell,
        source: &*source,
        boundary: &*boundary,
        source_description: spec.source.describe(),
    };
    solve_dirichlet(&problem, &spec.solve)
}

/// Solves the scenario and measures its growth profile.
pub fn run_scenario(spec: &ProblemSpec) -> Result<(SolutionField, GrowthReport)> {
    spec.validate()?;
    let scenario = spec.scenario.scenario();
    let mut field = solve_spec(spec)?;
    let normalization = if scenario.normalizes() {
        let n = field.sample([0.0, 0.5 * spec.domain.radius()]);
        if !(n > 0.0) {
            return Err(Error::InvalidProblem(format!(
                "cannot normalize by u(e2/2) = {n}"
            )));
        }
        field = field.scaled(1.0 / n);
        Some(n)
    } else {
        None
    };
    let mut report = measure_growth(spec, &field)?;
    report.normalization = normalization;
    report.constants = scenario.constants(spec, &field, &report)?;
    report.verdicts = scenario.verdicts(spec, &report);
    Ok((field, report))
}

/// Non-exterior nodes as `(point, value)` pairs.
pub(crate) fn closure_nodes(field: &SolutionField) -> impl Iterator<Item = (Point, f64)> + '_ {
    let mask: &GridMask = &field.mask;
    (0..mask.node_count())
        .filter(move |&i| mask.role(i) != Role::Exterior)
        .map(move |i| (mask.point(i), field.values[i]))
}

fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    if points.len() < 2 {
        return f64::NAN;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Least-squares slope of `ln y` against `ln x`.
pub(crate) fn fit_exponent(xy: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = xy
        .iter()
        .filter(|(_, y)| *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    log_log_slope(&logs)
}

fn measure_growth(spec: &ProblemSpec, field: &SolutionField) -> Result<GrowthReport> {
    let h = field.mask.h();
    let u0 = field.values[field.mask.origin_index()];
    let ks: Vec<u32> = (FIRST_INDEX..=spec.horizon).collect();
    let radii: Vec<f64> = ks.iter().map(|&k| 0.5f64.powi(k as i32)).collect();

    let nodes: Vec<(f64, f64)> = closure_nodes(field)
        .map(|(p, v)| (p[0].hypot(p[1]), (v - u0).abs()))
        .collect();
    let mut big_q = Vec::with_capacity(ks.len());
    let mut big_q_resolved = Vec::with_capacity(ks.len());
    let mut sups = Vec::with_capacity(ks.len());
    for &r in &radii {
        let mut sup = 0.0f64;
        let mut annulus = 0usize;
        for &(d, v) in &nodes {
            if d <= r {
                sup = sup.max(v);
                if d > 0.5 * r {
                    annulus += 1;
                }
            }
        }
        big_q.push(sup / r);
        big_q_resolved.push(annulus >= MIN_ANNULUS_NODES);
        sups.push((r, sup));
    }
    if !big_q_resolved[0] {
        return Err(Error::Resolution {
            i: 0,
            j: 0,
            reason: format!("the annulus at r = 1/4 has fewer than {MIN_ANNULUS_NODES} nodes at h = {h}"),
        });
    }
    let q_resolved: Vec<bool> = radii.iter().map(|&r| r >= MIN_PROBE_CELLS * h * (1.0 - 1e-12)).collect();
    let q: Vec<Vec<f64>> = spec
        .probes
        .iter()
        .map(|l| {
            radii
                .iter()
                .map(|&r| field.sample([r * l[0], r * l[1]]) / (r * l[1]))
                .collect()
        })
        .collect();
    let resolved_sups: Vec<(f64, f64)> = sups
        .iter()
        .zip(&big_q_resolved)
        .filter(|(_, &ok)| ok)
        .map(|(s, _)| *s)
        .collect();
    let fitted_exponent = fit_exponent(&resolved_sups);

    let omega_tilde = match (spec.scenario.scenario().growth_sign(), &spec.domain) {
        (Some(sign), DomainSpec::Graph { omega, .. }) => Some(omega_tilde_profile(
            omega,
            &spec.omega_tilde,
            sign,
            &ks,
        )?),
        _ => None,
    };

    Ok(GrowthReport {
        scenario: spec.scenario,
        h,
        ks,
        radii,
        big_q,
        big_q_resolved,
        probes: spec.probes.clone(),
        q,
        q_resolved,
        fitted_exponent,
        normalization: None,
        omega_tilde,
        constants: BTreeMap::new(),
        verdicts: Vec::new(),
    })
}

/// `ω̃` at each dyadic index; the product runs over `i ≤ k` in steps of `η`,
/// so `k` counts `η`-steps (equal to the dyadic index for `η = 1/2`).
pub fn omega_tilde_profile(
    omega: &crate::dini::Modulus,
    p: &OmegaTildeParams,
    sign: Sign,
    ks: &[u32],
) -> Result<Vec<f64>> {
    let horizon = ks.iter().copied().max().unwrap_or(0) as usize;
    let g = growth_product(omega, p.c0, p.eta, horizon, sign, 1.0)?;
    Ok(ks.iter().map(|&k| g.values[k as usize]).collect())
}
