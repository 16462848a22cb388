use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::data::{BoundaryData, SourceData};
use super::flat::{c1alpha_fit, hopf_constant};
use super::{GrowthReport, OmegaTildeParams, ProblemSpec, Verdict};
use crate::certify::Sign;
use crate::dini::{dini_integral, Modulus};
use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, GraphSign, Point};
use crate::pucci::EllipticityPair;
use crate::solver::{OperatorTag, SolutionField, SolveOptions};

/// `max_k Q(r_k) ≤ LIPSCHITZ_Q_FACTOR · Q(1/4)`.
pub const LIPSCHITZ_Q_FACTOR: f64 = 4.0;
/// `min_k q(r_k) ≥ q(1/4) / HOPF_FLOOR_DIVISOR`.
pub const HOPF_FLOOR_DIVISOR: f64 = 4.0;
/// `q(r_K)/q(r_3) ≥ ANTI_LIPSCHITZ_FRACTION · ω̃(r_K)/ω̃(r_3)`.
pub const ANTI_LIPSCHITZ_FRACTION: f64 = 0.5;
/// `q(r_K) ≤ q(r_3) · ω̃(r_K)/ω̃(r_3) · ANTI_HOPF_FACTOR`.
pub const ANTI_HOPF_FACTOR: f64 = 2.0;
/// First index of the monotone-trend window.
pub const TREND_START: u32 = 3;

const OBLIQUE: Point = [0.6, 0.8];
const NORMAL: Point = [0.0, 1.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Lipschitz,
    AntiLipschitz,
    Hopf,
    AntiHopf,
    FlatC1alpha,
    FlatHopf,
    NotchHopf,
}

impl ScenarioKind {
    pub fn scenario(&self) -> &'static dyn Scenario {
        match self {
            ScenarioKind::Lipschitz => &Lipschitz,
            ScenarioKind::AntiLipschitz => &AntiLipschitz,
            ScenarioKind::Hopf => &Hopf,
            ScenarioKind::AntiHopf => &AntiHopf,
            ScenarioKind::FlatC1alpha => &FlatC1alpha,
            ScenarioKind::FlatHopf => &FlatHopf,
            ScenarioKind::NotchHopf => &NotchHopf,
        }
    }

    pub fn name(&self) -> &'static str {
        self.scenario().name()
    }
}

/// One experiment: its canonical setup, what it accepts, and how it judges
/// the measured profile.
pub trait Scenario: Send + Sync {
    fn kind(&self) -> ScenarioKind;

    fn name(&self) -> &'static str;

    fn canonical(&self, h: f64) -> ProblemSpec;

    /// Rejects domains, data or operators the experiment does not cover.
    fn check_compatible(&self, spec: &ProblemSpec) -> Result<()>;

    /// Whether the field is divided by `u(e₂/2)` before measuring.
    fn normalizes(&self) -> bool {
        false
    }

    /// Sign of the `ω̃` product printed with the profile.
    fn growth_sign(&self) -> Option<Sign> {
        None
    }

    fn constants(
        &self,
        _spec: &ProblemSpec,
        _field: &SolutionField,
        _report: &GrowthReport,
    ) -> Result<BTreeMap<String, f64>> {
        Ok(BTreeMap::new())
    }

    fn verdicts(&self, spec: &ProblemSpec, report: &GrowthReport) -> Vec<Verdict>;
}

pub struct Lipschitz;
pub struct AntiLipschitz;
pub struct Hopf;
pub struct AntiHopf;
pub struct FlatC1alpha;
pub struct FlatHopf;
pub struct NotchHopf;

static SCENARIOS: [&dyn Scenario; 7] = [
    &Lipschitz,
    &AntiLipschitz,
    &Hopf,
    &AntiHopf,
    &FlatC1alpha,
    &FlatHopf,
    &NotchHopf,
];

pub fn scenarios() -> &'static [&'static dyn Scenario] {
    &SCENARIOS
}

pub fn scenario_by_name(name: &str) -> Result<&'static dyn Scenario> {
    SCENARIOS
        .iter()
        .copied()
        .find(|s| s.name() == name)
        .ok_or_else(|| Error::UnknownName {
            kind: "scenario",
            name: name.to_string(),
        })
}

fn base_spec(kind: ScenarioKind, domain: DomainSpec, operator: OperatorTag, boundary: BoundaryData, h: f64) -> ProblemSpec {
    ProblemSpec {
        scenario: kind,
        domain,
        operator,
        ell: EllipticityPair {
            lambda: 1.0,
            big_lambda: 2.0,
        },
        boundary,
        source: SourceData::Zero,
        h,
        width: 3,
        probes: vec![NORMAL],
        horizon: 6,
        solve: SolveOptions::default(),
        omega_tilde: OmegaTildeParams::default(),
    }
}

fn wall_zero_sphere_one() -> BoundaryData {
    BoundaryData::Piecewise { wall: 0.0, outer: 1.0 }
}

fn is_dini(omega: &Modulus, radius: f64) -> Result<bool> {
    Ok(dini_integral(omega, radius.min(omega.domain_radius), 1e-9)?.is_dini)
}

fn incompatible(scenario: &str, what: String) -> Error {
    Error::InvalidProblem(format!("{scenario}: {what}"))
}

/// Wall data zero and outer data nonnegative, so `u(0) = 0` and `u ≥ 0`.
fn require_nonnegative_vanishing(name: &str, spec: &ProblemSpec) -> Result<()> {
    match &spec.boundary {
        BoundaryData::Piecewise { wall, outer } if *wall == 0.0 && *outer >= 0.0 => Ok(()),
        other => Err(incompatible(
            name,
            format!("needs piecewise data with wall = 0 and outer >= 0, got {other:?}"),
        )),
    }
}

fn require_zero_source(name: &str, spec: &ProblemSpec) -> Result<()> {
    if spec.source == SourceData::Zero {
        Ok(())
    } else {
        Err(incompatible(name, "needs a zero source".into()))
    }
}

/// `(k, value)` pairs with `k ≥ TREND_START`.
fn trend_window(values: &[(u32, f64)]) -> Vec<(u32, f64)> {
    values.iter().copied().filter(|(k, _)| *k >= TREND_START).collect()
}

fn probe_label(l: &Point) -> String {
    format!("({}, {})", l[0], l[1])
}

impl Scenario for Lipschitz {
    fn kind(&self) -> ScenarioKind {
        ScenarioKind::Lipschitz
    }
    fn name(&self) -> &'static str {
        "lipschitz"
    }
    fn growth_sign(&self) -> Option<Sign> {
        Some(Sign::Plus)
    }

    fn canonical(&self, h: f64) -> ProblemSpec {
        let omega = Modulus::power(0.5, 1.0);
        base_spec(
            self.kind(),
            DomainSpec::graph(GraphSign::ExteriorMinus, omega.clone(), 1.0),
            OperatorTag::PucciPlus,
            BoundaryData::DiniWall {
                omega_g: omega,
                scale: 1.0,
                outer: 1.0,
            },
            h,
        )
    }

    /// The exterior condition holds for any domain lying above a Dini graph
    /// `x₂ = −|x₁|ω(|x₁|)`, which includes the half ball, wedges and every
    /// interior-plus graph.
    fn check_compatible(&self, spec: &ProblemSpec) -> Result<()> {
        match &spec.domain {
            DomainSpec::Graph {
                sign: GraphSign::ExteriorMinus,
                omega,
                radius,
            } => {
                if !is_dini(omega, *radius)? {
                    return Err(incompatible(self.name(), "the exterior wall modulus must be Dini".into()));
                }
            }
            DomainSpec::Notch { .. } => {
                return Err(incompatible(self.name(), "the notch domain is not a graph domain".into()))
            }
            _ => {}
        }
        if let BoundaryData::DiniWall { omega_g, .. } = &spec.boundary {
            if !is_dini(omega_g, spec.domain.radius())? {
                return Err(incompatible(self.name(), "omega_g must be Dini".into()));
            }
        }
        if let SourceData::RadialDini { omega_f, .. } = &spec.source {
            if !is_dini(omega_f, spec.domain.radius())? {
                return Err(incompatible(self.name(), "omega_f must be Dini".into()));
            }
        }
        Ok(())
    }

    fn verdicts(&self, _spec: &ProblemSpec, report: &GrowthReport) -> Vec<Verdict> {
        let resolved = report.resolved_big_q();
        let q_ref = report.big_q[0];
        let max_q = resolved.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        vec![Verdict::new(
            "lipschitz_bounded",
            max_q <= LIPSCHITZ_Q_FACTOR * q_ref,
            format!(
                "max Q = {max_q} over k = {:?}, bound {LIPSCHITZ_Q_FACTOR}·Q(1/4) = {}",
                resolved.iter().map(|p| p.0).collect::<Vec<_>>(),
                LIPSCHITZ_Q_FACTOR * q_ref
            ),
        )]
    }
}

impl Scenario for Hopf {
    fn kind(&self) -> ScenarioKind {
        ScenarioKind::Hopf
    }
    fn name(&self) -> &'static str {
        "hopf"
    }
    fn normalizes(&self) -> bool {
        true
    }
    fn growth_sign(&self) -> Option<Sign> {
        Some(Sign::Minus)
    }

    fn canonical(&self, h: f64) -> ProblemSpec {
        let mut spec = base_spec(
            self.kind(),
            DomainSpec::graph(GraphSign::InteriorPlus, Modulus::power(0.5, 1.0), 1.0),
            OperatorTag::PucciMinus,
            wall_zero_sphere_one(),
            h,
        );
        spec.probes = vec![NORMAL, OBLIQUE];
        spec
    }

    /// The interior condition holds for any domain containing the region
    /// above a Dini graph `x₂ = |x₁|ω(|x₁|)`.
    fn check_compatible(&self, spec: &ProblemSpec) -> Result<()> {
        match &spec.domain {
            DomainSpec::HalfBall { .. }
            | DomainSpec::Graph {
                sign: GraphSign::ExteriorMinus,
                ..
            } => {}
            DomainSpec::Graph {
                sign: GraphSign::InteriorPlus,
                omega,
                radius,
            } => {
                if !is_dini(omega, *radius)? {
                    return Err(incompatible(self.name(), "the interior wall modulus must be Dini".into()));
                }
            }
            other => {
                return Err(incompatible(
                    self.name(),
                    format!("needs a half ball or graph domain, got {other:?}"),
                ))
            }
        }
        require_nonnegative_vanishing(self.name(), spec)?;
        require_zero_source(self.name(), spec)
    }

    fn verdicts(&self, _spec: &ProblemSpec, report: &GrowthReport) -> Vec<Verdict> {
        report
            .probes
            .iter()
            .enumerate()
            .map(|(p, l)| {
                let resolved = report.resolved_q(p);
                let q_ref = report.q[p][0];
                let min_q = resolved.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
                Verdict::new(
                    &format!("hopf_floor l={}", probe_label(l)),
                    q_ref > 0.0 && min_q >= q_ref / HOPF_FLOOR_DIVISOR,
                    format!("min q = {min_q}, floor q(1/4)/{HOPF_FLOOR_DIVISOR} = {}", q_ref / HOPF_FLOOR_DIVISOR),
                )
            })
            .collect()
    }
}

fn monotone_verdict(
    name: &str,
    report: &GrowthReport,
    p: usize,
    increasing: bool,
) -> (Verdict, Option<(u32, f64, f64)>) {
    let window = trend_window(&report.resolved_q(p));
    let strict = window.len() >= 2
        && window.windows(2).all(|w| if increasing { w[1].1 > w[0].1 } else { w[1].1 < w[0].1 });
    let ends = match (window.first(), window.last()) {
        (Some(&(k0, q0)), Some(&(k1, q1))) if k0 == TREND_START && k1 > k0 => Some((k1, q0, q1)),
        _ => None,
    };
    let word = if increasing { "increasing" } else { "decreasing" };
    let v = Verdict::new(
        &format!("{name} l={}", probe_label(&report.probes[p])),
        strict && ends.is_some(),
        format!(
            "q strictly {word} over k = {:?}: {:?}",
            window.iter().map(|x| x.0).collect::<Vec<_>>(),
            window.iter().map(|x| x.1).collect::<Vec<_>>()
        ),
    );
    (v, ends)
}

impl Scenario for AntiLipschitz {
    fn kind(&self) -> ScenarioKind {
        ScenarioKind::AntiLipschitz
    }
    fn name(&self) -> &'static str {
        "anti_lipschitz"
    }
    fn normalizes(&self) -> bool {
        true
    }
    fn growth_sign(&self) -> Option<Sign> {
        Some(Sign::Plus)
    }

    fn canonical(&self, h: f64) -> ProblemSpec {
        let mut spec = base_spec(
            self.kind(),
            DomainSpec::graph(GraphSign::ExteriorMinus, Modulus::log_inverse(1.0, 1.0), 1.0),
            OperatorTag::PucciMinus,
            wall_zero_sphere_one(),
            h,
        );
        spec.probes = vec![NORMAL, OBLIQUE];
        spec
    }

    fn check_compatible(&self, spec: &ProblemSpec) -> Result<()> {
        match &spec.domain {
            DomainSpec::Graph {
                sign: GraphSign::ExteriorMinus,
                omega,
                radius,
            } => {
                if is_dini(omega, *radius)? {
                    return Err(incompatible(self.name(), "the exterior wall modulus must be non-Dini".into()));
                }
            }
            other => {
                return Err(incompatible(
                    self.name(),
                    format!("needs an exterior_minus graph domain, got {other:?}"),
                ))
            }
        }
        require_nonnegative_vanishing(self.name(), spec)?;
        require_zero_source(self.name(), spec)
    }

    fn verdicts(&self, _spec: &ProblemSpec, report: &GrowthReport) -> Vec<Verdict> {
        let mut out = Vec::new();
        for p in 0..report.probes.len() {
            let (trend, ends) = monotone_verdict("anti_lipschitz_growth", report, p, true);
            out.push(trend);
            let label = probe_label(&report.probes[p]);
            out.push(match ends.and_then(|(k, q0, q1)| Some((k, q0, q1, report.omega_tilde_ratio(k, TREND_START)?))) {
                Some((k, q0, q1, ratio)) => Verdict::new(
                    &format!("anti_lipschitz_rate l={label}"),
                    q1 / q0 >= ANTI_LIPSCHITZ_FRACTION * ratio,
                    format!(
                        "q(r_{k})/q(r_3) = {}, {ANTI_LIPSCHITZ_FRACTION}·ω̃ ratio = {}",
                        q1 / q0,
                        ANTI_LIPSCHITZ_FRACTION * ratio
                    ),
                ),
                None => Verdict::new(
                    &format!("anti_lipschitz_rate l={label}"),
                    false,
                    "fewer than two resolved radii in the trend window".into(),
                ),
            });
        }
        out
    }
}

impl Scenario for AntiHopf {
    fn kind(&self) -> ScenarioKind {
        ScenarioKind::AntiHopf
    }
    fn name(&self) -> &'static str {
        "anti_hopf"
    }
    fn growth_sign(&self) -> Option<Sign> {
        Some(Sign::Minus)
    }

    fn canonical(&self, h: f64) -> ProblemSpec {
        let mut spec = base_spec(
            self.kind(),
            DomainSpec::graph(GraphSign::InteriorPlus, Modulus::log_inverse(1.0, 1.0), 1.0),
            OperatorTag::PucciPlus,
            wall_zero_sphere_one(),
            h,
        );
        spec.probes = vec![NORMAL, OBLIQUE];
        spec
    }

    fn check_compatible(&self, spec: &ProblemSpec) -> Result<()> {
        match &spec.domain {
            DomainSpec::Graph {
                sign: GraphSign::InteriorPlus,
                omega,
                radius,
            } => {
                if is_dini(omega, *radius)? {
                    return Err(incompatible(self.name(), "the interior wall modulus must be non-Dini".into()));
                }
            }
            DomainSpec::Wedge { slope, .. } if *slope > 0.0 => {}
            other => {
                return Err(incompatible(
                    self.name(),
                    format!("needs an interior_plus graph or a wedge, got {other:?}"),
                ))
            }
        }
        match &spec.boundary {
            BoundaryData::Piecewise { wall, .. } if *wall <= 0.0 => {}
            other => {
                return Err(incompatible(
                    self.name(),
                    format!("needs piecewise data with wall <= 0, got {other:?}"),
                ))
            }
        }
        require_zero_source(self.name(), spec)
    }

    fn verdicts(&self, _spec: &ProblemSpec, report: &GrowthReport) -> Vec<Verdict> {
        let mut out = Vec::new();
        for p in 0..report.probes.len() {
            let (trend, ends) = monotone_verdict("anti_hopf_decay", report, p, false);
            out.push(trend);
            let label = probe_label(&report.probes[p]);
            out.push(match ends.and_then(|(k, q0, q1)| Some((k, q0, q1, report.omega_tilde_ratio(k, TREND_START)?))) {
                Some((k, q0, q1, ratio)) => Verdict::new(
                    &format!("anti_hopf_rate l={label}"),
                    q1 <= q0 * ratio * ANTI_HOPF_FACTOR,
                    format!("q(r_{k}) = {q1}, q(r_3)·ω̃ ratio·{ANTI_HOPF_FACTOR} = {}", q0 * ratio * ANTI_HOPF_FACTOR),
                ),
                None => Verdict::new(
                    &format!("anti_hopf_rate l={label}"),
                    false,
                    "fewer than two resolved radii in the trend window, or no ω̃ profile".into(),
                ),
            });
        }
        out
    }
}

fn require_half_ball(name: &str, spec: &ProblemSpec) -> Result<()> {
    if matches!(spec.domain, DomainSpec::HalfBall { .. }) {
        Ok(())
    } else {
        Err(incompatible(name, "needs a half ball domain".into()))
    }
}

impl Scenario for FlatC1alpha {
    fn kind(&self) -> ScenarioKind {
        ScenarioKind::FlatC1alpha
    }
    fn name(&self) -> &'static str {
        "flat_c1alpha"
    }

    fn canonical(&self, h: f64) -> ProblemSpec {
        base_spec(
            self.kind(),
            DomainSpec::half_ball(1.0),
            OperatorTag::PucciPlus,
            wall_zero_sphere_one(),
            h,
        )
    }

    fn check_compatible(&self, spec: &ProblemSpec) -> Result<()> {
        require_half_ball(self.name(), spec)?;
        require_zero_source(self.name(), spec)?;
        match &spec.boundary {
            BoundaryData::Piecewise { wall, .. } if *wall == 0.0 => Ok(()),
            BoundaryData::Linear { gradient, offset } if gradient[0] == 0.0 && *offset == 0.0 => Ok(()),
            other => Err(incompatible(
                self.name(),
                format!("needs data vanishing on the flat wall, got {other:?}"),
            )),
        }
    }

    fn constants(
        &self,
        _spec: &ProblemSpec,
        field: &SolutionField,
        _report: &GrowthReport,
    ) -> Result<BTreeMap<String, f64>> {
        let fit = c1alpha_fit(field);
        let mut c = BTreeMap::new();
        c.insert("a".into(), fit.a);
        c.insert("C".into(), fit.c_bound);
        match fit.alpha {
            Some(alpha) => {
                c.insert("alpha".into(), alpha);
            }
            None => {
                c.insert("exact_linear".into(), 1.0);
            }
        }
        Ok(c)
    }

    fn verdicts(&self, _spec: &ProblemSpec, report: &GrowthReport) -> Vec<Verdict> {
        match report.constants.get("alpha") {
            Some(&alpha) => vec![Verdict::new(
                "c1alpha_exponent",
                alpha > 0.0,
                format!("fitted alpha = {alpha}"),
            )],
            None => vec![Verdict::new(
                "c1alpha_exponent",
                true,
                "solution is linear to solver tolerance; no exponent to fit".into(),
            )],
        }
    }
}

impl Scenario for FlatHopf {
    fn kind(&self) -> ScenarioKind {
        ScenarioKind::FlatHopf
    }
    fn name(&self) -> &'static str {
        "flat_hopf"
    }
    fn normalizes(&self) -> bool {
        true
    }

    fn canonical(&self, h: f64) -> ProblemSpec {
        base_spec(
            self.kind(),
            DomainSpec::half_ball(1.0),
            OperatorTag::PucciMinus,
            wall_zero_sphere_one(),
            h,
        )
    }

    fn check_compatible(&self, spec: &ProblemSpec) -> Result<()> {
        require_half_ball(self.name(), spec)?;
        require_nonnegative_vanishing(self.name(), spec)?;
        require_zero_source(self.name(), spec)
    }

    fn constants(
        &self,
        _spec: &ProblemSpec,
        field: &SolutionField,
        _report: &GrowthReport,
    ) -> Result<BTreeMap<String, f64>> {
        Ok(BTreeMap::from([("c".to_string(), hopf_constant(field))]))
    }

    fn verdicts(&self, _spec: &ProblemSpec, report: &GrowthReport) -> Vec<Verdict> {
        let c = report.constants["c"];
        vec![Verdict::new("hopf_constant", c > 0.0, format!("c = min u/x2 on B_1/8 = {c}"))]
    }
}

impl Scenario for NotchHopf {
    fn kind(&self) -> ScenarioKind {
        ScenarioKind::NotchHopf
    }
    fn name(&self) -> &'static str {
        "notch_hopf"
    }

    fn canonical(&self, h: f64) -> ProblemSpec {
        base_spec(
            self.kind(),
            DomainSpec::Notch { a: 0.0, radius: 1.0 },
            OperatorTag::PucciMinus,
            BoundaryData::Shelf { value: 1.0 },
            h,
        )
    }

    fn check_compatible(&self, spec: &ProblemSpec) -> Result<()> {
        if !matches!(spec.domain, DomainSpec::Notch { .. }) {
            return Err(incompatible(self.name(), "needs a notch domain".into()));
        }
        match &spec.boundary {
            BoundaryData::Shelf { value } if *value > 0.0 => {}
            other => {
                return Err(incompatible(
                    self.name(),
                    format!("needs positive shelf data, got {other:?}"),
                ))
            }
        }
        require_zero_source(self.name(), spec)
    }

    fn constants(
        &self,
        _spec: &ProblemSpec,
        field: &SolutionField,
        _report: &GrowthReport,
    ) -> Result<BTreeMap<String, f64>> {
        Ok(BTreeMap::from([("c".to_string(), hopf_constant(field))]))
    }

    fn verdicts(&self, _spec: &ProblemSpec, report: &GrowthReport) -> Vec<Verdict> {
        let c = report.constants["c"];
        vec![Verdict::new("hopf_constant", c > 0.0, format!("c = min u/x2 on B_1/8 = {c}"))]
    }
}
