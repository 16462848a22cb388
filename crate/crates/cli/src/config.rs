use std::path::{Path, PathBuf};

use pucci_core::certify::{IterationParams, NamedConstants, DEFAULT_HORIZON};
use pucci_core::dini::Modulus;
use pucci_core::geometry::{DomainSpec, Point};
use pucci_core::harness::{BoundaryData, OmegaTildeParams, ProblemSpec, ScenarioKind, SourceData};
use pucci_core::pucci::EllipticityPair;
use pucci_core::solver::{OperatorTag, SolveOptions, DEFAULT_MAX_ITER, DEFAULT_STRATEGY, DEFAULT_TOL};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Environment variable that relative `output_dir`s are resolved against.
pub const OUTPUT_ROOT_VAR: &str = "PUCCI_LAB_OUTPUT_ROOT";
pub const DEFAULT_OUTPUT_DIR: &str = "pucci-lab-out";
/// Grid spacing used when a scenario config has no numerics block.
pub const DEFAULT_H: f64 = 1.0 / 64.0;
pub const DEFAULT_WIDTH: u32 = 3;

/// A versionable experiment description. Scenario blocks left out are taken
/// from the scenario's canonical setup.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<OperatorBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numerics: Option<NumericsBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_tilde: Option<OmegaTildeParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certify: Option<CertifyBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorBlock {
    pub tag: OperatorTag,
    pub lambda: f64,
    #[serde(rename = "Lambda")]
    pub big_lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataBlock {
    pub g: BoundaryData,
    #[serde(default)]
    pub f: SourceData,
}

fn default_width() -> u32 {
    DEFAULT_WIDTH
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn default_max_iter() -> usize {
    DEFAULT_MAX_ITER
}

fn default_strategy() -> String {
    DEFAULT_STRATEGY.to_string()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsBlock {
    pub h: f64,
    #[serde(rename = "W", default = "default_width")]
    pub width: u32,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_strategy")]
    pub strategy: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeBlock {
    pub l: Vec<Point>,
    #[serde(rename = "K")]
    pub horizon: u32,
}

fn default_certify_horizon() -> usize {
    DEFAULT_HORIZON
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyBlock {
    pub omega: Modulus,
    pub c0: f64,
    pub eta: f64,
    pub alpha0: f64,
    #[serde(rename = "K", default = "default_certify_horizon")]
    pub horizon: usize,
    /// Replace ω by its dilation from `rescale_to_small(ω, c0)` first.
    #[serde(default)]
    pub rescale: bool,
    #[serde(default)]
    pub constants: NamedConstants,
}

impl CertifyBlock {
    pub fn params(&self) -> IterationParams {
        IterationParams {
            c0: self.c0,
            eta: self.eta,
            alpha0: self.alpha0,
            horizon: self.horizon,
        }
    }
}

/// Command-line overrides of the numerics block.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Overrides {
    pub h: Option<f64>,
    pub width: Option<u32>,
    pub tol: Option<f64>,
}

/// Deserializes JSON, reporting failures with a JSON pointer to the
/// offending field.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| CliError::Schema {
        pointer: json_pointer(e.path()),
        message: e.inner().to_string(),
    })
}

fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    out
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        parse_json(text)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// The scenario problem, with missing blocks filled from the canonical
    /// setup and the overrides applied.
    pub fn problem_spec(&self, overrides: &Overrides) -> Result<ProblemSpec, CliError> {
        let kind = self
            .scenario
            .ok_or_else(|| CliError::Usage("config has no `scenario`".into()))?;
        let numerics = self.numerics.clone();
        let h = overrides.h.or(numerics.as_ref().map(|n| n.h)).unwrap_or(DEFAULT_H);
        let mut spec = ProblemSpec::canonical(kind, h);
        if let Some(domain) = &self.domain {
            spec.domain = domain.clone();
        }
        if let Some(op) = &self.operator {
            spec.operator = op.tag;
            spec.ell = EllipticityPair {
                lambda: op.lambda,
                big_lambda: op.big_lambda,
            };
        }
        if let Some(data) = &self.data {
            spec.boundary = data.g.clone();
            spec.source = data.f.clone();
        }
        if let Some(n) = numerics {
            spec.width = n.width;
            spec.solve = SolveOptions {
                tol: n.tol,
                max_iter: n.max_iter,
                strategy: n.strategy,
            };
        }
        if let Some(probe) = &self.probe {
            spec.probes = probe.l.clone();
            spec.horizon = probe.horizon;
        }
        if let Some(w) = self.omega_tilde {
            spec.omega_tilde = w;
        }
        if let Some(w) = overrides.width {
            spec.width = w;
        }
        if let Some(t) = overrides.tol {
            spec.solve.tol = t;
        }
        spec.validate()?;
        Ok(spec)
    }

    /// A fully explicit config equivalent to `spec`.
    pub fn from_spec(spec: &ProblemSpec) -> Self {
        ExperimentConfig {
            scenario: Some(spec.scenario),
            domain: Some(spec.domain.clone()),
            operator: Some(OperatorBlock {
                tag: spec.operator,
                lambda: spec.ell.lambda,
                big_lambda: spec.ell.big_lambda,
            }),
            data: Some(DataBlock {
                g: spec.boundary.clone(),
                f: spec.source.clone(),
            }),
            numerics: Some(NumericsBlock {
                h: spec.h,
                width: spec.width,
                tol: spec.solve.tol,
                max_iter: spec.solve.max_iter,
                strategy: spec.solve.strategy.clone(),
            }),
            probe: Some(ProbeBlock {
                l: spec.probes.clone(),
                horizon: spec.horizon,
            }),
            omega_tilde: Some(spec.omega_tilde),
            certify: None,
            output_dir: None,
        }
    }

    /// `self` with its scenario blocks made explicit (certify and output
    /// blocks are kept as given).
    pub fn resolved(&self, overrides: &Overrides) -> Result<Self, CliError> {
        let mut out = match self.scenario {
            Some(_) => Self::from_spec(&self.problem_spec(overrides)?),
            None => ExperimentConfig::default(),
        };
        out.certify = self.certify.clone();
        out.output_dir = self.output_dir.clone();
        Ok(out)
    }

    /// `output_dir` (default `pucci-lab-out`), placed under
    /// `$PUCCI_LAB_OUTPUT_ROOT` when relative and the variable is set.
    pub fn output_dir(&self) -> PathBuf {
        let dir = self
            .output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
        match std::env::var_os(OUTPUT_ROOT_VAR) {
            Some(root) if dir.is_relative() => PathBuf::from(root).join(dir),
            _ => dir,
        }
    }
}
