use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use pucci_core::certify::{ak_sequence, check_conditions};
use pucci_core::dini::{dini_integral, rescale_to_small, Family, Modulus};
use pucci_core::geometry::DomainSpec;
use pucci_core::harness::{run_scenario, solve_spec, GrowthReport, ProblemSpec, GROWTH_CSV_HEADER};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{parse_json, ExperimentConfig, Overrides};
use crate::error::CliError;

pub const FIELD_CSV: &str = "field.csv";
pub const FIELD_JSON: &str = "metadata.json";
pub const GROWTH_CSV: &str = "growth.csv";
pub const GROWTH_JSON: &str = "report.json";
pub const CERTIFY_CSV: &str = "certification.csv";
pub const CERTIFY_JSON: &str = "certification.json";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const SWEEP_CONSTANTS_CSV: &str = "sweep_constants.csv";
pub const SWEEP_JSON: &str = "sweep.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

impl Outcome {
    fn from_pass(pass: bool) -> Self {
        if pass {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }

    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Pass => 0,
            Outcome::Fail => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SweepAxis {
    #[serde(rename = "h")]
    H,
    #[serde(rename = "W")]
    W,
    #[serde(rename = "omega_param")]
    OmegaParam,
    #[serde(rename = "a_notch")]
    ANotch,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::H => "h",
            SweepAxis::W => "W",
            SweepAxis::OmegaParam => "omega_param",
            SweepAxis::ANotch => "a_notch",
        }
    }

    pub fn parse(name: &str) -> Result<Self, CliError> {
        [SweepAxis::H, SweepAxis::W, SweepAxis::OmegaParam, SweepAxis::ANotch]
            .into_iter()
            .find(|a| a.name() == name)
            .ok_or_else(|| CliError::Usage(format!("unknown sweep axis `{name}` (h, W, omega_param, a_notch)")))
    }

    fn apply(self, base: &ProblemSpec, value: f64) -> Result<ProblemSpec, CliError> {
        let mut spec = base.clone();
        match self {
            SweepAxis::H => spec.h = value,
            SweepAxis::W => {
                if value.fract() != 0.0 || value < 1.0 {
                    return Err(CliError::Usage(format!("W = {value} is not a positive integer")));
                }
                spec.width = value as u32;
            }
            SweepAxis::OmegaParam => match &mut spec.domain {
                DomainSpec::Graph { omega, .. } => match &mut omega.family {
                    Family::Power { alpha, .. } => *alpha = value,
                    Family::LogInverse { p, .. } => *p = value,
                    other => {
                        return Err(CliError::Usage(format!("omega family {other:?} has no sweep parameter")))
                    }
                },
                _ => return Err(CliError::Usage("omega_param sweeps need a graph domain".into())),
            },
            SweepAxis::ANotch => match &mut spec.domain {
                DomainSpec::Notch { a, .. } => *a = value,
                _ => return Err(CliError::Usage("a_notch sweeps need a notch domain".into())),
            },
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn stdout_err(source: std::io::Error) -> CliError {
    CliError::Write {
        path: PathBuf::from("<stdout>"),
        source,
    }
}

fn prepare_dir(cfg: &ExperimentConfig) -> Result<PathBuf, CliError> {
    let dir = cfg.output_dir();
    fs::create_dir_all(&dir).map_err(|source| CliError::Write {
        path: dir.clone(),
        source,
    })?;
    Ok(dir)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(pucci_core::Error::from)?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

#[derive(Serialize)]
struct Artifact<'a, T: Serialize> {
    config: &'a ExperimentConfig,
    #[serde(flatten)]
    body: T,
}

/// Solves the configured Dirichlet problem; writes the field CSV and its
/// metadata.
pub fn cmd_solve(cfg: &ExperimentConfig, overrides: &Overrides, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let spec = cfg.problem_spec(overrides)?;
    let resolved = cfg.resolved(overrides)?;
    let dir = prepare_dir(cfg)?;
    let field = solve_spec(&spec)?;
    let mut csv = Vec::new();
    field.write_csv(&mut csv)?;
    write_file(&dir.join(FIELD_CSV), &csv)?;
    let meta = field.metadata(spec.solve.tol);
    #[derive(Serialize)]
    struct Body<T> {
        field: T,
    }
    write_json(
        &dir.join(FIELD_JSON),
        &Artifact {
            config: &resolved,
            body: Body { field: &meta },
        },
    )?;
    writeln!(
        out,
        "solved {} on {} nodes: {} iterations, residual {:e}",
        spec.operator.name(),
        field.mask.interior().len(),
        meta.iterations,
        meta.residual_inf
    )
    .map_err(stdout_err)?;
    Ok(Outcome::Pass)
}

fn print_report(report: &GrowthReport, out: &mut dyn Write) -> Result<(), CliError> {
    for (name, value) in &report.constants {
        writeln!(out, "constant {name} = {value}").map_err(stdout_err)?;
    }
    for v in &report.verdicts {
        let tag = if v.pass { "PASS" } else { "FAIL" };
        writeln!(out, "{tag} {}: {}", v.name, v.detail).map_err(stdout_err)?;
    }
    Ok(())
}

/// Runs the configured scenario; writes the growth CSV and report, and
/// prints one verdict line per check.
pub fn cmd_measure(cfg: &ExperimentConfig, overrides: &Overrides, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let spec = cfg.problem_spec(overrides)?;
    let resolved = cfg.resolved(overrides)?;
    let dir = prepare_dir(cfg)?;
    let (field, report) = run_scenario(&spec)?;
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    write_file(&dir.join(GROWTH_CSV), &csv)?;
    #[derive(Serialize)]
    struct Body<'a, T> {
        field: T,
        report: &'a GrowthReport,
    }
    write_json(
        &dir.join(GROWTH_JSON),
        &Artifact {
            config: &resolved,
            body: Body {
                field: field.metadata(spec.solve.tol),
                report: &report,
            },
        },
    )?;
    print_report(&report, out)?;
    Ok(Outcome::from_pass(report.passed()))
}

/// Runs the `A_k` recursion and growth products of the certify block.
pub fn cmd_certify(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let block = cfg
        .certify
        .as_ref()
        .ok_or_else(|| CliError::Usage("config has no `certify` block".into()))?;
    let dir = prepare_dir(cfg)?;
    let (r1, omega) = if block.rescale {
        let (r1, m) = rescale_to_small(&block.omega, block.c0)?;
        (Some(r1), m)
    } else {
        (None, block.omega.clone())
    };
    let params = block.params();
    let mut report = ak_sequence(&omega, &params)?;
    report.conditions.extend(check_conditions(&params, &block.constants));
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    write_file(&dir.join(CERTIFY_CSV), &csv)?;
    #[derive(Serialize)]
    struct Body<'a, T> {
        #[serde(skip_serializing_if = "Option::is_none")]
        r1: Option<f64>,
        report: &'a T,
    }
    let resolved = cfg.resolved(&Overrides::default())?;
    write_json(
        &dir.join(CERTIFY_JSON),
        &Artifact {
            config: &resolved,
            body: Body { r1, report: &report },
        },
    )?;
    if let Some(r1) = r1 {
        writeln!(out, "rescaled by r1 = {r1}").map_err(stdout_err)?;
    }
    writeln!(
        out,
        "sum A_k = {} (K = {}), tail bound {:e}, 3c0 = {}",
        report.partial_sum,
        params.horizon,
        report.tail_bound,
        3.0 * params.c0
    )
    .map_err(stdout_err)?;
    for (name, c) in &report.conditions {
        let tag = if c.holds { "holds" } else { "fails" };
        writeln!(out, "condition {name} {tag}: {} vs {}", c.lhs, c.rhs).map_err(stdout_err)?;
    }
    let tag = if report.bound_3c0_ok { "PASS" } else { "FAIL" };
    writeln!(out, "{tag} bound_3c0").map_err(stdout_err)?;
    Ok(Outcome::from_pass(report.bound_3c0_ok))
}

/// Classifies a modulus given as JSON.
pub fn cmd_dini(modulus_json: &str, r0: f64, tol: f64, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let omega: Modulus = parse_json(modulus_json)?;
    omega.validate()?;
    let v = dini_integral(&omega, r0, tol)?;
    let method = serde_json::to_value(v.method).map_err(pucci_core::Error::from)?;
    let method = method.as_str().unwrap_or_default().to_string();
    match (v.integral_value, v.lower_bound_witness) {
        (Some(i), _) => writeln!(out, "is_dini={} integral={i} method={method}", v.is_dini),
        (None, Some(w)) => writeln!(out, "is_dini={} lower_bound_witness={w} method={method}", v.is_dini),
        (None, None) => writeln!(out, "is_dini={} method={method}", v.is_dini),
    }
    .map_err(stdout_err)?;
    Ok(Outcome::Pass)
}

/// Repeats the scenario along one axis; rows are emitted in the order of
/// `values` whatever the scheduling.
pub fn cmd_sweep(
    cfg: &ExperimentConfig,
    overrides: &Overrides,
    axis: SweepAxis,
    values: &[f64],
    out: &mut dyn Write,
) -> Result<Outcome, CliError> {
    if values.is_empty() {
        return Err(CliError::Usage("sweep needs at least one value".into()));
    }
    let base = cfg.problem_spec(overrides)?;
    let specs = values
        .iter()
        .map(|&v| axis.apply(&base, v))
        .collect::<Result<Vec<_>, _>>()?;
    let dir = prepare_dir(cfg)?;
    let reports = specs
        .par_iter()
        .map(|s| run_scenario(s).map(|(_, r)| r))
        .collect::<Result<Vec<_>, _>>()?;

    let mut rows = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["axis", "value"];
    header.extend(GROWTH_CSV_HEADER);
    rows.write_record(&header).map_err(pucci_core::Error::from)?;
    let mut constants = csv::Writer::from_writer(Vec::new());
    constants
        .write_record(["axis", "value", "name", "constant"])
        .map_err(pucci_core::Error::from)?;
    for (v, report) in values.iter().zip(&reports) {
        for rec in report.csv_records() {
            let mut row = vec![axis.name().to_string(), v.to_string()];
            row.extend(rec);
            rows.write_record(&row).map_err(pucci_core::Error::from)?;
        }
        for (name, c) in &report.constants {
            constants
                .write_record([axis.name(), &v.to_string(), name, &c.to_string()])
                .map_err(pucci_core::Error::from)?;
        }
    }
    let into_bytes = |w: csv::Writer<Vec<u8>>| {
        w.into_inner()
            .map_err(|e| CliError::Usage(format!("csv buffer: {e}")))
    };
    write_file(&dir.join(SWEEP_CSV), &into_bytes(rows)?)?;
    write_file(&dir.join(SWEEP_CONSTANTS_CSV), &into_bytes(constants)?)?;
    #[derive(Serialize)]
    struct Body<'a> {
        axis: SweepAxis,
        values: &'a [f64],
        reports: &'a [GrowthReport],
    }
    write_json(
        &dir.join(SWEEP_JSON),
        &Artifact {
            config: &cfg.resolved(overrides)?,
            body: Body {
                axis,
                values,
                reports: &reports,
            },
        },
    )?;
    let mut all = true;
    for (v, report) in values.iter().zip(&reports) {
        writeln!(out, "{} = {v}", axis.name()).map_err(stdout_err)?;
        print_report(report, out)?;
        all &= report.passed();
    }
    Ok(Outcome::from_pass(all))
}
