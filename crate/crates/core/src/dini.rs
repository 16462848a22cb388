//! Moduli of continuity and the Dini condition.
//!
//! A [`Modulus`] is a nonnegative, nondecreasing function on `[0, R]` that
//! vanishes at the origin (except for the `constant` family). It is Dini when
//! `∫₀^{r₀} ω(r)/r dr` is finite. The analytic families are classified in
//! closed form; tabulated moduli go through adaptive quadrature on dyadic
//! panels.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Partial dyadic sums above this value declare divergence.
pub const DIVERGENCE_THRESHOLD: f64 = 1.0e3;
/// Divergence must show up before panels reach `r₀·2^-40`.
pub const DIVERGENCE_DEPTH: u32 = 40;
/// Deepest dyadic radius tried by [`rescale_to_small`].
pub const MAX_RESCALE_EXPONENT: u32 = 60;

fn default_radius() -> f64 {
    1.0
}

fn default_scale() -> f64 {
    1.0
}

/// The analytic family a modulus belongs to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Zero,
    Constant {
        k: f64,
    },
    /// `ω(r) = c·r^α`.
    Power {
        alpha: f64,
        #[serde(default = "default_scale")]
        c: f64,
    },
    /// `ω(r) = c / ln(e/r)^p`.
    LogInverse {
        p: f64,
        #[serde(default = "default_scale")]
        c: f64,
    },
    /// Sorted `(r, ω(r))` knots, interpolated piecewise linearly. Below the
    /// first knot the interpolant runs linearly to `(0, 0)`.
    Tabulated { knots: Vec<[f64; 2]> },
    /// `ω(s) = base(r1·s)`, produced by [`rescale_to_small`] when the base
    /// family is not closed under dilation.
    Rescaled { base: Box<Modulus>, r1: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Modulus {
    #[serde(flatten)]
    pub family: Family,
    #[serde(default = "default_radius")]
    pub domain_radius: f64,
}

impl Modulus {
    pub fn new(family: Family, domain_radius: f64) -> Result<Self> {
        let m = Modulus {
            family,
            domain_radius,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn zero() -> Self {
        Modulus {
            family: Family::Zero,
            domain_radius: 1.0,
        }
    }

    pub fn constant(k: f64) -> Self {
        Modulus {
            family: Family::Constant { k },
            domain_radius: 1.0,
        }
    }

    pub fn power(alpha: f64, c: f64) -> Self {
        Modulus {
            family: Family::Power { alpha, c },
            domain_radius: 1.0,
        }
    }

    pub fn log_inverse(p: f64, c: f64) -> Self {
        Modulus {
            family: Family::LogInverse { p, c },
            domain_radius: 1.0,
        }
    }

    /// Builds a tabulated modulus; the domain radius is the last knot.
    pub fn tabulated(knots: Vec<[f64; 2]>) -> Result<Self> {
        let radius = knots
            .last()
            .map(|k| k[0])
            .ok_or_else(|| Error::InvalidModulus("tabulated modulus without knots".into()))?;
        Modulus::new(Family::Tabulated { knots }, radius)
    }

    /// Samples `self` at the given radii into a tabulated modulus.
    pub fn tabulate(&self, radii: &[f64]) -> Result<Self> {
        let knots = radii
            .iter()
            .map(|&r| self.eval(r).map(|w| [r, w]))
            .collect::<Result<Vec<_>>>()?;
        Modulus::tabulated(knots)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidModulus(msg));
        if !(self.domain_radius > 0.0 && self.domain_radius.is_finite()) {
            return bad(format!("domain radius {} must be positive", self.domain_radius));
        }
        match &self.family {
            Family::Zero => {}
            Family::Constant { k } => {
                if !(*k >= 0.0 && k.is_finite()) {
                    return bad(format!("constant k = {k} must be >= 0"));
                }
            }
            Family::Power { alpha, c } => {
                if !(*alpha > 0.0 && *alpha <= 1.0) {
                    return bad(format!("power exponent {alpha} must lie in (0, 1]"));
                }
                if !(*c >= 0.0 && c.is_finite()) {
                    return bad(format!("power scale {c} must be >= 0"));
                }
            }
            Family::LogInverse { p, c } => {
                if !(*p > 0.0 && p.is_finite()) {
                    return bad(format!("log-inverse exponent {p} must be > 0"));
                }
                if !(*c >= 0.0 && c.is_finite()) {
                    return bad(format!("log-inverse scale {c} must be >= 0"));
                }
                if self.domain_radius >= std::f64::consts::E {
                    return bad("log-inverse modulus needs domain radius < e".into());
                }
            }
            Family::Tabulated { knots } => {
                if knots.is_empty() {
                    return bad("tabulated modulus without knots".into());
                }
                for w in knots.windows(2) {
                    if !(w[1][0] > w[0][0]) {
                        return bad(format!("knots not strictly increasing at r = {}", w[1][0]));
                    }
                    if w[1][1] < w[0][1] {
                        return bad(format!("modulus decreases at r = {}", w[1][0]));
                    }
                }
                if knots[0][0] < 0.0 || knots.iter().any(|k| !(k[1] >= 0.0) || !k[1].is_finite()) {
                    return bad("knots must be nonnegative and finite".into());
                }
                let last = knots[knots.len() - 1][0];
                if last < self.domain_radius * (1.0 - 1e-12) {
                    return bad(format!(
                        "knots end at {last}, before the domain radius {}",
                        self.domain_radius
                    ));
                }
            }
            Family::Rescaled { base, r1 } => {
                base.validate()?;
                if !(*r1 > 0.0 && *r1 * self.domain_radius <= base.domain_radius * (1.0 + 1e-12)) {
                    return bad(format!("rescale factor {r1} leaves the base domain"));
                }
            }
        }
        Ok(())
    }

    /// True when `ω(r) → 0` as `r → 0` is required (every family but
    /// `constant`).
    pub fn vanishes_at_zero(&self) -> bool {
        match &self.family {
            Family::Constant { k } => *k == 0.0,
            Family::Tabulated { knots } => !(knots[0][0] == 0.0 && knots[0][1] > 0.0),
            Family::Rescaled { base, .. } => base.vanishes_at_zero(),
            _ => true,
        }
    }

    /// `ω(r)`, with a range check against the domain radius.
    pub fn eval(&self, r: f64) -> Result<f64> {
        let slack = 1e-12 * self.domain_radius;
        if !(r >= 0.0 && r <= self.domain_radius + slack) {
            return Err(Error::Range {
                value: r,
                radius: self.domain_radius,
            });
        }
        Ok(self.value(r.min(self.domain_radius)))
    }

    /// Unchecked evaluation; callers guarantee `0 <= r <= domain_radius`.
    pub(crate) fn value(&self, r: f64) -> f64 {
        match &self.family {
            Family::Zero => 0.0,
            Family::Constant { k } => *k,
            Family::Power { alpha, c } => {
                if r <= 0.0 {
                    0.0
                } else {
                    c * r.powf(*alpha)
                }
            }
            Family::LogInverse { p, c } => {
                if r <= 0.0 {
                    0.0
                } else {
                    c / (1.0 - r.ln()).powf(*p)
                }
            }
            Family::Tabulated { knots } => interpolate(knots, r),
            Family::Rescaled { base, r1 } => base.value(r1 * r),
        }
    }

    /// Closed-form Dini integral over `[0, r0]` when the family has one.
    fn analytic_integral(&self, r0: f64) -> Option<AnalyticIntegral> {
        use AnalyticIntegral::*;
        match &self.family {
            Family::Zero => Some(Finite(0.0)),
            Family::Constant { k } => Some(if *k == 0.0 { Finite(0.0) } else { Divergent }),
            Family::Power { alpha, c } => Some(Finite(c * r0.powf(*alpha) / alpha)),
            Family::LogInverse { p, c } => Some(if *c == 0.0 {
                Finite(0.0)
            } else if *p <= 1.0 {
                Divergent
            } else {
                Finite(c / ((p - 1.0) * (1.0 - r0.ln()).powf(p - 1.0)))
            }),
            Family::Tabulated { .. } => None,
            Family::Rescaled { base, r1 } => base.analytic_integral(r1 * r0),
        }
    }

    /// Reads `(r, omega)` rows into a tabulated modulus.
    pub fn read_knots_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut knots = Vec::new();
        for row in rdr.deserialize::<(f64, f64)>() {
            let (r, w) = row?;
            knots.push([r, w]);
        }
        Modulus::tabulated(knots)
    }

    pub fn write_knots_csv<W: Write>(&self, writer: W) -> Result<()> {
        let Family::Tabulated { knots } = &self.family else {
            return Err(Error::NotApplicable("only tabulated moduli carry knots".into()));
        };
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["r", "omega"])?;
        for k in knots {
            w.serialize((k[0], k[1]))?;
        }
        w.flush()?;
        Ok(())
    }
}

enum AnalyticIntegral {
    Finite(f64),
    Divergent,
}

fn interpolate(knots: &[[f64; 2]], r: f64) -> f64 {
    let first = knots[0];
    if r <= first[0] {
        if first[0] == 0.0 {
            return first[1];
        }
        return first[1] * r / first[0];
    }
    let idx = knots.partition_point(|k| k[0] < r);
    if idx >= knots.len() {
        return knots[knots.len() - 1][1];
    }
    let (a, b) = (knots[idx - 1], knots[idx]);
    let t = (r - a[0]) / (b[0] - a[0]);
    a[1] + t * (b[1] - a[1])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiniMethod {
    Analytic,
    Quadrature,
}

/// Outcome of a Dini test. Exactly one of `integral_value` and
/// `lower_bound_witness` is set, matching `is_dini`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiniVerdict {
    pub is_dini: bool,
    pub integral_value: Option<f64>,
    pub lower_bound_witness: Option<f64>,
    pub method: DiniMethod,
}

/// Evaluates `ω(r)`.
pub fn eval(omega: &Modulus, r: f64) -> Result<f64> {
    omega.eval(r)
}

/// Computes `∫₀^{r0} ω(r)/r dr` and classifies `omega` as Dini or not.
pub fn dini_integral(omega: &Modulus, r0: f64, tol: f64) -> Result<DiniVerdict> {
    if !(r0 > 0.0 && r0 <= omega.domain_radius * (1.0 + 1e-12)) {
        return Err(Error::Range {
            value: r0,
            radius: omega.domain_radius,
        });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidModulus(format!("tolerance {tol} must be positive")));
    }
    let r0 = r0.min(omega.domain_radius);
    match omega.analytic_integral(r0) {
        Some(AnalyticIntegral::Finite(v)) => Ok(DiniVerdict {
            is_dini: true,
            integral_value: Some(v),
            lower_bound_witness: None,
            method: DiniMethod::Analytic,
        }),
        Some(AnalyticIntegral::Divergent) => Ok(DiniVerdict {
            is_dini: false,
            integral_value: None,
            lower_bound_witness: Some(dyadic_lower_bound(omega, r0, 1000)),
            method: DiniMethod::Analytic,
        }),
        None => quadrature(omega, r0, tol),
    }
}

/// `Σ_{j=1}^{n} ω(r0·2^-j)·ln 2`, a lower bound for the Dini integral over
/// `[r0·2^-n, r0]` by monotonicity.
fn dyadic_lower_bound(omega: &Modulus, r0: f64, n: i32) -> f64 {
    (1..=n)
        .map(|j| omega.value(r0 * 2f64.powi(-j)) * std::f64::consts::LN_2)
        .sum()
}

fn quadrature(omega: &Modulus, r0: f64, tol: f64) -> Result<DiniVerdict> {
    let Family::Tabulated { knots } = &omega.family else {
        return Err(Error::NotApplicable("quadrature is reserved for tabulated moduli".into()));
    };
    if knots[0][0] == 0.0 && knots[0][1] > 0.0 {
        // ω(0) > 0: the integrand behaves like ω(0)/r.
        return Ok(DiniVerdict {
            is_dini: false,
            integral_value: None,
            lower_bound_witness: Some(f64::INFINITY),
            method: DiniMethod::Quadrature,
        });
    }
    let r_min = knots
        .iter()
        .map(|k| k[0])
        .find(|&r| r > 0.0)
        .expect("validated knots contain a positive radius");
    // Exact integral of the linear run to (0, 0) below the first knot.
    let tail = omega.value(r_min.min(r0));
    if r_min >= r0 {
        return Ok(finite_quadrature(tail));
    }
    let panels = ((r0 / r_min).log2().ceil() as usize).max(1);
    let panel_tol = 0.5 * tol / panels as f64;
    let f = |s: f64| omega.value(s.exp());
    let mut partial = 0.0;
    let mut comp = 0.0;
    let mut hi = r0;
    for depth in 1.. {
        let lo = (0.5 * hi).max(r_min);
        let (a, b) = (lo.ln(), hi.ln());
        let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
        let whole = simpson(a, b, fa, fm, fb);
        let v = adaptive_simpson(&f, a, b, fa, fm, fb, whole, panel_tol, 50);
        // Kahan-compensated running sum.
        let y = v - comp;
        let t = partial + y;
        comp = (t - partial) - y;
        partial = t;
        if depth <= DIVERGENCE_DEPTH && partial > DIVERGENCE_THRESHOLD {
            return Ok(DiniVerdict {
                is_dini: false,
                integral_value: None,
                lower_bound_witness: Some(partial),
                method: DiniMethod::Quadrature,
            });
        }
        if lo <= r_min {
            break;
        }
        hi = lo;
    }
    if tail > tol {
        return Err(Error::Inconclusive(format!(
            "knots stop at r = {r_min:e} where omega = {tail:e} exceeds tolerance {tol:e}"
        )));
    }
    Ok(finite_quadrature(partial + tail))
}

fn finite_quadrature(value: f64) -> DiniVerdict {
    DiniVerdict {
        is_dini: true,
        integral_value: Some(value),
        lower_bound_witness: None,
        method: DiniMethod::Quadrature,
    }
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Finds the largest dyadic `r1 = 2^-m` with `ω(r1) <= c0` and
/// `∫₀^{r1} ω/r <= c0`, and returns it with `s ↦ ω(r1·s)` on `[0, 1]`.
pub fn rescale_to_small(omega: &Modulus, c0: f64) -> Result<(f64, Modulus)> {
    if !(c0 > 0.0 && c0 <= 0.25) {
        return Err(Error::InvalidModulus(format!("c0 = {c0} must lie in (0, 1/4]")));
    }
    let tol = c0 * 1e-6;
    let verdict = dini_integral(omega, omega.domain_radius, tol)?;
    if !verdict.is_dini {
        return Err(Error::NotDini {
            witness: verdict.lower_bound_witness.unwrap_or(f64::INFINITY),
        });
    }
    for m in 0..=MAX_RESCALE_EXPONENT {
        let r1 = 2f64.powi(-(m as i32));
        if r1 > omega.domain_radius {
            continue;
        }
        if omega.value(r1) > c0 {
            continue;
        }
        let integral = dini_integral(omega, r1, tol)?
            .integral_value
            .expect("Dini verdict carries a value");
        if integral <= c0 {
            return Ok((r1, rescaled(omega, r1)));
        }
    }
    Err(Error::Precision {
        max_exponent: MAX_RESCALE_EXPONENT,
    })
}

fn rescaled(omega: &Modulus, r1: f64) -> Modulus {
    let family = match &omega.family {
        Family::Zero => Family::Zero,
        Family::Constant { k } => Family::Constant { k: *k },
        Family::Power { alpha, c } => Family::Power {
            alpha: *alpha,
            c: c * r1.powf(*alpha),
        },
        _ if r1 == 1.0 && omega.domain_radius == 1.0 => omega.family.clone(),
        _ => Family::Rescaled {
            base: Box::new(omega.clone()),
            r1,
        },
    };
    Modulus {
        family,
        domain_radius: 1.0,
    }
}
