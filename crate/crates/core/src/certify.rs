//! Exact arithmetic for the iteration skeleton behind the boundary estimates:
//! the `A_k` recursion and its `3c₀` summability bound, the smallness
//! conditions on `(c₀, η, α₀)`, and the growth/decay products `ω̃`.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dini::{dini_integral, Modulus};
use crate::error::{Error, Result};

pub const DEFAULT_HORIZON: usize = 200;

/// Log-factor block ratio above which a product is flagged as divergent
/// (`+`) or vanishing (`−`). Block sums of `ln(1 ± c₀ω(ηⁱ))` over dyadic
/// index blocks `[2^j, 2^{j+1})` decay geometrically for power moduli and
/// behave like `2^{j(1−p)}` for `log_inverse(p)`; the threshold sits between
/// `p = 1` (ratio 1) and `p = 2` (ratio 1/2).
pub const TREND_RATIO: f64 = std::f64::consts::FRAC_1_SQRT_2;

const TAIL_QUADRATURE_TOL: f64 = 1e-15;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationParams {
    pub c0: f64,
    pub eta: f64,
    pub alpha0: f64,
    #[serde(rename = "K", default = "default_horizon")]
    pub horizon: usize,
}

fn default_horizon() -> usize {
    DEFAULT_HORIZON
}

impl IterationParams {
    pub fn new(c0: f64, eta: f64, alpha0: f64, horizon: usize) -> Result<Self> {
        let p = IterationParams {
            c0,
            eta,
            alpha0,
            horizon,
        };
        p.validate()?;
        Ok(p)
    }

    /// Range checks only; the smallness condition is reported, not enforced.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidProblem(msg));
        if !(self.c0 > 0.0 && self.c0 <= 0.25) {
            return bad(format!("c0 = {} must lie in (0, 1/4]", self.c0));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return bad(format!("eta = {} must lie in (0, 1)", self.eta));
        }
        if !(self.alpha0 > 0.0 && self.alpha0 < 1.0) {
            return bad(format!("alpha0 = {} must lie in (0, 1)", self.alpha0));
        }
        if self.horizon == 0 {
            return bad("horizon K must be at least 1".into());
        }
        Ok(())
    }
}

/// One inequality `lhs ≥ rhs` (or `lhs ≤ rhs`), with `slack` signed so that
/// it is nonnegative exactly when the inequality holds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

impl Condition {
    pub fn at_least(lhs: f64, rhs: f64) -> Self {
        Condition {
            holds: lhs >= rhs,
            lhs,
            rhs,
            slack: lhs - rhs,
        }
    }

    pub fn at_most(lhs: f64, rhs: f64) -> Self {
        Condition {
            holds: lhs <= rhs,
            lhs,
            rhs,
            slack: rhs - lhs,
        }
    }
}

pub type ConditionMap = BTreeMap<String, Condition>;

/// Universal constants of the boundary estimates; never quantified, so
/// supplied by the experiment.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NamedConstants {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_hat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_bar: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_tilde: Option<f64>,
}

/// Evaluates the named parameter inequalities:
///
/// * `geometric_smallness`: `(1 − η^{α₀})(1 − η) ≥ 1/2`
/// * `c_hat_c0`: `Ĉ·c₀ ≥ 1` (when `Ĉ` is given)
/// * `c_bar_a_tilde`: `3c₀·C̄ ≤ ã/2` (when both are given)
pub fn check_conditions(p: &IterationParams, constants: &NamedConstants) -> ConditionMap {
    let mut map = ConditionMap::new();
    map.insert(
        "geometric_smallness".into(),
        Condition::at_least((1.0 - p.eta.powf(p.alpha0)) * (1.0 - p.eta), 0.5),
    );
    if let Some(c_hat) = constants.c_hat {
        map.insert("c_hat_c0".into(), Condition::at_least(c_hat * p.c0, 1.0));
    }
    if let (Some(c_bar), Some(a_tilde)) = (constants.c_bar, constants.a_tilde) {
        map.insert(
            "c_bar_a_tilde".into(),
            Condition::at_most(3.0 * p.c0 * c_bar, a_tilde / 2.0),
        );
    }
    map
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// `a_k = a₀·∏_{i=1}^{k}(1 ± c₀ω(ηⁱ))` for `k = 0..=K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthProduct {
    pub sign: Sign,
    pub values: Vec<f64>,
    /// Whether the log-factor sum looks divergent (the `+` product blowing
    /// up, the `−` product vanishing). `None` when the horizon is too short
    /// to compare two complete dyadic blocks past index 8.
    pub log_sum_divergent: Option<bool>,
}

impl GrowthProduct {
    pub fn last(&self) -> f64 {
        *self.values.last().expect("a_0 is always present")
    }

    /// `a_k / a_j`.
    pub fn ratio(&self, k: usize, j: usize) -> f64 {
        self.values[k] / self.values[j]
    }
}

pub fn growth_product(
    omega: &Modulus,
    c0: f64,
    eta: f64,
    horizon: usize,
    sign: Sign,
    a0: f64,
) -> Result<GrowthProduct> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidProblem(format!("eta = {eta} must lie in (0, 1)")));
    }
    let first = c0 * omega.eval(eta)?;
    if sign == Sign::Minus && !(first > 0.0 && first < 1.0) && first != 0.0 {
        return Err(Error::InvalidProblem(format!(
            "c0·ω(η) = {first} must lie in (0, 1) for the decaying product"
        )));
    }
    let logs: Vec<f64> = (1..=horizon)
        .map(|i| (sign.factor() * c0 * omega.value(eta.powi(i as i32))).ln_1p())
        .collect();
    let mut values = Vec::with_capacity(horizon + 1);
    let mut log_sum = CompensatedSum::default();
    values.push(a0);
    for &l in &logs {
        log_sum.add(l);
        values.push(a0 * log_sum.value().exp());
    }
    Ok(GrowthProduct {
        sign,
        values,
        log_sum_divergent: trend(&logs),
    })
}

/// Compares the last two complete dyadic blocks of log factors (indices are
/// 1-based, `logs[i-1]` is factor `i`).
fn trend(logs: &[f64]) -> Option<bool> {
    let blocks = (logs.len() + 1).ilog2() as usize;
    // Block j covers factors [2^j, 2^{j+1}); need j ≥ 3 for both.
    if blocks < 5 {
        return None;
    }
    let block = |j: usize| -> f64 {
        let mut s = CompensatedSum::default();
        for i in (1usize << j)..(1usize << (j + 1)) {
            s.add(logs[i - 1].abs());
        }
        s.value()
    };
    let (prev, last) = (block(blocks - 2), block(blocks - 1));
    if prev == 0.0 {
        return Some(false);
    }
    Some(last / prev >= TREND_RATIO)
}

/// Output of [`ak_sequence`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub params: IterationParams,
    pub modulus: Modulus,
    #[serde(rename = "A")]
    pub a_seq: Vec<f64>,
    pub partial_sum: f64,
    /// Upper bound on `Σ_{k>K} A_k`.
    pub tail_bound: f64,
    /// Reference truncation estimate `c₀·η^{α₀K}/(1−η^{α₀})`.
    pub geometric_tail: f64,
    /// `partial_sum + tail_bound ≤ 3c₀`.
    pub bound_3c0_ok: bool,
    pub a_plus: Vec<f64>,
    pub a_minus: Option<Vec<f64>>,
    pub conditions: ConditionMap,
}

/// `A_0 = c₀`, `A_k = max(ω(η^k), η^{α₀}A_{k−1})`, summed with compensation.
///
/// The tail bound follows from `A_k ≤ ω(η^k) + η^{α₀}A_{k−1}` and
/// `Σ_{k>K} ω(η^k) ≤ ∫₀^{η^K} ω(r)/r dr / ln(1/η)` for nondecreasing ω:
/// `Σ_{k>K} A_k ≤ (η^{α₀}A_K + ∫₀^{η^K}ω/r / ln(1/η)) / (1 − η^{α₀})`.
pub fn ak_sequence(omega: &Modulus, p: &IterationParams) -> Result<CertificationReport> {
    p.validate()?;
    omega.validate()?;
    let q = p.eta.powf(p.alpha0);
    let mut a_seq = Vec::with_capacity(p.horizon + 1);
    let mut sum = CompensatedSum::default();
    let mut prev = p.c0;
    a_seq.push(prev);
    sum.add(prev);
    for k in 1..=p.horizon {
        let ak = omega.value(p.eta.powi(k as i32)).max(q * prev);
        a_seq.push(ak);
        sum.add(ak);
        prev = ak;
    }
    let partial_sum = sum.value();

    let r_k = p.eta.powi(p.horizon as i32);
    let omega_tail = if r_k > 0.0 {
        match dini_integral(omega, r_k.min(omega.domain_radius), TAIL_QUADRATURE_TOL) {
            Ok(v) if v.is_dini => v.integral_value.unwrap_or(f64::INFINITY) / (1.0 / p.eta).ln(),
            Ok(_) => f64::INFINITY,
            Err(Error::Inconclusive(_)) => f64::INFINITY,
            Err(e) => return Err(e),
        }
    } else {
        0.0
    };
    let tail_bound = (q * prev + omega_tail) / (1.0 - q);
    let geometric_tail = p.c0 * q.powi(p.horizon as i32) / (1.0 - q);
    let bound_3c0_ok = partial_sum + tail_bound <= 3.0 * p.c0;

    let mut conditions = check_conditions(p, &NamedConstants::default());
    conditions.insert("omega_at_one".into(), Condition::at_most(omega.value(1.0), p.c0));
    let integral = match dini_integral(omega, 1.0, TAIL_QUADRATURE_TOL) {
        Ok(v) if v.is_dini => v.integral_value.unwrap_or(f64::INFINITY),
        Ok(_) | Err(Error::Inconclusive(_)) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    conditions.insert("dini_integral_small".into(), Condition::at_most(integral, p.c0));

    let a_plus = growth_product(omega, p.c0, p.eta, p.horizon, Sign::Plus, 1.0)?.values;
    let a_minus = growth_product(omega, p.c0, p.eta, p.horizon, Sign::Minus, 1.0)
        .ok()
        .map(|g| g.values);

    Ok(CertificationReport {
        params: *p,
        modulus: omega.clone(),
        a_seq,
        partial_sum,
        tail_bound,
        geometric_tail,
        bound_3c0_ok,
        a_plus,
        a_minus,
        conditions,
    })
}

impl CertificationReport {
    /// Whether every precondition of the `3c₀` bound holds.
    pub fn preconditions_hold(&self) -> bool {
        self.conditions.values().all(|c| c.holds)
    }

    /// Writes `(k, A_k, a_k_plus, a_k_minus)`; `a_k_minus` is empty when the
    /// decaying product is undefined.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["k", "A_k", "a_k_plus", "a_k_minus"])?;
        for (k, ak) in self.a_seq.iter().enumerate() {
            let minus = self
                .a_minus
                .as_ref()
                .map(|m| m[k].to_string())
                .unwrap_or_default();
            w.write_record([k.to_string(), ak.to_string(), self.a_plus[k].to_string(), minus])?;
        }
        w.flush()?;
        Ok(())
    }
}
