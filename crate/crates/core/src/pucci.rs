//! Pointwise Pucci extremal operators on symmetric 2×2 matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform ellipticity constants `0 < λ <= Λ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipticityPair {
    pub lambda: f64,
    #[serde(rename = "Lambda")]
    pub big_lambda: f64,
}

impl EllipticityPair {
    pub fn new(lambda: f64, big_lambda: f64) -> Result<Self> {
        let ell = EllipticityPair { lambda, big_lambda };
        ell.validate()?;
        Ok(ell)
    }

    pub fn laplace() -> Self {
        EllipticityPair {
            lambda: 1.0,
            big_lambda: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda > 0.0 && self.lambda <= self.big_lambda && self.big_lambda.is_finite() {
            Ok(())
        } else {
            Err(Error::Ellipticity {
                lambda: self.lambda,
                big_lambda: self.big_lambda,
            })
        }
    }

    /// `Λ s⁺ − λ s⁻`, the contribution of one eigenvalue (or one directional
    /// second difference) to `M⁺`.
    #[inline]
    pub fn plus_weight(&self, s: f64) -> f64 {
        if s >= 0.0 {
            self.big_lambda * s
        } else {
            self.lambda * s
        }
    }

    /// `λ s⁺ − Λ s⁻`, the matching contribution to `M⁻`.
    #[inline]
    pub fn minus_weight(&self, s: f64) -> f64 {
        if s >= 0.0 {
            self.lambda * s
        } else {
            self.big_lambda * s
        }
    }
}

/// Symmetric 2×2 matrix `[[a11, a12], [a12, a22]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sym2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl Sym2 {
    pub const fn new(a11: f64, a12: f64, a22: f64) -> Self {
        Sym2 { a11, a12, a22 }
    }

    pub const fn diag(a: f64, b: f64) -> Self {
        Sym2::new(a, 0.0, b)
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn scale(&self, t: f64) -> Sym2 {
        Sym2::new(t * self.a11, t * self.a12, t * self.a22)
    }

    pub fn add(&self, o: &Sym2) -> Sym2 {
        Sym2::new(self.a11 + o.a11, self.a12 + o.a12, self.a22 + o.a22)
    }

    /// `tr(A·M)` for two symmetric matrices.
    pub fn frobenius_dot(&self, o: &Sym2) -> f64 {
        self.a11 * o.a11 + 2.0 * self.a12 * o.a12 + self.a22 * o.a22
    }

    /// Largest absolute eigenvalue.
    pub fn spectral_norm(&self) -> f64 {
        let (e1, e2) = eigenvalues(self);
        e1.abs().max(e2.abs())
    }
}

/// Eigenvalues in ascending order.
pub fn eigenvalues(m: &Sym2) -> (f64, f64) {
    let mean = 0.5 * (m.a11 + m.a22);
    let half_diff = 0.5 * (m.a11 - m.a22);
    let radius = half_diff.hypot(m.a12);
    (mean - radius, mean + radius)
}

/// `M⁺(m) = Λ Σ eᵢ⁺ − λ Σ eᵢ⁻`.
pub fn pucci_plus(m: &Sym2, ell: &EllipticityPair) -> f64 {
    let (e1, e2) = eigenvalues(m);
    ell.plus_weight(e1) + ell.plus_weight(e2)
}

/// `M⁻(m) = λ Σ eᵢ⁺ − Λ Σ eᵢ⁻`.
pub fn pucci_minus(m: &Sym2, ell: &EllipticityPair) -> f64 {
    let (e1, e2) = eigenvalues(m);
    ell.minus_weight(e1) + ell.minus_weight(e2)
}

/// Grid search of `tr(A·m)` over admissible `A = Rᵀ diag(a, b) R` with
/// `a, b ∈ [λ, Λ]`. Returns `(sup, inf)`. The grid always contains `λI`,
/// `ΛI` and the unrotated frame.
pub fn pucci_bruteforce(m: &Sym2, ell: &EllipticityPair, n_samples: usize) -> (f64, f64) {
    let n_levels = 5usize;
    let n_angles = (n_samples / (n_levels * n_levels)).max(1);
    let level = |k: usize| {
        ell.lambda + (ell.big_lambda - ell.lambda) * k as f64 / (n_levels - 1) as f64
    };
    let mut sup = f64::NEG_INFINITY;
    let mut inf = f64::INFINITY;
    for t in 0..n_angles {
        let theta = std::f64::consts::PI * t as f64 / n_angles as f64;
        let (s, c) = theta.sin_cos();
        for ia in 0..n_levels {
            for ib in 0..n_levels {
                let (a, b) = (level(ia), level(ib));
                let coeff = if t == 0 || ia == ib {
                    Sym2::diag(a, b)
                } else {
                    Sym2::new(a * c * c + b * s * s, (a - b) * c * s, a * s * s + b * c * c)
                };
                let v = coeff.frobenius_dot(m);
                sup = sup.max(v);
                inf = inf.min(v);
            }
        }
    }
    (sup, inf)
}
