use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::dini::Modulus;
use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, Piece, Point, NOTCH_HALF_WIDTH};

/// Dirichlet data `g`, defined on the wall and the outer sphere (and extended
/// to exterior nodes by the same formula).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryData {
    /// Constant on each piece.
    Piecewise { wall: f64, outer: f64 },
    /// `scale·|x|·ω_g(|x|)` on the wall, `outer` on the sphere.
    DiniWall {
        omega_g: Modulus,
        scale: f64,
        outer: f64,
    },
    /// `gradient·x + offset` everywhere.
    Linear { gradient: Point, offset: f64 },
    /// `scale·x₁x₂` everywhere.
    Product { scale: f64 },
    /// `Re(z^β) = r^β cos(βθ)` with `θ ∈ [−π/2, 3π/2)`, harmonic in the upper
    /// half plane.
    HarmonicPower { exponent: f64 },
    /// `value` on the raised shelf `{x₂ = a, |x₁| ≥ 1/4}` of a notch domain,
    /// 0 on the rest of the boundary.
    Shelf { value: f64 },
}

impl BoundaryData {
    pub fn validate(&self, domain: &DomainSpec) -> Result<()> {
        match self {
            BoundaryData::DiniWall { omega_g, .. } => {
                omega_g.validate()?;
                if omega_g.domain_radius < domain.radius() {
                    return Err(Error::InvalidProblem(format!(
                        "omega_g is defined on [0, {}] but the domain has radius {}",
                        omega_g.domain_radius,
                        domain.radius()
                    )));
                }
            }
            BoundaryData::Shelf { .. } => {
                if !matches!(domain, DomainSpec::Notch { .. }) {
                    return Err(Error::InvalidProblem("shelf data requires a notch domain".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn function(&self, domain: &DomainSpec) -> Result<Box<dyn Fn(Point, Piece) -> f64 + Sync + '_>> {
        self.validate(domain)?;
        Ok(match self {
            BoundaryData::Piecewise { wall, outer } => Box::new(move |_, piece| match piece {
                Piece::Wall => *wall,
                Piece::Outer => *outer,
            }),
            BoundaryData::DiniWall {
                omega_g,
                scale,
                outer,
            } => Box::new(move |p: Point, piece| match piece {
                Piece::Wall => {
                    let r = p[0].hypot(p[1]).min(omega_g.domain_radius);
                    scale * r * omega_g.value(r)
                }
                Piece::Outer => *outer,
            }),
            BoundaryData::Linear { gradient, offset } => {
                Box::new(move |p: Point, _| gradient[0] * p[0] + gradient[1] * p[1] + offset)
            }
            BoundaryData::Product { scale } => Box::new(move |p: Point, _| scale * p[0] * p[1]),
            BoundaryData::HarmonicPower { exponent } => Box::new(move |p: Point, _| harmonic_power(*exponent, p)),
            BoundaryData::Shelf { value } => {
                let a = match domain {
                    DomainSpec::Notch { a, .. } => *a,
                    _ => unreachable!("validated above"),
                };
                Box::new(move |p: Point, piece| {
                    let on_shelf = piece == Piece::Wall
                        && p[0].abs() >= NOTCH_HALF_WIDTH - 1e-9
                        && (p[1] - a).abs() <= 1e-9;
                    if on_shelf {
                        *value
                    } else {
                        0.0
                    }
                })
            }
        })
    }

    /// Multiplies the data by `t`.
    pub fn scaled(&self, t: f64) -> BoundaryData {
        match self.clone() {
            BoundaryData::Piecewise { wall, outer } => BoundaryData::Piecewise {
                wall: t * wall,
                outer: t * outer,
            },
            BoundaryData::DiniWall {
                omega_g,
                scale,
                outer,
            } => BoundaryData::DiniWall {
                omega_g,
                scale: t * scale,
                outer: t * outer,
            },
            BoundaryData::Linear { gradient, offset } => BoundaryData::Linear {
                gradient: [t * gradient[0], t * gradient[1]],
                offset: t * offset,
            },
            BoundaryData::Product { scale } => BoundaryData::Product { scale: t * scale },
            BoundaryData::Shelf { value } => BoundaryData::Shelf { value: t * value },
            other @ BoundaryData::HarmonicPower { .. } => other,
        }
    }
}

/// `Re(z^β)` on the branch `arg z ∈ [−π/2, 3π/2)`.
pub fn harmonic_power(beta: f64, p: Point) -> f64 {
    let r = p[0].hypot(p[1]);
    if r == 0.0 {
        return 0.0;
    }
    let mut theta = p[1].atan2(p[0]);
    if theta < -FRAC_PI_2 {
        theta += 2.0 * PI;
    }
    r.powf(beta) * (beta * theta).cos()
}

/// Right-hand side `f` of `M(D²u) = f`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceData {
    #[default]
    Zero,
    Constant { value: f64 },
    /// `amp·ω_f(|x|)/|x|`, whose `L²(B_r)` norm is a multiple of `ω_f(r)`
    /// for power moduli.
    RadialDini { omega_f: Modulus, amp: f64 },
}

impl SourceData {
    pub fn validate(&self) -> Result<()> {
        match self {
            SourceData::RadialDini { omega_f, .. } => omega_f.validate(),
            SourceData::Constant { value } if !value.is_finite() => {
                Err(Error::InvalidProblem(format!("source value {value} is not finite")))
            }
            _ => Ok(()),
        }
    }

    pub fn function(&self) -> Box<dyn Fn(Point) -> f64 + Sync + '_> {
        match self {
            SourceData::Zero => Box::new(|_| 0.0),
            SourceData::Constant { value } => Box::new(move |_| *value),
            SourceData::RadialDini { omega_f, amp } => Box::new(move |p: Point| {
                let r = p[0].hypot(p[1]);
                if r == 0.0 {
                    0.0
                } else {
                    amp * omega_f.value(r.min(omega_f.domain_radius)) / r
                }
            }),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            SourceData::Zero => "zero".into(),
            SourceData::Constant { value } => format!("constant({value})"),
            SourceData::RadialDini { omega_f, amp } => {
                format!("radial_dini(amp={amp}, omega_f={})", serde_json::to_string(omega_f).unwrap_or_default())
            }
        }
    }

    pub fn scaled(&self, t: f64) -> SourceData {
        match self.clone() {
            SourceData::Zero => SourceData::Zero,
            SourceData::Constant { value } => SourceData::Constant { value: t * value },
            SourceData::RadialDini { omega_f, amp } => SourceData::RadialDini { omega_f, amp: t * amp },
        }
    }
}
