use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pucci::EllipticityPair;
use crate::stencil::StencilSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorTag {
    PucciPlus,
    PucciMinus,
    Laplace,
}

impl OperatorTag {
    pub fn name(&self) -> &'static str {
        self.operator().name()
    }

    pub fn operator(&self) -> &'static dyn ExtremalOperator {
        match self {
            OperatorTag::PucciPlus => &PucciPlus,
            OperatorTag::PucciMinus => &PucciMinus,
            OperatorTag::Laplace => &Laplace,
        }
    }
}

/// Whether an operator takes the best frame from above or below.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameSelection {
    Max,
    Min,
}

/// A monotone frame operator: per-frame sums of weighted directional second
/// differences, combined by a max or min over frames.
pub trait ExtremalOperator: Send + Sync {
    fn name(&self) -> &'static str;

    fn tag(&self) -> OperatorTag;

    fn selection(&self) -> FrameSelection;

    /// Frames the operator ranges over.
    fn frames<'s>(&self, stencil: &'s StencilSet) -> &'s [[usize; 2]] {
        stencil.frames()
    }

    /// Linear coefficient applied to a directional second difference `s`;
    /// the contribution is `coefficient(s) * s`.
    fn coefficient(&self, ell: &EllipticityPair, s: f64) -> f64;

    /// Largest coefficient the operator can apply.
    fn max_coefficient(&self, ell: &EllipticityPair) -> f64;

    /// Smallest coefficient the operator can apply.
    fn min_coefficient(&self, ell: &EllipticityPair) -> f64;
}

pub struct PucciPlus;
pub struct PucciMinus;
/// Five-point (cut-cell) Laplacian on the axis frame.
pub struct Laplace;

impl ExtremalOperator for PucciPlus {
    fn name(&self) -> &'static str {
        "pucci_plus"
    }
    fn tag(&self) -> OperatorTag {
        OperatorTag::PucciPlus
    }
    fn selection(&self) -> FrameSelection {
        FrameSelection::Max
    }
    fn coefficient(&self, ell: &EllipticityPair, s: f64) -> f64 {
        if s >= 0.0 {
            ell.big_lambda
        } else {
            ell.lambda
        }
    }
    fn max_coefficient(&self, ell: &EllipticityPair) -> f64 {
        ell.big_lambda
    }
    fn min_coefficient(&self, ell: &EllipticityPair) -> f64 {
        ell.lambda
    }
}

impl ExtremalOperator for PucciMinus {
    fn name(&self) -> &'static str {
        "pucci_minus"
    }
    fn tag(&self) -> OperatorTag {
        OperatorTag::PucciMinus
    }
    fn selection(&self) -> FrameSelection {
        FrameSelection::Min
    }
    fn coefficient(&self, ell: &EllipticityPair, s: f64) -> f64 {
        if s >= 0.0 {
            ell.lambda
        } else {
            ell.big_lambda
        }
    }
    fn max_coefficient(&self, ell: &EllipticityPair) -> f64 {
        ell.big_lambda
    }
    fn min_coefficient(&self, ell: &EllipticityPair) -> f64 {
        ell.lambda
    }
}

impl ExtremalOperator for Laplace {
    fn name(&self) -> &'static str {
        "laplace"
    }
    fn tag(&self) -> OperatorTag {
        OperatorTag::Laplace
    }
    fn selection(&self) -> FrameSelection {
        FrameSelection::Max
    }
    fn frames<'s>(&self, stencil: &'s StencilSet) -> &'s [[usize; 2]] {
        &stencil.frames()[..1]
    }
    fn coefficient(&self, _ell: &EllipticityPair, _s: f64) -> f64 {
        1.0
    }
    fn max_coefficient(&self, _ell: &EllipticityPair) -> f64 {
        1.0
    }
    fn min_coefficient(&self, _ell: &EllipticityPair) -> f64 {
        1.0
    }
}

static OPERATORS: [&dyn ExtremalOperator; 3] = [&PucciPlus, &PucciMinus, &Laplace];

/// Every registered operator.
pub fn operators() -> &'static [&'static dyn ExtremalOperator] {
    &OPERATORS
}

pub fn operator_by_name(name: &str) -> Result<&'static dyn ExtremalOperator> {
    OPERATORS
        .iter()
        .copied()
        .find(|op| op.name() == name)
        .ok_or_else(|| Error::UnknownName {
            kind: "operator",
            name: name.to_string(),
        })
}
