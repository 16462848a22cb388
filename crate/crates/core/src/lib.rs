//! Monotone wide-stencil solvers for the Pucci extremal equations on planar
//! domains with Dini-continuous boundaries, plus the measurement harness and
//! iteration-parameter certifier built on top of them.

pub mod certify;
pub mod dini;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod pucci;
pub mod solver;
pub mod stencil;

pub use error::{Error, Result};
