//! Numerical tools for scalar equations `dx = f(t, x) dL` driven by a
//! right-continuous function `L` of bounded variation.
//!
//! The crate provides the mollified finite-difference scheme on an `h`-lattice
//! ([`scheme`]), the limit integral equation with jump maps ([`limit`]), the
//! regime analysis that tells which jump rule a schedule of smoothing widths
//! and steps converges to ([`mollifier`]), and convergence studies tying the
//! two together ([`analysis`]).

// Negated comparisons are used on purpose so that NaN inputs fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod bvfun;
pub mod error;
pub mod field;
pub mod jumpmap;
pub mod limit;
pub mod mollifier;
pub mod quad;
pub mod scheme;

pub use bvfun::{BVFunction, Jump, Segment};
pub use error::{Error, Result};
pub use field::{Harmonic, ScalarField, StateField};
pub use jumpmap::{JumpMeasure, SigmaG, XiGrid};
pub use mollifier::{MollifierProfile, Schedule, Verdict};
