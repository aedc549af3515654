//! Numerical laboratory for positive contractions on `l_p`, `1 < p < inf`.
//!
//! Operators are modelled as a finite nonnegative block followed by a
//! structured diagonal tail (see [`linalg::OperatorModel`]). On top of that
//! representation the crate computes operator norms and norming vectors,
//! finite-index gaps for the weak/strong operator topologies, explicit
//! continuity certificates together with an adversarial falsifier, the
//! standard constructions and counterexample sequences, and Monte-Carlo
//! campaigns over random positive contractions.

pub mod certificates;
pub mod constructions;
pub mod error;
pub mod linalg;
pub mod matrix;
pub mod norms;
pub mod topologies;
pub mod typicality;

pub use error::{Error, Result};
pub use linalg::{CoordVector, GeometricTail, OperatorModel, SupportSet, TailModel};
pub use matrix::Matrix;
