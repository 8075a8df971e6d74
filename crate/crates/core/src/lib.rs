//! Rational q-Heun operators on the Askey-Wilson grid.
//!
//! The crate builds second-order q-difference operators from their raising
//! property on elementary rational functions `1/(x − x_n)`, checks every
//! closed form attached to them numerically, and solves the generalized
//! eigenvalue problems whose solutions are Wilson biorthogonal ₁₀Φ₉ rational
//! functions.
//!
//! All arithmetic is generic over [`numerics::Real`]; `f64` and the
//! double-double [`Dd`] are provided.

pub mod classical;
pub mod dd;
pub mod draws;
pub mod error;
pub mod gevp;
pub mod heunop;
pub mod hyp;
pub mod linalg;
pub mod numerics;
pub mod par;
pub mod ratfun;
pub mod verify;

pub use dd::Dd;
pub use error::{Error, Result};
pub use numerics::{Backend, EpsilonParams, GridParams, PrecisionContext, Real, C};
