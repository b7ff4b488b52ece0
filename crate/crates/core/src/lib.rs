//! Maximal displacement of near-critical branching random walks.
//!
//! * [`model`]: offspring and step laws, generating-function algebra, extinction.
//! * [`exact`]: the tail recursion `w_k(x) = P(M_k ≥ x)` and its all-time fixed point.
//! * [`fk`]: exact path-enumeration checks of the reflected-walk martingale and
//!   the discrete Feynman–Kac identities.
//! * [`mc`]: aggregate Monte Carlo simulation of the `n`-particle system.
//! * [`pde`]: the singular FKPP limit, the traveling wave and the closed-form
//!   all-time tail.
//!
//! Every kernel that can run in exact arithmetic is generic over [`Scalar`].

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exact;
pub mod fk;
pub mod mc;
pub mod model;
pub mod par;
pub mod pde;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::{Rational, Scalar};
