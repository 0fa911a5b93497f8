//! Eigenvalues of Sturm-Liouville operators with an indefinite weight.
//!
//! The expression `(1/r)(-(p u')' + q u)` with `r` positive on `(c, inf)` and
//! negative on `(-inf, c)` defines a selfadjoint operator in a Krein space.
//! Its eigenvalues are located as zeros of the matching function
//! `M(lambda) = m_plus(lambda) - m_minus(-lambda)` built from the half-line
//! Titchmarsh-Weyl coefficients, and the definite operator `A` (weight `|r|`)
//! is treated the same way with `D(lambda) = m_plus(lambda) - m_minus(lambda)`.

pub mod coefficients;
pub mod error;
pub mod expr;
pub mod matching;
pub mod oracle;
pub mod periodic;
pub mod theorems;
pub mod count;
pub mod ode;
pub mod report;
pub mod roots;
pub mod weyl;

pub use error::{Error, Result};
