//! Numerical workbench for a family of rotationally symmetric expanding
//! Kahler metrics on complex n-space.
//!
//! The profile of such a metric is a single positive function of the
//! cylindrical coordinate `t = log |z|^2`; everything else is derived from
//! it. The crate builds these profiles to near machine precision
//! ([`soliton`]), evaluates the exponential-tail special functions their
//! closed forms need without catastrophic cancellation ([`kernels`]),
//! assembles the curvature operator on (1,1)-forms and checks its
//! positivity ([`curvature`]), tabulates volume growth and curvature decay
//! statistics ([`geometry`]), and evolves profiles by the associated
//! parabolic flow with a self-similarity oracle ([`flow`]). The [`cli`]
//! module exposes all of it as deterministic CSV/JSON reports, and
//! [`acceptance`] bundles the release checks.

// Negated float comparisons such as `!(x > 0.0)` are deliberate throughout:
// unlike `x <= 0.0`, they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod cli;
pub mod curvature;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod io;
pub mod kernels;
pub mod quad;
pub mod soliton;

pub use error::{Error, Result};
