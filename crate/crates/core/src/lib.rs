//! Certification of Bell correlations in permutationally invariant two-setting
//! statistics of `N` parties.
//!
//! The symmetric local polytope is approximated from the outside by the convex hull
//! of a semialgebraic set (counts relaxed to reals), which in turn is approximated by
//! a hierarchy of moment-matrix semidefinite programs whose size does not depend on
//! `N`. Infeasibility (or a scaling factor below one) certifies nonlocality, and the
//! dual of the program yields the violated Bell inequality.
//!
//! Modules, bottom-up:
//! - [`scenario`]: strategies, vertices and the count-to-correlator map.
//! - [`polytope`]: LP membership, classical bounds and 2D projections of the polytope.
//! - [`ring`]: exact polynomials modulo the ideal of the correlator variety.
//! - [`moment`]: moment-matrix templates and SDP assembly.
//! - [`sdp`]: a homogeneous self-dual interior-point solver and certificates.
//! - [`certify`]: verdicts built from the pieces above.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bell;
pub mod certificate;
pub mod certify;
pub mod error;
pub mod functional;
mod math;
pub mod moment;
pub mod polytope;
pub mod ring;
pub mod scenario;
pub mod sdp;

pub use bell::BellInequality;
pub use error::{Error, Result};
pub use functional::{LinearFunctional, PointConstraint};
pub use scenario::{Correlator, CorrelatorVector, Scenario, StrategyCounts};
