//! Exact polynomial arithmetic over the correlator variables and reduction modulo the
//! ideal of the correlator variety.

mod monomial;
mod polynomial;
mod quotient;

pub use monomial::Monomial;
pub use polynomial::{Polynomial, Rational};
pub use quotient::{constraint_polynomials, ideal_generators, quotient_basis, QuotientRing, RewriteRule};
