//! Linear functionals on the correlator space and the point constraints built from them.

use crate::scenario::{Correlator, CorrelatorVector, CORRELATOR_DIM};

/// `f(S) = sum_k c_k S_k` over `(S0, S1, S00, S01, S11)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LinearFunctional(pub [f64; CORRELATOR_DIM]);

impl LinearFunctional {
    pub fn coordinate(c: Correlator) -> Self {
        let mut out = [0.0; CORRELATOR_DIM];
        out[c.index()] = 1.0;
        LinearFunctional(out)
    }

    pub fn from_terms<I: IntoIterator<Item = (Correlator, f64)>>(terms: I) -> Self {
        let mut out = [0.0; CORRELATOR_DIM];
        for (c, v) in terms {
            out[c.index()] += v;
        }
        LinearFunctional(out)
    }

    pub fn eval(&self, s: &CorrelatorVector) -> f64 {
        self.0.iter().zip(s.0.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn eval_int(&self, s: &[i64; CORRELATOR_DIM]) -> f64 {
        self.0.iter().zip(s.iter()).map(|(a, &b)| a * b as f64).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|v| *v == 0.0)
    }

    pub fn norm(&self) -> f64 {
        crate::math::sqrt(self.0.iter().map(|v| v * v).sum::<f64>())
    }
}

/// Fixes the value of one linear functional of the observed statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointConstraint {
    pub functional: LinearFunctional,
    pub value: f64,
}

impl PointConstraint {
    pub fn new(functional: LinearFunctional, value: f64) -> Self {
        PointConstraint { functional, value }
    }

    /// One constraint per coordinate, pinning the full correlator vector.
    pub fn pin(point: &CorrelatorVector) -> [PointConstraint; CORRELATOR_DIM] {
        Correlator::ALL.map(|c| PointConstraint::new(LinearFunctional::coordinate(c), point.get(c)))
    }
}
