//! Bell inequalities `alpha . S + beta_C >= 0`.

use crate::functional::LinearFunctional;
use crate::scenario::{CorrelatorVector, CORRELATOR_DIM};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BellInequality {
    /// Coefficients on `(S0, S1, S00, S01, S11)`.
    pub alpha: [f64; CORRELATOR_DIM],
    /// Classical bound.
    pub beta_c: f64,
}

impl BellInequality {
    pub fn new(alpha: [f64; CORRELATOR_DIM], beta_c: f64) -> Self {
        BellInequality { alpha, beta_c }
    }

    /// Value of `alpha . S + beta_C`; negative values violate the inequality.
    pub fn evaluate(&self, s: &CorrelatorVector) -> f64 {
        self.expression().eval(s) + self.beta_c
    }

    pub fn expression(&self) -> LinearFunctional {
        LinearFunctional(self.alpha)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        BellInequality { alpha: self.alpha.map(|a| a * factor), beta_c: self.beta_c * factor }
    }

    /// Largest coefficient magnitude once each coordinate is weighted by its
    /// typical size `N^order`.
    pub fn weighted_scale(&self, parties: u32) -> f64 {
        let n = parties as f64;
        let w = [n, n, n * n, n * n, n * n];
        self.alpha.iter().zip(w).map(|(a, w)| (a * w).abs()).fold(self.beta_c.abs(), f64::max)
    }
}
