//! Small block-diagonal semidefinite programs in linear-matrix-inequality form,
//!
//! ```text
//! maximize  c . w   subject to   F_0 + sum_k w_k F_k  >= 0   (PSD, block diagonal),
//! ```
//!
//! solved with a primal-dual interior-point method on the homogeneous self-dual
//! embedding, which returns either an optimal primal-dual pair or a certificate of
//! infeasibility / unboundedness.

mod facial;
mod hsd;

use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub use hsd::solve_with;

/// One stored entry of a symmetric block-diagonal matrix, `row <= col`. The entry
/// stands for both `(row, col)` and `(col, row)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymEntry {
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// Sparse symmetric block-diagonal matrix.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseSym {
    pub entries: Vec<SymEntry>,
}

impl SparseSym {
    pub fn new() -> Self {
        SparseSym::default()
    }

    /// Adds `value` at `(row, col)` and its mirror.
    pub fn push(&mut self, block: usize, row: usize, col: usize, value: f64) {
        let (row, col) = if row <= col { (row, col) } else { (col, row) };
        self.entries.push(SymEntry { block, row, col, value });
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Merges duplicate positions and drops zeros; entries end up sorted.
    pub fn compact(&mut self) {
        self.entries.sort_by_key(|a| (a.block, a.row, a.col));
        let mut out: Vec<SymEntry> = Vec::with_capacity(self.entries.len());
        for e in self.entries.drain(..) {
            match out.last_mut() {
                Some(l) if (l.block, l.row, l.col) == (e.block, e.row, e.col) => l.value += e.value,
                _ => out.push(e),
            }
        }
        out.retain(|e| e.value != 0.0);
        self.entries = out;
    }

    pub fn frobenius_norm(&self) -> f64 {
        let sq: f64 = self
            .entries
            .iter()
            .map(|e| if e.row == e.col { e.value * e.value } else { 2.0 * e.value * e.value })
            .sum();
        crate::math::sqrt(sq)
    }

    /// `<self, X>` for dense blocks `X`.
    pub fn dot(&self, x: &[DMatrix<f64>]) -> f64 {
        self.entries
            .iter()
            .map(|e| {
                let v = x[e.block][(e.row, e.col)];
                if e.row == e.col {
                    e.value * v
                } else {
                    2.0 * e.value * v
                }
            })
            .sum()
    }

    /// `out += scale * self`.
    pub fn add_to(&self, out: &mut [DMatrix<f64>], scale: f64) {
        for e in &self.entries {
            out[e.block][(e.row, e.col)] += scale * e.value;
            if e.row != e.col {
                out[e.block][(e.col, e.row)] += scale * e.value;
            }
        }
    }

    pub fn to_dense(&self, sizes: &[usize]) -> Vec<DMatrix<f64>> {
        let mut out = zero_blocks(sizes);
        self.add_to(&mut out, 1.0);
        out
    }

    pub fn scaled(&self, factor: f64) -> SparseSym {
        SparseSym {
            entries: self.entries.iter().map(|e| SymEntry { value: e.value * factor, ..*e }).collect(),
        }
    }
}

pub(crate) fn zero_blocks(sizes: &[usize]) -> Vec<DMatrix<f64>> {
    sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect()
}

/// `maximize objective . w` subject to `constant + sum_k w_k coefficients[k] >= 0`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SdpProblem {
    pub block_sizes: Vec<usize>,
    pub constant: SparseSym,
    pub coefficients: Vec<SparseSym>,
    pub objective: Vec<f64>,
}

impl SdpProblem {
    pub fn num_vars(&self) -> usize {
        self.coefficients.len()
    }

    pub fn total_dim(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.objective.len() != self.coefficients.len() {
            return Err(Error::MalformedProblem(format!(
                "{} objective entries for {} variables",
                self.objective.len(),
                self.coefficients.len()
            )));
        }
        for (k, m) in core::iter::once(&self.constant).chain(&self.coefficients).enumerate() {
            for e in &m.entries {
                let ok = e.block < self.block_sizes.len()
                    && e.row <= e.col
                    && e.col < self.block_sizes[e.block]
                    && e.value.is_finite();
                if !ok {
                    return Err(Error::MalformedProblem(format!("bad entry {:?} in matrix {}", e, k)));
                }
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::MalformedProblem("non-finite objective".into()));
        }
        Ok(())
    }

    /// `F(w) = F_0 + sum_k w_k F_k` as dense blocks.
    pub fn evaluate(&self, w: &[f64]) -> Vec<DMatrix<f64>> {
        let mut out = self.constant.to_dense(&self.block_sizes);
        for (f, &wk) in self.coefficients.iter().zip(w) {
            f.add_to(&mut out, wk);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    /// No `w` makes the matrix PSD; the certificate is a PSD `Z` with
    /// `<F_k, Z> = 0` for every variable and `<F_0, Z> < 0`.
    Infeasible,
    /// The objective grows without bound; the certificate is a ray `w`.
    Unbounded,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolverStats {
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub tau: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpOutcome {
    pub status: SdpStatus,
    /// `objective . w` when optimal.
    pub objective: f64,
    /// Optimal `w`, or the improving ray when unbounded.
    pub primal: Vec<f64>,
    /// Dual matrix `Z >= 0`: optimal multiplier of the LMI, or the infeasibility
    /// certificate normalized to unit trace.
    pub dual: Vec<DMatrix<f64>>,
    /// `-<F_0, Z>` for a unit-trace certificate; zero otherwise.
    pub infeasibility_margin: f64,
    pub stats: SolverStats,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub max_iterations: usize,
    /// Relative primal and dual residual target.
    pub feasibility_tol: f64,
    /// Relative duality gap target, `|pobj - dobj| <= gap_tol (1 + |dobj|)`.
    pub gap_tol: f64,
    /// Residual of a normalized infeasibility certificate.
    pub infeasibility_tol: f64,
    /// Smallest margin for an infeasibility certificate to count.
    pub min_margin: f64,
    /// Iterations without improvement of the best iterate before giving up.
    pub stall_iterations: usize,
    /// A stalled run still counts as optimal when its best iterate has primal,
    /// dual and relative gap residuals at most this.
    pub acceptable_tol: f64,
    /// Same fallback for infeasibility certificates.
    pub acceptable_infeasibility_tol: f64,
    /// Drop diagonal entries that free variables can raise independently.
    pub reduce_faces: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            max_iterations: 200,
            feasibility_tol: 1e-9,
            gap_tol: 1e-8,
            infeasibility_tol: 1e-9,
            min_margin: 1e-8,
            stall_iterations: 5,
            acceptable_tol: 1e-7,
            acceptable_infeasibility_tol: 1e-6,
            reduce_faces: true,
        }
    }
}

/// Solves with default settings.
pub fn solve(problem: &SdpProblem) -> Result<SdpOutcome> {
    solve_with(problem, &SolverSettings::default())
}
