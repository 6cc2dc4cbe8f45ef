//! The symmetric local polytope as the convex hull of its vertices: membership by
//! linear programming, classical bounds, planar projections, and points of the
//! real relaxation of the vertex set.

mod bound;
mod hull;
mod lp;

use alloc::vec;
use alloc::vec::Vec;

use crate::bell::BellInequality;
use crate::error::{Error, Result};
use crate::functional::LinearFunctional;
use crate::scenario::{
    check_budget, int_vertex_correlators, vertex_correlators, Compositions, CorrelatorVector, IntStrategyCounts,
    StrategyCounts, CORRELATOR_DIM,
};

pub use bound::{
    classical_minimum_exact, classical_minimum_range, decimal_rational, is_valid_exact, merge_minima, rational_alpha,
    ClassicalMinimum,
};
pub use hull::{convex_hull, merge_hulls, project_2d, project_hull_range, sampled_support, Polygon};

/// Largest max-norm reconstruction error (relative to each coordinate's range) of
/// an Inside verdict; points this close to the boundary count as Inside.
pub const MEMBERSHIP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MembershipStatus {
    Inside,
    Outside,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MembershipVerdict {
    pub status: MembershipStatus,
    /// Convex weights over vertices (Inside only).
    pub weights: Vec<(IntStrategyCounts, f64)>,
    /// Inequality valid on every vertex and violated at the query (Outside only).
    pub separator: Option<BellInequality>,
    /// Max-norm reconstruction error of the weights, in the query's units.
    pub residual: f64,
}

impl MembershipVerdict {
    pub fn is_inside(&self) -> bool {
        self.status == MembershipStatus::Inside
    }
}

/// Vertex columns `(f_1(S)/s_1, ..., f_k(S)/s_k, 1)` in composition order.
struct VertexColumns<'a> {
    parties: u32,
    functionals: &'a [LinearFunctional],
    scale: Vec<f64>,
}

impl lp::ColumnSource for VertexColumns<'_> {
    type Tag = IntStrategyCounts;
    fn scan(&self, f: &mut dyn FnMut(&IntStrategyCounts, &[f64]) -> bool) {
        let k = self.functionals.len();
        let mut col = vec![1.0; k + 1];
        for x in Compositions::new(self.parties) {
            let s = int_vertex_correlators(&x).0;
            for i in 0..k {
                col[i] = self.functionals[i].eval_int(&s) / self.scale[i];
            }
            if f(&x, &col) {
                return;
            }
        }
    }
}

/// Bound on `|f(S)|` over the polytope, used to bring every LP row to unit size.
fn row_scale(f: &LinearFunctional, parties: u32) -> f64 {
    let n = parties as f64;
    let bound = [n, n, n * n, n * n, n * n];
    f.0.iter().zip(bound).map(|(a, b)| a.abs() * b).sum::<f64>().max(f64::MIN_POSITIVE)
}

fn validate_functionals(functionals: &[LinearFunctional], values: &[f64]) -> Result<()> {
    if functionals.is_empty() || functionals.len() > CORRELATOR_DIM || values.len() != functionals.len() {
        return Err(Error::FunctionalCount(functionals.len()));
    }
    if functionals.iter().any(|f| f.is_zero() || f.0.iter().any(|v| !v.is_finite()))
        || values.iter().any(|v| !v.is_finite())
    {
        return Err(Error::DegenerateFunctionals);
    }
    Ok(())
}

/// Whether `(f_1(S), ..., f_k(S)) = values` for some `S` in the polytope.
///
/// Outside verdicts carry a separator `alpha . S + beta_C` built from the phase-one
/// duals, with `beta_C` re-derived from a vertex sweep so that it is valid on every
/// vertex up to rounding.
pub fn membership_projected(functionals: &[LinearFunctional], values: &[f64], parties: u32) -> Result<MembershipVerdict> {
    check_budget(parties)?;
    validate_functionals(functionals, values)?;
    let scale: Vec<f64> = functionals.iter().map(|f| row_scale(f, parties)).collect();
    let source = VertexColumns { parties, functionals, scale: scale.clone() };
    let mut b: Vec<f64> = values.iter().zip(&scale).map(|(v, s)| v / s).collect();
    b.push(1.0);
    let problem = lp::Problem { b, extra: Vec::new(), source: &source, feas_tol: MEMBERSHIP_TOL };
    match lp::solve(&problem)? {
        lp::Outcome::Optimal { basis, .. } => {
            let mut weights: Vec<(IntStrategyCounts, f64)> = basis
                .into_iter()
                .filter_map(|(v, w)| match v {
                    lp::Var::Stream(_, x) if w > 0.0 => Some((x, w)),
                    _ => None,
                })
                .collect();
            let total: f64 = weights.iter().map(|w| w.1).sum();
            for w in &mut weights {
                w.1 /= total;
            }
            weights.sort_by_key(|a| a.0);
            let mut residual: f64 = 0.0;
            let mut relative: f64 = 0.0;
            for (i, f) in functionals.iter().enumerate() {
                let got: f64 = weights.iter().map(|(x, w)| w * f.eval_int(&int_vertex_correlators(x).0)).sum();
                residual = residual.max((got - values[i]).abs());
                relative = relative.max((got - values[i]).abs() / scale[i]);
            }
            if !(relative <= MEMBERSHIP_TOL) {
                return Err(Error::LpStalled("weights do not reproduce the point".into()));
            }
            Ok(MembershipVerdict { status: MembershipStatus::Inside, weights, separator: None, residual })
        }
        lp::Outcome::Infeasible { duals, .. } => {
            let k = functionals.len();
            let mut alpha = [0.0; CORRELATOR_DIM];
            for i in 0..k {
                for c in 0..CORRELATOR_DIM {
                    alpha[c] -= duals[i] / scale[i] * functionals[i].0[c];
                }
            }
            let expr = LinearFunctional(alpha);
            let min = Compositions::new(parties)
                .map(|x| expr.eval_int(&int_vertex_correlators(&x).0))
                .fold(f64::INFINITY, f64::min);
            let at_point: f64 = (0..k).map(|i| -duals[i] / scale[i] * values[i]).sum();
            if !(at_point < min) {
                return Err(Error::LpStalled("separator does not cut off the point".into()));
            }
            let ineq = BellInequality::new(alpha, -min);
            let norm = ineq.weighted_scale(parties);
            Ok(MembershipVerdict {
                status: MembershipStatus::Outside,
                weights: Vec::new(),
                separator: Some(ineq.scaled(1.0 / norm)),
                residual: 0.0,
            })
        }
        lp::Outcome::Unbounded => Err(Error::LpStalled("feasibility problem reported unbounded".into())),
    }
}

/// Whether `point` lies in the polytope.
pub fn membership(point: &CorrelatorVector, parties: u32) -> Result<MembershipVerdict> {
    let fs: Vec<LinearFunctional> =
        crate::scenario::Correlator::ALL.iter().map(|&c| LinearFunctional::coordinate(c)).collect();
    membership_projected(&fs, &point.0, parties)
}

/// Largest `lambda >= 0` with `f_i(S) = lambda * direction_i` for some `S` in the
/// polytope, by linear programming; `None` when even `lambda = 0` is unreachable.
pub fn radial_lp(functionals: &[LinearFunctional], direction: &[f64], parties: u32) -> Result<Option<f64>> {
    check_budget(parties)?;
    validate_functionals(functionals, direction)?;
    if direction.iter().all(|&d| d == 0.0) {
        return Err(Error::ZeroDirection);
    }
    let scale: Vec<f64> = functionals.iter().map(|f| row_scale(f, parties)).collect();
    let source = VertexColumns { parties, functionals, scale: scale.clone() };
    let mut b = vec![0.0; functionals.len()];
    b.push(1.0);
    let mut lambda_col: Vec<f64> = direction.iter().zip(&scale).map(|(d, s)| -d / s).collect();
    lambda_col.push(0.0);
    let problem = lp::Problem { b, extra: vec![(lambda_col, -1.0)], source: &source, feas_tol: lp::LP_TOL };
    match lp::solve(&problem)? {
        lp::Outcome::Optimal { objective, .. } => Ok(Some(-objective)),
        lp::Outcome::Infeasible { .. } => Ok(None),
        lp::Outcome::Unbounded => Err(Error::LpStalled("radial problem unbounded".into())),
    }
}

/// A point of the real relaxation of the vertex set: the correlator map at real
/// strategy counts.
pub fn relaxed_surface_point(x: &StrategyCounts, parties: u32) -> Result<CorrelatorVector> {
    vertex_correlators(x, parties)
}

/// Minimum of `alpha . S` over the vertices (the constant of `ineq` is ignored),
/// computed exactly from the decimal values of the coefficients.
pub fn classical_bound(ineq: &BellInequality, parties: u32) -> Result<f64> {
    Ok(classical_minimum(ineq, parties)?.to_f64())
}

/// [`classical_bound`] with the exact value and a minimizing vertex.
pub fn classical_minimum(ineq: &BellInequality, parties: u32) -> Result<ClassicalMinimum> {
    let alpha = rational_alpha(&ineq.alpha).ok_or(Error::DegenerateFunctionals)?;
    classical_minimum_exact(&alpha, parties)
}
