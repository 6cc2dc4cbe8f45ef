//! Turning a template plus point constraints into an LMI problem.
//!
//! The constraints fix linear functionals of the five correlator moments. They are
//! brought to reduced row echelon form in the template's scaling; pivot coordinates
//! are eliminated, the remaining (free) coordinates and the independent higher
//! moments become the SDP variables.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use super::MomentTemplate;
use crate::error::{Error, Result};
use crate::functional::PointConstraint;
use crate::scenario::{Correlator, CorrelatorVector, CORRELATOR_DIM};
use crate::sdp::{SdpProblem, SparseSym};

const PIVOT_TOL: f64 = 1e-10;
const CONSISTENCY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    /// `Gamma(y) >= 0` with the functionals fixed to their values.
    Feasibility,
    /// Maximize `lambda` with the functionals fixed to `lambda` times their values.
    LambdaMax,
}

/// An assembled problem with the bookkeeping needed to map SDP variables and duals
/// back to moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Assembly {
    pub problem: SdpProblem,
    pub kind: ProblemKind,
    pub constraints: Vec<PointConstraint>,
    positions: [usize; CORRELATOR_DIM],
    /// Reduced rows over the scaled coordinates `yhat_c`; `rows[k][pivots[k]] = 1`.
    rows: Vec<[f64; CORRELATOR_DIM]>,
    rhs: Vec<f64>,
    pivots: Vec<usize>,
    /// `(coordinate, variable)` for the coordinates left free.
    free: Vec<(usize, usize)>,
    /// `(y position, variable)` for the higher moments.
    higher: Vec<(usize, usize)>,
    lambda: Option<usize>,
    scaling: Vec<f64>,
}

/// Row reduction of `sum_c a_kc yhat_c = v_k`.
fn reduce_rows(
    constraints: &[PointConstraint],
    scale: &[f64; CORRELATOR_DIM],
) -> Result<(Vec<[f64; CORRELATOR_DIM]>, Vec<f64>, Vec<usize>)> {
    let mut rows: Vec<([f64; CORRELATOR_DIM], f64)> = Vec::new();
    for c in constraints {
        if !c.value.is_finite() || c.functional.0.iter().any(|v| !v.is_finite()) {
            return Err(Error::MalformedProblem("non-finite constraint".into()));
        }
        let mut r = [0.0; CORRELATOR_DIM];
        for k in 0..CORRELATOR_DIM {
            r[k] = c.functional.0[k] * scale[k];
        }
        let m = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if m == 0.0 {
            if c.value != 0.0 {
                return Err(Error::ContradictoryConstraints);
            }
            continue;
        }
        rows.push((r.map(|v| v / m), c.value / m));
    }
    let rhs_scale = 1.0 + rows.iter().fold(0.0f64, |a, r| a.max(r.1.abs()));

    let mut pivots = Vec::new();
    let mut rank = 0;
    for col in 0..CORRELATOR_DIM {
        let Some((best, val)) = (rank..rows.len())
            .map(|i| (i, rows[i].0[col].abs()))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        else {
            break;
        };
        if val <= PIVOT_TOL {
            for r in rows.iter_mut().skip(rank) {
                r.0[col] = 0.0;
            }
            continue;
        }
        rows.swap(rank, best);
        let (pr, pv) = rows[rank];
        let inv = 1.0 / pr[col];
        let pr = pr.map(|v| v * inv);
        let pv = pv * inv;
        rows[rank] = (pr, pv);
        for i in 0..rows.len() {
            if i == rank {
                continue;
            }
            let f = rows[i].0[col];
            if f != 0.0 {
                for k in 0..CORRELATOR_DIM {
                    rows[i].0[k] -= f * pr[k];
                }
                rows[i].0[col] = 0.0;
                rows[i].1 -= f * pv;
            }
        }
        pivots.push(col);
        rank += 1;
    }
    for r in &rows[rank..] {
        if r.1.abs() > CONSISTENCY_TOL * rhs_scale {
            return Err(Error::ContradictoryConstraints);
        }
    }
    rows.truncate(rank);
    let (r, v) = rows.into_iter().unzip();
    Ok((r, v, pivots))
}

fn combine(terms: &[(f64, &SparseSym)]) -> SparseSym {
    let mut out = SparseSym::new();
    for (f, m) in terms {
        if *f != 0.0 {
            out.entries.extend(m.scaled(*f).entries);
        }
    }
    out.compact();
    out
}

fn assemble(template: &MomentTemplate, constraints: &[PointConstraint], kind: ProblemKind) -> Result<Assembly> {
    let positions = super::correlator_positions(template);
    let scale = positions.map(|p| template.scaling()[p]);
    let (rows, rhs, pivots) = reduce_rows(constraints, &scale)?;
    if kind == ProblemKind::LambdaMax {
        if rows.is_empty() {
            return Err(Error::NoConstraints);
        }
        if rhs.iter().all(|v| *v == 0.0) {
            return Err(Error::ZeroDirection);
        }
    }
    let cols = template.columns();
    let mut coefficients = Vec::new();
    let mut objective = Vec::new();
    let mut lambda = None;

    // Pivot coordinates: yhat_p = rhs_p t - sum_f rows_pf yhat_f with t = 1 or lambda.
    let pinned: Vec<(f64, &SparseSym)> =
        pivots.iter().zip(&rhs).map(|(&c, &v)| (v, &cols[positions[c]])).collect();
    let mut constant_terms = vec![(1.0, &cols[0])];
    match kind {
        ProblemKind::Feasibility => constant_terms.extend(pinned.iter().copied()),
        ProblemKind::LambdaMax => {
            lambda = Some(coefficients.len());
            coefficients.push(combine(&pinned));
            objective.push(1.0);
        }
    }
    let constant = combine(&constant_terms);

    let mut free = Vec::new();
    for c in 0..CORRELATOR_DIM {
        if pivots.contains(&c) {
            continue;
        }
        let mut terms = vec![(1.0, &cols[positions[c]])];
        for (k, &p) in pivots.iter().enumerate() {
            terms.push((-rows[k][c], &cols[positions[p]]));
        }
        free.push((c, coefficients.len()));
        coefficients.push(combine(&terms));
        objective.push(0.0);
    }
    let mut higher = Vec::new();
    for j in 1..template.y_index().len() {
        if positions.contains(&j) || !template.is_independent(j) {
            continue;
        }
        higher.push((j, coefficients.len()));
        coefficients.push(cols[j].clone());
        objective.push(0.0);
    }

    let problem = SdpProblem { block_sizes: template.block_sizes(), constant, coefficients, objective };
    Ok(Assembly {
        problem,
        kind,
        constraints: constraints.to_vec(),
        positions,
        rows,
        rhs,
        pivots,
        free,
        higher,
        lambda,
        scaling: template.scaling().to_vec(),
    })
}

/// `Gamma(y) >= 0`, `y_0 = 1`, each functional fixed to its value.
pub fn assemble_feasibility(template: &MomentTemplate, constraints: &[PointConstraint]) -> Result<Assembly> {
    assemble(template, constraints, ProblemKind::Feasibility)
}

/// Maximize `lambda` subject to `Gamma(y) >= 0`, `y_0 = 1` and each functional fixed
/// to `lambda` times its value.
pub fn assemble_lambda_max(template: &MomentTemplate, direction: &[PointConstraint]) -> Result<Assembly> {
    assemble(template, direction, ProblemKind::LambdaMax)
}

impl Assembly {
    pub fn lambda(&self, w: &[f64]) -> Option<f64> {
        self.lambda.map(|k| w[k])
    }

    /// Scaled correlator moments `yhat_c` for SDP variables `w`.
    fn scaled_coordinates(&self, w: &[f64]) -> [f64; CORRELATOR_DIM] {
        let t = self.lambda(w).unwrap_or(1.0);
        let mut out = [0.0; CORRELATOR_DIM];
        for &(c, k) in &self.free {
            out[c] = w[k];
        }
        for (k, &p) in self.pivots.iter().enumerate() {
            let mut v = self.rhs[k] * t;
            for &(c, _) in &self.free {
                v -= self.rows[k][c] * out[c];
            }
            out[p] = v;
        }
        out
    }

    /// Raw moments `y_j` for SDP variables `w`; dependent columns are reported as 0.
    pub fn moments(&self, w: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.scaling.len()];
        y[0] = 1.0;
        let c = self.scaled_coordinates(w);
        for (k, &p) in self.positions.iter().enumerate() {
            y[p] = c[k] * self.scaling[p];
        }
        for &(j, k) in &self.higher {
            y[j] = w[k] * self.scaling[j];
        }
        y
    }

    pub fn correlators(&self, w: &[f64]) -> CorrelatorVector {
        let c = self.scaled_coordinates(w);
        let mut out = [0.0; CORRELATOR_DIM];
        for k in 0..CORRELATOR_DIM {
            out[k] = c[k] * self.scaling[self.positions[k]];
        }
        CorrelatorVector(out)
    }

    /// Scale `N^weight` of each correlator coordinate.
    pub(crate) fn coordinate_scale(&self) -> [f64; CORRELATOR_DIM] {
        self.positions.map(|p| self.scaling[p])
    }

    pub(crate) fn positions(&self) -> &[usize; CORRELATOR_DIM] {
        &self.positions
    }

    /// Scaled correlator point satisfying every constraint at `t = 1`.
    pub(crate) fn anchor_direction(&self) -> [f64; CORRELATOR_DIM] {
        let mut out = [0.0; CORRELATOR_DIM];
        for (k, &p) in self.pivots.iter().enumerate() {
            out[p] = self.rhs[k];
        }
        out
    }

    /// Orthogonal projection of a scaled coefficient vector onto the span of the
    /// reduced constraint rows.
    pub(crate) fn project_to_rows(&self, c: &[f64; CORRELATOR_DIM]) -> [f64; CORRELATOR_DIM] {
        let r = self.rows.len();
        if r == 0 {
            return [0.0; CORRELATOR_DIM];
        }
        let e = DMatrix::from_fn(r, CORRELATOR_DIM, |i, j| self.rows[i][j]);
        let g = &e * e.transpose();
        let rhs = &e * DVector::from_column_slice(c);
        let mu = g.lu().solve(&rhs).unwrap_or_else(|| DVector::zeros(r));
        let v = e.transpose() * mu;
        core::array::from_fn(|k| v[k])
    }

    pub fn num_free_correlators(&self) -> usize {
        self.free.len()
    }

    /// Correlators left undetermined by the constraints.
    pub fn free_correlators(&self) -> Vec<Correlator> {
        self.free.iter().map(|&(c, _)| Correlator::ALL[c]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::super::{build_template, condition_template};
    use super::*;
    use crate::functional::LinearFunctional;
    use crate::sdp::{solve, SdpStatus};

    fn template(n: u32) -> MomentTemplate {
        condition_template(&build_template(1, n).unwrap())
    }

    fn fig2() -> Vec<PointConstraint> {
        vec![
            PointConstraint::new(LinearFunctional::coordinate(Correlator::S0), 367.6),
            PointConstraint::new(
                LinearFunctional::from_terms([(Correlator::S00, 1.0), (Correlator::S01, 2.0), (Correlator::S11, 1.0)]),
                -525.4,
            ),
        ]
    }

    #[test]
    fn vertex_point_is_feasible() {
        let t = template(10);
        let v = CorrelatorVector::new(10.0, 10.0, 90.0, 90.0, 90.0);
        let a = assemble_feasibility(&t, &PointConstraint::pin(&v)).unwrap();
        assert_eq!(a.num_free_correlators(), 0);
        let out = solve(&a.problem).unwrap();
        assert_eq!(out.status, SdpStatus::Optimal, "{:?}", out.stats);
        let s = a.correlators(&out.primal);
        for k in 0..5 {
            assert!((s.0[k] - v.0[k]).abs() < 1e-9 * 100.0);
        }
    }

    #[test]
    fn unconstrained_is_feasible() {
        let t = template(10);
        let a = assemble_feasibility(&t, &[]).unwrap();
        assert_eq!(a.num_free_correlators(), 5);
        let out = solve(&a.problem).unwrap();
        assert_eq!(out.status, SdpStatus::Optimal, "{:?}", out.stats);
    }

    #[test]
    fn fig2_point_is_infeasible() {
        let t = template(476);
        let a = assemble_feasibility(&t, &fig2()).unwrap();
        let out = solve(&a.problem).unwrap();
        assert_eq!(out.status, SdpStatus::Infeasible, "{:?}", out.stats);
        assert!(out.infeasibility_margin >= 1e-8);
    }

    #[test]
    fn fig2_lambda_below_one() {
        let t = template(476);
        let a = assemble_lambda_max(&t, &fig2()).unwrap();
        let out = solve(&a.problem).unwrap();
        assert_eq!(out.status, SdpStatus::Optimal, "{:?}", out.stats);
        let lambda = a.lambda(&out.primal).unwrap();
        assert!(lambda < 1.0 - 1e-4, "{lambda}");
        // Relaxed boundary -4 S0 + T + 4N + 1 = 0 along the ray.
        assert!((lambda - 1905.0 / 1995.8).abs() < 1e-5, "{lambda}");
    }

    #[test]
    fn s0_beyond_support_is_infeasible() {
        let t = template(10);
        let c = [PointConstraint::new(LinearFunctional::coordinate(Correlator::S0), 20.0)];
        let out = solve(&assemble_feasibility(&t, &c).unwrap().problem).unwrap();
        assert_eq!(out.status, SdpStatus::Infeasible);
        let a = assemble_lambda_max(&t, &[PointConstraint::new(LinearFunctional::coordinate(Correlator::S0), 1.0)])
            .unwrap();
        let out = solve(&a.problem).unwrap();
        assert_eq!(out.status, SdpStatus::Optimal);
        let lambda = a.lambda(&out.primal).unwrap();
        assert!((lambda - 10.0).abs() < 1e-6, "{lambda}");
    }

    #[test]
    fn contradictory_constraints_rejected() {
        let t = template(10);
        let f = LinearFunctional::coordinate(Correlator::S1);
        let c = [PointConstraint::new(f, 1.0), PointConstraint::new(f, 2.0)];
        assert_eq!(assemble_feasibility(&t, &c), Err(Error::ContradictoryConstraints));
        let ok = [PointConstraint::new(f, 1.0), PointConstraint::new(LinearFunctional(f.0.map(|v| 2.0 * v)), 2.0)];
        assert!(assemble_feasibility(&t, &ok).is_ok());
    }

    #[test]
    fn zero_direction_rejected() {
        let t = template(10);
        let c = [PointConstraint::new(LinearFunctional::coordinate(Correlator::S1), 0.0)];
        assert_eq!(assemble_lambda_max(&t, &c), Err(Error::ZeroDirection));
        assert_eq!(assemble_lambda_max(&t, &[]), Err(Error::NoConstraints));
    }

    #[test]
    fn vertex_direction_reaches_one() {
        let t = template(10);
        let v = CorrelatorVector::new(10.0, 10.0, 90.0, 90.0, 90.0);
        let a = assemble_lambda_max(&t, &PointConstraint::pin(&v)).unwrap();
        let out = solve(&a.problem).unwrap();
        assert_eq!(out.status, SdpStatus::Optimal, "{:?}", out.stats);
        assert!(a.lambda(&out.primal).unwrap() >= 1.0 - 1e-6);
    }
}

