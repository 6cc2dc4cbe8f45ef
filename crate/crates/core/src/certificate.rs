//! Bell inequalities read off the dual of a moment problem, and their exact
//! re-verification as `sum_i g_i sigma_i mod I`.
//!
//! For dual blocks `Z_i >= 0`, `l(y) = sum_i <Z_i, Gamma_i(y)>` is linear in the
//! moments and non-negative wherever the moment matrix is PSD. Dual feasibility
//! makes its coefficients vanish on every moment except `1` and the correlators, so
//! `l` is a Bell inequality valid on the relaxation and hence on the polytope.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_traits::{ToPrimitive, Zero};

use crate::bell::BellInequality;
use crate::error::{Error, Result};
use crate::moment::{Assembly, MomentTemplate, ProblemKind};
use crate::ring::{Polynomial, Rational};
use crate::scenario::{Correlator, CORRELATOR_DIM};
use crate::sdp::{SdpOutcome, SdpStatus};

/// Relative residual below which a certificate passes.
pub const CERTIFICATE_TOL: f64 = 1e-6;

/// Extracts the inequality certified by a solved problem.
///
/// After a λ-max solve (status Optimal) the inequality is normalized so that its
/// expression equals `-1` on the constraint direction and it is tight at the
/// boundary point `lambda* x direction`; `beta_C = lambda*`. After an infeasible
/// feasibility solve it is scaled to unit weighted norm and is violated at the
/// queried point.
pub fn extract_bell_inequality(
    outcome: &SdpOutcome,
    assembly: &Assembly,
    template: &MomentTemplate,
) -> Result<BellInequality> {
    let usable = match assembly.kind {
        ProblemKind::LambdaMax => outcome.status == SdpStatus::Optimal,
        ProblemKind::Feasibility => outcome.status == SdpStatus::Infeasible,
    };
    if !usable || outcome.dual.len() != template.blocks().len() {
        return Err(Error::MissingDuals);
    }
    let cols = template.columns();
    let positions = assembly.positions();
    let scale = assembly.coordinate_scale();
    let chat: [f64; CORRELATOR_DIM] = core::array::from_fn(|k| cols[positions[k]].dot(&outcome.dual));
    let alpha_hat = assembly.project_to_rows(&chat);
    let d = assembly.anchor_direction();
    let along: f64 = alpha_hat.iter().zip(&d).map(|(a, b)| a * b).sum();

    let (alpha_hat, beta) = match assembly.kind {
        ProblemKind::LambdaMax => {
            if !(along < 0.0) {
                return Err(Error::MissingDuals);
            }
            (alpha_hat.map(|a| -a / along), outcome.objective)
        }
        ProblemKind::Feasibility => (alpha_hat, cols[0].dot(&outcome.dual)),
    };
    let alpha: [f64; CORRELATOR_DIM] = core::array::from_fn(|k| alpha_hat[k] / scale[k]);
    let ineq = BellInequality::new(alpha, beta);
    Ok(match assembly.kind {
        ProblemKind::LambdaMax => ineq,
        ProblemKind::Feasibility => {
            let norm = beta.abs() + alpha_hat.iter().map(|a| a.abs()).sum::<f64>();
            if norm > 0.0 {
                ineq.scaled(1.0 / norm)
            } else {
                ineq
            }
        }
    })
}

/// Outcome of re-verifying an inequality against the dual blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    /// `sum_i g_i b^T Z_i b mod I` in raw correlator units, coefficients exact from
    /// the floating-point dual entries.
    pub recomposed: Polynomial,
    /// Factor best matching the recomposition to the inequality.
    pub scale: f64,
    /// Largest coefficient deviation, each weighted by its monomial's magnitude
    /// `N^weight`, relative to the inequality's weighted size.
    pub residual: f64,
    /// Smallest eigenvalue over the dual blocks relative to the largest.
    pub min_eigenvalue: f64,
    pub passed: bool,
}

/// Recomposes the certificate from the dual blocks and compares it with `ineq`.
pub fn validate_certificate(
    ineq: &BellInequality,
    outcome: &SdpOutcome,
    template: &MomentTemplate,
) -> CertificateReport {
    validate_dual(ineq, &outcome.dual, template)
}

/// [`validate_certificate`] for explicit dual blocks in the template's scaling.
pub fn validate_dual(ineq: &BellInequality, dual: &[DMatrix<f64>], template: &MomentTemplate) -> CertificateReport {
    let n = template.parties() as f64;
    let y_index = template.y_index();
    let mut recomposed = Polynomial::zero();
    let two = Rational::from_integer(2.into());
    let ok_shape = dual.len() == template.blocks().len()
        && dual.iter().zip(template.blocks()).all(|(z, b)| z.nrows() == b.size() && z.ncols() == b.size());
    if ok_shape {
        // Unconditioned dual entries, exactly.
        let zraw: Vec<Vec<Rational>> = dual
            .iter()
            .enumerate()
            .map(|(bi, z)| {
                let k = z.nrows();
                let mut v = Vec::with_capacity(k * k);
                for a in 0..k {
                    for b in 0..k {
                        let x = Rational::from_float(z[(a, b)]).unwrap_or_else(Rational::zero);
                        v.push(x * template.congruence_factor(bi, a, b));
                    }
                }
                v
            })
            .collect();
        for (j, m) in y_index.iter().enumerate() {
            let mut c = Rational::zero();
            for (b, r, col, x) in template.exact_column(j) {
                let k = template.blocks()[*b].size();
                let mut t = x * &zraw[*b][r * k + col];
                if r != col {
                    t *= &two;
                }
                c += t;
            }
            recomposed.add_term(*m, c);
        }
    }

    let weight = |j: usize| crate::math::powi(n, y_index[j].weight() as i32);
    let target = |j: usize| -> f64 {
        let m = &y_index[j];
        if m.is_one() {
            ineq.beta_c
        } else if let Some(c) = m.as_var() {
            ineq.alpha[c.index()]
        } else {
            0.0
        }
    };
    let coef: Vec<f64> = y_index.iter().map(|m| recomposed.coefficient(m).to_f64().unwrap_or(f64::NAN)).collect();
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..y_index.len() {
        if y_index[j].degree() <= 1 {
            let w = weight(j);
            num += coef[j] * target(j) * w * w;
            den += coef[j] * coef[j] * w * w;
        }
    }
    let scale = if den > 0.0 { num / den } else { 0.0 };
    let size = ineq.beta_c.abs()
        + Correlator::ALL.iter().map(|&c| ineq.alpha[c.index()].abs() * weight(template.coordinate(c))).sum::<f64>();
    let mut residual: f64 = 0.0;
    for j in 0..y_index.len() {
        let r = (scale * coef[j] - target(j)).abs() * weight(j);
        residual = residual.max(if r.is_nan() { f64::INFINITY } else { r });
    }
    if size > 0.0 {
        residual /= size;
    } else if residual > 0.0 {
        residual = f64::INFINITY;
    }

    let mut min_eigenvalue: f64 = 0.0;
    let mut max_eigenvalue: f64 = 0.0;
    for z in dual {
        let e = z.clone().symmetric_eigenvalues();
        for &v in e.iter() {
            min_eigenvalue = min_eigenvalue.min(v);
            max_eigenvalue = max_eigenvalue.max(v);
        }
    }
    let min_rel = if max_eigenvalue > 0.0 { min_eigenvalue / max_eigenvalue } else { min_eigenvalue };
    let passed = ok_shape && residual <= CERTIFICATE_TOL && min_rel >= -CERTIFICATE_TOL && scale > 0.0;
    CertificateReport { recomposed, scale, residual, min_eigenvalue: min_rel, passed }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::{LinearFunctional, PointConstraint};
    use crate::moment::{assemble_feasibility, assemble_lambda_max, build_template, condition_template};
    use crate::scenario::CorrelatorVector;
    use crate::sdp::solve;

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
    fn trivial_certificate() {
        let t = condition_template(&build_template(1, 10).unwrap());
        let mut dual: Vec<DMatrix<f64>> = t.block_sizes().iter().map(|&k| DMatrix::zeros(k, k)).collect();
        dual[0][(0, 0)] = 1.0;
        let r = validate_dual(&BellInequality::new([0.0; 5], 1.0), &dual, &t);
        assert!(r.passed);
        assert_eq!(r.residual, 0.0);
        assert_eq!(r.recomposed, Polynomial::from_int(1));
    }

    #[test]
    fn fig2_certificate() {
        let t = condition_template(&build_template(1, 476).unwrap());
        let a = assemble_lambda_max(&t, &fig2()).unwrap();
        let out = solve(&a.problem).unwrap();
        let ineq = extract_bell_inequality(&out, &a, &t).unwrap();
        // Normalized to -1 along the direction and tight at lambda*.
        let dir = LinearFunctional(ineq.alpha).eval(&CorrelatorVector::new(367.6, 0.0, -525.4 / 4.0, -525.4 / 4.0, -525.4 / 4.0));
        assert!((dir + 1.0).abs() < 1e-9, "{dir}");
        // Support lies in span{S0, S00 + 2 S01 + S11}.
        assert!(ineq.alpha[1].abs() < 1e-9);
        assert!((ineq.alpha[3] - 2.0 * ineq.alpha[2]).abs() < 1e-9 * ineq.alpha[2].abs().max(1e-6));
        let report = validate_certificate(&ineq, &out, &t);
        assert!(report.passed, "{:?}", (report.residual, report.min_eigenvalue, report.scale));

        let mut broken = out.clone();
        let k = broken.dual[2].nrows() - 1;
        broken.dual[2][(k, k)] += 1e-2;
        assert!(!validate_certificate(&ineq, &broken, &t).passed);
    }

    #[test]
    fn infeasible_point_certificate() {
        let t = condition_template(&build_template(1, 476).unwrap());
        let a = assemble_feasibility(&t, &fig2()).unwrap();
        let out = solve(&a.problem).unwrap();
        assert_eq!(out.status, SdpStatus::Infeasible);
        let ineq = extract_bell_inequality(&out, &a, &t).unwrap();
        let report = validate_certificate(&ineq, &out, &t);
        assert!(report.passed, "{:?}", (report.residual, report.min_eigenvalue));
        // Violated on the constraint set: alpha is in the constraint span, so evaluate
        // at any point meeting both constraints.
        let p = CorrelatorVector::new(367.6, 0.0, -525.4, 0.0, 0.0);
        assert!(ineq.evaluate(&p) < 0.0);
    }
}
