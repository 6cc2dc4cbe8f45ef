//! Verdicts on observed statistics, and boundary rays of the relaxation.

use alloc::vec;
use alloc::vec::Vec;

use crate::bell::BellInequality;
use crate::certificate::{extract_bell_inequality, validate_certificate, CertificateReport};
use crate::error::{Error, Result};
use crate::functional::{LinearFunctional, PointConstraint};
use crate::math;
use crate::moment::{
    assemble_feasibility, assemble_lambda_max, build_template_with, condition_template, MomentTemplate,
    MultiplierMode,
};
use crate::polytope::{project_2d, radial_lp};
use crate::scenario::{Correlator, CorrelatorVector, CORRELATOR_DIM};
use crate::sdp::{solve_with, SdpOutcome, SdpStatus, SolverSettings, SolverStats};

/// Nonlocality needs `lambda_max < 1 - NONLOCAL_MARGIN`.
pub const NONLOCAL_MARGIN: f64 = 1e-6;
/// Relative width at which the fallback bisection stops.
const BISECTION_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Is the constrained point inside the relaxation?
    Feasibility,
    /// How far along the constraint values can one go from the origin?
    #[default]
    Lambda,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Nonlocal,
    /// Consistent with the relaxation at this level (not a proof of locality).
    NoViolation,
    Inconclusive,
}

/// How the reported `lambda_max` was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    LambdaMax,
    Feasibility,
    /// Feasibility bisection on the segment from the equal-counts point to the
    /// query; `lambda_max` is the largest feasible fraction of that segment.
    Bisection,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyOptions {
    pub mu: u32,
    pub mode: Mode,
    pub multipliers: MultiplierMode,
    pub settings: SolverSettings,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions { mu: 1, mode: Mode::Lambda, multipliers: MultiplierMode::Independent, settings: SolverSettings::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certification {
    pub verdict: Verdict,
    pub method: Method,
    pub lambda_max: Option<f64>,
    pub status: SdpStatus,
    /// Inequality read off the dual when the verdict is nonlocal.
    pub inequality: Option<BellInequality>,
    pub certificate: Option<CertificateReport>,
    /// Statistics of the last solve, with iterations summed over all solves.
    pub stats: SolverStats,
    pub solves: usize,
}

/// Builds the conditioned template and certifies.
pub fn certify(parties: u32, constraints: &[PointConstraint], options: &CertifyOptions) -> Result<Certification> {
    let template = condition_template(&build_template_with(options.mu, parties, options.multipliers)?);
    certify_with(&template, constraints, options)
}

struct Tally {
    stats: SolverStats,
    solves: usize,
}

impl Tally {
    fn record(&mut self, out: &SdpOutcome) {
        let iterations = self.stats.iterations + out.stats.iterations;
        self.stats = out.stats.clone();
        self.stats.iterations = iterations;
        self.solves += 1;
    }
}

/// Certifies against a prepared template (its level and multiplier mode win over
/// `options`).
pub fn certify_with(
    template: &MomentTemplate,
    constraints: &[PointConstraint],
    options: &CertifyOptions,
) -> Result<Certification> {
    let mut tally = Tally { stats: SolverStats::default(), solves: 0 };
    if options.mode == Mode::Lambda {
        match assemble_lambda_max(template, constraints) {
            Ok(assembly) => {
                let out = solve_with(&assembly.problem, &options.settings)?;
                tally.record(&out);
                if out.status == SdpStatus::Optimal {
                    let lambda = out.objective;
                    let (verdict, inequality, certificate) = if lambda < 1.0 - NONLOCAL_MARGIN {
                        let ineq = extract_bell_inequality(&out, &assembly, template).ok();
                        let report = ineq.as_ref().map(|i| validate_certificate(i, &out, template));
                        (Verdict::Nonlocal, ineq, report)
                    } else {
                        (Verdict::NoViolation, None, None)
                    };
                    return Ok(Certification {
                        verdict,
                        method: Method::LambdaMax,
                        lambda_max: Some(lambda),
                        status: out.status,
                        inequality,
                        certificate,
                        stats: tally.stats,
                        solves: tally.solves,
                    });
                }
            }
            // Every constraint value zero: the ray has no direction.
            Err(Error::ZeroDirection) => {}
            Err(e) => return Err(e),
        }
        return bisection(template, constraints, options, tally);
    }
    let (out, cert) = feasibility(template, constraints, &options.settings)?;
    tally.record(&out);
    Ok(feasibility_certification(out, cert, Method::Feasibility, None, tally))
}

type Cert = Option<(BellInequality, CertificateReport)>;

fn feasibility(
    template: &MomentTemplate,
    constraints: &[PointConstraint],
    settings: &SolverSettings,
) -> Result<(SdpOutcome, Cert)> {
    let assembly = assemble_feasibility(template, constraints)?;
    let out = solve_with(&assembly.problem, settings)?;
    let cert = if out.status == SdpStatus::Infeasible {
        extract_bell_inequality(&out, &assembly, template).ok().map(|i| {
            let r = validate_certificate(&i, &out, template);
            (i, r)
        })
    } else {
        None
    };
    Ok((out, cert))
}

fn feasibility_certification(
    out: SdpOutcome,
    cert: Cert,
    method: Method,
    lambda_max: Option<f64>,
    tally: Tally,
) -> Certification {
    // Infeasibility only counts with a certificate that survives re-verification.
    let verdict = match out.status {
        SdpStatus::Optimal => Verdict::NoViolation,
        SdpStatus::Infeasible if cert.as_ref().is_some_and(|c| c.1.passed) => Verdict::Nonlocal,
        _ => Verdict::Inconclusive,
    };
    let (inequality, certificate) = match cert {
        Some((i, r)) => (Some(i), Some(r)),
        None => (None, None),
    };
    Certification {
        verdict,
        method,
        lambda_max,
        status: out.status,
        inequality,
        certificate,
        stats: tally.stats,
        solves: tally.solves,
    }
}

/// Fallback when the ray from the origin is unusable: decide the query point by
/// feasibility, then locate the boundary on the segment from the equal-counts
/// point `(0, 0, -N, 0, -N)` to the query.
fn bisection(
    template: &MomentTemplate,
    constraints: &[PointConstraint],
    options: &CertifyOptions,
    mut tally: Tally,
) -> Result<Certification> {
    let n = template.parties() as f64;
    let anchor = CorrelatorVector::new(0.0, 0.0, -n, 0.0, -n);
    let at = |t: f64| -> Vec<PointConstraint> {
        constraints
            .iter()
            .map(|c| {
                let a = c.functional.eval(&anchor);
                PointConstraint::new(c.functional, a + t * (c.value - a))
            })
            .collect()
    };
    let (out, cert) = feasibility(template, constraints, &options.settings)?;
    tally.record(&out);
    let decided = out.status;
    if decided != SdpStatus::Infeasible {
        let lambda = (decided == SdpStatus::Optimal).then_some(1.0);
        return Ok(feasibility_certification(out, cert, Method::Bisection, lambda, tally));
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let (o0, _) = feasibility(template, &at(0.0), &options.settings)?;
    tally.record(&o0);
    if o0.status != SdpStatus::Optimal {
        return Ok(feasibility_certification(out, cert, Method::Bisection, None, tally));
    }
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        let (o, _) = feasibility(template, &at(mid), &options.settings)?;
        tally.record(&o);
        match o.status {
            SdpStatus::Optimal => lo = mid,
            SdpStatus::Infeasible => hi = mid,
            _ => break,
        }
    }
    Ok(feasibility_certification(out, cert, Method::Bisection, Some(lo), tally))
}

/// How a plane of two functionals is swept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PlaneMode {
    /// Only `f1(S), f2(S)` are fixed; the other correlators are free. Radii are
    /// those of the projection of the set onto the plane.
    #[default]
    Projection,
    /// `S = a u1 + b u2`, with `u1`, `u2` the coefficient vectors of `f1`, `f2`:
    /// the intersection of the set with the plane through the origin.
    Section,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub f1: LinearFunctional,
    pub f2: LinearFunctional,
    pub mode: PlaneMode,
}

impl Plane {
    /// `u1 = (1, -1, 0, -1, 1)/2`, `u2 = (0, -1, -1, 1, 0)/sqrt(3)`.
    pub fn fig1(mode: PlaneMode) -> Plane {
        let r3 = math::sqrt(3.0);
        Plane {
            f1: LinearFunctional([0.5, -0.5, 0.0, -0.5, 0.5]),
            f2: LinearFunctional([0.0, -1.0 / r3, -1.0 / r3, 1.0 / r3, 0.0]),
            mode,
        }
    }

    /// `S0` against `S00 + 2 S01 + S11`.
    pub fn fig2() -> Plane {
        Plane {
            f1: LinearFunctional::coordinate(Correlator::S0),
            f2: LinearFunctional::from_terms([(Correlator::S00, 1.0), (Correlator::S01, 2.0), (Correlator::S11, 1.0)]),
            mode: PlaneMode::Projection,
        }
    }

    /// Unit vector of the ray at `theta` in plane coordinates.
    pub fn direction(theta: f64) -> [f64; 2] {
        let (s, c) = math::sin_cos(theta);
        [c, s]
    }

    /// The point `S = a u1 + b u2` (section planes).
    pub fn point(&self, a: f64, b: f64) -> CorrelatorVector {
        CorrelatorVector(core::array::from_fn(|k| a * self.f1.0[k] + b * self.f2.0[k]))
    }

    /// Constraints placing the plane point `(a, b)` (up to the ray scale).
    pub fn constraints(&self, a: f64, b: f64) -> Vec<PointConstraint> {
        match self.mode {
            PlaneMode::Projection => vec![PointConstraint::new(self.f1, a), PointConstraint::new(self.f2, b)],
            PlaneMode::Section => PointConstraint::pin(&self.point(a, b)).to_vec(),
        }
    }

    fn lp_form(&self) -> (Vec<LinearFunctional>, [[f64; CORRELATOR_DIM]; 2]) {
        match self.mode {
            PlaneMode::Projection => {
                let mut e = [[0.0; CORRELATOR_DIM]; 2];
                e[0][0] = 1.0;
                e[1][1] = 1.0;
                (vec![self.f1, self.f2], e)
            }
            PlaneMode::Section => {
                (Correlator::ALL.iter().map(|&c| LinearFunctional::coordinate(c)).collect(), [self.f1.0, self.f2.0])
            }
        }
    }

    /// Polytope radius along each angle: from the projected hull (projection) or
    /// from one radial LP per angle (section). `None` where the origin is not
    /// inside.
    pub fn polytope_radii(&self, parties: u32, thetas: &[f64]) -> Result<Vec<Option<f64>>> {
        match self.mode {
            PlaneMode::Projection => {
                let poly = project_2d(parties, &self.f1, &self.f2)?;
                Ok(thetas.iter().map(|&t| poly.radial(t)).collect())
            }
            PlaneMode::Section => thetas.iter().map(|&t| self.polytope_radius_lp(parties, t)).collect(),
        }
    }

    /// Polytope radius at `theta` by linear programming (either mode).
    pub fn polytope_radius_lp(&self, parties: u32, theta: f64) -> Result<Option<f64>> {
        let [c, s] = Plane::direction(theta);
        let (fs, e) = self.lp_form();
        let dir: Vec<f64> = match self.mode {
            PlaneMode::Projection => vec![c, s],
            PlaneMode::Section => (0..CORRELATOR_DIM).map(|k| c * e[0][k] + s * e[1][k]).collect(),
        };
        radial_lp(&fs, &dir, parties)
    }
}

/// One boundary ray of the relaxation.
#[derive(Debug, Clone, PartialEq)]
pub struct Ray {
    pub theta: f64,
    /// `None` when the solve did not reach a usable optimum; infinite when the
    /// relaxation is unbounded along the ray.
    pub lambda: Option<f64>,
    pub status: SdpStatus,
    pub inequality: Option<BellInequality>,
    pub certificate: Option<CertificateReport>,
    pub iterations: usize,
}

/// Largest `lambda` with the plane point `lambda (cos t, sin t)` in the relaxation.
/// With `certify`, the supporting inequality at the boundary is extracted and
/// re-verified.
pub fn ray(template: &MomentTemplate, plane: &Plane, theta: f64, settings: &SolverSettings, certify: bool) -> Result<Ray> {
    let [c, s] = Plane::direction(theta);
    let assembly = assemble_lambda_max(template, &plane.constraints(c, s))?;
    let out = solve_with(&assembly.problem, settings)?;
    let lambda = match out.status {
        SdpStatus::Optimal => Some(out.objective),
        SdpStatus::Unbounded => Some(f64::INFINITY),
        _ => None,
    };
    let (inequality, certificate) = if certify && out.status == SdpStatus::Optimal {
        match extract_bell_inequality(&out, &assembly, template) {
            Ok(i) => {
                let r = validate_certificate(&i, &out, template);
                (Some(i), Some(r))
            }
            Err(_) => (None, None),
        }
    } else {
        (None, None)
    };
    Ok(Ray { theta, lambda, status: out.status, inequality, certificate, iterations: out.stats.iterations })
}

/// `count` uniform angles in `[0, 2 pi)`.
pub fn ray_angles(count: usize) -> Vec<f64> {
    (0..count).map(|k| 2.0 * core::f64::consts::PI * k as f64 / count as f64).collect()
}
