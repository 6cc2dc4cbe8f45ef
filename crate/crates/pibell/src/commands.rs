//! The subcommands, as functions from parsed inputs to reports.

use std::fmt::Write as _;

use anyhow::{anyhow, bail, Result};
use pibell_core::bell::BellInequality;
use pibell_core::certify::{self, certify_with, CertifyOptions, Plane, PlaneMode, Verdict};
use pibell_core::functional::{LinearFunctional, PointConstraint};
use pibell_core::moment::{
    assemble_feasibility, assemble_lambda_max, build_template, build_template_with, condition_template, MomentTemplate,
    MultiplierMode,
};
use pibell_core::polytope::{
    classical_minimum_range, is_valid_exact, merge_hulls, merge_minima, project_hull_range, rational_alpha,
    ClassicalMinimum, Polygon,
};
use pibell_core::scenario::{chunk_ranges, vertex_count, VERTEX_BUDGET};
use pibell_core::sdp::SolverSettings;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::schema::{self, terms_from_coefficients, CertifyReport, CertifyRequest, ClassicalCheck, Terms, FORMAT_VERSION};

/// Exit code of a decided verdict.
pub const EXIT_DECIDED: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
/// Exit code of "no violation at this level" and "inconclusive".
pub const EXIT_UNDECIDED: i32 = 2;

/// Options shared by every subcommand.
#[derive(Debug)]
pub struct Runtime {
    pub settings: SolverSettings,
    pool: rayon::ThreadPool,
    pub threads: usize,
}

impl Runtime {
    /// `threads = 0` uses the machine's parallelism. `tol` overrides the solver's
    /// residual target (the gap target follows at ten times it).
    pub fn new(threads: usize, tol: Option<f64>) -> Result<Self> {
        let mut settings = SolverSettings::default();
        if let Some(t) = tol {
            if !(t > 0.0 && t < 1e-2) {
                bail!("--tol must lie in (0, 1e-2)");
            }
            settings.feasibility_tol = t;
            settings.gap_tol = 10.0 * t;
        }
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
        let threads = pool.current_num_threads();
        Ok(Runtime { settings, pool, threads })
    }

    fn chunks(&self, parties: u32) -> Vec<std::ops::Range<u32>> {
        chunk_ranges(parties, 4 * self.threads)
    }
}

fn within_budget(parties: u32) -> bool {
    vertex_count(parties) <= VERTEX_BUDGET
}

/// Exact minimum of `alpha . S` over the vertices, split across the pool.
pub fn classical_minimum(rt: &Runtime, ineq: &BellInequality, parties: u32) -> Result<ClassicalMinimum> {
    let alpha = rational_alpha(&ineq.alpha).ok_or_else(|| anyhow!("inequality coefficients must be finite"))?;
    let parts: Vec<Option<ClassicalMinimum>> = rt.pool.install(|| {
        rt.chunks(parties)
            .into_par_iter()
            .map(|r| classical_minimum_range(&alpha, parties, r))
            .collect::<Result<_, _>>()
    })?;
    merge_minima(parts).ok_or_else(|| anyhow!("no vertices"))
}

pub fn certify_request(rt: &Runtime, request: &CertifyRequest) -> Result<(CertifyReport, i32)> {
    let constraints = request.point_constraints()?;
    let template = condition_template(&build_template(request.mu, request.n)?);
    let options = CertifyOptions { mu: request.mu, mode: request.mode.into(), multipliers: MultiplierMode::Independent, settings: rt.settings };
    let c = certify_with(&template, &constraints, &options)?;
    let classical = match (&c.inequality, c.verdict) {
        (Some(i), Verdict::Nonlocal) if within_budget(request.n) => {
            let m = classical_minimum(rt, i, request.n)?;
            Some(ClassicalCheck {
                min: m.to_f64() + i.beta_c,
                valid: m.to_f64() + i.beta_c >= -1e-6,
                argmin: m.argmin.0,
            })
        }
        _ => None,
    };
    let code = if c.verdict == Verdict::Nonlocal { EXIT_DECIDED } else { EXIT_UNDECIDED };
    Ok((CertifyReport::new(&c, classical), code))
}

/// Named plane choices.
#[derive(Debug, Clone, PartialEq)]
pub enum PlaneSpec {
    Fig1,
    Fig2,
    Custom(LinearFunctional, LinearFunctional),
}

impl PlaneSpec {
    pub fn plane(&self, mode: PlaneMode) -> Plane {
        match self {
            PlaneSpec::Fig1 => Plane { mode, ..Plane::fig1(mode) },
            PlaneSpec::Fig2 => Plane { mode, ..Plane::fig2() },
            PlaneSpec::Custom(f1, f2) => Plane { f1: *f1, f2: *f2, mode },
        }
    }
}

/// Parses `S0=1,S00=0.5,...` into a functional.
pub fn parse_functional(s: &str) -> Result<LinearFunctional> {
    let mut terms = Terms::default();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| anyhow!("expected NAME=VALUE, got `{part}`"))?;
        let v: f64 = v.trim().parse().map_err(|_| anyhow!("bad coefficient in `{part}`"))?;
        terms.add(k.trim(), v)?;
    }
    let f = schema::functional_from_terms(&terms)?;
    if f.is_zero() {
        bail!("functional `{s}` is zero");
    }
    Ok(f)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub theta: f64,
    pub lambda_sdp: Option<f64>,
    pub r_hull: Option<f64>,
    pub certificate_passed: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scan {
    pub rows: Vec<ScanRow>,
    pub with_hull: bool,
    pub warnings: Vec<String>,
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_infinite() => "inf".to_owned(),
        Some(x) => format!("{x:.12e}"),
        None => "nan".to_owned(),
    }
}

impl Scan {
    /// CSV with a version comment, `.` decimals and LF endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# format_version={FORMAT_VERSION}").unwrap();
        writeln!(out, "{}", if self.with_hull { "theta,lambda_sdp,r_hull" } else { "theta,lambda_sdp" }).unwrap();
        for r in &self.rows {
            if self.with_hull {
                writeln!(out, "{:.12e},{},{}", r.theta, fmt_opt(r.lambda_sdp), fmt_opt(r.r_hull)).unwrap();
            } else {
                writeln!(out, "{:.12e},{}", r.theta, fmt_opt(r.lambda_sdp)).unwrap();
            }
        }
        out
    }
}

pub fn template(mu: u32, parties: u32) -> Result<MomentTemplate> {
    Ok(condition_template(&build_template_with(mu, parties, MultiplierMode::Independent)?))
}

/// Boundary of the relaxation along `rays` uniform angles, with the polytope's
/// radii when the vertex count is within budget. With `certify_rays`, every
/// ray's supporting inequality is extracted and re-verified.
pub fn scan(rt: &Runtime, parties: u32, mu: u32, plane: &Plane, rays: usize, certify_rays: bool) -> Result<Scan> {
    if rays == 0 {
        bail!("--rays must be positive");
    }
    let t = template(mu, parties)?;
    let thetas = certify::ray_angles(rays);
    let mut warnings = Vec::new();
    let radii: Option<Vec<Option<f64>>> = if within_budget(parties) {
        Some(match plane.mode {
            PlaneMode::Projection => {
                let poly = project(rt, parties, plane)?;
                thetas.iter().map(|&th| poly.radial(th)).collect()
            }
            PlaneMode::Section => rt.pool.install(|| {
                thetas.par_iter().map(|&th| plane.polytope_radius_lp(parties, th)).collect::<Result<Vec<_>, _>>()
            })?,
        })
    } else {
        warnings.push(format!(
            "{} vertices exceed the enumeration budget of {VERTEX_BUDGET}; r_hull omitted",
            vertex_count(parties)
        ));
        None
    };
    if let Some(r) = &radii {
        if r.iter().any(|x| x.is_none()) {
            warnings.push("the origin is not interior to the polytope in this plane; some r_hull are nan".into());
        }
    }
    let results: Vec<certify::Ray> = rt.pool.install(|| {
        thetas.par_iter().map(|&th| certify::ray(&t, plane, th, &rt.settings, certify_rays)).collect::<Result<Vec<_>, _>>()
    })?;
    let failed = results.iter().filter(|r| r.lambda.is_none()).count();
    if failed > 0 {
        warnings.push(format!("{failed} rays did not converge; lambda_sdp is nan there"));
    }
    let rows = results
        .into_iter()
        .enumerate()
        .map(|(k, r)| ScanRow {
            theta: r.theta,
            lambda_sdp: r.lambda,
            r_hull: radii.as_ref().and_then(|v| v[k]),
            certificate_passed: r.certificate.map(|c| c.passed),
        })
        .collect();
    Ok(Scan { rows, with_hull: radii.is_some(), warnings })
}

/// Projection of the polytope onto the plane's functionals, split across the pool.
pub fn project(rt: &Runtime, parties: u32, plane: &Plane) -> Result<Polygon> {
    let parts: Vec<Vec<[f64; 2]>> = rt.pool.install(|| {
        rt.chunks(parties)
            .into_par_iter()
            .map(|r| project_hull_range(parties, &plane.f1, &plane.f2, r))
            .collect::<Result<_, _>>()
    })?;
    Ok(merge_hulls(parts))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullReport {
    pub format_version: u32,
    #[serde(rename = "N")]
    pub n: u32,
    pub f1: Terms,
    pub f2: Terms,
    /// Counter-clockwise, as `[f1, f2]` pairs.
    pub vertices: Vec<[f64; 2]>,
    pub area: f64,
}

pub fn hull(rt: &Runtime, parties: u32, plane: &Plane) -> Result<HullReport> {
    let poly = project(rt, parties, plane)?;
    Ok(HullReport {
        format_version: FORMAT_VERSION,
        n: parties,
        f1: terms_from_coefficients(&plane.f1.0),
        f2: terms_from_coefficients(&plane.f2.0),
        area: poly.area(),
        vertices: poly.vertices,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub format_version: u32,
    #[serde(rename = "N")]
    pub n: u32,
    /// Minimum of `alpha . S + betaC` over the vertices.
    pub min: f64,
    /// The same minimum as an exact fraction of the decimal inputs.
    pub min_exact: String,
    /// The minimum is exactly zero.
    pub tight: bool,
    /// The minimum is non-negative (up to `1e-6` when inexact).
    pub valid: bool,
    pub argmin: [u32; 4],
}

pub fn bound(rt: &Runtime, parties: u32, ineq: &BellInequality) -> Result<BoundReport> {
    let m = classical_minimum(rt, ineq, parties)?;
    let beta = pibell_core::polytope::decimal_rational(ineq.beta_c).ok_or_else(|| anyhow!("betaC must be finite"))?;
    let exact = &m.value + beta;
    let min = m.to_f64() + ineq.beta_c;
    Ok(BoundReport {
        format_version: FORMAT_VERSION,
        n: parties,
        min,
        min_exact: exact.to_string(),
        tight: num_traits::Zero::is_zero(&exact),
        valid: is_valid_exact(&m, ineq.beta_c) || min >= -1e-6,
        argmin: m.argmin.0,
    })
}

/// The conditioned problem a certify request would solve, as SDPA text. With no
/// constraints the whole template is exported with every moment free.
pub fn export(parties: u32, mu: u32, mode: schema::ModeSpec, constraints: &[PointConstraint]) -> Result<String> {
    let t = template(mu, parties)?;
    let assembly = match mode {
        schema::ModeSpec::Lambda if !constraints.is_empty() => assemble_lambda_max(&t, constraints)?,
        _ => assemble_feasibility(&t, constraints)?,
    };
    Ok(crate::sdpa::export_standard(&assembly.problem))
}
