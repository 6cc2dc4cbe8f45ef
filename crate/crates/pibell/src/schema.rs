//! JSON request and report formats. Correlators are always keyed by name
//! (`S0`, `S1`, `S00`, `S01`, `S11`), never by position.

use anyhow::{bail, Result};
use pibell_core::bell::BellInequality;
use pibell_core::certificate::CertificateReport;
use pibell_core::certify::{Certification, Method, Mode, Verdict};
use pibell_core::functional::{LinearFunctional, PointConstraint};
use pibell_core::scenario::{Correlator, CORRELATOR_DIM};
use pibell_core::sdp::SdpStatus;
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: u32 = 1;

/// Coefficients keyed by correlator name; absent names are zero.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Terms {
    #[serde(rename = "S0", default)]
    pub s0: f64,
    #[serde(rename = "S1", default)]
    pub s1: f64,
    #[serde(rename = "S00", default)]
    pub s00: f64,
    #[serde(rename = "S01", default)]
    pub s01: f64,
    #[serde(rename = "S11", default)]
    pub s11: f64,
}

impl Terms {
    pub fn coefficients(&self) -> [f64; CORRELATOR_DIM] {
        [self.s0, self.s1, self.s00, self.s01, self.s11]
    }

    /// Adds `value` to the coefficient named `name`.
    pub fn add(&mut self, name: &str, value: f64) -> Result<()> {
        let Some(c) = Correlator::from_name(name) else {
            bail!("unknown correlator `{name}` (expected S0, S1, S00, S01 or S11)");
        };
        let slot = match c {
            Correlator::S0 => &mut self.s0,
            Correlator::S1 => &mut self.s1,
            Correlator::S00 => &mut self.s00,
            Correlator::S01 => &mut self.s01,
            Correlator::S11 => &mut self.s11,
        };
        *slot += value;
        Ok(())
    }
}

pub fn functional_from_terms(terms: &Terms) -> Result<LinearFunctional> {
    let f = terms.coefficients();
    if f.iter().any(|v| !v.is_finite()) {
        bail!("coefficients must be finite");
    }
    Ok(LinearFunctional(f))
}

pub fn terms_from_coefficients(a: &[f64; CORRELATOR_DIM]) -> Terms {
    let [s0, s1, s00, s01, s11] = *a;
    Terms { s0, s1, s00, s01, s11 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSpec {
    pub coefficients: Terms,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ModeSpec {
    Feasibility,
    #[default]
    Lambda,
}

impl From<ModeSpec> for Mode {
    fn from(m: ModeSpec) -> Mode {
        match m {
            ModeSpec::Feasibility => Mode::Feasibility,
            ModeSpec::Lambda => Mode::Lambda,
        }
    }
}

fn default_mu() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyRequest {
    #[serde(default)]
    pub format_version: Option<u32>,
    #[serde(rename = "N")]
    pub n: u32,
    #[serde(default = "default_mu")]
    pub mu: u32,
    pub constraints: Vec<ConstraintSpec>,
    #[serde(default)]
    pub mode: ModeSpec,
}

impl CertifyRequest {
    pub fn parse(text: &str) -> Result<Self> {
        let r: CertifyRequest = serde_json::from_str(text)?;
        if let Some(v) = r.format_version {
            if v != FORMAT_VERSION {
                bail!("unsupported format_version {v} (this build reads {FORMAT_VERSION})");
            }
        }
        if r.constraints.is_empty() {
            bail!("at least one constraint is required");
        }
        Ok(r)
    }

    pub fn point_constraints(&self) -> Result<Vec<PointConstraint>> {
        self.constraints
            .iter()
            .map(|c| {
                if !c.value.is_finite() {
                    bail!("constraint value is not finite");
                }
                let f = functional_from_terms(&c.coefficients)?;
                if f.is_zero() {
                    bail!("constraint with all coefficients zero");
                }
                Ok(PointConstraint::new(f, c.value))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalitySpec {
    pub alpha: Terms,
    #[serde(rename = "betaC", default)]
    pub beta_c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<String>,
}

impl InequalitySpec {
    pub fn from_inequality(i: &BellInequality, normalization: Option<String>) -> Self {
        InequalitySpec { alpha: terms_from_coefficients(&i.alpha), beta_c: i.beta_c, normalization }
    }

    pub fn to_inequality(&self) -> Result<BellInequality> {
        if !self.beta_c.is_finite() {
            bail!("betaC is not finite");
        }
        Ok(BellInequality::new(functional_from_terms(&self.alpha)?.0, self.beta_c))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateSpec {
    pub passed: bool,
    pub residual: f64,
    pub min_eigenvalue: f64,
    pub scale: f64,
}

impl From<&CertificateReport> for CertificateSpec {
    fn from(r: &CertificateReport) -> Self {
        CertificateSpec { passed: r.passed, residual: r.residual, min_eigenvalue: r.min_eigenvalue, scale: r.scale }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalCheck {
    /// Minimum of `alpha . S + betaC` over all vertices.
    pub min: f64,
    pub valid: bool,
    pub argmin: [u32; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSpec {
    pub status: String,
    pub solves: usize,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyReport {
    pub format_version: u32,
    pub verdict: String,
    pub method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inequality: Option<InequalitySpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classical_check: Option<ClassicalCheck>,
    pub solver: SolverSpec,
}

pub fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Nonlocal => "nonlocal",
        Verdict::NoViolation => "no-violation-at-this-level",
        Verdict::Inconclusive => "inconclusive",
    }
}

pub fn status_name(s: SdpStatus) -> &'static str {
    match s {
        SdpStatus::Optimal => "optimal",
        SdpStatus::Infeasible => "infeasible",
        SdpStatus::Unbounded => "unbounded",
        SdpStatus::NumericalFailure => "numerical-failure",
    }
}

impl CertifyReport {
    pub fn new(c: &Certification, classical_check: Option<ClassicalCheck>) -> Self {
        let method = match c.method {
            Method::LambdaMax => "lambda-max",
            Method::Feasibility => "feasibility",
            Method::Bisection => "bisection",
        };
        let note = match c.method {
            Method::LambdaMax => "expression equals -1 along the constraint values; zero at lambda_max times them",
            _ => "unit sum of |betaC| and |alpha| weighted by N^order; negative at the query",
        };
        CertifyReport {
            format_version: FORMAT_VERSION,
            verdict: verdict_name(c.verdict).to_owned(),
            method: method.to_owned(),
            lambda_max: c.lambda_max,
            inequality: c.inequality.as_ref().map(|i| InequalitySpec::from_inequality(i, Some(note.to_owned()))),
            certificate: c.certificate.as_ref().map(CertificateSpec::from),
            classical_check,
            solver: SolverSpec {
                status: status_name(c.status).to_owned(),
                solves: c.solves,
                iterations: c.stats.iterations,
                primal_residual: c.stats.primal_residual,
                dual_residual: c.stats.dual_residual,
                gap: c.stats.gap,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_named_constraints() {
        let r = CertifyRequest::parse(
            r#"{"N": 476, "mu": 1, "mode": "lambda",
                "constraints": [{"coefficients": {"S0": 1}, "value": 367.6},
                                {"coefficients": {"S00": 1, "S01": 2, "S11": 1}, "value": -525.4}]}"#,
        )
        .unwrap();
        let c = r.point_constraints().unwrap();
        assert_eq!(c[1].functional.0, [0.0, 0.0, 1.0, 2.0, 1.0]);
        assert_eq!(c[0].value, 367.6);
    }

    #[test]
    fn rejects_bad_requests() {
        assert!(CertifyRequest::parse(r#"{"N": 10, "constraints": []}"#).is_err());
        assert!(CertifyRequest::parse(r#"{"N": 10, "constraints": [{"coefficients": {"S2": 1}, "value": 1}]}"#).is_err());
        assert!(CertifyRequest::parse(r#"{"N": 10, "format_version": 7, "constraints": [{"coefficients": {"S0": 1}, "value": 1}]}"#).is_err());
        assert!(CertifyRequest::parse("{").is_err());
    }

    #[test]
    fn inequality_round_trip() {
        let i = BellInequality::new([-2.0, 0.0, 0.5, 1.0, 0.5], 952.0);
        let s = serde_json::to_string(&InequalitySpec::from_inequality(&i, None)).unwrap();
        assert!(s.contains("\"betaC\":952.0") && s.contains("\"S01\":1.0"));
        let back: InequalitySpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back.to_inequality().unwrap(), i);
    }
}
