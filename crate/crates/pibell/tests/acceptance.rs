//! End-to-end acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::time::Instant;

use num_bigint::BigInt;
use pibell::commands::{self, Runtime};
use pibell::schema::{CertifyRequest, ConstraintSpec, ModeSpec, Terms};
use pibell_core::bell::BellInequality;
use pibell_core::certify::{self, certify_with, CertifyOptions, Mode, Plane, PlaneMode, Verdict};
use pibell_core::functional::PointConstraint;
use pibell_core::polytope::{membership, relaxed_surface_point};
use pibell_core::ring::{constraint_polynomials, Monomial, Polynomial, QuotientRing, Rational};
use pibell_core::scenario::{enumerate_vertices, CorrelatorVector, StrategyCounts, CORRELATOR_DIM};
use pibell_core::sdp::SolverSettings;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct Gate {
    results: Vec<(usize, bool)>,
}

impl Gate {
    fn report(&mut self, id: usize, ok: bool, detail: String) {
        println!("{} criterion {id}: {detail}", if ok { "PASS" } else { "FAIL" });
        self.results.push((id, ok));
    }
}

fn fig2_request() -> CertifyRequest {
    CertifyRequest {
        format_version: Some(1),
        n: 476,
        mu: 1,
        constraints: vec![
            ConstraintSpec { coefficients: Terms { s0: 1.0, ..Terms::default() }, value: 367.6 },
            ConstraintSpec { coefficients: Terms { s00: 1.0, s01: 2.0, s11: 1.0, ..Terms::default() }, value: -525.4 },
        ],
        mode: ModeSpec::Lambda,
    }
}

fn tight_fig2(n: u32) -> BellInequality {
    BellInequality::new([-2.0, 0.0, 0.5, 1.0, 0.5], 2.0 * n as f64)
}

fn options(mode: Mode, mu: u32) -> CertifyOptions {
    CertifyOptions { mu, mode, ..CertifyOptions::default() }
}

/// Random convex combination of 1 to 6 vertices.
fn random_mixture(rng: &mut ChaCha8Rng, vertices: &[CorrelatorVector]) -> CorrelatorVector {
    let k = rng.random_range(1..=6);
    let mut w: Vec<f64> = (0..k).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    let mut p = [0.0; CORRELATOR_DIM];
    for wi in w {
        let v = vertices[rng.random_range(0..vertices.len())];
        for c in 0..CORRELATOR_DIM {
            p[c] += wi * v.0[c];
        }
    }
    CorrelatorVector(p)
}

fn criteria_1_2_9(gate: &mut Gate, rt: &Runtime, certificates: &mut Vec<bool>) {
    let start = Instant::now();
    let (report, code) = commands::certify_request(rt, &fig2_request()).expect("certify");
    let elapsed = start.elapsed().as_secs_f64();
    let lambda = report.lambda_max.unwrap_or(f64::NAN);
    gate.report(
        1,
        report.verdict == "nonlocal" && code == 0 && lambda < 1.0 - 1e-4 && elapsed < 10.0,
        format!("Fig. 2 verdict {} (exit {code}), lambda_max = {lambda:.9}, {elapsed:.2} s", report.verdict),
    );
    certificates.push(report.certificate.as_ref().is_some_and(|c| c.passed));

    // Line alpha0 S0 + alphaT T + beta = 0 in the plane T = S00 + 2 S01 + S11.
    let ok2 = match &report.inequality {
        Some(i) => {
            let a = i.alpha;
            let in_plane = a.s1.abs() <= 1e-9 * a.s00.abs()
                && (a.s01 - 2.0 * a.s00).abs() <= 1e-9 * a.s00.abs()
                && (a.s11 - a.s00).abs() <= 1e-9 * a.s00.abs();
            let (slope, offset) = (a.s0 / a.s00, i.beta_c / a.s00);
            // Tight line: -4 S0 + T + 4N = 0; compare along T.
            let distance = offset - 4.0 * 476.0;
            let angle = ((slope * 1.0 - (-4.0) * 1.0) / ((slope * slope + 1.0).sqrt() * 17f64.sqrt())).abs().asin();
            let pass = in_plane && (distance - 1.000002).abs() <= 1e-2 && angle <= 1e-3;
            (pass, format!("separation along S00+2S01+S11 = {distance:.6}, normal angle = {angle:.2e} rad"))
        }
        None => (false, "no inequality extracted".to_owned()),
    };
    gate.report(2, ok2.0, ok2.1);
}

fn criterion_3(gate: &mut Gate, rt: &Runtime) {
    let mut ok = true;
    let mut detail = Vec::new();
    for n in [5u32, 10, 476] {
        let start = Instant::now();
        let b = commands::bound(rt, n, &tight_fig2(n)).expect("bound");
        let t = start.elapsed().as_secs_f64();
        ok &= b.tight && b.min_exact == "0" && (n != 476 || t < 60.0);
        detail.push(format!("N={n}: min {} tight {} ({t:.2} s)", b.min_exact, b.tight));
    }
    gate.report(3, ok, detail.join("; "));
}

fn criterion_4(gate: &mut Gate, rt: &Runtime, certificates: &mut Vec<bool>) {
    let plane = Plane::fig1(PlaneMode::Projection);
    let scan = commands::scan(rt, 10, 1, &plane, 360, true).expect("scan");
    let mut worst = f64::INFINITY;
    let mut max_gap: f64 = 0.0;
    let mut complete = scan.with_hull;
    for r in &scan.rows {
        match (r.lambda_sdp, r.r_hull) {
            (Some(l), Some(h)) => {
                worst = worst.min(l - h);
                max_gap = max_gap.max(l - h);
            }
            _ => complete = false,
        }
        certificates.push(r.certificate_passed == Some(true));
    }
    gate.report(
        4,
        complete && worst >= -1e-6 && max_gap > 1e-6,
        format!("360 rays, min(lambda_sdp - r_hull) = {worst:.3e}, max gap = {max_gap:.4}"),
    );
}

fn criterion_5(gate: &mut Gate) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut points = Vec::new();
    for n in [4u32, 10, 25, 50] {
        let vs: Vec<CorrelatorVector> = enumerate_vertices(n).unwrap().iter().map(|(_, s)| s.to_real()).collect();
        for _ in 0..250 {
            points.push((n, random_mixture(&mut rng, &vs)));
        }
    }
    let templates: Vec<_> = [4u32, 10, 25, 50].iter().map(|&n| (n, commands::template(1, n).unwrap())).collect();
    let bad: usize = points
        .par_iter()
        .map(|(n, p)| {
            let t = &templates.iter().find(|(m, _)| m == n).unwrap().1;
            let pin = PointConstraint::pin(p);
            let feas = certify_with(t, &pin, &options(Mode::Feasibility, 1)).unwrap();
            let lam = certify_with(t, &pin, &options(Mode::Lambda, 1)).unwrap();
            let lam_ok = lam.lambda_max.is_none_or(|l| l >= 1.0 - 1e-6);
            usize::from(feas.verdict == Verdict::Nonlocal || lam.verdict == Verdict::Nonlocal || !lam_ok)
        })
        .sum();
    gate.report(5, bad == 0, format!("{} vertex mixtures over N in {{4, 10, 25, 50}}, {bad} certified nonlocal", points.len()));
}

fn criterion_6(gate: &mut Gate) {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut cases = Vec::new();
    for n in [10u32, 476] {
        for _ in 0..250 {
            let mut x: [f64; 4] = std::array::from_fn(|_| -rng.random::<f64>().max(1e-300).ln());
            let total: f64 = x.iter().sum();
            x.iter_mut().for_each(|v| *v *= n as f64 / total);
            cases.push((n, x));
        }
    }
    let templates: Vec<_> = [10u32, 476].iter().map(|&n| (n, commands::template(1, n).unwrap())).collect();
    let results: Vec<(bool, bool)> = cases
        .par_iter()
        .map(|(n, x)| {
            let t = &templates.iter().find(|(m, _)| m == n).unwrap().1;
            let p = relaxed_surface_point(&StrategyCounts::new(*x, *n).unwrap(), *n).unwrap();
            let c = certify_with(t, &PointConstraint::pin(&p), &options(Mode::Feasibility, 1)).unwrap();
            (c.verdict == Verdict::NoViolation, c.verdict == Verdict::Nonlocal)
        })
        .collect();
    let feasible = results.iter().filter(|r| r.0).count();
    let rejected = results.iter().filter(|r| r.1).count();
    gate.report(
        6,
        feasible == cases.len(),
        format!("{} variety points: {feasible} feasible, {rejected} certified infeasible", cases.len()),
    );
}

fn criterion_7(gate: &mut Gate) {
    let plane = Plane::fig1(PlaneMode::Projection);
    let t1 = commands::template(1, 10).unwrap();
    let t2 = commands::template(2, 10).unwrap();
    let settings = SolverSettings::default();
    let pairs: Vec<(Option<f64>, Option<f64>)> = certify::ray_angles(36)
        .par_iter()
        .map(|&th| {
            let a = certify::ray(&t1, &plane, th, &settings, false).unwrap().lambda;
            let b = certify::ray(&t2, &plane, th, &settings, false).unwrap().lambda;
            (a, b)
        })
        .collect();
    let mut max_diff: f64 = 0.0;
    let mut max_excess = f64::NEG_INFINITY;
    let mut complete = true;
    for (a, b) in &pairs {
        match (a, b) {
            (Some(a), Some(b)) => {
                max_diff = max_diff.max((a - b).abs());
                max_excess = max_excess.max(b - a);
            }
            _ => complete = false,
        }
    }
    gate.report(
        7,
        complete && max_diff <= 1e-4 && max_excess <= 1e-6,
        format!("36 rays, max |lambda2 - lambda1| = {max_diff:.3e}, max (lambda2 - lambda1) = {max_excess:.3e}"),
    );
}

fn criterion_8(gate: &mut Gate) {
    const N: u32 = 7;
    let ring = QuotientRing::correlator_variety(N).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let rat = |n: i64, d: i64| Rational::new(BigInt::from(n), BigInt::from(d));
    let correlators = |x: &[Rational; 4]| -> [Rational; CORRELATOR_DIM] {
        let n = &x[0] + &x[1] + &x[2] + &x[3];
        let s1 = &x[0] + &x[1] - &x[2] - &x[3];
        let s0 = &x[0] - &x[1] + &x[2] - &x[3];
        let z = &x[0] - &x[1] - &x[2] + &x[3];
        [s0.clone(), s1.clone(), &s0 * &s0 - &n, &s0 * &s1 - z, &s1 * &s1 - &n]
    };
    let probe = correlators(&[rat(3, 2), rat(2, 1), rat(5, 2), rat(1, 1)]);
    let mut failures = 0;
    for _ in 0..1000 {
        let mut p = Polynomial::zero();
        for _ in 0..rng.random_range(1..8) {
            let mut e = [0u16; CORRELATOR_DIM];
            for _ in 0..rng.random_range(0..=6) {
                e[rng.random_range(0..CORRELATOR_DIM)] += 1;
            }
            p.add_term(Monomial(e), Rational::from_integer(rng.random_range(-9i64..=9).into()));
        }
        let r = ring.reduce(&p);
        let mut q = p.clone();
        loop {
            let sites = ring.reducible_sites(&q);
            if sites.is_empty() {
                break;
            }
            let pick = rng.random_range(0..sites.len());
            q = ring.rewrite_at(&q, &sites[pick].0, sites[pick].1);
        }
        let ok = ring.is_normal(&r) && ring.reduce(&r) == r && q == r && p.eval_exact(&probe) == r.eval_exact(&probe);
        failures += usize::from(!ok);
    }
    let g = constraint_polynomials(N).unwrap();
    let mut g_failures = 0;
    for _ in 0..200 {
        let x1 = rat(rng.random_range(-40..=40), rng.random_range(1..=12));
        let x2 = rat(rng.random_range(-40..=40), rng.random_range(1..=12));
        let x3 = rat(rng.random_range(-40..=40), rng.random_range(1..=12));
        let x4 = Rational::from_integer(BigInt::from(N)) - &x1 - &x2 - &x3;
        let x = [x1, x2, x3, x4];
        let s = correlators(&x);
        g_failures += usize::from((0..4).any(|i| g[i].eval_exact(&s) != x[i]));
    }
    gate.report(
        8,
        failures == 0 && g_failures == 0,
        format!("1000 reductions: {failures} failures; 200 rational points for g_i(S(x)) = x_i: {g_failures} failures"),
    );
}

fn criterion_10(gate: &mut Gate) {
    const N: u32 = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let vs: Vec<CorrelatorVector> = enumerate_vertices(N).unwrap().iter().map(|(_, s)| s.to_real()).collect();
    // Mixtures pushed outwards or inwards from the barycenter, so that both
    // labels occur, some near the boundary.
    let bary = pibell_core::scenario::vertex_barycenter(N);
    let points: Vec<CorrelatorVector> = (0..200)
        .map(|_| {
            let m = random_mixture(&mut rng, &vs);
            let s = rng.random_range(0.7..1.6);
            CorrelatorVector(std::array::from_fn(|c| bary.0[c] + s * (m.0[c] - bary.0[c])))
        })
        .collect();
    let t = commands::template(1, N).unwrap();
    let rows: Vec<(bool, Verdict)> = points
        .par_iter()
        .map(|p| {
            let inside = membership(p, N).unwrap().is_inside();
            let c = certify_with(&t, &PointConstraint::pin(p), &options(Mode::Feasibility, 1)).unwrap();
            (inside, c.verdict)
        })
        .collect();
    let inside = rows.iter().filter(|r| r.0).count();
    let nonlocal = rows.iter().filter(|r| r.1 == Verdict::Nonlocal).count();
    let inside_rejected = rows.iter().filter(|r| r.0 && r.1 != Verdict::NoViolation).count();
    let nonlocal_inside = rows.iter().filter(|r| r.1 == Verdict::Nonlocal && r.0).count();
    gate.report(
        10,
        inside_rejected == 0 && nonlocal_inside == 0 && inside > 0 && nonlocal > 0,
        format!(
            "200 points: {inside} LP-inside ({inside_rejected} not SDP-feasible), {nonlocal} SDP-nonlocal ({nonlocal_inside} LP-inside)"
        ),
    );
}

fn main() {
    let rt = Runtime::new(0, None).expect("runtime");
    let mut gate = Gate { results: Vec::new() };
    let mut certificates = Vec::new();
    criteria_1_2_9(&mut gate, &rt, &mut certificates);
    criterion_3(&mut gate, &rt);
    criterion_4(&mut gate, &rt, &mut certificates);
    criterion_5(&mut gate);
    criterion_6(&mut gate);
    criterion_7(&mut gate);
    criterion_8(&mut gate);
    let passed = certificates.iter().filter(|&&b| b).count();
    gate.report(
        9,
        passed == certificates.len(),
        format!("{passed} of {} extracted inequalities re-verified (Fig. 2 and 360 Fig. 1 rays)", certificates.len()),
    );
    criterion_10(&mut gate);
    gate.results.sort();
    let failed: Vec<usize> = gate.results.iter().filter(|r| !r.1).map(|r| r.0).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria pass", gate.results.len());
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
