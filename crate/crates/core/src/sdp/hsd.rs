//! Mehrotra predictor-corrector on the simplified homogeneous self-dual embedding
//! with Nesterov-Todd scaling.
//!
//! The LMI problem is treated as the dual of the standard form
//!
//! ```text
//! (P)  min <C, X>   s.t. <A_k, X> = b_k, X >= 0
//! (D)  max b . y    s.t. sum_k y_k A_k + S = C, S >= 0
//! ```
//!
//! with `C = F_0`, `A_k = -F_k` and `b = c`, so `S` is the LMI matrix and `X` its
//! multiplier. The embedding solves
//!
//! ```text
//!  A(X) - b tau = 0,   A*(y) + S - C tau = 0,   b.y - <C, X> - kappa = 0
//! ```
//!
//! from the infeasible start `X = S = I, tau = kappa = 1`. A limit with `tau > 0`
//! gives an optimal pair; one with `kappa > 0` certifies infeasibility of (P) or (D).

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector};

use super::{zero_blocks, SdpOutcome, SdpProblem, SdpStatus, SolverSettings, SolverStats, SymEntry};
use crate::error::Result;
use crate::math::sqrt;

/// Entries of one variable's matrix grouped by block.
struct Column {
    blocks: Vec<(usize, Vec<SymEntry>)>,
}

struct Data {
    sizes: Vec<usize>,
    /// `A_k = -F_k / s_k` for active variables.
    cols: Vec<Column>,
    /// Original variable index and column scale `s_k` of each active variable.
    active: Vec<(usize, f64)>,
    c: Vec<DMatrix<f64>>,
    b: DVector<f64>,
}

impl Data {
    fn op_a(&self, x: &[DMatrix<f64>]) -> DVector<f64> {
        DVector::from_iterator(self.cols.len(), self.cols.iter().map(|col| col_dot(col, x)))
    }

    fn op_at(&self, y: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let mut out = zero_blocks(&self.sizes);
        for (col, &yk) in self.cols.iter().zip(y.iter()) {
            for (blk, entries) in &col.blocks {
                let m = &mut out[*blk];
                for e in entries {
                    m[(e.row, e.col)] += yk * e.value;
                    if e.row != e.col {
                        m[(e.col, e.row)] += yk * e.value;
                    }
                }
            }
        }
        out
    }
}

fn col_dot(col: &Column, x: &[DMatrix<f64>]) -> f64 {
    let mut acc = 0.0;
    for (blk, entries) in &col.blocks {
        let m = &x[*blk];
        for e in entries {
            let v = m[(e.row, e.col)];
            acc += if e.row == e.col { e.value * v } else { 2.0 * e.value * v };
        }
    }
    acc
}

fn inner(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn norm(a: &[DMatrix<f64>]) -> f64 {
    sqrt(inner(a, a))
}

fn axpy(out: &mut [DMatrix<f64>], alpha: f64, x: &[DMatrix<f64>]) {
    for (o, v) in out.iter_mut().zip(x) {
        *o += v * alpha;
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// `X = R Lambda R^T`, `S = R^-T Lambda R^-1` with `Lambda` diagonal; `W = R R^T`
/// satisfies `W S W = X`.
struct Scaling {
    r: DMatrix<f64>,
    w: DMatrix<f64>,
    lambda: DVector<f64>,
}

fn nt_scaling(x: &DMatrix<f64>, s: &DMatrix<f64>) -> Option<Scaling> {
    let n = x.nrows();
    let lx = Cholesky::new(x.clone())?.l();
    let ls = Cholesky::new(s.clone())?.l();
    let svd = (ls.transpose() * &lx).svd(false, true);
    let vt = svd.v_t?;
    let sig = svd.singular_values;
    if sig.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return None;
    }
    let mut r = &lx * vt.transpose();
    for j in 0..n {
        let f = 1.0 / sqrt(sig[j]);
        r.column_mut(j).scale_mut(f);
    }
    let mut w = &r * r.transpose();
    symmetrize(&mut w);
    Some(Scaling { r, w, lambda: sig })
}

/// `W A W` for the part of `A` living in one block.
fn sandwich(w: &DMatrix<f64>, entries: &[SymEntry]) -> DMatrix<f64> {
    let n = w.nrows();
    let mut out = DMatrix::zeros(n, n);
    for e in entries {
        let (r, c, v) = (e.row, e.col, e.value);
        for q in 0..n {
            let wrq = w[(r, q)];
            let wcq = w[(c, q)];
            for p in 0..n {
                if r == c {
                    out[(p, q)] += v * w[(p, r)] * wrq;
                } else {
                    out[(p, q)] += v * (w[(p, r)] * wcq + w[(p, c)] * wrq);
                }
            }
        }
    }
    out
}

/// Largest step `a <= 1/0` keeping `Lambda + a D` PSD, via the eigenvalues of
/// `Lambda^-1/2 D Lambda^-1/2`.
fn max_step(lambda: &DVector<f64>, d: &DMatrix<f64>) -> f64 {
    if d.iter().any(|v| !v.is_finite()) {
        return 0.0;
    }
    let n = lambda.len();
    let mut m = d.clone();
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] /= sqrt(lambda[i] * lambda[j]);
        }
    }
    symmetrize(&mut m);
    let min = m.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
    if min < 0.0 {
        -1.0 / min
    } else {
        f64::INFINITY
    }
}

#[derive(Clone)]
struct State {
    x: Vec<DMatrix<f64>>,
    y: DVector<f64>,
    s: Vec<DMatrix<f64>>,
    tau: f64,
    kappa: f64,
}

struct Direction {
    dx: Vec<DMatrix<f64>>,
    dy: DVector<f64>,
    ds: Vec<DMatrix<f64>>,
    dtau: f64,
    dkappa: f64,
    /// Scaled `dX~`, `dS~`.
    dxs: Vec<DMatrix<f64>>,
    dss: Vec<DMatrix<f64>>,
}

/// Per-iteration factorization of the reduced Newton system.
struct Newton<'a> {
    data: &'a Data,
    scal: Vec<Scaling>,
    schur: Cholesky<f64, nalgebra::Dyn>,
    h: DVector<f64>,
    c_wcw: f64,
    /// `M^-1 (h + b)`.
    q: DVector<f64>,
}

impl<'a> Newton<'a> {
    fn new(data: &'a Data, st: &State) -> Option<Self> {
        let scal: Vec<Scaling> = st.x.iter().zip(&st.s).map(|(x, s)| nt_scaling(x, s)).collect::<Option<_>>()?;
        let m = data.cols.len();
        let mut schur = DMatrix::zeros(m, m);
        // Blocks of W A_l W, indexed like data.cols[l].blocks.
        for l in 0..m {
            let mut dense: Vec<Option<DMatrix<f64>>> = vec![None; data.sizes.len()];
            for (blk, entries) in &data.cols[l].blocks {
                dense[*blk] = Some(sandwich(&scal[*blk].w, entries));
            }
            for k in l..m {
                let mut acc = 0.0;
                for (blk, entries) in &data.cols[k].blocks {
                    if let Some(g) = &dense[*blk] {
                        for e in entries {
                            let v = g[(e.row, e.col)];
                            acc += if e.row == e.col { e.value * v } else { 2.0 * e.value * v };
                        }
                    }
                }
                schur[(k, l)] = acc;
                schur[(l, k)] = acc;
            }
        }
        let wcw: Vec<DMatrix<f64>> = scal.iter().zip(&data.c).map(|(sc, c)| &sc.w * c * &sc.w).collect();
        let h = data.op_a(&wcw);
        let c_wcw = inner(&data.c, &wcw);
        let diag_max = (0..m).map(|i| schur[(i, i)]).fold(0.0f64, f64::max).max(1e-300);
        let mut reg = 0.0;
        let chol = loop {
            let mut trial = schur.clone();
            for i in 0..m {
                trial[(i, i)] += reg;
            }
            if let Some(ch) = Cholesky::new(trial) {
                break ch;
            }
            reg = if reg == 0.0 { 1e-14 * diag_max } else { reg * 100.0 };
            if reg > 1e-4 * diag_max {
                return None;
            }
        };
        let q = chol.solve(&(&h + &data.b));
        Some(Newton { data, scal, schur: chol, h, c_wcw, q })
    }

    /// Solves the embedded Newton system for residual weight `eta` and scaled
    /// complementarity targets `rc` (per block) and `rtau`.
    fn solve(&self, st: &State, res: &Residuals, eta: f64, rc: &[DMatrix<f64>], rtau: f64) -> Direction {
        let data = self.data;
        // dX~ + dS~ = T with T_ij = 2 rc_ij / (l_i + l_j).
        let t: Vec<DMatrix<f64>> = self
            .scal
            .iter()
            .zip(rc)
            .map(|(sc, rc)| {
                let n = sc.lambda.len();
                DMatrix::from_fn(n, n, |i, j| 2.0 * rc[(i, j)] / (sc.lambda[i] + sc.lambda[j]))
            })
            .collect();
        let q_mat: Vec<DMatrix<f64>> =
            self.scal.iter().zip(&t).map(|(sc, t)| &sc.r * t * sc.r.transpose()).collect();
        let wrdw: Vec<DMatrix<f64>> =
            self.scal.iter().zip(&res.rd).map(|(sc, rd)| &sc.w * rd * &sc.w).collect();

        let r1 = &res.rp * eta - data.op_a(&q_mat) + data.op_a(&wrdw) * eta;
        let r2 = eta * res.rg - inner(&data.c, &q_mat) + eta * inner(&data.c, &wrdw) - rtau / st.tau;
        let p = self.schur.solve(&r1);
        let hb = &self.h - &data.b;
        let denom = hb.dot(&self.q) - self.c_wcw - st.kappa / st.tau;
        let dtau = (r2 - hb.dot(&p)) / denom;
        let dy = &p + &self.q * dtau;

        let at_dy = data.op_at(&dy);
        let mut ds: Vec<DMatrix<f64>> = Vec::with_capacity(rc.len());
        for ((rd, c), a) in res.rd.iter().zip(&data.c).zip(&at_dy) {
            let mut m = rd * eta + c * dtau - a;
            symmetrize(&mut m);
            ds.push(m);
        }
        let mut dss = Vec::with_capacity(rc.len());
        let mut dxs = Vec::with_capacity(rc.len());
        let mut dx = Vec::with_capacity(rc.len());
        for ((sc, d), t) in self.scal.iter().zip(&ds).zip(&t) {
            let mut s_scaled = sc.r.transpose() * d * &sc.r;
            symmetrize(&mut s_scaled);
            let mut x_scaled = t - &s_scaled;
            symmetrize(&mut x_scaled);
            let mut x = &sc.r * &x_scaled * sc.r.transpose();
            symmetrize(&mut x);
            dss.push(s_scaled);
            dxs.push(x_scaled);
            dx.push(x);
        }
        let dkappa = (rtau - st.kappa * dtau) / st.tau;
        Direction { dx, dy, ds, dtau, dkappa, dxs, dss }
    }

    fn step_length(&self, st: &State, d: &Direction) -> f64 {
        let mut a = f64::INFINITY;
        for ((sc, dx), ds) in self.scal.iter().zip(&d.dxs).zip(&d.dss) {
            a = a.min(max_step(&sc.lambda, dx)).min(max_step(&sc.lambda, ds));
        }
        if d.dtau < 0.0 {
            a = a.min(-st.tau / d.dtau);
        }
        if d.dkappa < 0.0 {
            a = a.min(-st.kappa / d.dkappa);
        }
        a
    }
}

struct Residuals {
    rp: DVector<f64>,
    rd: Vec<DMatrix<f64>>,
    rg: f64,
}

fn residuals(data: &Data, st: &State) -> Residuals {
    let rp = &data.b * st.tau - data.op_a(&st.x);
    let at_y = data.op_at(&st.y);
    let rd = data
        .c
        .iter()
        .zip(&at_y)
        .zip(&st.s)
        .map(|((c, a), s)| c * st.tau - a - s)
        .collect();
    let rg = data.b.dot(&st.y) - inner(&data.c, &st.x) - st.kappa;
    Residuals { rp, rd, rg }
}

fn prepare(problem: &SdpProblem) -> core::result::Result<Data, usize> {
    let sizes = problem.block_sizes.clone();
    let mut cols = Vec::new();
    let mut active = Vec::new();
    let mut b = Vec::new();
    for (k, f) in problem.coefficients.iter().enumerate() {
        let mut f = f.clone();
        f.compact();
        let s = f.frobenius_norm();
        if s == 0.0 {
            if problem.objective[k] != 0.0 {
                // A variable that touches nothing but the objective.
                return Err(k);
            }
            continue;
        }
        let mut blocks: Vec<(usize, Vec<SymEntry>)> = Vec::new();
        for e in f.entries {
            let e = SymEntry { value: -e.value / s, ..e };
            match blocks.last_mut() {
                Some((blk, v)) if *blk == e.block => v.push(e),
                _ => blocks.push((e.block, vec![e])),
            }
        }
        cols.push(Column { blocks });
        active.push((k, s));
        b.push(problem.objective[k] / s);
    }
    let c = problem.constant.to_dense(&sizes);
    Ok(Data { sizes, cols, active, c, b: DVector::from_vec(b) })
}

/// Solves `problem` with explicit settings.
pub fn solve_with(problem: &SdpProblem, settings: &SolverSettings) -> Result<SdpOutcome> {
    problem.validate()?;
    if settings.reduce_faces {
        let (reduced, red) = super::facial::reduce(problem);
        if !red.is_trivial(&problem.block_sizes) {
            let mut out = solve_embedding(&reduced, settings)?;
            out.dual = red.expand(&problem.block_sizes, &out.dual);
            return Ok(out);
        }
    }
    solve_embedding(problem, settings)
}

fn solve_embedding(problem: &SdpProblem, settings: &SolverSettings) -> Result<SdpOutcome> {
    let nvars = problem.num_vars();
    let sizes = problem.block_sizes.clone();
    let data = match prepare(problem) {
        Ok(d) => d,
        Err(k) => {
            let mut ray = vec![0.0; nvars];
            ray[k] = problem.objective[k].signum();
            return Ok(SdpOutcome {
                status: SdpStatus::Unbounded,
                objective: f64::INFINITY,
                primal: ray,
                dual: zero_blocks(&sizes),
                infeasibility_margin: 0.0,
                stats: SolverStats::default(),
            });
        }
    };
    let dim: usize = sizes.iter().sum();
    let m = data.cols.len();
    let mut st = State {
        x: sizes.iter().map(|&n| DMatrix::identity(n, n)).collect(),
        y: DVector::zeros(m),
        s: sizes.iter().map(|&n| DMatrix::identity(n, n)).collect(),
        tau: 1.0,
        kappa: 1.0,
    };
    let norm_b = data.b.norm();
    let norm_c = norm(&data.c);
    let mut stats = SolverStats::default();
    let mut status = SdpStatus::NumericalFailure;
    // Best iterates seen so far, used when the method stalls short of the strict
    // targets (the usual situation for problems without strict complementarity).
    let mut best_opt: Option<(f64, State, SolverStats)> = None;
    let mut best_inf: Option<(f64, State, SolverStats)> = None;
    let mut since_best = 0usize;

    for it in 0..=settings.max_iterations {
        stats.iterations = it;
        let res = residuals(&data, &st);
        let mu = (inner(&st.x, &st.s) + st.tau * st.kappa) / (dim as f64 + 1.0);

        let pres = res.rp.norm() / st.tau / (1.0 + norm_b);
        let dres = norm(&res.rd) / st.tau / (1.0 + norm_c);
        let pobj = inner(&data.c, &st.x) / st.tau;
        let dobj = data.b.dot(&st.y) / st.tau;
        let gap = (pobj - dobj).abs();
        stats.primal_residual = pres;
        stats.dual_residual = dres;
        stats.gap = gap;
        stats.tau = st.tau;
        stats.kappa = st.kappa;
        let merit = pres.max(dres).max(gap / (1.0 + dobj.abs()));
        if pres <= settings.feasibility_tol
            && dres <= settings.feasibility_tol
            && gap <= settings.gap_tol * (1.0 + dobj.abs())
        {
            status = SdpStatus::Optimal;
            break;
        }
        let mut improved = false;
        if merit.is_finite() && best_opt.as_ref().is_none_or(|b| merit < b.0) {
            best_opt = Some((merit, st.clone(), stats.clone()));
            improved = true;
        }
        // Certificates from the current iterate.
        let cx = inner(&data.c, &st.x);
        if cx < 0.0 {
            let ax = data.op_a(&st.x).norm();
            let trace: f64 = st.x.iter().map(|x| x.trace()).sum();
            let ratio = ax / -cx;
            if -cx / trace >= settings.min_margin {
                if ratio <= settings.infeasibility_tol {
                    status = SdpStatus::Infeasible;
                    break;
                }
                if best_inf.as_ref().is_none_or(|b| ratio < b.0) {
                    best_inf = Some((ratio, st.clone(), stats.clone()));
                    improved = true;
                }
            }
        }
        let by = data.b.dot(&st.y);
        if by > 0.0 {
            let at_y = data.op_at(&st.y);
            let mut r = at_y;
            axpy(&mut r, 1.0, &st.s);
            if norm(&r) / by <= settings.infeasibility_tol {
                status = SdpStatus::Unbounded;
                break;
            }
        }
        if it == settings.max_iterations {
            break;
        }
        since_best = if improved { 0 } else { since_best + 1 };
        if since_best > settings.stall_iterations {
            break;
        }

        let Some(newton) = Newton::new(&data, &st) else { break };

        // Predictor.
        let rc_aff: Vec<DMatrix<f64>> = newton
            .scal
            .iter()
            .map(|sc| DMatrix::from_diagonal(&sc.lambda.map(|l| -l * l)))
            .collect();
        let aff = newton.solve(&st, &res, 1.0, &rc_aff, -st.tau * st.kappa);
        let a_aff = newton.step_length(&st, &aff).min(1.0);
        let mut mu_aff = 0.0;
        for ((x, s), (dx, ds)) in st.x.iter().zip(&st.s).zip(aff.dx.iter().zip(&aff.ds)) {
            mu_aff += (x + dx * a_aff).dot(&(s + ds * a_aff));
        }
        mu_aff += (st.tau + a_aff * aff.dtau) * (st.kappa + a_aff * aff.dkappa);
        mu_aff /= dim as f64 + 1.0;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // Corrector.
        let rc: Vec<DMatrix<f64>> = newton
            .scal
            .iter()
            .zip(aff.dxs.iter().zip(&aff.dss))
            .map(|(sc, (dx, ds))| {
                let n = sc.lambda.len();
                let prod = dx * ds;
                let sym = (&prod + prod.transpose()) * 0.5;
                let mut m = -sym;
                for i in 0..n {
                    m[(i, i)] += sigma * mu - sc.lambda[i] * sc.lambda[i];
                }
                m
            })
            .collect();
        let rtau = sigma * mu - st.tau * st.kappa - aff.dtau * aff.dkappa;
        let dir = newton.solve(&st, &res, 1.0 - sigma, &rc, rtau);
        let a_max = newton.step_length(&st, &dir);
        let alpha = (0.99 * a_max).min(1.0);
        if !(alpha > 1e-12) || !alpha.is_finite() {
            break;
        }

        axpy(&mut st.x, alpha, &dir.dx);
        axpy(&mut st.s, alpha, &dir.ds);
        st.y += &dir.dy * alpha;
        st.tau += alpha * dir.dtau;
        st.kappa += alpha * dir.dkappa;
        for b in st.x.iter_mut().chain(st.s.iter_mut()) {
            symmetrize(b);
        }
    }

    if status == SdpStatus::NumericalFailure {
        let iterations = stats.iterations;
        if let Some((_, best, mut best_stats)) = best_opt.filter(|b| b.0 <= settings.acceptable_tol) {
            best_stats.iterations = iterations;
            return Ok(finish(&data, &best, nvars, SdpStatus::Optimal, best_stats));
        }
        if let Some((_, best, mut best_stats)) = best_inf.filter(|b| b.0 <= settings.acceptable_infeasibility_tol) {
            best_stats.iterations = iterations;
            return Ok(finish(&data, &best, nvars, SdpStatus::Infeasible, best_stats));
        }
    }
    Ok(finish(&data, &st, nvars, status, stats))
}

fn finish(data: &Data, st: &State, nvars: usize, status: SdpStatus, stats: SolverStats) -> SdpOutcome {
    let unscale = |y: &DVector<f64>, f: f64| {
        let mut w = vec![0.0; nvars];
        for (&(k, s), &yk) in data.active.iter().zip(y.iter()) {
            w[k] = yk / s * f;
        }
        w
    };
    match status {
        SdpStatus::Infeasible => {
            let trace: f64 = st.x.iter().map(|x| x.trace()).sum();
            let dual: Vec<DMatrix<f64>> = st.x.iter().map(|x| x / trace).collect();
            let margin = -inner(&data.c, &dual);
            SdpOutcome {
                status,
                objective: f64::NEG_INFINITY,
                primal: vec![0.0; nvars],
                dual,
                infeasibility_margin: margin,
                stats,
            }
        }
        SdpStatus::Unbounded => {
            let by = data.b.dot(&st.y);
            SdpOutcome {
                status,
                objective: f64::INFINITY,
                primal: unscale(&st.y, 1.0 / by),
                dual: zero_blocks(&data.sizes),
                infeasibility_margin: 0.0,
                stats,
            }
        }
        _ => {
            let primal = unscale(&st.y, 1.0 / st.tau);
            let dual = st.x.iter().map(|x| x / st.tau).collect();
            SdpOutcome {
                status,
                objective: data.b.dot(&st.y) / st.tau,
                primal,
                dual,
                infeasibility_margin: 0.0,
                stats,
            }
        }
    }
}
