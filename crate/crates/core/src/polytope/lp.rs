//! Dense revised simplex over streamed columns, anti-cycling by Bland's rule.
//!
//! Problems have few rows (at most six here) and a very large number of columns
//! that are generated on the fly, so the basis inverse is dense and small and each
//! pricing pass is one sweep of the column stream.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub(crate) const LP_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 50_000;
const BLAND_AFTER: usize = 8;

/// A stream of non-negative structural columns, visited in a fixed order.
pub(crate) trait ColumnSource {
    /// Payload kept for columns that end up basic.
    type Tag: Clone;
    /// Calls `f(tag, column)` for each column in order until it returns `true`.
    fn scan(&self, f: &mut dyn FnMut(&Self::Tag, &[f64]) -> bool);
}

#[derive(Debug, Clone)]
pub(crate) enum Var<T> {
    /// Explicit column `k` of the problem.
    Extra(usize),
    /// Streamed column with its global position in the stream.
    Stream(u64, T),
    Artificial(usize),
}

impl<T> Var<T> {
    /// Bland order: extras, then the stream, then artificials.
    fn rank(&self) -> (u8, u64) {
        match self {
            Var::Extra(k) => (0, *k as u64),
            Var::Stream(i, _) => (1, *i),
            Var::Artificial(k) => (2, *k as u64),
        }
    }
}

/// `min c . x` over `A x = b, x >= 0` with explicit columns `extra` (with costs)
/// plus the streamed columns (cost zero).
pub(crate) struct Problem<'a, S: ColumnSource> {
    pub b: Vec<f64>,
    pub extra: Vec<(Vec<f64>, f64)>,
    pub source: &'a S,
    /// Phase-one infeasibility (in row units) still accepted as feasible.
    pub feas_tol: f64,
}

#[derive(Debug, Clone)]
pub(crate) enum Outcome<T> {
    Optimal {
        basis: Vec<(Var<T>, f64)>,
        objective: f64,
    },
    /// Phase one ended with a positive infeasibility; `duals` certify it:
    /// `duals . a_j <= 0` for every column and `duals . b > 0`.
    Infeasible { duals: Vec<f64> },
    Unbounded,
}

struct Tableau<T> {
    basis: Vec<Var<T>>,
    cols: Vec<Vec<f64>>,
    x: Vec<f64>,
    binv: DMatrix<f64>,
    /// Once phase one is over, basic artificials must not move.
    pin_artificials: bool,
}

impl<T: Clone> Tableau<T> {
    fn refactor(&mut self, b: &[f64]) -> Result<()> {
        let m = b.len();
        let bm = DMatrix::from_fn(m, m, |i, j| self.cols[j][i]);
        self.binv = bm.try_inverse().ok_or_else(|| Error::LpStalled("singular basis".into()))?;
        let x = &self.binv * DVector::from_column_slice(b);
        self.x = x.iter().map(|&v| if v.abs() < 1e-13 { 0.0 } else { v }).collect();
        Ok(())
    }

    fn duals(&self, cost: &[f64]) -> Vec<f64> {
        let m = self.basis.len();
        let cb = DVector::from_column_slice(cost);
        let pi = self.binv.transpose() * cb;
        (0..m).map(|i| pi[i]).collect()
    }

    /// Ratio test against `u = B^-1 a`; ties broken by Bland rank.
    fn leaving(&self, u: &DVector<f64>) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..u.len() {
            let pinned = self.pin_artificials && matches!(self.basis[i], Var::Artificial(_)) && u[i].abs() > LP_TOL;
            if u[i] > LP_TOL || pinned {
                let r = if pinned { 0.0 } else { self.x[i].max(0.0) / u[i] };
                best = match best {
                    None => Some((i, r)),
                    Some((bi, br)) => {
                        if r < br - 1e-12 || (r <= br + 1e-12 && self.basis[i].rank() < self.basis[bi].rank()) {
                            Some((i, r))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
        }
        best.map(|b| b.0)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Runs one simplex phase with the given cost function; returns `false` when the
/// phase is unbounded.
///
/// Pricing is Dantzig's rule (most negative reduced cost over a full sweep), which
/// needs few sweeps of the stream; after `BLAND_AFTER` consecutive degenerate
/// pivots it switches to Bland's rule (first improving column in a fixed order)
/// until the objective moves again, which rules out cycling.
fn run_phase<S: ColumnSource>(
    p: &Problem<'_, S>,
    t: &mut Tableau<S::Tag>,
    cost_of: &dyn Fn(&Var<S::Tag>) -> f64,
    pivots: &mut usize,
) -> Result<bool> {
    let mut degenerate = 0usize;
    loop {
        *pivots += 1;
        if *pivots > MAX_PIVOTS {
            return Err(Error::LpStalled("pivot limit reached".into()));
        }
        let bland = degenerate >= BLAND_AFTER;
        let cb: Vec<f64> = t.basis.iter().map(cost_of).collect();
        let pi = t.duals(&cb);
        let mut entering: Option<(Var<S::Tag>, Vec<f64>)> = None;
        let mut best = -LP_TOL;
        for (k, (col, _)) in p.extra.iter().enumerate() {
            if t.basis.iter().any(|v| matches!(v, Var::Extra(j) if *j == k)) {
                continue;
            }
            let d = cost_of(&Var::Extra(k)) - dot(&pi, col);
            if d < best {
                entering = Some((Var::Extra(k), col.clone()));
                best = d;
                if bland {
                    break;
                }
            }
        }
        if !(bland && entering.is_some()) {
            let mut idx = 0u64;
            let basic: Vec<u64> =
                t.basis.iter().filter_map(|v| if let Var::Stream(i, _) = v { Some(*i) } else { None }).collect();
            p.source.scan(&mut |tag, col| {
                let i = idx;
                idx += 1;
                if basic.contains(&i) {
                    return false;
                }
                let d = -dot(&pi, col);
                if d < best {
                    entering = Some((Var::Stream(i, tag.clone()), col.to_vec()));
                    best = d;
                    return bland;
                }
                false
            });
        }
        let Some((var, col)) = entering else { return Ok(true) };
        let u = &t.binv * DVector::from_column_slice(&col);
        let Some(r) = t.leaving(&u) else { return Ok(false) };
        if t.x[r].max(0.0) / u[r].abs().max(f64::MIN_POSITIVE) <= 1e-12 {
            degenerate += 1;
        } else {
            degenerate = 0;
        }
        t.basis[r] = var;
        t.cols[r] = col;
        t.refactor(&p.b)?;
    }
}

/// Two-phase simplex.
pub(crate) fn solve<S: ColumnSource>(p: &Problem<'_, S>) -> Result<Outcome<S::Tag>> {
    let m = p.b.len();
    // Flip rows so that b >= 0; artificials then start feasible.
    let sign: Vec<f64> = p.b.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
    let b: Vec<f64> = p.b.iter().zip(&sign).map(|(v, s)| v * s).collect();
    let extra: Vec<(Vec<f64>, f64)> =
        p.extra.iter().map(|(c, k)| (c.iter().zip(&sign).map(|(v, s)| v * s).collect(), *k)).collect();
    let flipped = FlippedSource { inner: p.source, sign: &sign };
    let fp = Problem { b: b.clone(), extra, source: &flipped, feas_tol: p.feas_tol };

    let mut t = Tableau {
        basis: (0..m).map(Var::Artificial).collect(),
        cols: (0..m).map(|i| {
            let mut e = vec![0.0; m];
            e[i] = 1.0;
            e
        }).collect(),
        x: b.clone(),
        binv: DMatrix::identity(m, m),
        pin_artificials: false,
    };
    let mut pivots = 0;
    let phase1 = |v: &Var<S::Tag>| if matches!(v, Var::Artificial(_)) { 1.0 } else { 0.0 };
    // Artificials never re-enter: pricing only visits extras and the stream.
    run_phase(&fp, &mut t, &phase1, &mut pivots)?;
    let infeasibility: f64 =
        t.basis.iter().zip(&t.x).filter(|(v, _)| matches!(v, Var::Artificial(_))).map(|(_, x)| *x).sum();
    if infeasibility > p.feas_tol {
        let cb: Vec<f64> = t.basis.iter().map(phase1).collect();
        let duals = t.duals(&cb).iter().zip(&sign).map(|(d, s)| d * s).collect();
        return Ok(Outcome::Infeasible { duals });
    }

    // Absorb the accepted residual into the right-hand side so that every
    // artificial sits at exactly zero from here on.
    let mut b = b;
    for (v, x) in t.basis.iter().zip(&t.x) {
        if let Var::Artificial(k) = v {
            b[*k] -= x;
        }
    }
    let fp = Problem { b: b.clone(), ..fp };
    t.refactor(&b)?;

    // Drive artificials out of the basis where possible.
    t.pin_artificials = true;
    for r in 0..m {
        if !matches!(t.basis[r], Var::Artificial(_)) {
            continue;
        }
        let row: Vec<f64> = (0..m).map(|j| t.binv[(r, j)]).collect();
        let mut found: Option<(Var<S::Tag>, Vec<f64>)> = None;
        for (k, (col, _)) in fp.extra.iter().enumerate() {
            if !t.basis.iter().any(|v| matches!(v, Var::Extra(j) if *j == k)) && dot(&row, col).abs() > 1e-7 {
                found = Some((Var::Extra(k), col.clone()));
                break;
            }
        }
        if found.is_none() {
            let mut idx = 0u64;
            fp.source.scan(&mut |tag, col| {
                let i = idx;
                idx += 1;
                if dot(&row, col).abs() > 1e-7 {
                    found = Some((Var::Stream(i, tag.clone()), col.to_vec()));
                    return true;
                }
                false
            });
        }
        if let Some((var, col)) = found {
            if let Var::Stream(i, _) = &var {
                let i = *i;
                if t.basis.iter().any(|v| matches!(v, Var::Stream(j, _) if *j == i)) {
                    continue;
                }
            }
            t.basis[r] = var;
            t.cols[r] = col;
            t.refactor(&b)?;
        }
    }

    let has_costs = p.extra.iter().any(|(_, c)| *c != 0.0);
    if has_costs {
        let phase2 = |v: &Var<S::Tag>| match v {
            Var::Extra(k) => p.extra[*k].1,
            _ => 0.0,
        };
        if !run_phase(&fp, &mut t, &phase2, &mut pivots)? {
            return Ok(Outcome::Unbounded);
        }
    }
    let objective = t
        .basis
        .iter()
        .zip(&t.x)
        .map(|(v, x)| match v {
            Var::Extra(k) => p.extra[*k].1 * x,
            _ => 0.0,
        })
        .sum();
    Ok(Outcome::Optimal { basis: t.basis.into_iter().zip(t.x).collect(), objective })
}

struct FlippedSource<'a, S> {
    inner: &'a S,
    sign: &'a [f64],
}

impl<S: ColumnSource> ColumnSource for FlippedSource<'_, S> {
    type Tag = S::Tag;
    fn scan(&self, f: &mut dyn FnMut(&Self::Tag, &[f64]) -> bool) {
        let mut buf = vec![0.0; self.sign.len()];
        self.inner.scan(&mut |tag, col| {
            for ((o, v), s) in buf.iter_mut().zip(col).zip(self.sign) {
                *o = v * s;
            }
            f(tag, &buf)
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fixed(Vec<Vec<f64>>);

    impl ColumnSource for Fixed {
        type Tag = usize;
        fn scan(&self, f: &mut dyn FnMut(&usize, &[f64]) -> bool) {
            for (i, c) in self.0.iter().enumerate() {
                if f(&i, c) {
                    return;
                }
            }
        }
    }

    #[test]
    fn convex_combination() {
        // Points 0, 1, 2 on a line; 0.5 = half of 0 and 1 (or quarter of 2, ...).
        let src = Fixed(vec![vec![0.0, 1.0], vec![1.0, 1.0], vec![2.0, 1.0]]);
        let p = Problem { b: vec![0.5, 1.0], extra: vec![], source: &src, feas_tol: LP_TOL };
        match solve(&p).unwrap() {
            Outcome::Optimal { basis, .. } => {
                let mut pt = 0.0;
                let mut total = 0.0;
                for (v, x) in basis {
                    if let Var::Stream(_, i) = v {
                        pt += x * src.0[i][0];
                        total += x;
                    }
                }
                assert!((pt - 0.5).abs() < 1e-12 && (total - 1.0).abs() < 1e-12);
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn farkas_certificate() {
        let src = Fixed(vec![vec![0.0, 1.0], vec![1.0, 1.0]]);
        let p = Problem { b: vec![-0.5, 1.0], extra: vec![], source: &src, feas_tol: LP_TOL };
        match solve(&p).unwrap() {
            Outcome::Infeasible { duals, .. } => {
                for c in &src.0 {
                    assert!(dot(&duals, c) <= 1e-12);
                }
                assert!(dot(&duals, &p.b) > 0.0);
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn phase_two_maximizes() {
        // max l s.t. sum w_i p_i = l * 1, sum w = 1 over points {-1, 3}.
        let src = Fixed(vec![vec![-1.0, 1.0], vec![3.0, 1.0]]);
        let p = Problem { b: vec![0.0, 1.0], extra: vec![(vec![-1.0, 0.0], -1.0)], source: &src, feas_tol: LP_TOL };
        match solve(&p).unwrap() {
            Outcome::Optimal { objective, .. } => assert!((objective + 3.0).abs() < 1e-12),
            o => panic!("{o:?}"),
        }
    }
}
