//! Facial reduction for freely adjustable diagonal entries.
//!
//! When a unit diagonal matrix `E_aa` of some block lies in the span of the
//! coefficient matrices of variables with zero objective, that entry can be raised
//! at no cost without touching anything else. Every dual matrix must then vanish on
//! row `a`, so the dual has no interior; dropping the row and column restores it.
//! The reduced LMI has the same closure, hence the same optimal value and the same
//! feasibility verdict up to boundary cases.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use super::{SdpProblem, SparseSym, SymEntry};

const SPAN_TOL: f64 = 1e-9;

/// Rows kept in each block of the original problem.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Reduction {
    pub keep: Vec<Vec<usize>>,
}

impl Reduction {
    pub fn is_trivial(&self, sizes: &[usize]) -> bool {
        self.keep.iter().zip(sizes).all(|(k, &n)| k.len() == n)
    }

    /// Pads reduced dual blocks back to the original shape with zeros.
    pub fn expand(&self, sizes: &[usize], reduced: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
        let mut out: Vec<DMatrix<f64>> = sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        let mut r = 0;
        for (b, keep) in self.keep.iter().enumerate() {
            if keep.is_empty() {
                continue;
            }
            let m = &reduced[r];
            for (i, &ki) in keep.iter().enumerate() {
                for (j, &kj) in keep.iter().enumerate() {
                    out[b][(ki, kj)] = m[(i, j)];
                }
            }
            r += 1;
        }
        out
    }
}

fn restrict(m: &SparseSym, index: &[Vec<Option<usize>>], block_map: &[Option<usize>]) -> SparseSym {
    let mut out = SparseSym::new();
    for e in &m.entries {
        if let (Some(b), Some(r), Some(c)) = (block_map[e.block], index[e.block][e.row], index[e.block][e.col]) {
            out.entries.push(SymEntry { block: b, row: r, col: c, value: e.value });
        }
    }
    out
}

/// Repeatedly drops freely adjustable diagonal entries.
pub(crate) fn reduce(problem: &SdpProblem) -> (SdpProblem, Reduction) {
    let sizes = &problem.block_sizes;
    let mut keep: Vec<Vec<usize>> = sizes.iter().map(|&n| (0..n).collect()).collect();
    let free: Vec<usize> = (0..problem.num_vars()).filter(|&k| problem.objective[k] == 0.0).collect();
    loop {
        // Coordinates of the kept upper-triangular entries.
        let mut coord: Vec<Vec<Vec<Option<usize>>>> =
            sizes.iter().map(|&n| vec![vec![None; n]; n]).collect();
        let mut diag: Vec<(usize, usize, usize)> = Vec::new();
        let mut rows = 0;
        for (b, k) in keep.iter().enumerate() {
            for (i, &ri) in k.iter().enumerate() {
                for &rj in &k[i..] {
                    coord[b][ri][rj] = Some(rows);
                    if ri == rj {
                        diag.push((b, ri, rows));
                    }
                    rows += 1;
                }
            }
        }
        if free.is_empty() || rows == 0 {
            break;
        }
        let mut a = DMatrix::<f64>::zeros(rows, free.len());
        for (col, &k) in free.iter().enumerate() {
            for e in &problem.coefficients[k].entries {
                if let Some(r) = coord[e.block][e.row][e.col] {
                    a[(r, col)] += e.value;
                }
            }
        }
        let svd = a.svd(true, false);
        let u = svd.u.expect("requested");
        let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        if smax == 0.0 {
            break;
        }
        let rank_cols: Vec<usize> =
            (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > 1e-10 * smax).collect();
        let mut dropped = false;
        for &(b, ri, r) in &diag {
            let proj: f64 = rank_cols.iter().map(|&c| u[(r, c)] * u[(r, c)]).sum();
            if 1.0 - proj < SPAN_TOL {
                keep[b].retain(|&x| x != ri);
                dropped = true;
            }
        }
        if !dropped {
            break;
        }
    }

    let mut index: Vec<Vec<Option<usize>>> = sizes.iter().map(|&n| vec![None; n]).collect();
    let mut block_map = vec![None; sizes.len()];
    let mut new_sizes = Vec::new();
    for (b, k) in keep.iter().enumerate() {
        for (i, &r) in k.iter().enumerate() {
            index[b][r] = Some(i);
        }
        if !k.is_empty() {
            block_map[b] = Some(new_sizes.len());
            new_sizes.push(k.len());
        }
    }
    let reduced = SdpProblem {
        block_sizes: new_sizes,
        constant: restrict(&problem.constant, &index, &block_map),
        coefficients: problem.coefficients.iter().map(|m| restrict(m, &index, &block_map)).collect(),
        objective: problem.objective.clone(),
    };
    (reduced, Reduction { keep })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drops_free_diagonal() {
        // [[1, w0], [w0, w1]] >= 0 with w1 free: row 1 stays (w1 also couples nothing
        // else, so E_11 is in the span), and the reduced LMI is [1] >= 0.
        let mut c = SparseSym::new();
        c.push(0, 0, 0, 1.0);
        let mut f0 = SparseSym::new();
        f0.push(0, 0, 1, 1.0);
        let mut f1 = SparseSym::new();
        f1.push(0, 1, 1, 1.0);
        let p = SdpProblem { block_sizes: vec![2], constant: c, coefficients: vec![f0, f1], objective: vec![0.0, 0.0] };
        let (r, red) = reduce(&p);
        assert_eq!(red.keep, vec![vec![0]]);
        assert_eq!(r.block_sizes, vec![1]);
        assert!(r.coefficients[0].is_empty());
    }

    #[test]
    fn keeps_coupled_diagonal() {
        // w moves both diagonal entries: no unit direction is free.
        let mut c = SparseSym::new();
        c.push(0, 0, 0, 1.0);
        c.push(0, 1, 1, 1.0);
        let mut f = SparseSym::new();
        f.push(0, 0, 0, 1.0);
        f.push(0, 1, 1, -1.0);
        let p = SdpProblem { block_sizes: vec![2], constant: c, coefficients: vec![f], objective: vec![0.0] };
        let (_, red) = reduce(&p);
        assert!(red.is_trivial(&p.block_sizes));
    }
}
