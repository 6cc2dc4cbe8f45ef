//! Sparse SDPA (`.dat-s`) reading and writing.
//!
//! SDPA states problems as `minimize c . x` subject to `sum_i F_i x_i - F_0 >= 0`.
//! Ours is `maximize b . w` subject to `F_0 + sum_k w_k F_k >= 0`, so the file
//! carries `c = -b` and `F_0 -> -F_0`; the other matrices are unchanged. Values
//! are printed with 17 significant digits, which round-trips every `f64`.

use std::fmt::Write as _;

use anyhow::{anyhow, bail, Context, Result};
use pibell_core::sdp::{SdpProblem, SparseSym, SymEntry};

pub const FORMAT_VERSION: u32 = 1;

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Renders `problem` as sparse SDPA text with LF line endings.
pub fn export_standard(problem: &SdpProblem) -> String {
    let mut out = String::new();
    writeln!(out, "* format_version={FORMAT_VERSION}").unwrap();
    writeln!(out, "{}", problem.num_vars()).unwrap();
    writeln!(out, "{}", problem.block_sizes.len()).unwrap();
    let sizes: Vec<String> = problem.block_sizes.iter().map(|s| s.to_string()).collect();
    writeln!(out, "{}", sizes.join(" ")).unwrap();
    let c: Vec<String> = problem.objective.iter().map(|&b| num(-b)).collect();
    writeln!(out, "{}", c.join(" ")).unwrap();
    let mats = std::iter::once((0, &problem.constant, -1.0))
        .chain(problem.coefficients.iter().enumerate().map(|(k, m)| (k + 1, m, 1.0)));
    for (matno, m, sign) in mats {
        for e in &m.entries {
            writeln!(out, "{} {} {} {} {}", matno, e.block + 1, e.row + 1, e.col + 1, num(sign * e.value)).unwrap();
        }
    }
    out
}

/// Parses sparse SDPA text written by [`export_standard`] or any other writer:
/// comment lines start with `*` or `"`, and separators may include `,`, `(`,
/// `)`, `{`, `}`. Diagonal (LP) blocks, given as negative sizes, are unsupported.
pub fn parse_standard(text: &str) -> Result<SdpProblem> {
    let mut lines = text
        .lines()
        .map(|l| l.trim())
        .enumerate()
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('*') && !l.starts_with('"'));
    let mut header = |what: &str| -> Result<(usize, Vec<String>)> {
        let (i, l) = lines.next().ok_or_else(|| anyhow!("missing {what}"))?;
        Ok((i + 1, tokens(l)))
    };
    let (ln, t) = header("mDIM")?;
    let m: usize = t.first().ok_or_else(|| anyhow!("line {ln}: empty mDIM"))?.parse().with_context(|| format!("line {ln}: mDIM"))?;
    let (ln, t) = header("nBLOCK")?;
    let nblock: usize = t.first().ok_or_else(|| anyhow!("line {ln}: empty nBLOCK"))?.parse().with_context(|| format!("line {ln}: nBLOCK"))?;
    let (ln, t) = header("block structure")?;
    let sizes: Vec<i64> = t.iter().take(nblock).map(|s| s.parse()).collect::<Result<_, _>>().with_context(|| format!("line {ln}: block sizes"))?;
    if sizes.len() != nblock {
        bail!("line {ln}: expected {nblock} block sizes");
    }
    if sizes.iter().any(|&s| s <= 0) {
        bail!("line {ln}: only positive (semidefinite) block sizes are supported");
    }
    let block_sizes: Vec<usize> = sizes.iter().map(|&s| s as usize).collect();
    let (ln, t) = header("objective")?;
    let c: Vec<f64> = t.iter().take(m).map(|s| s.parse()).collect::<Result<_, _>>().with_context(|| format!("line {ln}: objective"))?;
    if c.len() != m {
        bail!("line {ln}: expected {m} objective entries");
    }
    let mut constant = SparseSym::new();
    let mut coefficients = vec![SparseSym::new(); m];
    for (i, l) in lines {
        let ln = i + 1;
        let t = tokens(l);
        if t.len() < 5 {
            bail!("line {ln}: expected `matno blkno i j value`");
        }
        let idx: Vec<usize> = t[..4].iter().map(|s| s.parse()).collect::<Result<_, _>>().with_context(|| format!("line {ln}: indices"))?;
        let value: f64 = t[4].parse().with_context(|| format!("line {ln}: value"))?;
        let (matno, blk, r, col) = (idx[0], idx[1], idx[2], idx[3]);
        if matno > m || blk == 0 || blk > nblock || r == 0 || col == 0 {
            bail!("line {ln}: index out of range");
        }
        let n = block_sizes[blk - 1];
        if r > n || col > n {
            bail!("line {ln}: entry outside block {blk}");
        }
        let (row, col) = (r.min(col) - 1, r.max(col) - 1);
        let entry = |v| SymEntry { block: blk - 1, row, col, value: v };
        if matno == 0 {
            constant.entries.push(entry(-value));
        } else {
            coefficients[matno - 1].entries.push(entry(value));
        }
    }
    let problem = SdpProblem { block_sizes, constant, coefficients, objective: c.iter().map(|v| -v).collect() };
    problem.validate().map_err(|e| anyhow!("{e}"))?;
    Ok(problem)
}

fn tokens(line: &str) -> Vec<String> {
    line.split(|ch: char| ch.is_whitespace() || ",(){}".contains(ch))
        .filter(|s| !s.is_empty())
        .map(str::to_owned)
        .collect()
}
