//! Level-`mu` moment matrices `Gamma_i = g_i b b^T mod I` and their linearization
//! `Gamma = sum_j y_j Gamma_j` over the normal-form monomials `y_j`.

mod assemble;

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::ring::{constraint_polynomials, quotient_basis, Monomial, Polynomial, QuotientRing, Rational};
use crate::scenario::{Correlator, CorrelatorVector, CORRELATOR_DIM};
use crate::sdp::SparseSym;

pub use assemble::{assemble_feasibility, assemble_lambda_max, Assembly, ProblemKind};

/// How the multipliers of the constraint polynomials are parameterized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MultiplierMode {
    /// One s.o.s. multiplier per `g_i`: blocks `Gamma_0, ..., Gamma_4`.
    #[default]
    Independent,
    /// One multiplier shared by all `g_i`. Since `sum_i g_i = N`, the certificate
    /// collapses to `sigma_0 + N sigma`, and the only block left is `Gamma_0`.
    Shared,
}

/// One block `reduce(g b b^T)`, upper triangle stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentBlock {
    pub multiplier: Polynomial,
    size: usize,
    entries: Vec<Polynomial>,
    /// Exponent of `N` in the conditioning factor of the whole block.
    scale_power: i32,
}

impl MomentBlock {
    pub fn size(&self) -> usize {
        self.size
    }

    /// Entry `(a, b)` in either order.
    pub fn entry(&self, a: usize, b: usize) -> &Polynomial {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        &self.entries[upper_index(self.size, a, b)]
    }
}

fn upper_index(n: usize, a: usize, b: usize) -> usize {
    a * n - a * (a + 1) / 2 + b
}

/// `N^p` for possibly negative `p`.
fn n_pow(n: u32, p: i32) -> Rational {
    let base = Rational::from_integer(BigInt::from(n));
    if p >= 0 {
        num_traits::pow(base, p as usize)
    } else {
        num_traits::pow(base.recip(), (-p) as usize)
    }
}

/// Linearized block-diagonal moment matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTemplate {
    parties: u32,
    mu: u32,
    mode: MultiplierMode,
    basis: Vec<Monomial>,
    blocks: Vec<MomentBlock>,
    y_index: Vec<Monomial>,
    /// Exact unconditioned coefficient matrices, `(block, row, col, value)`, `row <= col`.
    exact: Vec<Vec<(usize, usize, usize, Rational)>>,
    /// Whether column `j` is linearly independent of the columns before it.
    independent: Vec<bool>,
    conditioned: bool,
    columns: Vec<SparseSym>,
    scaling: Vec<f64>,
}

/// Builds the independent-multiplier template.
pub fn build_template(mu: u32, parties: u32) -> Result<MomentTemplate> {
    build_template_with(mu, parties, MultiplierMode::Independent)
}

pub fn build_template_with(mu: u32, parties: u32, mode: MultiplierMode) -> Result<MomentTemplate> {
    if !(1..=2).contains(&mu) {
        return Err(Error::UnsupportedLevel(mu));
    }
    let ring = QuotientRing::correlator_variety(parties)?;
    let basis = quotient_basis(mu)?;
    let n = basis.len();
    let mut multipliers = vec![Polynomial::from_int(1)];
    if mode == MultiplierMode::Independent {
        multipliers.extend(constraint_polynomials(parties)?);
    }

    let mut blocks = Vec::with_capacity(multipliers.len());
    for (i, g) in multipliers.into_iter().enumerate() {
        let mut entries = Vec::with_capacity(n * (n + 1) / 2);
        for a in 0..n {
            for b in a..n {
                let m = basis[a].mul(&basis[b]);
                entries.push(ring.reduce(&g.mul_monomial(&m)));
            }
        }
        let scale_power = if i == 0 { 0 } else { -2 };
        blocks.push(MomentBlock { multiplier: g, size: n, entries, scale_power });
    }

    let mut monomials: BTreeMap<Monomial, ()> = BTreeMap::new();
    for blk in &blocks {
        for p in &blk.entries {
            for (m, _) in p.terms() {
                monomials.insert(*m, ());
            }
        }
    }
    monomials.insert(Monomial::ONE, ());
    let y_index: Vec<Monomial> = monomials.into_keys().collect();
    let position: BTreeMap<Monomial, usize> = y_index.iter().enumerate().map(|(j, m)| (*m, j)).collect();

    let mut exact = vec![Vec::new(); y_index.len()];
    for (bi, blk) in blocks.iter().enumerate() {
        for a in 0..n {
            for b in a..n {
                for (m, c) in blk.entry(a, b).terms() {
                    exact[position[m]].push((bi, a, b, c.clone()));
                }
            }
        }
    }
    let independent = independent_columns(&exact, n);

    let mut template = MomentTemplate {
        parties,
        mu,
        mode,
        basis,
        blocks,
        y_index,
        exact,
        independent,
        conditioned: false,
        columns: Vec::new(),
        scaling: Vec::new(),
    };
    template.refresh_columns();
    Ok(template)
}

/// Greedy exact rank test: column `j` is kept when it is not a rational
/// combination of the kept columns before it.
fn independent_columns(exact: &[Vec<(usize, usize, usize, Rational)>], n: usize) -> Vec<bool> {
    let key = |b: usize, r: usize, c: usize| (b * n + r) * n + c;
    // Reduced basis vectors with their pivot keys; later vectors vanish on earlier pivots.
    let mut reduced: Vec<(usize, BTreeMap<usize, Rational>)> = Vec::new();
    let mut out = Vec::with_capacity(exact.len());
    for col in exact {
        let mut v: BTreeMap<usize, Rational> = BTreeMap::new();
        for (b, r, c, x) in col {
            v.insert(key(*b, *r, *c), x.clone());
        }
        for (pivot, u) in &reduced {
            let Some(f) = v.get(pivot).cloned() else { continue };
            for (k, x) in u {
                let e = v.entry(*k).or_insert_with(Rational::zero);
                *e -= &f * x;
                if e.is_zero() {
                    v.remove(k);
                }
            }
        }
        match v.iter().next().map(|(k, x)| (*k, x.clone())) {
            Some((pivot, lead)) => {
                for x in v.values_mut() {
                    *x /= &lead;
                }
                reduced.push((pivot, v));
                out.push(true);
            }
            None => out.push(false),
        }
    }
    out
}

impl MomentTemplate {
    pub fn parties(&self) -> u32 {
        self.parties
    }

    pub fn mu(&self) -> u32 {
        self.mu
    }

    pub fn mode(&self) -> MultiplierMode {
        self.mode
    }

    /// The basis `b_mu`.
    pub fn basis(&self) -> &[Monomial] {
        &self.basis
    }

    pub fn blocks(&self) -> &[MomentBlock] {
        &self.blocks
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.size).collect()
    }

    /// Monomials `y_j`; `y_index()[0]` is the constant 1.
    pub fn y_index(&self) -> &[Monomial] {
        &self.y_index
    }

    pub fn position(&self, m: &Monomial) -> Option<usize> {
        self.y_index.binary_search(m).ok()
    }

    /// Position of a correlator's degree-one monomial.
    pub fn coordinate(&self, c: Correlator) -> usize {
        self.position(&Monomial::var(c)).expect("correlators occur in every block 0")
    }

    pub fn is_conditioned(&self) -> bool {
        self.conditioned
    }

    /// Whether `y_j` carries a column of its own; dependent columns are combinations of
    /// earlier ones and are dropped from the assembled problems.
    pub fn is_independent(&self, j: usize) -> bool {
        self.independent[j]
    }

    /// Coefficient matrices `Gamma_j` in the current scaling.
    pub fn columns(&self) -> &[SparseSym] {
        &self.columns
    }

    /// `y_j = scaling[j] * yhat_j`, where `yhat` are the variables of [`Self::columns`].
    pub fn scaling(&self) -> &[f64] {
        &self.scaling
    }

    /// Exact unconditioned entries of `Gamma_j`.
    pub fn exact_column(&self, j: usize) -> &[(usize, usize, usize, Rational)] {
        &self.exact[j]
    }

    /// Exponent of `N` in the conditioning factor of entry `(a, b)` of block `blk`
    /// for column `j`; zero when unconditioned.
    fn conditioning_power(&self, blk: usize, a: usize, b: usize, j: usize) -> i32 {
        if !self.conditioned {
            return 0;
        }
        self.blocks[blk].scale_power - self.basis[a].weight() as i32 - self.basis[b].weight() as i32
            + self.y_index[j].weight() as i32
    }

    /// The factor `s_blk D_a D_b` of the diagonal congruence applied to entry
    /// `(a, b)` of block `blk`.
    pub(crate) fn congruence_factor(&self, blk: usize, a: usize, b: usize) -> Rational {
        if !self.conditioned {
            return Rational::one();
        }
        let p = self.blocks[blk].scale_power - self.basis[a].weight() as i32 - self.basis[b].weight() as i32;
        n_pow(self.parties, p)
    }

    fn refresh_columns(&mut self) {
        let mut columns = Vec::with_capacity(self.exact.len());
        for j in 0..self.exact.len() {
            let mut s = SparseSym::new();
            for (b, r, c, x) in &self.exact[j] {
                let f = x * n_pow(self.parties, self.conditioning_power(*b, *r, *c, j));
                s.push(*b, *r, *c, f.to_f64().unwrap_or(f64::NAN));
            }
            columns.push(s);
        }
        self.columns = columns;
        self.scaling = self
            .y_index
            .iter()
            .map(|m| if self.conditioned { n_pow(self.parties, m.weight() as i32).to_f64().unwrap() } else { 1.0 })
            .collect();
    }

    /// Raw moments `y_j = m_j(S)` of a point of the variety.
    pub fn moment_vector(&self, s: &CorrelatorVector) -> Vec<f64> {
        self.y_index.iter().map(|m| m.eval(&s.0)).collect()
    }

    /// `sum_j (y_j / scaling_j) Gamma_j` for raw moments `y`, in the current scaling.
    pub fn evaluate(&self, y: &[f64]) -> Vec<DMatrix<f64>> {
        let mut out: Vec<DMatrix<f64>> = self.blocks.iter().map(|b| DMatrix::zeros(b.size, b.size)).collect();
        for ((col, &yj), s) in self.columns.iter().zip(y).zip(&self.scaling) {
            col.add_to(&mut out, yj / s);
        }
        out
    }

    /// Exact unconditioned `sum_j y_j Gamma_j` as dense row-major blocks.
    pub fn evaluate_exact(&self, y: &[Rational]) -> Vec<Vec<Rational>> {
        let mut out: Vec<Vec<Rational>> =
            self.blocks.iter().map(|b| vec![Rational::zero(); b.size * b.size]).collect();
        for (col, yj) in self.exact.iter().zip(y) {
            for (b, r, c, x) in col {
                let n = self.blocks[*b].size;
                let v = x * yj;
                out[*b][r * n + c] += &v;
                if r != c {
                    out[*b][c * n + r] += &v;
                }
            }
        }
        out
    }

    /// Entry polynomials evaluated at the monomial values `y`, exactly.
    pub fn evaluate_entries_exact(&self, y: &[Rational]) -> Vec<Vec<Rational>> {
        let lookup: BTreeMap<Monomial, &Rational> = self.y_index.iter().copied().zip(y).collect();
        self.blocks
            .iter()
            .map(|blk| {
                let n = blk.size;
                let mut m = vec![Rational::zero(); n * n];
                for a in 0..n {
                    for b in 0..n {
                        let mut acc = Rational::zero();
                        for (mono, c) in blk.entry(a, b).terms() {
                            acc += c * lookup[mono];
                        }
                        m[a * n + b] = acc;
                    }
                }
                m
            })
            .collect()
    }

    /// Largest coefficient magnitude over all columns, a quick conditioning gauge.
    pub fn coefficient_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for col in &self.columns {
            for e in &col.entries {
                let v = e.value.abs();
                if v > 0.0 {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
        }
        (lo, hi)
    }
}

/// Rescales `y_j` by `N^-weight(y_j)` and conjugates each block by the diagonal
/// `N^-weight(b_a)` (times `N^-2` for the `g_i` blocks), so all coefficients are of
/// order one. Positive semidefiniteness is unchanged.
pub fn condition_template(template: &MomentTemplate) -> MomentTemplate {
    let mut t = template.clone();
    t.conditioned = true;
    t.refresh_columns();
    t
}

/// Positions of `S0, S1, S00, S01, S11` in the monomial index.
pub fn correlator_positions(template: &MomentTemplate) -> [usize; CORRELATOR_DIM] {
    Correlator::ALL.map(|c| template.coordinate(c))
}
