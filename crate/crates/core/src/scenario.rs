//! Bell scenario with `d = 2` dichotomic settings per party and correlators up to
//! two bodies, local deterministic strategies, and the map from strategy counts to
//! symmetric correlators.

use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;

use crate::error::{Error, Result};

/// Upper bound on the number of vertices any enumeration is allowed to visit.
pub const VERTEX_BUDGET: u128 = 100_000_000;

/// Settings per party supported by this crate.
pub const SETTINGS: usize = 2;
/// Maximal correlator order supported by this crate.
pub const MAX_ORDER: usize = 2;
/// Number of local deterministic strategies per party, `2^d`.
pub const STRATEGIES: usize = 4;
/// Dimension of the correlator space, `binomial(d + K, d) - 1`.
pub const CORRELATOR_DIM: usize = 5;

/// The five symmetric correlators, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Correlator {
    S0,
    S1,
    S00,
    S01,
    S11,
}

impl Correlator {
    pub const ALL: [Correlator; CORRELATOR_DIM] =
        [Correlator::S0, Correlator::S1, Correlator::S00, Correlator::S01, Correlator::S11];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Correlator::S0 => "S0",
            Correlator::S1 => "S1",
            Correlator::S00 => "S00",
            Correlator::S01 => "S01",
            Correlator::S11 => "S11",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }

    /// Number of bodies the correlator involves. A `k`-body correlator grows like `N^k`.
    pub fn order(self) -> u32 {
        match self {
            Correlator::S0 | Correlator::S1 => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for Correlator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A Bell scenario: `parties` observers, each choosing one of two dichotomic settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scenario {
    parties: u32,
    settings: usize,
    max_order: usize,
}

impl Scenario {
    pub fn new(parties: u32) -> Result<Self> {
        Self::with_settings(parties, SETTINGS, MAX_ORDER)
    }

    pub fn with_settings(parties: u32, settings: usize, max_order: usize) -> Result<Self> {
        if parties < 2 {
            return Err(Error::InvalidPartyCount(parties));
        }
        if settings != SETTINGS {
            return Err(Error::UnsupportedSettings(settings));
        }
        if max_order != MAX_ORDER {
            return Err(Error::UnsupportedOrder(max_order));
        }
        Ok(Scenario { parties, settings, max_order })
    }

    pub fn parties(&self) -> u32 {
        self.parties
    }

    pub fn settings(&self) -> usize {
        self.settings
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn strategies(&self) -> usize {
        1 << self.settings
    }

    pub fn correlator_dim(&self) -> usize {
        binomial((self.settings + self.max_order) as u128, self.settings as u128) as usize - 1
    }

    /// Number of symmetric vertices, `binomial(N + m - 1, m - 1)`.
    pub fn vertex_count(&self) -> u128 {
        vertex_count(self.parties)
    }
}

/// A local deterministic strategy: the outcome of measurement 0 and measurement 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Strategy {
    pub outcome0: i8,
    pub outcome1: i8,
}

/// The four local deterministic strategies, ordered to match the rows of the
/// Hadamard map `(N, S1, S0, Z) = H x`.
pub fn enumerate_lds(settings: usize) -> Result<Vec<Strategy>> {
    if settings != SETTINGS {
        return Err(Error::UnsupportedSettings(settings));
    }
    Ok(LDS.to_vec())
}

pub(crate) const LDS: [Strategy; STRATEGIES] = [
    Strategy { outcome0: 1, outcome1: 1 },
    Strategy { outcome0: -1, outcome1: 1 },
    Strategy { outcome0: 1, outcome1: -1 },
    Strategy { outcome0: -1, outcome1: -1 },
];

/// How many parties follow each strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyCounts(pub [f64; STRATEGIES]);

/// Integer strategy counts, i.e. a vertex of the symmetric local polytope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntStrategyCounts(pub [u32; STRATEGIES]);

impl StrategyCounts {
    /// Accepts counts that are non-negative and sum to `parties` within `1e-9` relative.
    pub fn new(x: [f64; STRATEGIES], parties: u32) -> Result<Self> {
        let n = parties as f64;
        if x.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::NegativeCounts);
        }
        let sum: f64 = x.iter().sum();
        if (sum - n).abs() > 1e-9 * n.max(1.0) {
            return Err(Error::CountsSum { sum, parties });
        }
        Ok(StrategyCounts(x))
    }
}

impl IntStrategyCounts {
    pub fn new(x: [u32; STRATEGIES], parties: u32) -> Result<Self> {
        let sum: u64 = x.iter().map(|&v| v as u64).sum();
        if sum != parties as u64 {
            return Err(Error::CountsSum { sum: sum as f64, parties });
        }
        Ok(IntStrategyCounts(x))
    }

    pub fn to_real(self) -> StrategyCounts {
        StrategyCounts(self.0.map(|v| v as f64))
    }
}

/// The five symmetric correlators `(S0, S1, S00, S01, S11)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CorrelatorVector(pub [f64; CORRELATOR_DIM]);

impl CorrelatorVector {
    pub fn new(s0: f64, s1: f64, s00: f64, s01: f64, s11: f64) -> Self {
        CorrelatorVector([s0, s1, s00, s01, s11])
    }

    pub fn get(&self, c: Correlator) -> f64 {
        self.0[c.index()]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        CorrelatorVector(self.0.map(|v| v * factor))
    }

    /// Checks the coordinate ranges every point of the polytope obeys.
    pub fn within_polytope_bounds(&self, parties: u32, tol: f64) -> bool {
        let n = parties as f64;
        let [s0, s1, s00, s01, s11] = self.0;
        let two_body = n * n - n;
        s0.abs() <= n + tol
            && s1.abs() <= n + tol
            && s00 >= -n - tol
            && s00 <= two_body + tol
            && s11 >= -n - tol
            && s11 <= two_body + tol
            && s01.abs() <= two_body + tol
    }
}

/// Correlators of a vertex, held exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct IntCorrelators(pub [i64; CORRELATOR_DIM]);

impl IntCorrelators {
    pub fn to_real(self) -> CorrelatorVector {
        CorrelatorVector(self.0.map(|v| v as f64))
    }
}

/// Hadamard coordinates `(S1, S0, Z)` of real counts.
fn hadamard(x: &[f64; STRATEGIES]) -> (f64, f64, f64) {
    let [x1, x2, x3, x4] = *x;
    (x1 + x2 - x3 - x4, x1 - x2 + x3 - x4, x1 - x2 - x3 + x4)
}

/// Correlators at (possibly real) strategy counts.
pub fn vertex_correlators(x: &StrategyCounts, parties: u32) -> Result<CorrelatorVector> {
    let x = StrategyCounts::new(x.0, parties)?;
    Ok(correlators_unchecked(&x.0, parties as f64))
}

pub(crate) fn correlators_unchecked(x: &[f64; STRATEGIES], n: f64) -> CorrelatorVector {
    let (s1, s0, z) = hadamard(x);
    CorrelatorVector([s0, s1, s0 * s0 - n, s0 * s1 - z, s1 * s1 - n])
}

/// Exact correlators of an integer vertex.
pub fn int_vertex_correlators(x: &IntStrategyCounts) -> IntCorrelators {
    let [x1, x2, x3, x4] = x.0.map(|v| v as i64);
    let n = x1 + x2 + x3 + x4;
    let s1 = x1 + x2 - x3 - x4;
    let s0 = x1 - x2 + x3 - x4;
    let z = x1 - x2 - x3 + x4;
    IntCorrelators([s0, s1, s0 * s0 - n, s0 * s1 - z, s1 * s1 - n])
}

/// `binomial(n, k)` in exact integer arithmetic.
pub fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Number of compositions of `parties` into four non-negative parts.
pub fn vertex_count(parties: u32) -> u128 {
    binomial(parties as u128 + 3, 3)
}

pub(crate) fn check_budget(parties: u32) -> Result<()> {
    let count = vertex_count(parties);
    if count > VERTEX_BUDGET {
        return Err(Error::BudgetExceeded { vertices: count, budget: VERTEX_BUDGET });
    }
    Ok(())
}

/// Streams the compositions of `N` into four non-negative parts in lexicographic
/// order, restricted to first components in `first`.
#[derive(Debug, Clone)]
pub struct Compositions {
    parties: u32,
    first_end: u32,
    next: Option<[u32; STRATEGIES]>,
}

impl Compositions {
    pub fn new(parties: u32) -> Self {
        Self::with_first_range(parties, 0..parties + 1)
    }

    /// Compositions whose first component lies in `first`. Disjoint ranges give
    /// disjoint chunks, so workers can split the space by first component.
    pub fn with_first_range(parties: u32, first: Range<u32>) -> Self {
        let end = first.end.min(parties + 1);
        let next = (first.start < end).then(|| [first.start, 0, 0, parties - first.start]);
        Compositions { parties, first_end: end, next }
    }
}

impl Iterator for Compositions {
    type Item = IntStrategyCounts;

    fn next(&mut self) -> Option<IntStrategyCounts> {
        let cur = self.next?;
        let [a, b, c, d] = cur;
        let rest = self.parties - a;
        self.next = if d > 0 {
            Some([a, b, c + 1, d - 1])
        } else if b < rest {
            Some([a, b + 1, 0, rest - b - 1])
        } else if a + 1 < self.first_end {
            Some([a + 1, 0, 0, rest - 1])
        } else {
            None
        };
        Some(IntStrategyCounts(cur))
    }
}

/// Splits the composition space into at most `chunks` ranges of first components
/// with roughly equal vertex counts.
pub fn chunk_ranges(parties: u32, chunks: usize) -> Vec<Range<u32>> {
    let chunks = chunks.max(1) as u128;
    let total = vertex_count(parties);
    let mut out = Vec::new();
    let mut start = 0u32;
    let mut acc: u128 = 0;
    let mut target = total.div_ceil(chunks);
    for a in 0..=parties {
        // Number of compositions with first component `a`.
        acc += binomial((parties - a) as u128 + 2, 2);
        if acc >= target || a == parties {
            out.push(start..a + 1);
            start = a + 1;
            target = target.saturating_add(total.div_ceil(chunks));
        }
    }
    out
}

/// Every vertex of the symmetric local polytope, with its exact correlators.
pub fn enumerate_vertices(parties: u32) -> Result<Vec<(IntStrategyCounts, IntCorrelators)>> {
    check_budget(parties)?;
    Ok(Compositions::new(parties).map(|x| (x, int_vertex_correlators(&x))).collect())
}

/// Correlators of the barycenter of all vertices: uniform compositions have
/// `E[S0] = E[S1] = E[Z] = 0` and `E[S0^2] = E[S1^2] = N(N+4)/5`.
pub fn vertex_barycenter(parties: u32) -> CorrelatorVector {
    let n = parties as f64;
    let two = n * (n - 1.0) / 5.0;
    CorrelatorVector([0.0, 0.0, two, 0.0, two])
}
