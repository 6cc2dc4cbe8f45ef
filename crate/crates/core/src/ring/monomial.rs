use core::cmp::Ordering;
use core::fmt;

use crate::scenario::{Correlator, CORRELATOR_DIM};

/// Product of powers of `S0, S1, S00, S01, S11`.
///
/// Ordered by total degree first; within a degree, larger exponents on earlier
/// variables come first, so `S0 S1 < S0 S00 < ... < S11^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Monomial(pub [u16; CORRELATOR_DIM]);

impl Monomial {
    pub const ONE: Monomial = Monomial([0; CORRELATOR_DIM]);

    pub fn var(c: Correlator) -> Self {
        let mut e = [0; CORRELATOR_DIM];
        e[c.index()] = 1;
        Monomial(e)
    }

    pub fn exponent(&self, c: Correlator) -> u16 {
        self.0[c.index()]
    }

    /// Degree with every correlator variable counted once.
    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    /// Degree with `k`-body correlators counted `k` times; the monomial grows like
    /// `N^weight` on the variety.
    pub fn weight(&self) -> u32 {
        Correlator::ALL.iter().map(|&c| self.exponent(c) as u32 * c.order()).sum()
    }

    pub fn is_one(&self) -> bool {
        self.0 == [0; CORRELATOR_DIM]
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut e = self.0;
        for (a, b) in e.iter_mut().zip(other.0) {
            *a += b;
        }
        Monomial(e)
    }

    /// `self / other` when `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut e = self.0;
        for (a, b) in e.iter_mut().zip(other.0) {
            *a = a.checked_sub(b)?;
        }
        Some(Monomial(e))
    }

    /// The correlator when the monomial is a single variable.
    pub fn as_var(&self) -> Option<Correlator> {
        if self.degree() != 1 {
            return None;
        }
        Correlator::ALL.into_iter().find(|c| self.exponent(*c) == 1)
    }

    pub fn eval(&self, point: &[f64; CORRELATOR_DIM]) -> f64 {
        let mut acc = 1.0;
        for (x, &e) in point.iter().zip(self.0.iter()) {
            for _ in 0..e {
                acc *= x;
            }
        }
        acc
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return f.write_str("1");
        }
        let mut first = true;
        for c in Correlator::ALL {
            let e = self.exponent(c);
            if e == 0 {
                continue;
            }
            if !first {
                f.write_str("*")?;
            }
            first = false;
            write!(f, "{}", c)?;
            if e > 1 {
                write!(f, "^{}", e)?;
            }
        }
        Ok(())
    }
}
