use alloc::vec::Vec;

use num_bigint::BigInt;

use super::{Monomial, Polynomial, Rational};
use crate::error::{Error, Result};
use crate::scenario::{Correlator, LDS, STRATEGIES};

/// Rewrites `var^power -> tail`. The generator of the ideal is `var^power - tail`.
#[derive(Debug, Clone, PartialEq)]
pub struct RewriteRule {
    pub var: Correlator,
    pub power: u16,
    pub tail: Polynomial,
}

impl RewriteRule {
    pub fn lead(&self) -> Monomial {
        let mut e = [0; 5];
        e[self.var.index()] = self.power;
        Monomial(e)
    }

    pub fn generator(&self) -> Polynomial {
        &Polynomial::monomial(self.lead()) - &self.tail
    }

    fn applies_to(&self, m: &Monomial) -> bool {
        m.exponent(self.var) >= self.power
    }
}

/// Polynomials modulo an ideal whose generators have pairwise coprime leading
/// monomials that are pure powers, none of which divides another generator's tail
/// after reduction. Such generators already form a Gröbner basis, so rewriting
/// terminates in a unique normal form regardless of the order rules are applied.
#[derive(Debug, Clone, PartialEq)]
pub struct QuotientRing {
    parties: u32,
    rules: Vec<RewriteRule>,
}

impl QuotientRing {
    /// The ideal generated by `S00 - S0^2 + N` and `S11 - S1^2 + N`.
    pub fn correlator_variety(parties: u32) -> Result<Self> {
        if parties < 2 {
            return Err(Error::InvalidPartyCount(parties));
        }
        let n = Polynomial::from_int(parties as i64);
        let rules = alloc::vec![
            RewriteRule { var: Correlator::S0, power: 2, tail: &Polynomial::var(Correlator::S00) + &n },
            RewriteRule { var: Correlator::S1, power: 2, tail: &Polynomial::var(Correlator::S11) + &n },
        ];
        Ok(QuotientRing { parties, rules })
    }

    /// A custom triangular ideal.
    pub fn with_rules(parties: u32, rules: Vec<RewriteRule>) -> Self {
        QuotientRing { parties, rules }
    }

    pub fn parties(&self) -> u32 {
        self.parties
    }

    pub fn rules(&self) -> &[RewriteRule] {
        &self.rules
    }

    pub fn is_normal_monomial(&self, m: &Monomial) -> bool {
        !self.rules.iter().any(|r| r.applies_to(m))
    }

    pub fn is_normal(&self, p: &Polynomial) -> bool {
        p.terms().all(|(m, _)| self.is_normal_monomial(m))
    }

    /// Every (monomial, rule index) pair where a single rewrite can be applied.
    pub fn reducible_sites(&self, p: &Polynomial) -> Vec<(Monomial, usize)> {
        let mut out = Vec::new();
        for (m, _) in p.terms() {
            for (i, r) in self.rules.iter().enumerate() {
                if r.applies_to(m) {
                    out.push((*m, i));
                }
            }
        }
        out
    }

    /// Replaces one factor `lead` of the term at `m` by the rule's tail.
    pub fn rewrite_at(&self, p: &Polynomial, m: &Monomial, rule: usize) -> Polynomial {
        let r = &self.rules[rule];
        let coeff = p.coefficient(m);
        let Some(rest) = m.div(&r.lead()) else {
            return p.clone();
        };
        let mut out = p - &Polynomial::term(*m, coeff.clone());
        let replacement = r.tail.mul_monomial(&rest).scale(&coeff);
        out = &out + &replacement;
        out
    }

    /// Normal form of `p`.
    pub fn reduce(&self, p: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        let mut work: Vec<(Monomial, Rational)> = p.terms().map(|(m, c)| (*m, c.clone())).collect();
        while let Some((m, c)) = work.pop() {
            match self.rules.iter().find(|r| r.applies_to(&m)) {
                None => out.add_term(m, c),
                Some(r) => {
                    let rest = m.div(&r.lead()).expect("rule applies");
                    for (tm, tc) in r.tail.terms() {
                        work.push((tm.mul(&rest), tc * &c));
                    }
                }
            }
        }
        out
    }

    pub fn mul(&self, a: &Polynomial, b: &Polynomial) -> Polynomial {
        self.reduce(&(a * b))
    }
}

/// `(f1, f2) = (S00 - S0^2 + N, S11 - S1^2 + N)`.
pub fn ideal_generators(parties: u32) -> Result<(Polynomial, Polynomial)> {
    let ring = QuotientRing::correlator_variety(parties)?;
    let mut g = ring.rules().iter().map(|r| -&r.generator());
    Ok((g.next().expect("two rules"), g.next().expect("two rules")))
}

/// Normal-form monomials of degree at most `mu`, graded and ordered as [`Monomial`].
pub fn quotient_basis(mu: u32) -> Result<Vec<Monomial>> {
    if mu > 2 {
        return Err(Error::UnsupportedLevel(mu));
    }
    let mut out = Vec::new();
    let d = mu as u16;
    for e0 in 0..=d.min(1) {
        for e1 in 0..=d.min(1) {
            for e00 in 0..=d {
                for e01 in 0..=d {
                    for e11 in 0..=d {
                        let m = Monomial([e0, e1, e00, e01, e11]);
                        if m.degree() <= mu {
                            out.push(m);
                        }
                    }
                }
            }
        }
    }
    out.sort();
    Ok(out)
}

/// The polynomials `g_i` with `g_i(S(x)) = x_i` on the variety, obtained by inverting
/// the Hadamard map `(N, S1, S0, Z)` with `Z = S0 S1 - S01`. Signs follow the
/// strategy order of [`crate::scenario::enumerate_lds`].
pub fn constraint_polynomials(parties: u32) -> Result<[Polynomial; STRATEGIES]> {
    let ring = QuotientRing::correlator_variety(parties)?;
    let s0 = Polynomial::var(Correlator::S0);
    let s1 = Polynomial::var(Correlator::S1);
    let z = &(&s0 * &s1) - &Polynomial::var(Correlator::S01);
    let n = Polynomial::from_int(parties as i64);
    let quarter = Rational::new(BigInt::from(1), BigInt::from(4));
    Ok(LDS.map(|s| {
        let signed = |p: &Polynomial, sign: i8| if sign > 0 { p.clone() } else { -p };
        let sum = &(&(&n + &signed(&s1, s.outcome1)) + &signed(&s0, s.outcome0))
            + &signed(&z, s.outcome0 * s.outcome1);
        ring.reduce(&sum.scale(&quarter))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{int_vertex_correlators, vertex_correlators, Compositions, StrategyCounts};
    use num_traits::ToPrimitive;

    fn v(c: Correlator) -> Polynomial {
        Polynomial::var(c)
    }

    fn int(k: i64) -> Polynomial {
        Polynomial::from_int(k)
    }

    #[test]
    fn generators_for_ten_parties() {
        let (f1, f2) = ideal_generators(10).unwrap();
        let expect1 = &(&v(Correlator::S00) - &v(Correlator::S0).pow(2)) + &int(10);
        let expect2 = &(&v(Correlator::S11) - &v(Correlator::S1).pow(2)) + &int(10);
        assert_eq!(f1, expect1);
        assert_eq!(f2, expect2);
        for x in Compositions::new(10) {
            let s = int_vertex_correlators(&x).to_real();
            assert_eq!(f1.eval(&s.0), 0.0);
            assert_eq!(f2.eval(&s.0), 0.0);
        }
        let s = vertex_correlators(&StrategyCounts([1.25, 3.5, 0.75, 4.5]), 10).unwrap();
        assert!(f2.eval(&s.0).abs() < 1e-12);
    }

    #[test]
    fn reduction_examples() {
        let ring = QuotientRing::correlator_variety(10).unwrap();
        let s0 = v(Correlator::S0);
        let s1 = v(Correlator::S1);
        let s00 = v(Correlator::S00);
        assert_eq!(ring.reduce(&s0.pow(2)), &s00 + &int(10));
        assert_eq!(ring.reduce(&(&s0.pow(2) * &s1)), &(&s00 * &s1) + &(&int(10) * &s1));
        let expect = &(&s00.pow(2) + &(&int(20) * &s00)) + &int(100);
        assert_eq!(ring.reduce(&s0.pow(4)), expect);
    }

    #[test]
    fn basis_sizes() {
        let b0 = quotient_basis(0).unwrap();
        assert_eq!(b0, [Monomial::ONE]);
        let b1 = quotient_basis(1).unwrap();
        let expect: Vec<Monomial> = core::iter::once(Monomial::ONE)
            .chain(Correlator::ALL.into_iter().map(Monomial::var))
            .collect();
        assert_eq!(b1, expect);
        let b2 = quotient_basis(2).unwrap();
        // 15 products of two correlators, minus S0^2 and S1^2.
        assert_eq!(b2.len(), 6 + 13);
        assert_eq!(&b2[..6], &b1[..]);
        assert!(quotient_basis(3).is_err());
    }

    #[test]
    fn degree_two_basis_by_pairs() {
        // Independent enumeration: unordered pairs of correlators.
        let mut pairs = Vec::new();
        for i in 0..5 {
            for j in i..5 {
                let m = Monomial::var(Correlator::ALL[i]).mul(&Monomial::var(Correlator::ALL[j]));
                if !(i == j && i < 2) {
                    pairs.push(m);
                }
            }
        }
        let b2: Vec<_> = quotient_basis(2).unwrap().into_iter().filter(|m| m.degree() == 2).collect();
        assert_eq!(pairs, b2);
    }

    #[test]
    fn displayed_g1_matches() {
        let ring = QuotientRing::correlator_variety(10).unwrap();
        let s0 = v(Correlator::S0);
        let s1 = v(Correlator::S1);
        let quarter = Rational::new(1.into(), 4.into());
        let shown = &(&(&s0 + &s1) + &(&(&s0 * &s1) - &v(Correlator::S01)))
            + &(&s0.pow(2) - &v(Correlator::S00));
        let g = constraint_polynomials(10).unwrap();
        assert_eq!(ring.reduce(&shown.scale(&quarter)), g[0]);
    }

    #[test]
    fn constraint_polynomials_recover_counts() {
        let g = constraint_polynomials(10).unwrap();
        let s = int_vertex_correlators(&crate::scenario::IntStrategyCounts([3, 3, 2, 2]));
        let point = s.0.map(|k| Rational::from_integer(k.into()));
        let got: Vec<i64> = g.iter().map(|p| p.eval_exact(&point).to_i64().unwrap()).collect();
        assert_eq!(got, [3, 3, 2, 2]);
        let sum = g.iter().fold(Polynomial::zero(), |acc, p| &acc + p);
        assert_eq!(sum, int(10));
        let all_one = [10.0, 10.0, 90.0, 90.0, 90.0];
        assert_eq!(g[0].eval(&all_one), 10.0);
    }

    #[test]
    fn rewrite_at_single_step() {
        let ring = QuotientRing::correlator_variety(4).unwrap();
        let p = &v(Correlator::S0).pow(3) * &v(Correlator::S1).pow(2);
        let sites = ring.reducible_sites(&p);
        assert_eq!(sites.len(), 2);
        let once = ring.rewrite_at(&p, &sites[0].0, sites[0].1);
        assert_ne!(once, p);
        assert_eq!(ring.reduce(&once), ring.reduce(&p));
    }
}
