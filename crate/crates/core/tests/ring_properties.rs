//! Property checks of the normal form modulo the correlator ideal, against an
//! independent oracle: exact evaluation on the variety.

use num_bigint::BigInt;
use pibell_core::ring::{constraint_polynomials, Monomial, Polynomial, QuotientRing, Rational};
use pibell_core::scenario::{Correlator, CORRELATOR_DIM};
use proptest::prelude::*;

const N: u32 = 7;

fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Correlators at rational counts, computed straight from the definitions.
fn correlators(x: [Rational; 4]) -> [Rational; CORRELATOR_DIM] {
    let [x1, x2, x3, x4] = x;
    let n = &x1 + &x2 + &x3 + &x4;
    let s1 = &x1 + &x2 - &x3 - &x4;
    let s0 = &x1 - &x2 + &x3 - &x4;
    let z = &x1 - &x2 - &x3 + &x4;
    [s0.clone(), s1.clone(), &s0 * &s0 - &n, &s0 * &s1 - z, &s1 * &s1 - &n]
}

fn polynomial() -> impl Strategy<Value = Polynomial> {
    let exps = (0u16..=6, 0u16..=6, 0u16..=3, 0u16..=3, 0u16..=3);
    prop::collection::vec((exps, -9i64..=9), 1..8).prop_map(|terms| {
        let mut p = Polynomial::zero();
        for ((a, b, c, d, e), k) in terms {
            let mut m = Monomial([a, b, c, d, e]);
            // Trim to total degree at most 6.
            while m.degree() > 6 {
                let i = (0..CORRELATOR_DIM).max_by_key(|&i| m.0[i]).unwrap();
                m.0[i] -= 1;
            }
            p.add_term(m, Rational::from_integer(k.into()));
        }
        p
    })
}

fn rational() -> impl Strategy<Value = Rational> {
    (-40i64..=40, 1i64..=12).prop_map(|(n, d)| rat(n, d))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, ..ProptestConfig::default() })]

    #[test]
    fn normal_form_is_confluent_and_idempotent(p in polynomial(), order in prop::collection::vec(any::<u32>(), 64)) {
        let ring = QuotientRing::correlator_variety(N).unwrap();
        let r = ring.reduce(&p);
        prop_assert!(ring.is_normal(&r));
        prop_assert_eq!(ring.reduce(&r), r.clone());
        // Rewriting at arbitrary sites in arbitrary order reaches the same form.
        let mut q = p.clone();
        let mut k = 0usize;
        loop {
            let sites = ring.reducible_sites(&q);
            if sites.is_empty() {
                break;
            }
            let pick = order[k % order.len()] as usize % sites.len();
            k += 1;
            q = ring.rewrite_at(&q, &sites[pick].0, sites[pick].1);
        }
        prop_assert_eq!(q, r.clone());
        // p and its normal form agree on the variety (with the right N).
        let x = [rat(3, 2), rat(2, 1), rat(5, 2), rat(1, 1)];
        let s = correlators(x);
        prop_assert_eq!(p.eval_exact(&s), r.eval_exact(&s));
    }

    #[test]
    fn constraint_polynomials_return_counts(x1 in rational(), x2 in rational(), x3 in rational()) {
        let n = Rational::from_integer(BigInt::from(N));
        let x4 = &n - &x1 - &x2 - &x3;
        let x = [x1, x2, x3, x4];
        let s = correlators(x.clone());
        let g = constraint_polynomials(N).unwrap();
        for i in 0..4 {
            prop_assert_eq!(g[i].eval_exact(&s), x[i].clone());
        }
    }
}

#[test]
fn variables_are_normal() {
    let ring = QuotientRing::correlator_variety(N).unwrap();
    for c in Correlator::ALL {
        let v = Polynomial::var(c);
        assert_eq!(ring.reduce(&v), v);
    }
    let s0 = Polynomial::var(Correlator::S0);
    let d = &ring.reduce(&(&s0 * &s0)) - &(&Polynomial::var(Correlator::S00) + &Polynomial::from_int(N as i64));
    assert!(d.is_zero());
}
