//! Exact classical bounds by streaming over the vertices.

use alloc::format;
use alloc::vec::Vec;
use core::ops::Range;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::Result;
use crate::ring::Rational;
use crate::scenario::{check_budget, int_vertex_correlators, Compositions, IntStrategyCounts, CORRELATOR_DIM};

/// Minimum of `alpha . S` over the vertices, held exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalMinimum {
    pub value: Rational,
    /// First vertex (in composition order) attaining the minimum.
    pub argmin: IntStrategyCounts,
}

impl ClassicalMinimum {
    pub fn to_f64(&self) -> f64 {
        self.value.to_f64().unwrap_or(f64::NAN)
    }
}

/// The rational with the shortest decimal expansion that rounds to `x`, so that
/// coefficients typed as `0.1` are treated as `1/10`.
pub fn decimal_rational(x: f64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    if x == 0.0 {
        return Some(Rational::zero());
    }
    let s = format!("{x:e}");
    let (mantissa, exp) = s.split_once('e')?;
    let exp: i64 = exp.parse().ok()?;
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let digits: BigInt = format!("{int}{frac}").parse().ok()?;
    let shift = exp - frac.len() as i64;
    let ten = BigInt::from(10u8);
    let pow = num_traits::pow(ten, shift.unsigned_abs() as usize);
    let mut r = if shift >= 0 { Rational::from_integer(digits * pow) } else { Rational::new(digits, pow) };
    if neg {
        r = -r;
    }
    Some(r)
}

/// Integer coefficients `k . alpha` with the smallest positive `k`.
fn integer_form(alpha: &[Rational; CORRELATOR_DIM]) -> (Vec<BigInt>, BigInt) {
    let denom = alpha.iter().fold(BigInt::one(), |acc, a| acc.lcm(a.denom()));
    let ints = alpha.iter().map(|a| (a * Rational::from_integer(denom.clone())).to_integer()).collect();
    (ints, denom)
}

fn minimum_over(
    ints: &[BigInt],
    denom: &BigInt,
    parties: u32,
    first: Range<u32>,
) -> Option<ClassicalMinimum> {
    // Correlators are at most N^2 in magnitude; i128 holds every partial sum when
    // the coefficients are below 2^126 / (5 N^2).
    let n2 = (parties as i128) * (parties as i128) + parties as i128;
    let limit = i128::MAX / (5 * n2.max(1)) / 2;
    let small: Option<Vec<i128>> =
        ints.iter().map(|a| a.to_i128().filter(|v| v.unsigned_abs() <= limit as u128)).collect();
    let mut best: Option<(BigInt, IntStrategyCounts)> = None;
    match small {
        Some(a) => {
            let mut cur: Option<(i128, IntStrategyCounts)> = None;
            for x in Compositions::with_first_range(parties, first) {
                let s = int_vertex_correlators(&x).0;
                let v: i128 = a.iter().zip(s).map(|(a, s)| a * s as i128).sum();
                if cur.is_none_or(|(b, _)| v < b) {
                    cur = Some((v, x));
                }
            }
            if let Some((v, x)) = cur {
                best = Some((BigInt::from(v), x));
            }
        }
        None => {
            for x in Compositions::with_first_range(parties, first) {
                let s = int_vertex_correlators(&x).0;
                let v: BigInt = ints.iter().zip(s).map(|(a, s)| a * BigInt::from(s)).sum();
                if best.as_ref().is_none_or(|(b, _)| &v < b) {
                    best = Some((v, x));
                }
            }
        }
    }
    best.map(|(v, argmin)| ClassicalMinimum { value: Rational::new(v, denom.clone()), argmin })
}

/// Exact minimum of `alpha . S` over the vertices whose first strategy count lies
/// in `first`; `None` when the range is empty. Disjoint ranges reduce by `min`.
pub fn classical_minimum_range(
    alpha: &[Rational; CORRELATOR_DIM],
    parties: u32,
    first: Range<u32>,
) -> Result<Option<ClassicalMinimum>> {
    check_budget(parties)?;
    let (ints, denom) = integer_form(alpha);
    Ok(minimum_over(&ints, &denom, parties, first))
}

/// Exact minimum of `alpha . S` over all vertices.
pub fn classical_minimum_exact(alpha: &[Rational; CORRELATOR_DIM], parties: u32) -> Result<ClassicalMinimum> {
    Ok(classical_minimum_range(alpha, parties, 0..parties + 1)?.expect("at least one vertex"))
}

/// Converts float coefficients through their shortest decimal form.
pub fn rational_alpha(alpha: &[f64; CORRELATOR_DIM]) -> Option<[Rational; CORRELATOR_DIM]> {
    let v: Option<Vec<Rational>> = alpha.iter().map(|&a| decimal_rational(a)).collect();
    v.and_then(|v| v.try_into().ok())
}

/// Reduces per-chunk minima; ties keep the earliest vertex.
pub fn merge_minima<I: IntoIterator<Item = Option<ClassicalMinimum>>>(parts: I) -> Option<ClassicalMinimum> {
    parts.into_iter().flatten().fold(None, |acc: Option<ClassicalMinimum>, m| match acc {
        Some(a) if a.value < m.value || (a.value == m.value && a.argmin <= m.argmin) => Some(a),
        _ => Some(m),
    })
}

/// Whether `alpha . S + beta >= 0` on every vertex, decided exactly; `beta` is
/// taken at its decimal value.
pub fn is_valid_exact(min: &ClassicalMinimum, beta: f64) -> bool {
    decimal_rational(beta).is_some_and(|b| !(&min.value + b).is_negative())
}
