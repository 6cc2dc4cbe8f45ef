//! Float functions that live in `std` but not in `core`.

use num_traits::Float;

#[inline]
pub fn sqrt(x: f64) -> f64 {
    Float::sqrt(x)
}

#[inline]
pub fn powi(x: f64, n: i32) -> f64 {
    Float::powi(x, n)
}

#[inline]
pub fn sin_cos(x: f64) -> (f64, f64) {
    Float::sin_cos(x)
}
