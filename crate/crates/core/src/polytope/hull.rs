//! Planar projections of the polytope.

use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{Error, Result};
use crate::functional::LinearFunctional;
use crate::math;
use crate::scenario::{check_budget, int_vertex_correlators, Compositions};

/// Convex polygon, vertices counter-clockwise with no collinear triples.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polygon {
    pub vertices: Vec<[f64; 2]>,
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Andrew's monotone chain; drops points within `1e-12` (relative) of an edge.
pub fn convex_hull(mut pts: Vec<[f64; 2]>) -> Polygon {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return Polygon { vertices: pts };
    }
    let scale = pts.iter().map(|p| p[0].abs().max(p[1].abs())).fold(1.0, f64::max);
    let eps = 1e-12 * scale * scale;
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: &mut dyn Iterator<Item = &[f64; 2]> =
            if pass == 0 { &mut pts.iter() } else { &mut pts.iter().rev() };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= eps {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    Polygon { vertices: hull }
}

impl Polygon {
    /// `max_v (cos t, sin t) . v`.
    pub fn support(&self, theta: f64) -> f64 {
        let (s, c) = math::sin_cos(theta);
        self.vertices.iter().map(|v| c * v[0] + s * v[1]).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        (0..n).map(|i| cross([0.0, 0.0], self.vertices[i], self.vertices[(i + 1) % n])).sum::<f64>() / 2.0
    }

    /// Whether `p` lies inside or within `tol` of the boundary.
    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        let n = self.vertices.len();
        if n < 3 {
            return false;
        }
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let len = math::sqrt((b[0] - a[0]) * (b[0] - a[0]) + (b[1] - a[1]) * (b[1] - a[1]));
            cross(a, b, p) >= -tol * len
        })
    }

    /// Distance from the origin to the boundary along angle `theta`; `None` unless
    /// the origin is strictly inside.
    pub fn radial(&self, theta: f64) -> Option<f64> {
        let (s, c) = math::sin_cos(theta);
        let n = self.vertices.len();
        if n < 3 {
            return None;
        }
        let mut r = f64::INFINITY;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            // Outward normal of a counter-clockwise edge and its offset.
            let normal = [b[1] - a[1], a[0] - b[0]];
            let h = normal[0] * a[0] + normal[1] * a[1];
            if h <= 0.0 {
                return None;
            }
            let along = normal[0] * c + normal[1] * s;
            if along > 0.0 {
                r = r.min(h / along);
            }
        }
        r.is_finite().then_some(r)
    }
}

fn check_independent(f1: &LinearFunctional, f2: &LinearFunctional) -> Result<()> {
    let (a, b) = (f1.0, f2.0);
    let aa: f64 = a.iter().map(|x| x * x).sum();
    let bb: f64 = b.iter().map(|x| x * x).sum();
    let ab: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    if aa == 0.0 || bb == 0.0 || aa * bb - ab * ab <= 1e-12 * aa * bb {
        return Err(Error::DegenerateFunctionals);
    }
    Ok(())
}

/// Hull vertices of the projections of the vertices whose first strategy count
/// lies in `first`. Row by row, so memory stays at one row of compositions.
pub fn project_hull_range(
    parties: u32,
    f1: &LinearFunctional,
    f2: &LinearFunctional,
    first: Range<u32>,
) -> Result<Vec<[f64; 2]>> {
    check_budget(parties)?;
    check_independent(f1, f2)?;
    let mut acc: Vec<[f64; 2]> = Vec::new();
    for a in first.start..first.end.min(parties + 1) {
        let row: Vec<[f64; 2]> = Compositions::with_first_range(parties, a..a + 1)
            .map(|x| {
                let s = int_vertex_correlators(&x).0;
                [f1.eval_int(&s), f2.eval_int(&s)]
            })
            .collect();
        acc.extend(convex_hull(row).vertices);
        acc = convex_hull(acc).vertices;
    }
    Ok(acc)
}

/// Hull of partial hulls.
pub fn merge_hulls<I: IntoIterator<Item = Vec<[f64; 2]>>>(parts: I) -> Polygon {
    convex_hull(parts.into_iter().flatten().collect())
}

/// Convex hull of the vertices projected by `(f1, f2)`.
pub fn project_2d(parties: u32, f1: &LinearFunctional, f2: &LinearFunctional) -> Result<Polygon> {
    Ok(convex_hull(project_hull_range(parties, f1, f2, 0..parties + 1)?))
}

/// Support function and its maximizers over all projected vertices at `angles`
/// uniform angles, by direct sweep.
pub fn sampled_support(
    parties: u32,
    f1: &LinearFunctional,
    f2: &LinearFunctional,
    angles: usize,
) -> Result<Vec<(f64, [f64; 2])>> {
    check_budget(parties)?;
    check_independent(f1, f2)?;
    let dirs: Vec<(f64, f64)> = (0..angles)
        .map(|k| {
            let (s, c) = math::sin_cos(2.0 * core::f64::consts::PI * k as f64 / angles as f64);
            (c, s)
        })
        .collect();
    let mut best: Vec<(f64, [f64; 2])> = alloc::vec![(f64::NEG_INFINITY, [0.0, 0.0]); angles];
    for x in Compositions::new(parties) {
        let s = int_vertex_correlators(&x).0;
        let p = [f1.eval_int(&s), f2.eval_int(&s)];
        for ((c, sn), b) in dirs.iter().zip(best.iter_mut()) {
            let v = c * p[0] + sn * p[1];
            if v > b.0 {
                *b = (v, p);
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Correlator;

    fn fig1() -> (LinearFunctional, LinearFunctional) {
        let r3 = math::sqrt(3.0);
        (
            LinearFunctional([0.5, -0.5, 0.0, -0.5, 0.5]),
            LinearFunctional([0.0, -1.0 / r3, -1.0 / r3, 1.0 / r3, 0.0]),
        )
    }

    /// Hull by the definition: a point is a vertex iff some edge direction through
    /// it leaves every other point on one side.
    fn brute_hull(pts: &[[f64; 2]]) -> Vec<[f64; 2]> {
        let mut out = Vec::new();
        for (i, &p) in pts.iter().enumerate() {
            let extreme = (0..720).any(|k| {
                let t = 2.0 * core::f64::consts::PI * (k as f64 + 0.5) / 720.0;
                let v = |q: [f64; 2]| t.cos() * q[0] + t.sin() * q[1];
                pts.iter().enumerate().all(|(j, &q)| j == i || q == p || v(q) < v(p) - 1e-9)
            });
            if extreme && !out.contains(&p) {
                out.push(p);
            }
        }
        out
    }

    #[test]
    fn square() {
        let h = convex_hull(vec![[0.0, 0.0], [1.0, 0.0], [0.5, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]]);
        assert_eq!(h.vertices, vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        assert!((h.area() - 1.0).abs() < 1e-15);
        let c = convex_hull(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        let shifted = Polygon { vertices: c.vertices.iter().map(|v| [v[0] - 0.5, v[1] - 0.5]).collect() };
        assert!((shifted.radial(0.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((shifted.radial(core::f64::consts::FRAC_PI_4).unwrap() - math::sqrt(0.5)).abs() < 1e-15);
        assert!(c.radial(0.3).is_none());
    }

    #[test]
    fn two_party_hull_by_hand() {
        let (f1, f2) = fig1();
        let pts: Vec<[f64; 2]> = Compositions::new(2)
            .map(|x| {
                let s = int_vertex_correlators(&x).0;
                [f1.eval_int(&s), f2.eval_int(&s)]
            })
            .collect();
        assert_eq!(pts.len(), 10);
        let mut expected = brute_hull(&pts);
        let mut got = project_2d(2, &f1, &f2).unwrap().vertices;
        assert!(got.len() <= 10);
        let key = |a: &[f64; 2], b: &[f64; 2]| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1]));
        expected.sort_by(key);
        got.sort_by(key);
        assert_eq!(got, expected);
    }

    #[test]
    fn contains_every_projected_vertex() {
        let (f1, f2) = fig1();
        let poly = project_2d(10, &f1, &f2).unwrap();
        assert!(poly.area() > 0.0);
        for x in Compositions::new(10) {
            let s = int_vertex_correlators(&x).0;
            assert!(poly.contains([f1.eval_int(&s), f2.eval_int(&s)], 1e-9));
        }
    }

    #[test]
    fn support_sampling_agrees() {
        let (f1, f2) = fig1();
        let poly = project_2d(10, &f1, &f2).unwrap();
        let sampled = sampled_support(10, &f1, &f2, 720).unwrap();
        for (k, (h, p)) in sampled.iter().enumerate() {
            let t = 2.0 * core::f64::consts::PI * k as f64 / 720.0;
            assert!((poly.support(t) - h).abs() <= 1e-9 * h.abs().max(1.0));
            // Every maximizer is a polygon vertex or lies on an edge.
            assert!(poly.contains(*p, 1e-9));
        }
        for v in &poly.vertices {
            assert!(sampled.iter().any(|(_, p)| (p[0] - v[0]).abs() + (p[1] - v[1]).abs() < 1e-9));
        }
    }

    #[test]
    fn chunks_merge_to_whole() {
        let (f1, f2) = fig1();
        let whole = project_2d(23, &f1, &f2).unwrap();
        let parts = crate::scenario::chunk_ranges(23, 5)
            .into_iter()
            .map(|r| project_hull_range(23, &f1, &f2, r).unwrap());
        assert_eq!(merge_hulls(parts), whole);
    }

    #[test]
    fn degenerate_plane_rejected() {
        let f = LinearFunctional::coordinate(Correlator::S0);
        assert_eq!(project_2d(4, &f, &f), Err(Error::DegenerateFunctionals));
    }
}
