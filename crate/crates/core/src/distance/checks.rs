//! Checkers for the metric-like properties of magnitude distance.

use serde::{Deserialize, Serialize};

use super::mag_distance;
use crate::error::{Error, Result};
use crate::magnitude::{magnitude_support, magnitude_value};
use crate::points::{check_dims, check_scale, symmetric_difference_count, PointSet};

/// Whether `x` and `y` have the same support of nonzero weights at scale `t`
/// (weights with `|w| ≤ tol` count as zero). Supports are compared as point
/// sets under exact coordinate equality.
pub fn magnitude_equivalent(x: &PointSet, y: &PointSet, t: f64, tol: f64) -> Result<bool> {
    check_dims(x, y)?;
    let sx = magnitude_support(x, t, tol)?.sorted();
    let sy = magnitude_support(y, t, tol)?.sorted();
    Ok(sx == sy)
}

/// `d(X,Y) + d(Y,Z) − d(X,Z)`; negative means the triangle inequality fails.
pub fn check_triangle(x: &PointSet, y: &PointSet, z: &PointSet, t: f64) -> Result<f64> {
    check_dims(x, y)?;
    check_dims(y, z)?;
    let xy = mag_distance(x, y, t)?.distance;
    let yz = mag_distance(y, z, t)?.distance;
    let xz = mag_distance(x, z, t)?.distance;
    Ok(xy + yz - xz)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossPolytope {
    pub dim: usize,
    pub t: f64,
    /// `{±e_i}`.
    pub x: PointSet,
    /// `{0}`.
    pub z: PointSet,
    pub mag_x: f64,
    pub mag_xz: f64,
    /// `Mag(X∪Z) − Mag(X)`.
    pub gap: f64,
    /// Triangle slack `d(X,∅) + d(∅,Z) − d(X,Z)` with the empty middle set.
    pub slack: f64,
    /// Weight of the origin in the weighting of `X∪Z`.
    pub origin_weight: f64,
}

fn cross_polytope_points(dim: usize) -> (PointSet, PointSet) {
    let mut coords = Vec::with_capacity(2 * dim * dim);
    for i in 0..dim {
        for sign in [1.0, -1.0] {
            let mut p = vec![0.0; dim];
            p[i] = sign;
            coords.extend(p);
        }
    }
    let x = PointSet::new(dim, coords).expect("finite coordinates");
    let z = PointSet::new(dim, vec![0.0; dim]).expect("finite coordinates");
    (x, z)
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::invalid("cross-polytope dimension must be at least 1"));
    }
    Ok(())
}

/// Cross-polytope `X = {±e_i}` against `Z = {0}` with an empty middle set.
///
/// The weighting of `X` is constant on vertices and the weighting of `X∪Z`
/// takes one value on vertices and another at the origin (the hyperoctahedral
/// group acts transitively on vertices), so each solve reduces to a scalar or
/// a 2×2 system and large `dim` costs nothing. [`cross_polytope_dense`] runs
/// the full solves.
pub fn cross_polytope_counterexample(dim: usize, t: f64) -> Result<CrossPolytope> {
    check_dim(dim)?;
    check_scale(t)?;
    let d = dim as f64;
    // Vertex row sum of ζ_X: itself, its antipode at distance 2, and the
    // 2D−2 other vertices at distance √2.
    let row = 1.0 + (-2.0 * t).exp() + (2.0 * d - 2.0) * (-(2f64.sqrt()) * t).exp();
    let mag_x = 2.0 * d / row;
    // Vertex weight a, origin weight b (distance 1 to every vertex):
    //   row·a + q·b = 1
    //   2D·q·a + b  = 1
    let q = (-t).exp();
    let det = row - 2.0 * d * q * q;
    let a = (1.0 - q) / det;
    let b = (row - 2.0 * d * q) / det;
    let mag_xz = 2.0 * d * a + b;
    let (x, z) = cross_polytope_points(dim);
    Ok(finish(dim, t, x, z, mag_x, mag_xz, b))
}

/// Same quantities from full `(2D) × (2D)` and `(2D+1) × (2D+1)` solves.
pub fn cross_polytope_dense(dim: usize, t: f64) -> Result<CrossPolytope> {
    check_dim(dim)?;
    let (x, z) = cross_polytope_points(dim);
    let mag_x = magnitude_value(&x, t)?;
    let xz = x.concat(&z)?;
    let r = crate::magnitude::magnitude(&xz, t)?;
    let origin_weight = *r.weighting.weights.last().expect("nonempty");
    Ok(finish(dim, t, x, z, mag_x, r.magnitude, origin_weight))
}

fn finish(
    dim: usize,
    t: f64,
    x: PointSet,
    z: PointSet,
    mag_x: f64,
    mag_xz: f64,
    origin_weight: f64,
) -> CrossPolytope {
    // With Y = ∅: d(X,∅) = Mag X, d(∅,Z) = Mag Z = 1 and
    // d(X,Z) = 2·Mag(X∪Z) − Mag X − 1.
    let d_xy = mag_x;
    let d_yz = 1.0;
    let d_xz = 2.0 * mag_xz - mag_x - 1.0;
    CrossPolytope {
        dim,
        t,
        x,
        z,
        mag_x,
        mag_xz,
        gap: mag_xz - mag_x,
        slack: d_xy + d_yz - d_xz,
        origin_weight,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    /// `−1e−9 ≤ d ≤ 2|X∪Y| + 1e−9`.
    pub holds: bool,
    /// All three weightings nonnegative, so the bound is guaranteed.
    pub applicable: bool,
    pub distance: f64,
    pub bound: f64,
}

pub fn bound_check(x: &PointSet, y: &PointSet, t: f64) -> Result<BoundCheck> {
    let r = mag_distance(x, y, t)?;
    Ok(BoundCheck {
        holds: r.distance >= -1e-9 && r.distance <= r.bound_2card + 1e-9,
        applicable: r.nonneg_weightings.iter().all(|&b| b),
        distance: r.distance,
        bound: r.bound_2card,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitProbe {
    pub d_small: f64,
    pub d_large: f64,
    pub sym_diff: usize,
}

/// Distance at both ends of the scale range next to `|X Δ Y|`.
pub fn limit_probe(x: &PointSet, y: &PointSet, t_small: f64, t_large: f64) -> Result<LimitProbe> {
    Ok(LimitProbe {
        d_small: mag_distance(x, y, t_small)?.distance,
        d_large: mag_distance(x, y, t_large)?.distance,
        sym_diff: symmetric_difference_count(x, y)?,
    })
}

/// Bisection in `log t` for a scale where `d(X,Y) = alpha`, given a bracket
/// with `d(t_lo) < alpha < d(t_hi)`. Returns `(t, d(t))`.
pub fn scale_for_distance(
    x: &PointSet,
    y: &PointSet,
    alpha: f64,
    t_lo: f64,
    t_hi: f64,
) -> Result<(f64, f64)> {
    check_scale(t_lo)?;
    check_scale(t_hi)?;
    let f = |t: f64| mag_distance(x, y, t).map(|r| r.distance - alpha);
    let (mut lo, mut hi) = (t_lo.ln(), t_hi.ln());
    let (flo, fhi) = (f(t_lo)?, f(t_hi)?);
    if !(flo < 0.0 && fhi > 0.0) {
        return Err(Error::invalid(format!(
            "scale bracket [{t_lo}, {t_hi}] does not straddle distance {alpha}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid.exp())? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = (0.5 * (lo + hi)).exp();
    Ok((t, f(t)? + alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::points::sample_standard_normal;
    use crate::rng::RngState;

    fn line(xs: &[f64]) -> PointSet {
        PointSet::from_scalars(xs).unwrap()
    }

    #[test]
    fn equivalence_examples() {
        let mut rng = RngState::new(1);
        let x = sample_standard_normal(&mut rng, 8, 2);
        assert!(magnitude_equivalent(&x, &x, 1.0, 1e-10).unwrap());
        let y = x.translated(&[10.0, 0.0]).unwrap();
        assert!(!magnitude_equivalent(&x, &y, 1.0, 1e-10).unwrap());
        // Reordering and duplicating preserve the support.
        let mut idx: Vec<usize> = (0..8).rev().collect();
        idx.push(3);
        let z = x.select(&idx);
        assert!(magnitude_equivalent(&x, &z, 1.0, 1e-10).unwrap());
        let w = z.select(&[0, 1, 2, 3, 4, 5, 6, 7]);
        assert!(magnitude_equivalent(&z, &w, 1.0, 1e-10).unwrap());
        assert!(magnitude_equivalent(&x, &w, 1.0, 1e-10).unwrap());
    }

    #[test]
    fn triangle_with_repeated_middle() {
        let mut rng = RngState::new(2);
        let x = sample_standard_normal(&mut rng, 6, 3);
        let z = sample_standard_normal(&mut rng, 7, 3);
        assert!(check_triangle(&x, &x, &z, 0.7).unwrap() >= -1e-9);
    }

    #[test]
    fn triangle_holds_on_the_line() {
        let mut rng = RngState::new(3);
        for _ in 0..20 {
            let x = sample_standard_normal(&mut rng, 5, 1);
            let y = sample_standard_normal(&mut rng, 4, 1);
            let z = sample_standard_normal(&mut rng, 6, 1);
            for &t in &[0.1, 1.0, 10.0] {
                assert!(check_triangle(&x, &y, &z, t).unwrap() >= -1e-9);
            }
        }
    }

    #[test]
    fn counterexample_reproduces_reported_gap() {
        let c = cross_polytope_counterexample(500, 5.0).unwrap();
        assert!((c.gap - 7.18).abs() < 0.05, "gap {}", c.gap);
        assert!(c.slack < 0.0);
        assert!(c.origin_weight < -2.0);
        assert_eq!(c.x.len(), 1000);
    }

    #[test]
    fn counterexample_slack_in_one_dimension() {
        let c = cross_polytope_counterexample(1, 5.0).unwrap();
        let dense = magnitude_value(&line(&[-1.0, 0.0, 1.0]), 5.0).unwrap()
            - magnitude_value(&line(&[-1.0, 1.0]), 5.0).unwrap();
        assert!((c.gap - dense).abs() < 1e-12);
        assert!(c.slack >= 0.0);
    }

    #[test]
    fn reduced_matches_dense() {
        for dim in [1, 2, 5, 20] {
            for t in [0.5, 2.0, 5.0] {
                let r = cross_polytope_counterexample(dim, t).unwrap();
                let d = cross_polytope_dense(dim, t).unwrap();
                assert!((r.gap - d.gap).abs() < 1e-9, "dim {dim} t {t}");
                assert!((r.origin_weight - d.origin_weight).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn counterexample_slack_via_generic_checker() {
        let c = cross_polytope_counterexample(6, 5.0).unwrap();
        let empty = PointSet::empty(6);
        let slack = check_triangle(&c.x, &empty, &c.z, 5.0).unwrap();
        assert!((slack - c.slack).abs() < 1e-9);
    }

    #[test]
    fn bound_check_examples() {
        let mut rng = RngState::new(4);
        let x = sample_standard_normal(&mut rng, 10, 1);
        let y = sample_standard_normal(&mut rng, 10, 1);
        let b = bound_check(&x, &y, 2.0).unwrap();
        assert!(b.applicable && b.holds);
        let same = bound_check(&x, &x, 2.0).unwrap();
        assert!(same.holds && same.distance.abs() < 1e-9);
    }

    #[test]
    fn limit_probe_identical_sets() {
        let x = sample_standard_normal(&mut RngState::new(5), 6, 2);
        let p = limit_probe(&x, &x, 1e-4, 40.0).unwrap();
        assert!(p.d_small.abs() < 1e-9 && p.d_large.abs() < 1e-9);
        assert_eq!(p.sym_diff, 0);
    }

    #[test]
    fn bisection_hits_target() {
        let mut rng = RngState::new(6);
        let x = sample_standard_normal(&mut rng, 6, 4);
        let y = sample_standard_normal(&mut rng, 6, 4);
        let alpha = 6.0;
        let (t, d) = scale_for_distance(&x, &y, alpha, 1e-3, 100.0).unwrap();
        assert!(t > 0.0);
        assert!((d - alpha).abs() < 1e-6);
        assert!(scale_for_distance(&x, &y, 100.0, 1e-3, 100.0).is_err());
    }
}
