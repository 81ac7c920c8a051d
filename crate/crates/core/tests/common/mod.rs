#![allow(dead_code)]

use magmetric::points::sample_gaussian;
use magmetric::{Matrix, PointSet, RngState};

/// `n` Gaussian points in R^dim, every pair at least `min_sep` apart
/// (rejection sampling; spread chosen so acceptance is quick).
pub fn separated_set(rng: &mut RngState, n: usize, dim: usize, min_sep: f64, taken: &[Vec<f64>]) -> PointSet {
    let spread = 1.0 + min_sep * (n as f64).powf(1.0 / dim as f64);
    let mut all: Vec<Vec<f64>> = taken.to_vec();
    let mut pts = Vec::new();
    while pts.len() < n {
        let p: Vec<f64> = (0..dim).map(|_| spread * rng.normal()).collect();
        if all.iter().all(|q| magmetric::points::euclidean(&p, q) >= min_sep) {
            all.push(p.clone());
            pts.push(p);
        }
    }
    PointSet::from_rows(&pts).unwrap()
}

pub fn rows(x: &PointSet) -> Vec<Vec<f64>> {
    x.iter().map(|p| p.to_vec()).collect()
}

pub fn gaussian(rng: &mut RngState, n: usize, dim: usize, scale: f64) -> PointSet {
    sample_gaussian(rng, n, dim, &vec![0.0; dim], scale).unwrap()
}

/// Gaussian set with `min + below(span)` points.
pub fn sized(rng: &mut RngState, min: usize, span: usize, dim: usize, scale: f64) -> PointSet {
    let n = min + rng.below(span);
    gaussian(rng, n, dim, scale)
}

/// Central finite-difference gradient of `f` with respect to the points of `y`.
pub fn fd_gradient(y: &PointSet, h: f64, f: impl Fn(&PointSet) -> f64) -> Matrix {
    let mut g = Matrix::zeros(y.len(), y.dim());
    for i in 0..y.len() {
        for c in 0..y.dim() {
            let mut up = y.clone();
            up.point_mut(i)[c] += h;
            let mut down = y.clone();
            down.point_mut(i)[c] -= h;
            g.set(i, c, (f(&up) - f(&down)) / (2.0 * h));
        }
    }
    g
}

/// `‖a − b‖ / ‖b‖` (absolute when `b` vanishes).
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let norm: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 1e-12 {
        diff / norm
    } else {
        diff
    }
}

/// [`separated_set`] with `min + below(span)` points.
pub fn separated_sized(rng: &mut RngState, min: usize, span: usize, dim: usize, min_sep: f64, taken: &[Vec<f64>]) -> PointSet {
    let n = min + rng.below(span);
    separated_set(rng, n, dim, min_sep, taken)
}
