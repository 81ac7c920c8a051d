//! Weighting vectors and magnitude of finite subsets of Euclidean space.
//!
//! Magnitude is computed on the deduplicated set: a weighting `w` solves
//! `ζ w = 1` where `ζ_ij = exp(-t·‖x_i − x_j‖)`, and the magnitude is the sum
//! of `w`. The similarity matrix is factored by Cholesky; no explicit inverse
//! is ever formed. Duplicate points carry no weight of their own: all of a
//! group's weight sits on its first occurrence.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix};
use crate::points::{check_scale, dedupe, euclidean, kernel_from_distances, pairwise_distances, PointSet};

/// Minimum pairwise separation at which magnitude is differentiated.
pub const DEFAULT_EPS_SEP: f64 = 1e-9;
/// Weights with absolute value at or below this are treated as zero.
pub const DEFAULT_SUPPORT_TOL: f64 = 1e-10;
/// Bound on `‖ζw − 1‖∞` expected of every accepted solve.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Solver knobs. The default performs a plain Cholesky solve.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Add `1e-12·n` to the diagonal before factoring. Changes the object
    /// being computed, so the amount used is reported in the result.
    pub jitter: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightingVector {
    /// The deduplicated points the weights refer to.
    pub points: PointSet,
    /// Number of input points collapsed onto each entry of `points`.
    pub multiplicity: Vec<usize>,
    pub weights: Vec<f64>,
    pub scale: f64,
}

impl WeightingVector {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn min_weight(&self) -> f64 {
        self.weights.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Weights laid out over the original (non-deduplicated) input: the
    /// first member of a group carries the group weight, later duplicates 0.
    pub fn expand(&self, group_of: &[usize]) -> Vec<f64> {
        let mut seen = vec![false; self.weights.len()];
        group_of
            .iter()
            .map(|&g| {
                if seen[g] {
                    0.0
                } else {
                    seen[g] = true;
                    self.weights[g]
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnitudeResult {
    pub magnitude: f64,
    pub weighting: WeightingVector,
    /// `‖ζw − 1‖∞`.
    pub residual: f64,
    /// Squared ratio of extreme Cholesky diagonal entries.
    pub condition_hint: f64,
    /// Diagonal shift actually applied (0 unless jitter was requested).
    pub jitter: f64,
}

impl MagnitudeResult {
    pub fn is_nonnegative(&self, tol: f64) -> bool {
        self.weighting.weights.iter().all(|&w| w >= -tol)
    }
}

struct Solved {
    weights: Vec<f64>,
    residual: f64,
    condition_hint: f64,
    jitter: f64,
}

fn solve_weights(kernel: &Matrix, opts: SolveOptions) -> Result<Solved> {
    let n = kernel.rows();
    let jitter = if opts.jitter { 1e-12 * n as f64 } else { 0.0 };
    let chol = if jitter > 0.0 {
        let mut shifted = kernel.clone();
        for i in 0..n {
            shifted.set(i, i, kernel.get(i, i) + jitter);
        }
        Cholesky::factor(&shifted)?
    } else {
        Cholesky::factor(kernel)?
    };
    let ones = vec![1.0; n];
    let mut w = chol.solve(&ones);
    let mut residual = residual_inf(kernel, &w, jitter);
    // One step of iterative refinement when the solve is visibly inexact.
    if residual > 1e-12 {
        let r: Vec<f64> = apply(kernel, &w, jitter).iter().map(|v| 1.0 - v).collect();
        let dw = chol.solve(&r);
        let refined: Vec<f64> = w.iter().zip(&dw).map(|(a, b)| a + b).collect();
        let refined_residual = residual_inf(kernel, &refined, jitter);
        if refined_residual < residual {
            w = refined;
            residual = refined_residual;
        }
    }
    Ok(Solved {
        weights: w,
        residual,
        condition_hint: chol.condition_hint(),
        jitter,
    })
}

fn apply(kernel: &Matrix, w: &[f64], jitter: f64) -> Vec<f64> {
    let mut out = kernel.mul_vec(w);
    if jitter > 0.0 {
        out.iter_mut().zip(w).for_each(|(o, wi)| *o += jitter * wi);
    }
    out
}

fn residual_inf(kernel: &Matrix, w: &[f64], jitter: f64) -> f64 {
    apply(kernel, w, jitter)
        .iter()
        .map(|v| (v - 1.0).abs())
        .fold(0.0, f64::max)
}

/// The weighting of the deduplicated set at scale `t`.
pub fn weighting(x: &PointSet, t: f64) -> Result<WeightingVector> {
    Ok(magnitude_with(x, t, SolveOptions::default())?.weighting)
}

/// Magnitude at scale `t`. The empty set has magnitude 0.
pub fn magnitude(x: &PointSet, t: f64) -> Result<MagnitudeResult> {
    magnitude_with(x, t, SolveOptions::default())
}

pub fn magnitude_with(x: &PointSet, t: f64, opts: SolveOptions) -> Result<MagnitudeResult> {
    check_scale(t)?;
    let dd = dedupe(x, 0.0);
    let pts = dd.points;
    if pts.is_empty() {
        return Ok(MagnitudeResult {
            magnitude: 0.0,
            weighting: WeightingVector {
                points: pts,
                multiplicity: Vec::new(),
                weights: Vec::new(),
                scale: t,
            },
            residual: 0.0,
            condition_hint: 1.0,
            jitter: 0.0,
        });
    }
    let kernel = kernel_from_distances(&pairwise_distances(&pts), t);
    let solved = solve_weights(&kernel, opts)?;
    let magnitude = solved.weights.iter().sum();
    Ok(MagnitudeResult {
        magnitude,
        weighting: WeightingVector {
            points: pts,
            multiplicity: dd.multiplicity,
            weights: solved.weights,
            scale: t,
        },
        residual: solved.residual,
        condition_hint: solved.condition_hint,
        jitter: solved.jitter,
    })
}

/// Shorthand for `magnitude(x, t)?.magnitude`.
pub fn magnitude_value(x: &PointSet, t: f64) -> Result<f64> {
    Ok(magnitude(x, t)?.magnitude)
}

/// `t ↦ Mag(tX)` on a grid; each scale succeeds or fails independently.
pub fn magnitude_function(x: &PointSet, ts: &[f64]) -> Result<Vec<(f64, Result<MagnitudeResult>)>> {
    if ts.is_empty() {
        return Err(Error::invalid("scale list is empty"));
    }
    for &t in ts {
        check_scale(t)?;
    }
    Ok(ts.iter().map(|&t| (t, magnitude(x, t))).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeumannEstimate {
    /// `|X'| − Σ_{i≠j} exp(-t·d_ij)`.
    pub value: f64,
    /// `max_i Σ_{j≠i} ζ_ij`, an upper bound on the spectral radius of `ζ − I`.
    pub radius_proxy: f64,
    /// False when the radius proxy is ≥ 1 and the series may not converge.
    pub reliable: bool,
}

/// First-order Neumann-series approximation of magnitude for large `t`.
pub fn magnitude_neumann(x: &PointSet, t: f64) -> Result<NeumannEstimate> {
    check_scale(t)?;
    let pts = dedupe(x, 0.0).points;
    let n = pts.len();
    let mut off_total = 0.0;
    let mut radius_proxy: f64 = 0.0;
    for i in 0..n {
        let row: f64 = (0..n)
            .filter(|&j| j != i)
            .map(|j| (-t * euclidean(pts.point(i), pts.point(j))).exp())
            .sum();
        off_total += row;
        radius_proxy = radius_proxy.max(row);
    }
    Ok(NeumannEstimate {
        value: n as f64 - off_total,
        radius_proxy,
        reliable: radius_proxy < 1.0,
    })
}

/// Whether every weight is at least `-tol`.
pub fn is_nonnegative_weighting(x: &PointSet, t: f64, tol: f64) -> Result<bool> {
    Ok(magnitude(x, t)?.is_nonnegative(tol))
}

/// Deduplicated points whose weight magnitude exceeds `tol`.
pub fn magnitude_support(x: &PointSet, t: f64, tol: f64) -> Result<PointSet> {
    let w = weighting(x, t)?;
    let keep: Vec<usize> = (0..w.len()).filter(|&i| w.weights[i].abs() > tol).collect();
    Ok(w.points.select(&keep))
}

/// Gradient of magnitude with respect to the coordinates of the
/// deduplicated points, one row per point.
pub fn magnitude_gradient(x: &PointSet, t: f64) -> Result<Matrix> {
    magnitude_gradient_with(x, t, DEFAULT_EPS_SEP)
}

pub fn magnitude_gradient_with(x: &PointSet, t: f64, eps_sep: f64) -> Result<Matrix> {
    let res = magnitude(x, t)?;
    let pts = &res.weighting.points;
    let rows: Vec<usize> = (0..pts.len()).collect();
    gradient_rows(pts, &res.weighting.weights, t, &rows, eps_sep)
}

/// Rows of the magnitude gradient for the requested point indices, given a
/// weighting already solved on `pts`.
///
/// Uses `dMag/dθ = −wᵀ (∂ζ/∂θ) w`, which for point `k` gives
/// `2t·w_k·Σ_{j≠k} w_j·ζ_kj·(x_k − x_j)/d_kj`.
pub(crate) fn gradient_rows(
    pts: &PointSet,
    weights: &[f64],
    t: f64,
    rows: &[usize],
    eps_sep: f64,
) -> Result<Matrix> {
    let dim = pts.dim();
    let n = pts.len();
    let mut grad = Matrix::zeros(rows.len(), dim);
    for (r, &k) in rows.iter().enumerate() {
        let xk = pts.point(k);
        let out = grad.row_mut(r);
        for j in 0..n {
            if j == k {
                continue;
            }
            let xj = pts.point(j);
            let d = euclidean(xk, xj);
            if d < eps_sep {
                return Err(Error::CoincidentPoints {
                    first: k.min(j),
                    second: k.max(j),
                    distance: d,
                });
            }
            let coef = 2.0 * t * weights[k] * weights[j] * (-t * d).exp() / d;
            for c in 0..dim {
                out[c] += coef * (xk[c] - xj[c]);
            }
        }
    }
    Ok(grad)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralProfile {
    /// Eigenvalues of `ζ`, descending.
    pub eigenvalues: Vec<f64>,
    /// `(1ᵀ v_i)²` for the matching unit eigenvectors.
    pub alignments: Vec<f64>,
    /// `(1ᵀ v_i)² / λ_i`; these sum to the magnitude.
    pub inverse_form_terms: Vec<f64>,
}

impl SpectralProfile {
    pub fn magnitude(&self) -> f64 {
        self.inverse_form_terms.iter().sum()
    }

    /// `1ᵀ ζ 1`, the forward quadratic form that MMD aggregates.
    pub fn forward_form(&self) -> f64 {
        self.eigenvalues
            .iter()
            .zip(&self.alignments)
            .map(|(l, a)| l * a)
            .sum()
    }
}

const EIGEN_MAX_ITER: usize = 10_000;

/// Eigendecomposition of the similarity matrix of the deduplicated set.
pub fn spectral_profile(x: &PointSet, t: f64) -> Result<SpectralProfile> {
    check_scale(t)?;
    let pts = dedupe(x, 0.0).points;
    let kernel = kernel_from_distances(&pairwise_distances(&pts), t);
    let eig = nalgebra::SymmetricEigen::try_new(kernel.to_nalgebra(), f64::EPSILON, EIGEN_MAX_ITER)
        .ok_or(Error::EigenNoConvergence {
            iterations: EIGEN_MAX_ITER,
        })?;
    let mut pairs: Vec<(f64, f64)> = (0..pts.len())
        .map(|i| {
            let s: f64 = eig.eigenvectors.column(i).iter().sum();
            (eig.eigenvalues[i], s * s)
        })
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(SpectralProfile {
        eigenvalues: pairs.iter().map(|p| p.0).collect(),
        alignments: pairs.iter().map(|p| p.1).collect(),
        inverse_form_terms: pairs.iter().map(|p| p.1 / p.0).collect(),
    })
}
