//! Magnitude distance `d(X,Y) = 2·Mag(X∪Y) − Mag(X) − Mag(Y)`, its
//! normalized variant `d / Mag(X∪Y)`, the multi-scale curriculum loss and
//! gradients with respect to the second (free) set.

mod checks;
mod schedule;

pub use checks::{
    bound_check, check_triangle, cross_polytope_counterexample, cross_polytope_dense,
    limit_probe, magnitude_equivalent, scale_for_distance, BoundCheck, CrossPolytope, LimitProbe,
};
pub use schedule::{ScaleSchedule, ScaleStep};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg::Matrix;
use crate::magnitude::{gradient_rows, magnitude, MagnitudeResult, DEFAULT_EPS_SEP};
use crate::points::{check_dims, check_scale, dedupe, euclidean, union_sets, PointSet};

/// Weights at or above `-NONNEG_TOL` count as nonnegative.
pub const NONNEG_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub t: f64,
    pub mag_union: f64,
    pub mag_x: f64,
    pub mag_y: f64,
    pub distance: f64,
    pub normalized: f64,
    /// Nonnegativity of the weightings of X, Y and X∪Y.
    pub nonneg_weightings: [bool; 3],
    /// `|X∪Y|` after exact deduplication.
    pub union_size: usize,
    /// `2|X∪Y|`.
    pub bound_2card: f64,
    pub max_residual: f64,
}

/// The union in a canonical (sorted) order, so that `d(X,Y)` and `d(Y,X)`
/// run the exact same solve.
fn canonical_union(x: &PointSet, y: &PointSet) -> Result<PointSet> {
    Ok(union_sets(x, y)?.sorted())
}

pub fn mag_distance(x: &PointSet, y: &PointSet, t: f64) -> Result<DistanceReport> {
    mag_distance_with(x, y, t, Execution::Sequential)
}

/// As [`mag_distance`], optionally running the three solves concurrently.
/// The result is identical for either execution mode.
pub fn mag_distance_with(x: &PointSet, y: &PointSet, t: f64, exec: Execution) -> Result<DistanceReport> {
    check_dims(x, y)?;
    check_scale(t)?;
    let u = canonical_union(x, y)?;
    let (ru, (rx, ry)) = exec.join(
        || magnitude(&u, t),
        || exec.join(|| magnitude(x, t), || magnitude(y, t)),
    );
    let ru = ru.map_err(|e| e.in_solve("union"))?;
    let rx = rx.map_err(|e| e.in_solve("X"))?;
    let ry = ry.map_err(|e| e.in_solve("Y"))?;
    Ok(report(t, &ru, &rx, &ry))
}

fn report(t: f64, ru: &MagnitudeResult, rx: &MagnitudeResult, ry: &MagnitudeResult) -> DistanceReport {
    let mu = ru.magnitude;
    // mx + my is commutative in IEEE arithmetic, which keeps d(X,Y) == d(Y,X).
    let distance = 2.0 * mu - (rx.magnitude + ry.magnitude);
    let normalized = if mu > 0.0 { distance / mu } else { 0.0 };
    let union_size = ru.weighting.len();
    DistanceReport {
        t,
        mag_union: mu,
        mag_x: rx.magnitude,
        mag_y: ry.magnitude,
        distance,
        normalized,
        nonneg_weightings: [
            rx.is_nonnegative(NONNEG_TOL),
            ry.is_nonnegative(NONNEG_TOL),
            ru.is_nonnegative(NONNEG_TOL),
        ],
        union_size,
        bound_2card: 2.0 * union_size as f64,
        max_residual: ru.residual.max(rx.residual).max(ry.residual),
    }
}

pub fn normalized_mag_distance(x: &PointSet, y: &PointSet, t: f64) -> Result<f64> {
    Ok(mag_distance(x, y, t)?.normalized)
}

/// Sum of normalized distances over the schedule entries active at `epoch`
/// (`e_i ≤ epoch`), divided by their count when `normalized_loss` is set.
pub fn multiscale_loss(
    x: &PointSet,
    y: &PointSet,
    schedule: &ScaleSchedule,
    epoch: u32,
    normalized_loss: bool,
) -> Result<f64> {
    if epoch < 1 {
        return Err(Error::invalid("epochs are numbered from 1"));
    }
    let active = schedule.active_scales(epoch);
    if active.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for &t in &active {
        total += normalized_mag_distance(x, y, t)?;
    }
    if normalized_loss {
        total /= active.len() as f64;
    }
    Ok(total)
}

/// Gradient of the plain or normalized magnitude distance with respect to
/// the points of `y` (one row per point, input order). `x` is held fixed.
pub fn mag_distance_gradient(x: &PointSet, y: &PointSet, t: f64, normalized: bool) -> Result<Matrix> {
    Ok(distance_and_gradient(x, y, t, normalized, DEFAULT_EPS_SEP)?.1)
}

/// Separation check on the free set: every `y` must be at least `eps_sep`
/// from every other `y` and from every point of `x`. Indices in the error
/// refer to the concatenation `x' ++ y` with `x'` the deduplicated `x`.
fn check_free_separation(xd: &PointSet, y: &PointSet, eps_sep: f64) -> Result<()> {
    let nx = xd.len();
    for (i, yi) in y.iter().enumerate() {
        for (j, xj) in xd.iter().enumerate() {
            let d = euclidean(yi, xj);
            if d < eps_sep {
                return Err(Error::CoincidentPoints {
                    first: j,
                    second: nx + i,
                    distance: d,
                });
            }
        }
        for k in i + 1..y.len() {
            let d = euclidean(yi, y.point(k));
            if d < eps_sep {
                return Err(Error::CoincidentPoints {
                    first: nx + i,
                    second: nx + k,
                    distance: d,
                });
            }
        }
    }
    Ok(())
}

/// Value and Y-gradient of the (optionally normalized) distance, computed
/// from one pair of solves.
pub(crate) fn distance_and_gradient(
    x: &PointSet,
    y: &PointSet,
    t: f64,
    normalized: bool,
    eps_sep: f64,
) -> Result<(f64, Matrix)> {
    check_dims(x, y)?;
    check_scale(t)?;
    if y.is_empty() {
        return Err(Error::invalid("free set is empty"));
    }
    let xd = dedupe(x, 0.0).points;
    check_free_separation(&xd, y, eps_sep)?;
    let z = xd.concat(y)?;
    let rz = magnitude(&z, t).map_err(|e| e.in_solve("union"))?;
    let rx = magnitude(&xd, t).map_err(|e| e.in_solve("X"))?;
    let ry = magnitude(y, t).map_err(|e| e.in_solve("Y"))?;
    // y is separated, so nothing collapsed and y occupies the tail of z.
    let y_rows: Vec<usize> = (xd.len()..z.len()).collect();
    let g_union = gradient_rows(&rz.weighting.points, &rz.weighting.weights, t, &y_rows, eps_sep)?;
    let all_y: Vec<usize> = (0..y.len()).collect();
    let g_y = gradient_rows(&ry.weighting.points, &ry.weighting.weights, t, &all_y, eps_sep)?;

    let mu = rz.magnitude;
    let d = 2.0 * mu - (rx.magnitude + ry.magnitude);
    let mut grad = Matrix::zeros(y.len(), y.dim());
    for i in 0..y.len() {
        for c in 0..y.dim() {
            let gd = 2.0 * g_union.get(i, c) - g_y.get(i, c);
            let v = if normalized {
                (gd * mu - d * g_union.get(i, c)) / (mu * mu)
            } else {
                gd
            };
            grad.set(i, c, v);
        }
    }
    let value = if normalized { d / mu } else { d };
    Ok((value, grad))
}

/// Loss and Y-gradient of the multi-scale objective; per-scale terms are
/// evaluated under `exec` and summed in schedule order.
pub fn multiscale_loss_and_gradient(
    x: &PointSet,
    y: &PointSet,
    schedule: &ScaleSchedule,
    epoch: u32,
    normalized_loss: bool,
    exec: Execution,
) -> Result<(f64, Matrix)> {
    let active = schedule.active_scales(epoch);
    let mut grad = Matrix::zeros(y.len(), y.dim());
    if active.is_empty() {
        return Ok((0.0, grad));
    }
    let terms = exec.map(&active, |&t| distance_and_gradient(x, y, t, true, DEFAULT_EPS_SEP));
    let mut loss = 0.0;
    for term in terms {
        let (v, g) = term?;
        loss += v;
        for i in 0..y.len() {
            for (a, b) in grad.row_mut(i).iter_mut().zip(g.row(i)) {
                *a += b;
            }
        }
    }
    if normalized_loss {
        let k = active.len() as f64;
        loss /= k;
        grad = grad.map(|v| v / k);
    }
    Ok((loss, grad))
}
