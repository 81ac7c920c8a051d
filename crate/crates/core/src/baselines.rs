//! Reference two-sample distances: empirical MMD and sliced Wasserstein.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::points::{check_dims, euclidean, squared_euclidean, PointSet};
use crate::rng::RngState;

pub const DEFAULT_PROJECTIONS: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum KernelSpec {
    /// `exp(−t·‖x − y‖)`.
    Exponential { t: f64 },
    /// `exp(−‖x − y‖² / (2σ²))`.
    Gaussian { sigma: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        let p = match *self {
            KernelSpec::Exponential { t } => t,
            KernelSpec::Gaussian { sigma } => sigma,
        };
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::invalid(format!("kernel parameter must be positive, got {p}")));
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            KernelSpec::Exponential { t } => (-t * euclidean(a, b)).exp(),
            KernelSpec::Gaussian { sigma } => (-squared_euclidean(a, b) / (2.0 * sigma * sigma)).exp(),
        }
    }
}

fn kernel_mean(a: &PointSet, b: &PointSet, k: &KernelSpec) -> f64 {
    let mut s = 0.0;
    for p in a.iter() {
        for q in b.iter() {
            s += k.eval(p, q);
        }
    }
    s / (a.len() as f64 * b.len() as f64)
}

/// Biased (V-statistic) squared MMD; diagonal terms are included.
pub fn mmd_squared(x: &PointSet, y: &PointSet, kernel: KernelSpec) -> Result<f64> {
    check_dims(x, y)?;
    kernel.validate()?;
    if x.is_empty() || y.is_empty() {
        return Err(Error::invalid("MMD needs two nonempty samples"));
    }
    Ok(kernel_mean(x, x, &kernel) + kernel_mean(y, y, &kernel) - 2.0 * kernel_mean(x, y, &kernel))
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// W₁ between two empirical measures on the line.
///
/// Integrates `|F⁻¹(u) − G⁻¹(u)|` over `u ∈ (0,1)`; both quantile functions
/// are step functions, so the integral is exact over the merged breakpoints
/// `i/n` and `j/m`.
pub fn wasserstein_1d(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::invalid("wasserstein_1d needs two nonempty samples"));
    }
    Ok(wasserstein_sorted(&sorted(xs), &sorted(ys)))
}

fn wasserstein_sorted(a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = (a.len(), b.len());
    if n == m {
        return a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / n as f64;
    }
    let (mut i, mut j) = (0usize, 0usize);
    let mut u = 0.0;
    let mut total = 0.0;
    while i < n && j < m {
        // Compare breakpoints (i+1)/n and (j+1)/m exactly in integers.
        let lhs = (i + 1) * m;
        let rhs = (j + 1) * n;
        let next = if lhs <= rhs {
            (i + 1) as f64 / n as f64
        } else {
            (j + 1) as f64 / m as f64
        };
        total += (next - u) * (a[i] - b[j]).abs();
        u = next;
        match lhs.cmp(&rhs) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    total
}

fn project(x: &PointSet, dir: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|p| p.iter().zip(dir).map(|(a, b)| a * b).sum())
        .collect()
}

/// Mean W₁ over `n_proj` random unit directions. Draws one value from `rng`
/// and derives an independent stream per projection from it.
pub fn sliced_wasserstein(x: &PointSet, y: &PointSet, n_proj: usize, rng: &mut RngState) -> Result<f64> {
    sliced_wasserstein_with(x, y, n_proj, rng, Execution::Sequential)
}

pub fn sliced_wasserstein_with(
    x: &PointSet,
    y: &PointSet,
    n_proj: usize,
    rng: &mut RngState,
    exec: Execution,
) -> Result<f64> {
    check_dims(x, y)?;
    if n_proj == 0 {
        return Err(Error::invalid("need at least one projection"));
    }
    if x.is_empty() || y.is_empty() {
        return Err(Error::invalid("sliced Wasserstein needs two nonempty samples"));
    }
    let base = rng.next_u64();
    let dim = x.dim();
    let per = exec.map_range(n_proj, |p| {
        let dir = RngState::derive(base, p as u64).unit_vector(dim);
        wasserstein_sorted(&sorted(&project(x, &dir)), &sorted(&project(y, &dir)))
    });
    Ok(per.iter().sum::<f64>() / n_proj as f64)
}
