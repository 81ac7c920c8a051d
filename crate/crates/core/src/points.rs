//! Point sets in Euclidean space and the kernel matrices built on them.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::RngState;

/// An ordered collection of points in R^dim, stored row-major.
///
/// Duplicates are legal; the magnitude routines dedupe internally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    /// Build from flat row-major coordinates.
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("point dimension must be positive"));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: coords.len() % dim,
            });
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite {
                point: pos / dim,
                coord: pos % dim,
            });
        }
        Ok(Self { dim, coords })
    }

    pub fn empty(dim: usize) -> Self {
        assert!(dim > 0, "point dimension must be positive");
        Self {
            dim,
            coords: Vec::new(),
        }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::invalid("cannot infer dimension of an empty row list"))?;
        let dim = first.as_ref().len();
        let mut coords = Vec::with_capacity(dim * rows.len());
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            coords.extend_from_slice(row);
        }
        Self::new(dim, coords)
    }

    /// One-dimensional point set from scalars.
    pub fn from_scalars(xs: &[f64]) -> Result<Self> {
        Self::new(1, xs.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn point_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn push(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: p.len(),
            });
        }
        if let Some(c) = p.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite {
                point: self.len(),
                coord: c,
            });
        }
        self.coords.extend_from_slice(p);
        Ok(())
    }

    /// Subset by index, in the given order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        Self {
            dim: self.dim,
            coords,
        }
    }

    /// Concatenation without deduplication.
    pub fn concat(&self, other: &PointSet) -> Result<Self> {
        check_dims(self, other)?;
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&other.coords);
        Ok(Self {
            dim: self.dim,
            coords,
        })
    }

    /// Every coordinate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            coords: self.coords.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn translated(&self, shift: &[f64]) -> Result<Self> {
        if shift.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: shift.len(),
            });
        }
        let mut out = self.clone();
        for p in out.coords.chunks_exact_mut(self.dim) {
            for (c, s) in p.iter_mut().zip(shift) {
                *c += s;
            }
        }
        Ok(out)
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for p in self.iter() {
            for (a, b) in m.iter_mut().zip(p) {
                *a += b;
            }
        }
        let n = self.len().max(1) as f64;
        m.iter_mut().for_each(|a| *a /= n);
        m
    }

    /// Lexicographically sorted copy, using total ordering on coordinates.
    pub fn sorted(&self) -> Self {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| lex_cmp(self.point(a), self.point(b)));
        self.select(&idx)
    }

    /// Smallest distance between two distinct indices; infinite with < 2 points.
    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                best = best.min(euclidean(self.point(i), self.point(j)));
            }
        }
        best
    }
}

pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match normalize_zero(*x).total_cmp(&normalize_zero(*y)) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    std::cmp::Ordering::Equal
}

fn normalize_zero(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

/// Hashable exact-equality key for a point; `-0.0` and `0.0` coincide.
pub(crate) fn point_key(p: &[f64]) -> Vec<u64> {
    p.iter().map(|&c| normalize_zero(c).to_bits()).collect()
}

pub(crate) fn check_dims(a: &PointSet, b: &PointSet) -> Result<()> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            found: b.dim,
        });
    }
    Ok(())
}

#[inline]
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[inline]
pub fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Euclidean distance matrix. Symmetric with an exact zero diagonal.
pub fn pairwise_distances(x: &PointSet) -> Matrix {
    let n = x.len();
    let mut d = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = euclidean(x.point(i), x.point(j));
            d.set(i, j, v);
            d.set(j, i, v);
        }
    }
    d
}

/// Similarity matrix at scale `t`, with `scale` recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub entries: Matrix,
    pub scale: f64,
}

impl SimilarityMatrix {
    pub fn size(&self) -> usize {
        self.entries.rows()
    }
}

pub(crate) fn check_scale(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::invalid(format!("scale must be positive and finite, got {t}")));
    }
    Ok(())
}

/// Entries `exp(-t·‖x_i − x_j‖)`.
pub fn similarity_matrix(x: &PointSet, t: f64) -> Result<SimilarityMatrix> {
    check_scale(t)?;
    Ok(SimilarityMatrix {
        entries: kernel_from_distances(&pairwise_distances(x), t),
        scale: t,
    })
}

pub(crate) fn kernel_from_distances(d: &Matrix, t: f64) -> Matrix {
    let n = d.rows();
    Matrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { (-t * d.get(i, j)).exp() })
}

/// Result of grouping near-identical points.
#[derive(Debug, Clone, PartialEq)]
pub struct Deduped {
    pub points: PointSet,
    pub multiplicity: Vec<usize>,
    /// For every input point, the index of its representative.
    pub group_of: Vec<usize>,
}

/// Keep one representative (the first occurrence) per group of points within
/// distance `tol`. `tol = 0` means exact coordinate equality.
pub fn dedupe(x: &PointSet, tol: f64) -> Deduped {
    let mut reps: Vec<usize> = Vec::new();
    let mut multiplicity = Vec::new();
    let mut group_of = Vec::with_capacity(x.len());
    if tol <= 0.0 {
        let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
        for (i, p) in x.iter().enumerate() {
            let g = *seen.entry(point_key(p)).or_insert_with(|| {
                reps.push(i);
                multiplicity.push(0);
                reps.len() - 1
            });
            multiplicity[g] += 1;
            group_of.push(g);
        }
    } else {
        for (i, p) in x.iter().enumerate() {
            let found = reps.iter().position(|&r| euclidean(x.point(r), p) <= tol);
            let g = match found {
                Some(g) => g,
                None => {
                    reps.push(i);
                    multiplicity.push(0);
                    reps.len() - 1
                }
            };
            multiplicity[g] += 1;
            group_of.push(g);
        }
    }
    Deduped {
        points: x.select(&reps),
        multiplicity,
        group_of,
    }
}

/// Set union: X's distinct points in order, then Y's novel points.
pub fn union_sets(x: &PointSet, y: &PointSet) -> Result<PointSet> {
    check_dims(x, y)?;
    Ok(dedupe(&x.concat(y)?, 0.0).points)
}

/// `|X Δ Y|` under exact coordinate equality, after deduplication.
pub fn symmetric_difference_count(x: &PointSet, y: &PointSet) -> Result<usize> {
    check_dims(x, y)?;
    let xs: HashSet<Vec<u64>> = x.iter().map(point_key).collect();
    let ys: HashSet<Vec<u64>> = y.iter().map(point_key).collect();
    Ok(xs.symmetric_difference(&ys).count())
}

/// `n` i.i.d. draws from N(mean, std²·I).
pub fn sample_gaussian(
    rng: &mut RngState,
    n: usize,
    dim: usize,
    mean: &[f64],
    std: f64,
) -> Result<PointSet> {
    if dim == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    if mean.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: mean.len(),
        });
    }
    if !(std > 0.0) {
        return Err(Error::invalid("standard deviation must be positive"));
    }
    let mut coords = Vec::with_capacity(n * dim);
    for _ in 0..n {
        for &m in mean {
            coords.push(m + std * rng.normal());
        }
    }
    PointSet::new(dim, coords)
}

/// Standard normal samples centred at the origin.
pub fn sample_standard_normal(rng: &mut RngState, n: usize, dim: usize) -> PointSet {
    sample_gaussian(rng, n, dim, &vec![0.0; dim], 1.0).expect("valid arguments")
}
