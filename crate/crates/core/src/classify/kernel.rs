//! RBF kernel evaluation and the row cache the solver reads from.

use std::rc::Rc;

use ndarray::{Array2, ArrayView2};

use super::ClassifyError;

#[inline]
pub fn squared_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// `exp(-gamma * ||x - y||^2)`.
pub fn rbf_kernel(x: &[f64], y: &[f64], gamma: f64) -> Result<f64, ClassifyError> {
    if x.len() != y.len() {
        return Err(ClassifyError::Dimension {
            expected: x.len(),
            got: y.len(),
        });
    }
    Ok((-gamma * squared_distance(x, y)).exp())
}

/// Pairwise squared distances between the rows of `x`.
pub fn squared_distances(x: ArrayView2<'_, f64>) -> Array2<f64> {
    let n = x.nrows();
    let mut d = Array2::zeros((n, n));
    for i in 0..n {
        let xi = x.row(i);
        let xi = xi
            .as_slice()
            .map(|s| s.to_vec())
            .unwrap_or_else(|| xi.to_vec());
        for j in 0..i {
            let xj = x.row(j);
            let v = match xj.as_slice() {
                Some(s) => squared_distance(&xi, s),
                None => squared_distance(&xi, &xj.to_vec()),
            };
            d[[i, j]] = v;
            d[[j, i]] = v;
        }
    }
    d
}

/// Produces kernel matrix rows for an `n`-point training problem.
pub trait KernelSource {
    fn len(&self) -> usize;
    fn compute_row(&self, i: usize, out: &mut [f64]);
}

/// RBF rows computed from feature vectors on demand.
pub struct RbfRows<'a> {
    pub points: &'a [Vec<f64>],
    pub gamma: f64,
}

impl KernelSource for RbfRows<'_> {
    fn len(&self) -> usize {
        self.points.len()
    }

    fn compute_row(&self, i: usize, out: &mut [f64]) {
        let xi = &self.points[i];
        for (o, xj) in out.iter_mut().zip(self.points) {
            *o = (-self.gamma * squared_distance(xi, xj)).exp();
        }
    }
}

/// Rows of an already-evaluated kernel matrix restricted to `subset`.
pub struct PrecomputedRows<'a> {
    pub kernel: &'a Array2<f64>,
    pub subset: &'a [usize],
}

impl KernelSource for PrecomputedRows<'_> {
    fn len(&self) -> usize {
        self.subset.len()
    }

    fn compute_row(&self, i: usize, out: &mut [f64]) {
        let row = self.kernel.row(self.subset[i]);
        for (o, &j) in out.iter_mut().zip(self.subset) {
            *o = row[j];
        }
    }
}

/// Least-recently-used cache of kernel rows, bounded by a row count.
pub struct RowCache<S> {
    source: S,
    capacity: usize,
    rows: Vec<Option<(Rc<[f64]>, u64)>>,
    cached: usize,
    clock: u64,
    pub misses: u64,
}

impl<S: KernelSource> RowCache<S> {
    pub fn new(source: S, capacity: usize) -> Self {
        let n = source.len();
        RowCache {
            source,
            capacity: capacity.max(2),
            rows: vec![None; n],
            cached: 0,
            clock: 0,
            misses: 0,
        }
    }

    pub fn row(&mut self, i: usize) -> Rc<[f64]> {
        self.clock += 1;
        if let Some((row, stamp)) = &mut self.rows[i] {
            *stamp = self.clock;
            return Rc::clone(row);
        }
        self.misses += 1;
        if self.cached >= self.capacity {
            let victim = self
                .rows
                .iter()
                .enumerate()
                .filter_map(|(k, e)| e.as_ref().map(|(_, s)| (k, *s)))
                .min_by_key(|&(_, s)| s)
                .map(|(k, _)| k)
                .unwrap();
            self.rows[victim] = None;
            self.cached -= 1;
        }
        let mut buf = vec![0.0; self.source.len()];
        self.source.compute_row(i, &mut buf);
        let row: Rc<[f64]> = buf.into();
        self.rows[i] = Some((Rc::clone(&row), self.clock));
        self.cached += 1;
        row
    }
}
