//! Dense matrices, exact k-nearest-neighbour search and locally linear
//! reconstruction weights.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Default Tikhonov regularization for the local Gram system, relative to its trace.
pub const DEFAULT_LLE_REG: f64 = 1e-3;

/// Row-major dense matrix of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::InvalidArgument(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite entry at row {}, column {}",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.values[i * n + i] = 1.0;
        }
        m
    }

    /// Build from a list of equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::InvalidArgument(format!(
                    "row {i} has {} columns, expected {cols}",
                    r.len()
                )));
            }
            values.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, values)
    }

    pub fn from_array(array: &Array2<f64>) -> Result<Self> {
        let (rows, cols) = array.dim();
        Self::new(rows, cols, array.iter().copied().collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.cols + j] = v;
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape((self.rows, self.cols), &self.values)
            .expect("length checked at construction")
    }

    pub fn to_array(&self) -> Array2<f64> {
        self.view().to_owned()
    }

    /// New matrix made of the given rows, in order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut values = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Self {
            rows: indices.len(),
            cols: self.cols,
            values,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(pos) => Err(Error::InvalidData(format!(
                "non-finite entry at row {}",
                pos / self.cols.max(1)
            ))),
            None => Ok(()),
        }
    }
}

/// The `k` nearest rows of a query row, excluding the query itself.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighbourSet {
    pub center_index: usize,
    pub neighbour_indices: Vec<usize>,
    pub distances: Vec<f64>,
}

/// Affine reconstruction weights of a row from its neighbours; they sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalWeights {
    pub center_index: usize,
    pub neighbour_indices: Vec<usize>,
    pub weights: Vec<f64>,
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn euclidean_norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Exact Euclidean k-nearest-neighbour search. Ties go to the lower row index.
pub fn knn_search(data: &DenseMatrix, query_index: usize, k: usize) -> Result<NeighbourSet> {
    let n = data.rows();
    if query_index >= n {
        return Err(Error::InvalidArgument(format!(
            "query index {query_index} out of range for {n} rows"
        )));
    }
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "k must satisfy 1 <= k <= N-1 (k = {k}, N = {n})"
        )));
    }
    data.check_finite()?;
    let query = data.row(query_index);
    let mut candidates: Vec<(f64, usize)> = (0..n)
        .filter(|&j| j != query_index)
        .map(|j| (squared_distance(query, data.row(j)), j))
        .collect();
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    candidates.truncate(k);
    Ok(NeighbourSet {
        center_index: query_index,
        neighbour_indices: candidates.iter().map(|c| c.1).collect(),
        distances: candidates.iter().map(|c| c.0.sqrt()).collect(),
    })
}

/// Constrained least-squares weights reconstructing the centre row from its
/// neighbours: solves `(C + reg * trace(C) * I) w = 1` on the local Gram matrix
/// `C` and rescales `w` to sum to one.
pub fn lle_weights(
    data: &DenseMatrix,
    neighbours: &NeighbourSet,
    reg: f64,
) -> Result<LocalWeights> {
    if !reg.is_finite() || reg < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "reg must be >= 0, got {reg}"
        )));
    }
    let n = data.rows();
    let center = neighbours.center_index;
    if center >= n
        || neighbours
            .neighbour_indices
            .iter()
            .any(|&j| j >= n || j == center)
    {
        return Err(Error::InvalidArgument(
            "neighbour set does not match the data".into(),
        ));
    }
    let k = neighbours.neighbour_indices.len();
    if k == 0 {
        return Err(Error::InvalidArgument("empty neighbour set".into()));
    }
    let x = data.row(center);
    let diffs: Vec<Vec<f64>> = neighbours
        .neighbour_indices
        .iter()
        .map(|&j| data.row(j).iter().zip(x).map(|(a, b)| a - b).collect())
        .collect();
    let mut gram = DenseMatrix::zeros(k, k);
    for a in 0..k {
        for b in a..k {
            let v: f64 = diffs[a].iter().zip(&diffs[b]).map(|(p, q)| p * q).sum();
            gram.set(a, b, v);
            gram.set(b, a, v);
        }
    }
    if reg > 0.0 {
        let trace: f64 = (0..k).map(|a| gram.get(a, a)).sum();
        // all neighbours coincide with the centre: fall back to an absolute ridge
        let ridge = if trace > 0.0 { reg * trace } else { reg };
        for a in 0..k {
            gram.set(a, a, gram.get(a, a) + ridge);
        }
    }
    let mut w = solve_spd(&gram, &vec![1.0; k])?;
    let total: f64 = w.iter().sum();
    if !total.is_finite() || total.abs() < f64::EPSILON {
        return Err(Error::NumericFailure(
            "local weights cannot be normalized; increase reg".into(),
        ));
    }
    w.iter_mut().for_each(|v| *v /= total);
    Ok(LocalWeights {
        center_index: center,
        neighbour_indices: neighbours.neighbour_indices.clone(),
        weights: w,
    })
}

/// Solve a symmetric positive-definite system by Cholesky factorization.
///
/// Fails with [`Error::NumericFailure`] when the factorization breaks down or
/// the solution does not reproduce `rhs` to a relative residual of 1e-8.
pub fn solve_spd(system: &DenseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = system.rows();
    if system.cols() != n {
        return Err(Error::InvalidArgument(format!(
            "system must be square, got {}x{}",
            n,
            system.cols()
        )));
    }
    if rhs.len() != n {
        return Err(Error::InvalidArgument(format!(
            "rhs has length {}, expected {n}",
            rhs.len()
        )));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (system.get(i, j), system.get(j, i));
            if (a - b).abs() > 1e-9 * (1.0 + a.abs().max(b.abs())) {
                return Err(Error::InvalidArgument(format!(
                    "system is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    let a = DMatrix::from_row_slice(n, n, system.values());
    let b = DVector::from_column_slice(rhs);
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NumericFailure("system is not positive definite".into()))?;
    let mut y = chol.solve(&b);
    // one step of iterative refinement
    let r = &b - &a * &y;
    y += chol.solve(&r);
    let residual = (&b - &a * &y).norm();
    if residual.is_nan() || residual > 1e-8 * b.norm().max(f64::MIN_POSITIVE) {
        return Err(Error::NumericFailure(format!(
            "system is too ill-conditioned (residual {residual:e})"
        )));
    }
    Ok(y.iter().copied().collect())
}
