//! Dense real vectors, matrices and block vectors on finite-dimensional
//! coordinate spaces, plus the two spectral routines the rest of the crate
//! leans on: power iteration for operator norms and cyclic Jacobi for
//! symmetric eigenvalues.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// A point of a coordinate space `R^d`, `d >= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidArgument("vector must have dimension >= 1".into()));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "vector coordinate {i} is not finite ({})",
                coords[i]
            )));
        }
        Ok(Self(coords))
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "vector dimension must be >= 1");
        Self(vec![0.0; dim])
    }

    /// Wraps coordinates produced by arithmetic on existing vectors.
    pub(crate) fn from_vec(coords: Vec<f64>) -> Self {
        debug_assert!(!coords.is_empty());
        Self(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn add(&self, other: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), other.dim());
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), other.dim());
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, factor: f64) -> Vector {
        Vector(self.0.iter().map(|a| a * factor).collect())
    }

    /// Euclidean distance to `other`.
    pub fn distance(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        Vector::new(coords)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.0
    }
}

impl std::ops::Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl fmt::Display for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Dense row-major real matrix, a bounded linear operator `R^cols -> R^rows`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_rows = rows.len();
        if n_rows == 0 {
            return Err(Error::InvalidArgument("matrix must have at least one row".into()));
        }
        let n_cols = rows[0].len();
        if n_cols == 0 {
            return Err(Error::InvalidArgument("matrix must have at least one column".into()));
        }
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::InvalidArgument(format!(
                    "matrix row {i} has {} entries, expected {n_cols}",
                    row.len()
                )));
            }
            data.extend(row);
        }
        Self::from_row_major(n_rows, n_cols, data)
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "matrix shape {rows}x{cols} is empty"
            )));
        }
        check_dim("row-major matrix data", rows * cols, data.len())?;
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("matrix entries must be finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix shape must be non-empty");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m.data[i * n + i] = *v;
        }
        m
    }

    /// Square matrix with `value` on the diagonal.
    pub fn scalar(n: usize, value: f64) -> Self {
        let mut m = Self::identity(n);
        m.data.iter_mut().for_each(|x| *x *= value);
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub(crate) fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// `M v`.
    pub fn apply(&self, v: &Vector) -> Result<Vector> {
        check_dim("matrix-vector product (columns vs vector)", self.cols, v.dim())?;
        Ok(Vector::from_vec(self.apply_slice(v.as_slice())))
    }

    /// `M^T v`, the adjoint in the standard inner product.
    pub fn adjoint_apply(&self, v: &Vector) -> Result<Vector> {
        check_dim("adjoint product (rows vs vector)", self.rows, v.dim())?;
        Ok(Vector::from_vec(self.adjoint_apply_slice(v.as_slice())))
    }

    pub(crate) fn apply_slice(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub(crate) fn adjoint_apply_slice(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (i, vi) in v.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// Multiplies row `i` by `factors[i]`, i.e. returns `diag(factors) M`.
    pub fn scale_rows(&self, factors: &[f64]) -> Result<Matrix> {
        check_dim("row scaling", self.rows, factors.len())?;
        let mut out = self.clone();
        for (i, f) in factors.iter().enumerate() {
            out.data[i * self.cols..(i + 1) * self.cols]
                .iter_mut()
                .for_each(|x| *x *= f);
        }
        Ok(out)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| *x == 0.0)
    }
}

/// A point `(x_1, ..., x_n)` of the product space `H_1 x ... x H_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vector>", into = "Vec<Vector>")]
pub struct BlockVector {
    blocks: Vec<Vector>,
}

impl BlockVector {
    pub fn new(blocks: Vec<Vector>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidArgument(
                "block vector must have at least one block".into(),
            ));
        }
        Ok(Self { blocks })
    }

    pub fn zeros(dims: &[usize]) -> Self {
        assert!(!dims.is_empty());
        Self {
            blocks: dims.iter().map(|d| Vector::zeros(*d)).collect(),
        }
    }

    /// Splits a flat vector into consecutive blocks of the given sizes.
    pub fn from_flat(flat: &Vector, dims: &[usize]) -> Result<Self> {
        check_dim("flat vector vs block sizes", dims.iter().sum(), flat.dim())?;
        let mut offset = 0;
        let mut blocks = Vec::with_capacity(dims.len());
        for d in dims {
            blocks.push(Vector::new(flat.as_slice()[offset..offset + d].to_vec())?);
            offset += d;
        }
        Self::new(blocks)
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn blocks(&self) -> &[Vector] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &Vector {
        &self.blocks[i]
    }

    pub fn into_blocks(self) -> Vec<Vector> {
        self.blocks
    }

    pub fn dims(&self) -> Vec<usize> {
        self.blocks.iter().map(Vector::dim).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(Vector::dim).sum()
    }

    pub fn flatten(&self) -> Vector {
        Vector::from_vec(
            self.blocks
                .iter()
                .flat_map(|b| b.as_slice().iter().copied())
                .collect(),
        )
    }

    pub fn norm_sq(&self) -> f64 {
        self.blocks.iter().map(Vector::norm_sq).sum()
    }

    /// Product-space norm `sqrt(sum_i |x_i|^2)`.
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn distance(&self, other: &BlockVector) -> f64 {
        debug_assert_eq!(self.dims(), other.dims());
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| {
                let d = a.distance(b);
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Largest per-block euclidean distance.
    pub fn max_block_distance(&self, other: &BlockVector) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.distance(b))
            .fold(0.0, f64::max)
    }
}

impl TryFrom<Vec<Vector>> for BlockVector {
    type Error = Error;

    fn try_from(blocks: Vec<Vector>) -> Result<Self> {
        BlockVector::new(blocks)
    }
}

impl From<BlockVector> for Vec<Vector> {
    fn from(b: BlockVector) -> Self {
        b.blocks
    }
}

/// Free-function form of [`BlockVector::norm`].
pub fn block_norm(x: &BlockVector) -> f64 {
    x.norm()
}

/// Settings for [`spectral_norm`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormOptions {
    pub rel_tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            max_iter: 10_000,
            seed: 0,
        }
    }
}

/// Largest singular value of `m` by power iteration on `M^T M`.
///
/// The iteration stops once the eigen-residual `|G v - lambda v|` of the Gram
/// matrix falls below `rel_tol * lambda`, which places `lambda` within that
/// relative distance of an eigenvalue of `G`.
pub fn spectral_norm(m: &Matrix, opts: &NormOptions) -> Result<f64> {
    if !(opts.rel_tol > 0.0) {
        return Err(Error::InvalidArgument("rel_tol must be positive".into()));
    }
    if opts.max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be >= 1".into()));
    }
    if m.is_zero() {
        return Ok(0.0);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut v: Vec<f64> = (0..m.cols()).map(|_| rng.random_range(-1.0..1.0)).collect();
    normalize(&mut v);

    let mut estimate = 0.0;
    for _ in 0..opts.max_iter {
        let mv = m.apply_slice(&v);
        let w = m.adjoint_apply_slice(&mv);
        let lambda: f64 = mv.iter().map(|x| x * x).sum();
        estimate = lambda.sqrt();
        let w_norm = norm(&w);
        if w_norm == 0.0 {
            // v landed in the kernel; restart from a fresh direction.
            v = (0..m.cols()).map(|_| rng.random_range(-1.0..1.0)).collect();
            normalize(&mut v);
            continue;
        }
        let residual = w
            .iter()
            .zip(&v)
            .map(|(wi, vi)| (wi - lambda * vi).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= opts.rel_tol * lambda {
            return Ok(estimate);
        }
        v = w.into_iter().map(|x| x / w_norm).collect();
    }
    Err(Error::SpectralNotConverged {
        iterations: opts.max_iter,
        estimate,
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn normalize(v: &mut [f64]) {
    let n = norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    } else if let Some(first) = v.first_mut() {
        *first = 1.0;
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues(m: &Matrix) -> Result<Vec<f64>> {
    let n = m.rows();
    check_dim("symmetric eigenvalues (square matrix)", n, m.cols())?;
    let mut a = m.to_rows();
    let scale: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();

    let off = |a: &Vec<Vec<f64>>| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i][j] * a[i][j];
                }
            }
        }
        s.sqrt()
    };

    let mut converged = off(&a) <= 1e-15 * scale;
    let mut sweeps = 0;
    while !converged && sweeps < JACOBI_MAX_SWEEPS {
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
        sweeps += 1;
        converged = off(&a) <= 1e-15 * scale;
    }
    if !converged {
        return Err(Error::EigenNotConverged { sweeps });
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec()).unwrap()
    }

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn apply_examples() {
        assert_eq!(Matrix::identity(2).apply(&v(&[3.0, -4.0])).unwrap(), v(&[3.0, -4.0]));
        assert_eq!(
            m(&[&[0.0, 1.0], &[1.0, 0.0]]).apply(&v(&[1.0, 2.0])).unwrap(),
            v(&[2.0, 1.0])
        );
        assert_eq!(
            m(&[&[2.0, 0.0], &[0.0, 0.5]]).apply(&v(&[1.0, 1.0])).unwrap(),
            v(&[2.0, 0.5])
        );
    }

    #[test]
    fn apply_dimension_mismatch_names_both_sizes() {
        let err = Matrix::identity(2).apply(&v(&[1.0, 2.0, 3.0])).unwrap_err();
        match err {
            Error::DimensionMismatch { expected, found, .. } => {
                assert_eq!((expected, found), (2, 3));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn adjoint_examples() {
        assert_eq!(
            Matrix::identity(2).adjoint_apply(&v(&[1.0, 2.0])).unwrap(),
            v(&[1.0, 2.0])
        );
        assert_eq!(
            m(&[&[0.0, 1.0], &[0.0, 0.0]]).adjoint_apply(&v(&[1.0, 0.0])).unwrap(),
            v(&[0.0, 1.0])
        );
        assert!(Matrix::zeros(3, 2).adjoint_apply(&v(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn spectral_norm_examples() {
        let opts = NormOptions::default();
        assert!((spectral_norm(&Matrix::identity(2), &opts).unwrap() - 1.0).abs() < 1e-12);
        assert!((spectral_norm(&Matrix::diag(&[3.0, -4.0]), &opts).unwrap() - 4.0).abs() < 1e-9);
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        let s = spectral_norm(&m(&[&[1.0, 1.0], &[0.0, 1.0]]), &opts).unwrap();
        assert!((s - golden).abs() < 1e-8, "{s}");
        assert_eq!(spectral_norm(&Matrix::zeros(2, 3), &opts).unwrap(), 0.0);
        assert!((spectral_norm(&m(&[&[-0.7]]), &opts).unwrap() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn spectral_norm_reports_last_estimate() {
        let opts = NormOptions {
            rel_tol: 1e-14,
            max_iter: 1,
            seed: 3,
        };
        let a = m(&[&[1.0, 0.3, 0.0], &[0.2, 0.9, 0.1], &[0.0, 0.4, 0.95]]);
        match spectral_norm(&a, &opts) {
            Err(Error::SpectralNotConverged { iterations, estimate }) => {
                assert_eq!(iterations, 1);
                assert!(estimate > 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn spectral_norm_rejects_bad_options() {
        let mut opts = NormOptions {
            rel_tol: 0.0,
            ..NormOptions::default()
        };
        assert!(spectral_norm(&Matrix::identity(1), &opts).is_err());
        opts.rel_tol = 1e-8;
        opts.max_iter = 0;
        assert!(spectral_norm(&Matrix::identity(1), &opts).is_err());
    }

    #[test]
    fn block_norm_examples() {
        let b = |blocks: &[&[f64]]| BlockVector::new(blocks.iter().map(|c| v(c)).collect()).unwrap();
        assert_eq!(block_norm(&b(&[&[0.0], &[0.0, 0.0]])), 0.0);
        assert_eq!(block_norm(&b(&[&[3.0], &[4.0]])), 5.0);
        assert_eq!(block_norm(&b(&[&[1.0, 1.0], &[1.0, 1.0]])), 2.0);
    }

    #[test]
    fn jacobi_eigenvalues() {
        let e = symmetric_eigenvalues(&m(&[&[2.0, 1.0], &[1.0, 2.0]])).unwrap();
        assert!((e[0] - 1.0).abs() < 1e-14 && (e[1] - 3.0).abs() < 1e-14);
        let e = symmetric_eigenvalues(&Matrix::diag(&[-1.0, 4.0, 0.5])).unwrap();
        assert_eq!(e, vec![-1.0, 0.5, 4.0]);
    }

    #[test]
    fn vector_rejects_empty_and_non_finite() {
        assert!(Vector::new(vec![]).is_err());
        assert!(Vector::new(vec![f64::NAN]).is_err());
        assert!(Matrix::from_rows(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
    }
}
