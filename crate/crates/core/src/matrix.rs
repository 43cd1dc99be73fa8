//! Dense row-major real matrices.
//!
//! Only the handful of operations the adaptation pipeline needs are provided:
//! construction, products, block assembly and a few norms. Every constructor
//! that accepts caller data rejects non-finite entries.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{JipError, Result};

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Matrix::zeros(diag.len(), diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from row-major data, checking the length and that every
    /// entry is finite.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(JipError::invalid(format!(
                "{} entries cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(JipError::invalid(format!(
                "non-finite entry at ({}, {})",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(JipError::invalid(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Matrix::from_vec(rows.len(), cols, data)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Result<Self> {
        let mut m = Matrix::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(JipError::invalid(format!(
                    "column {j} has {} entries, expected {rows}",
                    c.len()
                )));
            }
            m.set_column(j, c);
        }
        Ok(m)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[f64]) {
        debug_assert_eq!(values.len(), self.rows);
        for (i, &v) in values.iter().enumerate() {
            self[(i, j)] = v;
        }
    }

    pub fn select_columns(&self, idx: &[usize]) -> Matrix {
        Matrix::from_fn(self.rows, idx.len(), |i, j| self[(i, idx[j])])
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    /// Rows `start..end` as a new matrix.
    pub fn row_block(&self, start: usize, end: usize) -> Matrix {
        Matrix {
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(JipError::invalid(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        let n = rhs.cols;
        for i in 0..self.rows {
            let out_row = &mut out.data[i * n..(i + 1) * n];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let b_row = &rhs.data[k * n..(k + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · rhs` without materialising the transpose.
    pub fn t_matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.rows != rhs.rows {
            return Err(JipError::invalid(format!(
                "cannot multiply ({}x{})ᵀ by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let n = rhs.cols;
        let mut out = Matrix::zeros(self.cols, n);
        for k in 0..self.rows {
            let b_row = rhs.row(k);
            for (i, &a) in self.row(k).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * n..(i + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self · rhsᵀ`.
    pub fn matmul_t(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.cols {
            return Err(JipError::invalid(format!(
                "cannot multiply {}x{} by ({}x{})ᵀ",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(Matrix::from_fn(self.rows, rhs.rows, |i, j| {
            dot(self.row(i), rhs.row(j))
        }))
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    fn check_same_shape(&self, other: &Matrix, op: &str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(JipError::invalid(format!(
                "cannot {op} {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.check_same_shape(other, "add")?;
        let mut out = self.clone();
        out.add_scaled_in_place(1.0, other);
        Ok(out)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.check_same_shape(other, "subtract")?;
        let mut out = self.clone();
        out.add_scaled_in_place(-1.0, other);
        Ok(out)
    }

    /// `self += scale · other`. Shapes must match.
    pub fn add_scaled_in_place(&mut self, scale: f64, other: &Matrix) {
        assert_eq!(self.shape(), other.shape(), "shape mismatch");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add_diagonal(&mut self, v: f64) {
        for i in 0..self.rows.min(self.cols) {
            self[(i, i)] += v;
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).iter().sum()).collect()
    }

    /// Largest absolute asymmetry `max |Mᵢⱼ − Mⱼᵢ|`; infinite for non-square input.
    pub fn asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// Symmetric within `tol · max|entry|`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.is_square() && self.asymmetry() <= tol * self.max_abs()
    }

    /// Replaces the matrix with `(M + Mᵀ)/2`. Exactly symmetric afterwards.
    pub fn symmetrize(&mut self) {
        assert!(self.is_square(), "symmetrize needs a square matrix");
        let n = self.rows;
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (self.data[i * n + j] + self.data[j * n + i]);
                self.data[i * n + j] = avg;
                self.data[j * n + i] = avg;
            }
        }
    }

    /// `Tr(Wᵀ · self · W)`.
    pub fn trace_quadratic(&self, w: &Matrix) -> Result<f64> {
        let mw = self.matmul(w)?;
        if w.rows != mw.rows {
            return Err(JipError::invalid("trace_quadratic needs a square matrix"));
        }
        Ok(w.data.iter().zip(&mw.data).map(|(a, b)| a * b).sum())
    }

    /// Stacks `self` on top of `below`.
    pub fn vstack(&self, below: &Matrix) -> Result<Matrix> {
        if self.cols != below.cols {
            return Err(JipError::invalid(format!(
                "cannot stack {} columns on {} columns",
                self.cols, below.cols
            )));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&below.data);
        Ok(Matrix {
            rows: self.rows + below.rows,
            cols: self.cols,
            data,
        })
    }

    /// Places `self` to the left of `right`.
    pub fn hstack(&self, right: &Matrix) -> Result<Matrix> {
        if self.rows != right.rows {
            return Err(JipError::invalid(format!(
                "cannot place {} rows beside {} rows",
                self.rows, right.rows
            )));
        }
        Ok(Matrix::from_fn(self.rows, self.cols + right.cols, |i, j| {
            if j < self.cols {
                self[(i, j)]
            } else {
                right[(i, j - self.cols)]
            }
        }))
    }

    /// Euclidean norm of every column.
    pub fn column_norms(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (a, v) in acc.iter_mut().zip(self.row(i)) {
                *a += v * v;
            }
        }
        acc.into_iter().map(f64::sqrt).collect()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// The centering matrix `Iₙ − (1/n)·1·1ᵀ`.
pub fn centering_matrix(n: usize) -> Result<Matrix> {
    if n == 0 {
        return Err(JipError::invalid("centering matrix needs n >= 1"));
    }
    let off = -1.0 / n as f64;
    let diag = 1.0 + off;
    Ok(Matrix::from_fn(n, n, |i, j| if i == j { diag } else { off }))
}

/// Places the blocks along the diagonal; every off-diagonal entry is exactly zero.
pub fn assemble_block_diag(blocks: &[&Matrix]) -> Result<Matrix> {
    if blocks.is_empty() {
        return Err(JipError::invalid("block_diag needs at least one block"));
    }
    let rows = blocks.iter().map(|b| b.rows).sum();
    let cols = blocks.iter().map(|b| b.cols).sum();
    let mut out = Matrix::zeros(rows, cols);
    let (mut r0, mut c0) = (0, 0);
    for b in blocks {
        for i in 0..b.rows {
            out.data[(r0 + i) * cols + c0..(r0 + i) * cols + c0 + b.cols].copy_from_slice(b.row(i));
        }
        r0 += b.rows;
        c0 += b.cols;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centering_small_cases() {
        assert_eq!(centering_matrix(1).unwrap(), Matrix::from_rows(&[[0.0]]).unwrap());
        assert_eq!(
            centering_matrix(2).unwrap(),
            Matrix::from_rows(&[[0.5, -0.5], [-0.5, 0.5]]).unwrap()
        );
        assert!(matches!(centering_matrix(0), Err(JipError::InvalidArgument(_))));
    }

    #[test]
    fn centering_is_idempotent_and_annihilates_ones() {
        for n in 1..=50 {
            let h = centering_matrix(n).unwrap();
            let hh = h.matmul(&h).unwrap();
            let tol = if n == 3 { 1e-14 } else { 1e-12 };
            assert!(hh.sub(&h).unwrap().max_abs() <= tol, "n={n}");
            assert!(h.row_sums().iter().all(|s| s.abs() <= tol), "n={n}");
            assert_eq!(h.asymmetry(), 0.0);
        }
    }

    #[test]
    fn block_diag_cases() {
        let a = Matrix::from_rows(&[[1.0]]).unwrap();
        let b = Matrix::from_rows(&[[2.0]]).unwrap();
        assert_eq!(
            assemble_block_diag(&[&a, &b]).unwrap(),
            Matrix::from_rows(&[[1.0, 0.0], [0.0, 2.0]]).unwrap()
        );
        assert_eq!(assemble_block_diag(&[&a]).unwrap(), a);

        let xs = Matrix::from_fn(3, 5, |i, j| (i * 5 + j) as f64 + 1.0);
        let xt = Matrix::from_fn(2, 4, |i, j| -((i * 4 + j) as f64) - 1.0);
        let x = assemble_block_diag(&[&xs, &xt]).unwrap();
        assert_eq!(x.shape(), (5, 9));
        for i in 0..5 {
            for j in 0..9 {
                let inside = (i < 3 && j < 5) || (i >= 3 && j >= 5);
                if !inside {
                    assert_eq!(x[(i, j)], 0.0);
                }
            }
        }
        assert!(assemble_block_diag(&[]).is_err());
    }

    #[test]
    fn rejects_non_finite_and_ragged() {
        assert!(Matrix::from_vec(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(Matrix::from_vec(2, 2, vec![1.0; 3]).is_err());
        assert!(Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn products_agree() {
        let a = Matrix::from_fn(3, 4, |i, j| (i as f64 + 1.0) * (j as f64 - 1.5));
        let b = Matrix::from_fn(4, 2, |i, j| (i + 2 * j) as f64 * 0.5);
        let ab = a.matmul(&b).unwrap();
        assert_eq!(a.transpose().t_matmul(&b).unwrap(), ab);
        assert_eq!(a.matmul_t(&b.transpose()).unwrap(), ab);
        assert!(a.matmul(&a).is_err());
    }
}
