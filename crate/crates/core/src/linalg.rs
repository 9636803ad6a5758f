//! Small dense linear algebra: row-major matrices, Cholesky and LU
//! factorizations, power iteration and conjugate gradients.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::math;

/// Diagonal shift tried once when a Cholesky factorization fails.
pub const CHOLESKY_RETRY_SHIFT: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Build from row-major storage.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(alloc::format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::Dimension("ragged rows".into()));
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: r,
            cols: c,
            data,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    /// `A x`
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `Aᵀ y`
    pub fn tmatvec(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate() {
            if yi != 0.0 {
                axpy(yi, self.row(i), &mut out);
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(alloc::format!(
                "{}x{} times {}x{}",
                self.rows,
                self.cols,
                other.rows,
                other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a != 0.0 {
                    let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                    axpy(a, other.row(k), dst);
                }
            }
        }
        Ok(out)
    }

    /// `Aᵀ diag(w) A` (or `AᵀA` when `w` is `None`), symmetric `cols x cols`.
    pub fn weighted_gram(&self, w: Option<&[f64]>) -> Self {
        let n = self.cols;
        let mut g = Self::zeros(n, n);
        let mut nz: Vec<usize> = Vec::with_capacity(n);
        let mut dense_rows = false;
        for i in 0..self.rows {
            let wi = w.map_or(1.0, |w| w[i]);
            if wi == 0.0 {
                continue;
            }
            let r = self.row(i);
            nz.clear();
            nz.extend((0..n).filter(|&p| r[p] != 0.0));
            if 4 * nz.len() < n {
                for (a, &p) in nz.iter().enumerate() {
                    let s = wi * r[p];
                    g.data[p * n + p] += s * r[p];
                    for &q in &nz[a + 1..] {
                        let v = s * r[q];
                        g.data[p * n + q] += v;
                        g.data[q * n + p] += v;
                    }
                }
            } else {
                dense_rows = true;
                for &p in &nz {
                    let dst = &mut g.data[p * n + p..(p + 1) * n];
                    axpy(wi * r[p], &r[p..], dst);
                }
            }
        }
        if dense_rows {
            for p in 0..n {
                for q in 0..p {
                    g.data[p * n + q] = g.data[q * n + p];
                }
            }
        }
        g
    }

    pub fn add_diag(&mut self, d: &[f64]) {
        for (i, &v) in d.iter().enumerate() {
            self[(i, i)] += v;
        }
    }

    pub fn add_scaled_identity(&mut self, s: f64) {
        for i in 0..self.rows.min(self.cols) {
            self[(i, i)] += s;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| f64::max(m, math::abs(a - b)))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    math::sqrt(dot(a, a))
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| f64::max(m, math::abs(*v)))
}

/// `y += a x`
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    math::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// Compressed sparse rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    ptr: Vec<usize>,
    idx: Vec<usize>,
    val: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_dense(a: &Matrix) -> Self {
        let mut ptr = Vec::with_capacity(a.rows + 1);
        let mut idx = Vec::new();
        let mut val = Vec::new();
        ptr.push(0);
        for i in 0..a.rows {
            for (j, &v) in a.row(i).iter().enumerate() {
                if v != 0.0 {
                    idx.push(j);
                    val.push(v);
                }
            }
            ptr.push(idx.len());
        }
        Self {
            rows: a.rows,
            cols: a.cols,
            ptr,
            idx,
            val,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| {
                let r = self.ptr[i]..self.ptr[i + 1];
                self.idx[r.clone()].iter().zip(&self.val[r]).map(|(&j, v)| v * x[j]).sum()
            })
            .collect()
    }

    pub fn tmatvec(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate().take(self.rows) {
            for k in self.ptr[i]..self.ptr[i + 1] {
                out[self.idx[k]] += self.val[k] * yi;
            }
        }
        out
    }
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`, stored by rows
/// from the first nonzero of each row of `A` to the diagonal. Fill-in stays
/// inside that envelope, so banded systems cost `O(n b²)`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    first: Vec<usize>,
    start: Vec<usize>,
    vals: Vec<f64>,
}

impl Cholesky {
    pub fn factor(a: &Matrix) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::Dimension("Cholesky needs a square matrix".into()));
        }
        let first: Vec<usize> = (0..n)
            .map(|i| a.row(i)[..i].iter().position(|v| *v != 0.0).unwrap_or(i))
            .collect();
        let mut start = Vec::with_capacity(n + 1);
        start.push(0);
        for i in 0..n {
            start.push(start[i] + i - first[i] + 1);
        }
        let mut vals = vec![0.0; start[n]];
        for i in 0..n {
            let (fi, si) = (first[i], start[i]);
            let ai = a.row(i);
            for j in fi..i {
                let k0 = fi.max(first[j]);
                let sj = start[j] - first[j];
                let s = ai[j] - dot(&vals[si + k0 - fi..si + j - fi], &vals[sj + k0..sj + j]);
                vals[si + j - fi] = s / vals[start[j + 1] - 1];
            }
            let li = &vals[si..si + i - fi];
            let d = ai[i] - dot(li, li);
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite);
            }
            vals[si + i - fi] = math::sqrt(d);
        }
        Ok(Self { n, first, start, vals })
    }

    /// Factor `A`, retrying once with `A + 1e-10·I` on failure.
    pub fn factor_regularized(a: &Matrix) -> Result<Self> {
        match Self::factor(a) {
            Ok(c) => Ok(c),
            Err(_) => {
                log::debug!("Cholesky failed, retrying with shift {CHOLESKY_RETRY_SHIFT}");
                let mut b = a.clone();
                b.add_scaled_identity(CHOLESKY_RETRY_SHIFT);
                Self::factor(&b)
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut y = b.to_vec();
        for i in 0..self.n {
            let (f, si, diag) = (self.first[i], self.start[i], self.start[i + 1] - 1);
            let s = dot(&self.vals[si..diag], &y[f..i]);
            y[i] = (y[i] - s) / self.vals[diag];
        }
        for i in (0..self.n).rev() {
            let (f, si, diag) = (self.first[i], self.start[i], self.start[i + 1] - 1);
            y[i] /= self.vals[diag];
            let yi = y[i];
            for (yk, l) in y[f..i].iter_mut().zip(&self.vals[si..diag]) {
                *yk -= l * yi;
            }
        }
        y
    }
}

/// `P A = L U` with partial pivoting.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &Matrix) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::Dimension("LU needs a square matrix".into()));
        }
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = norm_inf(a.as_slice()).max(f64::MIN_POSITIVE);
        for k in 0..n {
            let mut p = k;
            let mut best = math::abs(lu[(k, k)]);
            for i in k + 1..n {
                let v = math::abs(lu[(i, k)]);
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= scale * f64::EPSILON * n as f64 || !best.is_finite() {
                return Err(Error::Singular);
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        let v = lu[(k, j)];
                        lu[(i, j)] -= f * v;
                    }
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.rows();
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s = dot(&self.lu.data[i * n..i * n + i], &y[..i]);
            y[i] -= s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.lu[(i, k)] * y[k];
            }
            y[i] = s / self.lu[(i, i)];
        }
        y
    }
}

/// Largest eigenvalue of a symmetric positive semidefinite operator by
/// power iteration.
pub fn power_iteration(
    n: usize,
    mut apply: impl FnMut(&[f64]) -> Vec<f64>,
    max_iters: usize,
    rtol: f64,
) -> f64 {
    if n == 0 {
        return 0.0;
    }
    // fixed, non-degenerate start vector
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * ((i * 7919) % 101) as f64).collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut lambda = 0.0;
    for _ in 0..max_iters {
        let w = apply(&v);
        let nw = norm2(&w);
        if nw == 0.0 {
            return 0.0;
        }
        let next = dot(&v, &w);
        v = w.into_iter().map(|x| x / nw).collect();
        if math::abs(next - lambda) <= rtol * math::abs(next) {
            return next.max(nw);
        }
        lambda = next;
    }
    lambda
}

/// Conjugate gradients for a symmetric positive definite operator.
pub fn conjugate_gradient(
    mut apply: impl FnMut(&[f64]) -> Vec<f64>,
    b: &[f64],
    rtol: f64,
    max_iters: usize,
) -> Vec<f64> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let target = rtol * rtol * rr;
    for _ in 0..max_iters {
        if rr <= target || rr == 0.0 {
            break;
        }
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let a = rr / pap;
        axpy(a, &p, &mut x);
        axpy(-a, &ap, &mut r);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        rr = rr_new;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spd(n: usize) -> Matrix {
        let b = Matrix::from_fn(n + 2, n, |i, j| ((i * 31 + j * 17) % 11) as f64 - 5.0);
        let mut g = b.weighted_gram(None);
        g.add_scaled_identity(0.5);
        g
    }

    #[test]
    fn gram_matches_explicit_product() {
        let a = Matrix::from_fn(5, 3, |i, j| (i as f64) - 2.0 * j as f64 + 0.3);
        let w = [1.0, 2.0, 0.5, 0.0, 3.0];
        let g = a.weighted_gram(Some(&w));
        let mut wa = a.clone();
        for i in 0..5 {
            wa.row_mut(i).iter_mut().for_each(|v| *v *= w[i]);
        }
        let explicit = a.transpose().matmul(&wa).unwrap();
        assert!(g.max_abs_diff(&explicit) < 1e-12);
    }

    #[test]
    fn cholesky_solves() {
        let a = spd(6);
        let b: Vec<f64> = (0..6).map(|i| i as f64 - 2.5).collect();
        let x = Cholesky::factor(&a).unwrap().solve(&b);
        let r = sub(&a.matvec(&x), &b);
        assert!(norm2(&r) < 1e-9);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert_eq!(Cholesky::factor(&a).unwrap_err(), Error::NotPositiveDefinite);
    }

    #[test]
    fn cholesky_retry_handles_singular_psd() {
        let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(Cholesky::factor(&a).is_err());
        assert!(Cholesky::factor_regularized(&a).is_ok());
    }

    #[test]
    fn lu_solves_nonsymmetric() {
        let a = Matrix::from_rows(&[
            vec![0.0, 2.0, 1.0],
            vec![1.0, -1.0, 0.5],
            vec![3.0, 0.0, -2.0],
        ])
        .unwrap();
        let b = [1.0, 2.0, 3.0];
        let x = Lu::factor(&a).unwrap().solve(&b);
        let r = sub(&a.matvec(&x), &b);
        assert!(norm2(&r) < 1e-12);
    }

    #[test]
    fn lu_detects_singular() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(Lu::factor(&a).is_err());
    }

    #[test]
    fn csr_matches_dense() {
        let a = Matrix::from_fn(5, 7, |i, j| if (i + 2 * j) % 3 == 0 { (i + j) as f64 - 2.5 } else { 0.0 });
        let s = CsrMatrix::from_dense(&a);
        let x: Vec<f64> = (0..7).map(|i| (i as f64).cos()).collect();
        let y: Vec<f64> = (0..5).map(|i| (i as f64).sin()).collect();
        assert_eq!(s.matvec(&x), a.matvec(&x));
        assert!(dist2(&s.tmatvec(&y), &a.tmatvec(&y)) < 1e-14);
    }

    #[test]
    fn banded_cholesky_matches_dense_gram() {
        let a = Matrix::from_fn(40, 40, |i, j| if i >= j && i - j < 4 { 1.0 + (i - j) as f64 } else { 0.0 });
        let mut g = a.weighted_gram(None);
        let mut reference = a.transpose().matmul(&a).unwrap();
        assert!(g.max_abs_diff(&reference) < 1e-12);
        g.add_scaled_identity(0.5);
        reference.add_scaled_identity(0.5);
        let b: Vec<f64> = (0..40).map(|i| (i as f64 * 0.3).sin()).collect();
        let x = Cholesky::factor(&g).unwrap().solve(&b);
        assert!(dist2(&reference.matvec(&x), &b) < 1e-10);
    }

    #[test]
    fn power_iteration_on_diagonal() {
        let d = [1.0, 7.0, 3.0, 0.5];
        let l = power_iteration(4, |v| v.iter().zip(&d).map(|(a, b)| a * b).collect(), 10_000, 1e-14);
        assert_relative_eq!(l, 7.0, max_relative = 1e-8);
    }

    #[test]
    fn cg_matches_cholesky() {
        let a = spd(8);
        let b: Vec<f64> = (0..8).map(|i| (i as f64).sin()).collect();
        let x1 = Cholesky::factor(&a).unwrap().solve(&b);
        let x2 = conjugate_gradient(|v| a.matvec(v), &b, 1e-14, 200);
        assert!(dist2(&x1, &x2) < 1e-8);
    }
}
