//! Small dense linear algebra: row-major matrices, LU with partial pivoting,
//! and the cyclic Jacobi eigensolver for symmetric matrices.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest matrix dimension handled by the dense routines.
pub const DENSE_LIMIT: usize = 2000;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
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

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).fold(T::zero(), |acc, (&a, &b)| acc + a * b))
            .collect()
    }

    /// Bitwise symmetry check.
    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)].to_bits_eq(self[(j, i)])))
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt()
    }
}

trait BitsEq {
    fn to_bits_eq(self, other: Self) -> bool;
}

impl<T: Scalar> BitsEq for T {
    fn to_bits_eq(self, other: Self) -> bool {
        // equal values, or both NaN; +0 and -0 are treated as distinct
        (self == other && self.is_sign_negative() == other.is_sign_negative()) || (self.is_nan() && other.is_nan())
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization `PA = LU` with partial pivoting.
#[derive(Clone, Debug)]
pub struct LuFactors<T> {
    n: usize,
    lu: Vec<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> LuFactors<T> {
    /// Returns `None` when a pivot vanishes relative to the matrix scale.
    pub fn factor(a: &DenseMatrix<T>) -> Option<Self> {
        assert_eq!(a.rows, a.cols, "LU needs a square matrix");
        let n = a.rows;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.data.iter().fold(T::zero(), |m, x| m.max(x.abs()));
        let tiny = scale * T::epsilon() * T::from_count(n.max(1));
        for k in 0..n {
            let (piv, pmax) = (k..n)
                .map(|i| (i, lu[i * n + k].abs()))
                .fold((k, -T::one()), |best, c| if c.1 > best.1 { c } else { best });
            if !(pmax > tiny) {
                return None;
            }
            if piv != k {
                for j in 0..n {
                    lu.swap(k * n + j, piv * n + j);
                }
                perm.swap(k, piv);
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / pivot;
                lu[i * n + k] = f;
                if f != T::zero() {
                    for j in k + 1..n {
                        let u = lu[k * n + j];
                        lu[i * n + j] -= f * u;
                    }
                }
            }
        }
        Some(Self { n, lu, perm })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s = row.iter().zip(&x[..i]).fold(T::zero(), |acc, (&l, &y)| acc + l * y);
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n + i + 1..(i + 1) * n];
            let s = row.iter().zip(&x[i + 1..]).fold(T::zero(), |acc, (&u, &y)| acc + u * y);
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        x
    }
}

/// Eigen-decomposition of a symmetric matrix. Eigenvalues ascending; column
/// `j` of `vectors` belongs to `values[j]`.
#[derive(Clone, Debug)]
pub struct SymmetricEigen<T> {
    pub values: Vec<T>,
    pub vectors: DenseMatrix<T>,
    pub sweeps: usize,
}

const MAX_SWEEPS: usize = 100;

impl<T: Scalar> SymmetricEigen<T> {
    /// Cyclic Jacobi rotations until the off-diagonal mass is negligible.
    ///
    /// Only the upper triangle of `a` is read.
    pub fn jacobi(a: &DenseMatrix<T>) -> Result<Self> {
        assert_eq!(a.rows, a.cols, "eigensolver needs a square matrix");
        let n = a.rows;
        if n > DENSE_LIMIT {
            return Err(Error::DenseTooLarge {
                size: n,
                limit: DENSE_LIMIT,
            });
        }
        let mut m = DenseMatrix::from_fn(n, n, |i, j| if i <= j { a[(i, j)] } else { a[(j, i)] });
        let mut v = DenseMatrix::identity(n);
        let scale = m.frobenius_norm();
        let tol = T::epsilon() * scale;

        let off = |m: &DenseMatrix<T>| {
            let mut s = T::zero();
            for i in 0..n {
                for j in i + 1..n {
                    s += m[(i, j)] * m[(i, j)];
                }
            }
            (s + s).sqrt()
        };

        let mut sweeps = 0;
        while off(&m) > tol {
            if sweeps == MAX_SWEEPS {
                return Err(Error::EigenNotConverged {
                    sweeps,
                    residual: off(&m).to_f64_lossy(),
                });
            }
            sweeps += 1;
            for p in 0..n {
                for q in p + 1..n {
                    let apq = m[(p, q)];
                    if apq == T::zero() {
                        continue;
                    }
                    let (app, aqq) = (m[(p, p)], m[(q, q)]);
                    // skip rotations that cannot change the diagonal at working precision
                    if sweeps > 4 && apq.abs() < T::lit(1e-3) * T::epsilon() * (app.abs() + aqq.abs()) {
                        m[(p, q)] = T::zero();
                        m[(q, p)] = T::zero();
                        continue;
                    }
                    let tau = (aqq - app) / (apq + apq);
                    let t = if tau >= T::zero() {
                        T::one() / (tau + (T::one() + tau * tau).sqrt())
                    } else {
                        -T::one() / (-tau + (T::one() + tau * tau).sqrt())
                    };
                    let c = T::one() / (T::one() + t * t).sqrt();
                    let s = t * c;
                    rotate(&mut m, &mut v, p, q, c, s);
                }
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).expect("NaN eigenvalue"));
        let values = order.iter().map(|&i| m[(i, i)]).collect();
        let vectors = DenseMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
        Ok(Self {
            values,
            vectors,
            sweeps,
        })
    }

    pub fn vector(&self, j: usize) -> Vec<T> {
        (0..self.vectors.rows).map(|i| self.vectors[(i, j)]).collect()
    }

    /// Largest eigenvalue and its unit eigenvector.
    pub fn largest(&self) -> (T, Vec<T>) {
        let j = self.values.len() - 1;
        (self.values[j], self.vector(j))
    }
}

/// `M <- J^T M J`, `V <- V J` for the plane rotation in `(p, q)`.
fn rotate<T: Scalar>(m: &mut DenseMatrix<T>, v: &mut DenseMatrix<T>, p: usize, q: usize, c: T, s: T) {
    let n = m.rows;
    for k in 0..n {
        let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
        m[(k, p)] = c * mkp - s * mkq;
        m[(k, q)] = s * mkp + c * mkq;
    }
    for k in 0..n {
        let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
        m[(p, k)] = c * mpk - s * mqk;
        m[(q, k)] = s * mpk + c * mqk;
    }
    m[(p, q)] = T::zero();
    m[(q, p)] = T::zero();
    for k in 0..n {
        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// `max_j ||A v_j - lambda_j v_j||` style residual for one pair.
pub fn eigen_residual<T: Scalar>(a: &DenseMatrix<T>, lambda: T, v: &[T]) -> T {
    a.matvec(v)
        .iter()
        .zip(v)
        .fold(T::zero(), |acc, (&av, &x)| {
            let r = av - lambda * x;
            acc + r * r
        })
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg_matrix(n: usize, seed: u64) -> DenseMatrix<f64> {
        let mut state = seed;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let raw = DenseMatrix::from_fn(n, n, |_, _| next());
        DenseMatrix::from_fn(n, n, |i, j| raw[(i, j)] + raw[(j, i)])
    }

    #[test]
    fn jacobi_reconstructs_random_symmetric() {
        let a = lcg_matrix(25, 7);
        let eig = SymmetricEigen::jacobi(&a).unwrap();
        for j in 0..25 {
            let v = eig.vector(j);
            assert!(eigen_residual(&a, eig.values[j], &v) < 1e-12);
        }
        for w in eig.values.windows(2) {
            assert!(w[0] <= w[1]);
        }
        // orthonormal columns
        let vt = eig.vectors.transpose();
        for i in 0..25 {
            for j in 0..25 {
                let dot: f64 = vt.row(i).iter().zip(vt.row(j)).map(|(a, b)| a * b).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn jacobi_two_by_two_closed_form() {
        let a = DenseMatrix::from_fn(2, 2, |i, j| [[2.0_f64, 1.0], [1.0, 2.0]][i][j]);
        let eig = SymmetricEigen::jacobi(&a).unwrap();
        assert!((eig.values[0] - 1.0).abs() < 1e-15);
        assert!((eig.values[1] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_matrix_is_already_diagonal() {
        let eig = SymmetricEigen::jacobi(&DenseMatrix::<f64>::zeros(4, 4)).unwrap();
        assert_eq!(eig.sweeps, 0);
        assert!(eig.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn lu_solves_and_detects_singularity() {
        let a = lcg_matrix(12, 3);
        let x: Vec<f64> = (0..12).map(|i| i as f64 - 4.0).collect();
        let b = a.matvec(&x);
        let lu = LuFactors::factor(&a).unwrap();
        let y = lu.solve(&b);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-10);
        }
        let singular = DenseMatrix::from_fn(3, 3, |i, _| i as f64);
        assert!(LuFactors::factor(&singular).is_none());
    }

    #[test]
    fn symmetry_check_is_bitwise() {
        let mut a = lcg_matrix(5, 1);
        assert!(a.is_symmetric());
        a[(1, 3)] += 1e-17;
        a[(1, 3)] += f64::EPSILON;
        assert!(!a.is_symmetric());
    }
}
