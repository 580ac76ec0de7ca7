//! Banded operators in the Hermite basis.
//!
//! Derivatives and coordinate multiplications move each multi-index by one
//! unit in a single coordinate:
//!
//! ```text
//! d_i h_n = sqrt(n_i/2) h_{n-e_i} - sqrt((n_i+1)/2) h_{n+e_i}
//! x_i h_n = sqrt(n_i/2) h_{n-e_i} + sqrt((n_i+1)/2) h_{n+e_i}
//! ```
//!
//! Operators map `span_N` into `span_{N + shift}` and never truncate on
//! assembly; Galerkin blocks are cut explicitly by the caller.

use crate::basis::{basis_size, rank_of, unrank, BasisIndexSet};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::model::ModelSpec;
use crate::scalar::Scalar;
use crate::space::GradedVector;

/// Sparse column-ordered matrix from `span_{n_in}` to `span_{n_in + shift}`.
#[derive(Clone, Debug, PartialEq)]
pub struct BandOperator<T> {
    d: usize,
    n_in: usize,
    shift: usize,
    col_ptr: Vec<usize>,
    rows: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Scalar> BandOperator<T> {
    /// Builds from per-column entry lists. Duplicate rows are summed and
    /// exact zeros dropped.
    pub fn from_columns(d: usize, n_in: usize, shift: usize, columns: Vec<Vec<(usize, T)>>) -> Result<Self> {
        let n_cols = basis_size(d, n_in)?;
        let n_rows = basis_size(d, n_in + shift)?;
        assert_eq!(columns.len(), n_cols, "one entry list per input basis element");
        let mut col_ptr = Vec::with_capacity(n_cols + 1);
        let mut rows = Vec::new();
        let mut vals = Vec::new();
        col_ptr.push(0);
        for mut col in columns {
            col.sort_by_key(|&(r, _)| r);
            let mut i = 0;
            while i < col.len() {
                let r = col[i].0;
                let mut v = T::zero();
                while i < col.len() && col[i].0 == r {
                    v += col[i].1;
                    i += 1;
                }
                assert!(r < n_rows, "row {r} outside span_{}", n_in + shift);
                if v != T::zero() {
                    rows.push(r);
                    vals.push(v);
                }
            }
            col_ptr.push(rows.len());
        }
        Ok(Self {
            d,
            n_in,
            shift,
            col_ptr,
            rows,
            vals,
        })
    }

    pub fn identity(d: usize, n: usize) -> Result<Self> {
        let size = basis_size(d, n)?;
        Self::from_columns(d, n, 0, (0..size).map(|r| vec![(r, T::one())]).collect())
    }

    pub fn zero(d: usize, n_in: usize, shift: usize) -> Result<Self> {
        let size = basis_size(d, n_in)?;
        Self::from_columns(d, n_in, shift, vec![Vec::new(); size])
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn shift(&self) -> usize {
        self.shift
    }

    pub fn n_out(&self) -> usize {
        self.n_in + self.shift
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn n_cols(&self) -> usize {
        self.col_ptr.len() - 1
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        self.rows[range.clone()]
            .iter()
            .copied()
            .zip(self.vals[range].iter().copied())
    }

    /// Same entries, declared with a wider output truncation.
    pub fn widened(mut self, shift: usize) -> Self {
        assert!(shift >= self.shift, "cannot narrow an operator");
        self.shift = shift;
        self
    }

    pub fn scaled(&self, c: T) -> Self {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= c);
        if c == T::zero() {
            return Self::zero(self.d, self.n_in, self.shift).expect("same shape");
        }
        out
    }

    /// `sum_t c_t P_t` over operators with a common input truncation.
    pub fn linear_combination(terms: &[(T, &Self)]) -> Result<Self> {
        let (_, first) = terms.first().expect("at least one term");
        let (d, n_in) = (first.d, first.n_in);
        let shift = terms.iter().map(|(_, op)| op.shift).max().unwrap_or(0);
        for (_, op) in terms {
            if op.d != d {
                return Err(Error::DimensionMismatch { left: d, right: op.d });
            }
            if op.n_in != n_in {
                return Err(Error::TruncationMismatch {
                    expected: n_in,
                    got: op.n_in,
                });
            }
        }
        let columns = (0..first.n_cols())
            .map(|j| {
                terms
                    .iter()
                    .filter(|(c, _)| *c != T::zero())
                    .flat_map(|&(c, op)| op.column(j).map(move |(r, v)| (r, c * v)))
                    .collect()
            })
            .collect();
        Self::from_columns(d, n_in, shift, columns)
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        if self.d != inner.d {
            return Err(Error::DimensionMismatch {
                left: self.d,
                right: inner.d,
            });
        }
        if self.n_in != inner.n_out() {
            return Err(Error::TruncationMismatch {
                expected: self.n_in,
                got: inner.n_out(),
            });
        }
        let columns = (0..inner.n_cols())
            .map(|j| {
                inner
                    .column(j)
                    .flat_map(|(mid, v)| self.column(mid).map(move |(r, u)| (r, u * v)))
                    .collect()
            })
            .collect();
        Self::from_columns(inner.d, inner.n_in, inner.shift + self.shift, columns)
    }

    /// Exact product into `span_{n_out}`.
    pub fn apply(&self, v: &GradedVector<T>) -> Result<GradedVector<T>> {
        if v.dim() != self.d {
            return Err(Error::DimensionMismatch {
                left: self.d,
                right: v.dim(),
            });
        }
        if v.order() != self.n_in {
            return Err(Error::TruncationMismatch {
                expected: self.n_in,
                got: v.order(),
            });
        }
        let out = self.apply_slice(v.coeffs(), basis_size(self.d, self.n_out())?);
        GradedVector::from_coeffs(self.d, self.n_out(), out)
    }

    /// Product restricted to the first `out_len` output ranks.
    pub fn apply_slice(&self, x: &[T], out_len: usize) -> Vec<T> {
        let mut out = vec![T::zero(); out_len];
        self.apply_slice_into(x, &mut out);
        out
    }

    /// Accumulates `P x` into `out`, dropping rows past `out.len()`.
    pub fn apply_slice_into(&self, x: &[T], out: &mut [T]) {
        debug_assert_eq!(x.len(), self.n_cols());
        for (j, &xj) in x.iter().enumerate() {
            if xj == T::zero() {
                continue;
            }
            for (r, v) in self.column(j) {
                if r < out.len() {
                    out[r] += v * xj;
                }
            }
        }
    }

    /// Dense block with output rows of order `<= row_order` and all columns.
    pub fn to_dense(&self, row_order: usize) -> Result<DenseMatrix<T>> {
        let n_rows = basis_size(self.d, row_order)?;
        let mut m = DenseMatrix::zeros(n_rows, self.n_cols());
        for j in 0..self.n_cols() {
            for (r, v) in self.column(j) {
                if r < n_rows {
                    m[(r, j)] = v;
                }
            }
        }
        Ok(m)
    }

    /// Square Galerkin block `P_N op P_N` on the input span.
    pub fn galerkin_block(&self) -> Result<DenseMatrix<T>> {
        self.to_dense(self.n_in)
    }

    /// Largest per-coordinate displacement `max_i |k'_i - k_i|` over the nonzeros.
    pub fn max_coordinate_displacement(&self) -> usize {
        let mut worst = 0;
        for j in 0..self.n_cols() {
            let k = unrank(self.d, j);
            for (r, _) in self.column(j) {
                let kr = unrank(self.d, r);
                let disp = k.iter().zip(&kr).map(|(&a, &b)| a.abs_diff(b)).max().unwrap_or(0);
                worst = worst.max(disp);
            }
        }
        worst
    }

    /// Transposed entries as per-row lists `(col, value)` over all output ranks.
    pub fn row_lists(&self) -> Vec<Vec<(usize, T)>> {
        let n_rows = basis_size(self.d, self.n_out()).expect("valid operator");
        let mut lists = vec![Vec::new(); n_rows];
        for j in 0..self.n_cols() {
            for (r, v) in self.column(j) {
                lists[r].push((j, v));
            }
        }
        lists
    }
}

fn check_coordinate(i: usize, d: usize) -> Result<()> {
    if i >= d {
        return Err(Error::CoordinateOutOfRange { i, d });
    }
    Ok(())
}

/// Shared two-band construction; `raise_sign` is -1 for `d_i`, +1 for `x_i`.
fn ladder_op<T: Scalar>(i: usize, d: usize, n: usize, raise_sign: T) -> Result<BandOperator<T>> {
    check_coordinate(i, d)?;
    let set = BasisIndexSet::enumerate(d, n)?;
    let half = T::lit(0.5);
    let mut k = vec![0; d];
    let columns = set
        .iter()
        .map(|kk| {
            k.copy_from_slice(kk);
            let ki = k[i];
            let mut col = Vec::with_capacity(2);
            if ki > 0 {
                k[i] = ki - 1;
                col.push((rank_of(&k), (T::from_count(ki) * half).sqrt()));
            }
            k[i] = ki + 1;
            col.push((rank_of(&k), raise_sign * (T::from_count(ki + 1) * half).sqrt()));
            col
        })
        .collect();
    BandOperator::from_columns(d, n, 1, columns)
}

/// `d/dx_i` on `span_n` (coordinate `i` is zero-based).
pub fn derivative_op<T: Scalar>(i: usize, d: usize, n: usize) -> Result<BandOperator<T>> {
    ladder_op(i, d, n, -T::one())
}

/// Multiplication by `x_i` on `span_n` (coordinate `i` is zero-based).
pub fn coordinate_multiply_op<T: Scalar>(i: usize, d: usize, n: usize) -> Result<BandOperator<T>> {
    ladder_op(i, d, n, T::one())
}

/// `A_i phi = -sum_j d_j(sigma_{ji} phi)`, each from `span_n` to `span_{n+1}`.
pub fn assemble_a<T: Scalar>(spec: &ModelSpec<T>, n: usize) -> Result<Vec<BandOperator<T>>> {
    let d = spec.d;
    let derivs = (0..d).map(|j| derivative_op(j, d, n)).collect::<Result<Vec<_>>>()?;
    (0..d)
        .map(|i| {
            let terms: Vec<(T, &BandOperator<T>)> = (0..d).map(|j| (-spec.sigma[j][i], &derivs[j])).collect();
            Ok(BandOperator::linear_combination(&terms)?.widened(1))
        })
        .collect()
}

/// `L phi = 1/2 sum_{ij} (sigma sigma^T)_{ij} d_i d_j phi + sum_i d_i(b_i phi)`,
/// from `span_n` to `span_{n+2}`, with `b_i phi = b0_i phi + sum_j M_{ij} x_j phi`.
pub fn assemble_l<T: Scalar>(spec: &ModelSpec<T>, n: usize) -> Result<BandOperator<T>> {
    let d = spec.d;
    let a = spec.diffusion_matrix();
    let inner = (0..d).map(|j| derivative_op(j, d, n)).collect::<Result<Vec<_>>>()?;
    let outer = (0..d).map(|i| derivative_op(i, d, n + 1)).collect::<Result<Vec<_>>>()?;
    let mults = (0..d)
        .map(|j| coordinate_multiply_op(j, d, n))
        .collect::<Result<Vec<_>>>()?;
    let identity = BandOperator::identity(d, n)?.widened(1);

    let mut parts: Vec<(T, BandOperator<T>)> = Vec::new();
    let half = T::lit(0.5);
    for i in 0..d {
        for j in 0..d {
            if a[i][j] != T::zero() {
                parts.push((half * a[i][j], outer[i].compose(&inner[j])?));
            }
        }
    }
    for i in 0..d {
        let mut terms: Vec<(T, &BandOperator<T>)> = vec![(spec.b0[i], &identity)];
        terms.extend((0..d).map(|j| (spec.m[i][j], &mults[j])));
        let drift = BandOperator::linear_combination(&terms)?.widened(1);
        parts.push((T::one(), outer[i].compose(&drift)?));
    }
    let refs: Vec<(T, &BandOperator<T>)> = parts.iter().map(|(c, op)| (*c, op)).collect();
    Ok(BandOperator::linear_combination(&refs)?.widened(2))
}
