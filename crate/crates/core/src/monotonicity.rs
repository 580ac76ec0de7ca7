//! The quadratic form `Q_p(phi) = 2 <phi, L phi>_p + sum_i ||A_i phi||_p^2`
//! and the best constant `C` in `Q_p(phi) <= C ||phi||_p^2` over truncated spans.
//!
//! On `span_N` the supremum is the largest eigenvalue of
//! `W^{-1/2} S W^{-1/2}`, where `W` is the diagonal weight matrix and
//!
//! ```text
//! S = W L~ + L~^T W + sum_i A_i^T W' A_i
//! ```
//!
//! with `L~` the order-`N` rows of `L` and `W'` the weights up to order
//! `N + 1`. Since the spans are nested, the estimate is a lower bound on the
//! constant over all of `S` and grows with `N`.

use serde::{Deserialize, Serialize};

use crate::basis::basis_size;
use crate::error::{Error, Result};
use crate::linalg::{eigen_residual, DenseMatrix, SymmetricEigen, DENSE_LIMIT};
use crate::model::ModelSpec;
use crate::operators::{assemble_a, assemble_l};
use crate::rng::PathRng;
use crate::scalar::Scalar;
use crate::space::{inner_product, rank_weights, GradedVector, SobolevIndex};

/// `Q_p(phi)` evaluated by applying the operators exactly into `span_{N+2}`.
pub fn quadratic_form<T: Scalar>(spec: &ModelSpec<T>, phi: &GradedVector<T>, p: SobolevIndex<T>) -> Result<T> {
    if phi.dim() != spec.d {
        return Err(Error::DimensionMismatch {
            left: spec.d,
            right: phi.dim(),
        });
    }
    let n = phi.order();
    let l_phi = assemble_l(spec, n)?.apply(phi)?;
    let drift = inner_product(phi, &l_phi, p)?;
    let hs = assemble_a(spec, n)?
        .iter()
        .map(|a| a.apply(phi).map(|v| v.norm_sq(p)))
        .collect::<Result<Vec<T>>>()?
        .into_iter()
        .fold(T::zero(), |acc, x| acc + x);
    Ok(drift + drift + hs)
}

/// Symmetric matrix `S` of `Q_p` on `span_n`. Only the upper triangle is
/// computed; the lower one is a bitwise mirror.
pub fn form_matrix<T: Scalar>(spec: &ModelSpec<T>, p: SobolevIndex<T>, n: usize) -> Result<DenseMatrix<T>> {
    let size = basis_size(spec.d, n)?;
    if size > DENSE_LIMIT {
        return Err(Error::DenseTooLarge {
            size,
            limit: DENSE_LIMIT,
        });
    }
    let w = rank_weights(spec.d, n + 1, p);
    let l = assemble_l(spec, n)?.to_dense(n)?;

    let mut gram = DenseMatrix::zeros(size, size);
    for a in assemble_a(spec, n)? {
        for (r, row) in a.row_lists().iter().enumerate() {
            for (ia, &(ca, va)) in row.iter().enumerate() {
                for &(cb, vb) in &row[ia..] {
                    let (lo, hi) = if ca <= cb { (ca, cb) } else { (cb, ca) };
                    gram[(lo, hi)] += w[r] * va * vb;
                }
            }
        }
    }

    let mut s = DenseMatrix::zeros(size, size);
    for i in 0..size {
        for j in i..size {
            let v = (w[i] * l[(i, j)] + w[j] * l[(j, i)]) + gram[(i, j)];
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    Ok(s)
}

/// `W^{-1/2} S W^{-1/2}`, mirrored from its upper triangle.
pub fn reduced_form_matrix<T: Scalar>(spec: &ModelSpec<T>, p: SobolevIndex<T>, n: usize) -> Result<DenseMatrix<T>> {
    let s = form_matrix(spec, p, n)?;
    let inv_sqrt_w: Vec<T> = rank_weights(spec.d, n, p).iter().map(|w| w.sqrt().recip()).collect();
    let size = s.rows();
    let mut b = DenseMatrix::zeros(size, size);
    for i in 0..size {
        for j in i..size {
            let v = s[(i, j)] * inv_sqrt_w[i] * inv_sqrt_w[j];
            b[(i, j)] = v;
            b[(j, i)] = v;
        }
    }
    Ok(b)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct MonotonicityEstimate<T> {
    #[serde(rename = "N")]
    pub order: usize,
    pub p: SobolevIndex<T>,
    /// Largest Rayleigh quotient of `Q_p` against `||.||_p^2` on `span_N`.
    pub c_hat: T,
    /// Vector achieving `c_hat`, unit in `||.||_p`.
    pub extremal: GradedVector<T>,
    /// `||B v - c_hat v||` for the reduced matrix `B`.
    pub residual: T,
}

/// Largest eigenvalue of the reduced monotonicity form on `span_n`.
pub fn estimate_constant<T: Scalar>(
    spec: &ModelSpec<T>,
    p: SobolevIndex<T>,
    n: usize,
) -> Result<MonotonicityEstimate<T>> {
    let b = reduced_form_matrix(spec, p, n)?;
    let eig = SymmetricEigen::jacobi(&b)?;
    let (c_hat, v) = eig.largest();
    let residual = eigen_residual(&b, c_hat, &v);
    let scale = b.frobenius_norm().max(T::one());
    if !(residual <= T::lit(1e-8) * scale) {
        return Err(Error::EigenNotConverged {
            sweeps: eig.sweeps,
            residual: residual.to_f64_lossy(),
        });
    }
    let w = rank_weights(spec.d, n, p);
    let coeffs = v.iter().zip(&w).map(|(&x, &wi)| x / wi.sqrt()).collect();
    Ok(MonotonicityEstimate {
        order: n,
        p,
        c_hat,
        extremal: GradedVector::from_coeffs(spec.d, n, coeffs)?,
        residual,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport<T> {
    pub max_ratio: T,
    pub c_hat: T,
    pub trials: usize,
    pub pass: bool,
}

/// Samples `trials` vectors with standard normal coefficients and checks
/// `Q_p(phi) <= c_hat ||phi||_p^2 (1 + 1e-10)` for each.
pub fn verify_inequality<T: Scalar>(
    spec: &ModelSpec<T>,
    p: SobolevIndex<T>,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<InequalityReport<T>> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    let est = estimate_constant(spec, p, n)?;
    let size = basis_size(spec.d, n)?;
    let s = form_matrix(spec, p, n)?;
    let w = rank_weights(spec.d, n, p);
    let mut rng = PathRng::split(seed, 0);
    let tol = T::lit(1e-10);
    let mut max_ratio = T::neg_infinity();
    let mut pass = true;
    for _ in 0..trials {
        let phi = rng.normal_vec::<T>(T::one(), size);
        let q = s
            .matvec(&phi)
            .iter()
            .zip(&phi)
            .fold(T::zero(), |acc, (&sx, &x)| acc + sx * x);
        let norm_sq = phi.iter().zip(&w).fold(T::zero(), |acc, (&x, &wi)| acc + wi * x * x);
        let ratio = q / norm_sq;
        max_ratio = max_ratio.max(ratio);
        // tolerance relative to the spectral scale so a zero form is not judged on rounding noise
        let slack = tol * (est.c_hat.abs() + est.residual + T::epsilon() * T::from_count(size)) * norm_sq;
        if q > est.c_hat * norm_sq + slack {
            pass = false;
        }
    }
    Ok(InequalityReport {
        max_ratio,
        c_hat: est.c_hat,
        trials,
        pass,
    })
}
