use crate::error::Result;
use crate::linalg::{DenseMatrix, SymmetricEigen};
use crate::scalar::Scalar;

use super::hermite::hermite_table;

/// Gauss-Hermite rule expressed in "function weights".
///
/// `integrate(g)` approximates `int g(t) dt` over the real line and is exact
/// whenever `g(t) = exp(-t^2) P(t)` with `deg P <= 2m - 1`, `m` the node
/// count. The weights are `1 / (m h_{m-1}(x_i)^2)`, which keeps the Gaussian
/// factor inside the Hermite functions instead of the weights.
#[derive(Clone, Debug)]
pub struct GaussHermite<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Scalar> GaussHermite<T> {
    pub fn new(m: usize) -> Result<Self> {
        assert!(m >= 1, "quadrature needs at least one node");
        // Golub-Welsch: nodes are the eigenvalues of the Jacobi matrix of the
        // orthonormal recurrence, off-diagonals sqrt(n/2)
        let jac = DenseMatrix::from_fn(m, m, |i, j| {
            if j == i + 1 || i == j + 1 {
                (T::from_count(i.max(j)) / T::lit(2.0)).sqrt()
            } else {
                T::zero()
            }
        });
        let eig = SymmetricEigen::jacobi(&jac)?;
        let mut nodes = eig.values;
        let sqrt_2m = (T::lit(2.0) * T::from_count(m)).sqrt();
        for x in nodes.iter_mut() {
            // Newton polish on h_m, h_m' = sqrt(2m) h_{m-1} - x h_m
            for _ in 0..3 {
                let h = hermite_table(*x, m);
                let (hm, hm1) = (h[m], h[m - 1]);
                let deriv = sqrt_2m * hm1 - *x * hm;
                if deriv == T::zero() {
                    break;
                }
                *x -= hm / deriv;
            }
        }
        let weights = nodes
            .iter()
            .map(|&x| {
                let h = hermite_table(x, m - 1)[m - 1];
                T::one() / (T::from_count(m) * h * h)
            })
            .collect();
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn integrate(&self, mut g: impl FnMut(T) -> T) -> T {
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (&x, &w)| acc + w * g(x))
    }
}
