use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::space::SobolevIndex;

/// Coefficients of `dX = (L - alpha) X dt + sum_i A_i X dB^i` with constant
/// diffusion `sigma` and affine drift `b(x) = b0 + M x`.
///
/// Only these coefficient classes are representable; the operators are then
/// finitely banded in the Hermite basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
#[serde(try_from = "ModelSpecRepr<T>")]
pub struct ModelSpec<T> {
    pub d: usize,
    pub sigma: Vec<Vec<T>>,
    pub b0: Vec<T>,
    #[serde(rename = "M")]
    pub m: Vec<Vec<T>>,
    pub alpha: T,
    pub p: T,
}

#[derive(Deserialize)]
struct ModelSpecRepr<T> {
    d: usize,
    sigma: Vec<Vec<T>>,
    b0: Vec<T>,
    #[serde(rename = "M", default)]
    m: Option<Vec<Vec<T>>>,
    alpha: T,
    p: T,
}

impl<T: Scalar> TryFrom<ModelSpecRepr<T>> for ModelSpec<T> {
    type Error = Error;

    fn try_from(r: ModelSpecRepr<T>) -> Result<Self> {
        let m = r.m.unwrap_or_else(|| vec![vec![T::zero(); r.d]; r.d]);
        let spec = Self {
            d: r.d,
            sigma: r.sigma,
            b0: r.b0,
            m,
            alpha: r.alpha,
            p: r.p,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl<T: Scalar> ModelSpec<T> {
    /// Constant-coefficient model (`M = 0`).
    pub fn constant(sigma: Vec<Vec<T>>, b0: Vec<T>, alpha: T, p: T) -> Result<Self> {
        let d = b0.len();
        Self::affine(sigma, b0, vec![vec![T::zero(); d]; d], alpha, p)
    }

    pub fn affine(sigma: Vec<Vec<T>>, b0: Vec<T>, m: Vec<Vec<T>>, alpha: T, p: T) -> Result<Self> {
        let spec = Self {
            d: b0.len(),
            sigma,
            b0,
            m,
            alpha,
            p,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// One-dimensional constant model with scalar `sigma` and `b`.
    pub fn scalar(sigma: T, b: T, alpha: T, p: T) -> Self {
        Self::constant(vec![vec![sigma]], vec![b], alpha, p).expect("scalar model is valid")
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.d;
        if d == 0 {
            return Err(Error::ZeroDimension);
        }
        let square = |m: &[Vec<T>]| m.len() == d && m.iter().all(|r| r.len() == d);
        if !square(&self.sigma) {
            return Err(Error::InvalidModel(format!("sigma must be {d}x{d}")));
        }
        if !square(&self.m) {
            return Err(Error::InvalidModel(format!("M must be {d}x{d}")));
        }
        if self.b0.len() != d {
            return Err(Error::InvalidModel(format!("b0 must have {d} entries")));
        }
        let finite = self
            .sigma
            .iter()
            .chain(&self.m)
            .flatten()
            .chain(&self.b0)
            .chain([&self.alpha, &self.p])
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::NonFinite("model coefficients"));
        }
        Ok(())
    }

    pub fn sobolev_index(&self) -> SobolevIndex<T> {
        SobolevIndex(self.p)
    }

    /// Index `p - 2` at which stability is measured.
    pub fn stability_index(&self) -> SobolevIndex<T> {
        SobolevIndex(self.p - T::lit(2.0))
    }

    /// True when the drift is constant (`M = 0`).
    pub fn has_constant_drift(&self) -> bool {
        self.m.iter().flatten().all(|x| *x == T::zero())
    }

    /// `(sigma sigma^T)_{ij}`.
    pub fn diffusion_matrix(&self) -> Vec<Vec<T>> {
        let d = self.d;
        (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| (0..d).fold(T::zero(), |acc, k| acc + self.sigma[i][k] * self.sigma[j][k]))
                    .collect()
            })
            .collect()
    }

    pub fn with_alpha(&self, alpha: T) -> Self {
        Self { alpha, ..self.clone() }
    }

    pub fn with_p(&self, p: T) -> Self {
        Self { p, ..self.clone() }
    }
}
