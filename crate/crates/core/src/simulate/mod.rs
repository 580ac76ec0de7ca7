//! Galerkin theta-scheme for the truncated SPDE on `span_N`.
//!
//! Each step solves
//!
//! ```text
//! (I - theta dt K) x' = x + (1 - theta) dt K x + sum_i A_i x dW_i,   K = L_N - alpha
//! ```
//!
//! with `L_N = P_N L P_N` and `A_i = P_N A_i P_N`. The diffusion is always
//! explicit. Paths draw their increments from independent streams split off
//! the configured seed, and ensemble statistics are reduced in path order.

mod oracle;

pub(crate) use oracle::least_squares_slope;
pub use oracle::{
    exact_translation_solution, fitted_order, oracle_error_paths, strong_error_sweep, StrongErrorRow, StrongErrorStudy,
    TranslationOracle,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::basis_size;
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, LuFactors, DENSE_LIMIT};
use crate::model::ModelSpec;
use crate::operators::{assemble_a, assemble_l, BandOperator};
use crate::rng::PathRng;
use crate::scalar::{CompensatedSum, Scalar};
use crate::space::{GradedVector, SobolevIndex};

fn default_theta<T: Scalar>() -> T {
    T::lit(0.5)
}

fn default_save_every() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct SimConfig<T> {
    /// Galerkin truncation order.
    #[serde(rename = "N")]
    pub order: usize,
    pub dt: T,
    #[serde(rename = "T")]
    pub horizon: T,
    pub paths: usize,
    #[serde(default = "default_theta")]
    pub theta: T,
    pub seed: u64,
    /// Output grid: every `save_every`-th step, plus `t = 0`.
    #[serde(default = "default_save_every")]
    pub save_every: usize,
}

impl<T: Scalar> SimConfig<T> {
    pub fn new(order: usize, dt: T, horizon: T, paths: usize, seed: u64) -> Self {
        Self {
            order,
            dt,
            horizon,
            paths,
            theta: default_theta(),
            seed,
            save_every: 1,
        }
    }

    pub fn with_theta(mut self, theta: T) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_save_every(mut self, save_every: usize) -> Self {
        self.save_every = save_every;
        self
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round().to_usize().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return bad("dt must be positive");
        }
        if !(self.horizon >= self.dt) || !self.horizon.is_finite() {
            return bad("T must be at least dt");
        }
        if self.paths == 0 {
            return bad("paths must be at least 1");
        }
        if !(self.theta >= T::zero() && self.theta <= T::one()) {
            return bad("theta must lie in [0, 1]");
        }
        if self.save_every == 0 || !self.steps().is_multiple_of(self.save_every) {
            return bad("save_every must divide the number of steps");
        }
        Ok(())
    }

    /// Save times `0, s dt, 2 s dt, ...` with `s = save_every`.
    pub fn save_times(&self) -> Vec<T> {
        let n = self.steps() / self.save_every;
        (0..=n).map(|i| T::from_count(i * self.save_every) * self.dt).collect()
    }
}

/// Solution snapshot `X_t` in `span_N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct PathState<T> {
    pub t: T,
    pub x: GradedVector<T>,
}

/// Pre-assembled Galerkin system with the implicit matrix factored once.
#[derive(Clone, Debug)]
pub struct GalerkinStepper<T> {
    d: usize,
    order: usize,
    size: usize,
    alpha: T,
    dt: T,
    theta: T,
    drift: BandOperator<T>,
    noise: Vec<BandOperator<T>>,
    implicit: Option<LuFactors<T>>,
}

impl<T: Scalar> GalerkinStepper<T> {
    pub fn new(spec: &ModelSpec<T>, order: usize, dt: T, theta: T) -> Result<Self> {
        spec.validate()?;
        let size = basis_size(spec.d, order)?;
        if size > DENSE_LIMIT {
            return Err(Error::DenseTooLarge {
                size,
                limit: DENSE_LIMIT,
            });
        }
        let drift = assemble_l(spec, order)?;
        let noise = assemble_a(spec, order)?;
        let implicit = if theta > T::zero() {
            let l = drift.galerkin_block()?;
            let c = theta * dt;
            let m = DenseMatrix::from_fn(size, size, |i, j| {
                let id = if i == j { T::one() } else { T::zero() };
                let k = l[(i, j)] - if i == j { spec.alpha } else { T::zero() };
                id - c * k
            });
            Some(LuFactors::factor(&m).ok_or(Error::SingularSystem {
                dt: dt.to_f64_lossy(),
                theta: theta.to_f64_lossy(),
            })?)
        } else {
            None
        };
        Ok(Self {
            d: spec.d,
            order,
            size,
            alpha: spec.alpha,
            dt,
            theta,
            drift,
            noise,
            implicit,
        })
    }

    pub fn from_config(spec: &ModelSpec<T>, cfg: &SimConfig<T>) -> Result<Self> {
        cfg.validate()?;
        Self::new(spec, cfg.order, cfg.dt, cfg.theta)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    /// One step on raw coefficients; `dw` holds the `d` Brownian increments.
    pub fn step_coeffs(&self, x: &[T], dw: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.size);
        debug_assert_eq!(dw.len(), self.d);
        let mut lx = vec![T::zero(); self.size];
        self.drift.apply_slice_into(x, &mut lx);
        let c = (T::one() - self.theta) * self.dt;
        let mut rhs: Vec<T> = x
            .iter()
            .zip(&lx)
            .map(|(&xi, &li)| xi + c * (li - self.alpha * xi))
            .collect();
        let mut ax = vec![T::zero(); self.size];
        for (a, &w) in self.noise.iter().zip(dw) {
            if w == T::zero() {
                continue;
            }
            ax.iter_mut().for_each(|v| *v = T::zero());
            a.apply_slice_into(x, &mut ax);
            for (r, &v) in rhs.iter_mut().zip(&ax) {
                *r += v * w;
            }
        }
        match &self.implicit {
            Some(lu) => lu.solve(&rhs),
            None => rhs,
        }
    }

    pub fn step(&self, state: &PathState<T>, dw: &[T]) -> Result<PathState<T>> {
        if state.x.dim() != self.d {
            return Err(Error::DimensionMismatch {
                left: self.d,
                right: state.x.dim(),
            });
        }
        if state.x.order() != self.order {
            return Err(Error::TruncationMismatch {
                expected: self.order,
                got: state.x.order(),
            });
        }
        let next = self.step_coeffs(state.x.coeffs(), dw);
        let t = state.t + self.dt;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp {
                path: None,
                time: t.to_f64_lossy(),
            });
        }
        Ok(PathState {
            t,
            x: GradedVector::from_coeffs(self.d, self.order, next)?,
        })
    }
}

/// Brings `x0` into `span_N`, rejecting data above the truncation.
pub fn lift_initial<T: Scalar>(x0: &GradedVector<T>, order: usize) -> Result<GradedVector<T>> {
    if x0.order() > order {
        return Err(Error::OrderOutOfRange {
            requested: x0.order(),
            available: order,
        });
    }
    x0.extend_to(order)
}

/// Observations `values[path][save]` on the grid `times`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleRecord<T> {
    pub times: Vec<T>,
    pub values: Vec<Vec<T>>,
}

/// Runs every path and records `observe(X_t)` on the save grid.
pub fn run_ensemble<T, F>(
    spec: &ModelSpec<T>,
    cfg: &SimConfig<T>,
    x0: &GradedVector<T>,
    observe: F,
) -> Result<EnsembleRecord<T>>
where
    T: Scalar,
    F: Fn(&GradedVector<T>) -> T + Sync,
{
    let stepper = GalerkinStepper::from_config(spec, cfg)?;
    if x0.dim() != spec.d {
        return Err(Error::DimensionMismatch {
            left: spec.d,
            right: x0.dim(),
        });
    }
    let x0 = lift_initial(x0, cfg.order)?;
    let steps = cfg.steps();
    let sqrt_dt = cfg.dt.sqrt();
    let d = spec.d;

    let run_path = |j: usize| -> Result<Vec<T>> {
        let mut rng = PathRng::split(cfg.seed, j as u64);
        let mut x = x0.coeffs().to_vec();
        let mut out = Vec::with_capacity(steps / cfg.save_every + 1);
        out.push(observe(&x0));
        let mut dw = vec![T::zero(); d];
        for s in 1..=steps {
            rng.fill_normal(sqrt_dt, &mut dw);
            x = stepper.step_coeffs(&x, &dw);
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::BlowUp {
                    path: Some(j),
                    time: (T::from_count(s) * cfg.dt).to_f64_lossy(),
                });
            }
            if s % cfg.save_every == 0 {
                out.push(observe(&GradedVector::from_coeffs(d, cfg.order, x.clone())?));
            }
        }
        Ok(out)
    };

    let results: Vec<Result<Vec<T>>> = (0..cfg.paths).into_par_iter().map(run_path).collect();
    let values = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(EnsembleRecord {
        times: cfg.save_times(),
        values,
    })
}

/// Mean and spread of `||X_t||^2` at one Sobolev index, on the save grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct MomentTable<T> {
    pub norm_index: SobolevIndex<T>,
    pub times: Vec<T>,
    pub mean_sq_norm: Vec<T>,
    /// Standard error of `mean_sq_norm` across paths.
    pub stderr: Vec<T>,
    pub min_norm: Vec<T>,
    pub max_norm: Vec<T>,
    /// `per_path_sq_norms[path][save]`.
    pub per_path_sq_norms: Vec<Vec<T>>,
}

impl<T: Scalar> MomentTable<T> {
    pub fn from_record(norm_index: SobolevIndex<T>, record: EnsembleRecord<T>) -> Self {
        let n_times = record.times.len();
        let paths = record.values.len();
        let mut mean_sq_norm = Vec::with_capacity(n_times);
        let mut stderr = Vec::with_capacity(n_times);
        let mut min_norm = Vec::with_capacity(n_times);
        let mut max_norm = Vec::with_capacity(n_times);
        for i in 0..n_times {
            let column = record.values.iter().map(|v| v[i]);
            let (mean, se) = mean_and_stderr(column.clone());
            mean_sq_norm.push(mean);
            stderr.push(se);
            let (lo, hi) = column.fold((T::infinity(), T::neg_infinity()), |(lo, hi), v| (lo.min(v), hi.max(v)));
            min_norm.push(lo.sqrt());
            max_norm.push(hi.sqrt());
        }
        debug_assert!(paths > 0);
        Self {
            norm_index,
            times: record.times,
            mean_sq_norm,
            stderr,
            min_norm,
            max_norm,
            per_path_sq_norms: record.values,
        }
    }

    pub fn paths(&self) -> usize {
        self.per_path_sq_norms.len()
    }
}

/// Sample mean and its standard error, accumulated in iteration order.
pub fn mean_and_stderr<T: Scalar>(xs: impl Iterator<Item = T> + Clone) -> (T, T) {
    let n = xs.clone().count();
    let mean = xs.clone().collect::<CompensatedSum<T>>().value() / T::from_count(n);
    if n < 2 {
        return (mean, T::zero());
    }
    let ss = xs
        .map(|x| (x - mean) * (x - mean))
        .collect::<CompensatedSum<T>>()
        .value();
    let var = ss / T::from_count(n - 1);
    (mean, (var / T::from_count(n)).sqrt())
}

/// Ensemble of `||X_t||^2_{p-2}`.
pub fn simulate_ensemble<T: Scalar>(
    spec: &ModelSpec<T>,
    cfg: &SimConfig<T>,
    x0: &GradedVector<T>,
) -> Result<MomentTable<T>> {
    simulate_ensemble_at(spec, cfg, x0, spec.stability_index())
}

/// Ensemble of `||X_t||^2_s` for an arbitrary index `s`.
pub fn simulate_ensemble_at<T: Scalar>(
    spec: &ModelSpec<T>,
    cfg: &SimConfig<T>,
    x0: &GradedVector<T>,
    index: SobolevIndex<T>,
) -> Result<MomentTable<T>> {
    let record = run_ensemble(spec, cfg, x0, |x| x.norm_sq(index))?;
    Ok(MomentTable::from_record(index, record))
}
