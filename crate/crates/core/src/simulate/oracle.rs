//! Exact solution for constant coefficients.
//!
//! With `M = 0` the SPDE is solved by `X_t = e^{-alpha t} tau_{Z_t} x0`, where
//! `Z_t = sigma B_t - b0 t` and `(tau_z f)(y) = f(y - z)`. In one dimension
//!
//! ```text
//! <tau_z h_m, h_k> = int h_m(u) h_k(u + z) du = int h_m(s - z/2) h_k(s + z/2) ds
//! ```
//!
//! and the last integrand is `exp(-s^2)` times a polynomial of degree `m + k`,
//! so Gauss-Hermite with `(m + k)/2 + 1` nodes integrates it exactly. The
//! `d`-dimensional coefficients are products of the 1-d ones.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{hermite_table, BasisIndexSet, GaussHermite};
use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::rng::PathRng;
use crate::scalar::Scalar;
use crate::space::{GradedVector, SobolevIndex};

use super::{lift_initial, mean_and_stderr, EnsembleRecord, GalerkinStepper, SimConfig};

/// Reusable evaluator of `e^{-alpha t} tau_{Z_t} x0` for a fixed `x0`.
#[derive(Clone, Debug)]
pub struct TranslationOracle<T> {
    spec: ModelSpec<T>,
    x0: GradedVector<T>,
    out_order: usize,
    out_basis: BasisIndexSet,
    in_basis: BasisIndexSet,
    quad: GaussHermite<T>,
}

impl<T: Scalar> TranslationOracle<T> {
    /// Oracle returning coefficients up to grade `out_order`.
    pub fn new(spec: &ModelSpec<T>, x0: &GradedVector<T>, out_order: usize) -> Result<Self> {
        spec.validate()?;
        if !spec.has_constant_drift() {
            return Err(Error::AffineDriftUnsupported);
        }
        if x0.dim() != spec.d {
            return Err(Error::DimensionMismatch {
                left: spec.d,
                right: x0.dim(),
            });
        }
        let quad = GaussHermite::new((out_order + x0.order()) / 2 + 1)?;
        Ok(Self {
            spec: spec.clone(),
            x0: x0.clone(),
            out_order,
            out_basis: BasisIndexSet::enumerate(spec.d, out_order)?,
            in_basis: BasisIndexSet::enumerate(spec.d, x0.order())?,
            quad,
        })
    }

    pub fn out_order(&self) -> usize {
        self.out_order
    }

    /// `Z_t = sigma B_t - b0 t`.
    pub fn shift(&self, t: T, brownian: &[T]) -> Result<Vec<T>> {
        let d = self.spec.d;
        if brownian.len() != d {
            return Err(Error::DimensionMismatch {
                left: d,
                right: brownian.len(),
            });
        }
        Ok((0..d)
            .map(|j| {
                let noise = (0..d).fold(T::zero(), |acc, i| acc + self.spec.sigma[j][i] * brownian[i]);
                noise - self.spec.b0[j] * t
            })
            .collect())
    }

    /// `tau_z x0` truncated to `out_order`.
    pub fn translate(&self, z: &[T]) -> Result<GradedVector<T>> {
        let d = self.spec.d;
        let n0 = self.x0.order();
        let tables: Vec<Vec<Vec<T>>> = z
            .iter()
            .map(|&zi| translation_table(&self.quad, zi, self.out_order, n0))
            .collect();
        let support: Vec<(&[usize], T)> = self
            .in_basis
            .iter()
            .zip(self.x0.coeffs())
            .filter(|(_, &c)| c != T::zero())
            .map(|(m, &c)| (m, c))
            .collect();
        let coeffs = self
            .out_basis
            .iter()
            .map(|k| {
                support.iter().fold(T::zero(), |acc, (m, c)| {
                    let prod = (0..d).fold(T::one(), |p, i| p * tables[i][k[i]][m[i]]);
                    acc + *c * prod
                })
            })
            .collect();
        GradedVector::from_coeffs(d, self.out_order, coeffs)
    }

    /// `X_t` given the Brownian values `B_t`.
    pub fn solution(&self, t: T, brownian: &[T]) -> Result<GradedVector<T>> {
        let z = self.shift(t, brownian)?;
        Ok(self.translate(&z)?.scaled((-self.spec.alpha * t).exp()))
    }
}

/// `table[k][m] = <tau_z h_m, h_k>` for `k <= k_max`, `m <= m_max`.
fn translation_table<T: Scalar>(quad: &GaussHermite<T>, z: T, k_max: usize, m_max: usize) -> Vec<Vec<T>> {
    let half = z / T::lit(2.0);
    let mut table = vec![vec![T::zero(); m_max + 1]; k_max + 1];
    for (&s, &w) in quad.nodes().iter().zip(quad.weights()) {
        let hk = hermite_table(s + half, k_max);
        let hm = hermite_table(s - half, m_max);
        for (row, &a) in table.iter_mut().zip(&hk) {
            let wa = w * a;
            for (cell, &b) in row.iter_mut().zip(&hm) {
                *cell += wa * b;
            }
        }
    }
    table
}

/// One-shot form of [`TranslationOracle::solution`].
pub fn exact_translation_solution<T: Scalar>(
    spec: &ModelSpec<T>,
    x0: &GradedVector<T>,
    t: T,
    brownian: &[T],
    out_order: usize,
) -> Result<GradedVector<T>> {
    TranslationOracle::new(spec, x0, out_order)?.solution(t, brownian)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct StrongErrorRow<T> {
    pub dt: T,
    /// Path mean of `max_t ||X_t^{Galerkin} - X_t^{oracle}||_0`.
    pub mean_max_error: T,
    pub stderr: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct StrongErrorStudy<T> {
    pub order: usize,
    pub paths: usize,
    pub rows: Vec<StrongErrorRow<T>>,
    /// Least-squares slope of `ln error` against `ln dt`.
    pub fitted_order: T,
    /// Errors strictly decrease as `dt` decreases.
    pub monotone: bool,
}

/// Strong error of the Galerkin scheme against the oracle under matched noise.
///
/// Every path draws increments on the finest step; coarser levels use sums
/// of those increments, so all levels see the same Brownian path. Errors are
/// measured on the grid of the coarsest step.
#[allow(clippy::too_many_arguments)]
pub fn strong_error_sweep<T: Scalar>(
    spec: &ModelSpec<T>,
    x0: &GradedVector<T>,
    order: usize,
    horizon: T,
    dts: &[T],
    theta: T,
    paths: usize,
    seed: u64,
) -> Result<StrongErrorStudy<T>> {
    if dts.len() < 2 || paths == 0 {
        return Err(Error::InvalidConfig(
            "strong error sweep needs at least two step sizes and one path".into(),
        ));
    }
    let x0n = lift_initial(x0, order)?;
    let oracle = TranslationOracle::new(spec, x0, order)?;
    let fine = dts.iter().copied().fold(T::infinity(), T::min);
    let coarse = dts.iter().copied().fold(T::zero(), T::max);
    let ratio = |a: T, b: T| -> Result<usize> {
        let r = (a / b).round();
        if r < T::one() || ((a / b) - r).abs() > T::lit(1e-9) * r {
            return Err(Error::InvalidConfig(format!(
                "{} is not an integer multiple of {}",
                a.to_f64_lossy(),
                b.to_f64_lossy()
            )));
        }
        Ok(r.to_usize().unwrap_or(0))
    };
    let fine_steps = ratio(horizon, fine)?;
    let per_coarse = ratio(coarse, fine)?;
    if fine_steps % per_coarse != 0 {
        return Err(Error::InvalidConfig(
            "horizon is not a multiple of the largest step".into(),
        ));
    }
    let levels: Vec<(usize, GalerkinStepper<T>)> = dts
        .iter()
        .map(|&dt| Ok((ratio(dt, fine)?, GalerkinStepper::new(spec, order, dt, theta)?)))
        .collect::<Result<_>>()?;
    for (m, _) in &levels {
        if per_coarse % m != 0 {
            return Err(Error::InvalidConfig("step sizes must divide the largest step".into()));
        }
    }
    let d = spec.d;
    let l2 = SobolevIndex::new(T::zero());
    let sqrt_fine = fine.sqrt();

    let run_path = |j: usize| -> Result<Vec<T>> {
        let mut rng = PathRng::split(seed, j as u64);
        let increments = rng.normal_vec(sqrt_fine, fine_steps * d);
        let mut brownian = vec![T::zero(); d];
        let mut reference = Vec::with_capacity(fine_steps / per_coarse);
        for (s, dw) in increments.chunks(d).enumerate() {
            for (b, &w) in brownian.iter_mut().zip(dw) {
                *b += w;
            }
            if (s + 1) % per_coarse == 0 {
                let t = T::from_count(s + 1) * fine;
                reference.push(oracle.solution(t, &brownian)?);
            }
        }
        levels
            .iter()
            .map(|(m, stepper)| {
                let mut x = x0n.coeffs().to_vec();
                let mut dw = vec![T::zero(); d];
                let mut worst = T::zero();
                for (s, block) in increments.chunks(m * d).enumerate() {
                    dw.iter_mut().for_each(|v| *v = T::zero());
                    for inc in block.chunks(d) {
                        for (a, &w) in dw.iter_mut().zip(inc) {
                            *a += w;
                        }
                    }
                    x = stepper.step_coeffs(&x, &dw);
                    let fine_done = (s + 1) * m;
                    if fine_done % per_coarse == 0 {
                        let r = &reference[fine_done / per_coarse - 1];
                        let diff = GradedVector::from_coeffs(d, order, x.clone())?.add_scaled(-T::one(), r)?;
                        let err = diff.norm(l2);
                        if !err.is_finite() {
                            return Err(Error::BlowUp {
                                path: Some(j),
                                time: (T::from_count(fine_done) * fine).to_f64_lossy(),
                            });
                        }
                        worst = worst.max(err);
                    }
                }
                Ok(worst)
            })
            .collect()
    };

    let per_path = (0..paths)
        .into_par_iter()
        .map(run_path)
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<StrongErrorRow<T>> = dts
        .iter()
        .enumerate()
        .map(|(l, &dt)| {
            let (mean, se) = mean_and_stderr(per_path.iter().map(|v| v[l]));
            StrongErrorRow {
                dt,
                mean_max_error: mean,
                stderr: se,
            }
        })
        .collect();
    let mut by_dt = rows.clone();
    by_dt.sort_by(|a, b| a.dt.partial_cmp(&b.dt).unwrap_or(std::cmp::Ordering::Equal));
    let monotone = by_dt.windows(2).all(|w| w[0].mean_max_error < w[1].mean_max_error);
    let fitted = fitted_order(
        &rows.iter().map(|r| r.dt).collect::<Vec<_>>(),
        &rows.iter().map(|r| r.mean_max_error).collect::<Vec<_>>(),
    );
    Ok(StrongErrorStudy {
        order,
        paths,
        rows,
        fitted_order: fitted,
        monotone,
    })
}

/// Per-path `||X_t^{Galerkin} - X_t^{oracle}||_0` on the save grid of `cfg`,
/// driven by the same streams as [`run_ensemble`](super::run_ensemble).
pub fn oracle_error_paths<T: Scalar>(
    spec: &ModelSpec<T>,
    cfg: &SimConfig<T>,
    x0: &GradedVector<T>,
) -> Result<EnsembleRecord<T>> {
    let stepper = GalerkinStepper::from_config(spec, cfg)?;
    let oracle = TranslationOracle::new(spec, x0, cfg.order)?;
    let x0n = lift_initial(x0, cfg.order)?;
    let (d, order, steps) = (spec.d, cfg.order, cfg.steps());
    let sqrt_dt = cfg.dt.sqrt();
    let l2 = SobolevIndex::new(T::zero());

    let run_path = |j: usize| -> Result<Vec<T>> {
        let mut rng = PathRng::split(cfg.seed, j as u64);
        let mut x = x0n.coeffs().to_vec();
        let mut brownian = vec![T::zero(); d];
        let mut dw = vec![T::zero(); d];
        let mut out = Vec::with_capacity(steps / cfg.save_every + 1);
        out.push(
            x0n.add_scaled(-T::one(), &oracle.solution(T::zero(), &brownian)?)?
                .norm(l2),
        );
        for s in 1..=steps {
            rng.fill_normal(sqrt_dt, &mut dw);
            for (b, &w) in brownian.iter_mut().zip(&dw) {
                *b += w;
            }
            x = stepper.step_coeffs(&x, &dw);
            if s % cfg.save_every == 0 {
                let t = T::from_count(s) * cfg.dt;
                let err = GradedVector::from_coeffs(d, order, x.clone())?
                    .add_scaled(-T::one(), &oracle.solution(t, &brownian)?)?
                    .norm(l2);
                if !err.is_finite() {
                    return Err(Error::BlowUp {
                        path: Some(j),
                        time: t.to_f64_lossy(),
                    });
                }
                out.push(err);
            }
        }
        Ok(out)
    };

    let values = (0..cfg.paths)
        .into_par_iter()
        .map(run_path)
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(EnsembleRecord {
        times: cfg.save_times(),
        values,
    })
}

/// Least-squares slope of `ln err` against `ln dt`.
pub fn fitted_order<T: Scalar>(dts: &[T], errors: &[T]) -> T {
    let pts: Vec<(T, T)> = dts
        .iter()
        .zip(errors)
        .filter(|(_, &e)| e > T::zero())
        .map(|(&h, &e)| (h.ln(), e.ln()))
        .collect();
    least_squares_slope(&pts)
}

pub(crate) fn least_squares_slope<T: Scalar>(pts: &[(T, T)]) -> T {
    if pts.len() < 2 {
        return T::nan();
    }
    let n = T::from_count(pts.len());
    let mx = pts.iter().map(|p| p.0).sum::<T>() / n;
    let my = pts.iter().map(|p| p.1).sum::<T>() / n;
    let sxy = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<T>();
    let sxx = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum::<T>();
    sxy / sxx
}
