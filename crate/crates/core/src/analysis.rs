//! Post-processing of ensemble output: decay-rate fits, tail mass and
//! time averages of bounded functionals.
//!
//! The linear SPDE has `0` as a fixed point, so when it is stable its unique
//! invariant measure is the point mass at `0`. Ergodic averages are compared
//! against `f(0)`; that reference is derived, not measured, and reports say so.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::scalar::Scalar;
use crate::simulate::least_squares_slope;
use crate::simulate::{mean_and_stderr, run_ensemble, EnsembleRecord, MomentTable, SimConfig};
use crate::space::{GradedVector, SobolevIndex};

pub const LIMIT_REF_NOTE: &str =
    "limit_ref = f(0): derived from linearity (0 is a fixed point) and uniqueness of the invariant measure";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct StabilityReport<T> {
    pub norm_index: SobolevIndex<T>,
    /// `None` when every moment is zero.
    pub beta_hat: Option<T>,
    /// `2 alpha - C0`.
    pub bound_rate: T,
    pub c0: T,
    pub initial_sq_norm: T,
    pub tol: T,
    /// `(t, m(t), stderr)` on the save grid.
    pub curve: Vec<(T, T, T)>,
    /// Largest `m(t) / (||x0||^2 e^{-bound_rate t})`.
    pub worst_ratio: T,
    /// `None` when `2 alpha <= C0`: the bound is not claimed there.
    pub pass: Option<bool>,
    pub degenerate: bool,
}

/// Compares `m(t)` with `||x0||^2 e^{(C0 - 2 alpha) t} (1 + tol)` and fits the
/// decay rate over the points with `m(t) > 10 stderr`.
pub fn stability_check<T: Scalar>(
    moments: &MomentTable<T>,
    spec: &ModelSpec<T>,
    c0: T,
    tol: T,
    fit_window: Option<(T, T)>,
) -> StabilityReport<T> {
    let two = T::lit(2.0);
    let bound_rate = two * spec.alpha - c0;
    let initial = moments.mean_sq_norm.first().copied().unwrap_or_else(T::zero);
    let curve: Vec<(T, T, T)> = moments
        .times
        .iter()
        .zip(&moments.mean_sq_norm)
        .zip(&moments.stderr)
        .map(|((&t, &m), &s)| (t, m, s))
        .collect();
    let degenerate = curve.iter().all(|&(_, m, _)| m == T::zero());
    let report = |beta_hat, worst_ratio, pass| StabilityReport {
        norm_index: moments.norm_index,
        beta_hat,
        bound_rate,
        c0,
        initial_sq_norm: initial,
        tol,
        curve: curve.clone(),
        worst_ratio,
        pass,
        degenerate,
    };
    if degenerate {
        return report(None, T::zero(), Some(true));
    }

    let in_window = |t: T| fit_window.is_none_or(|(a, b)| t >= a && t <= b);
    let pts: Vec<(T, T)> = curve
        .iter()
        .filter(|&&(t, m, s)| m > T::zero() && m > T::lit(10.0) * s && in_window(t))
        .map(|&(t, m, _)| (t, m.ln()))
        .collect();
    let slope = least_squares_slope(&pts);
    let beta_hat = if slope.is_finite() { Some(-slope) } else { None };

    let worst_ratio = curve
        .iter()
        .map(|&(t, m, _)| m / (initial * (-bound_rate * t).exp()))
        .fold(T::zero(), T::max);
    let pass = if bound_rate > T::zero() {
        Some(worst_ratio <= T::one() + tol)
    } else {
        None
    };
    report(beta_hat, worst_ratio, pass)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct TailRow<T> {
    #[serde(rename = "R")]
    pub r: T,
    /// Path mean of `(1/T) int 1{||X_t|| >= R} dt`.
    pub time_avg_exceed: T,
    pub stderr: T,
    /// `||x0||^2 / R^2`.
    pub chebyshev_bound: T,
    /// `time_avg_exceed <= chebyshev_bound + 3 stderr`.
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct TailReport<T> {
    pub norm_index: SobolevIndex<T>,
    pub eps: T,
    pub rows: Vec<TailRow<T>>,
    /// Smallest grid `R` with exceedance below `eps`.
    #[serde(rename = "R_eps")]
    pub r_eps: Option<T>,
    pub pass: bool,
}

/// Time-averaged exceedance of `||X_t|| >= R` for every `R` in the grid.
pub fn tail_mass<T: Scalar>(moments: &MomentTable<T>, r_grid: &[T], eps: T) -> Result<TailReport<T>> {
    if r_grid.iter().any(|&r| !(r > T::zero())) {
        return Err(Error::InvalidConfig("R grid must be positive".into()));
    }
    let times = &moments.times;
    if times.len() < 2 {
        return Err(Error::InvalidConfig("tail mass needs at least two save times".into()));
    }
    let initial = moments.mean_sq_norm[0];
    let mut rows = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        let r2 = r * r;
        let per_path = moments.per_path_sq_norms.iter().map(|sq| {
            let ind: Vec<T> = sq.iter().map(|&v| if v >= r2 { T::one() } else { T::zero() }).collect();
            trapezoid_average(times, &ind, times.len() - 1)
        });
        let (mean, se) = mean_and_stderr(per_path);
        let bound = initial / r2;
        rows.push(TailRow {
            r,
            time_avg_exceed: mean,
            stderr: se,
            chebyshev_bound: bound,
            pass: mean <= bound + T::lit(3.0) * se,
        });
    }
    let mut sorted: Vec<&TailRow<T>> = rows.iter().collect();
    sorted.sort_by(|a, b| a.r.partial_cmp(&b.r).unwrap_or(std::cmp::Ordering::Equal));
    let r_eps = sorted.iter().find(|row| row.time_avg_exceed < eps).map(|row| row.r);
    let pass = rows.iter().all(|row| row.pass);
    Ok(TailReport {
        norm_index: moments.norm_index,
        eps,
        rows,
        r_eps,
        pass,
    })
}

/// `(1/t_end) int_0^{t_end} v dt` by the trapezoid rule over `times[..=end]`.
fn trapezoid_average<T: Scalar>(times: &[T], v: &[T], end: usize) -> T {
    let span = times[end] - times[0];
    if span <= T::zero() {
        return v[0];
    }
    let half = T::lit(0.5);
    let integral = (0..end).fold(T::zero(), |acc, i| {
        acc + half * (v[i] + v[i + 1]) * (times[i + 1] - times[i])
    });
    integral / span
}

/// Bounded continuous test functionals, all with values in `[0, 1]` or `[-1, 1]`.
///
/// A missing norm index falls back to the caller's default (`q - 2`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Functional<T> {
    /// `exp(-||x||_s^2)`.
    ExpNegSqNorm(Option<SobolevIndex<T>>),
    /// `cos(x_k)` for the coefficient of basis rank `k`.
    CosCoeff(usize),
    /// `min(||x||_s, 1)`.
    CappedNorm(Option<SobolevIndex<T>>),
}

impl<T: Scalar> Functional<T> {
    pub fn bound(&self) -> T {
        T::one()
    }

    pub fn index_or(&self, default: SobolevIndex<T>) -> SobolevIndex<T> {
        match self {
            Self::ExpNegSqNorm(s) | Self::CappedNorm(s) => s.unwrap_or(default),
            Self::CosCoeff(_) => default,
        }
    }

    pub fn eval(&self, x: &GradedVector<T>, default: SobolevIndex<T>) -> T {
        match self {
            Self::ExpNegSqNorm(_) => (-x.norm_sq(self.index_or(default))).exp(),
            Self::CosCoeff(k) => x.coeffs().get(*k).copied().unwrap_or_else(T::zero).cos(),
            Self::CappedNorm(_) => x.norm(self.index_or(default)).min(T::one()),
        }
    }
}

impl<T: Scalar> fmt::Display for Functional<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let with_index = |f: &mut fmt::Formatter<'_>, name: &str, s: &Option<SobolevIndex<T>>| match s {
            Some(s) => write!(f, "{name}({})", s.value()),
            None => write!(f, "{name}"),
        };
        match self {
            Self::ExpNegSqNorm(s) => with_index(f, "exp_neg_sq_norm", s),
            Self::CosCoeff(k) => write!(f, "cos_coeff({k})"),
            Self::CappedNorm(s) => with_index(f, "capped_norm", s),
        }
    }
}

const UNBOUNDED: &[&str] = &["norm", "sq_norm", "coeff", "identity", "linear"];

impl<T: Scalar> FromStr for Functional<T> {
    type Err = Error;

    /// Accepts `name` or `name(arg)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, arg) = match s.find('(') {
            Some(open) if s.ends_with(')') => (s[..open].trim(), Some(s[open + 1..s.len() - 1].trim())),
            Some(_) => return Err(Error::UnknownFunctional(s.to_string())),
            None => (s, None),
        };
        let index = |arg: Option<&str>| -> Result<Option<SobolevIndex<T>>> {
            arg.map(|a| {
                a.parse::<f64>()
                    .map(|v| SobolevIndex::new(T::lit(v)))
                    .map_err(|_| Error::UnknownFunctional(s.to_string()))
            })
            .transpose()
        };
        match name {
            "exp_neg_sq_norm" => Ok(Self::ExpNegSqNorm(index(arg)?)),
            "capped_norm" => Ok(Self::CappedNorm(index(arg)?)),
            "cos_coeff" => arg
                .and_then(|a| a.parse::<usize>().ok())
                .map(Self::CosCoeff)
                .ok_or_else(|| Error::UnknownFunctional(s.to_string())),
            n if UNBOUNDED.contains(&n) => Err(Error::UnboundedFunctional(s.to_string())),
            _ => Err(Error::UnknownFunctional(s.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct StartAverages<T> {
    pub running_avg: Vec<T>,
    pub stderr: Vec<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
pub struct ErgodicReport<T> {
    pub functional_id: String,
    pub norm_index: SobolevIndex<T>,
    pub bound: T,
    pub limit_ref: T,
    pub limit_ref_note: String,
    /// `T/8, T/4, T/2, T`.
    pub checkpoints: Vec<T>,
    /// One entry per start.
    pub starts: Vec<StartAverages<T>>,
    /// `|A_T(x1) - A_T(x2)|` at each checkpoint, present with two starts.
    pub start_gap: Option<Vec<T>>,
    /// Standard error of the paired difference.
    pub start_gap_stderr: Option<Vec<T>>,
}

impl<T: Scalar> ErgodicReport<T> {
    pub fn running_avg(&self) -> &[T] {
        &self.starts[0].running_avg
    }

    /// `|A_T(f)| <= B` at every checkpoint and start.
    pub fn within_bound(&self) -> bool {
        self.starts
            .iter()
            .flat_map(|s| &s.running_avg)
            .all(|a| a.abs() <= self.bound)
    }
}

/// Save-grid indices of `T/8, T/4, T/2, T`.
fn checkpoint_indices<T: Scalar>(times: &[T]) -> Vec<usize> {
    let last = times.len() - 1;
    [8, 4, 2, 1]
        .iter()
        .map(|&div| ((last as f64) / div as f64).round() as usize)
        .map(|i| i.max(1))
        .collect()
}

fn path_running_averages<T: Scalar>(record: &EnsembleRecord<T>, idx: &[usize]) -> Vec<Vec<T>> {
    record
        .values
        .iter()
        .map(|v| idx.iter().map(|&i| trapezoid_average(&record.times, v, i)).collect())
        .collect()
}

fn summarize<T: Scalar>(per_path: &[Vec<T>], n_checkpoints: usize) -> StartAverages<T> {
    let (running_avg, stderr) = (0..n_checkpoints)
        .map(|c| mean_and_stderr(per_path.iter().map(|v| v[c])))
        .unzip();
    StartAverages { running_avg, stderr }
}

/// Running time averages of `f(X_t)` at `T/8, T/4, T/2, T`, with `f`
/// evaluated at index `q - 2` unless the functional names its own.
pub fn ergodic_average<T: Scalar>(
    spec: &ModelSpec<T>,
    cfg: &SimConfig<T>,
    x0: &GradedVector<T>,
    functional: Functional<T>,
    q: SobolevIndex<T>,
) -> Result<ErgodicReport<T>> {
    ergodic_starts(spec, cfg, &[x0], functional, q)
}

/// [`ergodic_average`] from two starts driven by the same noise, with the
/// gap between their averages.
pub fn ergodic_start_gap<T: Scalar>(
    spec: &ModelSpec<T>,
    cfg: &SimConfig<T>,
    x1: &GradedVector<T>,
    x2: &GradedVector<T>,
    functional: Functional<T>,
    q: SobolevIndex<T>,
) -> Result<ErgodicReport<T>> {
    ergodic_starts(spec, cfg, &[x1, x2], functional, q)
}

fn ergodic_starts<T: Scalar>(
    spec: &ModelSpec<T>,
    cfg: &SimConfig<T>,
    starts: &[&GradedVector<T>],
    functional: Functional<T>,
    q: SobolevIndex<T>,
) -> Result<ErgodicReport<T>> {
    if q.value() >= spec.p {
        return Err(Error::IndexOrder {
            p: spec.p.to_f64_lossy(),
            q: q.value().to_f64_lossy(),
        });
    }
    let default = q.shifted(-T::lit(2.0));
    let index = functional.index_or(default);
    let mut per_start = Vec::with_capacity(starts.len());
    let mut checkpoints = Vec::new();
    for x0 in starts {
        let record = run_ensemble(spec, cfg, x0, |x| functional.eval(x, default))?;
        let idx = checkpoint_indices(&record.times);
        checkpoints = idx.iter().map(|&i| record.times[i]).collect();
        per_start.push(path_running_averages(&record, &idx));
    }
    let n_cp = checkpoints.len();
    let (start_gap, start_gap_stderr) = if per_start.len() == 2 {
        let (gap, se): (Vec<T>, Vec<T>) = (0..n_cp)
            .map(|c| {
                let diffs = per_start[0].iter().zip(&per_start[1]).map(|(a, b)| a[c] - b[c]);
                let (mean, se) = mean_and_stderr(diffs);
                (mean.abs(), se)
            })
            .unzip();
        (Some(gap), Some(se))
    } else {
        (None, None)
    };
    let zero = GradedVector::zeros(spec.d, 0)?;
    Ok(ErgodicReport {
        functional_id: functional.to_string(),
        norm_index: index,
        bound: functional.bound(),
        limit_ref: functional.eval(&zero, default),
        limit_ref_note: LIMIT_REF_NOTE.to_string(),
        checkpoints,
        starts: per_start.iter().map(|p| summarize(p, n_cp)).collect(),
        start_gap,
        start_gap_stderr,
    })
}
