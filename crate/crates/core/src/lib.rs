//! Hermite spectral toolkit for linear SPDEs
//! `dX_t = (L - alpha) X_t dt + sum_i A_i X_t dB^i_t` on Hermite-Sobolev spaces.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! `*F64` aliases below name the double-precision instantiations used by the
//! command-line front-end.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod basis;
pub mod error;
pub mod linalg;
pub mod model;
pub mod monotonicity;
pub mod operators;
pub mod rng;
pub mod scalar;
pub mod simulate;
pub mod space;

pub use analysis::{ErgodicReport, Functional, StabilityReport, TailReport};
pub use basis::{BasisIndexSet, MultiIndex};
pub use error::{Error, Result};
pub use model::ModelSpec;
pub use monotonicity::{estimate_constant, quadratic_form, verify_inequality, MonotonicityEstimate};
pub use operators::BandOperator;
pub use scalar::Scalar;
pub use simulate::{GalerkinStepper, MomentTable, PathState, SimConfig, TranslationOracle};
pub use space::{GradedVector, SobolevIndex};

pub type GradedVectorF64 = GradedVector<f64>;
pub type GradedVectorF32 = GradedVector<f32>;
pub type SobolevIndexF64 = SobolevIndex<f64>;
pub type ModelSpecF64 = ModelSpec<f64>;
pub type ModelSpecF32 = ModelSpec<f32>;
pub type BandOperatorF64 = BandOperator<f64>;
pub type MonotonicityEstimateF64 = MonotonicityEstimate<f64>;

pub type SimConfigF64 = SimConfig<f64>;
pub type SimConfigF32 = SimConfig<f32>;
pub type PathStateF64 = PathState<f64>;
pub type MomentTableF64 = MomentTable<f64>;
pub type StabilityReportF64 = StabilityReport<f64>;
pub type TailReportF64 = TailReport<f64>;
pub type ErgodicReportF64 = ErgodicReport<f64>;
pub type FunctionalF64 = Functional<f64>;
