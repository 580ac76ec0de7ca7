//! Hermite coefficient vectors and the Hermite-Sobolev inner products
//! `<f, g>_p = sum_k (2|k| + d)^{2p} <f, h_k> <g, h_k>`.
//!
//! Stored coefficients are always the `L^2` pairings `<f, h_k>`; the index
//! `p` enters only through the weights.

use serde::{Deserialize, Serialize};

use crate::basis::{basis_size, grade_offsets, hermite_table, rank_of, MultiIndex};
use crate::error::{Error, Result};
use crate::scalar::{CompensatedSum, Scalar};

/// Regularity index `p` of `S_p`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SobolevIndex<T>(pub T);

impl<T: Scalar> SobolevIndex<T> {
    pub fn new(p: T) -> Self {
        Self(p)
    }

    pub fn value(self) -> T {
        self.0
    }

    /// `(2 g + d)^{2p}` for a basis element of grade `g`.
    pub fn weight(self, d: usize, grade: usize) -> T {
        (T::from_count(2 * grade + d)).powf(self.0 + self.0)
    }

    /// Shifted index `p + delta`.
    pub fn shifted(self, delta: T) -> Self {
        Self(self.0 + delta)
    }
}

impl<T: Scalar> From<T> for SobolevIndex<T> {
    fn from(p: T) -> Self {
        Self(p)
    }
}

/// Per-grade weights `(2g + d)^{2p}` expanded to one entry per rank.
pub fn rank_weights<T: Scalar>(d: usize, order: usize, p: SobolevIndex<T>) -> Vec<T> {
    let offsets = grade_offsets(d, order).expect("weights for a valid basis");
    let mut w = Vec::with_capacity(offsets[order + 1]);
    for g in 0..=order {
        let wg = p.weight(d, g);
        w.extend(std::iter::repeat_n(wg, offsets[g + 1] - offsets[g]));
    }
    w
}

/// Element of `span{h_k : |k| <= order}` stored by its coefficients in rank order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar", deserialize = "T: Scalar"))]
#[serde(try_from = "GradedVectorRepr<T>")]
pub struct GradedVector<T> {
    d: usize,
    #[serde(rename = "N")]
    order: usize,
    coeffs: Vec<T>,
}

#[derive(Deserialize)]
struct GradedVectorRepr<T> {
    d: usize,
    #[serde(rename = "N")]
    order: usize,
    coeffs: Vec<T>,
}

impl<T: Scalar> TryFrom<GradedVectorRepr<T>> for GradedVector<T> {
    type Error = Error;

    fn try_from(r: GradedVectorRepr<T>) -> Result<Self> {
        Self::from_coeffs(r.d, r.order, r.coeffs)
    }
}

impl<T: Scalar> GradedVector<T> {
    pub fn zeros(d: usize, order: usize) -> Result<Self> {
        let size = basis_size(d, order)?;
        Ok(Self {
            d,
            order,
            coeffs: vec![T::zero(); size],
        })
    }

    pub fn from_coeffs(d: usize, order: usize, coeffs: Vec<T>) -> Result<Self> {
        let size = basis_size(d, order)?;
        if coeffs.len() != size {
            return Err(Error::CoefficientLength {
                expected: size,
                got: coeffs.len(),
            });
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("coefficients"));
        }
        Ok(Self { d, order, coeffs })
    }

    /// Unit vector on `h_k`.
    pub fn basis_element(order: usize, k: &MultiIndex) -> Result<Self> {
        let mut v = Self::zeros(k.dim(), order)?;
        if k.order() > order {
            return Err(Error::OrderOutOfRange {
                requested: k.order(),
                available: order,
            });
        }
        v.coeffs[k.rank()] = T::one();
        Ok(v)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    /// Coefficient `<x, h_k>`; zero above the truncation order.
    pub fn coeff(&self, k: &[usize]) -> T {
        if k.iter().sum::<usize>() > self.order {
            T::zero()
        } else {
            self.coeffs[rank_of(k)]
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == T::zero())
    }

    pub fn all_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    /// Same element viewed in a larger truncation (zero padding).
    pub fn extend_to(&self, order: usize) -> Result<Self> {
        if order < self.order {
            return Err(Error::OrderOutOfRange {
                requested: self.order,
                available: order,
            });
        }
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(basis_size(self.d, order)?, T::zero());
        Ok(Self {
            d: self.d,
            order,
            coeffs,
        })
    }

    pub fn scaled(&self, c: T) -> Self {
        Self {
            d: self.d,
            order: self.order,
            coeffs: self.coeffs.iter().map(|&x| c * x).collect(),
        }
    }

    /// `self + c * other`, in the larger of the two truncations.
    pub fn add_scaled(&self, c: T, other: &Self) -> Result<Self> {
        check_dims(self, other)?;
        let order = self.order.max(other.order);
        let mut out = self.extend_to(order)?;
        for (o, &x) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *o += c * x;
        }
        Ok(out)
    }

    pub fn norm(&self, p: SobolevIndex<T>) -> T {
        self.norm_sq(p).sqrt()
    }

    pub fn norm_sq(&self, p: SobolevIndex<T>) -> T {
        inner_product_unchecked(self, self, p)
    }
}

fn check_dims<T>(f: &GradedVector<T>, g: &GradedVector<T>) -> Result<()> {
    if f.d != g.d {
        return Err(Error::DimensionMismatch { left: f.d, right: g.d });
    }
    Ok(())
}

/// `<f, g>_p`. The shorter vector is zero-padded to the common truncation.
pub fn inner_product<T: Scalar>(f: &GradedVector<T>, g: &GradedVector<T>, p: SobolevIndex<T>) -> Result<T> {
    check_dims(f, g)?;
    Ok(inner_product_unchecked(f, g, p))
}

fn inner_product_unchecked<T: Scalar>(f: &GradedVector<T>, g: &GradedVector<T>, p: SobolevIndex<T>) -> T {
    let order = f.order.min(g.order);
    let offsets = grade_offsets(f.d, order).expect("offsets of a valid vector");
    let mut acc = CompensatedSum::new();
    for grade in 0..=order {
        let w = p.weight(f.d, grade);
        for r in offsets[grade]..offsets[grade + 1] {
            acc.add(w * (f.coeffs[r] * g.coeffs[r]));
        }
    }
    acc.value()
}

/// Truncation `T_n x = sum_{|k| <= n} <x, h_k> h_k`, kept at the input order.
pub fn project_truncate<T: Scalar>(x: &GradedVector<T>, n: usize) -> Result<GradedVector<T>> {
    if n > x.order {
        return Err(Error::OrderOutOfRange {
            requested: n,
            available: x.order,
        });
    }
    let keep = basis_size(x.d, n)?;
    let mut out = x.clone();
    out.coeffs[keep..].iter_mut().for_each(|c| *c = T::zero());
    Ok(out)
}

/// Restriction to `span_n` as a vector of order `n`.
pub fn restrict<T: Scalar>(x: &GradedVector<T>, n: usize) -> Result<GradedVector<T>> {
    if n > x.order {
        return Err(Error::OrderOutOfRange {
            requested: n,
            available: x.order,
        });
    }
    let keep = basis_size(x.d, n)?;
    Ok(GradedVector {
        d: x.d,
        order: n,
        coeffs: x.coeffs[..keep].to_vec(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingReport<T> {
    /// `||T_n x - x||_q`
    pub lhs: T,
    /// `(2n + d)^{-(p - q)} ||x||_p`
    pub rhs: T,
    pub pass: bool,
}

/// Checks the finite-rank approximation bound of the embedding `S_p -> S_q`.
pub fn embedding_bound_check<T: Scalar>(
    x: &GradedVector<T>,
    p: SobolevIndex<T>,
    q: SobolevIndex<T>,
    n: usize,
) -> Result<EmbeddingReport<T>> {
    if !(q.0 < p.0) {
        return Err(Error::IndexOrder {
            p: p.0.to_f64_lossy(),
            q: q.0.to_f64_lossy(),
        });
    }
    let tail = x.add_scaled(-T::one(), &project_truncate(x, n)?)?;
    let lhs = tail.norm(q);
    let rhs = T::from_count(2 * n + x.d).powf(q.0 - p.0) * x.norm(p);
    let pass = lhs <= rhs * (T::one() + T::lit(1e-12));
    Ok(EmbeddingReport { lhs, rhs, pass })
}

/// Coefficients `<delta_y, h_k> = h_k(y)` of the point mass at `y`.
pub fn dirac_coeffs<T: Scalar>(y: &[T], order: usize) -> Result<GradedVector<T>> {
    let d = y.len();
    let mut v = GradedVector::zeros(d, order)?;
    let tables: Vec<Vec<T>> = y.iter().map(|&yi| hermite_table(yi, order)).collect();
    let set = crate::basis::BasisIndexSet::enumerate(d, order)?;
    for (r, k) in set.iter().enumerate() {
        v.coeffs[r] = k.iter().zip(&tables).fold(T::one(), |acc, (&ki, t)| acc * t[ki]);
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::hermite_1d;
    use proptest::prelude::*;

    fn e(_d: usize, order: usize, k: &[usize]) -> GradedVector<f64> {
        GradedVector::basis_element(order, &MultiIndex::new(k.to_vec()).unwrap()).unwrap()
    }

    fn p(x: f64) -> SobolevIndex<f64> {
        SobolevIndex(x)
    }

    #[test]
    fn single_term_norm() {
        let f = e(1, 3, &[1]);
        let ip = inner_product(&f, &f, p(0.5)).unwrap();
        assert!((ip - 3.0).abs() < 1e-15);
        assert!((f.norm(p(0.5)) - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn disjoint_support_is_orthogonal() {
        for pp in [-2.0, 0.0, 1.5] {
            assert_eq!(inner_product(&e(1, 2, &[0]), &e(1, 2, &[1]), p(pp)).unwrap(), 0.0);
        }
    }

    #[test]
    fn negative_index_two_terms() {
        let f = e(1, 1, &[0]).add_scaled(1.0, &e(1, 1, &[1])).unwrap();
        let ip = inner_product(&f, &f, p(-1.0)).unwrap();
        assert!((ip - (1.0 + 1.0 / 9.0)).abs() < 1e-15);
    }

    #[test]
    fn mixed_truncations_zero_pad() {
        let f = e(2, 1, &[0, 1]);
        let g = e(2, 4, &[0, 1]).add_scaled(2.0, &e(2, 4, &[2, 2])).unwrap();
        assert!((inner_product(&f, &g, p(1.0)).unwrap() - 16.0).abs() < 1e-14);
        assert!(inner_product(&f, &e(3, 1, &[0, 0, 0]), p(0.0)).is_err());
    }

    #[test]
    fn basis_norms_are_exact_powers() {
        for k in [[0, 0], [1, 2], [4, 0]] {
            let v = e(2, 4, &k);
            for pp in [-1.5, 0.0, 0.75, 2.0] {
                let expected = ((2 * (k[0] + k[1]) + 2) as f64).powf(pp);
                assert!((v.norm(p(pp)) - expected).abs() <= 1e-13 * expected);
            }
        }
    }

    #[test]
    fn truncation_cases() {
        let x = GradedVector::from_coeffs(1, 4, vec![1.0, -2.0, 3.0, 0.5, 0.25]).unwrap();
        assert_eq!(project_truncate(&x, 4).unwrap(), x);
        assert!(project_truncate(&e(1, 3, &[3]), 2).unwrap().is_zero());
        let t0 = project_truncate(&x, 0).unwrap();
        assert_eq!(t0.coeffs(), &[1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(project_truncate(&x, 5).is_err());
        assert_eq!(restrict(&x, 1).unwrap().coeffs(), &[1.0, -2.0]);
    }

    #[test]
    fn embedding_single_mode() {
        let x = e(1, 2, &[2]);
        let r = embedding_bound_check(&x, p(1.0), p(0.0), 1).unwrap();
        assert!((r.lhs - 1.0).abs() < 1e-15);
        assert!((r.rhs - 5.0 / 3.0).abs() < 1e-15);
        assert!(r.pass);
        let full = embedding_bound_check(&x, p(1.0), p(0.0), 2).unwrap();
        assert_eq!(full.lhs, 0.0);
        assert!(full.pass);
        assert!(matches!(
            embedding_bound_check(&x, p(0.0), p(0.0), 1),
            Err(Error::IndexOrder { .. })
        ));
    }

    #[test]
    fn dirac_at_origin() {
        let v = dirac_coeffs(&[0.0_f64], 2).unwrap();
        let h0 = std::f64::consts::PI.powf(-0.25);
        assert!((v.coeffs()[0] - h0).abs() < 1e-15);
        assert_eq!(v.coeffs()[1], 0.0);
        assert!((v.coeffs()[2] + h0 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn dirac_pairing_evaluates_functions() {
        let y = 0.7;
        let delta = dirac_coeffs(&[y], 6).unwrap();
        let s = e(1, 6, &[1]);
        let pairing = inner_product(&delta, &s, p(0.0)).unwrap();
        assert!((pairing - hermite_1d(1, y)).abs() < 1e-15);
    }

    #[test]
    fn dirac_negative_norm_partial_sums_are_cauchy() {
        // p < -d/4: tail increments of the partial sums shrink
        let pp = p(-0.75);
        let y = [0.4, -0.3];
        let norms: Vec<f64> = [10, 20, 40, 80]
            .iter()
            .map(|&n| dirac_coeffs(&y, n).unwrap().norm_sq(pp))
            .collect();
        for w in norms.windows(2) {
            assert!(w[1] >= w[0]);
        }
        let incs: Vec<f64> = norms.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(incs[2] < incs[1] && incs[1] < incs[0]);
    }

    #[test]
    fn json_schema_round_trip() {
        let x = GradedVector::from_coeffs(2, 1, vec![1.0, 0.5, -0.25]).unwrap();
        let s = serde_json::to_string(&x).unwrap();
        assert_eq!(s, r#"{"d":2,"N":1,"coeffs":[1.0,0.5,-0.25]}"#);
        let back: GradedVector<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, x);
        assert!(serde_json::from_str::<GradedVector<f64>>(r#"{"d":2,"N":1,"coeffs":[1.0]}"#).is_err());
    }

    fn vec_strategy(d: usize, order: usize) -> impl Strategy<Value = GradedVector<f64>> {
        let size = basis_size(d, order).unwrap();
        proptest::collection::vec(-1.0..1.0f64, size).prop_map(move |c| GradedVector::from_coeffs(d, order, c).unwrap())
    }

    proptest! {
        #[test]
        fn inner_product_is_symmetric_positive(f in vec_strategy(2, 5), g in vec_strategy(2, 5), pp in -2.0..2.0f64) {
            let a = inner_product(&f, &g, p(pp)).unwrap();
            let b = inner_product(&g, &f, p(pp)).unwrap();
            prop_assert_eq!(a, b);
            if !f.is_zero() {
                prop_assert!(inner_product(&f, &f, p(pp)).unwrap() > 0.0);
            }
        }

        #[test]
        fn duality_weight_inequality(f in vec_strategy(3, 4), pp in 0.0..3.0f64) {
            let lhs = f.norm_sq(p(pp)) * f.norm_sq(p(-pp));
            let rhs = f.norm_sq(p(0.0)).powi(2);
            prop_assert!(lhs >= rhs * (1.0 - 1e-12));
        }

        #[test]
        fn truncation_is_idempotent_and_self_adjoint(
            f in vec_strategy(2, 6), g in vec_strategy(2, 6), n in 0usize..=6, pp in -1.0..2.0f64
        ) {
            let tf = project_truncate(&f, n).unwrap();
            prop_assert_eq!(project_truncate(&tf, n).unwrap(), tf.clone());
            let a = inner_product(&tf, &g, p(pp)).unwrap();
            let b = inner_product(&f, &project_truncate(&g, n).unwrap(), p(pp)).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }

        #[test]
        fn embedding_bound_holds(x in vec_strategy(2, 8), n in 0usize..8) {
            let r = embedding_bound_check(&x, p(2.0), p(0.0), n).unwrap();
            prop_assert!(r.pass, "lhs {} rhs {}", r.lhs, r.rhs);
        }
    }
}
