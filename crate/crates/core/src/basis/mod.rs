//! Multi-indices, the graded-lexicographic basis ordering, and Hermite functions.
//!
//! Multi-indices `k = (k_1, ..., k_d)` are ordered first by grade `|k|` and
//! then lexicographically within a grade. The rank of `k` therefore does not
//! depend on the truncation order, and truncating a coefficient vector to
//! order `n` is a prefix slice.

mod hermite;
mod quadrature;

pub use hermite::{hermite_1d, hermite_eval, hermite_table};
pub use quadrature::GaussHermite;

use std::ops::Range;

use crate::error::{Error, Result};

/// Default cap on the number of basis elements an index set may hold.
pub const DEFAULT_SIZE_CAP: usize = 1 << 22;

/// Binomial coefficient `C(n, k)`, `None` on overflow.
pub fn binomial(n: usize, k: usize) -> Option<usize> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    usize::try_from(acc).ok()
}

/// Number of multi-indices in `d` dimensions with `|k| = n` exactly.
fn count_exact(d: usize, n: usize) -> usize {
    if d == 0 {
        return usize::from(n == 0);
    }
    binomial(n + d - 1, d - 1).expect("grade count overflow")
}

/// Number of multi-indices with `|k| <= order`, i.e. `C(order + d, d)`.
pub fn basis_size(d: usize, order: usize) -> Result<usize> {
    if d == 0 {
        return Err(Error::ZeroDimension);
    }
    binomial(order + d, d).ok_or(Error::BasisTooLarge {
        d,
        order,
        cap: usize::MAX,
    })
}

/// Rank offsets of each grade: entry `g` is the rank of the first index of
/// grade `g`; the final entry is the total size. Length `order + 2`.
pub fn grade_offsets(d: usize, order: usize) -> Result<Vec<usize>> {
    let mut offsets = Vec::with_capacity(order + 2);
    offsets.push(0);
    for g in 0..=order {
        offsets.push(basis_size(d, g)?);
    }
    Ok(offsets)
}

/// Rank of a multi-index in the global graded-lexicographic order.
pub fn rank_of(k: &[usize]) -> usize {
    let d = k.len();
    let grade: usize = k.iter().sum();
    let mut rank = if grade == 0 {
        0
    } else {
        binomial(grade - 1 + d, d).expect("rank overflow")
    };
    let mut remaining = grade;
    for (i, &ki) in k.iter().enumerate().take(d.saturating_sub(1)) {
        let tail = d - i - 1;
        for v in 0..ki {
            rank += count_exact(tail, remaining - v);
        }
        remaining -= ki;
    }
    rank
}

/// Inverse of [`rank_of`] for dimension `d`.
pub fn unrank(d: usize, rank: usize) -> Vec<usize> {
    let mut grade = 0;
    while basis_size(d, grade).expect("unrank overflow") <= rank {
        grade += 1;
    }
    let mut within = rank
        - if grade == 0 {
            0
        } else {
            basis_size(d, grade - 1).expect("unrank overflow")
        };
    let mut k = vec![0; d];
    let mut remaining = grade;
    for i in 0..d - 1 {
        let tail = d - i - 1;
        let mut v = 0;
        loop {
            let c = count_exact(tail, remaining - v);
            if within < c {
                break;
            }
            within -= c;
            v += 1;
        }
        k[i] = v;
        remaining -= v;
    }
    k[d - 1] = remaining;
    k
}

/// A multi-index `k` with non-negative entries.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(k: Vec<usize>) -> Result<Self> {
        if k.is_empty() {
            return Err(Error::ZeroDimension);
        }
        Ok(Self(k))
    }

    /// All-zero index in `d` dimensions.
    pub fn zero(d: usize) -> Self {
        Self(vec![0; d])
    }

    /// Standard unit index `e_i`.
    pub fn unit(d: usize, i: usize) -> Self {
        let mut k = vec![0; d];
        k[i] = 1;
        Self(k)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|k| = k_1 + ... + k_d`.
    pub fn order(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn rank(&self) -> usize {
        rank_of(&self.0)
    }

    pub fn from_rank(d: usize, rank: usize) -> Self {
        Self(unrank(d, rank))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

impl From<&[usize]> for MultiIndex {
    fn from(k: &[usize]) -> Self {
        Self(k.to_vec())
    }
}

/// All multi-indices of dimension `d` with `|k| <= order`, in rank order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasisIndexSet {
    d: usize,
    order: usize,
    indices: Vec<usize>,
    offsets: Vec<usize>,
}

impl BasisIndexSet {
    pub fn enumerate(d: usize, order: usize) -> Result<Self> {
        Self::enumerate_with_cap(d, order, DEFAULT_SIZE_CAP)
    }

    pub fn enumerate_with_cap(d: usize, order: usize, cap: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::ZeroDimension);
        }
        let size = basis_size(d, order)
            .ok()
            .filter(|&s| s <= cap)
            .ok_or(Error::BasisTooLarge { d, order, cap })?;
        let offsets = grade_offsets(d, order)?;
        let mut indices = Vec::with_capacity(size * d);
        let mut k = vec![0; d];
        for grade in 0..=order {
            // first index of the grade in lex order puts everything in the last slot
            k.iter_mut().for_each(|x| *x = 0);
            k[d - 1] = grade;
            loop {
                indices.extend_from_slice(&k);
                if !next_in_grade(&mut k) {
                    break;
                }
            }
        }
        debug_assert_eq!(indices.len(), size * d);
        Ok(Self {
            d,
            order,
            indices,
            offsets,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.offsets[self.order + 1]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, rank: usize) -> &[usize] {
        &self.indices[rank * self.d..(rank + 1) * self.d]
    }

    pub fn rank(&self, k: &[usize]) -> Result<usize> {
        if k.len() != self.d {
            return Err(Error::IndexDimension {
                expected: self.d,
                got: k.len(),
            });
        }
        let g: usize = k.iter().sum();
        if g > self.order {
            return Err(Error::OrderOutOfRange {
                requested: g,
                available: self.order,
            });
        }
        Ok(rank_of(k))
    }

    /// Ranks holding the indices of grade `g`.
    pub fn grade_range(&self, g: usize) -> Range<usize> {
        self.offsets[g]..self.offsets[g + 1]
    }

    pub fn grade_of_rank(&self, rank: usize) -> usize {
        self.offsets.partition_point(|&o| o <= rank) - 1
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[usize]> + '_ {
        self.indices.chunks_exact(self.d)
    }
}

/// Advances `k` to its lexicographic successor within the same grade.
fn next_in_grade(k: &mut [usize]) -> bool {
    let d = k.len();
    if d < 2 {
        return false;
    }
    // rightmost position (excluding the last) that can absorb one unit from the tail
    let tail_sum = |k: &[usize], from: usize| k[from..].iter().sum::<usize>();
    for i in (0..d - 1).rev() {
        if tail_sum(k, i + 1) > 0 {
            let rest = tail_sum(k, i + 1) - 1;
            k[i] += 1;
            k[i + 1..].iter_mut().for_each(|x| *x = 0);
            k[d - 1] = rest;
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_dimensional_enumeration() {
        let set = BasisIndexSet::enumerate(1, 2).unwrap();
        let all: Vec<_> = set.iter().map(|k| k.to_vec()).collect();
        assert_eq!(all, vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn two_dimensional_grade_one() {
        let set = BasisIndexSet::enumerate(2, 1).unwrap();
        let all: Vec<_> = set.iter().map(|k| k.to_vec()).collect();
        assert_eq!(all, vec![vec![0, 0], vec![0, 1], vec![1, 0]]);
        assert_eq!(set.len(), binomial(3, 2).unwrap());
    }

    #[test]
    fn sizes_match_binomial() {
        assert_eq!(BasisIndexSet::enumerate(3, 4).unwrap().len(), 35);
        for d in 1..5 {
            for n in 0..8 {
                let set = BasisIndexSet::enumerate(d, n).unwrap();
                assert_eq!(set.len(), binomial(n + d, d).unwrap());
            }
        }
    }

    #[test]
    fn rejects_zero_dimension_and_oversize() {
        assert_eq!(BasisIndexSet::enumerate(0, 3), Err(Error::ZeroDimension));
        assert!(matches!(
            BasisIndexSet::enumerate_with_cap(3, 40, 1000),
            Err(Error::BasisTooLarge { .. })
        ));
    }

    #[test]
    fn ordering_is_grade_monotone_and_lexicographic() {
        let set = BasisIndexSet::enumerate(3, 6).unwrap();
        for r in 1..set.len() {
            let (a, b) = (set.get(r - 1), set.get(r));
            let (ga, gb) = (a.iter().sum::<usize>(), b.iter().sum::<usize>());
            assert!(ga < gb || (ga == gb && a < b), "{a:?} !< {b:?}");
        }
    }

    #[test]
    fn rank_matches_position() {
        let set = BasisIndexSet::enumerate(3, 7).unwrap();
        for (r, k) in set.iter().enumerate() {
            assert_eq!(set.rank(k).unwrap(), r);
            assert_eq!(unrank(3, r), k);
            assert_eq!(set.grade_of_rank(r), k.iter().sum::<usize>());
        }
    }

    #[test]
    fn rank_is_independent_of_truncation() {
        let small = BasisIndexSet::enumerate(2, 3).unwrap();
        let large = BasisIndexSet::enumerate(2, 9).unwrap();
        for r in 0..small.len() {
            assert_eq!(small.get(r), large.get(r));
        }
    }

    proptest! {
        #[test]
        fn unrank_inverts_rank(k in proptest::collection::vec(0usize..12, 1..5)) {
            let d = k.len();
            prop_assert_eq!(unrank(d, rank_of(&k)), k);
        }
    }
}
