use std::fmt;

/// Exponent vector of a monomial, one entry per ambient variable.
///
/// Ordering is lexicographic on the exponent vector, which is also the
/// canonical serialization order.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(nvars: usize) -> Self {
        MultiIndex(vec![0; nvars])
    }

    pub fn unit(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        MultiIndex(e)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.len(), other.len());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self - other` if every entry stays non-negative.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        let mut out = Vec::with_capacity(self.len());
        for (a, b) in self.0.iter().zip(&other.0) {
            out.push(a.checked_sub(*b)?);
        }
        Some(MultiIndex(out))
    }

    pub fn divides(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// Sum of the exponents at the given positions.
    pub fn partial_degree(&self, positions: &[usize]) -> u32 {
        positions.iter().map(|&p| self.0[p]).sum()
    }

    /// Weighted degree with integer weights.
    pub fn weighted_degree(&self, weights: &[i64]) -> i64 {
        self.0.iter().zip(weights).map(|(&e, &w)| e as i64 * w).sum()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// All exponent vectors in `nvars` variables of total degree exactly `d`,
/// in ascending lexicographic order.
pub fn monomials_of_degree(nvars: usize, d: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; nvars];
    fn rec(i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        let n = cur.len();
        if n == 0 {
            if left == 0 {
                out.push(MultiIndex(Vec::new()));
            }
            return;
        }
        if i == n - 1 {
            cur[i] = left;
            out.push(MultiIndex(cur.clone()));
            return;
        }
        for e in 0..=left {
            cur[i] = e;
            rec(i + 1, left - e, cur, out);
        }
        cur[i] = 0;
    }
    rec(0, d, &mut cur, &mut out);
    out.sort();
    out
}

/// All exponent vectors with `sum_i e_i * weights[i] == target`, ascending
/// lexicographic order. Weights must be positive.
pub fn monomials_of_weighted_degree(weights: &[i64], target: i64) -> Vec<MultiIndex> {
    let n = weights.len();
    let mut out = Vec::new();
    let mut cur = vec![0u32; n];
    fn rec(i: usize, left: i64, w: &[i64], cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if i == w.len() {
            if left == 0 {
                out.push(MultiIndex(cur.clone()));
            }
            return;
        }
        let mut e = 0u32;
        while e as i64 * w[i] <= left {
            cur[i] = e;
            rec(i + 1, left - e as i64 * w[i], w, cur, out);
            e += 1;
        }
        cur[i] = 0;
    }
    if target >= 0 {
        rec(0, target, weights, &mut cur, &mut out);
    }
    let _ = n;
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_counts() {
        assert_eq!(monomials_of_degree(3, 2).len(), 6);
        assert_eq!(monomials_of_degree(5, 5).len(), 126);
        assert_eq!(monomials_of_degree(0, 0).len(), 1);
        assert!(monomials_of_degree(0, 1).is_empty());
    }

    #[test]
    fn weighted_monomials_sorted() {
        let m = monomials_of_weighted_degree(&[1, 2], 4);
        let exps: Vec<_> = m.iter().map(|e| e.0.clone()).collect();
        assert_eq!(exps, vec![vec![0, 2], vec![2, 1], vec![4, 0]]);
    }
}
