//! Sparse exact elimination for large, very sparse homogeneous systems.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use super::rational::Rational;

pub type SparseRow = Vec<(usize, Rational)>;

/// Echelon form built row by row, pivoting on the largest column index.
#[derive(Clone, Debug, Default)]
pub struct SparseEchelon {
    ncols: usize,
    pivots: BTreeMap<usize, SparseRow>,
}

fn axpy(a: &SparseRow, b: &SparseRow, k: &Rational) -> SparseRow {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
            out.push(a[i].clone());
            i += 1;
        } else if i == a.len() || b[j].0 < a[i].0 {
            out.push((b[j].0, &b[j].1 * k));
            j += 1;
        } else {
            let v = &a[i].1 + &b[j].1 * k;
            if !v.is_zero() {
                out.push((a[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

/// Sorts, merges duplicate columns and drops zeros.
pub fn normalize_row(mut row: SparseRow) -> SparseRow {
    row.sort_by_key(|t| t.0);
    let mut out: SparseRow = Vec::with_capacity(row.len());
    for (c, v) in row {
        match out.last_mut() {
            Some(last) if last.0 == c => last.1 += v,
            _ => out.push((c, v)),
        }
    }
    out.retain(|t| !t.1.is_zero());
    out
}

impl SparseEchelon {
    pub fn new(ncols: usize) -> Self {
        SparseEchelon {
            ncols,
            pivots: BTreeMap::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Inserts a row; returns true if it increased the rank.
    pub fn insert(&mut self, row: SparseRow) -> bool {
        let mut row = normalize_row(row);
        loop {
            let Some((lead, c)) = row.last().cloned() else {
                return false;
            };
            match self.pivots.get(&lead) {
                Some(p) => row = axpy(&row, p, &(-c)),
                None => {
                    let inv = c.recip();
                    for t in row.iter_mut() {
                        t.1 *= &inv;
                    }
                    self.pivots.insert(lead, row);
                    return true;
                }
            }
        }
    }

    /// Basis of the solution space of `row . x = 0` for all inserted rows,
    /// one vector per free column in increasing column order.
    pub fn nullspace(&self) -> Vec<Vec<Rational>> {
        // Full back substitution in increasing lead order.
        let mut reduced: BTreeMap<usize, SparseRow> = BTreeMap::new();
        for (&lead, row) in &self.pivots {
            let mut r = row.clone();
            loop {
                let target = r
                    .iter()
                    .rev()
                    .find(|(c, _)| *c != lead && reduced.contains_key(c))
                    .cloned();
                let Some((c, v)) = target else { break };
                r = axpy(&r, &reduced[&c], &(-v));
            }
            reduced.insert(lead, r);
        }
        let free: Vec<usize> = (0..self.ncols).filter(|c| !self.pivots.contains_key(c)).collect();
        let mut out = Vec::with_capacity(free.len());
        for &f in &free {
            let mut v = vec![Rational::zero(); self.ncols];
            v[f] = Rational::one();
            for (&lead, row) in &reduced {
                if let Ok(pos) = row.binary_search_by_key(&f, |t| t.0) {
                    v[lead] = -row[pos].1.clone();
                }
            }
            out.push(v);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::rational::int;

    #[test]
    fn small_nullspace() {
        let mut e = SparseEchelon::new(3);
        e.insert(vec![(0, int(1)), (1, int(1))]);
        e.insert(vec![(1, int(1)), (2, int(-1))]);
        e.insert(vec![(0, int(2)), (2, int(2))]);
        assert_eq!(e.rank(), 2);
        let ns = e.nullspace();
        assert_eq!(ns.len(), 1);
        let v = &ns[0];
        assert_eq!(&v[0] + &v[1], int(0));
        assert_eq!(&v[1] - &v[2], int(0));
    }
}
