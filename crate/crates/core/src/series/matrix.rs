use std::fmt;

use num_traits::{One, Zero};

use super::index::MultiIndex;
use super::linalg::QMat;
use super::rational::Rational;
use super::trunc::{same_vars, TruncSeries, Vars};
use crate::error::{structural, Result};

/// Rectangular matrix of truncated series over one variable list and one
/// order bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeriesMatrix {
    rows: usize,
    cols: usize,
    vars: Vars,
    order: i32,
    entries: Vec<TruncSeries>,
}

impl SeriesMatrix {
    pub fn zeros(vars: &Vars, order: i32, rows: usize, cols: usize) -> Self {
        SeriesMatrix {
            rows,
            cols,
            vars: vars.clone(),
            order: order.max(-1),
            entries: vec![TruncSeries::zero(vars, order); rows * cols],
        }
    }

    pub fn identity(vars: &Vars, order: i32, n: usize) -> Self {
        Self::from_qmat(vars, order, &QMat::identity(n))
    }

    pub fn from_qmat(vars: &Vars, order: i32, m: &QMat) -> Self {
        let mut out = Self::zeros(vars, order, m.rows(), m.cols());
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                if !m.get(i, j).is_zero() {
                    out.entries[i * m.cols() + j] = TruncSeries::constant(vars, order, m.get(i, j).clone());
                }
            }
        }
        out
    }

    /// Builds from row-major entries; all entries are truncated to the
    /// smallest bound present.
    pub fn from_entries(rows: usize, cols: usize, entries: Vec<TruncSeries>) -> Result<Self> {
        if entries.len() != rows * cols || entries.is_empty() {
            return structural(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                entries.len()
            ));
        }
        let vars = entries[0].vars().clone();
        let mut order = i32::MAX;
        for e in &entries {
            if !same_vars(e.vars(), &vars) {
                return structural("matrix entries use different variable lists");
            }
            order = order.min(e.order());
        }
        let entries = entries.into_iter().map(|e| e.truncate(order)).collect();
        Ok(SeriesMatrix {
            rows,
            cols,
            vars,
            order,
            entries,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn vars(&self) -> &Vars {
        &self.vars
    }

    pub fn order(&self) -> i32 {
        self.order
    }

    pub fn entries(&self) -> &[TruncSeries] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> &TruncSeries {
        &self.entries[i * self.cols + j]
    }

    /// Replaces an entry; the entry is truncated to the matrix bound.
    pub fn set(&mut self, i: usize, j: usize, v: TruncSeries) -> Result<()> {
        if !same_vars(v.vars(), &self.vars) {
            return structural("entry uses a different variable list");
        }
        self.entries[i * self.cols + j] = v.truncate(self.order);
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    fn map(&self, f: impl Fn(&TruncSeries) -> TruncSeries) -> Self {
        let entries: Vec<TruncSeries> = self.entries.iter().map(f).collect();
        let order = entries.iter().map(|e| e.order()).min().unwrap_or(self.order);
        let vars = entries.first().map_or(self.vars.clone(), |e| e.vars().clone());
        SeriesMatrix {
            rows: self.rows,
            cols: self.cols,
            vars,
            order,
            entries,
        }
    }

    fn check_same_shape(&self, o: &SeriesMatrix) -> Result<()> {
        if (self.rows, self.cols) != (o.rows, o.cols) {
            return structural(format!(
                "shape mismatch: {}x{} vs {}x{}",
                self.rows, self.cols, o.rows, o.cols
            ));
        }
        if !same_vars(&self.vars, &o.vars) {
            return structural("matrices use different variable lists");
        }
        Ok(())
    }

    pub fn add(&self, o: &SeriesMatrix) -> Result<Self> {
        self.check_same_shape(o)?;
        let entries = self
            .entries
            .iter()
            .zip(&o.entries)
            .map(|(a, b)| a.add(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(SeriesMatrix {
            rows: self.rows,
            cols: self.cols,
            vars: self.vars.clone(),
            order: self.order.min(o.order),
            entries,
        })
    }

    pub fn sub(&self, o: &SeriesMatrix) -> Result<Self> {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        self.map(|e| e.neg())
    }

    pub fn scale(&self, k: &Rational) -> Self {
        self.map(|e| e.scale(k))
    }

    pub fn scale_series(&self, s: &TruncSeries) -> Result<Self> {
        let entries = self.entries.iter().map(|e| e.mul(s)).collect::<Result<Vec<_>>>()?;
        Self::from_entries(self.rows, self.cols, entries)
    }

    pub fn mul(&self, o: &SeriesMatrix) -> Result<Self> {
        if self.cols != o.rows {
            return structural(format!(
                "product shape mismatch: {}x{} * {}x{}",
                self.rows, self.cols, o.rows, o.cols
            ));
        }
        if !same_vars(&self.vars, &o.vars) {
            return structural("matrices use different variable lists");
        }
        let order = self.order.min(o.order);
        let mut out = Self::zeros(&self.vars, order, self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let b = o.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let idx = i * o.cols + j;
                    out.entries[idx] = out.entries[idx].add(&a.mul(b)?)?;
                }
            }
        }
        Ok(out)
    }

    /// `self * o - o * self`.
    pub fn commutator(&self, o: &SeriesMatrix) -> Result<Self> {
        self.mul(o)?.sub(&o.mul(self)?)
    }

    pub fn transpose(&self) -> Self {
        let mut entries = Vec::with_capacity(self.entries.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                entries.push(self.get(i, j).clone());
            }
        }
        SeriesMatrix {
            rows: self.cols,
            cols: self.rows,
            vars: self.vars.clone(),
            order: self.order,
            entries,
        }
    }

    pub fn eval_at_zero(&self) -> QMat {
        let mut m = QMat::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m.set(i, j, self.get(i, j).constant_term());
            }
        }
        m
    }

    pub fn partial(&self, i: usize) -> Self {
        self.map(|e| e.partial(i))
    }

    pub fn truncate(&self, n: i32) -> Self {
        self.map(|e| e.truncate(n))
    }

    pub fn with_exact_order(&self, n: i32) -> Self {
        let mut m = self.map(|e| e.with_exact_order(n));
        m.order = n.max(-1);
        m
    }

    pub fn restrict_to(&self, target: &Vars) -> Result<Self> {
        let entries = self
            .entries
            .iter()
            .map(|e| e.restrict_to(target))
            .collect::<Result<Vec<_>>>()?;
        Self::from_entries(self.rows, self.cols, entries)
    }

    pub fn restrict_zero(&self, names: &[&str]) -> Result<Self> {
        let entries = self
            .entries
            .iter()
            .map(|e| e.restrict_zero(names))
            .collect::<Result<Vec<_>>>()?;
        let mut m = Self::from_entries(self.rows, self.cols, entries)?;
        // Share one variable list across all entries.
        let v = m.vars.clone();
        for e in &mut m.entries {
            *e = e.restrict_to(&v)?;
        }
        Ok(m)
    }

    pub fn embed(&self, target: &Vars) -> Result<Self> {
        let entries = self
            .entries
            .iter()
            .map(|e| e.embed(target))
            .collect::<Result<Vec<_>>>()?;
        Self::from_entries(self.rows, self.cols, entries)
    }

    pub fn partial_degree_part(&self, positions: &[usize], k: u32) -> Self {
        self.map(|e| e.partial_degree_part(positions, k))
    }

    pub fn filter_terms(&self, keep: impl Fn(&MultiIndex) -> bool) -> Self {
        self.map(|e| e.filter_terms(&keep))
    }

    /// Drops terms of degree above `k` in the variables at `positions`.
    pub fn truncate_in(&self, positions: &[usize], k: u32) -> Self {
        self.filter_terms(|e| e.partial_degree(positions) <= k)
    }

    pub fn homogeneous_part(&self, k: u32) -> Self {
        self.map(|e| e.homogeneous_part(k))
    }

    pub fn mul_var(&self, i: usize) -> Self {
        self.map(|e| e.mul_var(i))
    }

    pub fn divide_by_partial_degree(&self, positions: &[usize]) -> Result<Self> {
        let entries = self
            .entries
            .iter()
            .map(|e| e.divide_by_partial_degree(positions))
            .collect::<Result<Vec<_>>>()?;
        Self::from_entries(self.rows, self.cols, entries)
    }

    pub fn compose(&self, subs: &[TruncSeries]) -> Result<Self> {
        let entries = self
            .entries
            .iter()
            .map(|e| e.compose(subs))
            .collect::<Result<Vec<_>>>()?;
        Self::from_entries(self.rows, self.cols, entries)
    }

    /// Column `j` as a vector of series.
    pub fn col(&self, j: usize) -> Vec<TruncSeries> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn mul_vec(&self, v: &[TruncSeries]) -> Result<Vec<TruncSeries>> {
        if v.len() != self.cols {
            return structural("vector length does not match matrix");
        }
        let mut out = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let mut acc = TruncSeries::zero(&self.vars, self.order);
            for (j, x) in v.iter().enumerate() {
                let a = self.get(i, j);
                if a.is_zero() || x.is_zero() {
                    continue;
                }
                acc = acc.add(&a.mul(x)?)?;
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// Inverse of a square matrix whose constant part is invertible.
    pub fn inverse(&self) -> Result<Self> {
        let m0 = self.eval_at_zero();
        let inv0 = m0
            .inverse()
            .ok_or_else(|| crate::Error::Singular("matrix is not invertible at the origin".into()))?;
        let inv0s = Self::from_qmat(&self.vars, self.order, &inv0);
        // M = M0 (I + N), N = M0^{-1}(M - M0); M^{-1} = sum (-N)^k M0^{-1}
        let nmat = inv0s.mul(&self.sub(&Self::from_qmat(&self.vars, self.order, &m0))?)?;
        let neg_n = nmat.neg();
        let mut acc = Self::identity(&self.vars, self.order, self.rows);
        let mut p = acc.clone();
        for _ in 0..self.order.max(0) {
            p = p.mul(&neg_n)?;
            if p.is_zero() {
                break;
            }
            acc = acc.add(&p)?;
        }
        acc.mul(&inv0s)
    }

    /// The coefficient matrix of a monomial.
    pub fn coeff_matrix(&self, e: &MultiIndex) -> QMat {
        let mut m = QMat::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m.set(i, j, self.get(i, j).coeff(e));
            }
        }
        m
    }

    /// All monomials carrying a nonzero coefficient in some entry.
    pub fn support(&self) -> Vec<MultiIndex> {
        let mut s: Vec<MultiIndex> = self.entries.iter().flat_map(|e| e.terms().keys().cloned()).collect();
        s.sort();
        s.dedup();
        s
    }

    pub fn is_constant(&self) -> bool {
        let z = MultiIndex::zero(self.vars.len());
        self.entries.iter().all(|e| e.terms().keys().all(|k| *k == z))
    }

    pub fn trace(&self) -> Result<TruncSeries> {
        let mut acc = TruncSeries::zero(&self.vars, self.order);
        for i in 0..self.rows.min(self.cols) {
            acc = acc.add(self.get(i, i))?;
        }
        Ok(acc)
    }

    /// Unit matrix `E_{ij}` scaled by one, as a constant series matrix.
    pub fn elementary(vars: &Vars, order: i32, n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(vars, order, n, n);
        m.entries[i * n + j] = TruncSeries::constant(vars, order, Rational::one());
        m
    }
}

impl fmt::Display for SeriesMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            write!(f, "[")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, " | ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::trunc::vars;

    #[test]
    fn commutator_examples() {
        let v = vars(&["t"]);
        let a = SeriesMatrix::from_qmat(&v, 2, &QMat::from_i64(&[&[1, 2], &[3, 4]]));
        assert!(a.commutator(&a).unwrap().is_zero());
        let d = SeriesMatrix::from_qmat(&v, 2, &QMat::from_i64(&[&[0, 0], &[0, 1]]));
        let u = SeriesMatrix::from_qmat(&v, 2, &QMat::from_i64(&[&[0, 0], &[1, 1]]));
        assert_eq!(
            d.commutator(&u).unwrap().eval_at_zero(),
            QMat::from_i64(&[&[0, 0], &[1, 0]])
        );
        assert_eq!(a.transpose().transpose(), a);
    }

    #[test]
    fn series_inverse() {
        let v = vars(&["t"]);
        let mut m = SeriesMatrix::identity(&v, 4, 2);
        m.set(1, 0, TruncSeries::var(&v, 4, 0)).unwrap();
        m.set(
            0,
            0,
            TruncSeries::var(&v, 4, 0)
                .add(&TruncSeries::constant(&v, 4, Rational::one()))
                .unwrap(),
        )
        .unwrap();
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv).unwrap(), SeriesMatrix::identity(&v, 4, 2));
    }
}
