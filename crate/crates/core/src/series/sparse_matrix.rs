//! Matrices of truncated series stored by nonzero entry, for checks over
//! many large and mostly empty matrices.

use std::collections::BTreeMap;

use super::matrix::SeriesMatrix;
use super::trunc::{TruncSeries, Vars};
use crate::error::{structural, Result};

#[derive(Clone, Debug)]
pub struct SparseSeriesMatrix {
    rows: usize,
    cols: usize,
    vars: Vars,
    order: i32,
    entries: BTreeMap<(usize, usize), TruncSeries>,
}

impl SparseSeriesMatrix {
    pub fn from_dense(m: &SeriesMatrix) -> Self {
        let mut entries = BTreeMap::new();
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                let e = m.get(i, j);
                if !e.is_zero() {
                    entries.insert((i, j), e.clone());
                }
            }
        }
        SparseSeriesMatrix {
            rows: m.rows(),
            cols: m.cols(),
            vars: m.vars().clone(),
            order: m.order(),
            entries,
        }
    }

    pub fn to_dense(&self) -> Result<SeriesMatrix> {
        let mut m = SeriesMatrix::zeros(&self.vars, self.order, self.rows, self.cols);
        for ((i, j), e) in &self.entries {
            m.set(*i, *j, e.clone())?;
        }
        Ok(m)
    }

    pub fn order(&self) -> i32 {
        self.order
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    fn with(&self, order: i32, entries: BTreeMap<(usize, usize), TruncSeries>) -> Self {
        SparseSeriesMatrix {
            rows: self.rows,
            cols: self.cols,
            vars: self.vars.clone(),
            order,
            entries,
        }
    }

    fn clean(
        order: i32,
        entries: impl IntoIterator<Item = ((usize, usize), TruncSeries)>,
    ) -> BTreeMap<(usize, usize), TruncSeries> {
        entries
            .into_iter()
            .map(|(k, e)| (k, e.truncate(order)))
            .filter(|(_, e)| !e.is_zero())
            .collect()
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        if (self.rows, self.cols) != (o.rows, o.cols) {
            return structural("shape mismatch");
        }
        let order = self.order.min(o.order);
        let mut acc = self.entries.clone();
        for (k, e) in &o.entries {
            let v = match acc.remove(k) {
                Some(a) => a.add(e)?,
                None => e.clone(),
            };
            acc.insert(*k, v);
        }
        Ok(self.with(order, Self::clean(order, acc)))
    }

    pub fn neg(&self) -> Self {
        self.with(self.order, self.entries.iter().map(|(k, e)| (*k, e.neg())).collect())
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Result<Self> {
        if self.cols != o.rows {
            return structural("product shape mismatch");
        }
        let order = self.order.min(o.order);
        let mut by_row: Vec<Vec<(usize, &TruncSeries)>> = vec![Vec::new(); o.rows];
        for ((k, j), e) in &o.entries {
            by_row[*k].push((*j, e));
        }
        let mut acc: BTreeMap<(usize, usize), TruncSeries> = BTreeMap::new();
        for ((i, k), a) in &self.entries {
            for (j, b) in &by_row[*k] {
                let p = a.mul(b)?;
                let v = match acc.remove(&(*i, *j)) {
                    Some(x) => x.add(&p)?,
                    None => p,
                };
                acc.insert((*i, *j), v);
            }
        }
        Ok(SparseSeriesMatrix {
            rows: self.rows,
            cols: o.cols,
            vars: self.vars.clone(),
            order,
            entries: Self::clean(order, acc),
        })
    }

    pub fn commutator(&self, o: &Self) -> Result<Self> {
        self.mul(o)?.sub(&o.mul(self)?)
    }

    pub fn transpose(&self) -> Self {
        SparseSeriesMatrix {
            rows: self.cols,
            cols: self.rows,
            vars: self.vars.clone(),
            order: self.order,
            entries: self.entries.iter().map(|((i, j), e)| ((*j, *i), e.clone())).collect(),
        }
    }

    pub fn partial(&self, v: usize) -> Self {
        let order = (self.order - 1).max(-1);
        self.with(
            order,
            Self::clean(order, self.entries.iter().map(|(k, e)| (*k, e.partial(v)))),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{int, vars, QMat};

    #[test]
    fn agrees_with_dense() {
        let tv = vars(&["t"]);
        let t = TruncSeries::var(&tv, 3, 0);
        let mut a = SeriesMatrix::from_qmat(&tv, 3, &QMat::from_i64(&[&[0, 1], &[2, 0]]));
        a.set(0, 0, t.clone()).unwrap();
        let b = SeriesMatrix::from_qmat(&tv, 3, &QMat::from_i64(&[&[1, 0], &[3, 4]]))
            .add(
                &SeriesMatrix::identity(&tv, 3, 2)
                    .scale_series(&t.scale(&int(2)))
                    .unwrap(),
            )
            .unwrap();
        let (sa, sb) = (SparseSeriesMatrix::from_dense(&a), SparseSeriesMatrix::from_dense(&b));
        assert_eq!(
            sa.commutator(&sb).unwrap().to_dense().unwrap(),
            a.commutator(&b).unwrap()
        );
        assert_eq!(sa.partial(0).to_dense().unwrap(), a.partial(0));
        assert_eq!(
            sa.transpose().mul(&sb).unwrap().to_dense().unwrap(),
            a.transpose().mul(&b).unwrap()
        );
    }
}
