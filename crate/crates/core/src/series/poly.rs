use std::collections::BTreeMap;

use num_traits::Zero;

use super::index::MultiIndex;
use super::rational::{int, Rational};
use crate::error::{structural, Result};

/// Exact multivariate polynomial without truncation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<MultiIndex, Rational>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn monomial(e: MultiIndex, c: Rational) -> Self {
        let mut p = Poly::zero(e.len());
        p.add_term(e, c);
        p
    }

    pub fn from_terms<I>(nvars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, Rational)>,
    {
        let mut p = Poly::zero(nvars);
        for (e, c) in terms {
            if e.len() != nvars {
                return structural(format!("exponent {e} does not have {nvars} entries"));
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &BTreeMap<MultiIndex, Rational> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, e: MultiIndex, c: Rational) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(e).or_insert_with(Rational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &o.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, k: &Rational) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c * k);
        }
        out
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &o.terms {
                out.add_term(ea.add(eb), ca * cb);
            }
        }
        out
    }

    pub fn mul_monomial(&self, m: &MultiIndex) -> Poly {
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.add(m), c.clone())).collect(),
        }
    }

    pub fn partial(&self, i: usize) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            if e.0[i] == 0 {
                continue;
            }
            let mut f = e.clone();
            f.0[i] -= 1;
            out.add_term(f, c * int(e.0[i] as i64));
        }
        out
    }

    /// The common weighted degree of all terms, or `None` if the polynomial
    /// is zero or not weighted homogeneous.
    pub fn weighted_degree(&self, weights: &[i64]) -> Option<i64> {
        let mut it = self.terms.keys().map(|e| e.weighted_degree(weights));
        let d = it.next()?;
        it.all(|x| x == d).then_some(d)
    }
}
