use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};

use super::index::MultiIndex;
use super::rational::{int, Rational};
use crate::error::{structural, Error, Result};

/// Shared ordered variable list.
pub type Vars = Arc<Vec<String>>;

pub fn vars<S: AsRef<str>>(names: &[S]) -> Vars {
    Arc::new(names.iter().map(|s| s.as_ref().to_string()).collect())
}

pub(crate) fn same_vars(a: &Vars, b: &Vars) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// Multivariate power series with rational coefficients, known modulo
/// monomials of total degree greater than `order`.
///
/// `order == -1` means no coefficient is known (e.g. the derivative of a
/// series known only to degree 0).
#[derive(Clone, Debug)]
pub struct TruncSeries {
    vars: Vars,
    order: i32,
    terms: BTreeMap<MultiIndex, Rational>,
}

impl PartialEq for TruncSeries {
    fn eq(&self, other: &Self) -> bool {
        self.order == other.order && same_vars(&self.vars, &other.vars) && self.terms == other.terms
    }
}

impl Eq for TruncSeries {}

impl TruncSeries {
    pub fn zero(vars: &Vars, order: i32) -> Self {
        TruncSeries {
            vars: vars.clone(),
            order: order.max(-1),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(vars: &Vars, order: i32, c: Rational) -> Self {
        let mut s = Self::zero(vars, order);
        s.add_term(MultiIndex::zero(vars.len()), c);
        s
    }

    /// The coordinate function of variable `i`.
    pub fn var(vars: &Vars, order: i32, i: usize) -> Self {
        let mut s = Self::zero(vars, order);
        s.add_term(MultiIndex::unit(vars.len(), i), Rational::one());
        s
    }

    pub fn var_named(vars: &Vars, order: i32, name: &str) -> Result<Self> {
        let i = index_of(vars, name)?;
        Ok(Self::var(vars, order, i))
    }

    /// Builds a series from terms; terms above the bound are dropped.
    pub fn from_terms<I>(vars: &Vars, order: i32, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, Rational)>,
    {
        let mut s = Self::zero(vars, order);
        for (e, c) in terms {
            if e.len() != vars.len() {
                return structural(format!(
                    "exponent {e} has length {} but there are {} variables",
                    e.len(),
                    vars.len()
                ));
            }
            s.add_term(e, c);
        }
        Ok(s)
    }

    pub fn vars(&self) -> &Vars {
        &self.vars
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn order(&self) -> i32 {
        self.order
    }

    pub fn terms(&self) -> &BTreeMap<MultiIndex, Rational> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, e: &MultiIndex) -> Rational {
        self.terms.get(e).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn constant_term(&self) -> Rational {
        self.coeff(&MultiIndex::zero(self.nvars()))
    }

    /// Highest total degree among stored terms, `None` for zero.
    pub fn max_degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.total_degree()).max()
    }

    /// Adds `c` to the coefficient of `e`, honouring the bound and
    /// keeping the no-zero-coefficient invariant.
    pub fn add_term(&mut self, e: MultiIndex, c: Rational) {
        if c.is_zero() || e.total_degree() as i32 > self.order {
            return;
        }
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    fn check_vars(&self, other: &TruncSeries) -> Result<()> {
        if same_vars(&self.vars, &other.vars) {
            Ok(())
        } else {
            structural(format!("variable lists differ: {:?} vs {:?}", self.vars, other.vars))
        }
    }

    /// Lowers the bound to `n`, dropping higher terms. No-op if `n >= order`.
    pub fn truncate(&self, n: i32) -> Self {
        if n >= self.order {
            return self.clone();
        }
        let n = n.max(-1);
        TruncSeries {
            vars: self.vars.clone(),
            order: n,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| e.total_degree() as i32 <= n)
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    /// Declares the stored terms exact up to degree `n` (used for polynomial
    /// data, whose higher coefficients are genuinely zero).
    pub fn with_exact_order(&self, n: i32) -> Self {
        let mut s = self.truncate(n);
        s.order = n.max(-1);
        s
    }

    pub fn add(&self, other: &TruncSeries) -> Result<Self> {
        self.check_vars(other)?;
        let order = self.order.min(other.order);
        let mut out = self.truncate(order);
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &TruncSeries) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        TruncSeries {
            vars: self.vars.clone(),
            order: self.order,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }

    pub fn scale(&self, k: &Rational) -> Self {
        if k.is_zero() {
            return Self::zero(&self.vars, self.order);
        }
        TruncSeries {
            vars: self.vars.clone(),
            order: self.order,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c * k)).collect(),
        }
    }

    pub fn mul(&self, other: &TruncSeries) -> Result<Self> {
        self.check_vars(other)?;
        let order = self.order.min(other.order);
        let mut acc: BTreeMap<MultiIndex, Rational> = BTreeMap::new();
        let mut by_deg: Vec<(u32, &MultiIndex, &Rational)> =
            other.terms.iter().map(|(e, c)| (e.total_degree(), e, c)).collect();
        by_deg.sort_by_key(|t| t.0);
        for (ea, ca) in &self.terms {
            let da = ea.total_degree() as i32;
            if da > order {
                continue;
            }
            for (db, eb, cb) in &by_deg {
                if da + *db as i32 > order {
                    break;
                }
                let e = ea.add(eb);
                let p = ca * *cb;
                *acc.entry(e).or_insert_with(Rational::zero) += p;
            }
        }
        acc.retain(|_, c| !c.is_zero());
        Ok(TruncSeries {
            vars: self.vars.clone(),
            order,
            terms: acc,
        })
    }

    pub fn pow(&self, k: u32) -> Result<Self> {
        let mut acc = Self::constant(&self.vars, self.order, Rational::one());
        for _ in 0..k {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Multiplies by the coordinate `x_i`; the bound rises by one.
    pub fn mul_var(&self, i: usize) -> Self {
        TruncSeries {
            vars: self.vars.clone(),
            order: self.order + 1,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| {
                    let mut e = e.clone();
                    e.0[i] += 1;
                    (e, c.clone())
                })
                .collect(),
        }
    }

    /// Formal partial derivative by variable index; the bound drops by one.
    pub fn partial(&self, i: usize) -> Self {
        let mut out = Self::zero(&self.vars, self.order - 1);
        for (e, c) in &self.terms {
            let k = e.0[i];
            if k == 0 {
                continue;
            }
            let mut f = e.clone();
            f.0[i] -= 1;
            out.add_term(f, c * int(k as i64));
        }
        out
    }

    pub fn partial_named(&self, name: &str) -> Result<Self> {
        Ok(self.partial(index_of(&self.vars, name)?))
    }

    /// Sets the named variables to zero and removes them from the variable list.
    pub fn restrict_zero(&self, names: &[&str]) -> Result<Self> {
        let mut drop = vec![false; self.nvars()];
        for n in names {
            drop[index_of(&self.vars, n)?] = true;
        }
        let keep: Vec<usize> = (0..self.nvars()).filter(|&i| !drop[i]).collect();
        let new_vars: Vars = Arc::new(keep.iter().map(|&i| self.vars[i].clone()).collect());
        let mut out = Self::zero(&new_vars, self.order);
        for (e, c) in &self.terms {
            if (0..self.nvars()).any(|i| drop[i] && e.0[i] > 0) {
                continue;
            }
            out.add_term(MultiIndex(keep.iter().map(|&i| e.0[i]).collect()), c.clone());
        }
        Ok(out)
    }

    /// Restriction to zero onto a given target variable list (which must be
    /// a subsequence of this list), reusing the caller's shared `Vars`.
    pub fn restrict_to(&self, target: &Vars) -> Result<Self> {
        let pos = positions_in(target, &self.vars)?;
        let mut keep = vec![false; self.nvars()];
        for &p in &pos {
            keep[p] = true;
        }
        let mut out = Self::zero(target, self.order);
        for (e, c) in &self.terms {
            if (0..self.nvars()).any(|i| !keep[i] && e.0[i] > 0) {
                continue;
            }
            out.add_term(MultiIndex(pos.iter().map(|&p| e.0[p]).collect()), c.clone());
        }
        Ok(out)
    }

    /// Re-expresses the series over a larger variable list containing all
    /// current variables.
    pub fn embed(&self, target: &Vars) -> Result<Self> {
        let pos = positions_in(&self.vars, target)?;
        let mut out = Self::zero(target, self.order);
        for (e, c) in &self.terms {
            let mut f = vec![0u32; target.len()];
            for (k, &p) in pos.iter().enumerate() {
                f[p] = e.0[k];
            }
            out.add_term(MultiIndex(f), c.clone());
        }
        Ok(out)
    }

    /// Component of exact degree `k` in the variables at `positions`.
    pub fn partial_degree_part(&self, positions: &[usize], k: u32) -> Self {
        TruncSeries {
            vars: self.vars.clone(),
            order: self.order,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| e.partial_degree(positions) == k)
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    /// Keeps the terms whose exponent satisfies `keep`.
    pub fn filter_terms(&self, keep: impl Fn(&MultiIndex) -> bool) -> Self {
        TruncSeries {
            vars: self.vars.clone(),
            order: self.order,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| keep(e))
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    /// Component of total degree `k`.
    pub fn homogeneous_part(&self, k: u32) -> Self {
        TruncSeries {
            vars: self.vars.clone(),
            order: self.order,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| e.total_degree() == k)
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    /// Divides each term by its degree in the variables at `positions`;
    /// terms of degree zero there must be absent.
    pub fn divide_by_partial_degree(&self, positions: &[usize]) -> Result<Self> {
        let mut out = Self::zero(&self.vars, self.order);
        for (e, c) in &self.terms {
            let k = e.partial_degree(positions);
            if k == 0 {
                return Err(Error::Precondition(
                    "term of degree zero in integration variables".into(),
                ));
            }
            out.add_term(e.clone(), c / int(k as i64));
        }
        Ok(out)
    }

    /// Substitutes `subs[i]` for variable `i`. Each substitute must have
    /// zero constant term unless the series is a polynomial known exactly.
    pub fn compose(&self, subs: &[TruncSeries]) -> Result<Self> {
        if subs.len() != self.nvars() {
            return structural(format!(
                "compose needs {} substitutes, got {}",
                self.nvars(),
                subs.len()
            ));
        }
        let Some(first) = subs.first() else {
            return Ok(self.clone());
        };
        let target = first.vars.clone();
        let mut order = self.order;
        for s in subs {
            if !same_vars(&s.vars, &target) {
                return structural("compose substitutes use different variable lists");
            }
            if !s.constant_term().is_zero() {
                return Err(Error::Precondition(
                    "compose substitute has nonzero constant term".into(),
                ));
            }
            order = order.min(s.order);
        }
        // Powers of each substitute, computed lazily.
        let mut powers: Vec<Vec<TruncSeries>> = subs
            .iter()
            .map(|s| {
                vec![
                    TruncSeries::constant(&target, order, Rational::one()),
                    s.truncate(order),
                ]
            })
            .collect();
        let mut out = Self::zero(&target, order);
        for (e, c) in &self.terms {
            if e.total_degree() as i32 > order {
                continue;
            }
            let mut term = TruncSeries::constant(&target, order, c.clone());
            for (i, &k) in e.0.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                while powers[i].len() <= k as usize {
                    let next = powers[i].last().unwrap().mul(&powers[i][1])?;
                    powers[i].push(next);
                }
                term = term.mul(&powers[i][k as usize])?;
                if term.is_zero() {
                    break;
                }
            }
            out = out.add(&term)?;
        }
        Ok(out)
    }

    /// Multiplicative inverse of a series with nonzero constant term.
    pub fn inverse(&self) -> Result<Self> {
        let a0 = self.constant_term();
        if a0.is_zero() {
            return Err(Error::Singular("series has zero constant term".into()));
        }
        let inv0 = a0.recip();
        // 1/a = inv0 * sum_k (-(a - a0) * inv0)^k
        let mut rest = self.clone();
        rest.add_term(MultiIndex::zero(self.nvars()), -a0);
        let q = rest.scale(&-inv0.clone());
        let mut acc = Self::constant(&self.vars, self.order, Rational::one());
        let mut p = acc.clone();
        for _ in 0..self.order.max(0) {
            p = p.mul(&q)?;
            if p.is_zero() {
                break;
            }
            acc = acc.add(&p)?;
        }
        Ok(acc.scale(&inv0))
    }

    /// Evaluates at the origin, returning the constant term.
    pub fn eval_at_zero(&self) -> Rational {
        self.constant_term()
    }
}

impl fmt::Display for TruncSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0 + O({})", self.order + 1);
        }
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})")?;
            for (i, &k) in e.0.iter().enumerate() {
                match k {
                    0 => {}
                    1 => write!(f, "*{}", self.vars[i])?,
                    _ => write!(f, "*{}^{}", self.vars[i], k)?,
                }
            }
        }
        write!(f, " + O({})", self.order + 1)
    }
}

pub fn index_of(vars: &Vars, name: &str) -> Result<usize> {
    vars.iter()
        .position(|v| v == name)
        .ok_or_else(|| Error::Structural(format!("unknown variable {name:?}")))
}

/// Position in `outer` of each variable of `inner`.
pub fn positions_in(inner: &Vars, outer: &Vars) -> Result<Vec<usize>> {
    inner.iter().map(|v| index_of(outer, v)).collect()
}

/// Inverts a series map `x -> phi(x)` with `phi(0) = 0` and invertible
/// linear part. `phi[i]` is a series in the source variables; the result is
/// expressed in `target` variables (same count).
pub fn invert_series_map(phi: &[TruncSeries], target: &Vars) -> Result<Vec<TruncSeries>> {
    use super::linalg::QMat;
    let n = phi.len();
    if target.len() != n {
        return structural("series map inversion needs a square map");
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let order = phi.iter().map(|p| p.order).min().unwrap();
    let mut lin = QMat::zeros(n, n);
    for (i, p) in phi.iter().enumerate() {
        if p.nvars() != n {
            return structural("series map inversion needs a square map");
        }
        if !p.constant_term().is_zero() {
            return Err(Error::Precondition("series map does not fix the origin".into()));
        }
        for j in 0..n {
            lin.set(i, j, p.coeff(&MultiIndex::unit(n, j)));
        }
    }
    let linv = lin
        .inverse()
        .ok_or_else(|| Error::Singular("series map has singular linear part".into()))?;
    // Fixed point x = L^{-1}(y - nonlinear(x)), one degree gained per pass.
    let ys: Vec<TruncSeries> = (0..n).map(|i| TruncSeries::var(target, order, i)).collect();
    let nonlinear: Vec<TruncSeries> = phi
        .iter()
        .map(|p| {
            let mut q = p.clone();
            for j in 0..n {
                q.terms.remove(&MultiIndex::unit(n, j));
            }
            q
        })
        .collect();
    let apply_linv = |v: &[TruncSeries]| -> Result<Vec<TruncSeries>> {
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = TruncSeries::zero(target, order);
            for j in 0..n {
                let c = linv.get(i, j);
                if !c.is_zero() {
                    acc = acc.add(&v[j].scale(c))?;
                }
            }
            out.push(acc);
        }
        Ok(out)
    };
    let mut x = apply_linv(&ys)?;
    for _ in 1..order.max(1) {
        let mut rhs = Vec::with_capacity(n);
        for i in 0..n {
            rhs.push(ys[i].sub(&nonlinear[i].compose(&x)?)?);
        }
        x = apply_linv(&rhs)?;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::rational::rat;

    fn tv() -> Vars {
        vars(&["t", "y"])
    }

    fn poly(v: &Vars, n: i32, terms: &[(&[u32], i64)]) -> TruncSeries {
        TruncSeries::from_terms(v, n, terms.iter().map(|(e, c)| (MultiIndex(e.to_vec()), int(*c)))).unwrap()
    }

    #[test]
    fn product_examples() {
        let v = vars(&["t"]);
        let a = poly(&v, 2, &[(&[0], 1), (&[1], 1)]);
        let b = poly(&v, 2, &[(&[0], 1), (&[1], -1)]);
        assert_eq!(a.mul(&b).unwrap(), poly(&v, 2, &[(&[0], 1), (&[2], -1)]));

        let t = poly(&v, 1, &[(&[1], 1)]);
        assert!(t.mul(&t).unwrap().is_zero());

        let c = poly(&v, 2, &[(&[0], 1), (&[1], 1), (&[2], 1)]);
        assert_eq!(c.mul(&a).unwrap(), poly(&v, 2, &[(&[0], 1), (&[1], 2), (&[2], 2)]));
    }

    #[test]
    fn mismatched_vars_rejected() {
        let a = TruncSeries::zero(&vars(&["t"]), 2);
        let b = TruncSeries::zero(&vars(&["y"]), 2);
        assert!(matches!(a.mul(&b), Err(Error::Structural(_))));
    }

    #[test]
    fn partial_examples() {
        let v = tv();
        let a = poly(&v, 2, &[(&[2, 0], 1)]);
        let d = a.partial_named("t").unwrap();
        assert_eq!(d, poly(&v, 1, &[(&[1, 0], 2)]));
        assert_eq!(d.order(), 1);

        let t = poly(&v, 2, &[(&[1, 0], 1)]);
        assert!(t.partial_named("y").unwrap().is_zero());

        let b = poly(&v, 2, &[(&[1, 1], 1), (&[2, 0], 1)]);
        assert_eq!(
            b.partial_named("t").unwrap(),
            poly(&v, 1, &[(&[0, 1], 1), (&[1, 0], 2)])
        );
        assert!(a.partial_named("z").is_err());
    }

    #[test]
    fn restrict_examples() {
        let v = tv();
        let a = poly(&v, 2, &[(&[0, 0], 1), (&[1, 0], 1), (&[0, 1], 1), (&[1, 1], 1)]);
        let r = a.restrict_zero(&["y"]).unwrap();
        assert_eq!(r, poly(&vars(&["t"]), 2, &[(&[0], 1), (&[1], 1)]));

        assert!(poly(&v, 2, &[(&[0, 2], 1)]).restrict_zero(&["y"]).unwrap().is_zero());

        let b = poly(&v, 2, &[(&[0, 0], 3), (&[1, 1], 2), (&[0, 1], 5)]);
        assert_eq!(b.restrict_zero(&["y"]).unwrap(), poly(&vars(&["t"]), 2, &[(&[0], 3)]));
    }

    #[test]
    fn inverse_of_unit() {
        let v = vars(&["t"]);
        let a = poly(&v, 5, &[(&[0], 1), (&[1], 1)]);
        let inv = a.inverse().unwrap();
        let expect = poly(
            &v,
            5,
            &[(&[0], 1), (&[1], -1), (&[2], 1), (&[3], -1), (&[4], 1), (&[5], -1)],
        );
        assert_eq!(inv, expect);
        assert_eq!(a.mul(&inv).unwrap(), TruncSeries::constant(&v, 5, int(1)));
    }

    #[test]
    fn compose_and_invert_map() {
        let v = tv();
        // phi(t, y) = (t + y^2, y + t*y)
        let phi = vec![
            poly(&v, 4, &[(&[1, 0], 1), (&[0, 2], 1)]),
            poly(&v, 4, &[(&[0, 1], 1), (&[1, 1], 1)]),
        ];
        let w = vars(&["a", "b"]);
        let psi = invert_series_map(&phi, &w).unwrap();
        let back: Vec<_> = phi.iter().map(|p| p.compose(&psi).unwrap()).collect();
        assert_eq!(back[0], TruncSeries::var(&w, 4, 0));
        assert_eq!(back[1], TruncSeries::var(&w, 4, 1));
    }

    #[test]
    fn embed_then_restrict_is_identity() {
        let small = vars(&["t"]);
        let big = tv();
        let a = TruncSeries::from_terms(
            &small,
            3,
            vec![(MultiIndex(vec![0]), rat(1, 2)), (MultiIndex(vec![3]), rat(-7, 3))],
        )
        .unwrap();
        let e = a.embed(&big).unwrap();
        assert_eq!(e.restrict_to(&small).unwrap(), a);
    }
}
