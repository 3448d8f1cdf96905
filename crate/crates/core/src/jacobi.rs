//! Graded Jacobi algebras of weighted homogeneous polynomials.
//!
//! Every graded piece of the Jacobian ideal is computed by sparse exact
//! elimination over the monomials of that degree, pivoting on the
//! lexicographically largest monomial of each row. The quotient basis of a
//! degree is the set of monomials that are not leading monomials of the
//! reduced ideal piece, i.e. the lexicographically first monomials
//! independent of the ideal.
//!
//! Degrees are stored as integers `k = q * D` where `D` is the common
//! denominator of the weights.

use std::collections::{BTreeMap, HashMap, HashSet};

use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{
    format_rat, monomials_of_weighted_degree, parse_rat, rat, MultiIndex, Poly, QMat, Rational, SeriesMatrix,
    TruncSeries, Vars,
};

/// Positive rational weights `0 < w_i <= 1/2`, one per variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightSystem {
    weights: Vec<Rational>,
    denom: i64,
    int_weights: Vec<i64>,
}

impl WeightSystem {
    pub fn new(weights: Vec<Rational>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Precondition("weight system needs a variable".into()));
        }
        let half = rat(1, 2);
        for w in &weights {
            if !w.is_positive() || *w > half {
                return Err(Error::Precondition(format!(
                    "weight {} outside (0, 1/2]",
                    format_rat(w)
                )));
            }
        }
        let mut denom: i64 = 1;
        for w in &weights {
            let d: i64 = w
                .denom()
                .try_into()
                .map_err(|_| Error::Precondition("weight denominator too large".into()))?;
            denom = denom.lcm(&d);
        }
        let int_weights = weights
            .iter()
            .map(|w| {
                let k = w * Rational::from_integer(denom.into());
                i64::try_from(k.to_integer()).unwrap()
            })
            .collect();
        Ok(WeightSystem {
            weights,
            denom,
            int_weights,
        })
    }

    /// All weights `1/d` for `nvars` variables.
    pub fn homogeneous(nvars: usize, d: i64) -> Result<Self> {
        Self::new(vec![rat(1, d); nvars])
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn nvars(&self) -> usize {
        self.weights.len()
    }

    /// Integer degree of weighted degree one.
    pub fn unit(&self) -> i64 {
        self.denom
    }

    pub fn int_weights(&self) -> &[i64] {
        &self.int_weights
    }

    /// The rational degree `k / D`.
    pub fn degree(&self, k: i64) -> Rational {
        rat(k, self.denom)
    }

    /// True when all weights are equal, i.e. `f` is homogeneous of degree `d`.
    pub fn straight_degree(&self) -> Option<i64> {
        let w0 = &self.weights[0];
        if self.weights.iter().all(|w| w == w0) && w0.numer().is_one() {
            i64::try_from(w0.denom()).ok()
        } else {
            None
        }
    }

    /// Integer degree of the socle: `sum (1 - 2 w_i)` times `D`.
    pub fn socle_degree(&self) -> i64 {
        self.int_weights.iter().map(|w| self.denom - 2 * w).sum()
    }
}

/// Identifies a generator `g * df/dx_i` of the Jacobian ideal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SourceRow {
    pub partial: usize,
    pub multiplier: MultiIndex,
}

type SparseRow = Vec<(usize, Rational)>;

#[derive(Clone, Debug)]
struct Pivot {
    row: SparseRow,
    source: SourceRow,
}

/// One graded piece of `C[x]` together with the reduced ideal piece.
#[derive(Clone, Debug)]
pub struct GradedPiece {
    degree: i64,
    monomials: Vec<MultiIndex>,
    index: HashMap<MultiIndex, usize>,
    pivots: HashMap<usize, Pivot>,
    basis: Vec<usize>,
    basis_pos: HashMap<usize, usize>,
}

impl GradedPiece {
    pub fn degree(&self) -> i64 {
        self.degree
    }

    pub fn monomial_count(&self) -> usize {
        self.monomials.len()
    }

    pub fn ideal_dim(&self) -> usize {
        self.pivots.len()
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis_monomials(&self) -> Vec<MultiIndex> {
        self.basis.iter().map(|&c| self.monomials[c].clone()).collect()
    }

    /// Generators whose reductions became pivots; they span the ideal piece.
    pub fn pivot_sources(&self) -> Vec<(MultiIndex, SourceRow)> {
        let mut v: Vec<_> = self
            .pivots
            .iter()
            .map(|(c, p)| (self.monomials[*c].clone(), p.source.clone()))
            .collect();
        v.sort();
        v
    }

    /// Reduced echelon rows of the ideal piece as polynomials.
    pub fn ideal_rows(&self, nvars: usize) -> Vec<Poly> {
        let mut cols: Vec<usize> = self.pivots.keys().copied().collect();
        cols.sort_unstable();
        cols.iter()
            .map(|c| {
                let mut p = Poly::zero(nvars);
                for (j, v) in &self.pivots[c].row {
                    p.add_term(self.monomials[*j].clone(), v.clone());
                }
                p
            })
            .collect()
    }

    fn build(f_partials: &[Poly], ws: &WeightSystem, k: i64) -> GradedPiece {
        let w = ws.int_weights();
        let monomials = monomials_of_weighted_degree(w, k);
        let index: HashMap<MultiIndex, usize> = monomials.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        let mut pivots: HashMap<usize, Pivot> = HashMap::new();
        for (i, fi) in f_partials.iter().enumerate() {
            let Some(di) = fi.weighted_degree(w) else {
                continue;
            };
            for g in monomials_of_weighted_degree(w, k - di) {
                let mut row: SparseRow = fi.terms().iter().map(|(e, c)| (index[&e.add(&g)], c.clone())).collect();
                row.sort_by_key(|t| t.0);
                reduce_against(&mut row, &pivots);
                if let Some((lead, c)) = row.last().cloned() {
                    let inv = c.recip();
                    for t in row.iter_mut() {
                        t.1 *= &inv;
                    }
                    pivots.insert(
                        lead,
                        Pivot {
                            row,
                            source: SourceRow {
                                partial: i,
                                multiplier: g.clone(),
                            },
                        },
                    );
                }
            }
        }
        let basis: Vec<usize> = (0..monomials.len()).filter(|c| !pivots.contains_key(c)).collect();
        let basis_pos = basis.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        GradedPiece {
            degree: k,
            monomials,
            index,
            pivots,
            basis,
            basis_pos,
        }
    }

    /// Coordinates in the quotient basis of a polynomial of this degree.
    fn reduce_poly(&self, p: &Poly) -> Result<Vec<Rational>> {
        let mut work: BTreeMap<usize, Rational> = BTreeMap::new();
        for (e, c) in p.terms() {
            let col = *self
                .index
                .get(e)
                .ok_or_else(|| Error::Structural(format!("monomial {e} is not of degree {}", self.degree)))?;
            *work.entry(col).or_insert_with(Rational::zero) += c;
        }
        Ok(self.reduce_map(work))
    }

    fn reduce_map(&self, mut work: BTreeMap<usize, Rational>) -> Vec<Rational> {
        work.retain(|_, c| !c.is_zero());
        let mut cursor = work.keys().next_back().copied();
        while let Some(cur) = cursor {
            let next = work.range(..=cur).next_back().map(|(k, _)| *k);
            let Some(col) = next else { break };
            if let Some(p) = self.pivots.get(&col) {
                let c = work.remove(&col).unwrap();
                for (j, v) in &p.row {
                    if *j == col {
                        continue;
                    }
                    let slot = work.entry(*j).or_insert_with(Rational::zero);
                    *slot -= &c * v;
                    if slot.is_zero() {
                        work.remove(j);
                    }
                }
            }
            cursor = if col == 0 { None } else { Some(col - 1) };
        }
        let mut out = vec![Rational::zero(); self.basis.len()];
        for (c, v) in work {
            out[self.basis_pos[&c]] = v;
        }
        out
    }

    fn reduce_monomial(&self, e: &MultiIndex) -> Vec<Rational> {
        let mut work = BTreeMap::new();
        work.insert(self.index[e], Rational::one());
        self.reduce_map(work)
    }
}

fn reduce_against(row: &mut SparseRow, pivots: &HashMap<usize, Pivot>) {
    loop {
        let Some((lead, c)) = row.last().cloned() else {
            return;
        };
        let Some(p) = pivots.get(&lead) else {
            // Leading column is free; lower columns may still be reducible,
            // but the pivot structure only needs distinct leads.
            return;
        };
        *row = axpy(row, &p.row, &(-c));
    }
}

/// `a + k * b` for sorted sparse rows.
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

/// Row-reduced basis of the Jacobian ideal piece of integer degree `k`.
pub fn jacobian_piece(f: &Poly, ws: &WeightSystem, k: i64) -> Result<Vec<Poly>> {
    check_homogeneous(f, ws)?;
    let partials: Vec<Poly> = (0..f.nvars()).map(|i| f.partial(i)).collect();
    Ok(GradedPiece::build(&partials, ws, k).ideal_rows(f.nvars()))
}

fn check_homogeneous(f: &Poly, ws: &WeightSystem) -> Result<()> {
    if f.nvars() != ws.nvars() {
        return Err(Error::Structural(format!(
            "polynomial has {} variables, weight system {}",
            f.nvars(),
            ws.nvars()
        )));
    }
    match f.weighted_degree(ws.int_weights()) {
        Some(d) if d == ws.unit() => Ok(()),
        _ => Err(Error::Precondition(
            "polynomial is not weighted homogeneous of degree 1".into(),
        )),
    }
}

/// Graded Jacobi algebra with monomial quotient bases.
#[derive(Clone, Debug)]
pub struct JacobiAlgebra {
    f: Poly,
    ws: WeightSystem,
    pieces: Vec<GradedPiece>,
    mu: usize,
}

impl JacobiAlgebra {
    pub fn build(f: &Poly, ws: &WeightSystem) -> Result<Self> {
        check_homogeneous(f, ws)?;
        let partials: Vec<Poly> = (0..f.nvars()).map(|i| f.partial(i)).collect();
        let top = ws.socle_degree();
        let wmax = *ws.int_weights().iter().max().unwrap();
        // Vanishing on (top, top + wmax] forces vanishing in every higher degree.
        let witness = ((top + 1)..=(top + wmax))
            .into_par_iter()
            .map(|k| (k, GradedPiece::build(&partials, ws, k).dim()))
            .collect::<Vec<_>>()
            .into_iter()
            .find(|(_, d)| *d > 0);
        if let Some((k, d)) = witness {
            return Err(Error::Certification(format!(
                "singularity is not isolated: quotient piece of degree {} has dimension {d}",
                format_rat(&ws.degree(k))
            )));
        }
        let pieces: Vec<GradedPiece> = (0..=top)
            .into_par_iter()
            .map(|k| GradedPiece::build(&partials, ws, k))
            .collect();
        let mu = pieces.iter().map(|p| p.dim()).sum();
        Ok(JacobiAlgebra {
            f: f.clone(),
            ws: ws.clone(),
            pieces,
            mu,
        })
    }

    pub fn f(&self) -> &Poly {
        &self.f
    }

    pub fn weights(&self) -> &WeightSystem {
        &self.ws
    }

    pub fn milnor(&self) -> usize {
        self.mu
    }

    /// Integer degree of the socle.
    pub fn top_degree(&self) -> i64 {
        self.ws.socle_degree()
    }

    pub fn piece(&self, k: i64) -> Option<&GradedPiece> {
        usize::try_from(k).ok().and_then(|i| self.pieces.get(i))
    }

    pub fn dim(&self, k: i64) -> usize {
        self.piece(k).map_or(0, |p| p.dim())
    }

    pub fn basis(&self, k: i64) -> Vec<MultiIndex> {
        self.piece(k).map_or(Vec::new(), |p| p.basis_monomials())
    }

    /// Nonzero graded dimensions as `(q, dim)`.
    pub fn graded_dims(&self) -> Vec<(Rational, usize)> {
        self.pieces
            .iter()
            .filter(|p| p.dim() > 0)
            .map(|p| (self.ws.degree(p.degree), p.dim()))
            .collect()
    }

    /// Exponents `alpha_1 <= ... <= alpha_mu` with `alpha_1 = sum w_i`.
    pub fn exponents(&self) -> Vec<Rational> {
        let a1: Rational = self.ws.weights().iter().sum();
        let mut out = Vec::with_capacity(self.mu);
        for p in &self.pieces {
            let q = self.ws.degree(p.degree);
            for _ in 0..p.dim() {
                out.push(&a1 + &q);
            }
        }
        out
    }

    /// Coordinates of `[p]` in the basis of its degree. Returns the integer
    /// degree and the coordinate vector (empty above the socle).
    pub fn normal_form(&self, p: &Poly) -> Result<(i64, Vec<Rational>)> {
        if p.nvars() != self.ws.nvars() {
            return Err(Error::Structural("polynomial has the wrong variable count".into()));
        }
        if p.is_zero() {
            return Ok((0, Vec::new()));
        }
        let k = p
            .weighted_degree(self.ws.int_weights())
            .ok_or_else(|| Error::Structural("normal form needs a weighted homogeneous polynomial".into()))?;
        match self.piece(k) {
            Some(piece) => Ok((k, piece.reduce_poly(p)?)),
            None => Ok((k, Vec::new())),
        }
    }

    /// Coordinates of a monomial's class.
    pub fn normal_form_monomial(&self, e: &MultiIndex) -> (i64, Vec<Rational>) {
        let k = e.weighted_degree(self.ws.int_weights());
        match self.piece(k) {
            Some(piece) => (k, piece.reduce_monomial(e)),
            None => (k, Vec::new()),
        }
    }

    /// Polynomial represented by coordinates at degree `k`.
    pub fn representative(&self, k: i64, coords: &[Rational]) -> Poly {
        let mut p = Poly::zero(self.ws.nvars());
        if let Some(piece) = self.piece(k) {
            for (m, c) in piece.basis_monomials().into_iter().zip(coords) {
                p.add_term(m, c.clone());
            }
        }
        p
    }

    /// Product of classes given by coordinates at degrees `ka` and `kb`.
    pub fn multiply(&self, ka: i64, a: &[Rational], kb: i64, b: &[Rational]) -> Result<(i64, Vec<Rational>)> {
        if a.len() != self.dim(ka) || b.len() != self.dim(kb) {
            return Err(Error::Structural("coordinate length does not match degree".into()));
        }
        let k = ka + kb;
        let Some(target) = self.piece(k) else {
            return Ok((k, Vec::new()));
        };
        let ba = self.basis(ka);
        let bb = self.basis(kb);
        let mut acc = vec![Rational::zero(); target.dim()];
        for (ma, ca) in ba.iter().zip(a) {
            if ca.is_zero() {
                continue;
            }
            for (mb, cb) in bb.iter().zip(b) {
                if cb.is_zero() {
                    continue;
                }
                let nf = target.reduce_monomial(&ma.add(mb));
                let s = ca * cb;
                for (x, y) in acc.iter_mut().zip(nf) {
                    *x += &s * y;
                }
            }
        }
        Ok((k, acc))
    }

    /// For each integer degree `q >= 2` with a nonzero piece, the
    /// codimension of the span of `q`-fold products of degree-one classes.
    ///
    /// Degree-one classes are spanned by degree-one monomials, so the
    /// products are spanned by the classes of monomials that factor into
    /// `q` monomials of degree one.
    pub fn h2_generation_check(&self) -> H2Report {
        let unit = self.ws.unit();
        let top_q = self.top_degree() / unit;
        let mut entries = Vec::new();
        let s1: Vec<MultiIndex> = monomials_of_weighted_degree(self.ws.int_weights(), unit);
        let mut products: HashSet<MultiIndex> = s1.iter().cloned().collect();
        for q in 2..=top_q {
            let mut next = HashSet::new();
            for a in &s1 {
                for b in &products {
                    next.insert(a.add(b));
                }
            }
            products = next;
            let k = q * unit;
            let target = &self.pieces[k as usize];
            let dim = target.dim();
            let mut sorted: Vec<&MultiIndex> = products.iter().collect();
            sorted.sort();
            let mut covered = vec![false; dim];
            for m in &sorted {
                if let Some(pos) = target.index.get(*m).and_then(|c| target.basis_pos.get(c)) {
                    covered[*pos] = true;
                }
            }
            let rest: Vec<usize> = (0..dim).filter(|&i| !covered[i]).collect();
            let mut echelon = IncrementalRank::new(rest.len());
            for m in sorted {
                if echelon.rank() == rest.len() {
                    break;
                }
                let col = target.index[m];
                if target.basis_pos.contains_key(&col) {
                    continue;
                }
                let nf = target.reduce_monomial(m);
                let v: Vec<Rational> = rest.iter().map(|&i| nf[i].clone()).collect();
                if v.iter().any(|x| !x.is_zero()) {
                    echelon.insert(v);
                }
            }
            let spanned = dim - rest.len() + echelon.rank();
            entries.push(H2Entry {
                q,
                dim,
                spanned,
                codim: dim - spanned,
            });
        }
        H2Report { entries }
    }

    /// Integer degrees `0, D, 2D, ...` with nonzero pieces.
    pub fn integer_degrees(&self) -> Vec<i64> {
        let unit = self.ws.unit();
        (0..=self.top_degree() / unit)
            .map(|q| q * unit)
            .filter(|&k| self.dim(k) > 0)
            .collect()
    }

    pub fn summary(&self) -> JacobiSummary {
        JacobiSummary {
            mu: self.mu,
            weights: self.ws.weights().iter().map(format_rat).collect(),
            graded_dims: self
                .graded_dims()
                .into_iter()
                .map(|(q, d)| (format_rat(&q), d))
                .collect(),
            exponents: self.exponents().iter().map(format_rat).collect(),
        }
    }

    /// Higgs field of the family `F_t = f + sum_a t_a m_a` over the
    /// degree-one directions, in the frame of integer-degree basis classes:
    /// `C_a(t) b = -NF_t(m_a * b)`. Returns one matrix per `m_a` with
    /// entries in `t_1..t_m`, known modulo degree `order + 1`.
    pub fn family_higgs(&self, tvars: &Vars, order: i32) -> Result<Vec<SeriesMatrix>> {
        let unit = self.ws.unit();
        let directions = self.basis(unit);
        if tvars.len() != directions.len() {
            return Err(Error::Structural(format!(
                "family needs {} parameters, got {}",
                directions.len(),
                tvars.len()
            )));
        }
        let degs = self.integer_degrees();
        let mut offsets = Vec::new();
        let mut rank = 0;
        for &k in &degs {
            offsets.push(rank);
            rank += self.dim(k);
        }
        let dir_polys: Vec<Poly> = directions
            .iter()
            .map(|m| Poly::monomial(m.clone(), Rational::one()))
            .collect();
        let mut out = vec![SeriesMatrix::zeros(tvars, order, rank, rank); directions.len()];
        for (di, &k) in degs.iter().enumerate() {
            let kt = k + unit;
            let Some(ti) = degs.iter().position(|&x| x == kt) else {
                continue;
            };
            let fam = FamilyReducer::new(self, &dir_polys, kt, tvars, order)?;
            for (a, ma) in directions.iter().enumerate() {
                for (bi, b) in self.basis(k).iter().enumerate() {
                    let nf = fam.normal_form(&Poly::monomial(ma.add(b), Rational::one()))?;
                    for (ci, s) in nf.into_iter().enumerate() {
                        if !s.is_zero() {
                            out[a].set(offsets[ti] + ci, offsets[di] + bi, s.neg())?;
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Normal forms for the family `f + sum t_a m_a` at one degree, with
/// coefficients that are power series in `t`.
struct FamilyReducer<'a> {
    piece: &'a GradedPiece,
    tvars: Vars,
    order: i32,
    /// Columns of the non-basis monomials.
    ncols: Vec<usize>,
    /// `M_N(t)^{-1} M_B(t)`, rows indexed like `ncols`.
    coupling: Option<SeriesMatrix>,
}

impl<'a> FamilyReducer<'a> {
    fn new(alg: &'a JacobiAlgebra, dirs: &[Poly], k: i64, tvars: &Vars, order: i32) -> Result<Self> {
        let piece = alg
            .piece(k)
            .ok_or_else(|| Error::Structural("degree above the socle".into()))?;
        let ncols: Vec<usize> = {
            let mut v: Vec<usize> = piece.pivots.keys().copied().collect();
            v.sort_unstable();
            v
        };
        if piece.dim() == 0 || ncols.is_empty() || order <= 0 {
            return Ok(FamilyReducer {
                piece,
                tvars: tvars.clone(),
                order,
                ncols,
                coupling: None,
            });
        }
        let npos: HashMap<usize, usize> = ncols.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let nn = ncols.len();
        let nb = piece.dim();
        let sources: Vec<SourceRow> = ncols.iter().map(|c| piece.pivots[c].source.clone()).collect();
        // Rows g * dF_t/dx_i are affine in t.
        let mut mn = SeriesMatrix::zeros(tvars, order, nn, nn);
        let mut mb = SeriesMatrix::zeros(tvars, order, nn, nb);
        for (r, src) in sources.iter().enumerate() {
            let mut contributions: Vec<(Poly, Option<usize>)> = vec![(alg.f.partial(src.partial), None)];
            for (a, m) in dirs.iter().enumerate() {
                contributions.push((m.partial(src.partial), Some(a)));
            }
            for (poly, tv) in contributions {
                for (e, c) in poly.terms() {
                    let e = e.add(&src.multiplier);
                    let col = piece.index[&e];
                    let coeff = match tv {
                        None => TruncSeries::constant(tvars, order, c.clone()),
                        Some(a) => TruncSeries::var(tvars, order, a).scale(c),
                    };
                    if let Some(&j) = npos.get(&col) {
                        let cur = mn.get(r, j).add(&coeff)?;
                        mn.set(r, j, cur)?;
                    } else {
                        let j = piece.basis_pos[&col];
                        let cur = mb.get(r, j).add(&coeff)?;
                        mb.set(r, j, cur)?;
                    }
                }
            }
        }
        // Row vector convention: lambda * M_N = p_N, NF = p_B - lambda * M_B.
        let coupling = mn.inverse()?.mul(&mb)?;
        Ok(FamilyReducer {
            piece,
            tvars: tvars.clone(),
            order,
            ncols,
            coupling: Some(coupling),
        })
    }

    fn normal_form(&self, p: &Poly) -> Result<Vec<TruncSeries>> {
        let Some(coupling) = &self.coupling else {
            let nf = self.piece.reduce_poly(p)?;
            return Ok(nf
                .into_iter()
                .map(|c| TruncSeries::constant(&self.tvars, self.order, c))
                .collect());
        };
        let nb = self.piece.dim();
        let mut out: Vec<TruncSeries> = vec![TruncSeries::zero(&self.tvars, self.order); nb];
        let npos: HashMap<usize, usize> = self.ncols.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let mut pn: Vec<(usize, Rational)> = Vec::new();
        for (e, c) in p.terms() {
            let col = self.piece.index[e];
            if let Some(&j) = npos.get(&col) {
                pn.push((j, c.clone()));
            } else {
                let j = self.piece.basis_pos[&col];
                out[j].add_term(MultiIndex::zero(self.tvars.len()), c.clone());
            }
        }
        // NF = p_B - p_N * M_N^{-1} M_B
        for (j, c) in pn {
            for (b, slot) in out.iter_mut().enumerate() {
                let x = coupling.get(j, b);
                if !x.is_zero() {
                    *slot = slot.sub(&x.scale(&c))?;
                }
            }
        }
        Ok(out)
    }
}

/// Rank tracker keeping a reduced echelon basis of inserted vectors.
struct IncrementalRank {
    dim: usize,
    rows: Vec<(usize, Vec<Rational>)>,
}

impl IncrementalRank {
    fn new(dim: usize) -> Self {
        IncrementalRank { dim, rows: Vec::new() }
    }

    fn rank(&self) -> usize {
        self.rows.len()
    }

    fn insert(&mut self, mut v: Vec<Rational>) {
        debug_assert_eq!(v.len(), self.dim);
        for (p, r) in &self.rows {
            if !v[*p].is_zero() {
                let c = v[*p].clone();
                for (x, y) in v.iter_mut().zip(r) {
                    if !y.is_zero() {
                        *x -= &c * y;
                    }
                }
            }
        }
        if let Some(p) = v.iter().position(|x| !x.is_zero()) {
            let inv = v[p].recip();
            for x in v.iter_mut() {
                *x *= &inv;
            }
            for (_, r) in self.rows.iter_mut() {
                if !r[p].is_zero() {
                    let c = r[p].clone();
                    for (x, y) in r.iter_mut().zip(&v) {
                        *x -= &c * y;
                    }
                }
            }
            self.rows.push((p, v));
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct H2Entry {
    pub q: i64,
    pub dim: usize,
    pub spanned: usize,
    pub codim: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct H2Report {
    pub entries: Vec<H2Entry>,
}

impl H2Report {
    pub fn passes(&self) -> bool {
        self.entries.iter().all(|e| e.codim == 0)
    }

    pub fn codim_at(&self, q: i64) -> Option<usize> {
        self.entries.iter().find(|e| e.q == q).map(|e| e.codim)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JacobiSummary {
    pub mu: usize,
    pub weights: Vec<String>,
    pub graded_dims: Vec<(String, usize)>,
    pub exponents: Vec<String>,
}

/// JSON input form of a weighted homogeneous polynomial.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolyInput {
    pub nvars: usize,
    pub weights: Vec<String>,
    pub terms: Vec<(Vec<u32>, String)>,
}

impl PolyInput {
    pub fn parse(&self) -> Result<(Poly, WeightSystem)> {
        let weights = self.weights.iter().map(|s| parse_rat(s)).collect::<Result<Vec<_>>>()?;
        if weights.len() != self.nvars {
            return Err(Error::Structural(format!(
                "{} weights for {} variables",
                weights.len(),
                self.nvars
            )));
        }
        let ws = WeightSystem::new(weights)?;
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| Ok((MultiIndex(e.clone()), parse_rat(c)?)))
            .collect::<Result<Vec<_>>>()?;
        let f = Poly::from_terms(self.nvars, terms)?;
        Ok((f, ws))
    }

    pub fn from_poly(f: &Poly, ws: &WeightSystem) -> Self {
        PolyInput {
            nvars: f.nvars(),
            weights: ws.weights().iter().map(format_rat).collect(),
            terms: f.terms().iter().map(|(e, c)| (e.0.clone(), format_rat(c))).collect(),
        }
    }
}

/// `x_0^d + ... + x_n^d`.
pub fn fermat(nvars: usize, d: u32) -> Poly {
    let mut f = Poly::zero(nvars);
    for i in 0..nvars {
        let mut e = vec![0; nvars];
        e[i] = d;
        f.add_term(MultiIndex(e), Rational::one());
    }
    f
}

/// The weight system `(1,1,1,2,2,2)/9` and
/// `x0^9 + x1^9 + x2^9 + x0 x3^4 + x1 x4^4 + x2 x5^4`.
pub fn codim_one_instance() -> (Poly, WeightSystem) {
    let mut f = Poly::zero(6);
    for i in 0..3 {
        let mut e = vec![0; 6];
        e[i] = 9;
        f.add_term(MultiIndex(e), Rational::one());
        let mut e = vec![0; 6];
        e[i] = 1;
        e[i + 3] = 4;
        f.add_term(MultiIndex(e), Rational::one());
    }
    let ws = WeightSystem::new(vec![rat(1, 9), rat(1, 9), rat(1, 9), rat(2, 9), rat(2, 9), rat(2, 9)]).unwrap();
    (f, ws)
}

/// Dense matrix of multiplication by a class of degree `ka` from degree
/// `kb` to degree `ka + kb`, columns indexed by the basis of `kb`.
pub fn multiplication_matrix(alg: &JacobiAlgebra, ka: i64, a: &[Rational], kb: i64) -> Result<QMat> {
    let db = alg.dim(kb);
    let dt = alg.dim(ka + kb);
    let mut m = QMat::zeros(dt, db);
    for j in 0..db {
        let mut e = vec![Rational::zero(); db];
        e[j] = Rational::one();
        let (_, v) = alg.multiply(ka, a, kb, &e)?;
        for (i, x) in v.into_iter().enumerate() {
            m.set(i, j, x);
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::int;

    fn cubic() -> JacobiAlgebra {
        let ws = WeightSystem::homogeneous(3, 3).unwrap();
        JacobiAlgebra::build(&fermat(3, 3), &ws).unwrap()
    }

    #[test]
    fn cubic_ideal_degree_one() {
        let ws = WeightSystem::homogeneous(3, 3).unwrap();
        let rows = jacobian_piece(&fermat(3, 3), &ws, 3).unwrap();
        assert_eq!(rows.len(), 9);
        assert!(jacobian_piece(&fermat(3, 3), &ws, 0).unwrap().is_empty());
    }

    #[test]
    fn quadric_ideal_half() {
        let ws = WeightSystem::homogeneous(2, 2).unwrap();
        let rows = jacobian_piece(&fermat(2, 2), &ws, 1).unwrap();
        assert_eq!(rows.len(), 2);
    }

    #[test]
    fn cubic_algebra() {
        let a = cubic();
        assert_eq!(a.milnor(), 8);
        assert_eq!(a.dim(0), 1);
        assert_eq!(a.dim(3), 1);
        assert_eq!(a.exponents()[0], int(1));
        assert_eq!(a.basis(3), vec![MultiIndex(vec![1, 1, 1])]);
        let (_, nf) = a.normal_form_monomial(&MultiIndex(vec![2, 1, 0]));
        assert!(nf.iter().all(|x| x.is_zero()));
        let one = vec![int(1)];
        let (k, sq) = a.multiply(3, &one, 3, &one).unwrap();
        assert_eq!(k, 6);
        assert!(sq.is_empty());
        assert!(a.h2_generation_check().passes());
    }

    #[test]
    fn a1_point() {
        let ws = WeightSystem::homogeneous(1, 2).unwrap();
        let a = JacobiAlgebra::build(&fermat(1, 2), &ws).unwrap();
        assert_eq!(a.milnor(), 1);
        assert_eq!(a.exponents(), vec![rat(1, 2)]);
    }

    #[test]
    fn non_isolated_rejected() {
        // x0^2 x1 is homogeneous of degree 3 but singular along the x1 axis.
        let ws = WeightSystem::homogeneous(2, 3).unwrap();
        let f = Poly::monomial(MultiIndex(vec![2, 1]), int(1));
        assert!(matches!(JacobiAlgebra::build(&f, &ws), Err(Error::Certification(_))));
    }

    #[test]
    fn inhomogeneous_rejected() {
        let a = cubic();
        let p = fermat(3, 3).add(&Poly::monomial(MultiIndex(vec![1, 0, 0]), int(1)));
        assert!(a.normal_form(&p).is_err());
    }
}
