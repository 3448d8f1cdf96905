//! Frobenius type structures in a flat frame, variations of filtrations
//! with a pairing, and the conversions between them.

use std::collections::HashMap;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jacobi::JacobiAlgebra;
use crate::report::Report;
use crate::series::json::{qmat_serde, vars_serde};
use crate::series::rational::{int, rat, sign_pow};
use crate::series::sparse::{normalize_row, SparseEchelon};
use crate::series::{vars, MultiIndex, QMat, Rational, SeriesMatrix, SparseSeriesMatrix, TruncSeries, Vars};

/// `(C, U, V, g)` over the base `t_1..t_m` in a frame where the residual
/// connection is the trivial derivative.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrobeniusTypeStructure {
    #[serde(with = "vars_serde")]
    pub tvars: Vars,
    pub c: Vec<SeriesMatrix>,
    pub u: SeriesMatrix,
    #[serde(with = "qmat_serde")]
    pub v: QMat,
    #[serde(with = "qmat_serde")]
    pub g: QMat,
}

/// Flat connection `d + sum Gamma_i dt_i` on a graded frame together with a
/// constant pairing `S`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiltrationData {
    #[serde(with = "vars_serde")]
    pub tvars: Vars,
    pub weight: i64,
    pub gamma: Vec<SeriesMatrix>,
    /// Level `p` of each frame vector.
    pub levels: Vec<i64>,
    #[serde(with = "qmat_serde")]
    pub s: QMat,
}

fn check_square(m: &SeriesMatrix, n: usize, tvars: &Vars, what: &str) -> Result<()> {
    if m.rows() != n || m.cols() != n {
        return Err(Error::Structural(format!(
            "{what} is {}x{}, expected {n}x{n}",
            m.rows(),
            m.cols()
        )));
    }
    if m.vars() != tvars {
        return Err(Error::Structural(format!(
            "{what} uses variables {:?}, expected {:?}",
            m.vars(),
            tvars
        )));
    }
    Ok(())
}

fn check_qsquare(m: &QMat, n: usize, what: &str) -> Result<()> {
    if m.rows() != n || m.cols() != n {
        return Err(Error::Structural(format!(
            "{what} is {}x{}, expected {n}x{n}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

impl FrobeniusTypeStructure {
    pub fn new(tvars: Vars, c: Vec<SeriesMatrix>, u: SeriesMatrix, v: QMat, g: QMat) -> Result<Self> {
        let f = FrobeniusTypeStructure { tvars, c, u, v, g };
        f.validate()?;
        Ok(f)
    }

    /// Shape and variable consistency.
    pub fn validate(&self) -> Result<()> {
        let n = self.rank();
        if self.c.len() != self.tvars.len() {
            return Err(Error::Structural(format!(
                "{} Higgs components for {} base variables",
                self.c.len(),
                self.tvars.len()
            )));
        }
        for (i, c) in self.c.iter().enumerate() {
            check_square(c, n, &self.tvars, &format!("C_{}", i + 1))?;
        }
        check_square(&self.u, n, &self.tvars, "U")?;
        check_qsquare(&self.v, n, "V")?;
        check_qsquare(&self.g, n, "g")
    }

    pub fn rank(&self) -> usize {
        self.u.rows()
    }

    pub fn base_dim(&self) -> usize {
        self.tvars.len()
    }

    pub fn order(&self) -> i32 {
        self.c.iter().map(|c| c.order()).fold(self.u.order(), i32::min)
    }

    fn vmat(&self) -> SeriesMatrix {
        SeriesMatrix::from_qmat(&self.tvars, self.u.order(), &self.v)
    }

    fn gmat(&self) -> SeriesMatrix {
        SeriesMatrix::from_qmat(&self.tvars, self.u.order(), &self.g)
    }
}

impl FiltrationData {
    pub fn new(tvars: Vars, weight: i64, gamma: Vec<SeriesMatrix>, levels: Vec<i64>, s: QMat) -> Result<Self> {
        let d = FiltrationData {
            tvars,
            weight,
            gamma,
            levels,
            s,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.rank();
        if self.gamma.len() != self.tvars.len() {
            return Err(Error::Structural(format!(
                "{} connection components for {} base variables",
                self.gamma.len(),
                self.tvars.len()
            )));
        }
        for (i, g) in self.gamma.iter().enumerate() {
            check_square(g, n, &self.tvars, &format!("Gamma_{}", i + 1))?;
        }
        check_qsquare(&self.s, n, "S")
    }

    pub fn rank(&self) -> usize {
        self.levels.len()
    }

    pub fn base_dim(&self) -> usize {
        self.tvars.len()
    }

    pub fn order(&self) -> i32 {
        self.gamma.iter().map(|g| g.order()).min().unwrap_or(0)
    }

    /// Number of frame vectors of level at least `p`.
    pub fn rank_at_least(&self, p: i64) -> usize {
        self.levels.iter().filter(|&&l| l >= p).count()
    }
}

/// Evaluates the axioms of a Frobenius type structure modulo truncation.
pub fn check_ftype_axioms(f: &FrobeniusTypeStructure) -> Report {
    let mut rep = Report::new();
    if let Err(e) = f.validate() {
        rep.push("shape", e.to_string());
        return rep;
    }
    let m = f.base_dim();
    let sp = SparseSeriesMatrix::from_dense;
    let c: Vec<SparseSeriesMatrix> = f.c.iter().map(sp).collect();
    let u = sp(&f.u);
    let v = sp(&f.vmat());
    let g = sp(&f.gmat());
    let run = |rep: &mut Report| -> Result<()> {
        for i in 0..m {
            for j in (i + 1)..m {
                let label = format!("[C_{},C_{}]", i + 1, j + 1);
                rep.require_zero_sparse("higgs_commute", &label, &c[i].commutator(&c[j])?);
                let d = c[j].partial(i).sub(&c[i].partial(j))?;
                let label = format!("d_{} C_{} - d_{} C_{}", i + 1, j + 1, j + 1, i + 1);
                rep.require_zero_sparse("potentiality", &label, &d);
            }
        }
        for (i, ci) in c.iter().enumerate() {
            rep.require_zero_sparse("u_higgs_commute", &format!("[C_{},U]", i + 1), &ci.commutator(&u)?);
            let r = u.partial(i).sub(&ci.commutator(&v)?)?.add(ci)?;
            rep.require_zero_sparse(
                "u_derivative",
                &format!("d_{} U - [C_{},V] + C_{}", i + 1, i + 1, i + 1),
                &r,
            );
            let r = g.mul(ci)?.sub(&ci.transpose().mul(&g)?)?;
            rep.require_zero_sparse("c_symmetric", &format!("g C_{} - C_{}^T g", i + 1, i + 1), &r);
        }
        let r = g.mul(&u)?.sub(&u.transpose().mul(&g)?)?;
        rep.require_zero_sparse("u_symmetric", "g U - U^T g", &r);
        Ok(())
    };
    if let Err(e) = run(&mut rep) {
        rep.push("shape", e.to_string());
    }
    let skew = f.g.mul(&f.v).add(&f.v.transpose().mul(&f.g));
    if !skew.is_zero() {
        rep.push("v_skew", format!("g V + V^T g = {skew}"));
    }
    if f.g != f.g.transpose() {
        rep.push("g_symmetric", format!("g = {}", f.g));
    }
    if f.g.inverse().is_none() {
        rep.push("g_nondegenerate", format!("g = {}", f.g));
    }
    rep
}

/// Rational eigenbasis of `v` with eigenvalues in `w/2 + Z`, ordered by
/// decreasing eigenvalue. Returns (eigenvalues, basis as columns).
fn half_integer_eigenbasis(v: &QMat, w: i64) -> Result<(Vec<Rational>, QMat)> {
    let n = v.rows();
    let half = rat(w, 2);
    if v.is_diagonal() {
        let ev: Vec<Rational> = (0..n).map(|i| v.get(i, i).clone()).collect();
        for e in &ev {
            if !(e - &half).is_integer() {
                return Err(Error::Precondition(format!(
                    "eigenvalue {e} of V is not in w/2 + Z for w = {w}"
                )));
            }
        }
        return Ok((ev, QMat::identity(n)));
    }
    let bound: Rational = (0..n)
        .map(|i| v.row(i).iter().map(|x| x.abs()).sum::<Rational>())
        .max()
        .unwrap_or_else(Rational::zero);
    let kmax = (bound.clone() + half.abs()).ceil().to_integer();
    let mut ev = Vec::new();
    let mut cols = Vec::new();
    let mut k = kmax.clone();
    let lo = -kmax;
    while k >= lo {
        let lambda = &half + Rational::from_integer(k.clone());
        if lambda.abs() <= bound {
            let shifted = v.sub(&QMat::identity(n).scale(&lambda));
            for vec in shifted.nullspace() {
                ev.push(lambda.clone());
                cols.push(vec);
            }
        }
        k -= 1;
    }
    if cols.len() != n {
        return Err(Error::Precondition(format!(
            "V is not semisimple over Q with spectrum in w/2 + Z (found {} of {n} eigenvectors)",
            cols.len()
        )));
    }
    Ok((ev, QMat::from_cols(&cols, n)))
}

/// Frobenius type structure with `U = 0` to a variation of filtrations of
/// weight `w`: levels from the eigenvalues of `V`, `Gamma = C`,
/// `S_ij = (-1)^{p_i} g_ij`.
pub fn ftype_to_filtration(f: &FrobeniusTypeStructure, w: i64) -> Result<FiltrationData> {
    f.validate()?;
    if !f.u.is_zero() {
        return Err(Error::Precondition("U must vanish".into()));
    }
    let (ev, p) = half_integer_eigenbasis(&f.v, w)?;
    let half = rat(w, 2);
    let levels: Vec<i64> = ev
        .iter()
        .map(|e| (e + &half).to_integer().try_into().expect("level fits in i64"))
        .collect();
    let (gamma, g) = if p == QMat::identity(f.rank()) {
        (f.c.clone(), f.g.clone())
    } else {
        let pinv = p.inverse().expect("eigenbasis is invertible");
        let order = f.order();
        let ps = SeriesMatrix::from_qmat(&f.tvars, order, &p);
        let pis = SeriesMatrix::from_qmat(&f.tvars, order, &pinv);
        let gamma = f.c.iter().map(|c| pis.mul(c)?.mul(&ps)).collect::<Result<Vec<_>>>()?;
        (gamma, p.transpose().mul(&f.g).mul(&p))
    };
    let n = f.rank();
    let mut s = QMat::zeros(n, n);
    for i in 0..n {
        let sg = sign_pow(levels[i]);
        for j in 0..n {
            if !g.get(i, j).is_zero() {
                s.set(i, j, &sg * g.get(i, j));
            }
        }
    }
    FiltrationData::new(f.tvars.clone(), w, gamma, levels, s)
}

/// Splits `Gamma` into level-preserving and level-lowering parts; any other
/// component is an error.
fn split_by_level(d: &FiltrationData) -> Result<(Vec<SeriesMatrix>, Vec<SeriesMatrix>)> {
    let n = d.rank();
    let mut bad = Vec::new();
    let mut ls = Vec::new();
    let mut cs = Vec::new();
    for (a, g) in d.gamma.iter().enumerate() {
        let mut l = SeriesMatrix::zeros(&d.tvars, g.order(), n, n);
        let mut c = SeriesMatrix::zeros(&d.tvars, g.order(), n, n);
        for r in 0..n {
            for k in 0..n {
                let e = g.get(r, k);
                if e.is_zero() {
                    continue;
                }
                match d.levels[r] - d.levels[k] {
                    0 => l.set(r, k, e.clone())?,
                    -1 => c.set(r, k, e.clone())?,
                    shift => bad.push(format!("Gamma_{}[{r},{k}] shifts level by {shift}", a + 1)),
                }
            }
        }
        ls.push(l);
        cs.push(c);
    }
    if !bad.is_empty() {
        return Err(Error::Certification(format!(
            "Griffiths transversality violated: {}",
            bad.join("; ")
        )));
    }
    Ok((ls, cs))
}

/// Frame change `G` with `G(0) = 1` and `dG + L G = 0`, solved degree by degree.
fn flat_gauge(ls: &[SeriesMatrix], tvars: &Vars, order: i32, n: usize) -> Result<SeriesMatrix> {
    let mut g = SeriesMatrix::identity(tvars, order, n);
    for deg in 1..=order.max(0) as u32 {
        let mut acc = SeriesMatrix::zeros(tvars, order, n, n);
        for (i, l) in ls.iter().enumerate() {
            let lg = l.mul(&g)?.homogeneous_part(deg - 1).neg();
            acc = acc.add(&lg.mul_var(i).truncate(order))?;
        }
        g = g.add(&acc.scale(&rat(1, deg as i64)))?;
    }
    Ok(g)
}

/// Variation of filtrations to a Frobenius type structure with `U = 0`.
/// A level-preserving part of `Gamma` is gauged away first.
pub fn filtration_to_ftype(d: &FiltrationData) -> Result<FrobeniusTypeStructure> {
    d.validate()?;
    let n = d.rank();
    let (ls, cs) = split_by_level(d)?;
    let order = d.order();
    let c = if ls.iter().all(|l| l.is_zero()) {
        cs
    } else {
        let g = flat_gauge(&ls, &d.tvars, order, n)?;
        let gi = g.inverse()?;
        cs.iter().map(|c| gi.mul(c)?.mul(&g)).collect::<Result<Vec<_>>>()?
    };
    let half = rat(d.weight, 2);
    let mut v = QMat::zeros(n, n);
    let mut g = QMat::zeros(n, n);
    for i in 0..n {
        v.set(i, i, int(d.levels[i]) - &half);
        let sg = sign_pow(d.levels[i]);
        for j in 0..n {
            if !d.s.get(i, j).is_zero() {
                g.set(i, j, &sg * d.s.get(i, j));
            }
        }
    }
    let u = SeriesMatrix::zeros(&d.tvars, order, n, n);
    FrobeniusTypeStructure::new(d.tvars.clone(), c, u, v, g)
}

/// Checks flatness, transversality, the pairing conditions and the
/// generation condition from the top level.
pub fn check_filtration(d: &FiltrationData) -> Report {
    let mut rep = Report::new();
    if let Err(e) = d.validate() {
        rep.push("shape", e.to_string());
        return rep;
    }
    let n = d.rank();
    let m = d.base_dim();
    let w = d.weight;
    let gamma: Vec<SparseSeriesMatrix> = d.gamma.iter().map(SparseSeriesMatrix::from_dense).collect();
    let run = |rep: &mut Report| -> Result<()> {
        for i in 0..m {
            for j in (i + 1)..m {
                let r = gamma[j]
                    .partial(i)
                    .sub(&gamma[i].partial(j))?
                    .add(&gamma[i].commutator(&gamma[j])?)?;
                rep.require_zero_sparse("flatness", &format!("curvature[{},{}]", i + 1, j + 1), &r);
            }
        }
        let s = SparseSeriesMatrix::from_dense(&SeriesMatrix::from_qmat(&d.tvars, d.order(), &d.s));
        for (i, g) in gamma.iter().enumerate() {
            let r = g.transpose().mul(&s)?.add(&s.mul(g)?)?;
            rep.require_zero_sparse("s_flat", &format!("Gamma_{}^T S + S Gamma_{}", i + 1, i + 1), &r);
        }
        Ok(())
    };
    if let Err(e) = run(&mut rep) {
        rep.push("shape", e.to_string());
    }
    if let Err(Error::Certification(msg)) = split_by_level(d) {
        rep.push("transversality", msg);
    }
    let eps = sign_pow(w);
    if d.s.transpose() != d.s.scale(&eps) {
        rep.push("s_symmetry", format!("S is not (-1)^{w}-symmetric"));
    }
    for i in 0..n {
        for j in 0..n {
            if !d.s.get(i, j).is_zero() && d.levels[i] + d.levels[j] != w {
                rep.push(
                    "s_orthogonality",
                    format!("S[{i},{j}] pairs levels {} and {}", d.levels[i], d.levels[j]),
                );
            }
        }
    }
    if d.s.inverse().is_none() {
        rep.push("s_nondegenerate", "S is singular");
    }
    if let Some(p) = d.levels.iter().find(|&&p| p >= w) {
        rep.push("level_range", format!("level {p} is not below the weight {w}"));
    }
    let top = d.rank_at_least(w - 1);
    if top != 1 {
        rep.push("top_rank", format!("rank of F^(w-1) is {top}"));
    }
    let next = d.rank_at_least(w - 2);
    if next != 1 + m {
        rep.push("next_rank", format!("rank of F^(w-2) is {next}, expected {}", 1 + m));
    }
    let span = generated_rank(d);
    if span != n {
        rep.push(
            "generation",
            format!("top level generates a space of rank {span} of {n}"),
        );
    }
    rep
}

/// Rank of the span of the top-level frame vectors under iterated Higgs
/// components at the origin.
pub fn generated_rank(d: &FiltrationData) -> usize {
    let n = d.rank();
    let w = d.weight;
    // Level-lowering part at the origin, by column.
    let higgs: Vec<Vec<Vec<(usize, Rational)>>> = d
        .gamma
        .iter()
        .map(|g| {
            (0..n)
                .map(|k| {
                    (0..n)
                        .filter(|&r| d.levels[r] + 1 == d.levels[k])
                        .map(|r| (r, g.get(r, k).constant_term()))
                        .filter(|(_, c)| !c.is_zero())
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut ech = SparseEchelon::new(n);
    let mut frontier: Vec<Vec<(usize, Rational)>> = (0..n)
        .filter(|&i| d.levels[i] == w - 1)
        .map(|i| vec![(i, Rational::one())])
        .collect();
    while !frontier.is_empty() && ech.rank() < n {
        let mut next = Vec::new();
        for v in frontier {
            if ech.insert(v.clone()) {
                for c in &higgs {
                    let mut img = Vec::new();
                    for (k, x) in &v {
                        img.extend(c[*k].iter().map(|(r, y)| (*r, x * y)));
                    }
                    let img = normalize_row(img);
                    if !img.is_empty() {
                        next.push(img);
                    }
                }
            }
        }
        frontier = next;
    }
    ech.rank()
}

/// Coefficients `b_1..b_{w-1}` of the shift connection: `b_1 = 1`,
/// `b_{w-1} = 0`, the free ones given, the rest mirrored by
/// `b_k = b_{w-1-k}`.
pub fn shift_coefficients(w: i64, free: &[TruncSeries], tvars: &Vars, order: i32) -> Result<Vec<TruncSeries>> {
    if w < 3 {
        return Err(Error::Precondition(format!("weight {w} is below 3")));
    }
    let nfree = (((w - 1) / 2) - 1).max(0) as usize;
    if free.len() != nfree {
        return Err(Error::Precondition(format!(
            "weight {w} takes {nfree} free coefficients, got {}",
            free.len()
        )));
    }
    for (k, b) in free.iter().enumerate() {
        if b.constant_term().is_zero() {
            return Err(Error::Precondition(format!("b_{} is not invertible", k + 2)));
        }
    }
    let half = (w - 1) / 2;
    let mut b: Vec<TruncSeries> = Vec::with_capacity((w - 1) as usize);
    for k in 1..w {
        let v = if k == w - 1 {
            TruncSeries::zero(tvars, order)
        } else if k == 1 {
            TruncSeries::constant(tvars, order, Rational::one())
        } else if k <= half {
            free[(k - 2) as usize].embed(tvars)?.truncate(order)
        } else {
            b[(w - 1 - k - 1) as usize].clone()
        };
        b.push(v);
    }
    Ok(b)
}

/// One-parameter variation of weight `w` on a rank `w-1` bundle with
/// `Gamma v_i = b_i v_{i+1}`, levels `w-1, ..., 1` and
/// `S_ij = (-1)^i` on the antidiagonal `i + j = w` (indices from 1).
pub fn shift_family(w: i64, free: &[TruncSeries], order: i32) -> Result<FiltrationData> {
    let tvars = vars(&["t"]);
    let b = shift_coefficients(w, free, &tvars, order)?;
    let n = (w - 1) as usize;
    let mut gamma = SeriesMatrix::zeros(&tvars, order, n, n);
    for i in 0..n - 1 {
        gamma.set(i + 1, i, b[i].clone())?;
    }
    let levels: Vec<i64> = (1..w).map(|i| w - i).collect();
    let mut s = QMat::zeros(n, n);
    for i in 1..w {
        let j = w - i;
        s.set((i - 1) as usize, (j - 1) as usize, sign_pow(i));
    }
    FiltrationData::new(tvars, w, vec![gamma], levels, s)
}

/// Where the pairing of a Jacobi-derived variation came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PairingOrigin {
    Supplied,
    /// Solved from the linear constraints; `nullity` is the dimension of the
    /// solution space the pick was made from.
    Solved {
        nullity: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JacobiFiltration {
    pub data: FiltrationData,
    pub pairing: PairingOrigin,
}

/// Weight `n + 3 - 2(n+1)/d` of the variation built from a degree `d`
/// polynomial in `n + 1` variables.
pub fn jacobi_weight(nvars: usize, d: i64) -> i64 {
    let n = nvars as i64 - 1;
    n + 3 - 2 * (n + 1) / d
}

/// Variation of filtrations on the integer-degree part of the Jacobi
/// algebra over the degree-one directions `t_1..t_m`.
pub fn jacobi_to_filtration(alg: &JacobiAlgebra, s: Option<&QMat>, order: i32) -> Result<JacobiFiltration> {
    let ws = alg.weights();
    let d = ws
        .straight_degree()
        .ok_or_else(|| Error::Precondition("polynomial is not homogeneous of a straight degree".into()))?;
    let nvars = ws.nvars();
    if nvars as i64 % d != 0 {
        return Err(Error::Precondition(format!(
            "degree {d} does not divide the number of variables {nvars}"
        )));
    }
    let h2 = alg.h2_generation_check();
    if let Some(e) = h2.entries.iter().find(|e| e.codim != 0) {
        return Err(Error::Certification(format!(
            "generation fails in degree {} (codimension {})",
            e.q, e.codim
        )));
    }
    let w = jacobi_weight(nvars, d);
    let unit = ws.unit();
    let m = alg.dim(unit);
    let names: Vec<String> = (1..=m).map(|i| format!("t{i}")).collect();
    let tvars = vars(&names);
    let gamma = alg.family_higgs(&tvars, order)?;
    let mut levels = Vec::new();
    for k in alg.integer_degrees() {
        let q = k / unit;
        levels.extend(std::iter::repeat(w - 1 - q).take(alg.dim(k)));
    }
    let n = levels.len();
    let (s, pairing) = match s {
        Some(s) => {
            check_qsquare(s, n, "S")?;
            (s.clone(), PairingOrigin::Supplied)
        }
        None => {
            let (s, nullity) = solve_pairing(&gamma, &levels, w)?;
            (s, PairingOrigin::Solved { nullity })
        }
    };
    let data = FiltrationData::new(tvars, w, gamma, levels, s)?;
    Ok(JacobiFiltration { data, pairing })
}

/// Solves for a constant `(-1)^w`-symmetric `S` pairing level `p` only with
/// level `w - p` and satisfying `Gamma^T S + S Gamma = 0` coefficientwise.
/// The first nonzero unknown of the chosen solution is normalized to 1.
pub fn solve_pairing(gamma: &[SeriesMatrix], levels: &[i64], w: i64) -> Result<(QMat, usize)> {
    let n = levels.len();
    let eps = sign_pow(w);
    // Unknowns: S_ij for i <= j with p_i + p_j = w; S_ji = eps S_ij.
    let mut unknown: HashMap<(usize, usize), (usize, Rational)> = HashMap::new();
    let mut partners: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut count = 0;
    for i in 0..n {
        for j in i..n {
            if levels[i] + levels[j] != w || (i == j && eps.is_negative()) {
                continue;
            }
            unknown.insert((i, j), (count, Rational::one()));
            if i != j {
                unknown.insert((j, i), (count, eps.clone()));
            }
            partners[i].push(j);
            if i != j {
                partners[j].push(i);
            }
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Singular("no admissible pairing entries".into()));
    }
    let mut ech = SparseEchelon::new(count);
    'outer: for g in gamma {
        // Sparse coefficient matrices per t-monomial.
        let mut by_mono: HashMap<MultiIndex, Vec<(usize, usize, Rational)>> = HashMap::new();
        for r in 0..n {
            for k in 0..n {
                for (e, c) in g.get(r, k).terms() {
                    by_mono.entry(e.clone()).or_default().push((r, k, c.clone()));
                }
            }
        }
        let mut monos: Vec<&MultiIndex> = by_mono.keys().collect();
        monos.sort();
        for e in monos {
            let entries = &by_mono[e];
            let mut cols: Vec<Vec<(usize, Rational)>> = vec![Vec::new(); n];
            let mut rows: Vec<Vec<(usize, Rational)>> = vec![Vec::new(); n];
            for (r, k, c) in entries {
                cols[*k].push((*r, c.clone()));
                rows[*r].push((*k, c.clone()));
            }
            // Equation (i, j): sum_k M_ki S_kj + sum_k S_ik M_kj = 0, for i <= j.
            for i in 0..n {
                let mut eqs: HashMap<usize, Vec<(usize, Rational)>> = HashMap::new();
                for (k, c) in &cols[i] {
                    for &j in &partners[*k] {
                        if j >= i {
                            let (u, sg) = &unknown[&(*k, j)];
                            eqs.entry(j).or_default().push((*u, c * sg));
                        }
                    }
                }
                for &k in &partners[i] {
                    let (u, sg) = &unknown[&(i, k)];
                    for (j, c) in &rows[k] {
                        if *j >= i {
                            eqs.entry(*j).or_default().push((*u, c * sg));
                        }
                    }
                }
                let mut keys: Vec<usize> = eqs.keys().copied().collect();
                keys.sort_unstable();
                for j in keys {
                    ech.insert(eqs.remove(&j).unwrap());
                    if ech.rank() + 1 == count {
                        break 'outer;
                    }
                }
            }
        }
    }
    let ns = ech.nullspace();
    let nullity = ns.len();
    if nullity == 0 {
        return Err(Error::Singular("no nonzero flat pairing exists".into()));
    }
    let assemble = |x: &[Rational]| -> QMat {
        let mut s = QMat::zeros(n, n);
        for (&(i, j), (u, sg)) in &unknown {
            if !x[*u].is_zero() {
                s.set(i, j, &x[*u] * sg);
            }
        }
        s
    };
    let mut candidates: Vec<Vec<Rational>> = ns.clone();
    let sum: Vec<Rational> = (0..count).map(|c| ns.iter().map(|v| v[c].clone()).sum()).collect();
    candidates.push(sum);
    for mut x in candidates {
        let Some(lead) = x.iter().find(|c| !c.is_zero()).cloned() else {
            continue;
        };
        for c in x.iter_mut() {
            *c /= &lead;
        }
        let s = assemble(&x);
        if s.inverse().is_some() {
            return Ok((s, nullity));
        }
    }
    Err(Error::Singular(format!(
        "no nondegenerate pairing among {nullity} solution directions"
    )))
}

/// Symmetric residue pairing on the integer-degree basis: the socle
/// coefficient of `a * b`.
pub fn residue_pairing(alg: &JacobiAlgebra) -> Result<QMat> {
    let degs = alg.integer_degrees();
    let top = alg.top_degree();
    let mut frame: Vec<(i64, usize)> = Vec::new();
    for &k in &degs {
        for i in 0..alg.dim(k) {
            frame.push((k, i));
        }
    }
    let n = frame.len();
    let mut r = QMat::zeros(n, n);
    for (a, &(ka, ia)) in frame.iter().enumerate() {
        for (b, &(kb, ib)) in frame.iter().enumerate() {
            if ka + kb != top {
                continue;
            }
            let mut va = vec![Rational::zero(); alg.dim(ka)];
            va[ia] = Rational::one();
            let mut vb = vec![Rational::zero(); alg.dim(kb)];
            vb[ib] = Rational::one();
            let (_, prod) = alg.multiply(ka, &va, kb, &vb)?;
            if let Some(c) = prod.first() {
                r.set(a, b, c.clone());
            }
        }
    }
    Ok(r)
}
