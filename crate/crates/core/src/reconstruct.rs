//! Frobenius manifold germs from Frobenius type structures. One route runs
//! through the structure connection and its universal unfolding; the other
//! recovers the structure constants weight by weight from the degree-zero
//! part when `U = 0`. Both land in the same flat coordinates, so their
//! outputs can be compared entry by entry.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::connection::{potential_matrix, structure_connection, ConnectionPencil};
use crate::error::{Error, Result};
use crate::frobstruct::FrobeniusTypeStructure;
use crate::report::{compact, Report};
use crate::series::json::{qmat_serde, rat_serde, rat_vec_serde, vars_serde};
use crate::series::rational::int;
use crate::series::{invert_series_map, vars, MultiIndex, QMat, Rational, SeriesMatrix, TruncSeries, Vars};
use crate::unfold::{frame_with_first, universal_unfold};

/// A Frobenius type structure with the vector that becomes the unit field.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InitialData {
    pub ftype: FrobeniusTypeStructure,
    #[serde(with = "rat_vec_serde")]
    pub zeta: Vec<Rational>,
}

impl InitialData {
    pub fn new(ftype: FrobeniusTypeStructure, zeta: Vec<Rational>) -> Result<Self> {
        let d = InitialData { ftype, zeta };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        self.ftype.validate()?;
        if self.zeta.len() != self.ftype.rank() {
            return Err(Error::Structural(format!(
                "zeta has length {}, rank is {}",
                self.zeta.len(),
                self.ftype.rank()
            )));
        }
        if self.zeta.iter().all(|z| z.is_zero()) {
            return Err(Error::Precondition("zeta is zero".into()));
        }
        Ok(())
    }

    /// `d` with `V zeta = (d/2) zeta`.
    pub fn charge(&self) -> Result<Rational> {
        self.validate()?;
        let vz = self.ftype.v.mul_vec(&self.zeta);
        let k = self.zeta.iter().position(|z| !z.is_zero()).unwrap();
        let lambda = &vz[k] / &self.zeta[k];
        if vz.iter().zip(&self.zeta).any(|(a, z)| *a != &lambda * z) {
            return Err(Error::Certification("ec: zeta is not an eigenvector of V".into()));
        }
        Ok(lambda * int(2))
    }

    /// The frame starting with `zeta` and the structure written in it.
    pub fn rotated(&self) -> Result<(QMat, FrobeniusTypeStructure)> {
        self.validate()?;
        let t = frame_with_first(&self.zeta)?;
        Ok((t.clone(), conjugate(&self.ftype, &t)?))
    }
}

fn conjugate(f: &FrobeniusTypeStructure, t: &QMat) -> Result<FrobeniusTypeStructure> {
    let tinv = t
        .inverse()
        .ok_or_else(|| Error::Singular("frame change is singular".into()))?;
    let order = f.order();
    let a = SeriesMatrix::from_qmat(&f.tvars, order, &tinv);
    let b = SeriesMatrix::from_qmat(&f.tvars, order, t);
    let conj = |x: &SeriesMatrix| -> Result<SeriesMatrix> { a.mul(x)?.mul(&b) };
    FrobeniusTypeStructure::new(
        f.tvars.clone(),
        f.c.iter().map(conj).collect::<Result<_>>()?,
        conj(&f.u)?,
        tinv.mul(&f.v).mul(t),
        t.transpose().mul(&f.g).mul(t),
    )
}

/// Germ of a Frobenius manifold in flat coordinates `x_1..x_n`, with
/// `x_1` dual to the unit field.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrobeniusGermData {
    pub dim: usize,
    #[serde(with = "vars_serde")]
    pub vars: Vars,
    /// Multiplication matrices: `(A_i)_{kj}` is the coefficient of
    /// `d_k` in `d_i o d_j`.
    pub a: Vec<SeriesMatrix>,
    #[serde(with = "qmat_serde")]
    pub g: QMat,
    /// Euler field `E = sum_i (-d_i x_i + c_i) d/dx_i`: the `d_i`.
    #[serde(with = "rat_vec_serde")]
    pub degrees: Vec<Rational>,
    /// The constants `c_i`; all zero when `E` vanishes at the origin.
    #[serde(with = "rat_vec_serde")]
    pub euler_shift: Vec<Rational>,
    /// `d` with `Lie_E g = (2 - d) g`.
    #[serde(with = "rat_serde")]
    pub charge: Rational,
    pub potential: TruncSeries,
    pub order: i32,
}

impl FrobeniusGermData {
    /// Scales the metric (and the potential) so that the first nonzero
    /// entry of its first row is 1.
    pub fn normalize(&mut self) {
        let Some(j) = (0..self.dim).find(|&j| !self.g.get(0, j).is_zero()) else {
            return;
        };
        let s = self.g.get(0, j).recip();
        self.g = self.g.scale(&s);
        self.potential = self.potential.scale(&s);
    }

    /// `E(f)` for a series `f` in the germ's coordinates.
    pub fn euler_apply(&self, f: &TruncSeries) -> Result<TruncSeries> {
        let terms = f.terms().iter().map(|(e, c)| {
            let k: Rational = e.0.iter().zip(&self.degrees).map(|(&m, d)| -d * int(m as i64)).sum();
            (e.clone(), c * k)
        });
        let mut out = TruncSeries::from_terms(f.vars(), f.order(), terms)?;
        for (l, c) in self.euler_shift.iter().enumerate() {
            if !c.is_zero() {
                out = out.add(&f.partial(l).scale(c))?;
            }
        }
        Ok(out)
    }

    fn metric(&self) -> SeriesMatrix {
        SeriesMatrix::from_qmat(&self.vars, self.order, &self.g)
    }
}

fn xvars(n: usize) -> Vars {
    let names: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    vars(&names)
}

/// Third derivatives `c_ijk = g(d_i o d_j, d_k)`, indexed `[i][k][j]` as the
/// entries of `g A_i`.
fn third_derivatives(f: &FrobeniusGermData) -> Result<Vec<SeriesMatrix>> {
    let g = f.metric();
    f.a.iter().map(|a| g.mul(a)).collect()
}

/// Symmetry defects of the third-derivative tensor.
fn tensor_asymmetry(c: &[SeriesMatrix], n: usize) -> Result<Vec<String>> {
    let mut bad = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let x = c[i].get(k, j);
                if !x.sub(c[j].get(k, i))?.is_zero() || !x.sub(c[i].get(j, k))?.is_zero() {
                    bad.push(format!("c_{}{}{}", i + 1, j + 1, k + 1));
                }
            }
        }
    }
    Ok(bad)
}

/// The potential `P` with `d_i d_j d_k P = g(d_i o d_j, d_k)`, vanishing to
/// second order at the origin. Known through order `order + 3`.
pub fn potential_integrate(f: &FrobeniusGermData) -> Result<TruncSeries> {
    let n = f.dim;
    let c = third_derivatives(f)?;
    let bad = tensor_asymmetry(&c, n)?;
    if !bad.is_empty() {
        return Err(Error::Certification(format!(
            "third-derivative tensor is not symmetric at {}",
            bad.join(", ")
        )));
    }
    // sum x_i x_j x_k c_ijk on a homogeneous piece of degree p is
    // p (p - 1) (p - 2) times the potential.
    let top = f.order + 3;
    let mut t = TruncSeries::zero(&f.vars, top);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let e = c[i].get(k, j);
                if !e.is_zero() {
                    t = t.add(&e.mul_var(i).mul_var(j).mul_var(k))?;
                }
            }
        }
    }
    let mut out = TruncSeries::zero(&f.vars, top);
    for p in 3..=top.max(2) {
        let denom = int(p as i64 * (p as i64 - 1) * (p as i64 - 2));
        out = out.add(&t.homogeneous_part(p as u32).scale(&denom.recip()))?;
    }
    Ok(out)
}

/// Commutativity, associativity, unit, symmetry, potentiality, metric
/// invariance and agreement with the stored potential.
pub fn wdvv_check(f: &FrobeniusGermData) -> Report {
    let mut rep = Report::new();
    if let Err(e) = wdvv_into(f, &mut rep) {
        rep.push("shape", e.to_string());
    }
    rep
}

fn wdvv_into(f: &FrobeniusGermData, rep: &mut Report) -> Result<()> {
    let n = f.dim;
    if f.a.len() != n || f.vars.len() != n || f.g.rows() != n {
        return Err(Error::Structural("germ dimensions disagree".into()));
    }
    let id = SeriesMatrix::identity(&f.vars, f.order, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let label = format!("[A_{}, A_{}]", i + 1, j + 1);
            rep.require_zero("structure_commute", &label, &f.a[i].commutator(&f.a[j])?);
        }
    }
    for i in 0..n {
        for j in 0..n {
            let mut rhs = SeriesMatrix::zeros(&f.vars, f.order, n, n);
            for l in 0..n {
                let c = f.a[i].get(l, j);
                if !c.is_zero() {
                    rhs = rhs.add(&f.a[l].scale_series(c)?)?;
                }
            }
            let label = format!("A_{} A_{} - sum_l a_{}{}^l A_l", i + 1, j + 1, i + 1, j + 1);
            rep.require_zero("associativity", &label, &f.a[i].mul(&f.a[j])?.sub(&rhs)?);
        }
    }
    rep.require_zero("unit", "A_1 - 1", &f.a[0].sub(&id)?);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let d = f.a[i].get(k, j).sub(f.a[j].get(k, i))?;
                if !d.is_zero() {
                    rep.push(
                        "symmetry",
                        format!("a_{}{}^{} - a_{}{}^{} = {d}", i + 1, j + 1, k + 1, j + 1, i + 1, k + 1),
                    );
                }
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let d = f.a[j].partial(i).sub(&f.a[i].partial(j))?;
            rep.require_zero(
                "potentiality",
                &format!("d_{} A_{} - d_{} A_{}", i + 1, j + 1, j + 1, i + 1),
                &d,
            );
        }
    }
    let c = third_derivatives(f)?;
    for (i, ci) in c.iter().enumerate() {
        rep.require_zero(
            "metric_invariance",
            &format!("g A_{} - (g A_{})^T", i + 1, i + 1),
            &ci.sub(&ci.transpose())?,
        );
    }
    if f.potential.vars() == &f.vars {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let d3 = f.potential.partial(i).partial(j).partial(k);
                    let diff = d3.sub(c[i].get(k, j))?.truncate(f.order);
                    if !diff.is_zero() {
                        rep.push(
                            "potential",
                            format!(
                                "d_{}d_{}d_{} P - c_{}{}{} = {diff}",
                                i + 1,
                                j + 1,
                                k + 1,
                                i + 1,
                                j + 1,
                                k + 1
                            ),
                        );
                    }
                }
            }
        }
    } else {
        rep.push("potential", "potential uses other variables");
    }
    Ok(())
}

/// Homogeneity of the structure constants and of the metric under the
/// Euler field, with `Lie_E g = (2 - dconst) g`.
pub fn euler_check(f: &FrobeniusGermData, dconst: &Rational) -> Report {
    let mut rep = Report::new();
    if let Err(e) = euler_into(f, dconst, &mut rep) {
        rep.push("shape", e.to_string());
    }
    rep
}

fn euler_into(f: &FrobeniusGermData, dconst: &Rational, rep: &mut Report) -> Result<()> {
    let n = f.dim;
    if f.degrees.len() != n || f.euler_shift.len() != n {
        return Err(Error::Structural("Euler data has the wrong length".into()));
    }
    if f.degrees[0] != -Rational::one() {
        rep.push("unit_degree", format!("d_1 = {}, expected -1", f.degrees[0]));
    }
    let shifted = f.euler_shift.iter().any(|c| !c.is_zero());
    let ord = if shifted { f.order - 1 } else { f.order };
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let a = f.a[i].get(k, j);
                let w = Rational::one() + &f.degrees[i] + &f.degrees[j] - &f.degrees[k];
                let diff = f.euler_apply(a)?.sub(&a.scale(&w))?.truncate(ord);
                if !diff.is_zero() {
                    rep.push(
                        "grading",
                        format!(
                            "E(a_{}{}^{}) - ({w}) a_{}{}^{} = {diff}",
                            i + 1,
                            j + 1,
                            k + 1,
                            i + 1,
                            j + 1,
                            k + 1
                        ),
                    );
                }
            }
        }
    }
    let target = dconst - int(2);
    for i in 0..n {
        for j in 0..n {
            if !f.g.get(i, j).is_zero() && &f.degrees[i] + &f.degrees[j] != target {
                rep.push(
                    "metric_homogeneity",
                    format!(
                        "g_{}{} != 0 but d_{} + d_{} = {} != {target}",
                        i + 1,
                        j + 1,
                        i + 1,
                        j + 1,
                        &f.degrees[i] + &f.degrees[j]
                    ),
                );
            }
        }
    }
    Ok(())
}

/// Differences between two germs after metric normalization.
pub fn compare_germs(a: &FrobeniusGermData, b: &FrobeniusGermData) -> Report {
    let mut rep = Report::new();
    if a.dim != b.dim || a.vars != b.vars {
        rep.push("dimension", format!("{:?} vs {:?}", a.vars, b.vars));
        return rep;
    }
    let (mut a, mut b) = (a.clone(), b.clone());
    a.normalize();
    b.normalize();
    let ord = a.order.min(b.order);
    for i in 0..a.dim {
        match a.a[i].truncate(ord).sub(&b.a[i].truncate(ord)) {
            Ok(d) => rep.require_zero("structure_constants", &format!("A_{}", i + 1), &d),
            Err(e) => rep.push("structure_constants", e.to_string()),
        }
    }
    if a.g != b.g {
        rep.push("metric", format!("{} vs {}", a.g, b.g));
    }
    if a.degrees != b.degrees {
        rep.push("degrees", "Euler degrees differ");
    }
    if a.euler_shift != b.euler_shift {
        rep.push("euler_shift", "Euler constants differ");
    }
    if a.charge != b.charge {
        rep.push("charge", format!("{} vs {}", a.charge, b.charge));
    }
    if a.potential.truncate(ord + 3) != b.potential.truncate(ord + 3) {
        rep.push("potential", "potentials differ");
    }
    rep
}

fn finish(mut germ: FrobeniusGermData) -> Result<FrobeniusGermData> {
    germ.normalize();
    germ.potential = potential_integrate(&germ)?;
    let mut rep = wdvv_check(&germ);
    rep.extend(euler_check(&germ, &germ.charge));
    if !rep.is_empty() {
        return Err(Error::Certification(format!(
            "synthesized germ violates {:?}",
            rep.ids()
        )));
    }
    Ok(germ)
}

fn check_order(f: &FrobeniusTypeStructure, order: i32) -> Result<()> {
    if f.order() < order + 1 {
        return Err(Error::Precondition(format!(
            "germ to order {order} needs the structure to order {}, have {}",
            order + 1,
            f.order()
        )));
    }
    Ok(())
}

/// Germ through the universal unfolding of the structure connection: flat
/// coordinates `x = -A e_1` with `dA` the Higgs field, multiplication
/// `d_i o = -C_{d_i}` and Euler field `U e_1`.
pub fn frobenius_via_unfolding(init: &InitialData, order: i32) -> Result<FrobeniusGermData> {
    let d = init.charge()?;
    let f = &init.ftype;
    check_order(f, order)?;
    let (p, _) = structure_connection(f, 0)?;
    let uu = universal_unfold(&p, &init.zeta, order + 1)?;
    let pencil = &uu.pencil;
    let n = pencil.rank();
    let xv = xvars(n);
    let pot = potential_matrix(pencil)?;
    let phi: Vec<TruncSeries> = (0..n).map(|j| pot.get(j, 0).neg()).collect();
    let s = invert_series_map(&phi, &xv)?;
    let composed: Vec<SeriesMatrix> = pencil.higgs().iter().map(|x| x.compose(&s)).collect::<Result<_>>()?;
    let mut a = Vec::with_capacity(n);
    for k in 0..n {
        let mut acc = SeriesMatrix::zeros(&xv, order, n, n);
        for (si, x) in composed.iter().enumerate() {
            let ds = s[si].partial(k);
            if !ds.is_zero() {
                acc = acc.sub(&x.scale_series(&ds)?)?;
            }
        }
        a.push(acc.truncate(order));
    }

    let frame = &uu.frame;
    let tinv = frame.inverse().expect("frame is invertible");
    let vt = tinv.mul(&f.v).mul(frame);
    let shift = (int(2) - &d) / int(2);
    let mut degrees = Vec::with_capacity(n);
    let mut euler_shift = Vec::with_capacity(n);
    for (j, e) in pencil.u.col(0).iter().enumerate() {
        let e = e.compose(&s)?;
        let c = e.constant_term();
        let lin = e.coeff(&MultiIndex::unit(n, j));
        let mut rest = e.clone();
        rest.add_term(MultiIndex::zero(n), -c.clone());
        rest.add_term(MultiIndex::unit(n, j), -lin.clone());
        if !rest.is_zero() {
            return Err(Error::Certification(format!(
                "Euler field component {} is not c - d x_{}: {rest}",
                j + 1,
                j + 1
            )));
        }
        degrees.push(-lin);
        euler_shift.push(c);
    }
    let de = QMat::from_rows(
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { -&degrees[i] } else { Rational::zero() })
                    .collect()
            })
            .collect(),
    );
    let expected = vt.add(&QMat::identity(n).scale(&shift));
    if de != expected {
        return Err(Error::Certification(format!(
            "Euler derivative {de} differs from V + (2 - d)/2 = {expected}"
        )));
    }
    finish(FrobeniusGermData {
        dim: n,
        vars: xv.clone(),
        a,
        g: frame.transpose().mul(&f.g).mul(frame),
        degrees,
        euler_shift,
        charge: d,
        potential: TruncSeries::zero(&xv, order + 3),
        order,
    })
}

/// Which generation hypothesis the weight recursion relies on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hypothesis {
    /// Degree-zero fields generate every degree below half the top one;
    /// higher entries come from symmetry and the metric.
    #[default]
    Weak,
    /// Degree-zero fields generate the whole algebra.
    Strong,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct H2Options {
    pub hypothesis: Hypothesis,
    /// Scan candidate products in reverse order when choosing generators.
    pub reverse_pairs: bool,
}

/// Integer grading of the frame read off from `V`.
struct Graded {
    frame: QMat,
    f: FrobeniusTypeStructure,
    charge: Rational,
    weight: i64,
    degrees: Vec<i64>,
    zset: Vec<usize>,
    pset: Vec<usize>,
}

fn graded_setup(init: &InitialData) -> Result<Graded> {
    let charge = init.charge()?;
    if !charge.is_integer() {
        return Err(Error::Precondition(format!("charge {charge} is not an integer")));
    }
    let weight = charge.to_integer().try_into().unwrap_or(i64::MAX).saturating_add(2);
    if weight < 2 {
        return Err(Error::Precondition(format!("weight {weight} is below 2")));
    }
    let (frame, f) = init.rotated()?;
    if !f.u.is_zero() {
        return Err(Error::Precondition("weight recursion needs U = 0".into()));
    }
    if !f.v.is_diagonal() {
        return Err(Error::Precondition(
            "V is not diagonal in the frame starting with zeta".into(),
        ));
    }
    let n = f.rank();
    let shift = (int(2) - &charge) / int(2);
    let mut degrees = Vec::with_capacity(n);
    for j in 0..n {
        let dj = -(f.v.get(j, j) + &shift);
        if !dj.is_integer() {
            return Err(Error::Certification(format!(
                "degree {dj} of frame vector {} is not an integer",
                j + 1
            )));
        }
        let dj: i64 = dj.to_integer().try_into().unwrap_or(i64::MAX);
        if dj < -1 || dj > weight - 3 || (dj == -1) != (j == 0) {
            return Err(Error::Certification(format!(
                "degree {dj} of frame vector {} is outside the admissible range",
                j + 1
            )));
        }
        degrees.push(dj);
    }
    let zset: Vec<usize> = (0..n).filter(|&j| degrees[j] == 0).collect();
    let pset: Vec<usize> = (0..n).filter(|&j| degrees[j] > 0).collect();
    if zset.len() != f.base_dim() {
        return Err(Error::Certification(format!(
            "ic: {} degree-zero directions for a {}-dimensional base",
            zset.len(),
            f.base_dim()
        )));
    }
    Ok(Graded {
        frame,
        f,
        charge,
        weight,
        degrees,
        zset,
        pset,
    })
}

/// `A_a` on the degree-zero submanifold, for `a` of degree zero, as
/// series in all flat coordinates. Also returns `x_Z(t)`.
fn degree_zero_fields(gs: &Graded, xv: &Vars) -> Result<Vec<SeriesMatrix>> {
    let f = &gs.f;
    let n = f.rank();
    let m = f.base_dim();
    let order = f.order();
    let zero = SeriesMatrix::zeros(&f.tvars, order, n, n);
    let p = ConnectionPencil::over_t(f.c.clone(), zero.clone(), zero.clone(), zero)?;
    let pot = potential_matrix(&p)?;
    for j in (0..n).filter(|j| !gs.zset.contains(j)) {
        if !pot.get(j, 0).is_zero() {
            return Err(Error::Certification(format!(
                "C e_1 has a component along frame vector {} of nonzero degree",
                j + 1
            )));
        }
    }
    let znames: Vec<String> = gs.zset.iter().map(|&j| xv[j].clone()).collect();
    let zv = vars(&znames);
    let phi: Vec<TruncSeries> = gs.zset.iter().map(|&j| pot.get(j, 0).neg()).collect();
    let t = invert_series_map(&phi, &zv)
        .map_err(|e| Error::Certification(format!("ic: degree-zero chart is not invertible ({e})")))?;
    let c_at: Vec<SeriesMatrix> = f.c.iter().map(|c| c.compose(&t)).collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(m);
    for a in 0..m {
        let mut acc = SeriesMatrix::zeros(&zv, order, n, n);
        for (i, c) in c_at.iter().enumerate() {
            let dt = t[i].partial(a);
            if !dt.is_zero() {
                acc = acc.sub(&c.scale_series(&dt)?)?;
            }
        }
        out.push(acc.embed(xv)?);
    }
    Ok(out)
}

/// Per degree `D > 0`: how much of degree `D` the products of degree-zero
/// fields with degree `D - 1` reach at the origin.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationCertificate {
    pub weight: i64,
    pub degrees: Vec<i64>,
    /// `(D, dim of degree D, dimension reached)`.
    pub levels: Vec<(i64, usize, usize)>,
    /// Every degree is reached.
    pub strong: bool,
    /// Every degree `D` with `2 D < weight - 4` is reached.
    pub weak: bool,
}

fn classes(gs: &Graded) -> BTreeMap<i64, Vec<usize>> {
    let mut out: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for &j in &gs.pset {
        out.entry(gs.degrees[j]).or_default().push(j);
    }
    out
}

/// Candidate rows `(a, b)` of the generation system for degree `dd`, with
/// their values at the origin.
fn candidate_rows(gs: &Graded, a0: &[QMat], dd: i64, ks: &[usize]) -> Vec<((usize, usize), Vec<Rational>)> {
    let n = gs.degrees.len();
    let mut out = Vec::new();
    for (zi, &a) in gs.zset.iter().enumerate() {
        for b in (0..n).filter(|&b| gs.degrees[b] == dd - 1) {
            let row: Vec<Rational> = ks.iter().map(|&k| a0[zi].get(k, b).clone()).collect();
            out.push(((a, b), row));
        }
    }
    out
}

pub fn generation_certificate(init: &InitialData) -> Result<GenerationCertificate> {
    let gs = graded_setup(init)?;
    let xv = xvars(gs.f.rank());
    let a0: Vec<QMat> = degree_zero_fields(&gs, &xv)?.iter().map(|a| a.eval_at_zero()).collect();
    let mut levels = Vec::new();
    for (dd, ks) in classes(&gs) {
        let rows: Vec<Vec<Rational>> = candidate_rows(&gs, &a0, dd, &ks).into_iter().map(|(_, r)| r).collect();
        let reached = if rows.is_empty() {
            0
        } else {
            QMat::from_rows(rows).rank()
        };
        levels.push((dd, ks.len(), reached));
    }
    let strong = levels.iter().all(|&(_, k, r)| k == r);
    let weak = levels
        .iter()
        .filter(|&&(dd, _, _)| 2 * dd < gs.weight - 4)
        .all(|&(_, k, r)| k == r);
    Ok(GenerationCertificate {
        weight: gs.weight,
        degrees: gs.degrees,
        levels,
        strong,
        weak,
    })
}

pub fn h2_reconstruct(init: &InitialData, order: i32) -> Result<FrobeniusGermData> {
    h2_reconstruct_with(init, order, &H2Options::default())
}

/// Germ from the degree-zero data by recursion on the weight
/// `sum_j m_j d_j` of monomials in the positive-degree coordinates:
/// degree-zero fields from `d_j A_a = d_a A_j`, positive-degree fields
/// from generation, or from symmetry and the metric above the generated
/// range.
pub fn h2_reconstruct_with(init: &InitialData, order: i32, opts: &H2Options) -> Result<FrobeniusGermData> {
    let gs = graded_setup(init)?;
    check_order(&gs.f, order)?;
    let n = gs.f.rank();
    let w = gs.weight;
    let xv = xvars(n);
    let zero = SeriesMatrix::zeros(&xv, order, n, n);
    let mut a = vec![zero.clone(); n];
    a[0] = SeriesMatrix::identity(&xv, order, n);
    for (zi, f) in degree_zero_fields(&gs, &xv)?.into_iter().enumerate() {
        a[gs.zset[zi]] = f.truncate(order);
    }
    let weights: Vec<i64> = gs.degrees.iter().map(|&d| d.max(0)).collect();
    let wt = |e: &MultiIndex| e.weighted_degree(&weights);
    let classes = classes(&gs);
    let dmax = gs.pset.iter().map(|&j| gs.degrees[j]).max().unwrap_or(0);
    let wmax = order.max(0) as i64 * dmax;
    let generated = |dd: i64| opts.hypothesis == Hypothesis::Strong || 2 * dd < w - 4;
    let known = |l: usize| gs.degrees[l] <= 0 || generated(gs.degrees[l]);
    let top = (0..n).find(|&r| gs.degrees[r] == w - 3);
    let g = &gs.f.g;

    let a0: Vec<QMat> = gs.zset.iter().map(|&z| a[z].eval_at_zero()).collect();
    let mut solvers: BTreeMap<i64, (Vec<(usize, usize)>, SeriesMatrix)> = BTreeMap::new();
    for (&dd, ks) in &classes {
        if !generated(dd) {
            continue;
        }
        let mut cands = candidate_rows(&gs, &a0, dd, ks);
        if opts.reverse_pairs {
            cands.reverse();
        }
        let mut chosen: Vec<(usize, usize)> = Vec::new();
        let mut rows: Vec<Vec<Rational>> = Vec::new();
        for (pair, row) in cands {
            if rows.len() == ks.len() {
                break;
            }
            let mut trial = rows.clone();
            trial.push(row);
            if QMat::from_rows(trial.clone()).rank() == trial.len() {
                rows = trial;
                chosen.push(pair);
            }
        }
        if rows.len() < ks.len() {
            return Err(Error::Certification(format!(
                "generation fails in degree {dd}: products reach {} of {} dimensions (unspanned {})",
                rows.len(),
                ks.len(),
                ks.len() - rows.len()
            )));
        }
        let entries: Vec<TruncSeries> = chosen
            .iter()
            .flat_map(|&(az, b)| ks.iter().map(move |&k| (az, b, k)))
            .map(|(az, b, k)| a[az].get(k, b).clone())
            .collect();
        let minv = SeriesMatrix::from_entries(ks.len(), ks.len(), entries)?.inverse()?;
        solvers.insert(dd, (chosen, minv));
    }

    for big_w in 0..=wmax {
        let at_w = |m: &SeriesMatrix| m.filter_terms(|e| wt(e) == big_w);
        if big_w > 0 {
            for &az in &gs.zset {
                let mut acc = zero.clone();
                for &j in &gs.pset {
                    let dj = gs.degrees[j];
                    if dj <= big_w {
                        let part = a[j].partial(az).filter_terms(|e| wt(e) == big_w - dj);
                        acc = acc.add(&part.mul_var(j).truncate(order))?;
                    }
                }
                let piece = acc.divide_by_partial_degree(&gs.pset)?;
                a[az] = a[az].add(&piece)?;
            }
        }
        for (&dd, ks) in &classes {
            if let Some((pairs, minv)) = solvers.get(&dd) {
                let mut rhs = Vec::with_capacity(pairs.len());
                for &(az, b) in pairs {
                    let mut r = at_w(&a[az].mul(&a[b])?);
                    for &k2 in gs.pset.iter().filter(|&&k2| gs.degrees[k2] > dd) {
                        let coef = a[az].get(k2, b);
                        if !coef.is_zero() {
                            r = r.sub(&at_w(&a[k2].scale_series(coef)?))?;
                        }
                    }
                    rhs.push(r);
                }
                for (ki, &k) in ks.iter().enumerate() {
                    let mut acc = zero.clone();
                    for (ri, r) in rhs.iter().enumerate() {
                        let c = minv.get(ki, ri);
                        if !c.is_zero() {
                            acc = acc.add(&at_w(&r.scale_series(c)?))?;
                        }
                    }
                    a[k] = a[k].add(&acc)?;
                }
            } else {
                for &k in ks {
                    let mut piece = zero.clone();
                    for l in 0..n {
                        if known(l) {
                            for r in 0..n {
                                let v = a[l].get(r, k).filter_terms(|e| wt(e) == big_w);
                                piece.set(r, l, v)?;
                            }
                        } else if big_w == 0 && gs.degrees[k] + gs.degrees[l] == w - 4 {
                            let r0 = top.ok_or_else(|| Error::Certification("no frame vector of top degree".into()))?;
                            let v = g.get(l, k) / g.get(r0, 0);
                            piece.set(r0, l, TruncSeries::constant(&xv, order, v))?;
                        }
                    }
                    a[k] = a[k].add(&piece)?;
                }
            }
        }
    }

    let degrees: Vec<Rational> = gs.degrees.iter().map(|&d| int(d)).collect();
    finish(FrobeniusGermData {
        dim: n,
        vars: xv.clone(),
        a,
        g: gs.frame.transpose().mul(&init.ftype.g).mul(&gs.frame),
        degrees,
        euler_shift: vec![Rational::zero(); n],
        charge: gs.charge,
        potential: TruncSeries::zero(&xv, order + 3),
        order,
    })
}

/// Compares the germ on `{x_j = 0 : d_j != 0}` with the Higgs field of the
/// initial data, pulled back along `x_Z = -(A e_1)_Z`.
pub fn restriction_report(germ: &FrobeniusGermData, init: &InitialData) -> Result<Report> {
    let (_, f) = init.rotated()?;
    let n = germ.dim;
    let m = f.base_dim();
    let order = germ.order.min(f.order());
    let zset: Vec<usize> = (0..n).filter(|&j| germ.degrees[j].is_zero()).collect();
    let mut rep = Report::new();
    if zset.len() != m {
        rep.push(
            "restriction",
            format!("{} degree-zero coordinates for a {m}-dimensional base", zset.len()),
        );
        return Ok(rep);
    }
    let zero = SeriesMatrix::zeros(&f.tvars, f.order(), n, n);
    let pot = potential_matrix(&ConnectionPencil::over_t(
        f.c.clone(),
        zero.clone(),
        zero.clone(),
        zero,
    )?)?;
    let subs: Vec<TruncSeries> = (0..n)
        .map(|j| {
            if zset.contains(&j) {
                pot.get(j, 0).neg()
            } else {
                TruncSeries::zero(&f.tvars, order + 1)
            }
        })
        .collect();
    let pulled: Vec<SeriesMatrix> = zset.iter().map(|&z| germ.a[z].compose(&subs)).collect::<Result<_>>()?;
    for i in 0..m {
        let mut acc = SeriesMatrix::zeros(&f.tvars, order, n, n);
        for (zi, p) in pulled.iter().enumerate() {
            let dx = subs[zset[zi]].partial(i);
            if !dx.is_zero() {
                acc = acc.sub(&p.scale_series(&dx)?)?;
            }
        }
        let diff = acc.truncate(order).sub(&f.c[i].truncate(order))?;
        if !diff.is_zero() {
            rep.push("restriction", format!("C_{} differs by {}", i + 1, compact(&diff)));
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::rational::rat;

    fn point_init(u: i64, g: i64, order: i32) -> InitialData {
        let tv = vars::<String>(&[]);
        let f = FrobeniusTypeStructure::new(
            tv.clone(),
            Vec::new(),
            SeriesMatrix::from_qmat(&tv, order, &QMat::from_i64(&[&[u]])),
            QMat::zeros(1, 1),
            QMat::from_i64(&[&[g]]),
        )
        .unwrap();
        InitialData::new(f, vec![int(1)]).unwrap()
    }

    #[test]
    fn rank_one_point_gives_cubic_potential() {
        let germ = frobenius_via_unfolding(&point_init(3, 2, 4), 3).unwrap();
        assert_eq!(germ.dim, 1);
        assert_eq!(germ.a[0], SeriesMatrix::identity(&germ.vars, 3, 1));
        assert_eq!(germ.degrees, vec![int(-1)]);
        assert_eq!(germ.euler_shift, vec![int(3)]);
        assert_eq!(germ.charge, int(0));
        // Normalized metric 1, potential x^3 / 6.
        assert_eq!(germ.g, QMat::identity(1));
        let x3 = TruncSeries::var(&germ.vars, 6, 0).pow(3).unwrap().scale(&rat(1, 6));
        assert_eq!(germ.potential, x3);
    }

    #[test]
    fn potential_of_constant_algebra() {
        // C[x]/(x^2) with g antidiagonal: P = x1^2 x2 / 2.
        let xv = xvars(2);
        let germ = FrobeniusGermData {
            dim: 2,
            vars: xv.clone(),
            a: vec![
                SeriesMatrix::identity(&xv, 2, 2),
                SeriesMatrix::from_qmat(&xv, 2, &QMat::from_i64(&[&[0, 0], &[1, 0]])),
            ],
            g: QMat::from_i64(&[&[0, 1], &[1, 0]]),
            degrees: vec![int(-1), int(0)],
            euler_shift: vec![int(0), int(0)],
            charge: int(1),
            potential: TruncSeries::zero(&xv, 5),
            order: 2,
        };
        let p = potential_integrate(&germ).unwrap();
        let expect = TruncSeries::from_terms(&xv, 5, [(MultiIndex(vec![2, 1]), rat(1, 2))]).unwrap();
        assert_eq!(p, expect);
        let mut full = germ.clone();
        full.potential = p;
        assert!(wdvv_check(&full).is_empty());
        assert!(euler_check(&full, &int(1)).is_empty());
        assert!(euler_check(&full, &int(2)).mentions("metric_homogeneity"));
    }

    #[test]
    fn asymmetric_tensor_is_rejected() {
        let xv = xvars(2);
        let germ = FrobeniusGermData {
            dim: 2,
            vars: xv.clone(),
            a: vec![
                SeriesMatrix::identity(&xv, 1, 2),
                SeriesMatrix::from_qmat(&xv, 1, &QMat::from_i64(&[&[0, 0], &[1, 1]])),
            ],
            g: QMat::from_i64(&[&[0, 1], &[1, 0]]),
            degrees: vec![int(-1), int(0)],
            euler_shift: vec![int(0), int(0)],
            charge: int(1),
            potential: TruncSeries::zero(&xv, 4),
            order: 1,
        };
        assert!(matches!(potential_integrate(&germ), Err(Error::Certification(_))));
    }

    #[test]
    fn charge_requires_eigenvector() {
        let tv = vars::<String>(&[]);
        let f = FrobeniusTypeStructure::new(
            tv.clone(),
            Vec::new(),
            SeriesMatrix::zeros(&tv, 2, 2, 2),
            QMat::from_rows(vec![vec![rat(1, 2), int(0)], vec![int(0), rat(-1, 2)]]),
            QMat::from_i64(&[&[0, 1], &[1, 0]]),
        )
        .unwrap();
        let good = InitialData::new(f.clone(), vec![int(1), int(0)]).unwrap();
        assert_eq!(good.charge().unwrap(), int(1));
        let bad = InitialData::new(f, vec![int(1), int(1)]).unwrap();
        assert!(matches!(bad.charge(), Err(Error::Certification(_))));
    }
}
