//! Universal unfoldings of flat pencils, solved order by order in the
//! unfolding parameters, with the injectivity and generation certificates.

use std::collections::VecDeque;
use std::fmt::Write as _;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::connection::{euler_integrate, flatness_residual, ConnectionPencil};
use crate::error::{Error, Result};
use crate::report::Report;
use crate::series::sparse::{SparseEchelon, SparseRow};
use crate::series::{vars, QMat, Rational, SeriesMatrix, TruncSeries, Vars};

/// Words in the operators `C_1(0), .., C_m(0)` (and `U(0)`) whose images of
/// the first frame vector are linearly independent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GcCertificate {
    pub dim: usize,
    pub with_u: bool,
    /// Operator indices, applied left to right; `m` stands for `U`.
    pub words: Vec<Vec<usize>>,
    pub labels: Vec<String>,
}

impl GcCertificate {
    pub fn spans(&self) -> bool {
        self.words.len() == self.dim
    }

    /// Dimension of the quotient the words fail to reach.
    pub fn deficiency(&self) -> usize {
        self.dim - self.words.len()
    }

    pub fn summary(&self) -> String {
        if self.spans() {
            format!("spanned by {}", self.labels.join(", "))
        } else {
            format!(
                "words reach dimension {} of {} (unspanned quotient of dimension {})",
                self.words.len(),
                self.dim,
                self.deficiency()
            )
        }
    }
}

fn sparse_entries(m: &QMat) -> Vec<Vec<(usize, Rational)>> {
    // Column-major: for each column j the nonzero (row, value) pairs.
    (0..m.cols())
        .map(|j| {
            (0..m.rows())
                .filter(|&i| !m.get(i, j).is_zero())
                .map(|i| (i, m.get(i, j).clone()))
                .collect()
        })
        .collect()
}

fn apply_sparse(op: &[Vec<(usize, Rational)>], v: &SparseRow) -> SparseRow {
    let mut out: SparseRow = Vec::new();
    for (j, c) in v {
        for (i, a) in &op[*j] {
            out.push((*i, a * c));
        }
    }
    crate::series::sparse::normalize_row(out)
}

fn word_label(word: &[usize], m: usize) -> String {
    let mut s = String::new();
    for &k in word.iter().rev() {
        if k == m {
            s.push_str("U*");
        } else {
            let _ = write!(s, "C{}*", k + 1);
        }
    }
    s.push('z');
    s
}

/// Breadth-first closure of the first frame vector under constant operators.
/// `ops[m]` is `U(0)` when it is included.
pub fn gc_words(ops: &[QMat], m: usize, n: usize) -> GcCertificate {
    let with_u = ops.len() > m;
    let sparse: Vec<_> = ops.iter().map(sparse_entries).collect();
    let mut ech = SparseEchelon::new(n);
    let mut words = Vec::new();
    let mut queue: VecDeque<(Vec<usize>, SparseRow)> = VecDeque::new();
    if n > 0 {
        let zeta: SparseRow = vec![(0, Rational::from_integer(1.into()))];
        ech.insert(zeta.clone());
        words.push(Vec::new());
        queue.push_back((Vec::new(), zeta));
    }
    while let Some((word, v)) = queue.pop_front() {
        if ech.rank() == n {
            break;
        }
        for (k, op) in sparse.iter().enumerate() {
            let img = apply_sparse(op, &v);
            if img.is_empty() {
                continue;
            }
            if ech.insert(img.clone()) {
                let mut w = word.clone();
                w.push(k);
                words.push(w.clone());
                queue.push_back((w, img));
            }
        }
    }
    let labels = words.iter().map(|w| word_label(w, m)).collect();
    GcCertificate {
        dim: n,
        with_u,
        words,
        labels,
    }
}

/// Generation of the fiber at the origin by the first frame vector.
pub fn gc_check(p: &ConnectionPencil, with_u: bool) -> GcCertificate {
    let m = p.tvars.len() + p.yvars.len();
    let mut ops: Vec<QMat> = p.higgs().iter().map(|c| c.eval_at_zero()).collect();
    if with_u {
        ops.push(p.u.eval_at_zero());
    }
    gc_words(&ops, m, p.rank())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IcCertificate {
    pub injective: bool,
    /// Basis of the relations `sum_i k_i C_i(0) e_1 = 0`.
    #[serde(with = "crate::series::json::qmat_serde")]
    pub kernel: QMat,
}

/// Injectivity of `X -> C_X(0) e_1` on the base tangent space.
pub fn ic_check(p: &ConnectionPencil) -> IcCertificate {
    let higgs = p.higgs();
    let m = higgs.len();
    let cols: Vec<Vec<Rational>> = higgs.iter().map(|c| c.eval_at_zero().col(0)).collect();
    let kernel = if m == 0 {
        Vec::new()
    } else {
        QMat::from_cols(&cols, p.rank()).nullspace()
    };
    IcCertificate {
        injective: kernel.is_empty(),
        kernel: if kernel.is_empty() {
            QMat::zeros(0, m)
        } else {
            QMat::from_rows(kernel)
        },
    }
}

/// Unfolding of a flat pencil over `t` with prescribed first columns.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnfoldProblem {
    pub base: ConnectionPencil,
    pub yvars: Vec<String>,
    /// Polynomials in `t ++ y` vanishing at `y = 0`; their higher terms are
    /// exact zeros.
    pub f: Vec<TruncSeries>,
    pub order: i32,
}

impl UnfoldProblem {
    pub fn all_vars(&self) -> Vars {
        let names: Vec<String> = self.base.tvars.iter().chain(&self.yvars).cloned().collect();
        vars(&names)
    }

    /// Linear first columns `f_i = sum_a K_ia y_a`.
    pub fn linear(base: ConnectionPencil, yvars: Vec<String>, k: &QMat, order: i32) -> Result<Self> {
        let names: Vec<String> = base.tvars.iter().chain(&yvars).cloned().collect();
        let all = vars(&names);
        let m = base.tvars.len();
        if k.rows() != base.rank() || k.cols() != yvars.len() {
            return Err(Error::Structural("first-column matrix has the wrong shape".into()));
        }
        let mut f = Vec::new();
        for i in 0..k.rows() {
            let mut s = TruncSeries::zero(&all, order + 1);
            for a in 0..k.cols() {
                s = s.add(&TruncSeries::var(&all, order + 1, m + a).scale(k.get(i, a)))?;
            }
            f.push(s);
        }
        Ok(UnfoldProblem { base, yvars, f, order })
    }

    fn validate(&self) -> Result<Vars> {
        self.base.validate()?;
        if !self.base.yvars.is_empty() {
            return Err(Error::Precondition("base pencil must not carry y variables".into()));
        }
        if self.f.len() != self.base.rank() {
            return Err(Error::Structural(format!(
                "{} first-column functions for rank {}",
                self.f.len(),
                self.base.rank()
            )));
        }
        if self.order < 0 {
            return Err(Error::Structural("order must be nonnegative".into()));
        }
        let all = self.all_vars();
        let mut seen = std::collections::BTreeSet::new();
        for v in all.iter() {
            if !seen.insert(v) {
                return Err(Error::Structural(format!("variable {v:?} appears twice")));
            }
        }
        let tv = vars(&self.base.tvars);
        for (i, fi) in self.f.iter().enumerate() {
            if **fi.vars() != *all {
                return Err(Error::Structural(format!("f_{} uses variables {:?}", i + 1, fi.vars())));
            }
            if !fi.restrict_to(&tv)?.is_zero() {
                return Err(Error::Precondition(format!("f_{} does not vanish at y = 0", i + 1)));
            }
        }
        Ok(all)
    }
}

/// Intermediate matrices of one induction step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub degree: u32,
    pub e: Vec<SeriesMatrix>,
    pub f: Vec<SeriesMatrix>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    Exact,
    /// Replaces `E_i` by the matrix unit `e_i e_1^T`.
    FirstColumnOnly,
}

/// Solves the unfolding and asserts all flatness residuals.
pub fn solve(problem: &UnfoldProblem) -> Result<ConnectionPencil> {
    Ok(solve_impl(problem, Mode::Exact, false)?.0)
}

pub fn solve_traced(problem: &UnfoldProblem) -> Result<(ConnectionPencil, Vec<TraceStep>)> {
    solve_impl(problem, Mode::Exact, true)
}

/// Negative control: uses `E_i = e_i e_1^T`, which has the right first
/// column but is not in the algebra. The output is not checked.
pub fn solve_without_correction(problem: &UnfoldProblem) -> Result<ConnectionPencil> {
    Ok(solve_impl(problem, Mode::FirstColumnOnly, false)?.0)
}

fn word_matrix(
    word: &[usize],
    ops: &[SeriesMatrix],
    vars: &Vars,
    order: i32,
    n: usize,
    ypos: &[usize],
    k: u32,
) -> Result<SeriesMatrix> {
    let mut acc = SeriesMatrix::identity(vars, order, n);
    for &o in word {
        acc = ops[o].mul(&acc)?.truncate_in(ypos, k);
    }
    Ok(acc)
}

/// Elements `E_i` of the algebra generated by `ops` with `E_i e_1 = e_i`.
fn algebra_basis(
    words: &[Vec<usize>],
    ops: &[SeriesMatrix],
    vars: &Vars,
    order: i32,
    n: usize,
    ypos: &[usize],
    k: u32,
) -> Result<Vec<SeriesMatrix>> {
    let wm: Vec<SeriesMatrix> = words
        .iter()
        .map(|w| word_matrix(w, ops, vars, order, n, ypos, k))
        .collect::<Result<_>>()?;
    let mut entries = Vec::with_capacity(n * n);
    for i in 0..n {
        for w in &wm {
            entries.push(w.get(i, 0).clone());
        }
    }
    let b = SeriesMatrix::from_entries(n, n, entries)?;
    let binv = b
        .inverse()
        .map_err(|e| Error::Certification(format!("generation fails at y-degree {k}: {e}")))?
        .truncate_in(ypos, k);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut e = SeriesMatrix::zeros(vars, order, n, n);
        for (r, w) in wm.iter().enumerate() {
            e = e.add(&w.scale_series(binv.get(r, i))?)?;
        }
        out.push(e.truncate_in(ypos, k));
    }
    Ok(out)
}

fn solve_impl(problem: &UnfoldProblem, mode: Mode, trace: bool) -> Result<(ConnectionPencil, Vec<TraceStep>)> {
    let all = problem.validate()?;
    let base = &problem.base;
    let n = base.rank();
    let m = base.tvars.len();
    let l = problem.yvars.len();
    let order = problem.order.min(base.order());
    let ypos: Vec<usize> = (m..m + l).collect();

    let res = flatness_residual(base)?;
    if let Some(id) = res.nonzero().first() {
        return Err(Error::Precondition(format!("base pencil is not flat: {id}")));
    }
    let gc = gc_check(base, true);
    if !gc.spans() {
        return Err(Error::Certification(format!("gc: {}", gc.summary())));
    }

    let lift = |x: &SeriesMatrix| -> Result<SeriesMatrix> { Ok(x.embed(&all)?.truncate(order)) };
    let mut c: Vec<SeriesMatrix> = base.c.iter().map(lift).collect::<Result<_>>()?;
    let mut u = lift(&base.u)?;
    let mut v = lift(&base.v)?;
    let mut w = lift(&base.w)?;
    let df: Vec<Vec<TruncSeries>> = (0..l)
        .map(|a| {
            problem
                .f
                .iter()
                .map(|fi| fi.with_exact_order(order + 1).partial(m + a))
                .collect()
        })
        .collect();

    let mut steps = Vec::new();
    let mut f: Vec<SeriesMatrix> = vec![SeriesMatrix::zeros(&all, order, n, n); l];
    for k in 0..=(order.max(0) as u32) {
        let e = match mode {
            Mode::FirstColumnOnly => (0..n).map(|i| SeriesMatrix::elementary(&all, order, n, i, 0)).collect(),
            Mode::Exact => {
                let mut ops: Vec<SeriesMatrix> = c.iter().map(|x| x.truncate_in(&ypos, k)).collect();
                ops.push(u.truncate_in(&ypos, k));
                algebra_basis(&gc.words, &ops, &all, order, n, &ypos, k)?
            }
        };
        for (a, fa) in f.iter_mut().enumerate() {
            let mut acc = SeriesMatrix::zeros(&all, order, n, n);
            for (i, ei) in e.iter().enumerate() {
                acc = acc.add(&ei.scale_series(&df[a][i])?)?;
            }
            *fa = acc.truncate_in(&ypos, k);
        }
        if trace {
            steps.push(TraceStep {
                degree: k,
                e: e.clone(),
                f: f.clone(),
            });
        }
        if k as i32 == order || l == 0 {
            break;
        }
        // Degree k + 1 in y from the y-derivatives at degree k.
        let at_k = |x: SeriesMatrix| x.partial_degree_part(&ypos, k);
        let step = |rhs: &dyn Fn(&SeriesMatrix) -> Result<SeriesMatrix>| -> Result<SeriesMatrix> {
            let derivs: Vec<(usize, SeriesMatrix)> = f
                .iter()
                .enumerate()
                .map(|(a, fa)| Ok((m + a, at_k(rhs(fa)?))))
                .collect::<Result<_>>()?;
            let refs: Vec<(usize, &SeriesMatrix)> = derivs.iter().map(|(p, d)| (*p, d)).collect();
            Ok(euler_integrate(&refs, &all, n)?.truncate(order))
        };
        let mut new_c = Vec::with_capacity(m);
        for (i, ci) in c.iter().enumerate() {
            new_c.push(ci.add(&step(&|fa: &SeriesMatrix| Ok(fa.partial(i)))?)?);
        }
        let du = step(&|fa: &SeriesMatrix| v.commutator(fa)?.sub(fa))?;
        let dv = step(&|fa: &SeriesMatrix| Ok(w.commutator(fa)?.neg()))?;
        let dw = step(&|fa: &SeriesMatrix| w.commutator(fa))?;
        c = new_c;
        u = u.add(&du)?.truncate(order);
        v = v.add(&dv)?.truncate(order);
        w = w.add(&dw)?.truncate(order);
    }
    let pencil = ConnectionPencil::new(
        base.tvars.clone(),
        problem.yvars.clone(),
        c,
        f.into_iter().map(|x| x.truncate(order)).collect(),
        u,
        v,
        w,
    )?;
    if mode == Mode::Exact {
        let res = flatness_residual(&pencil)?;
        if let Some(id) = res.nonzero().first() {
            return Err(Error::Certification(format!("unfolding residual {id} is nonzero")));
        }
        let fc = first_column_report(&pencil, problem)?;
        if !fc.is_empty() {
            return Err(Error::Certification(format!(
                "first_column: {:?}",
                fc.violations[0].detail
            )));
        }
    }
    Ok((pencil, steps))
}

/// `(F_a)_{i1} = df_i/dy_a` for every `a` and `i`.
pub fn first_column_report(p: &ConnectionPencil, problem: &UnfoldProblem) -> Result<Report> {
    let m = p.tvars.len();
    let mut rep = Report::new();
    for (a, fa) in p.f.iter().enumerate() {
        for (i, fi) in problem.f.iter().enumerate() {
            let want = fi.with_exact_order(fa.order() + 1).partial(m + a);
            let diff = fa.get(i, 0).sub(&want)?.truncate(fa.order());
            if !diff.is_zero() {
                rep.push(
                    "first_column",
                    format!("(F_{})_({},1) - df_{}/dy_{}: {diff}", a + 1, i + 1, i + 1, a + 1),
                );
            }
        }
    }
    Ok(rep)
}

/// Universal unfolding with its frame change and chart data.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniversalUnfolding {
    /// Columns are the new frame in old coordinates; the first is `zeta`.
    #[serde(with = "crate::series::json::qmat_serde")]
    pub frame: QMat,
    /// Frame vectors completing `C_i(0) zeta` to a basis, one per `y`.
    pub complement: Vec<usize>,
    pub problem: UnfoldProblem,
    pub pencil: ConnectionPencil,
    pub gc: GcCertificate,
    pub ic: IcCertificate,
    /// Linear part of `(A_11, .., A_n1)` at the origin; invertible.
    #[serde(with = "crate::series::json::qmat_serde")]
    pub psi_jacobian: QMat,
}

/// `T^{-1} X T` for every pencil matrix.
pub fn change_frame(p: &ConnectionPencil, t: &QMat) -> Result<ConnectionPencil> {
    let tinv = t
        .inverse()
        .ok_or_else(|| Error::Singular("frame change is singular".into()))?;
    let all = p.vars();
    let order = p.order();
    let (a, b) = (
        SeriesMatrix::from_qmat(&all, order, &tinv),
        SeriesMatrix::from_qmat(&all, order, t),
    );
    let conj = |x: &SeriesMatrix| -> Result<SeriesMatrix> { a.mul(x)?.mul(&b) };
    ConnectionPencil::new(
        p.tvars.clone(),
        p.yvars.clone(),
        p.c.iter().map(conj).collect::<Result<_>>()?,
        p.f.iter().map(conj).collect::<Result<_>>()?,
        conj(&p.u)?,
        conj(&p.v)?,
        conj(&p.w)?,
    )
}

/// Basis completion: `zeta` followed by the first standard vectors that
/// keep the columns independent.
pub fn frame_with_first(zeta: &[Rational]) -> Result<QMat> {
    let n = zeta.len();
    if zeta.iter().all(|x| x.is_zero()) {
        return Err(Error::Precondition("zeta is zero".into()));
    }
    let mut cols = vec![zeta.to_vec()];
    for k in 0..n {
        if cols.len() == n {
            break;
        }
        let mut e = vec![Rational::zero(); n];
        e[k] = Rational::from_integer(1.into());
        let mut trial = cols.clone();
        trial.push(e);
        if QMat::from_cols(&trial, n).rank() == trial.len() {
            cols = trial;
        }
    }
    Ok(QMat::from_cols(&cols, n))
}

pub fn universal_unfold(p: &ConnectionPencil, zeta: &[Rational], order: i32) -> Result<UniversalUnfolding> {
    if zeta.len() != p.rank() {
        return Err(Error::Structural(format!(
            "zeta has length {}, rank is {}",
            zeta.len(),
            p.rank()
        )));
    }
    let frame = frame_with_first(zeta)?;
    let rotated = change_frame(p, &frame)?;
    let ic = ic_check(&rotated);
    if !ic.injective {
        return Err(Error::Certification(format!("ic: kernel {}", ic.kernel)));
    }
    let gc = gc_check(&rotated, true);
    if !gc.spans() {
        return Err(Error::Certification(format!("gc: {}", gc.summary())));
    }
    let n = p.rank();
    let m = p.tvars.len();
    let mut span: Vec<Vec<Rational>> = rotated.c.iter().map(|c| c.eval_at_zero().col(0)).collect();
    let mut complement = Vec::new();
    for k in 0..n {
        if span.len() == n {
            break;
        }
        let mut e = vec![Rational::zero(); n];
        e[k] = Rational::from_integer(1.into());
        let mut trial = span.clone();
        trial.push(e);
        if QMat::from_cols(&trial, n).rank() == trial.len() {
            span = trial;
            complement.push(k);
        }
    }
    let l = complement.len();
    let yvars: Vec<String> = (1..=l).map(|a| format!("y{a}")).collect();
    if let Some(clash) = yvars.iter().find(|y| p.tvars.contains(y)) {
        return Err(Error::Structural(format!("base already uses variable {clash:?}")));
    }
    let mut kmat = QMat::zeros(n, l);
    for (a, &k) in complement.iter().enumerate() {
        kmat.set(k, a, Rational::from_integer(1.into()));
    }
    let problem = UnfoldProblem::linear(rotated, yvars, &kmat, order)?;
    let pencil = solve(&problem)?;
    let cols: Vec<Vec<Rational>> = pencil.higgs().iter().map(|c| c.eval_at_zero().col(0)).collect();
    let psi_jacobian = QMat::from_cols(&cols, n);
    if psi_jacobian.rank() != n {
        return Err(Error::Certification(
            "chart (A_11, .., A_n1) is not invertible at 0".into(),
        ));
    }
    debug_assert_eq!(m + l, n);
    Ok(UniversalUnfolding {
        frame,
        complement,
        problem,
        pencil,
        gc,
        ic,
        psi_jacobian,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point_pencil(u: &QMat) -> ConnectionPencil {
        let tv = vars::<String>(&[]);
        let n = u.rows();
        ConnectionPencil::over_t(
            Vec::new(),
            SeriesMatrix::from_qmat(&tv, 4, u),
            SeriesMatrix::zeros(&tv, 4, n, n),
            SeriesMatrix::zeros(&tv, 4, n, n),
        )
        .unwrap()
    }

    #[test]
    fn gc_point_example() {
        let p = point_pencil(&QMat::from_i64(&[&[0, 0], &[1, 1]]));
        let g = gc_check(&p, true);
        assert!(g.spans());
        assert_eq!(g.labels, vec!["z".to_string(), "U*z".to_string()]);
        let z = point_pencil(&QMat::zeros(2, 2));
        let g = gc_check(&z, true);
        assert!(!g.spans());
        assert_eq!(g.words.len(), 1);
        assert_eq!(g.deficiency(), 1);
    }

    #[test]
    fn ic_examples() {
        let p = point_pencil(&QMat::zeros(2, 2));
        assert!(ic_check(&p).injective);
        let tv = vars(&["t1", "t2"]);
        let c = SeriesMatrix::from_qmat(&tv, 2, &QMat::from_i64(&[&[0, 0], &[1, 0]]));
        let z = SeriesMatrix::zeros(&tv, 2, 2, 2);
        let p = ConnectionPencil::over_t(vec![c.clone(), c], z.clone(), z.clone(), z).unwrap();
        let ic = ic_check(&p);
        assert!(!ic.injective);
        assert_eq!(ic.kernel.rows(), 1);
        assert_eq!(ic.kernel.get(0, 0), &-ic.kernel.get(0, 1).clone());
    }

    #[test]
    fn point_example_first_order() {
        let u0 = QMat::from_i64(&[&[0, 0], &[1, 1]]);
        let p = point_pencil(&u0);
        let prob = UnfoldProblem::linear(p, vec!["y1".into(), "y2".into()], &QMat::identity(2), 4).unwrap();
        let (out, steps) = solve_traced(&prob).unwrap();
        assert_eq!(steps[0].e[0].eval_at_zero(), QMat::identity(2));
        assert_eq!(steps[0].e[1].eval_at_zero(), u0);
        let all = out.vars();
        let lin = out.u.truncate(1);
        let expect = SeriesMatrix::from_qmat(&all, 1, &u0)
            .sub(&SeriesMatrix::identity(&all, 1, 2).mul_var(0))
            .unwrap()
            .sub(&SeriesMatrix::from_qmat(&all, 1, &u0).mul_var(1))
            .unwrap()
            .truncate(1);
        assert_eq!(lin, expect);
        assert_eq!(out.f[0].eval_at_zero(), QMat::identity(2));
        assert_eq!(out.f[1].eval_at_zero(), u0);
    }

    #[test]
    fn zero_first_columns_give_trivial_extension() {
        let u0 = QMat::from_i64(&[&[0, 0], &[1, 1]]);
        let p = point_pencil(&u0);
        let prob = UnfoldProblem::linear(p, vec!["y".into()], &QMat::zeros(2, 1), 3).unwrap();
        let out = solve(&prob).unwrap();
        assert!(out.f[0].is_zero());
        assert!(out.u.is_constant());
        assert_eq!(out.u.eval_at_zero(), u0);
    }
}
