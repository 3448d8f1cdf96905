#![allow(dead_code)]

use frobenius_core::connection::{pairing_extension_check, structure_connection, ConnectionPencil, PairingMatrix};
use frobenius_core::frobstruct::{filtration_to_ftype, jacobi_to_filtration, shift_family, FrobeniusTypeStructure};
use frobenius_core::jacobi::{fermat, JacobiAlgebra, WeightSystem};
use frobenius_core::report::base_id;
use frobenius_core::series::{
    int, monomials_of_degree, vars, MultiIndex, QMat, Rational, SeriesMatrix, TruncSeries, Vars,
};
use frobenius_core::unfold::{solve, universal_unfold, UnfoldProblem};
use num_traits::Zero;

/// A base pencil with its unfolding data and initial pairing.
pub struct Case {
    pub name: String,
    pub problem: UnfoldProblem,
    pub pairing: PairingMatrix,
}

pub fn series(vars: &Vars, order: i32, terms: &[(&[u32], i64)]) -> TruncSeries {
    TruncSeries::from_terms(
        vars,
        order,
        terms.iter().map(|(e, c)| (MultiIndex(e.to_vec()), int(*c))),
    )
    .unwrap()
}

pub fn t_poly(coeffs: &[i64], order: i32) -> TruncSeries {
    let tv = vars(&["t"]);
    TruncSeries::from_terms(
        &tv,
        order,
        coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| (MultiIndex(vec![k as u32]), int(*c))),
    )
    .unwrap()
}

fn point_pencil(u: &QMat, v: &QMat, order: i32) -> ConnectionPencil {
    let tv = vars::<String>(&[]);
    let n = u.rows();
    ConnectionPencil::over_t(
        Vec::new(),
        SeriesMatrix::from_qmat(&tv, order, u),
        SeriesMatrix::from_qmat(&tv, order, v),
        SeriesMatrix::zeros(&tv, order, n, n),
    )
    .unwrap()
}

fn ynames(l: usize) -> Vec<String> {
    (1..=l).map(|a| format!("y{a}")).collect()
}

pub fn example_ftype(w: i64, b2: &[i64], order: i32) -> FrobeniusTypeStructure {
    let nfree = ((w - 1) / 2 - 1).max(0) as usize;
    let free: Vec<TruncSeries> = (0..nfree).map(|_| t_poly(b2, order)).collect();
    filtration_to_ftype(&shift_family(w, &free, order).unwrap()).unwrap()
}

pub fn cubic_ftype(order: i32) -> FrobeniusTypeStructure {
    let ws = WeightSystem::homogeneous(3, 3).unwrap();
    let alg = JacobiAlgebra::build(&fermat(3, 3), &ws).unwrap();
    let jf = jacobi_to_filtration(&alg, None, order).unwrap();
    filtration_to_ftype(&jf.data).unwrap()
}

/// Rank-2 point structure with `V = diag(1/2, -1/2)`, `U = E_21`, `g` antidiagonal.
pub fn point_ftype(order: i32) -> FrobeniusTypeStructure {
    let tv = vars::<String>(&[]);
    FrobeniusTypeStructure::new(
        tv.clone(),
        Vec::new(),
        SeriesMatrix::from_qmat(&tv, order, &QMat::from_i64(&[&[0, 0], &[1, 0]])),
        QMat::from_rows(vec![
            vec![Rational::new(1.into(), 2.into()), int(0)],
            vec![int(0), Rational::new((-1).into(), 2.into())],
        ]),
        QMat::from_i64(&[&[0, 1], &[1, 0]]),
    )
    .unwrap()
}

fn structure_case(name: &str, f: &FrobeniusTypeStructure, w: i64, order: i32) -> Case {
    let (p, r) = structure_connection(f, w).unwrap();
    let mut zeta = vec![Rational::zero(); p.rank()];
    zeta[0] = int(1);
    let uu = universal_unfold(&p, &zeta, order).unwrap();
    assert_eq!(uu.frame, QMat::identity(p.rank()));
    Case {
        name: name.to_string(),
        problem: uu.problem,
        pairing: r,
    }
}

fn point_case(name: &str, u: &QMat, r0: &QMat, f: Vec<Vec<(Vec<u32>, i64)>>, l: usize, order: i32) -> Case {
    let n = u.rows();
    let base = point_pencil(u, &QMat::zeros(n, n), order);
    let yv = ynames(l);
    let all = vars(&yv);
    let f = f
        .into_iter()
        .map(|terms| {
            TruncSeries::from_terms(&all, order + 1, terms.into_iter().map(|(e, c)| (MultiIndex(e), int(c)))).unwrap()
        })
        .collect();
    Case {
        name: name.to_string(),
        problem: UnfoldProblem {
            base,
            yvars: yv,
            f,
            order,
        },
        pairing: PairingMatrix::constant(0, &vars::<String>(&[]), order, r0),
    }
}

/// Base pencils covering point bases, structure connections of the
/// example family and of the Fermat cubic, and nonlinear first columns.
pub fn corpus(order: i32) -> Vec<Case> {
    let u2 = QMat::from_i64(&[&[0, 0], &[1, 1]]);
    let r2 = QMat::from_i64(&[&[2, 1], &[1, 1]]);
    let u3 = QMat::from_i64(&[&[0, 1, 0], &[1, 0, 1], &[0, 1, 0]]);
    let mut out = vec![
        point_case(
            "point rank 2",
            &u2,
            &r2,
            vec![vec![(vec![1, 0], 1)], vec![(vec![0, 1], 1)]],
            2,
            order,
        ),
        point_case(
            "point rank 1",
            &QMat::from_i64(&[&[3]]),
            &QMat::identity(1),
            vec![vec![(vec![1], 1)]],
            1,
            order,
        ),
        point_case(
            "point rank 3",
            &u3,
            &QMat::identity(3),
            vec![
                vec![(vec![1, 0, 0], 1)],
                vec![(vec![0, 1, 0], 1)],
                vec![(vec![0, 0, 1], 1)],
            ],
            3,
            order,
        ),
        point_case(
            "point rank 2, nonlinear first columns",
            &u2,
            &r2,
            vec![
                vec![(vec![1, 0], 1), (vec![0, 2], 1)],
                vec![(vec![0, 1], 1), (vec![1, 1], -1)],
            ],
            2,
            order,
        ),
    ];
    let ext = order + 1;
    out.push(structure_case("example w=3", &example_ftype(3, &[], ext), 3, order));
    out.push(structure_case("example w=4", &example_ftype(4, &[], ext), 4, order));
    out.push(structure_case(
        "example w=5, b2=1",
        &example_ftype(5, &[1], ext),
        5,
        order,
    ));
    out.push(structure_case(
        "example w=5, b2=1+t",
        &example_ftype(5, &[1, 1], ext),
        5,
        order,
    ));
    out.push(structure_case(
        "example w=6, b2=2-t",
        &example_ftype(6, &[2, -1], ext),
        6,
        order,
    ));
    out.push(structure_case("fermat cubic", &cubic_ftype(ext), 3, order));
    out.push(structure_case("point structure w=1", &point_ftype(ext), 1, order));

    // Example w=4 with first columns depending on t and nonlinear in y.
    let mut c = structure_case(
        "example w=4, nonlinear first columns",
        &example_ftype(4, &[], ext),
        4,
        order,
    );
    let all = c.problem.all_vars();
    let o = order + 1;
    c.problem.f[0] = series(&all, o, &[(&[0, 1, 0], 1), (&[0, 2, 0], 1)]);
    c.problem.f[2] = series(&all, o, &[(&[0, 0, 1], 1), (&[1, 0, 1], 1)]);
    out.push(c);
    out.push(two_parameter_case(&out[0], order));
    out
}

/// The solved unfolding of `seed` taken as a base over its own parameters,
/// unfolded once more in a new direction.
fn two_parameter_case(seed: &Case, order: i32) -> Case {
    let mut p = seed.problem.clone();
    p.order = order + 1;
    let solved = solve(&p).unwrap();
    let ext = pairing_extension_check(&solved, &seed.pairing, order.max(0) as usize + 4).unwrap();
    let base =
        ConnectionPencil::over_t(solved.f.clone(), solved.u.clone(), solved.v.clone(), solved.w.clone()).unwrap();
    let k = QMat::from_i64(&[&[1], &[0]]);
    Case {
        name: format!("{}, unfolded over two base parameters", seed.name),
        problem: UnfoldProblem::linear(base, vec!["y3".into()], &k, order).unwrap(),
        pairing: ext.pairing,
    }
}

/// Flattened coefficient vector of a matrix on the given monomials, keeping
/// only monomials within the matrix's order.
fn coeffs_on(m: &SeriesMatrix, monos: &[MultiIndex], out: &mut Vec<Rational>) {
    for e in m.entries() {
        for mono in monos {
            if mono.total_degree() as i32 <= m.order() {
                out.push(e.coeff(mono));
            }
        }
    }
}

#[derive(Clone, Copy)]
enum Slot {
    C(usize),
    F(usize),
    U,
    V,
    W,
}

struct State {
    c: Vec<SeriesMatrix>,
    f: Vec<SeriesMatrix>,
    u: SeriesMatrix,
    v: SeriesMatrix,
    w: SeriesMatrix,
}

impl State {
    fn slot(&mut self, s: Slot) -> &mut SeriesMatrix {
        match s {
            Slot::C(i) => &mut self.c[i],
            Slot::F(a) => &mut self.f[a],
            Slot::U => &mut self.u,
            Slot::V => &mut self.v,
            Slot::W => &mut self.w,
        }
    }

    fn pencil(&self, p: &UnfoldProblem) -> ConnectionPencil {
        ConnectionPencil::new(
            p.base.tvars.clone(),
            p.yvars.clone(),
            self.c.clone(),
            self.f.clone(),
            self.u.clone(),
            self.v.clone(),
            self.w.clone(),
        )
        .unwrap()
    }
}

fn bump(m: &mut SeriesMatrix, i: usize, j: usize, mono: &MultiIndex, delta: &Rational) {
    let mut e = m.get(i, j).clone();
    e.add_term(mono.clone(), delta.clone());
    m.set(i, j, e).unwrap();
}

/// Generic solve of the flatness system and the first-column contract, one
/// `y`-degree at a time, for all unknown coefficients at once. The linear
/// map is read off by evaluating the residuals on unit vectors.
pub fn brute_force_unfold(p: &UnfoldProblem) -> ConnectionPencil {
    let n = p.base.rank();
    let m = p.base.tvars.len();
    let l = p.yvars.len();
    let order = p.order;
    let all = p.all_vars();
    let ypos: Vec<usize> = (m..m + l).collect();
    let monos: Vec<MultiIndex> = (0..=order as u32).flat_map(|d| monomials_of_degree(m + l, d)).collect();
    let lift = |x: &SeriesMatrix| x.embed(&all).unwrap().truncate(order);
    let mut st = State {
        c: p.base.c.iter().map(lift).collect(),
        f: vec![SeriesMatrix::zeros(&all, order, n, n); l],
        u: lift(&p.base.u),
        v: lift(&p.base.v),
        w: lift(&p.base.w),
    };
    let dfs: Vec<Vec<TruncSeries>> = (0..l)
        .map(|a| {
            p.f.iter()
                .map(|fi| fi.with_exact_order(order + 1).partial(m + a))
                .collect()
        })
        .collect();
    for k in 0..=order as u32 {
        let mut unknowns: Vec<(Slot, usize, usize, MultiIndex)> = Vec::new();
        let mut slots: Vec<(Slot, u32)> = (0..l).map(|a| (Slot::F(a), k)).collect();
        if (k as i32) < order {
            slots.extend((0..m).map(|i| (Slot::C(i), k + 1)));
            slots.extend([(Slot::U, k + 1), (Slot::V, k + 1), (Slot::W, k + 1)]);
        }
        for (s, deg) in slots {
            for i in 0..n {
                for j in 0..n {
                    for mono in &monos {
                        if mono.partial_degree(&ypos) == deg {
                            unknowns.push((s, i, j, mono.clone()));
                        }
                    }
                }
            }
        }
        let eval = |st: &State| -> Vec<Rational> {
            let pencil = st.pencil(p);
            let res = frobenius_core::connection::flatness_residual(&pencil).unwrap();
            let mut out = Vec::new();
            for (id, r) in &res.residuals {
                let target = if base_id(id) == "f_closed" {
                    if k == 0 {
                        continue;
                    }
                    k - 1
                } else {
                    k
                };
                coeffs_on(&r.partial_degree_part(&ypos, target), &monos, &mut out);
            }
            for (a, fa) in st.f.iter().enumerate() {
                for i in 0..n {
                    let d = fa.get(i, 0).sub(&dfs[a][i]).unwrap().partial_degree_part(&ypos, k);
                    for mono in &monos {
                        if mono.total_degree() as i32 <= order {
                            out.push(d.coeff(mono));
                        }
                    }
                }
            }
            out
        };
        let r0 = eval(&st);
        let one = int(1);
        let mut cols = Vec::with_capacity(unknowns.len());
        for (s, i, j, mono) in &unknowns {
            bump(st.slot(*s), *i, *j, mono, &one);
            let r = eval(&st);
            bump(st.slot(*s), *i, *j, mono, &-one.clone());
            cols.push(r.iter().zip(&r0).map(|(a, b)| a - b).collect::<Vec<_>>());
        }
        if unknowns.is_empty() {
            assert!(r0.iter().all(|x| x.is_zero()), "inconsistent at y-degree {k}");
            continue;
        }
        let jac = QMat::from_cols(&cols, r0.len());
        assert_eq!(jac.rank(), unknowns.len(), "solution not unique at y-degree {k}");
        let rhs: Vec<Rational> = r0.iter().map(|x| -x.clone()).collect();
        let z = jac
            .solve(&rhs)
            .unwrap_or_else(|| panic!("inconsistent at y-degree {k}"));
        for ((s, i, j, mono), val) in unknowns.iter().zip(&z) {
            if !val.is_zero() {
                bump(st.slot(*s), *i, *j, mono, val);
            }
        }
    }
    st.pencil(p)
}

fn small(rng: &mut impl rand::Rng) -> Rational {
    int(rng.gen_range(-3..=3))
}

fn random_qmat(rng: &mut impl rand::Rng, n: usize) -> QMat {
    QMat::from_rows((0..n).map(|_| (0..n).map(|_| small(rng)).collect()).collect())
}

/// Unit lower triangular frame change.
fn random_unipotent(rng: &mut impl rand::Rng, n: usize) -> QMat {
    let mut t = QMat::identity(n);
    for i in 0..n {
        for j in 0..i {
            t.set(i, j, small(rng));
        }
    }
    t
}

/// `T^{-1} X T` on the Higgs field, `U` and `V`; `T^T g T` on the metric.
pub fn conjugate_ftype(f: &FrobeniusTypeStructure, t: &QMat) -> FrobeniusTypeStructure {
    let tinv = t.inverse().unwrap();
    let order = f.order();
    let a = SeriesMatrix::from_qmat(&f.tvars, order, &tinv);
    let b = SeriesMatrix::from_qmat(&f.tvars, order, t);
    let conj = |x: &SeriesMatrix| a.mul(x).unwrap().mul(&b).unwrap();
    FrobeniusTypeStructure::new(
        f.tvars.clone(),
        f.c.iter().map(conj).collect(),
        conj(&f.u),
        tinv.mul(&f.v).mul(t),
        t.transpose().mul(&f.g).mul(t),
    )
    .unwrap()
}

/// Random Frobenius type structures of rank at most 5: constant ones over a
/// point (`V = g^{-1} K`, `U = g^{-1} S` with `K` skew and `S` symmetric),
/// and example-family ones with random free functions, a scalar `U` shift
/// and a random unipotent frame change.
pub fn random_ftype(rng: &mut impl rand::Rng, order: i32) -> FrobeniusTypeStructure {
    if rng.gen_bool(0.5) {
        let n = rng.gen_range(1..=5);
        let g = loop {
            let a = random_qmat(rng, n);
            let g = a.add(&a.transpose());
            if g.inverse().is_some() {
                break g;
            }
        };
        let a = random_qmat(rng, n);
        let k = a.sub(&a.transpose());
        let b = random_qmat(rng, n);
        let s = b.add(&b.transpose());
        let gi = g.inverse().unwrap();
        let tv = vars::<String>(&[]);
        FrobeniusTypeStructure::new(
            tv.clone(),
            Vec::new(),
            SeriesMatrix::from_qmat(&tv, order, &gi.mul(&s)),
            gi.mul(&k),
            g,
        )
        .unwrap()
    } else {
        let w = rng.gen_range(3..=6);
        let nfree = ((w - 1) / 2 - 1).max(0) as usize;
        let free: Vec<TruncSeries> = (0..nfree)
            .map(|_| {
                let mut c: Vec<i64> = (0..3).map(|_| rng.gen_range(-3..=3)).collect();
                if c[0] == 0 {
                    c[0] = 1;
                }
                t_poly(&c, order)
            })
            .collect();
        let f = filtration_to_ftype(&shift_family(w, &free, order).unwrap()).unwrap();
        let n = f.rank();
        let lambda = small(rng);
        let shift = SeriesMatrix::from_qmat(&f.tvars, order, &QMat::identity(n).scale(&lambda));
        let shifted = FrobeniusTypeStructure::new(
            f.tvars.clone(),
            f.c.clone(),
            f.u.add(&shift).unwrap(),
            f.v.clone(),
            f.g.clone(),
        )
        .unwrap();
        conjugate_ftype(&shifted, &random_unipotent(rng, n))
    }
}
