use frobenius_core::series::{int, vars, MultiIndex, Poly, QMat, SeriesMatrix, TruncSeries, Vars};
use proptest::prelude::*;

fn var_list() -> Vars {
    vars(&["t", "y", "s"])
}

fn arb_terms(maxdeg: u32) -> impl Strategy<Value = Vec<(Vec<u32>, i64, i64)>> {
    prop::collection::vec((prop::collection::vec(0..=maxdeg, 3), -5i64..=5, 1i64..=4), 0..8)
}

fn series(terms: &[(Vec<u32>, i64, i64)], order: i32) -> TruncSeries {
    TruncSeries::from_terms(
        &var_list(),
        order,
        terms
            .iter()
            .map(|(e, n, d)| (MultiIndex(e.clone()), frobenius_core::series::rat(*n, *d))),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_axioms(a in arb_terms(3), b in arb_terms(3), c in arb_terms(3), n in 0i32..5) {
        let (a, b, c) = (series(&a, n), series(&b, n), series(&c, n));
        prop_assert_eq!(a.mul(&b).unwrap().mul(&c).unwrap(), a.mul(&b.mul(&c).unwrap()).unwrap());
        prop_assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
        prop_assert_eq!(
            a.mul(&b.add(&c).unwrap()).unwrap(),
            a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap()
        );
    }

    #[test]
    fn mixed_partials_commute(a in arb_terms(4), n in 0i32..6, u in 0usize..3, v in 0usize..3) {
        let a = series(&a, n);
        prop_assert_eq!(a.partial(u).partial(v), a.partial(v).partial(u));
    }

    #[test]
    fn truncation_compatible_with_product(a in arb_terms(3), b in arb_terms(3), n in 0i32..5) {
        // Untruncated product via exact polynomials.
        let big = 12;
        let pa = series(&a, big);
        let pb = series(&b, big);
        let full = pa.mul(&pb).unwrap();
        prop_assert_eq!(full.truncate(n), pa.truncate(n).mul(&pb.truncate(n)).unwrap());
        prop_assert_eq!(pa.truncate(n).truncate(n), pa.truncate(n));

        let qa = Poly::from_terms(3, pa.terms().iter().map(|(e, c)| (e.clone(), c.clone()))).unwrap();
        let qb = Poly::from_terms(3, pb.terms().iter().map(|(e, c)| (e.clone(), c.clone()))).unwrap();
        let prod = TruncSeries::from_terms(&var_list(), n, qa.mul(&qb).terms().clone()).unwrap();
        prop_assert_eq!(prod, pa.truncate(n).mul(&pb.truncate(n)).unwrap());
    }

    #[test]
    fn unit_inverse(a in arb_terms(3), c0 in 1i64..4, n in 0i32..5) {
        let mut a = series(&a, n);
        let z = MultiIndex::zero(3);
        let shift = int(c0) - a.coeff(&z);
        a.add_term(z, shift);
        let inv = a.inverse().unwrap();
        prop_assert_eq!(a.mul(&inv).unwrap(), TruncSeries::constant(&var_list(), n, int(1)));
    }

    #[test]
    fn json_roundtrip(a in arb_terms(3), n in 0i32..5) {
        let a = series(&a, n);
        let text = serde_json::to_string(&a).unwrap();
        let back: TruncSeries = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(serde_json::to_string(&back).unwrap(), text);
        prop_assert_eq!(back, a);
    }

    #[test]
    fn matrix_product_associative(
        entries in prop::collection::vec(arb_terms(2), 12),
        n in 0i32..4
    ) {
        let mk = |k: usize| {
            SeriesMatrix::from_entries(2, 2, entries[4 * k..4 * k + 4].iter().map(|t| series(t, n)).collect()).unwrap()
        };
        let (a, b, c) = (mk(0), mk(1), mk(2));
        prop_assert_eq!(a.mul(&b).unwrap().mul(&c).unwrap(), a.mul(&b.mul(&c).unwrap()).unwrap());
        prop_assert_eq!(a.mul(&b).unwrap().transpose(), b.transpose().mul(&a.transpose()).unwrap());
        let jac = a.commutator(&b.commutator(&c).unwrap()).unwrap()
            .add(&b.commutator(&c.commutator(&a).unwrap()).unwrap()).unwrap()
            .add(&c.commutator(&a.commutator(&b).unwrap()).unwrap()).unwrap();
        prop_assert!(jac.is_zero());
    }
}

#[test]
fn constant_matrix_eval() {
    let v = var_list();
    let q = QMat::from_i64(&[&[1, 2], &[3, 4]]);
    assert_eq!(SeriesMatrix::from_qmat(&v, 3, &q).eval_at_zero(), q);
}
