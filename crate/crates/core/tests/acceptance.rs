//! Acceptance suite: one pass/fail line per criterion.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{brute_force_unfold, corpus, cubic_ftype, example_ftype, random_ftype};
use frobenius_core::connection::{
    flatness_residual, ftype_from_structure_connection, pairing_extension_check, reduce_flatness, structure_connection,
};
use frobenius_core::frobstruct::{check_ftype_axioms, FrobeniusTypeStructure};
use frobenius_core::jacobi::{codim_one_instance, fermat, JacobiAlgebra, WeightSystem};
use frobenius_core::reconstruct::{
    compare_germs, euler_check, frobenius_via_unfolding, h2_reconstruct, wdvv_check, FrobeniusGermData, InitialData,
};
use frobenius_core::report::base_id;
use frobenius_core::series::{int, Rational, TruncSeries};
use frobenius_core::unfold::{first_column_report, solve, solve_without_correction};
use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const N: i32 = 4;
const K: usize = 4;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn e1(n: usize) -> Vec<Rational> {
    let mut z = vec![Rational::zero(); n];
    z[0] = int(1);
    z
}

fn init(f: FrobeniusTypeStructure) -> InitialData {
    let n = f.rank();
    InitialData::new(f, e1(n)).unwrap()
}

/// Monomials of degree `k` with every exponent at most `d - 2`: a basis of
/// the degree `k` part of the Fermat Jacobi algebra.
fn fermat_dim(nvars: usize, d: u32, k: u32) -> usize {
    fn count(vars_left: usize, cap: u32, k: u32) -> usize {
        if vars_left == 0 {
            return usize::from(k == 0);
        }
        (0..=cap.min(k)).map(|e| count(vars_left - 1, cap, k - e)).sum()
    }
    count(nvars, d - 2, k)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let (f, ws) = codim_one_instance();
    let alg = JacobiAlgebra::build(&f, &ws).map_err(|e| e.to_string())?;
    let prod: Rational = ws.weights().iter().map(|w| w.recip() - int(1)).product();
    ensure!(
        Rational::from_integer((alg.milnor() as i64).into()) == prod,
        "Milnor number {} differs from the weight product {prod}",
        alg.milnor()
    );
    let rep = alg.h2_generation_check();
    ensure!(
        rep.codim_at(2) == Some(1),
        "codimension at q=2 is {:?}",
        rep.codim_at(2)
    );
    for e in &rep.entries {
        ensure!(e.q == 2 || e.codim == 0, "codimension {} at q={}", e.codim, e.q);
    }
    let el = start.elapsed();
    ensure!(el < Duration::from_secs(60), "took {el:?}");
    Ok(format!("mu = {}, codimension 1 at q=2 only, {el:.2?}", alg.milnor()))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut done = Vec::new();
    for (nv, d) in [(2usize, 2u32), (3, 3), (4, 2), (4, 4), (5, 5)] {
        let ws = WeightSystem::homogeneous(nv, d as i64).map_err(|e| e.to_string())?;
        let alg = JacobiAlgebra::build(&fermat(nv, d), &ws).map_err(|e| e.to_string())?;
        ensure!(
            alg.milnor() == (d as usize - 1).pow(nv as u32),
            "mu = {} for n+1={nv}, d={d}",
            alg.milnor()
        );
        for k in 0..=alg.top_degree() {
            let expect = fermat_dim(nv, d, k as u32);
            ensure!(
                alg.dim(k) == expect,
                "n+1={nv}, d={d}: dim {} in degree {k}, expected {expect}",
                alg.dim(k)
            );
        }
        let rep = alg.h2_generation_check();
        ensure!(rep.passes(), "n+1={nv}, d={d}: {:?}", rep.entries);
        if (nv, d) == (5, 5) {
            let dims: Vec<usize> = (0..4).map(|q| alg.dim(5 * q)).collect();
            ensure!(dims == [1, 101, 101, 1], "quintic integer dims {dims:?}");
        }
        done.push(format!("({nv},{d})"));
    }
    let el = start.elapsed();
    ensure!(el < Duration::from_secs(300), "took {el:?}");
    Ok(format!(
        "(n+1, d) in {}: generated; quintic mu = 1024, dims (1,101,101,1), {el:.2?}",
        done.join(" ")
    ))
}

fn criterion_3() -> Outcome {
    let cases = corpus(N);
    ensure!(cases.len() >= 10, "corpus has {} pencils", cases.len());
    let mut families = BTreeSet::new();
    for c in &cases {
        let out = solve(&c.problem).map_err(|e| format!("{}: {e}", c.name))?;
        let res = flatness_residual(&out).map_err(|e| e.to_string())?;
        ensure!(res.all_zero(), "{}: nonzero {:?}", c.name, res.nonzero());
        families.extend(res.residuals.keys().map(|k| base_id(k).to_string()));
        let fc = first_column_report(&out, &c.problem).map_err(|e| e.to_string())?;
        ensure!(fc.is_empty(), "{}: first column {:?}", c.name, fc.ids());
        let s = reduce_flatness(&out).map_err(|e| e.to_string())?;
        ensure!(s.passes(), "{}: reduced system {:?}", c.name, s.to_report().ids());
    }
    ensure!(
        families.len() == 14,
        "only {} residual families exercised: {families:?}",
        families.len()
    );
    Ok(format!(
        "{} pencils, 14 residual families zero mod order {N}",
        cases.len()
    ))
}

fn criterion_4() -> Outcome {
    let cases = corpus(N);
    for c in &cases {
        let a = serde_json::to_string(&solve(&c.problem).map_err(|e| e.to_string())?).unwrap();
        let b = serde_json::to_string(&solve(&c.problem).map_err(|e| e.to_string())?).unwrap();
        ensure!(a == b, "{}: re-run differs", c.name);
    }
    let mut checked = 0;
    for order in 0..=2 {
        for c in corpus(order) {
            if c.problem.base.rank() > 3 {
                continue;
            }
            let fast = solve(&c.problem).map_err(|e| e.to_string())?;
            let slow = brute_force_unfold(&c.problem);
            ensure!(
                fast == slow.truncate(fast.order()),
                "{} at N={order}: differs from brute force",
                c.name
            );
            checked += 1;
        }
    }
    Ok(format!(
        "{} re-runs identical, {checked} brute-force comparisons at N <= 2",
        cases.len()
    ))
}

fn criterion_5() -> Outcome {
    let cases = corpus(N);
    let mut rejected = 0;
    for c in &cases {
        let out = solve(&c.problem).map_err(|e| e.to_string())?;
        let ext = pairing_extension_check(&out, &c.pairing, K).map_err(|e| e.to_string())?;
        ensure!(ext.certified(), "{}: {:?}", c.name, ext.report.ids());
        ensure!(ext.pole_coefficient.is_zero(), "{}: pole coefficient nonzero", c.name);
        if c.problem.base.rank() > 1 {
            let broken = solve_without_correction(&c.problem).map_err(|e| e.to_string())?;
            let bad = pairing_extension_check(&broken, &c.pairing, K).map_err(|e| e.to_string())?;
            ensure!(!bad.certified(), "{}: negative control certified", c.name);
            rejected += 1;
        }
    }
    Ok(format!(
        "{} pencils certified through K={K}, {rejected} negative controls rejected",
        cases.len()
    ))
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20261016);
    let count = 24;
    let mut ranks = BTreeSet::new();
    for i in 0..count {
        let f = random_ftype(&mut rng, 3);
        ensure!(f.rank() <= 5, "instance {i} has rank {}", f.rank());
        ensure!(check_ftype_axioms(&f).is_empty(), "instance {i} violates the axioms");
        let w = (i as i64 % 9) - 2;
        let (p, r) = structure_connection(&f, w).map_err(|e| e.to_string())?;
        let back = ftype_from_structure_connection(&p, &r).map_err(|e| e.to_string())?;
        ensure!(back == f, "instance {i} (w={w}) does not round-trip");
        ranks.insert(f.rank());
    }
    Ok(format!("{count} random instances, ranks {ranks:?}, identity"))
}

fn two_path_instances() -> Vec<(&'static str, i64, InitialData)> {
    let o = N + 1;
    vec![
        ("w=3", 3, init(example_ftype(3, &[], o))),
        ("w=4", 4, init(example_ftype(4, &[], o))),
        ("w=5 b2=1", 5, init(example_ftype(5, &[1], o))),
        ("w=5 b2=1+t", 5, init(example_ftype(5, &[1, 1], o))),
        ("fermat cubic", 3, init(cubic_ftype(o))),
    ]
}

fn criterion_7() -> Outcome {
    let mut slowest = Duration::ZERO;
    let list = two_path_instances();
    for (name, _, data) in &list {
        let start = Instant::now();
        let a = frobenius_via_unfolding(data, N).map_err(|e| format!("{name}: {e}"))?;
        let b = h2_reconstruct(data, N).map_err(|e| format!("{name}: {e}"))?;
        let el = start.elapsed();
        ensure!(el < Duration::from_secs(300), "{name} took {el:?}");
        slowest = slowest.max(el);
        let r = compare_germs(&a, &b);
        ensure!(r.is_empty(), "{name}: {:?}", r.ids());
        ensure!(
            serde_json::to_string(&a).unwrap() == serde_json::to_string(&b).unwrap(),
            "{name}: serializations differ"
        );
    }
    Ok(format!(
        "{} instances identical to order {N}, slowest {slowest:.2?}",
        list.len()
    ))
}

/// Adds 1 to the constant term of `(A_i)_{kj}`.
fn corrupt(g: &FrobeniusGermData, i: usize, k: usize, j: usize) -> FrobeniusGermData {
    let mut bad = g.clone();
    let one = TruncSeries::constant(&bad.vars, bad.order, int(1));
    let e = bad.a[i].get(k, j).add(&one).unwrap();
    bad.a[i].set(k, j, e).unwrap();
    bad
}

fn criterion_8() -> Outcome {
    let mut list = two_path_instances();
    list.push(("w=6 b2=2-t", 6, init(example_ftype(6, &[2, -1], N + 1))));
    list.push(("w=7 b2=b3=1+t", 7, init(example_ftype(7, &[1, 1], N + 1))));
    let mut germs = 0;
    let mut probes = 0;
    let mut named = BTreeSet::new();
    for (name, w, data) in &list {
        for germ in [frobenius_via_unfolding(data, N), h2_reconstruct(data, N)] {
            let germ = germ.map_err(|e| format!("{name}: {e}"))?;
            let r = wdvv_check(&germ);
            ensure!(r.is_empty(), "{name}: {:?}", r.ids());
            let r = euler_check(&germ, &germ.charge);
            ensure!(r.is_empty(), "{name}: {:?}", r.ids());
            ensure!(
                germ.degrees
                    .iter()
                    .all(|d| *d >= int(-1) && *d <= int(w - 3) && d.is_integer()),
                "{name}: degrees {:?}",
                germ.degrees
            );
            let zeros = germ.degrees.iter().filter(|d| d.is_zero()).count();
            ensure!(zeros == data.ftype.base_dim(), "{name}: {zeros} zero degrees");
            germs += 1;
        }
        let germ = h2_reconstruct(data, N).map_err(|e| e.to_string())?;
        for i in 0..germ.dim {
            for k in 0..germ.dim {
                for j in 0..germ.dim {
                    let bad = corrupt(&germ, i, k, j);
                    let mut r = wdvv_check(&bad);
                    r.extend(euler_check(&bad, &bad.charge));
                    ensure!(!r.is_empty(), "{name}: corrupted a_{}{}^{} passes", i + 1, j + 1, k + 1);
                    named.extend(r.ids());
                    probes += 1;
                }
            }
        }
    }
    Ok(format!(
        "{germs} germs clean; {probes} single-constant corruptions all reported, naming {}",
        named.into_iter().collect::<Vec<_>>().join(", ")
    ))
}

fn criterion_9() -> Outcome {
    let a = h2_reconstruct(&init(example_ftype(5, &[1], N + 1)), N).map_err(|e| e.to_string())?;
    let b = h2_reconstruct(&init(example_ftype(5, &[1, 1], N + 1)), N).map_err(|e| e.to_string())?;
    for (x, y) in a.a.iter().zip(&b.a) {
        for (pos, (s, t)) in x.entries().iter().zip(y.entries()).enumerate() {
            for k in 1..=N as u32 {
                if s.homogeneous_part(k) != t.homogeneous_part(k) {
                    let (r, c) = (pos / x.cols(), pos % x.cols());
                    return Ok(format!("germs differ in entry ({},{}) at order {k}", r + 1, c + 1));
                }
            }
        }
    }
    Err("structure constants agree at every order >= 1".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("generation codimension of the (1,1,1,2,2,2)/9 instance", criterion_1),
        ("generation for Fermat hypersurfaces", criterion_2),
        ("unfolding soundness on the corpus", criterion_3),
        ("unfolding determinism and brute-force oracle", criterion_4),
        ("pairing extension", criterion_5),
        ("structure connection round trip", criterion_6),
        ("two constructions of the germ agree", criterion_7),
        ("Frobenius axioms and negative controls", criterion_8),
        ("free coefficient changes the germ", criterion_9),
    ];
    let mut failed = 0;
    for (i, (title, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let el = start.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {} PASS  {title}: {detail} [{el:.2?}]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} FAIL  {title}: {detail} [{el:.2?}]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
