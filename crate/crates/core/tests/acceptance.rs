//! One pass/fail line per acceptance criterion. The exit status is nonzero
//! only when a criterion fails that is not listed as a known failure.

use std::process::ExitCode;
use std::time::Instant;

use num_traits::Zero;

use sandwich_core::invariants::{delta_from_pairings, delta_from_deltas, delta_on_x, semigroup_at_q};
use sandwich_core::linalg::{Int, Rational};
use sandwich_core::oracle::{
    case_cartier_criteria, case_flag_independence, case_projection_formula, case_semigroup,
    case_step_orders, case_structural, case_unloading_oracle, check_against_oracle,
    last_multiplicities_outside, random_flag_pair, run_suite, CaseFn, Mutation,
    OracleAnswer, RandomClusterSpec, SuiteResult, ORACLE_BOUND,
};
use sandwich_core::principality::{
    all_integral, decompose, ideal_cluster_qc, intersection_from_pairings, is_cartier,
    mumford_divisor,
};
use sandwich_core::flags::{build_flag, Flag};
use sandwich_core::scene::{parse_scene, Scene};
use sandwich_core::surface::build_surface;

type Check = std::result::Result<String, String>;

enum Verdict {
    Pass(String),
    Fail(String),
    /// Fails only in a clause recorded as unattainable.
    Known(String),
}

impl From<Check> for Verdict {
    fn from(c: Check) -> Self {
        match c {
            Ok(d) => Verdict::Pass(d),
            Err(d) => Verdict::Fail(d),
        }
    }
}

fn ints(xs: &[i64]) -> Vec<Int> {
    xs.iter().map(|&x| Int::from(x)).collect()
}

fn rats(xs: &[(i64, i64)]) -> Vec<Rational> {
    xs.iter().map(|&(n, d)| Rational::new(n.into(), d.into())).collect()
}

fn ensure(ok: bool, what: &str) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what.to_string())
    }
}

fn scene(text: &str) -> std::result::Result<Scene, String> {
    parse_scene(text).map_err(|e| e.to_string())
}

fn suite(name: &str, spec: RandomClusterSpec, seeds: u64, case: CaseFn) -> SuiteResult {
    let seeds: Vec<u64> = (0..seeds).collect();
    run_suite(name, &spec, &seeds, case)
}

fn suite_check(results: &[SuiteResult]) -> Check {
    let mut parts = Vec::new();
    for r in results {
        if let Some(f) = r.failures.first() {
            return Err(format!(
                "{}: {} failures, first at seed {} with {} points: {}",
                r.name,
                r.failures.len(),
                f.seed,
                f.max_points,
                f.message
            ));
        }
        parts.push(format!("{}: {} passed, {} inconclusive", r.name, r.passed, r.inconclusive));
    }
    Ok(parts.join("; "))
}

fn four_factor_decomposition() -> Check {
    let l = vec![ints(&[1, 1, 2, 2]), ints(&[1, 4, 4, 4]), ints(&[2, 4, 12, 10]), ints(&[2, 4, 10, 12])];
    let a = decompose(&l, &ints(&[9, 21, 42, 44])).ok_or("no solution")?;
    ensure(a == rats(&[(1, 1), (2, 1), (1, 1), (2, 1)]), "coefficients differ from (1,2,1,2)")?;
    let s = scene(include_str!("fixtures/four_factors.scene"))?;
    let surface = build_surface(&s.ideal_cluster().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    ensure(surface.l_vectors() == l, "the scene does not realize the four L-vectors")?;
    let v = is_cartier(&surface, s.curve("C").map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    ensure(v.by_coefficients && v.coefficients == a, "coefficient criterion is not integral")?;
    Ok("a = (1,2,1,2), integral".into())
}

fn pairing_difference() -> Check {
    let x = intersection_from_pairings(&Int::from(88), &Int::from(82));
    ensure(x == Int::from(6), "88 - 82 is not 6")?;
    Ok("88 - 82 = 6".into())
}

fn local_identity() -> Check {
    let a = decompose(&[ints(&[2, 2, 2]), ints(&[2, 4, 2])], &ints(&[4, 6, 4])).ok_or("no solution")?;
    ensure(a == rats(&[(1, 1), (1, 1)]) && all_integral(&a), "coefficients are not (1,1)")?;
    Ok("(4,6,4) = (2,2,2) + (2,4,2), locally principal".into())
}

fn delta_arithmetic() -> Check {
    ensure(
        delta_from_pairings(&Int::from(176), &Int::from(105), &Int::from(41)) == Int::from(30),
        "176 - 105 - 41 is not 30",
    )?;
    ensure(delta_from_deltas(&Int::from(33), &Int::from(28)) == Int::from(5), "33 - 28 is not 5")?;
    Ok("176 - 105 - 41 = 30, 33 - 28 = 5".into())
}

fn satellite_pipeline() -> Check {
    let s = scene(include_str!("fixtures/satellite_321.scene"))?;
    let k = s.ideal_cluster().map_err(|e| e.to_string())?;
    ensure(
        check_against_oracle(&k, &[false; 3], ORACLE_BOUND).map_err(|e| e.to_string())?
            == OracleAnswer::Minimum(vec![3, 5, 9]),
        "the ideal's values are not the oracle minimum",
    )?;
    let surface = build_surface(&k).map_err(|e| e.to_string())?;
    let [q] = surface.singularities() else {
        return Err(format!("{} singularities", surface.singularities().len()));
    };
    ensure(q.t_q == [0] && q.o_q == 0, "T_Q or O_Q differs from {O}")?;
    ensure(q.nu_q == ints(&[4, 1, 0]), "K_Q differs from (4,1,0)")?;
    ensure(q.b_q == [1, 2], "B_Q differs from {p1,p2}")?;
    ensure(q.multiplicity == 3, "multiplicity is not 3")?;
    let split: Int = q.b_q.iter().map(|&p| k.multiplicities()[p].clone()).sum();
    ensure(split == Int::from(3), "3 is not the sum over B_Q")?;
    Ok("T_Q = O_Q = O, K_Q = (4,1,0), B_Q = {p1,p2}, mult 3 = 2 + 1".into())
}

fn smooth_branch_pipeline() -> Check {
    let s = scene(include_str!("fixtures/satellite_321_branch.scene"))?;
    let surface = build_surface(&s.ideal_cluster().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let d = s.curve("delta").map_err(|e| e.to_string())?;
    let v = is_cartier(&surface, d).map_err(|e| e.to_string())?;
    ensure(!v.by_coefficients && !v.by_ideal_cluster && !v.by_mumford, "some criterion says Cartier")?;
    ensure(v.coefficients == rats(&[(0, 1), (1, 3)]), "a differs from (0,1/3)")?;
    let qc = ideal_cluster_qc(&surface, d).map_err(|e| e.to_string())?;
    ensure(qc.dicritical_points() == [0], "QC dicritical points differ from {O}")?;
    let m = mumford_divisor(&surface, d).map_err(|e| e.to_string())?;
    ensure(m.coefficients == rats(&[(1, 3), (4, 3)]), "Mumford coefficients differ from (1/3,4/3)")?;
    let f = build_flag(&surface, d, &ints(&[0, 1])).map_err(|e| e.to_string())?;
    ensure(f.n == 2 && f.omega == ints(&[0, 1]), "flag differs from n = 2, omega = (0,1)")?;
    ensure(delta_on_x(&surface, d, None).map_err(|e| e.to_string())?.is_zero(), "delta is not 0")?;
    let sg = semigroup_at_q(&surface, d).map_err(|e| e.to_string())?;
    ensure(
        sg.semigroup.conductor() == 0 && sg.semigroup.gaps().is_empty(),
        "the semigroup is not all of N",
    )?;
    Ok("non-Cartier three ways, n = 2, omega = (0,1), delta 0, semigroup N".into())
}

fn unloading_minimality() -> Check {
    let spec = RandomClusterSpec::default().with_max_points(6);
    suite_check(&[
        suite("oracle", spec, 200, |s| case_unloading_oracle(s, ORACLE_BOUND, Mutation::None)),
        suite("step orders", spec, 200, |s| case_step_orders(s, 20)),
    ])
}

fn criteria_agreement() -> Check {
    suite_check(&[suite("criteria", RandomClusterSpec::default(), 200, case_cartier_criteria)])
}

fn semigroup_consistency() -> Check {
    suite_check(&[suite("semigroups", RandomClusterSpec::default(), 100, case_semigroup)])
}

/// The m-independent data of the flag, then the literal clause that `T_n`
/// agrees at every point outside `K_+`. The excess placed on `K_+` unloads
/// onto the points of `K` before it, so the literal clause fails; it is
/// counted rather than asserted.
fn m_independence() -> Verdict {
    let spec = RandomClusterSpec::default();
    let invariant = match suite_check(&[suite("flags", spec, 100, case_flag_independence)]) {
        Ok(detail) => detail,
        Err(detail) => return Verdict::Fail(detail),
    };
    let mut differing = 0;
    let mut first = None;
    for seed in 0..100 {
        let (s, _, f1, f2) = match random_flag_pair(&spec.with_seed(seed)) {
            Ok(x) => x,
            Err(e) => return Verdict::Fail(e.to_string()),
        };
        let skip = |f: &Flag| -> Vec<usize> { s.kplus().iter().map(|&u| f.extended.k_map[u]).collect() };
        if last_multiplicities_outside(&f1, &skip(&f1)) != last_multiplicities_outside(&f2, &skip(&f2)) {
            differing += 1;
            first.get_or_insert(seed);
        }
    }
    match first {
        None => Verdict::Pass(format!("{invariant}; T_n agrees off K+ on all pairs")),
        Some(seed) => Verdict::Known(format!(
            "n, omega, n_p, increments, delta and T_n outside K agree ({invariant}); \
             T_n differs off K+ on {differing} of 100 pairs, first at seed {seed}"
        )),
    }
}

fn structural() -> Check {
    suite_check(&[suite("trees", RandomClusterSpec::default().with_max_points(12), 500, case_structural)])
}

fn projection() -> Check {
    suite_check(&[suite("pairs", RandomClusterSpec::default(), 100, case_projection_formula)])
}

struct Criterion {
    number: u32,
    title: &'static str,
    run: fn() -> Verdict,
    note: Option<&'static str>,
}

macro_rules! checked {
    ($f:ident) => {
        || Verdict::from($f())
    };
}

const CRITERIA: &[Criterion] = &[
    Criterion { number: 1, title: "four-factor decomposition", run: checked!(four_factor_decomposition), note: None },
    Criterion { number: 2, title: "intersection from pairings", run: checked!(pairing_difference), note: None },
    Criterion { number: 3, title: "local identity", run: checked!(local_identity), note: None },
    Criterion { number: 4, title: "delta arithmetic", run: checked!(delta_arithmetic), note: None },
    Criterion { number: 5, title: "satellite cluster pipeline", run: checked!(satellite_pipeline), note: None },
    Criterion { number: 6, title: "smooth branch pipeline", run: checked!(smooth_branch_pipeline), note: None },
    Criterion { number: 7, title: "unloading minimality and order", run: checked!(unloading_minimality), note: None },
    Criterion { number: 8, title: "Cartier criteria agreement", run: checked!(criteria_agreement), note: None },
    Criterion { number: 9, title: "delta and semigroup gaps", run: checked!(semigroup_consistency), note: None },
    Criterion {
        number: 10,
        title: "flag m-independence",
        run: m_independence,
        note: Some(
            "expected failure: multiplicities of T_n at points of K outside K+ grow with m, \
             so the clause on off-K+ multiplicities cannot hold; the m-independent data pass",
        ),
    },
    Criterion { number: 11, title: "structural identities", run: checked!(structural), note: None },
    Criterion { number: 12, title: "projection formula", run: checked!(projection), note: None },
];

fn main() -> ExitCode {
    let start = Instant::now();
    let mut unexpected = 0;
    for c in CRITERIA {
        let t = Instant::now();
        let verdict = (c.run)();
        let ms = t.elapsed().as_millis();
        let head = format!("{:>2} {} ({ms} ms)", c.number, c.title);
        match verdict {
            Verdict::Pass(detail) => println!("[PASS] {head}: {detail}"),
            Verdict::Known(detail) if c.note.is_some() => {
                println!("[FAIL] {head}: {detail}");
                println!("       NOTE {}", c.note.unwrap_or_default());
            }
            Verdict::Known(detail) | Verdict::Fail(detail) => {
                unexpected += 1;
                println!("[FAIL] {head}: {detail}");
            }
        }
    }
    let total = start.elapsed();
    let within = total.as_secs() < 60;
    if !within {
        unexpected += 1;
    }
    println!(
        "[{}] total {:.2} s (limit 60 s)",
        if within { "PASS" } else { "FAIL" },
        total.as_secs_f64()
    );
    println!("{unexpected} unexpected result(s)");
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
