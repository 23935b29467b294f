//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_RED` are reported as FAIL with the reason and do
//! not abort the run; every other FAIL does.

use std::sync::OnceLock;
use std::time::Instant;

use num_complex::Complex64;

use fermat_core::arith::{factor, primes_up_to};
use fermat_core::certify::{certify_with, point_search, CertifyOptions, NotCertifiedReason, RationalPoint, Verdict};
use fermat_core::cyclotomic::{primes_above, CycInt, Ideal, PrimeIdeal};
use fermat_core::dd::{self, MeanValueReport};
use fermat_core::ff::make_field;
use fermat_core::hecke::stickelberger_report;
use fermat_core::local_zeta::{local_l_polynomial, projective_count, torsion_exclude, Curve, TwistClass};
use fermat_core::symbols::SymbolContext;

/// Exact arithmetic comparisons.
const EXACT: i128 = 0;
/// Coefficient defect of the interchange identity.
const INTERCHANGE_TOL: f64 = 1e-9;
/// Root-number agreement.
const EPSILON_TOL: f64 = 1e-6;
/// Band for lhs / (C x) at x = 3000.
const MEAN_VALUE_BAND: (f64, f64) = (0.75, 1.25);

/// (criterion, reason) pairs that are reported red on purpose.
const KNOWN_RED: &[(u32, &str)] = &[(
    5,
    "eps(chi_n psi) / eps(psi) = psi(rad n) W(chi_n), which differs from psi((n)) when the number of inert primes \
     dividing n exactly twice is odd; n = 28 = 1^3 + 3^3 has odd sign but psi((28)) = +1",
)];

fn report(id: u32, title: &str, pass: bool, detail: String, started: Instant) {
    let secs = started.elapsed().as_secs_f64();
    let known = KNOWN_RED.iter().find(|(k, _)| *k == id);
    let status = if pass { "PASS" } else { "FAIL" };
    println!("{status} criterion {id} [{title}] {detail} ({secs:.1}s)");
    if !pass {
        match known {
            Some((_, why)) => println!("     known red: {why}"),
            None => panic!("criterion {id} failed: {detail}"),
        }
    } else if known.is_some() {
        panic!("criterion {id} is listed as known red but passed; update KNOWN_RED");
    }
}

fn ctx() -> &'static SymbolContext {
    static CTX: OnceLock<SymbolContext> = OnceLock::new();
    CTX.get_or_init(SymbolContext::standard)
}

fn mean_value() -> &'static MeanValueReport {
    static MV: OnceLock<MeanValueReport> = OnceLock::new();
    MV.get_or_init(|| dd::mean_value_check(3000, ctx()).expect("mean value run"))
}

#[test]
fn criterion_1_zeta_consistency() {
    let t = Instant::now();
    let mut checked = 0;
    let mut bad = Vec::new();
    for delta in [1i64, 2, 5, 6, 7, 11] {
        let tc = TwistClass::new(3, delta).unwrap();
        for ell in primes_up_to(200) {
            if !tc.has_good_reduction_at(ell) {
                continue;
            }
            let poly = local_l_polynomial(&tc, ell).unwrap();
            for k in 1..=2u32 {
                let field = make_field(ell, k).unwrap();
                for curve in [Curve::C, Curve::W] {
                    let counted = projective_count(curve, &tc, &field).unwrap() as i128;
                    checked += 1;
                    if (counted - poly.predicted_count(k)).abs() > EXACT {
                        bad.push((delta, ell, k, curve));
                    }
                }
            }
        }
    }
    report(1, "zeta consistency", bad.is_empty(), format!("{checked} exact counts, mismatches {bad:?}"), t);
}

#[test]
fn criterion_2_stickelberger() {
    let t = Instant::now();
    let mut split = 0;
    let mut failures = Vec::new();
    for ell in primes_up_to(200).into_iter().filter(|l| l % 3 == 1) {
        for w in primes_above(ell).unwrap() {
            let r = stickelberger_report(&w).unwrap();
            split += 1;
            if !(r.holds() && r.norm == ell as i128 && r.congruent_one_mod_lambda2) {
                failures.push(ell);
            }
        }
    }
    for ell in [2u64, 5, 11] {
        let w: PrimeIdeal = primes_above(ell).unwrap().swap_remove(0);
        let r = stickelberger_report(&w).unwrap();
        if r.j != CycInt::from_int(3, -(ell as i128)) {
            failures.push(ell);
        }
    }
    report(2, "Stickelberger", failures.is_empty(), format!("{split} split primes + 3 inert, failures {failures:?}"), t);
}

#[test]
fn criterion_3_torsion_exclusion() {
    let t = Instant::now();
    let tc = TwistClass::new(3, 5).unwrap();
    let mut witnesses = Vec::new();
    let mut ok = true;
    for q in [5u64, 7, 11, 13] {
        match torsion_exclude(&tc, q) {
            Ok(w) => {
                let poly = local_l_polynomial(&tc, w.ell).unwrap();
                ok &= w.residue == 2 && poly.at_one() == w.pv_at_one && poly.at_one().rem_euclid(q as i128) == 2;
                witnesses.push((q, w.ell));
            }
            Err(_) => ok = false,
        }
    }
    let no_small_points = point_search(5, 1000).unwrap().is_empty();
    report(3, "torsion exclusion", ok && no_small_points, format!("witnesses (q, ell) {witnesses:?}"), t);
}

#[test]
fn criterion_4_interchange() {
    let t = Instant::now();
    let (lhs, rhs) = dd::interchange_sides(1000, dd::DEFAULT_A_MAX).unwrap();
    let mut worst: f64 = 0.0;
    let mut details = Vec::new();
    for s in [1.25, 1.5] {
        let rep = dd::interchange_report(&lhs, &rhs, Complex64::new(s, 0.0));
        worst = worst.max(rep.max_defect);
        details.push(format!("s={s}: {:.2e} at n={}", rep.max_defect, rep.worst_n));
    }
    let formal = dd::interchange_report(&lhs, &rhs, Complex64::new(1.5, 0.0));
    let pass = worst < INTERCHANGE_TOL && formal.formal_mismatch < INTERCHANGE_TOL * formal.formal_scale;
    report(4, "interchange identity", pass, format!("{}; formal {:.2e}", details.join(", "), formal.formal_mismatch), t);
}

#[test]
fn criterion_5_epsilon_relation() {
    let t = Instant::now();
    let ns = dd::admissible_twists(200, ctx());
    let rel: Vec<_> = ns.iter().map(|&n| dd::epsilon_relation_check(n, ctx()).unwrap()).collect();
    let literal_bad: Vec<u64> = rel.iter().filter(|r| r.defect_psi_n >= EPSILON_TOL).map(|r| r.n).collect();
    let gauss_bad: Vec<u64> = rel.iter().filter(|r| !r.holds(EPSILON_TOL)).map(|r| r.n).collect();
    // the twisting-formula route must agree everywhere; it is what the red
    // literal reading is measured against
    assert!(gauss_bad.is_empty(), "Gauss-sum route disagrees at {gauss_bad:?}");
    let expected_bad: Vec<u64> =
        ns.iter().copied().filter(|&n| factor(n).iter().filter(|&&(p, e)| p % 3 == 2 && e == 2).count() % 2 == 1).collect();
    assert_eq!(literal_bad, expected_bad);
    report(
        5,
        "epsilon relation",
        literal_bad.is_empty(),
        format!(
            "{} admissible n <= 200; psi((n)) mismatches at {literal_bad:?}; psi(rad n) W(chi_n) agrees at all",
            ns.len()
        ),
        t,
    );
}

#[test]
fn criterion_6_certifier_ground_truth() {
    let t = Instant::now();
    let opts = |height| CertifyOptions { height, timestamp: Some("acceptance".into()), cache_dir: None, ..Default::default() };
    let mut ok = true;
    let mut notes = Vec::new();
    for delta in [5i64, 11] {
        let c = certify_with(delta, &opts(10_000)).unwrap();
        ok &= c.verdict == Verdict::Certified && c.search_crosscheck.points_found.is_empty();
        notes.push(format!("{delta}: {}", c.verdict.label()));
    }
    let witness = [(6i64, RationalPoint { a: 17, b: 37, c: 21 }), (7, RationalPoint { a: 2, b: -1, c: 1 }), (9, RationalPoint { a: 1, b: 2, c: 1 })];
    for (delta, p) in witness {
        let c = certify_with(delta, &opts(100)).unwrap();
        ok &= !c.is_certified() && c.search_crosscheck.points_found.contains(&p) && p.verify(delta);
        notes.push(format!("{delta}: {} via {}^3+{}^3={delta}*{}^3", c.verdict.label(), p.a, p.b, p.c));
    }
    ok &= 17i128.pow(3) + 37i128.pow(3) == 6 * 21i128.pow(3);
    for delta in [3i64, 4] {
        let c = certify_with(delta, &opts(100)).unwrap();
        ok &= c.verdict == Verdict::NotCertified(NotCertifiedReason::PreconditionFails);
        notes.push(format!("{delta}: {}", c.verdict.label()));
    }
    report(6, "certifier ground truth", ok, notes.join("; "), t);
}

#[test]
fn criterion_7_waldspurger_nonnegativity() {
    let t = Instant::now();
    let mv = mean_value();
    let rows: Vec<_> = mv.rows.iter().filter(|r| r.n <= 2000).collect();
    let violations = rows.iter().filter(|r| r.central_value < -r.error).count();
    report(7, "nonnegativity", violations == 0, format!("{} central values, {violations} below -error", rows.len()), t);
}

#[test]
fn criterion_8_mean_value_slow() {
    let t = Instant::now();
    let mv = mean_value();
    let r3000 = mv.ratio;
    let r500 = mv.ratio_at(500);
    let pass = (MEAN_VALUE_BAND.0..=MEAN_VALUE_BAND.1).contains(&r3000) && (r3000 - 1.0).abs() < (r500 - 1.0).abs();
    report(8, "mean value", pass, format!("C = {:.6}, ratio(500) = {r500:.4}, ratio(3000) = {r3000:.4}", mv.constant.c), t);
}

#[test]
fn criterion_9_property_suites() {
    let t = Instant::now();
    let c = ctx();
    let primes: Vec<Ideal> = primes_up_to(120)
        .into_iter()
        .filter(|&l| l != 3)
        .flat_map(|l| primes_above(l).unwrap())
        .map(|p| Ideal::from_prime(&p))
        .collect();
    let mut checks = 0;
    let mut failures = Vec::new();
    // symbol multiplicativity and cube invariance
    for (i, m) in primes.iter().enumerate().step_by(3) {
        for (j, n1) in primes.iter().enumerate().step_by(4) {
            let n2 = &primes[(i + j + 1) % primes.len()];
            if !(m.is_coprime(n1) && m.is_coprime(n2) && n1.is_coprime(n2)) {
                continue;
            }
            let lhs = c.extended_symbol(m, &n1.mul(n2)).unwrap();
            let rhs = (c.extended_symbol(m, n1).unwrap() + c.extended_symbol(m, n2).unwrap()) % 3;
            checks += 1;
            if lhs != rhs {
                failures.push("multiplicativity");
            }
            let cubed = m.mul(&n2.pow(3));
            if c.extended_symbol(&cubed, n1).unwrap() != c.extended_symbol(m, n1).unwrap() {
                failures.push("cube invariance");
            }
            // decomposition independence
            let d1 = c.decompose(m, &n2.generator).unwrap();
            let v1 = c.symbol_from_decomposition(&d1, n1).unwrap();
            if v1 != c.extended_symbol(m, n1).unwrap() {
                failures.push("decomposition independence");
            }
            // alpha depends on classes only
            let (m2, n1b) = (m.mul(&n2.pow(3)), n1.mul(&n2.pow(3)));
            if m2.is_coprime(&n1b) && m.is_coprime(n1) {
                if c.reciprocity_alpha(m, n1).unwrap() != c.reciprocity_alpha(&m2, &n1.clone()).unwrap() {
                    failures.push("alpha class invariance");
                }
            }
        }
    }
    // kernel of the rational image
    let (source, kernel) = c.rational_kernel(500);
    if source != 3 || kernel != 1 {
        failures.push("rational kernel");
    }
    // determinism replay
    let dir = tempfile::tempdir().unwrap();
    let opts = CertifyOptions {
        height: 100,
        timestamp: Some("replay".into()),
        cache_dir: Some(dir.path().to_path_buf()),
        ..Default::default()
    };
    let first = certify_with(10, &opts).unwrap().to_json().unwrap();
    let second = certify_with(10, &opts).unwrap().to_json().unwrap();
    let fresh = certify_with(10, &CertifyOptions { cache_dir: None, ..opts.clone() }).unwrap().to_json().unwrap();
    if first != second || first != fresh {
        failures.push("determinism replay");
    }
    if SymbolContext::from_text(&c.to_text()).unwrap().to_text() != c.to_text() {
        failures.push("context replay");
    }
    report(9, "property suites", failures.is_empty(), format!("{checks} symbol cases, failures {failures:?}"), t);
}
