//! Acceptance checks. One PASS/FAIL line per criterion; exits nonzero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::Zero;
use vprofile::genfun::{closed_form_series, linear_coefficient, measured_singular_coefficient, raw_linear_quotient, raw_singular_quotient, solve_nu_gf, FTable};
use vprofile::kernel::State;
use vprofile::maps::{schaeffer_sample_sweep, schaeffer_sweep};
use vprofile::model::{Builtin, TreeModel};
use vprofile::num::{binomial, parse_rational, quarter_pow, Rational};
use vprofile::oracle::{
    counting_lemma_formula, counting_lemma_sweep, decompose_sample_sweep, decompose_sweep, exact_chain_law, marked_forest_formula,
    marked_forest_sweep, remark_profile_check, verify_markov_exact, verify_markov_exact_shifted,
};
use vprofile::sampler::{default_workers, SamplerConfig};
use vprofile::stats::{forest_law_tests, kernel_row_tests, sample_census, sample_forest_offspring};

const ALPHA: f64 = 1e-3;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn within(elapsed: Duration, limit: Duration) -> bool {
    elapsed < limit
}

fn nu_rational(b: Builtin, order: usize) -> Vec<Rational> {
    closed_form_series::<Rational>(b, order).unwrap().into_coeffs()
}

fn c1() -> Outcome {
    let start = Instant::now();
    let mut bad = Vec::new();
    for b in Builtin::ALL {
        let solved = solve_nu_gf(&TreeModel::builtin(b), 40);
        let closed = closed_form_series::<Rational>(b, 40).unwrap();
        if solved.as_ref() != Ok(&closed) {
            bad.push(b.id());
        }
    }
    let t = start.elapsed();
    outcome(bad.is_empty() && within(t, Duration::from_secs(5)), format!("order 40, mismatches {bad:?}, {t:.2?}"))
}

fn c2() -> Outcome {
    let z4 = parse_rational("9999/10000").unwrap();
    let z6 = parse_rational("999999/1000000").unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for (b, want) in [(Builtin::GeomPm1, 2.0 / 3f64.sqrt()), (Builtin::GeomPm01, 2f64.sqrt())] {
        let sing = measured_singular_coefficient(b, &z4).unwrap();
        let lin = linear_coefficient(b, &z6).unwrap();
        pass &= (sing - want).abs() < 1e-3 && (lin + 1.0).abs() < 1e-3;
        parts.push(format!("{}: {sing:.6} (want {want:.6}), linear {lin:.6}", b.id()));
        println!(
            "INFO criterion 2 {}: raw quotients {:.6} at 1-1e-4, {:.6} at 1-1e-6",
            b.id(),
            raw_singular_quotient(b, &z4).unwrap(),
            raw_linear_quotient(b, &z6).unwrap()
        );
    }
    outcome(pass, parts.join("; "))
}

fn c3() -> Outcome {
    let start = Instant::now();
    let r = counting_lemma_sweep(7, counting_lemma_formula).unwrap();
    let t = start.elapsed();
    outcome(r.ok() && within(t, Duration::from_secs(60)), format!("{} tuples, {} failures, {t:.2?}", r.checked, r.failures))
}

fn c4() -> Outcome {
    let start = Instant::now();
    let r = marked_forest_sweep(&nu_rational(Builtin::IncompleteBinary, 8), 3, 4, marked_forest_formula).unwrap();
    let t = start.elapsed();
    outcome(r.ok() && within(t, Duration::from_secs(60)), format!("{} (p,s,q,r) cells, {} failures, {t:.2?}", r.checked, r.failures))
}

fn c5() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut hist = 0;
    let mut trans = 0;
    for v in 2..=8 {
        let law = exact_chain_law(v).unwrap();
        let r = verify_markov_exact(&law).unwrap();
        pass &= r.ok();
        hist += r.histories;
        trans += r.transitions;
    }
    let t = start.elapsed();
    outcome(
        pass && within(t, Duration::from_secs(600)),
        format!("V=2..8, {hist} histories and {trans} transitions exact, {t:.2?}"),
    )
}

fn c6() -> Outcome {
    let start = Instant::now();
    let model = TreeModel::builtin(Builtin::IncompleteBinary);
    let cfg = SamplerConfig::new(20240601);
    let mc = sample_census(&model, 100_000, &cfg, default_workers()).unwrap();
    let nu = closed_form_series::<f64>(Builtin::IncompleteBinary, 200).unwrap();
    let rows = kernel_row_tests(&mc.census, &nu, 500).unwrap();
    let worst = rows.tests.iter().map(|(_, t)| t.p_value).fold(1.0, f64::min);
    let row = &mc.census.rows[&State { p: 1, q: 0 }];
    let freq = row.get(&State::ABSORBING).copied().unwrap_or(0) as f64 / row.values().sum::<u64>() as f64;
    let t = start.elapsed();
    let pass = rows.tests.iter().all(|(_, t)| t.passes(ALPHA)) && (freq - 0.625).abs() < 0.01 && within(t, Duration::from_secs(120));
    outcome(
        pass,
        format!(
            "{} rows, min p {worst:.4}, (1,0)->(0,0) {freq:.4}, {} trees skipped at the cap, {t:.2?}",
            rows.tests.len(),
            mc.skipped
        ),
    )
}

fn c7() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for b in Builtin::ALL {
        let m = TreeModel::builtin(b);
        let e = decompose_sweep(&m, 6).unwrap();
        let cfg = SamplerConfig::new(7).with_vertex_cap(100_000);
        let s = decompose_sample_sweep(&m, 10_000, &cfg, default_workers()).unwrap();
        pass &= e.ok() && s.ok();
        parts.push(format!("{} {}+{} ({} skipped)", b.id(), e.checked, s.checked, s.skipped));
        if let Some(f) = e.first_failure.or(s.first_failure) {
            parts.push(f);
        }
    }
    outcome(pass, format!("round trips {}", parts.join(", ")))
}

fn c8() -> Outcome {
    let model = TreeModel::builtin(Builtin::GeomPm1);
    let cfg = SamplerConfig::new(8);
    let off = sample_forest_offspring(&model, 1, 100_000, &cfg, default_workers()).unwrap();
    let nu = closed_form_series::<f64>(Builtin::GeomPm1, 200).unwrap();
    let tests = forest_law_tests(&off, nu.coeffs(), nu.coeffs(), 1000).unwrap();
    let heights = tests.tests.len();
    outcome(
        heights >= 2 && tests.passes(ALPHA),
        format!("{heights} heights tested, Bonferroni p {:.4}, {} skipped", tests.bonferroni_p, off.skipped),
    )
}

fn c9() -> Outcome {
    let start = Instant::now();
    let e = schaeffer_sweep(6).unwrap();
    let cfg = SamplerConfig::new(9).with_vertex_cap(100_000);
    let s = schaeffer_sample_sweep(10_000, &cfg, default_workers()).unwrap();
    let t = start.elapsed();
    outcome(
        e.ok() && s.ok() && within(t, Duration::from_secs(300)),
        format!(
            "exhaustive {} checks, sampled {} checks ({} skipped), first failure {:?}, {t:.2?}",
            e.checked,
            s.checked,
            s.skipped,
            e.first_failure.or(s.first_failure)
        ),
    )
}

fn c10() -> Outcome {
    let r = remark_profile_check(5).unwrap();
    outcome(r.ok(), format!("{} profiles, {} failures", r.checked, r.failures))
}

fn c11() -> Outcome {
    // counting: (p−1)! replaced by p!
    let counting = counting_lemma_sweep(7, |n, p, q| counting_lemma_formula(n, p, q) * BigInt::from(p)).unwrap();
    // joint law: the ballot factor p/(p+s) dropped
    let dropped = |f: &FTable<Rational>, p: usize, s: usize, q: usize, r: usize| {
        let n = p + s;
        let fr = f.get(r, s).cloned().unwrap_or_else(Rational::zero);
        quarter_pow(n) * Rational::from_integer(binomial(n, q) * binomial(n, r)) * fr
    };
    let joint = marked_forest_sweep(&nu_rational(Builtin::IncompleteBinary, 8), 3, 4, dropped).unwrap();
    // conditioned kernel: support moved to w = v+p+q+1
    let kernel = verify_markov_exact_shifted(&exact_chain_law(5).unwrap(), 1).unwrap();
    let detected = [!counting.ok(), !joint.ok(), !kernel.ok()];
    outcome(
        detected.iter().all(|&d| d),
        format!(
            "counting {} failures, joint law {} failures, kernel {} discrepancies",
            counting.failures,
            joint.failures,
            kernel.discrepancies.len()
        ),
    )
}

fn main() -> ExitCode {
    let checks: [(u32, fn() -> Outcome); 11] =
        [(1, c1), (2, c2), (3, c3), (4, c4), (5, c5), (6, c6), (7, c7), (8, c8), (9, c9), (10, c10), (11, c11)];
    let mut failed = 0;
    for (n, check) in checks {
        let o = check();
        println!("criterion {n:>2} {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
