//! Monte Carlo checks of distributional identities, each with a control that must fail.

use vprofile::genfun::{closed_form_series, solve_nu_minus_gf};
use vprofile::kernel::State;
use vprofile::model::{Builtin, TreeModel};
use vprofile::sampler::SamplerConfig;
use vprofile::stats::{
    chain_agreement, conditional_excursion_cells, conditional_excursion_test, forest_law_tests, kernel_row_tests, sample_ball_chains,
    sample_census, sample_first_hit_offspring, TransitionCensus,
};

const ALPHA: f64 = 1e-3;

#[test]
fn lower_chain_follows_free_kernel() {
    let m = TreeModel::builtin(Builtin::IncompleteBinary);
    let cfg = SamplerConfig::new(31).with_vertex_cap(1_000_000);
    let mc = sample_census(&m, 30_000, &cfg, 2).unwrap();
    let nu = closed_form_series::<f64>(Builtin::IncompleteBinary, 200).unwrap();
    let lower = kernel_row_tests(&mc.lower, &nu, 500).unwrap();
    assert!(lower.tests.len() >= 5, "{lower:?}");
    assert!(lower.passes(ALPHA), "{lower:?}");
    let wrong = closed_form_series::<f64>(Builtin::GeomPm1, 200).unwrap();
    // an impossible observation is as good a rejection as a small p-value
    assert!(!matches!(kernel_row_tests(&mc.lower, &wrong, 500), Ok(t) if t.passes(ALPHA)));
}

#[test]
fn first_hit_cascade_is_galton_watson() {
    let m = TreeModel::builtin(Builtin::IncompleteBinary);
    let cfg = SamplerConfig::new(32).with_vertex_cap(1_000_000);
    let off = sample_first_hit_offspring(&m, 20_000, &cfg, 2).unwrap();
    let nu_minus = solve_nu_minus_gf(&m, 60).unwrap().to_f64();
    let t = forest_law_tests(&off, nu_minus.coeffs(), nu_minus.coeffs(), 1000).unwrap();
    assert!(t.tests.len() >= 10 && t.passes(ALPHA), "{t:?}");
    let mut bad = nu_minus.coeffs().to_vec();
    bad.swap(1, 2);
    assert!(!forest_law_tests(&off, &bad, &bad, 1000).unwrap().passes(ALPHA));
}

#[test]
fn excursions_given_level_counts() {
    let m = TreeModel::builtin(Builtin::GeomPm1);
    let cfg = SamplerConfig::new(33).with_vertex_cap(1_000_000);
    for (level, pq) in [(1, (1, 1)), (1, (2, 1)), (1, (2, 2)), (2, (1, 1))] {
        let cells = conditional_excursion_cells(&m, pq.0, pq.1, 4).unwrap();
        let (t, hits) = conditional_excursion_test(&m, level, pq, &cells, 30_000, &cfg, 2).unwrap();
        assert!(hits >= 150, "level {level} {pq:?}: {hits} hits");
        assert!(t.passes(ALPHA), "level {level} {pq:?}: {t:?}");
    }
    // the law for one excursion out of two does not describe a lone excursion
    let cells = conditional_excursion_cells(&m, 2, 2, 4).unwrap();
    let (t, _) = conditional_excursion_test(&m, 1, (1, 2), &cells, 30_000, &cfg, 2).unwrap();
    assert!(!t.passes(ALPHA), "{t:?}");
}

#[test]
fn ball_processes_agree() {
    let cfg = SamplerConfig::new(34).with_vertex_cap(100_000);
    let bc = sample_ball_chains(8_000, &cfg, 2).unwrap();
    let agree = chain_agreement(&bc.upper, &bc.lower, 200).unwrap();
    assert!(agree.tests.len() >= 5 && agree.passes(ALPHA), "{agree:?}");

    // tree side: the upper ball process is (2(X⁺+X⁻), X⁺) of the underlying tree
    let m = TreeModel::builtin(Builtin::GeomPm01);
    let mc = sample_census(&m, 8_000, &SamplerConfig::new(35).with_vertex_cap(100_000), 2).unwrap();
    let relabel = |f: fn(State) -> State| {
        let mut c = TransitionCensus::new();
        for (from, row) in &mc.census.rows {
            for (to, &n) in row {
                for _ in 0..n {
                    c.add(f(*from), f(*to));
                }
            }
        }
        c
    };
    let right = relabel(|s| State { p: 2 * (s.p + s.q), q: s.p });
    let t = chain_agreement(&bc.upper, &right, 100).unwrap();
    assert!(t.tests.len() >= 4 && t.passes(ALPHA), "{t:?}");
    let swapped = relabel(|s| State { p: 2 * (s.p + s.q), q: s.q });
    assert!(!chain_agreement(&bc.upper, &swapped, 100).unwrap().passes(ALPHA));
}
