use proptest::prelude::*;

use vprofile::excursion::{decompose, reconstruct};
use vprofile::genfun::{closed_form_series, f_table};
use vprofile::kernel::{transition_prob, State};
use vprofile::maps::{ball_profile, map_to_tree, tree_to_map, verify_profile_relations};
use vprofile::model::{Builtin, TreeModel};
use vprofile::num::Rational;
use vprofile::oracle::weight_factorizes;
use vprofile::sampler::run_chunks;
use vprofile::stats::{chi_square, TransitionCensus};
use vprofile::LabelledPlaneTree;

/// Random recursive tree: vertex i hangs below one of 0..i with increment in `steps`.
fn tree_from(picks: &[(usize, usize)], steps: &'static [i64]) -> LabelledPlaneTree {
    let n = picks.len() + 1;
    let mut children = vec![Vec::new(); n];
    let mut labels = vec![0i64; n];
    for (i, &(p, s)) in picks.iter().enumerate() {
        let v = i + 1;
        let parent = p % v;
        children[parent].push(v);
        labels[v] = labels[parent] + steps[s % steps.len()];
    }
    LabelledPlaneTree::from_children(0, &children, &labels).unwrap()
}

fn trees(steps: &'static [i64], max_edges: usize) -> impl Strategy<Value = LabelledPlaneTree> {
    prop::collection::vec((any::<usize>(), any::<usize>()), 0..=max_edges).prop_map(move |p| tree_from(&p, steps))
}

fn any_tree() -> impl Strategy<Value = LabelledPlaneTree> {
    trees(&[-1, 0, 1], 40)
}

fn pm1_tree() -> impl Strategy<Value = LabelledPlaneTree> {
    trees(&[-1, 1], 40)
}

proptest! {
    #[test]
    fn encode_decode(t in any_tree()) {
        prop_assert_eq!(LabelledPlaneTree::decode(&t.encode()).unwrap(), t);
    }

    #[test]
    fn truncate_idempotent(t in any_tree(), l in -3i64..4) {
        let once = t.truncate(l);
        prop_assert_eq!(once.truncate(l), once.clone());
        prop_assert!(once.len() <= t.len());
    }

    #[test]
    fn edges_are_all_counted(t in any_tree()) {
        prop_assert_eq!(t.edge_profile().unwrap().total_edges(), t.edges() as u64);
    }

    #[test]
    fn vertical_profile_from_edges(t in pm1_tree()) {
        let prof = t.edge_profile().unwrap();
        for k in 1..=t.max_label() + 1 {
            prop_assert_eq!(prof.vertical_at(k), prof.xp(k) + prof.xm(k + 1), "k = {}", k);
        }
        for m in 1..=t.max_label() + 1 {
            prop_assert_eq!(prof.mass(m + 1), prof.mass(m) + prof.xp(m) + prof.xm(m), "m = {}", m);
        }
    }

    #[test]
    fn decompose_round_trip_and_weights(t in any_tree()) {
        let model = TreeModel::builtin(Builtin::GeomPm01);
        prop_assert!(model.tree_weight(&t) > Rational::from_integer(0.into()));
        for m in (t.min_label() - 1..=t.max_label() + 1).filter(|&m| m != 0) {
            let d = decompose(&t, m).unwrap();
            prop_assert!(d.forest.check().is_ok());
            prop_assert_eq!(&reconstruct(&d).unwrap(), &t);
            prop_assert!(weight_factorizes(&model, &t, &d).unwrap(), "level {}", m);
        }
    }

    #[test]
    fn schaeffer_round_trip(t in trees(&[-1, 0, 1], 25), orientation in any::<bool>()) {
        prop_assume!(t.edges() >= 1);
        let q = tree_to_map(&t, orientation).unwrap();
        prop_assert_eq!(q.face_count(), t.edges());
        prop_assert_eq!(map_to_tree(&q).unwrap(), (t, orientation));
        prop_assert!(verify_profile_relations(&q).unwrap().ok());
        prop_assert!(ball_profile(&q).perimeter.iter().all(|p| p % 2 == 0));
    }

    #[test]
    fn census_merge_commutes(a in prop::collection::vec((0usize..4, 0usize..4, 0usize..4, 0usize..4), 0..30),
                             b in prop::collection::vec((0usize..4, 0usize..4, 0usize..4, 0usize..4), 0..30)) {
        let build = |v: &[(usize, usize, usize, usize)]| {
            let mut c = TransitionCensus::new();
            for &(p, q, r, s) in v {
                c.add(State { p, q }, State { p: r, q: s });
            }
            c
        };
        let (ca, cb) = (build(&a), build(&b));
        prop_assert_eq!(ca.clone().merge(cb.clone()), cb.merge(ca.clone()));
        prop_assert_eq!(ca.total(), a.len() as u64);
    }

    #[test]
    fn chi_square_is_a_probability(obs in prop::collection::vec(0u64..200, 2..12), w in prop::collection::vec(1u32..100, 12)) {
        let exp: Vec<f64> = w[..obs.len()].iter().map(|&x| x as f64).collect();
        prop_assume!(obs.iter().sum::<u64>() > 0);
        let t = chi_square(&obs, &exp).unwrap();
        prop_assert!(t.statistic >= 0.0);
        prop_assert!((0.0..=1.0).contains(&t.p_value));
    }

    #[test]
    fn chunked_runs_ignore_worker_count(n in 0u64..500, workers in 1usize..6) {
        let sum = |w| run_chunks(n, w, |r| r.map(|i| i * i % 7).sum::<u64>()).into_iter().sum::<u64>();
        prop_assert_eq!(sum(workers), sum(1));
    }
}

const S_MAX: usize = 8;

fn kernel_tables() -> (vprofile::genfun::FTable<Rational>, vprofile::genfun::FTable<f64>) {
    let nu = closed_form_series::<Rational>(Builtin::IncompleteBinary, S_MAX + 6).unwrap();
    let f = f_table(&nu, 6 + S_MAX, S_MAX + 6).unwrap();
    let g = f.map(|x| vprofile::Scalar::to_f64(x));
    (f, g)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn kernel_partial_rows(p in 1usize..=5, q in 0usize..=5) {
        let (f, g) = kernel_tables();
        let from = State { p, q };
        let mut total = Rational::from_integer(0.into());
        for s in 0..=S_MAX {
            for r in 0..=p + s {
                let to = State { p: r, q: s };
                if !to.is_valid() {
                    continue;
                }
                let x = transition_prob(&f, from, to).unwrap();
                let y = transition_prob(&g, from, to).unwrap();
                prop_assert!((vprofile::Scalar::to_f64(&x) - y).abs() <= 1e-12 * y.abs().max(1e-300) + 1e-300);
                total += x;
            }
        }
        prop_assert!(total <= Rational::from_integer(1.into()));
    }
}
