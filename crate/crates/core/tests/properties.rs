mod common;

use common::*;
use mtp2::certify::{cone_membership, elementary_imsets, supermodularity_values};
use mtp2::general_mle::existence_general;
use mtp2::ips::{IpsState, classical_ips, preflight_existence};
use mtp2::ising::{interaction_from_table, is_mtp2_params, params_from_table, table_from_params, Graph};
use mtp2::states::{algebra_closure, elementary_pairs, lattice_closure, lattice_order};
use mtp2::tables::{
    empirical_pair, is_mtp2, log_likelihood, moments_from_counts, pair_support_full, symmetrize,
};
use mtp2::{
    certify_ising, fit, solve_general, FitOptions, IsingParams, ProbTable, SampleCounts, StateSet, Tolerances,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn counts_strategy(max_dim: usize, max_n: u64) -> impl Strategy<Value = SampleCounts> {
    (2..=max_dim).prop_flat_map(move |d| {
        prop::collection::vec(0..=max_n, 1 << d)
            .prop_filter("nonempty", |v| v.iter().any(|&k| k > 0))
            .prop_map(move |v| SampleCounts::new(d, v).unwrap())
    })
}

fn masks_strategy(max_dim: usize) -> impl Strategy<Value = (usize, Vec<u32>)> {
    (2..=max_dim).prop_flat_map(|d| (Just(d), prop::collection::vec(0..1u32 << d, 0..6)))
}

fn params_strategy(max_dim: usize, bound: f64) -> impl Strategy<Value = IsingParams> {
    (2..=max_dim).prop_flat_map(move |d| {
        (prop::collection::vec(-bound..bound, d), prop::collection::vec(-bound..bound, d * (d - 1) / 2)).prop_map(
            move |(h, j)| {
                let mut pairs = Vec::new();
                let mut k = 0;
                for a in 0..d {
                    for b in a + 1..d {
                        pairs.push((a, b, j[k]));
                        k += 1;
                    }
                }
                let mut theta = IsingParams::from_interactions(d, &pairs).unwrap();
                for v in 0..d {
                    theta.h[v] = h[v];
                }
                theta
            },
        )
    })
}

fn ferromagnet_strategy(max_dim: usize) -> impl Strategy<Value = ProbTable> {
    (2..=max_dim, any::<u64>()).prop_map(|(d, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, d, 0.7);
        ferromagnet_table(&mut rng, &g, 1.5, 1.0)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closure_idempotent_and_monotone((d, masks) in masks_strategy(6), extra in prop::collection::vec(0..64u32, 0..3)) {
        let u = StateSet::from_masks(d, masks.iter().copied()).unwrap();
        let l = lattice_closure(&u);
        prop_assert!(u.is_subset(&l));
        prop_assert!(l.is_empty() || l.is_lattice());
        prop_assert_eq!(&lattice_closure(&l), &l);
        prop_assert_eq!(support_masks(&l), naive_closure(d, &masks, false));
        let bigger = StateSet::from_masks(d, masks.iter().copied().chain(extra.iter().map(|m| m % (1 << d)))).unwrap();
        prop_assert!(l.is_subset(&lattice_closure(&bigger)));

        let a = algebra_closure(&u);
        prop_assert!(l.is_subset(&a));
        let top = (1u32 << d) - 1;
        prop_assert!(a.masks().all(|m| a.contains_mask(!m & top)));
        prop_assert_eq!(support_masks(&a), naive_closure(d, &masks, true));
    }

    #[test]
    fn marginals_and_conditionals_stay_mtp2(p in ferromagnet_strategy(5), pick in any::<u32>()) {
        let d = p.dim();
        let vars: Vec<usize> = (0..d).filter(|&v| pick >> v & 1 == 1).collect();
        if !vars.is_empty() {
            prop_assert!(is_mtp2(&p.marginal(&vars).unwrap(), 1e-9).holds);
            if vars.len() < d {
                let fixed: Vec<(usize, i8)> = vars.iter().map(|&v| (v, if pick >> (v + 8) & 1 == 1 { 1 } else { -1 })).collect();
                prop_assert!(is_mtp2(&p.conditional(&fixed).unwrap(), 1e-9).holds);
            }
        }
    }

    #[test]
    fn mtp2_with_full_pair_support_has_full_support(d in 2usize..=4, seed in any::<u64>()) {
        // brute force over sparse tables: keep a random subset of states
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, d, 0.8);
        let base = ferromagnet_table(&mut rng, &g, 1.0, 1.0);
        let keep = rand::Rng::random::<u32>(&mut rng) | 1;
        let values: Vec<f64> = base.values().iter().enumerate()
            .map(|(m, &v)| if keep >> (m % 32) & 1 == 1 { v } else { 0.0 }).collect();
        let p = ProbTable::from_weights(d, values).unwrap();
        if is_mtp2(&p, 0.0).holds && pair_support_full(&p) {
            prop_assert!(p.has_full_support());
        }
    }

    #[test]
    fn empirical_pair_sums_to_one(c in counts_strategy(5, 6)) {
        let m = moments_from_counts(&c);
        let e = empirical_pair(&m, 0, 1).unwrap();
        prop_assert!((e.total() - 1.0).abs() < 1e-15);
        let s = symmetrize(&c);
        let top = (1usize << c.dim()) - 1;
        prop_assert!((0..=top).all(|k| s.counts()[k] == s.counts()[!k & top]));
    }

    #[test]
    fn params_round_trip(theta in params_strategy(6, 2.0)) {
        let p = table_from_params(&theta).unwrap();
        let back = params_from_table(&p).unwrap();
        prop_assert!(back.is_ising);
        prop_assert!((&back.params.h - &theta.h).amax() < 1e-9);
        prop_assert!((&back.params.j - &theta.j).amax() < 1e-9);
        let d = theta.dim();
        for ctx in 0u32..1 << (d - 2) {
            // spread the context bits over variables 2..d
            let a = ctx << 2;
            prop_assert!((interaction_from_table(&p, 0, 1, a).unwrap() - theta.j[(0, 1)]).abs() < 1e-9);
        }
    }

    #[test]
    fn mtp2_iff_nonnegative_interactions(theta in params_strategy(5, 1.0)) {
        let p = table_from_params(&theta).unwrap();
        prop_assert_eq!(is_mtp2(&p, 1e-12).holds, is_mtp2_params(&theta, 0.0));
    }

    #[test]
    fn zero_field_is_palindromic(mut theta in params_strategy(5, 1.5)) {
        theta.h.fill(0.0);
        let p = table_from_params(&theta).unwrap();
        let top = (1u32 << theta.dim()) - 1;
        prop_assert!((0..=top).all(|m| p.at(m) == p.at(!m & top)));
    }

    #[test]
    fn supermodularity_matches_mtp2(theta in params_strategy(5, 1.0)) {
        let d = theta.dim();
        let smallest = (0..d).flat_map(|a| (a + 1..d).map(move |b| (a, b))).map(|(a, b)| theta.j[(a, b)].abs()).fold(f64::INFINITY, f64::min);
        prop_assume!(smallest > 1e-6);
        let p = table_from_params(&theta).unwrap();
        let logp: Vec<f64> = p.values().iter().map(|v| (v / p.at(0)).ln()).collect();
        let values = supermodularity_values(d, &logp).unwrap();
        prop_assert_eq!(values.iter().all(|&v| v >= 0.0), is_mtp2(&p, 0.0).holds);
    }

    #[test]
    fn cone_contains_nonnegative_combinations(d in 2usize..=4, w in prop::collection::vec(0.0f64..1.0, 24)) {
        let gens = elementary_imsets(d);
        let mut v = vec![0.0; 1 << d];
        for (u, &c) in gens.iter().zip(w.iter().cycle()) {
            for (m, x) in u.entries() {
                v[m as usize] += c * x as f64;
            }
        }
        prop_assert!(cone_membership(d, &v).unwrap().residual <= 1e-10);
    }

    #[test]
    fn pairwise_and_closure_existence_agree(c in counts_strategy(6, 1)) {
        let r = existence_general(&c);
        prop_assert_eq!(Some(r.exists), r.closure);
    }
}

fn preflight_ok_sample(rng: &mut ChaCha8Rng, d: usize, g: &Graph) -> SampleCounts {
    loop {
        let p = mixed_table(rng, d, -1.0, 1.5);
        let c = sample_from(rng, &p, 40);
        if preflight_existence(&c, g).unwrap().ok {
            return c;
        }
    }
}

#[test]
fn updates_are_monotone_and_stay_in_family() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..30 {
        let d = rand::Rng::random_range(&mut rng, 3..=5);
        let g = random_graph(&mut rng, d, 0.6);
        let c = preflight_ok_sample(&mut rng, d, &g);
        let mut st = IpsState::new(&c, &g).unwrap();
        let mut ll = log_likelihood(st.table(), &c);
        for _ in 0..5 {
            for k in 0..st.positive_edges().len() {
                let (i, j) = st.positive_edges()[k];
                st.update(i, j).unwrap();
                let next = log_likelihood(st.table(), &c);
                assert!(next >= ll - 1e-10, "likelihood decreased {ll} -> {next}");
                ll = next;
                let ex = params_from_table(st.table()).unwrap();
                assert!(ex.is_ising);
                for a in 0..d {
                    for b in a + 1..d {
                        if !g.contains(a, b) {
                            assert!(ex.params.j[(a, b)].abs() < 1e-8);
                        }
                    }
                }
                assert!(is_mtp2(st.table(), 1e-12).holds);
            }
        }
    }
}

#[test]
fn untouched_vertex_stays_independent() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let d = 4;
    // vertex 4 (index 3) is isolated in the graph
    let g = Graph::from_edges(d, [(0, 1), (1, 2), (0, 2)]).unwrap();
    let c = preflight_ok_sample(&mut rng, d, &g);
    let res = fit(&c, &g, &FitOptions::default()).unwrap();
    let xbar = moments_from_counts(&c).mean[3];
    let rest = res.table.marginal(&[0, 1, 2]).unwrap();
    let plus = (1.0 + xbar) / 2.0;
    for m in 0u32..16 {
        let expect = rest.at(m & 7) * if m >> 3 & 1 == 1 { plus } else { 1.0 - plus };
        assert!((res.table.at(m) - expect).abs() < 1e-14);
    }
}

#[test]
fn fit_passes_certificate_and_face_ips() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..20 {
        let d = rand::Rng::random_range(&mut rng, 3..=6);
        let g = random_graph(&mut rng, d, 0.7);
        let c = preflight_ok_sample(&mut rng, d, &g);
        let res = fit(&c, &g, &FitOptions::default()).unwrap();
        let cert = certify_ising(&res, &moments_from_counts(&c), &g, &Tolerances::default()).unwrap();
        assert!(res.converged && cert.pass(), "{cert}");
        let face = classical_ips(&c, &res.fitted_graph, &FitOptions::default()).unwrap();
        assert!(face.table.max_abs_diff(&res.table) < 1e-7);
    }
}

#[test]
fn elementary_pairs_are_distinct_and_counted() {
    for d in 2..=8 {
        let pairs = elementary_pairs(d).unwrap();
        assert_eq!(pairs.len(), d * (d - 1) / 2 * (1 << (d - 2)));
        let mut keys: Vec<(u32, u32)> = pairs.iter().map(|p| (p.x.bits(), p.y.bits())).collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), pairs.len());
    }
    let singletons = StateSet::from_masks(5, (0..5).map(|v| 1u32 << v)).unwrap();
    assert!(lattice_closure(&singletons).is_full());
    let order = lattice_order(4);
    assert!(order.windows(2).all(|w| w[0].count_ones() <= w[1].count_ones()));
}

#[test]
fn general_fit_support_and_dominance() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..15 {
        let d = rand::Rng::random_range(&mut rng, 2..=4);
        let n = rand::Rng::random_range(&mut rng, 3..=25);
        let c = uniform_sample(&mut rng, d, n);
        let gfit = solve_general(&c, &Tolerances::default()).unwrap();
        assert!(gfit.converged, "{}", gfit.certificate);
        let closure = lattice_closure(&c.support());
        assert_eq!(gfit.table.support(), closure);

        // geometric-mean improvement test against random MTP2 q on the support
        let base = log_likelihood(&gfit.table, &c);
        for _ in 0..5 {
            let q = ferromagnet_table(&mut rng, &Graph::complete(d), 1.0, 1.0);
            let mixed: Vec<f64> = gfit.table.values().iter().zip(q.values()).map(|(a, b)| (a * b).sqrt()).collect();
            let m = ProbTable::from_weights(d, mixed).unwrap();
            assert!(log_likelihood(&m, &c) <= base + 1e-9);
        }

        // dominates the graph fit whenever that fit exists
        let g = random_graph(&mut rng, d, 0.7);
        if preflight_existence(&c, &g).unwrap().ok {
            let ising = fit(&c, &g, &FitOptions::default()).unwrap();
            assert!(log_likelihood(&ising.table, &c) <= base + 1e-9);
        }
    }
}

#[test]
fn sufficiency_oracle_identifies_perturbations() {
    let c = example_counts();
    let fit = solve_general(&c, &Tolerances::default()).unwrap();
    let mut values = fit.table.values().to_vec();
    values[3] *= 1.001;
    let bumped = ProbTable::from_weights(3, values).unwrap();
    let cert = mtp2::certify_general(&bumped, &c, &Tolerances::default()).unwrap();
    assert!(!cert.pass());
}
