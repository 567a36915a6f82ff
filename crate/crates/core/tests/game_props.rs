mod support;

use maximin_core::games::{
    make_lb_game, make_max_gamma_game, make_pair_game, make_synergy_game, random_monotone, random_simple_graph,
    random_supermodular,
};
use maximin_core::math::binomial;
use maximin_core::shapley::{
    is_monotone, is_supermodular, pinned_expectation, rank_expectation, shapley_exhaustive, verify_symmetry,
};
use maximin_core::{shapley_exact, Coalition, Game, Hypergraph};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::oracle::{pinned_by_permutations, shapley_by_permutations};

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

fn hypergraph() -> impl Strategy<Value = Hypergraph> {
    (2usize..=8).prop_flat_map(|n| {
        let edge = (1u64..(1 << n), 0.0f64..3.0);
        prop::collection::vec(edge, 0..8).prop_map(move |es| {
            Hypergraph::new(n, es.into_iter().map(|(m, w)| (Coalition::from_mask(m), w))).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn subset_form_equals_permutation_average(seed in any::<u64>(), n in 1usize..=7) {
        let g = random_monotone(n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let r = shapley_exhaustive(&g).unwrap();
        let p = shapley_by_permutations(&g);
        for i in 0..n {
            prop_assert!(close(r.phi[i], p[i]), "player {i}: {} vs {}", r.phi[i], p[i]);
        }
        prop_assert!(close(r.phi.iter().sum(), g.value(&g.grand_coalition())));
        prop_assert!(r.gamma <= n as f64 * binomial(n - 1, (n - 1) / 2) + 1e-9);
    }

    #[test]
    fn supermodular_games(seed in any::<u64>(), n in 1usize..=8, density in 0.05f64..0.6) {
        let g = random_supermodular(n, density, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert!(is_supermodular(&g).unwrap());
        prop_assert!(is_monotone(&g).unwrap());
        let r = shapley_exhaustive(&g).unwrap();
        prop_assert!(r.gamma <= n as f64 + 1e-9, "Gamma {} > n {}", r.gamma, n);
        for i in 0..n {
            let u: Vec<f64> = (1..=n).map(|j| rank_expectation(&g, i, j).unwrap()).collect();
            prop_assert!(u.windows(2).all(|w| w[0] <= w[1] + 1e-12), "{u:?}");
            let mean = u.iter().sum::<f64>() / n as f64;
            prop_assert!(close(mean, r.phi[i]));
        }
    }

    #[test]
    fn synergy_closed_form_matches_brute_force(h in hypergraph()) {
        let g = make_synergy_game(h);
        let closed = shapley_exact(&g).unwrap();
        let brute = shapley_exhaustive(&g).unwrap();
        prop_assert!(closed.closed_form && !brute.closed_form);
        for i in 0..g.players() {
            prop_assert!(close(closed.phi[i], brute.phi[i]));
            prop_assert!(close(closed.u_max[i], brute.u_max[i]));
        }
        prop_assert!(close(closed.gamma, brute.gamma));
        prop_assert!(closed.gamma <= g.graph().max_edge_size().max(1) as f64 + 1e-9);
        prop_assert!(is_supermodular(&g).unwrap());
        prop_assert!(verify_symmetry(&g, &g.symmetry_classes().unwrap()).unwrap());
    }

    #[test]
    fn lemma_5_2_pinning_never_hurts(seed in any::<u64>(), n in 2usize..=6) {
        let g = random_supermodular(n, 0.4, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let phi = shapley_exhaustive(&g).unwrap().phi;
        for honest in 0..n {
            for pinned in (0..n).filter(|&p| p != honest) {
                let e = pinned_by_permutations(&g, honest, pinned);
                prop_assert!(e >= phi[honest] - 1e-12);
                prop_assert!(close(e, pinned_expectation(&g, honest, &Coalition::singleton(pinned)).unwrap()));
            }
        }
    }
}

#[test]
fn named_closed_forms_match_brute_force() {
    let mut games: Vec<Box<dyn Game>> = Vec::new();
    for n in [4, 6, 8] {
        games.push(Box::new(make_lb_game(n).unwrap()));
    }
    for n in 2..=8 {
        games.push(Box::new(make_max_gamma_game(n).unwrap()));
        games.push(Box::new(make_pair_game(n, n / 2, 0).unwrap()));
    }
    for g in &games {
        let closed = shapley_exact(g).unwrap();
        let brute = shapley_exhaustive(g).unwrap();
        assert!(closed.closed_form);
        for i in 0..g.players() {
            assert!(close(closed.phi[i], brute.phi[i]), "phi_{i}: {} vs {}", closed.phi[i], brute.phi[i]);
            assert!(close(closed.u_max[i], brute.u_max[i]), "u_max_{i}");
        }
        assert!(close(closed.gamma, brute.gamma));
        assert!(close(brute.phi.iter().sum(), g.value(&g.grand_coalition())));
        if g.players() <= 12 {
            let classes = g.symmetry_classes().unwrap();
            assert!(verify_symmetry(g, &classes).unwrap());
            for c in &classes {
                assert!(c.iter().all(|&p| close(brute.phi[p], brute.phi[c[0]])));
            }
        }
    }
}

#[test]
fn max_gamma_game_attains_monotone_bound() {
    for n in 2..=8 {
        let r = shapley_exhaustive(&make_max_gamma_game(n).unwrap()).unwrap();
        let bound = n as f64 * binomial(n - 1, (n - 1) / 2);
        assert!(close(r.gamma, bound), "n={n}: {} vs {bound}", r.gamma);
    }
}

#[test]
fn simple_graph_synergy_games_have_gamma_two() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10 {
        let g = make_synergy_game(random_simple_graph(8, 0.3, &mut rng).unwrap());
        assert_eq!(shapley_exact(&g).unwrap().gamma, 2.0);
        assert!(close(shapley_exhaustive(&g).unwrap().gamma, 2.0));
    }
}

#[test]
fn triangle_examples() {
    let tri = Hypergraph::new(3, [0b011u64, 0b110, 0b101].map(|m| (Coalition::from_mask(m), 1.0))).unwrap();
    let g = make_synergy_game(tri);
    let mc = maximin_core::marginal_contribution(&g, 0, &Coalition::from_mask(0b110)).unwrap();
    assert_eq!(mc, 2.0);
    assert_eq!(shapley_by_permutations(&g), vec![1.0; 3]);
    let single = make_synergy_game(Hypergraph::new(3, [(Coalition::from_mask(0b111), 3.0)]).unwrap());
    assert_eq!(shapley_exact(&single).unwrap().phi, vec![1.0; 3]);
    let empty = make_synergy_game(Hypergraph::new(4, []).unwrap());
    let r = shapley_exact(&empty).unwrap();
    assert_eq!(r.phi, vec![0.0; 4]);
    assert_eq!(r.gamma, 1.0);
}

#[test]
fn pair_game_three_players() {
    // Brute force gives U_max = 2 and phi = 1 for both special players and
    // 0/0 for the third, so Gamma = 2.
    let r = shapley_exhaustive(&make_pair_game(3, 0, 1).unwrap()).unwrap();
    assert_eq!(r.gamma_per_player, vec![2.0, 2.0, 1.0]);
}
