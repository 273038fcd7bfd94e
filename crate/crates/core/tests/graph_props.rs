use blind_centrality::graph::{generate_sbm_core_periphery, is_connected, spectral_decompose};
use blind_centrality::seed::{rng_for, Purpose};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn spectral_residual_is_small(n in 2usize..60, core_frac in 0.05f64..0.9, p in 0.0f64..=0.25, seed: u64) {
        let core = ((n as f64 * core_frac) as usize).clamp(1, n - 1);
        let g = generate_sbm_core_periphery(n, core, p, &mut rng_for(seed, Purpose::Graph)).unwrap();
        let sd = spectral_decompose(&g).unwrap();
        prop_assert!(sd.max_residual() <= 1e-8);
        prop_assert!(sd.orthonormality_error() <= 1e-10);
        let ev = sd.eigenvalues();
        prop_assert!(ev.as_slice().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn perron_vector_is_positive_on_connected_graphs(n in 3usize..60, p in 0.05f64..=0.25, seed: u64) {
        let core = (n / 5).max(1);
        let g = generate_sbm_core_periphery(n, core, p, &mut rng_for(seed, Purpose::Graph)).unwrap();
        prop_assume!(is_connected(&g));
        let v1 = spectral_decompose(&g).unwrap().top_vector();
        prop_assert!(v1.iter().all(|&x| x > 0.0), "{v1}");
    }

    #[test]
    fn generation_is_seed_deterministic(n in 2usize..80, p in 0.0f64..=0.25, seed: u64) {
        let core = (n / 3).max(1).min(n - 1);
        let a = generate_sbm_core_periphery(n, core, p, &mut rng_for(seed, Purpose::Graph)).unwrap();
        let b = generate_sbm_core_periphery(n, core, p, &mut rng_for(seed, Purpose::Graph)).unwrap();
        prop_assert_eq!(a.adjacency(), b.adjacency());
    }
}

#[test]
fn periphery_nodes_share_a_degree_law() {
    // Degrees of periphery nodes 10 and 99 over 4000 graphs; the difference
    // of their means has standard deviation about 0.06.
    let (n, core, p, draws) = (100, 10, 0.05, 4000);
    let mut rng = rng_for(31, Purpose::Graph);
    let (mut first, mut last) = (vec![0usize; n], vec![0usize; n]);
    for _ in 0..draws {
        let g = generate_sbm_core_periphery(n, core, p, &mut rng).unwrap();
        first[g.degree(core)] += 1;
        last[g.degree(n - 1)] += 1;
    }
    let mean = |h: &[usize]| h.iter().enumerate().map(|(d, c)| d * c).sum::<usize>() as f64 / draws as f64;
    assert!((mean(&first) - mean(&last)).abs() < 0.3);
    // Two-sample Kolmogorov-Smirnov at alpha = 0.001: D < 1.95 * sqrt(2 / draws).
    let (mut cf, mut cl, mut ks) = (0usize, 0usize, 0.0f64);
    for d in 0..n {
        cf += first[d];
        cl += last[d];
        ks = ks.max((cf as f64 - cl as f64).abs() / draws as f64);
    }
    assert!(ks < 1.95 * (2.0 / draws as f64).sqrt(), "KS = {ks}");
}
