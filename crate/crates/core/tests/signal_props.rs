use blind_centrality::estimators::{exact_covariance, sample_covariance};
use blind_centrality::filters::FilterSpec;
use blind_centrality::graph::{generate_sbm_core_periphery, spectral_decompose};
use blind_centrality::seed::{rng_for, Purpose};
use blind_centrality::signals::{generate_influence, sample_latents, synthesize, InfluencePattern};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn pattern() -> impl Strategy<Value = InfluencePattern> {
    prop_oneof![
        Just(InfluencePattern::DenseFraction),
        Just(InfluencePattern::PerRowRange),
        Just(InfluencePattern::PerRowCeil),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn synthesis_is_linear_in_latents(seed: u64, k in 6usize..30, m in 1usize..20, pat in pattern()) {
        let g = generate_sbm_core_periphery(40, 5, 0.1, &mut rng_for(seed, Purpose::Graph)).unwrap();
        let sd = spectral_decompose(&g).unwrap();
        let f = FilterSpec::iir(0.5 / sd.lambda_max());
        let b = generate_influence(pat, 40, k, &mut rng_for(seed, Purpose::Influence)).unwrap();
        let mut rng = rng_for(seed, Purpose::Latent);
        let z1 = sample_latents(k, m, &mut rng).unwrap();
        let z2 = sample_latents(k, m, &mut rng).unwrap();
        let sum = synthesize(&f, &sd, &b, &(&z1 + &z2)).unwrap();
        let parts = synthesize(&f, &sd, &b, &z1).unwrap().y() + synthesize(&f, &sd, &b, &z2).unwrap().y();
        prop_assert!((sum.y() - parts).amax() <= 1e-10);
    }

    #[test]
    fn influence_is_a_function_of_the_seed(seed: u64, k in 6usize..60, pat in pattern()) {
        let a = generate_influence(pat, 50, k, &mut rng_for(seed, Purpose::Influence)).unwrap();
        let b = generate_influence(pat, 50, k, &mut rng_for(seed, Purpose::Influence)).unwrap();
        prop_assert_eq!(a.entries(), b.entries());
    }
}

#[test]
fn sample_covariance_approaches_closed_form() {
    let (n, k, m) = (30, 8, 100_000);
    let g = generate_sbm_core_periphery(n, 5, 0.1, &mut rng_for(3, Purpose::Graph)).unwrap();
    let sd = spectral_decompose(&g).unwrap();
    let f = FilterSpec::iir(0.5 / sd.lambda_max());
    let b = generate_influence(InfluencePattern::DenseFraction, n, k, &mut rng_for(3, Purpose::Influence)).unwrap();
    let z = sample_latents(k, m, &mut rng_for(3, Purpose::Latent)).unwrap();
    let ds = synthesize(&f, &sd, &b, &z).unwrap();
    let exact = exact_covariance(&f, &sd, &b).unwrap().matrix;
    let sample = sample_covariance(&ds).matrix;
    // For Gaussian y, E ||C_hat - C||_F^2 = ((tr C)^2 + ||C||_F^2) / m.
    let rms = ((exact.trace().powi(2) + exact.norm_squared()) / m as f64).sqrt();
    let tol = 3.0 * rms;
    let diff: DMatrix<f64> = sample - &exact;
    assert!(diff.norm() <= tol, "{} > {}", diff.norm(), tol);
}
