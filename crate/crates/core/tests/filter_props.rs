use blind_centrality::estimators::{exact_covariance, pca_centrality};
use blind_centrality::eval::alignment_error;
use blind_centrality::filters::{apply_filter, boost, filter_gain, filter_matrix, lemma1_bound, spectral_gains, FilterSpec};
use blind_centrality::graph::{eigen_centrality, generate_sbm_core_periphery, is_connected, spectral_decompose, CentralityEstimate, Graph, Method};
use blind_centrality::seed::{rng_for, Purpose};
use blind_centrality::signals::{generate_influence, InfluencePattern};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

fn sbm(n: usize, p: f64, seed: u64) -> Graph {
    generate_sbm_core_periphery(n, (n / 5).max(1), p, &mut rng_for(seed, Purpose::Graph)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn polynomial_filter_matches_power_sum(
        n in 2usize..30,
        seed: u64,
        coefficients in prop::collection::vec(-1.0f64..1.0, 1..5),
        x in prop::collection::vec(-1.0f64..1.0, 30),
    ) {
        let g = sbm(n, 0.2, seed);
        let sd = spectral_decompose(&g).unwrap();
        let x = DMatrix::from_column_slice(n, 1, &x[..n]);
        let f = FilterSpec::Poly { coefficients: coefficients.clone() };
        let spectral = apply_filter(&f, &sd, &x).unwrap();
        let mut direct = DMatrix::zeros(n, 1);
        let mut power = x.clone();
        for h in &coefficients {
            direct += &power * *h;
            power = g.adjacency() * power;
        }
        prop_assert!((spectral - direct).norm() <= 1e-8);
    }

    #[test]
    fn iir_output_solves_the_linear_system(n in 2usize..40, seed: u64, r in 0.01f64..0.99) {
        let g = sbm(n, 0.15, seed);
        let sd = spectral_decompose(&g).unwrap();
        let alpha = r / sd.lambda_max().abs().max(1e-3);
        let x = DMatrix::from_fn(n, 3, |i, j| ((i * 3 + j) as f64).cos());
        let y = apply_filter(&FilterSpec::iir(alpha), &sd, &x).unwrap();
        let lhs = (DMatrix::identity(n, n) - g.adjacency() * alpha) * y;
        prop_assert!((lhs - x).norm() <= 1e-8);
    }

    #[test]
    fn boost_subtracts_exactly(lambda in -20.0f64..20.0, rho in -3.0f64..3.0, c in prop::collection::vec(-2.0f64..2.0, 1..5)) {
        let f = FilterSpec::Poly { coefficients: c };
        let gain = filter_gain(&f, lambda).unwrap();
        prop_assert_eq!(filter_gain(&boost(&f, rho).unwrap(), lambda).unwrap(), gain - rho);
        let iir = FilterSpec::iir(0.01);
        let gain = filter_gain(&iir, lambda).unwrap();
        prop_assert_eq!(filter_gain(&boost(&iir, rho).unwrap(), lambda).unwrap(), gain - rho);
    }

    #[test]
    fn iir_gain_increases_along_the_spectrum(n in 2usize..50, seed: u64, r in 0.01f64..0.99) {
        let sd = spectral_decompose(&sbm(n, 0.2, seed)).unwrap();
        let lmax = sd.eigenvalues().iter().fold(0.0f64, |a, l| a.max(l.abs()));
        prop_assume!(lmax > 0.0);
        let gains = spectral_gains(&FilterSpec::iir(r / lmax), &sd).unwrap();
        let ev = sd.eigenvalues();
        for j in 1..n {
            prop_assert!(gains[j - 1] >= gains[j]);
            if ev[j - 1] - ev[j] > 1e-9 * lmax {
                prop_assert!(gains[j - 1] > gains[j]);
            }
        }
    }
}

fn pca_error_bound_instance(rng: &mut impl Rng) -> Option<(f64, f64, f64, f64)> {
    let g = generate_sbm_core_periphery(100, 10, 0.05, rng).ok()?;
    if !is_connected(&g) {
        return None;
    }
    let sd = spectral_decompose(&g).unwrap();
    let f = FilterSpec::iir(rng.random_range(0.05..0.95) / sd.lambda_max());
    let pattern = [InfluencePattern::DenseFraction, InfluencePattern::PerRowRange, InfluencePattern::PerRowCeil]
        [rng.random_range(0..3)];
    let k = rng.random_range(10..=100);
    let b = generate_influence(pattern, 100, k, rng).unwrap();
    let diag = lemma1_bound(&f, &sd, &b, 1.0).ok()?;
    let truth = eigen_centrality(&sd, &g).unwrap();

    let pca = pca_centrality(&exact_covariance(&f, &sd, &b).unwrap()).unwrap();
    let pca_err = alignment_error(&truth, &pca).unwrap();

    let boosted = filter_matrix(&boost(&f, 1.0).unwrap(), &sd).unwrap() * b.entries();
    let svd = boosted.svd(true, false);
    let top = svd.singular_values.imax();
    let u = DVector::from(svd.u.unwrap().column(top));
    let boosted_err = alignment_error(&truth, &CentralityEstimate::new(u, Method::Robust).unwrap()).unwrap();
    Some((pca_err, diag.gamma_bound, boosted_err, diag.boosted_bound))
}

#[test]
fn alignment_bounds_hold_on_random_instances() {
    let mut rng = rng_for(8, Purpose::Generic);
    let (mut checked, mut violations) = (0, 0);
    while checked < 100 {
        if let Some((e, g, eb, gb)) = pca_error_bound_instance(&mut rng) {
            checked += 1;
            violations += (e > g) as usize + (eb > gb) as usize;
        }
    }
    assert_eq!(violations, 0);
}
