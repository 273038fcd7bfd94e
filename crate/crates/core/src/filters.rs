//! Graph filters `H(A)` defined through their generating function `h(lambda)`,
//! low-pass diagnostics and the PCA / boosted error bounds.
//!
//! JSON schema of [`FilterSpec`]:
//!
//! ```json
//! {"kind": "poly", "coefficients": [1.0, 0.5]}
//! {"kind": "iir", "alpha": 0.1}
//! {"kind": "iir", "alpha": 0.5, "scale": "spectral"}
//! {"kind": "boosted", "inner": {"kind": "iir", "alpha": 0.1}, "rho": 1.0}
//! ```
//!
//! `poly` is `sum_t h_t A^t`. `iir` is `(I - alpha A)^{-1}`; with
//! `"scale": "spectral"` the effective parameter is `alpha / lambda_1` of the
//! graph it is applied to, so `alpha` is the pole distance `alpha_eff *
//! lambda_1` and must be below 1. `boosted` is `H(A) - rho I`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SpectralDecomposition;
use crate::linalg::top_singular_triplet;
use crate::signals::InfluenceMatrix;

/// Smallest `|h(lambda_1)|` accepted as a ratio denominator.
pub const DEGENERATE_GAIN: f64 = 1e-14;

/// Absolute tolerance on `v_1^T B q_1` for condition (i) of the PCA bound.
pub const ALIGNMENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IirScale {
    #[default]
    Absolute,
    Spectral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FilterSpec {
    Poly {
        coefficients: Vec<f64>,
    },
    Iir {
        alpha: f64,
        #[serde(default)]
        scale: IirScale,
    },
    Boosted {
        inner: Box<FilterSpec>,
        rho: f64,
    },
}

impl FilterSpec {
    pub fn identity() -> Self {
        FilterSpec::Poly {
            coefficients: vec![1.0],
        }
    }

    pub fn iir(alpha: f64) -> Self {
        FilterSpec::Iir {
            alpha,
            scale: IirScale::Absolute,
        }
    }

    pub fn iir_spectral(alpha: f64) -> Self {
        FilterSpec::Iir {
            alpha,
            scale: IirScale::Spectral,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FilterSpec::Poly { coefficients } => {
                if coefficients.is_empty() {
                    return Err(Error::Parameter("polynomial filter needs at least one coefficient".into()));
                }
                if coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Parameter("polynomial coefficients must be finite".into()));
                }
            }
            FilterSpec::Iir { alpha, scale } => {
                if !(alpha.is_finite() && *alpha > 0.0) {
                    return Err(Error::Parameter(format!("IIR alpha must be positive, got {alpha}")));
                }
                if *scale == IirScale::Spectral && *alpha >= 1.0 {
                    return Err(Error::Parameter(format!(
                        "spectrally scaled IIR alpha must be below 1, got {alpha}"
                    )));
                }
            }
            FilterSpec::Boosted { inner, rho } => {
                if !rho.is_finite() {
                    return Err(Error::Parameter(format!("boost rho must be finite, got {rho}")));
                }
                if matches!(**inner, FilterSpec::Boosted { .. }) {
                    return Err(Error::Parameter("filters can only be boosted once".into()));
                }
                inner.validate()?;
            }
        }
        Ok(())
    }

    /// Binds spectrally scaled IIR parameters to `sd` and checks the IIR pole
    /// condition `alpha * lambda_1 < 1`.
    pub fn resolve(&self, sd: &SpectralDecomposition) -> Result<FilterSpec> {
        self.validate()?;
        match self {
            FilterSpec::Poly { .. } => Ok(self.clone()),
            FilterSpec::Iir { alpha, scale } => {
                let lambda_max = sd.lambda_max();
                let alpha = match scale {
                    IirScale::Absolute => *alpha,
                    IirScale::Spectral => {
                        if lambda_max <= 0.0 {
                            return Err(Error::Domain(format!(
                                "spectral IIR scaling needs lambda_1 > 0, got {lambda_max}"
                            )));
                        }
                        alpha / lambda_max
                    }
                };
                let spectral_radius = sd
                    .eigenvalues()
                    .iter()
                    .fold(0.0f64, |acc, l| acc.max(l.abs()));
                if alpha * spectral_radius >= 1.0 {
                    return Err(Error::Domain(format!(
                        "IIR pole condition violated: alpha * lambda_1 = {} >= 1",
                        alpha * spectral_radius
                    )));
                }
                Ok(FilterSpec::iir(alpha))
            }
            FilterSpec::Boosted { inner, rho } => Ok(FilterSpec::Boosted {
                inner: Box::new(inner.resolve(sd)?),
                rho: *rho,
            }),
        }
    }

    pub fn is_boosted(&self) -> bool {
        matches!(self, FilterSpec::Boosted { .. })
    }
}

/// Generating function `h(lambda)` of a resolved filter.
pub fn filter_gain(f: &FilterSpec, lambda: f64) -> Result<f64> {
    match f {
        FilterSpec::Poly { coefficients } => {
            Ok(coefficients.iter().rev().fold(0.0, |acc, &c| acc * lambda + c))
        }
        FilterSpec::Iir { alpha, scale } => {
            if *scale == IirScale::Spectral {
                return Err(Error::Parameter(
                    "spectrally scaled IIR gain needs a spectrum; resolve the filter first".into(),
                ));
            }
            let x = alpha * lambda;
            if x.abs() >= 1.0 {
                return Err(Error::Domain(format!(
                    "IIR pole condition violated: |alpha * lambda| = {} >= 1",
                    x.abs()
                )));
            }
            Ok(1.0 / (1.0 - x))
        }
        FilterSpec::Boosted { inner, rho } => Ok(filter_gain(inner, lambda)? - rho),
    }
}

/// Gains `h(lambda_j)` over the spectrum, in descending eigenvalue order.
pub fn spectral_gains(f: &FilterSpec, sd: &SpectralDecomposition) -> Result<DVector<f64>> {
    let f = f.resolve(sd)?;
    let gains: Result<Vec<f64>> = sd.eigenvalues().iter().map(|&l| filter_gain(&f, l)).collect();
    Ok(DVector::from_vec(gains?))
}

/// Dense `n x n` matrix `H(A)`.
///
/// IIR filters are formed by solving `(I - alpha A) H = I` with LU rather
/// than through the eigenbasis.
pub fn filter_matrix(f: &FilterSpec, sd: &SpectralDecomposition) -> Result<DMatrix<f64>> {
    let f = f.resolve(sd)?;
    let n = sd.n();
    match &f {
        FilterSpec::Poly { .. } => {
            let gains = spectral_gains(&f, sd)?;
            let v = sd.eigenvectors();
            let mut scaled = v.clone();
            for (j, mut col) in scaled.column_iter_mut().enumerate() {
                col *= gains[j];
            }
            Ok(scaled * v.transpose())
        }
        FilterSpec::Iir { alpha, .. } => {
            let system = DMatrix::<f64>::identity(n, n) - sd.matrix() * *alpha;
            system
                .lu()
                .solve(&DMatrix::identity(n, n))
                .ok_or_else(|| Error::Domain("I - alpha A is singular".into()))
        }
        FilterSpec::Boosted { inner, rho } => {
            Ok(filter_matrix(inner, sd)? - DMatrix::<f64>::identity(n, n) * *rho)
        }
    }
}

/// `H(A) X`.
pub fn apply_filter(f: &FilterSpec, sd: &SpectralDecomposition, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.nrows() != sd.n() {
        return Err(Error::dim("apply_filter rows", sd.n(), x.nrows()));
    }
    Ok(filter_matrix(f, sd)? * x)
}

fn ratio_from_gains(gains: &DVector<f64>) -> Result<f64> {
    let top = gains[0].abs();
    if top < DEGENERATE_GAIN {
        return Err(Error::Degenerate(format!("|h(lambda_1)| = {top:e} is numerically zero")));
    }
    let rest = gains.iter().skip(1).fold(0.0f64, |acc, g| acc.max(g.abs()));
    Ok(rest / top)
}

/// `max_{j >= 2} |h(lambda_j)| / |h(lambda_1)|`; below 1 iff the filter is
/// 1-low-pass on this spectrum.
pub fn lowpass_ratio(f: &FilterSpec, sd: &SpectralDecomposition) -> Result<f64> {
    ratio_from_gains(&spectral_gains(f, sd)?)
}

/// `H(A) - rho I`.
pub fn boost(f: &FilterSpec, rho: f64) -> Result<FilterSpec> {
    if f.is_boosted() {
        return Err(Error::Parameter("filters can only be boosted once".into()));
    }
    let boosted = FilterSpec::Boosted {
        inner: Box::new(f.clone()),
        rho,
    };
    boosted.validate()?;
    Ok(boosted)
}

/// Realized improvement factor `ratio(H - rho I) / ratio(H)`.
pub fn compute_c_boost(f: &FilterSpec, rho: f64, sd: &SpectralDecomposition) -> Result<f64> {
    let base = lowpass_ratio(f, sd)?;
    if base <= 0.0 {
        return Err(Error::Degenerate("low-pass ratio of the unboosted filter is zero".into()));
    }
    Ok(lowpass_ratio(&boost(f, rho)?, sd)? / base)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsBundle {
    pub lowpass_ratio: f64,
    /// `sqrt(2) * ratio * ||V_{2:n}^T B q_1|| / |v_1^T B q_1|`, the PCA error bound.
    pub gamma_bound: f64,
    /// `c_boost * gamma_bound`, the bound for the boosted low-rank part.
    pub boosted_bound: f64,
    pub c_boost: f64,
    pub rho: f64,
    /// Top right singular vector of `H(A) B`.
    pub q1: DVector<f64>,
    /// `h(lambda_1) - max_{j >= 2} h(lambda_j)` on signed gains.
    pub signed_gap: f64,
    /// Notes on disagreements between the signed and absolute low-pass tests.
    pub notes: Vec<String>,
}

/// Evaluates the PCA and boosted alignment bounds for `H(A) B`.
///
/// Requires (i) `|v_1^T B q_1| > 1e-12` and (ii) `h(lambda_1) > h(lambda_j)`
/// for all `j >= 2` on signed gains. The sign of `q_1` is arbitrary, so the
/// denominator uses `|v_1^T B q_1|`.
pub fn lemma1_bound(
    f: &FilterSpec,
    sd: &SpectralDecomposition,
    b: &InfluenceMatrix,
    rho: f64,
) -> Result<DiagnosticsBundle> {
    if f.is_boosted() {
        return Err(Error::Parameter("bound is stated for the unboosted filter".into()));
    }
    let b = b.entries();
    if b.nrows() != sd.n() {
        return Err(Error::dim("lemma1_bound influence rows", sd.n(), b.nrows()));
    }
    let gains = spectral_gains(f, sd)?;
    let signed_rest = gains.iter().skip(1).fold(f64::NEG_INFINITY, |acc, &g| acc.max(g));
    let signed_gap = gains[0] - signed_rest;
    if sd.n() > 1 && signed_gap <= 0.0 {
        return Err(Error::Precondition(format!(
            "condition (ii) h(lambda_1) > max_j h(lambda_j) fails (gap {signed_gap:e})"
        )));
    }
    let ratio = ratio_from_gains(&gains)?;
    let mut notes = Vec::new();
    if ratio >= 1.0 {
        notes.push(format!(
            "signed condition (ii) holds but the absolute low-pass ratio is {ratio} >= 1"
        ));
    }

    let hb = filter_matrix(f, sd)? * b;
    let (_, _, q1) = top_singular_triplet(&hb)?;
    let bq = b * &q1;
    let v = sd.eigenvectors();
    let along = v.column(0).dot(&bq);
    if along.abs() <= ALIGNMENT_TOL {
        return Err(Error::Precondition(format!(
            "condition (i) v_1^T B q_1 != 0 fails (value {along:e})"
        )));
    }
    let across = (v.columns(1, sd.n() - 1).transpose() * &bq).norm();
    let gamma_bound = std::f64::consts::SQRT_2 * ratio * across / along.abs();

    let c_boost = compute_c_boost(f, rho, sd)?;
    Ok(DiagnosticsBundle {
        lowpass_ratio: ratio,
        gamma_bound,
        boosted_bound: c_boost * gamma_bound,
        c_boost,
        rho,
        q1,
        signed_gap,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_sbm_core_periphery, spectral_decompose, Graph};
    use crate::seed::{rng_for, Purpose};

    fn k3() -> SpectralDecomposition {
        spectral_decompose(&Graph::complete(3)).unwrap()
    }

    fn sbm_sd(seed: u64) -> SpectralDecomposition {
        let g = generate_sbm_core_periphery(100, 10, 0.05, &mut rng_for(seed, Purpose::Graph)).unwrap();
        spectral_decompose(&g).unwrap()
    }

    #[test]
    fn gains() {
        assert_eq!(filter_gain(&FilterSpec::identity(), 7.3).unwrap(), 1.0);
        assert!((filter_gain(&FilterSpec::iir(0.1), 2.0).unwrap() - 1.25).abs() < 1e-15);
        let boosted = boost(&FilterSpec::iir(0.1), 1.0).unwrap();
        assert!((filter_gain(&boosted, 2.0).unwrap() - 0.25).abs() < 1e-15);
        assert!(matches!(filter_gain(&FilterSpec::iir(0.1), 10.0), Err(Error::Domain(_))));
        assert!(filter_gain(&FilterSpec::iir_spectral(0.5), 1.0).is_err());
    }

    #[test]
    fn boosted_iir_gain_identity() {
        let f = boost(&FilterSpec::iir(0.1), 1.0).unwrap();
        for lambda in [-5.0, -1.0, 0.0, 0.5, 3.0, 9.0] {
            let want = 0.1 * lambda / (1.0 - 0.1 * lambda);
            assert!((filter_gain(&f, lambda).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn boost_zero_and_poly() {
        let poly = FilterSpec::Poly {
            coefficients: vec![0.3, -1.0, 0.25],
        };
        let b0 = boost(&poly, 0.0).unwrap();
        let b2 = boost(&poly, 2.0).unwrap();
        for lambda in [-2.0, 0.0, 1.5] {
            let h = filter_gain(&poly, lambda).unwrap();
            assert_eq!(filter_gain(&b0, lambda).unwrap(), h);
            assert_eq!(filter_gain(&b2, lambda).unwrap(), h - 2.0);
        }
        assert!(boost(&b2, 1.0).is_err());
    }

    #[test]
    fn identity_and_shift_application() {
        let g = generate_sbm_core_periphery(30, 5, 0.1, &mut rng_for(2, Purpose::Graph)).unwrap();
        let sd = spectral_decompose(&g).unwrap();
        let x = DMatrix::from_fn(30, 3, |i, j| ((i + 3 * j) as f64).cos());
        let y = apply_filter(&FilterSpec::identity(), &sd, &x).unwrap();
        assert!((y - &x).amax() < 1e-12);
        let shift = FilterSpec::Poly {
            coefficients: vec![0.0, 1.0],
        };
        let ax = apply_filter(&shift, &sd, &x).unwrap();
        assert!((ax - g.adjacency() * &x).amax() < 1e-10);
        assert!(apply_filter(&shift, &sd, &DMatrix::zeros(29, 1)).is_err());
    }

    #[test]
    fn iir_matches_neumann_series() {
        let sd = k3();
        let a = sd.matrix().clone();
        let x = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let mut term = x.clone();
        let mut series = x.clone();
        for _ in 1..=50 {
            term = &a * &term * 0.1;
            series += &term;
        }
        let y = apply_filter(&FilterSpec::iir(0.1), &sd, &x).unwrap();
        assert!((y - series).amax() < 1e-10);
    }

    #[test]
    fn lowpass_ratios() {
        assert!((lowpass_ratio(&FilterSpec::identity(), &k3()).unwrap() - 1.0).abs() < 1e-12);
        // gains 1.25, 1/1.1, 1/1.1
        let r = lowpass_ratio(&FilterSpec::iir(0.1), &k3()).unwrap();
        assert!((r - (1.0 / 1.1) / 1.25).abs() < 1e-12);
        assert!((r - 0.727_272_727_272_727_3).abs() < 1e-12);
        let zero = FilterSpec::Poly {
            coefficients: vec![0.0],
        };
        assert!(matches!(lowpass_ratio(&zero, &k3()), Err(Error::Degenerate(_))));
    }

    #[test]
    fn iir_ratio_closed_form_when_lambda2_nonnegative() {
        let sd = sbm_sd(4);
        let ev = sd.eigenvalues();
        assert!(ev[1] >= 0.0);
        let alpha = 0.5 / ev[0];
        let r = lowpass_ratio(&FilterSpec::iir(alpha), &sd).unwrap();
        let want = (1.0 - alpha * ev[0]) / (1.0 - alpha * ev[1]);
        assert!((r - want).abs() < 1e-12);
    }

    #[test]
    fn spectral_scale_resolves_against_lambda_max() {
        let sd = sbm_sd(1);
        let resolved = FilterSpec::iir_spectral(0.1).resolve(&sd).unwrap();
        match resolved {
            FilterSpec::Iir { alpha, scale } => {
                assert_eq!(scale, IirScale::Absolute);
                assert!((alpha * sd.lambda_max() - 0.1).abs() < 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn literal_alpha_violates_pole_on_core_periphery_graphs() {
        // lambda_1 of the n = 100 core-periphery graph sits well above 10.
        let sd = sbm_sd(0);
        assert!(sd.lambda_max() > 10.0);
        assert!(matches!(FilterSpec::iir(0.1).resolve(&sd), Err(Error::Domain(_))));
    }

    #[test]
    fn c_boost_values() {
        let sd = sbm_sd(3);
        let f = FilterSpec::iir_spectral(0.5);
        assert!((compute_c_boost(&f, 0.0, &sd).unwrap() - 1.0).abs() < 1e-12);
        let c = compute_c_boost(&f, 1.0, &sd).unwrap();
        // Exhaustive evaluation of the boosted gains.
        let alpha = 0.5 / sd.lambda_max();
        let ev = sd.eigenvalues();
        let h = |l: f64| 1.0 / (1.0 - alpha * l);
        let ht = |l: f64| h(l) - 1.0;
        let r = ev.iter().skip(1).map(|&l| h(l).abs()).fold(0.0, f64::max) / h(ev[0]);
        let rt = ev.iter().skip(1).map(|&l| ht(l).abs()).fold(0.0, f64::max) / ht(ev[0]).abs();
        assert!((c - rt / r).abs() < 1e-12);
        assert!(c < 1.0);
        // lambda_2 dominates |lambda_n| here, giving lambda_2 / lambda_1.
        if ev[1] >= ev[ev.len() - 1].abs() {
            assert!((c - ev[1] / ev[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn bound_vanishes_for_identity_influence() {
        let sd = sbm_sd(5);
        let b = InfluenceMatrix::external(DMatrix::identity(100, 100));
        let d = lemma1_bound(&FilterSpec::iir_spectral(0.5), &sd, &b, 1.0).unwrap();
        assert!(d.gamma_bound < 1e-10, "gamma = {}", d.gamma_bound);
        assert!((d.q1.norm() - 1.0).abs() < 1e-10);
        assert!(d.boosted_bound <= d.gamma_bound);
    }

    #[test]
    fn bound_preconditions_reported() {
        let sd = k3();
        // h(lambda) = -lambda flips the order: condition (ii) fails.
        let f = FilterSpec::Poly {
            coefficients: vec![0.0, -1.0],
        };
        let b = InfluenceMatrix::external(DMatrix::identity(3, 3));
        match lemma1_bound(&f, &sd, &b, 1.0) {
            Err(Error::Precondition(msg)) => assert!(msg.contains("(ii)")),
            other => panic!("unexpected {other:?}"),
        }
        // B orthogonal to v_1 = 1/sqrt(3): condition (i) fails.
        let b = InfluenceMatrix::external(DMatrix::from_column_slice(3, 1, &[1.0, -1.0, 0.0]));
        match lemma1_bound(&FilterSpec::iir(0.1), &sd, &b, 1.0) {
            Err(Error::Precondition(msg)) => assert!(msg.contains("(i)")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn json_schema() {
        let f: FilterSpec = serde_json::from_str(r#"{"kind":"iir","alpha":0.1}"#).unwrap();
        assert_eq!(f, FilterSpec::iir(0.1));
        let f: FilterSpec = serde_json::from_str(
            r#"{"kind":"boosted","inner":{"kind":"poly","coefficients":[1,2]},"rho":1}"#,
        )
        .unwrap();
        assert!(f.is_boosted());
        let text = serde_json::to_string(&FilterSpec::iir_spectral(0.5)).unwrap();
        assert_eq!(text, r#"{"kind":"iir","alpha":0.5,"scale":"spectral"}"#);
        let nested: FilterSpec = serde_json::from_str(
            r#"{"kind":"boosted","inner":{"kind":"boosted","inner":{"kind":"iir","alpha":0.1},"rho":1},"rho":1}"#,
        )
        .unwrap();
        assert!(nested.validate().is_err());
    }
}
