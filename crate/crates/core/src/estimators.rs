//! PCA and graph-filter-robust centrality estimators.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::filters::{filter_matrix, FilterSpec};
use crate::graph::{CentralityEstimate, Method, SpectralDecomposition, EIGEN_TIE_TOL};
use crate::linalg::{ensure_finite, singular_values, top_singular_triplet};
use crate::proxsolve::{decompose, threshold_sparse, Decomposition, SolverConfig};
use crate::signals::{InfluenceMatrix, SignalDataset};

/// Minimum `sigma_min / sigma_max` of the latent matrix for least squares.
pub const LATENT_RANK_TOL: f64 = 1e-10;

/// `lambda_min / lambda_max` of `Z Z^T` above which `Z` is certainly well conditioned.
const GRAM_RESOLVED_RATIO: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceSource {
    Exact,
    Sample,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    pub matrix: DMatrix<f64>,
    pub source: CovarianceSource,
}

/// `(1/m) Y Y^T`, uncentered.
pub fn sample_covariance(ds: &SignalDataset) -> CovarianceEstimate {
    let y = ds.y();
    let mut c = y * y.transpose() / ds.m() as f64;
    symmetrize(&mut c);
    CovarianceEstimate {
        matrix: c,
        source: CovarianceSource::Sample,
    }
}

/// `H(A) B B^T H(A)`, the covariance under unit-covariance latents.
pub fn exact_covariance(f: &FilterSpec, sd: &SpectralDecomposition, b: &InfluenceMatrix) -> Result<CovarianceEstimate> {
    if b.n() != sd.n() {
        return Err(Error::dim("exact_covariance influence rows", sd.n(), b.n()));
    }
    let hb = filter_matrix(f, sd)? * b.entries();
    Ok(exact_covariance_from_hb(&hb))
}

pub fn exact_covariance_from_hb(hb: &DMatrix<f64>) -> CovarianceEstimate {
    let mut c = hb * hb.transpose();
    symmetrize(&mut c);
    CovarianceEstimate {
        matrix: c,
        source: CovarianceSource::Exact,
    }
}

fn symmetrize(c: &mut DMatrix<f64>) {
    let t = c.transpose();
    *c += t;
    *c *= 0.5;
}

/// Top eigenvector of the covariance. A (near-)tied top eigenvalue attaches a
/// warning instead of failing.
pub fn pca_centrality(c: &CovarianceEstimate) -> Result<CentralityEstimate> {
    ensure_finite(&c.matrix, "covariance")?;
    let sd = SpectralDecomposition::of_symmetric(&c.matrix)?;
    let mut est = CentralityEstimate::new(sd.top_vector(), Method::Pca)?;
    if sd.n() >= 2 {
        let (l1, l2) = (sd.eigenvalues()[0], sd.eigenvalues()[1]);
        if l1 - l2 <= EIGEN_TIE_TOL * l1.abs().max(f64::MIN_POSITIVE) {
            est.warnings.push(format!(
                "top covariance eigenvalue is not simple (lambda_1 = {l1}, lambda_2 = {l2}); the estimate is arbitrary within the top eigenspace"
            ));
        }
    }
    Ok(est)
}

/// Least-squares estimate of `H(A) B`.
#[derive(Debug, Clone, PartialEq)]
pub struct HBEstimate {
    pub matrix: DMatrix<f64>,
}

/// Solves `min_H ||Y - H Z||_F` as `Y Z^T (Z Z^T)^{-1}` through a Cholesky
/// factorization of the `k x k` Gram matrix. Requires
/// `sigma_min(Z) > LATENT_RANK_TOL * sigma_max(Z)`.
pub fn estimate_hb(ds: &SignalDataset) -> Result<HBEstimate> {
    let (y, z) = (ds.y(), ds.z());
    ensure_finite(y, "observations")?;
    ensure_finite(z, "latents")?;
    if ds.m() < ds.k() {
        return Err(Error::IllPosed {
            singular_value: 0.0,
            largest: f64::NAN,
        });
    }
    let mut gram = z * z.transpose();
    symmetrize(&mut gram);
    // Gram eigenvalues resolve sigma_min / sigma_max only down to about
    // sqrt(eps); below GRAM_RESOLVED_RATIO the singular values of Z decide.
    let eig = gram.clone().symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if !(lo > GRAM_RESOLVED_RATIO * hi) {
        let sv = singular_values(z)?;
        let (smallest, largest) = (sv.min(), sv.max());
        if !(smallest > LATENT_RANK_TOL * largest) {
            return Err(Error::IllPosed {
                singular_value: smallest,
                largest,
            });
        }
    }
    let (smallest, largest) = (lo.max(0.0).sqrt(), hi.max(0.0).sqrt());
    let rhs = z * y.transpose();
    let solution = match gram.clone().cholesky() {
        Some(chol) => chol.solve(&rhs),
        None => gram.lu().solve(&rhs).ok_or(Error::IllPosed {
            singular_value: smallest,
            largest,
        })?,
    };
    Ok(HBEstimate {
        matrix: solution.transpose(),
    })
}

/// Everything the robust pipeline produces for one `H(A) B` estimate.
#[derive(Debug)]
pub struct RobustOutput {
    pub decomposition: Decomposition,
    pub robust: Result<CentralityEstimate>,
    pub quantized: Result<CentralityEstimate>,
    /// `threshold_sparse(S_hat, beta)`.
    pub s_thres: DMatrix<f64>,
}

fn top_left_vector(m: &DMatrix<f64>, method: Method) -> Result<CentralityEstimate> {
    if m.amax() == 0.0 {
        return Err(Error::Degenerate(format!("{method}: matrix for the singular vector is all zero")));
    }
    let (_, u, _) = top_singular_triplet(m)?;
    CentralityEstimate::new(u, method)
}

/// Decomposes `hb` once and derives both the plain and the quantized estimate:
/// the top left singular vector of `L_hat`, and of `hb - threshold(S_hat, beta)`.
pub fn robust_from_hb(hb: &DMatrix<f64>, cfg: &SolverConfig) -> Result<RobustOutput> {
    let decomposition = decompose(hb, cfg)?;
    let s_thres = threshold_sparse(&decomposition.s_hat, cfg.beta);
    let robust = top_left_vector(&decomposition.l_hat, Method::Robust).map_err(|e| match e {
        Error::Degenerate(_) => Error::Degenerate(format!(
            "robust: L_hat is zero because every singular value of the input is below lambda_L / 2 = {}; \
             the weights are absolute and must match the data scale",
            cfg.lambda_l / 2.0
        )),
        other => other,
    });
    let quantized = top_left_vector(&(hb - &s_thres), Method::RobustQuantized);
    Ok(RobustOutput {
        decomposition,
        robust,
        quantized,
        s_thres,
    })
}

/// Least squares, low-rank plus sparse split, and the top left singular vector
/// of `L_hat` (or of `HB_hat - S_thres` when `quantize` is set).
pub fn robust_centrality(ds: &SignalDataset, cfg: &SolverConfig, quantize: bool) -> Result<CentralityEstimate> {
    let hb = estimate_hb(ds)?;
    let out = robust_from_hb(&hb.matrix, cfg)?;
    if quantize {
        out.quantized
    } else {
        out.robust
    }
}
