use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{Error, Result};

const SVD_MAX_ITERS: usize = 10_000;

/// Convergence threshold of the bidiagonal iteration. Exactly `f64::EPSILON`
/// can settle on inaccurate singular values for rank-deficient input.
const SVD_EPS: f64 = 5.0 * f64::EPSILON;

pub(crate) fn svd(m: &DMatrix<f64>) -> Result<SVD<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    SVD::try_new(m.clone(), true, true, SVD_EPS, SVD_MAX_ITERS).ok_or(Error::NonConvergence {
        what: "SVD",
        iterations: SVD_MAX_ITERS,
    })
}

/// Singular values only.
pub(crate) fn singular_values(m: &DMatrix<f64>) -> Result<DVector<f64>> {
    SVD::try_new(m.clone(), false, false, SVD_EPS, SVD_MAX_ITERS)
        .map(|s| s.singular_values)
        .ok_or(Error::NonConvergence {
            what: "SVD",
            iterations: SVD_MAX_ITERS,
        })
}

/// Largest singular value with its left and right singular vectors.
pub(crate) fn top_singular_triplet(m: &DMatrix<f64>) -> Result<(f64, DVector<f64>, DVector<f64>)> {
    let svd = svd(m)?;
    let idx = svd.singular_values.imax();
    let u = svd.u.as_ref().expect("requested U").column(idx).into_owned();
    let v = svd.v_t.as_ref().expect("requested V^T").row(idx).transpose();
    Ok((svd.singular_values[idx], u, v))
}

pub(crate) fn ensure_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if let Some(pos) = m.iter().position(|x| !x.is_finite()) {
        let (i, j) = (pos % m.nrows(), pos / m.nrows());
        return Err(Error::Input(format!("{what} has a non-finite entry at ({i}, {j})")));
    }
    Ok(())
}
