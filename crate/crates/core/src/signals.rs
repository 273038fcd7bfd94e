//! Sparse influence matrices, latent drivers and filtered signal synthesis.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{apply_filter, FilterSpec};
use crate::graph::SpectralDecomposition;
use crate::io::{read_matrix_csv, write_matrix_csv};

/// Range of generated nonzero influence magnitudes.
pub const INFLUENCE_MIN: f64 = 0.1;
pub const INFLUENCE_MAX: f64 = 1.0;

/// Sparsity pattern of an influence matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InfluencePattern {
    /// (a): each entry nonzero independently with probability 0.1.
    #[serde(rename = "dense-fraction", alias = "a")]
    DenseFraction,
    /// (b): per row, `U{3..6}` nonzero positions.
    #[serde(rename = "per-row-range", alias = "b")]
    PerRowRange,
    /// (c): per row, `U{0..ceil(0.1 k)}` nonzero positions.
    #[serde(rename = "per-row-ceil", alias = "c")]
    PerRowCeil,
    #[serde(rename = "identity")]
    Identity,
    #[serde(rename = "external")]
    External,
}

impl InfluencePattern {
    pub fn as_str(&self) -> &'static str {
        match self {
            InfluencePattern::DenseFraction => "dense-fraction",
            InfluencePattern::PerRowRange => "per-row-range",
            InfluencePattern::PerRowCeil => "per-row-ceil",
            InfluencePattern::Identity => "identity",
            InfluencePattern::External => "external",
        }
    }
}

impl fmt::Display for InfluencePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InfluencePattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" | "dense-fraction" => Ok(InfluencePattern::DenseFraction),
            "b" | "per-row-range" => Ok(InfluencePattern::PerRowRange),
            "c" | "per-row-ceil" => Ok(InfluencePattern::PerRowCeil),
            "identity" => Ok(InfluencePattern::Identity),
            "external" => Ok(InfluencePattern::External),
            other => Err(Error::Parameter(format!("unknown influence pattern `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceMatrix {
    entries: DMatrix<f64>,
    pattern: InfluencePattern,
}

impl InfluenceMatrix {
    pub fn external(entries: DMatrix<f64>) -> Self {
        InfluenceMatrix {
            entries,
            pattern: InfluencePattern::External,
        }
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn pattern(&self) -> InfluencePattern {
        self.pattern
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn k(&self) -> usize {
        self.entries.ncols()
    }

    pub fn nnz(&self) -> usize {
        self.entries.iter().filter(|&&x| x != 0.0).count()
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.entries.row(i).iter().filter(|&&x| x != 0.0).count()
    }
}

/// Draws an `n x k` influence matrix.
///
/// Pattern (a) visits entries row by row, drawing a Bernoulli(0.1) flag and,
/// on success, the value. Patterns (b) and (c) draw a row count, then the
/// positions without replacement, then one value per position in increasing
/// column order. Values are `U[0.1, 1]`.
pub fn generate_influence<R: Rng + ?Sized>(
    pattern: InfluencePattern,
    n: usize,
    k: usize,
    rng: &mut R,
) -> Result<InfluenceMatrix> {
    if n == 0 || k == 0 {
        return Err(Error::Parameter(format!("influence matrix needs n, k >= 1 (got {n} x {k})")));
    }
    let mut b = DMatrix::zeros(n, k);
    match pattern {
        InfluencePattern::DenseFraction => {
            for i in 0..n {
                for j in 0..k {
                    if rng.random::<f64>() < 0.1 {
                        b[(i, j)] = rng.random_range(INFLUENCE_MIN..INFLUENCE_MAX);
                    }
                }
            }
        }
        InfluencePattern::PerRowRange | InfluencePattern::PerRowCeil => {
            let (lo, hi) = if pattern == InfluencePattern::PerRowRange {
                if k < 6 {
                    return Err(Error::Parameter(format!("pattern (b) needs k >= 6, got {k}")));
                }
                (3, 6)
            } else {
                (0, (k as f64 * 0.1).ceil() as usize)
            };
            for i in 0..n {
                let count = rng.random_range(lo..=hi);
                let mut cols = index::sample(rng, k, count).into_vec();
                cols.sort_unstable();
                for j in cols {
                    b[(i, j)] = rng.random_range(INFLUENCE_MIN..INFLUENCE_MAX);
                }
            }
        }
        InfluencePattern::Identity => {
            if n != k {
                return Err(Error::Parameter(format!("identity influence needs n = k (got {n} x {k})")));
            }
            b = DMatrix::identity(n, k);
        }
        InfluencePattern::External => {
            return Err(Error::Parameter("external influence matrices are not generated".into()));
        }
    }
    Ok(InfluenceMatrix { entries: b, pattern })
}

/// `k x m` matrix of i.i.d. standard normals, filled one sample (column) at a time.
pub fn sample_latents<R: Rng + ?Sized>(k: usize, m: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    if k == 0 || m == 0 {
        return Err(Error::Parameter(format!("latents need k, m >= 1 (got {k} x {m})")));
    }
    let mut z = DMatrix::zeros(k, m);
    for j in 0..m {
        for i in 0..k {
            z[(i, j)] = rng.sample(StandardNormal);
        }
    }
    Ok(z)
}

/// Paired observations `Y` (n x m) and latent drivers `Z` (k x m).
#[derive(Debug, Clone, PartialEq)]
pub struct SignalDataset {
    y: DMatrix<f64>,
    z: DMatrix<f64>,
}

impl SignalDataset {
    pub fn new(y: DMatrix<f64>, z: DMatrix<f64>) -> Result<Self> {
        if y.ncols() != z.ncols() {
            return Err(Error::dim("dataset sample count", y.ncols(), z.ncols()));
        }
        if y.ncols() == 0 {
            return Err(Error::Input("dataset needs at least one sample".into()));
        }
        Ok(SignalDataset { y, z })
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn z(&self) -> &DMatrix<f64> {
        &self.z
    }

    pub fn n(&self) -> usize {
        self.y.nrows()
    }

    pub fn k(&self) -> usize {
        self.z.nrows()
    }

    pub fn m(&self) -> usize {
        self.y.ncols()
    }

    /// Writes `Y.csv` and `Z.csv` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        write_matrix_csv(&dir.join("Y.csv"), &self.y)?;
        write_matrix_csv(&dir.join("Z.csv"), &self.z)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        Self::load_files(&dir.join("Y.csv"), &dir.join("Z.csv"))
    }

    pub fn load_files(y_path: &Path, z_path: &Path) -> Result<Self> {
        SignalDataset::new(read_matrix_csv(y_path)?, read_matrix_csv(z_path)?)
    }
}

/// `Y = H(A) B Z`.
pub fn synthesize(
    f: &FilterSpec,
    sd: &SpectralDecomposition,
    b: &InfluenceMatrix,
    z: &DMatrix<f64>,
) -> Result<SignalDataset> {
    if b.k() != z.nrows() {
        return Err(Error::dim("synthesize latent rows", b.k(), z.nrows()));
    }
    if b.n() != sd.n() {
        return Err(Error::dim("synthesize influence rows", sd.n(), b.n()));
    }
    let x = b.entries() * z;
    SignalDataset::new(apply_filter(f, sd, &x)?, z.clone())
}
