//! Low-rank plus sparse splitting of a matrix `M`:
//!
//! ```text
//! minimize  ||M - L - S||_F^2 + lambda_L ||L||_* + lambda_S ||vec(S)||_1
//! ```
//!
//! solved by exact block-coordinate descent from `L = S = 0`. The fidelity
//! term carries no factor 1/2, so both proximal steps use half the
//! regularization weight as their threshold:
//!
//! ```text
//! L <- svt(M - S, lambda_L / 2)
//! S <- soft_threshold(M - L, lambda_S / 2)
//! ```
//!
//! Each step exactly minimizes the objective over its block, so the objective
//! never increases.
//!
//! Note: any stationary point satisfies `||2 (M - L - S)||_2 <= lambda_L` and
//! `|2 (M - L - S)_ij| = lambda_S` on the support of `S`. Entries never
//! exceed the spectral norm, so `lambda_S > lambda_L` forces `S = 0` at the
//! optimum, whatever `M` is.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::write_matrix_csv;
use crate::linalg::{ensure_finite, svd};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Nuclear-norm weight.
    pub lambda_l: f64,
    /// Entrywise l1 weight.
    pub lambda_s: f64,
    pub max_iters: usize,
    /// Stop once the relative objective decrease of an iteration is below this.
    pub tol: f64,
    /// Quantization threshold applied to the sparse part.
    pub beta: f64,
    /// Besides `tol`, require `||S_t - S_{t-1}||_F <= step_tol * max(1, ||M||_F)`
    /// before declaring convergence. This bounds the fixed-point residual of
    /// the low-rank block.
    #[serde(default = "default_step_tol")]
    pub step_tol: f64,
}

fn default_step_tol() -> f64 {
    1e-10
}

impl SolverConfig {
    /// `lambda_L = 0.1`, `lambda_S = 0.2 + 2 / sqrt(k)`, `beta = 0.1`.
    pub fn default_for_k(k: usize) -> Self {
        SolverRecipe::default().for_k(k)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_l >= 0.0 && self.lambda_l.is_finite()) {
            return Err(Error::Parameter(format!("lambda_L must be >= 0, got {}", self.lambda_l)));
        }
        if !(self.lambda_s >= 0.0 && self.lambda_s.is_finite()) {
            return Err(Error::Parameter(format!("lambda_S must be >= 0, got {}", self.lambda_s)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Parameter(format!("tol must be > 0, got {}", self.tol)));
        }
        if !(self.step_tol > 0.0) {
            return Err(Error::Parameter(format!("step_tol must be > 0, got {}", self.step_tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::Parameter("max_iters must be >= 1".into()));
        }
        if !self.beta.is_finite() {
            return Err(Error::Parameter(format!("beta must be finite, got {}", self.beta)));
        }
        Ok(())
    }
}

/// `k`-independent form of [`SolverConfig`]: `lambda_S = c0 + c1 / sqrt(k)`,
/// `lambda_L = c2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverRecipe {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub beta: f64,
    #[serde(default = "default_step_tol")]
    pub step_tol: f64,
}

impl Default for SolverRecipe {
    fn default() -> Self {
        SolverRecipe {
            c0: 0.2,
            c1: 2.0,
            c2: 0.1,
            max_iters: 500,
            tol: 1e-8,
            beta: 0.1,
            step_tol: default_step_tol(),
        }
    }
}

impl SolverRecipe {
    pub fn for_k(&self, k: usize) -> SolverConfig {
        SolverConfig {
            lambda_l: self.c2,
            lambda_s: self.c0 + self.c1 / (k.max(1) as f64).sqrt(),
            max_iters: self.max_iters,
            tol: self.tol,
            beta: self.beta,
            step_tol: self.step_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub l_hat: DMatrix<f64>,
    pub s_hat: DMatrix<f64>,
    /// Objective at the start and after every iteration.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionSummary {
    pub iterations: usize,
    pub converged: bool,
    pub final_objective: f64,
}

impl Decomposition {
    pub fn final_objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace starts with the initial objective")
    }

    pub fn summary(&self) -> DecompositionSummary {
        DecompositionSummary {
            iterations: self.iterations,
            converged: self.converged,
            final_objective: self.final_objective(),
        }
    }

    /// Writes `L.csv`, `S.csv` and `decomposition.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        write_matrix_csv(&dir.join("L.csv"), &self.l_hat)?;
        write_matrix_csv(&dir.join("S.csv"), &self.s_hat)?;
        let json = serde_json::to_string_pretty(&self.summary())?;
        std::fs::write(dir.join("decomposition.json"), json + "\n")?;
        Ok(())
    }
}

/// Entrywise `sign(m) * max(|m| - tau, 0)`.
///
/// # Panics
///
/// If `tau` is negative or NaN.
pub fn soft_threshold(m: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    assert!(tau >= 0.0, "soft threshold needs tau >= 0, got {tau}");
    m.map(|x| x.signum() * (x.abs() - tau).max(0.0))
}

/// Singular value thresholding, plus the nuclear norm of the result.
fn svt_with_norm(m: &DMatrix<f64>, tau: f64) -> Result<(DMatrix<f64>, f64)> {
    let svd = svd(m)?;
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    let mut nuclear = 0.0;
    for (i, &sigma) in svd.singular_values.iter().enumerate() {
        let shrunk = sigma - tau;
        if shrunk > 0.0 {
            nuclear += shrunk;
            out += u.column(i) * v_t.row(i) * shrunk;
        }
    }
    Ok((out, nuclear))
}

/// `U * soft_threshold(Sigma, tau) * V^T`, the prox of `tau ||.||_*`.
pub fn svt(m: &DMatrix<f64>, tau: f64) -> Result<DMatrix<f64>> {
    if !(tau >= 0.0) {
        return Err(Error::Parameter(format!("svt needs tau >= 0, got {tau}")));
    }
    Ok(svt_with_norm(m, tau)?.0)
}

pub fn nuclear_norm(m: &DMatrix<f64>) -> Result<f64> {
    Ok(svd(m)?.singular_values.sum())
}

fn l1_norm(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x.abs()).sum()
}

/// Objective value at `(L, S)`, computing the nuclear norm from scratch.
pub fn objective(m: &DMatrix<f64>, l: &DMatrix<f64>, s: &DMatrix<f64>, cfg: &SolverConfig) -> Result<f64> {
    Ok((m - l - s).norm_squared() + cfg.lambda_l * nuclear_norm(l)? + cfg.lambda_s * l1_norm(s))
}

pub fn decompose(m: &DMatrix<f64>, cfg: &SolverConfig) -> Result<Decomposition> {
    cfg.validate()?;
    ensure_finite(m, "decomposition input")?;
    let (rows, cols) = m.shape();
    let mut l = DMatrix::zeros(rows, cols);
    let mut s = DMatrix::zeros(rows, cols);
    let mut trace = vec![m.norm_squared()];
    let step_limit = cfg.step_tol * m.norm().max(1.0);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iters {
        iterations += 1;
        let (l_next, nuclear) = svt_with_norm(&(m - &s), cfg.lambda_l / 2.0)?;
        l = l_next;
        let s_next = soft_threshold(&(m - &l), cfg.lambda_s / 2.0);
        let step = (&s_next - &s).norm();
        s = s_next;

        let value = (m - &l - &s).norm_squared() + cfg.lambda_l * nuclear + cfg.lambda_s * l1_norm(&s);
        let previous = *trace.last().unwrap();
        trace.push(value);
        let decrease = if previous > 0.0 {
            (previous - value) / previous
        } else {
            0.0
        };
        if decrease < cfg.tol && step <= step_limit {
            converged = true;
            break;
        }
    }

    Ok(Decomposition {
        l_hat: l,
        s_hat: s,
        objective_trace: trace,
        iterations,
        converged,
    })
}

/// Keeps entries with `S_ij >= beta` (one-sided, signed) and zeroes the rest.
pub fn threshold_sparse(s_hat: &DMatrix<f64>, beta: f64) -> DMatrix<f64> {
    s_hat.map(|x| if x >= beta { x } else { 0.0 })
}
