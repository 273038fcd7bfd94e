//! Undirected graphs, their spectra, and ground-truth eigen-centrality.

use std::collections::VecDeque;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative gap below which the top two eigenvalues are treated as tied.
pub const EIGEN_TIE_TOL: f64 = 1e-10;

const EIGEN_MAX_ITERS: usize = 10_000;

/// Simple undirected graph stored as a dense 0/1 adjacency matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: DMatrix<f64>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Graph {
            adjacency: DMatrix::zeros(n, n),
        }
    }

    /// Validates symmetry, a zero diagonal and 0/1 entries.
    pub fn from_adjacency(adjacency: DMatrix<f64>) -> Result<Self> {
        if !adjacency.is_square() {
            return Err(Error::dim(
                "adjacency",
                "square matrix",
                format!("{}x{}", adjacency.nrows(), adjacency.ncols()),
            ));
        }
        let n = adjacency.nrows();
        for i in 0..n {
            if adjacency[(i, i)] != 0.0 {
                return Err(Error::Input(format!("self-loop at node {i}")));
            }
            for j in (i + 1)..n {
                let a = adjacency[(i, j)];
                if a != adjacency[(j, i)] {
                    return Err(Error::Input(format!("adjacency not symmetric at ({i}, {j})")));
                }
                if a != 0.0 && a != 1.0 {
                    return Err(Error::Input(format!("adjacency entry ({i}, {j}) = {a} is not 0/1")));
                }
            }
        }
        Ok(Graph { adjacency })
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Graph::empty(n);
        for &(i, j) in edges {
            g.add_edge(i, j)?;
        }
        Ok(g)
    }

    fn add_edge(&mut self, i: usize, j: usize) -> Result<()> {
        let n = self.n();
        if i >= n || j >= n {
            return Err(Error::Input(format!("edge ({i}, {j}) out of range for {n} nodes")));
        }
        if i == j {
            return Err(Error::Input(format!("self-loop at node {i}")));
        }
        self.adjacency[(i, j)] = 1.0;
        self.adjacency[(j, i)] = 1.0;
        Ok(())
    }

    pub fn complete(n: usize) -> Self {
        Graph {
            adjacency: DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 }),
        }
    }

    /// Star with node 0 as the hub and `n - 1` leaves.
    pub fn star(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|j| (0, j)).collect();
        Graph::from_edges(n, &edges).expect("star edges are valid")
    }

    pub fn n(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[(i, j)] != 0.0
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency.row(i).iter().filter(|&&a| a != 0.0).count()
    }

    /// Edges `(i, j)` with `i < j` in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if self.has_edge(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }

    /// Writes the edge list, one `i j` pair per line, preceded by a
    /// `# nodes <n>` comment so isolated nodes survive a round trip.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# nodes {}", self.n())?;
        for (i, j) in self.edges() {
            writeln!(out, "{i} {j}")?;
        }
        Ok(())
    }

    pub fn save_edge_list(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_edge_list(std::io::BufWriter::new(file))
    }

    /// Reads an edge list. Without a `# nodes` header the node count is one
    /// more than the largest index seen.
    pub fn read_edge_list<R: BufRead>(input: R) -> Result<Self> {
        let mut declared = None;
        let mut edges = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let mut words = comment.split_whitespace();
                if words.next() == Some("nodes") {
                    declared = words.next().and_then(|w| w.parse::<usize>().ok());
                }
                continue;
            }
            let mut parts = line.split_whitespace();
            let mut next = || -> Result<usize> {
                parts
                    .next()
                    .ok_or_else(|| Error::Input(format!("line {}: expected `i j`", lineno + 1)))?
                    .parse::<usize>()
                    .map_err(|e| Error::Input(format!("line {}: {e}", lineno + 1)))
            };
            let i = next()?;
            let j = next()?;
            edges.push((i, j));
        }
        let max_index = edges.iter().map(|&(i, j)| i.max(j) + 1).max().unwrap_or(0);
        let n = declared.unwrap_or(max_index).max(max_index);
        Graph::from_edges(n, &edges)
    }

    pub fn load_edge_list(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Graph::read_edge_list(BufReader::new(file))
    }
}

/// Samples the two-block core-periphery stochastic block model.
///
/// Nodes `0..core_size` form the core. A pair is linked with probability 1
/// inside the core, `4p` between core and periphery, and `p` inside the
/// periphery. One uniform draw is consumed per unordered pair `i < j` in
/// row-major order, and the edge is present iff the draw is below the pair
/// probability.
pub fn generate_sbm_core_periphery<R: Rng + ?Sized>(
    n: usize,
    core_size: usize,
    p: f64,
    rng: &mut R,
) -> Result<Graph> {
    if core_size == 0 || core_size >= n {
        return Err(Error::Parameter(format!(
            "core_size must satisfy 0 < core_size < n (got core_size = {core_size}, n = {n})"
        )));
    }
    if !(0.0..=0.25).contains(&p) {
        return Err(Error::Parameter(format!(
            "p must lie in [0, 0.25] so that 4p is a probability (got {p})"
        )));
    }
    let mut g = Graph::empty(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let prob = match (i < core_size, j < core_size) {
                (true, true) => 1.0,
                (false, false) => p,
                _ => 4.0 * p,
            };
            let u: f64 = rng.random();
            if u < prob {
                g.adjacency[(i, j)] = 1.0;
                g.adjacency[(j, i)] = 1.0;
            }
        }
    }
    Ok(g)
}

pub fn is_connected(g: &Graph) -> bool {
    let n = g.n();
    if n == 0 {
        return false;
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            if !seen[v] && g.has_edge(u, v) {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count == n
}

/// Full eigendecomposition of a symmetric matrix, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    matrix: DMatrix<f64>,
}

impl SpectralDecomposition {
    /// Decomposes any symmetric matrix (adjacency, covariance, ...).
    pub fn of_symmetric(matrix: &DMatrix<f64>) -> Result<Self> {
        let eig = SymmetricEigen::try_new(matrix.clone(), f64::EPSILON, EIGEN_MAX_ITERS).ok_or(
            Error::NonConvergence {
                what: "symmetric eigensolver",
                iterations: EIGEN_MAX_ITERS,
            },
        )?;
        let n = matrix.nrows();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let eigenvalues = DVector::from_fn(n, |i, _| eig.eigenvalues[order[i]]);
        let mut eigenvectors = DMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            let mut col = eig.eigenvectors.column(src).into_owned();
            canonical_sign(&mut col);
            eigenvectors.set_column(dst, &col);
        }
        Ok(SpectralDecomposition {
            eigenvalues,
            eigenvectors,
            matrix: matrix.clone(),
        })
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// The decomposed matrix.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn top_vector(&self) -> DVector<f64> {
        self.eigenvectors.column(0).into_owned()
    }

    /// `max_i ||A v_i - lambda_i v_i||_2`.
    pub fn max_residual(&self) -> f64 {
        let av = &self.matrix * &self.eigenvectors;
        (0..self.n())
            .map(|i| (av.column(i) - self.eigenvectors.column(i) * self.eigenvalues[i]).norm())
            .fold(0.0, f64::max)
    }

    /// `||V^T V - I||_max`.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.eigenvectors.transpose() * &self.eigenvectors;
        let n = self.n();
        (gram - DMatrix::<f64>::identity(n, n)).amax()
    }
}

pub fn spectral_decompose(g: &Graph) -> Result<SpectralDecomposition> {
    SpectralDecomposition::of_symmetric(g.adjacency())
}

/// Which procedure produced a centrality vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
pub enum Method {
    #[serde(rename = "groundtruth")]
    GroundTruth,
    #[serde(rename = "pca")]
    Pca,
    #[serde(rename = "robust")]
    Robust,
    #[serde(rename = "robust-quantized", alias = "robust-q")]
    RobustQuantized,
}

impl Method {
    pub const ESTIMATORS: [Method; 3] = [Method::Pca, Method::Robust, Method::RobustQuantized];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::GroundTruth => "groundtruth",
            Method::Pca => "pca",
            Method::Robust => "robust",
            Method::RobustQuantized => "robust-quantized",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "groundtruth" | "truth" => Ok(Method::GroundTruth),
            "pca" => Ok(Method::Pca),
            "robust" => Ok(Method::Robust),
            "robust-quantized" | "robust-q" => Ok(Method::RobustQuantized),
            other => Err(Error::Parameter(format!("unknown method `{other}`"))),
        }
    }
}

/// Unit-norm centrality scores, sign-fixed so the largest-magnitude entry is
/// positive.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralityEstimate {
    pub scores: DVector<f64>,
    pub method: Method,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralityRecord {
    pub method: Method,
    pub scores: Vec<f64>,
    pub ranking: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl CentralityEstimate {
    /// Normalizes `v` and applies the canonical sign.
    pub fn new(mut scores: DVector<f64>, method: Method) -> Result<Self> {
        let norm = scores.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Degenerate(format!(
                "{method} scores have norm {norm}, cannot normalize"
            )));
        }
        scores /= norm;
        canonical_sign(&mut scores);
        Ok(CentralityEstimate {
            scores,
            method,
            warnings: Vec::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.scores.len()
    }

    /// Node indices ordered by `|score|` descending, ties to the lower index.
    pub fn ranking(&self) -> Vec<usize> {
        rank_by_magnitude(self.scores.as_slice())
    }

    pub fn to_record(&self) -> CentralityRecord {
        CentralityRecord {
            method: self.method,
            scores: self.scores.iter().copied().collect(),
            ranking: self.ranking(),
            warnings: self.warnings.clone(),
        }
    }

    pub fn from_record(rec: &CentralityRecord) -> Result<Self> {
        let mut est = CentralityEstimate::new(DVector::from_vec(rec.scores.clone()), rec.method)?;
        est.warnings = rec.warnings.clone();
        Ok(est)
    }
}

pub fn rank_by_magnitude(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].abs().total_cmp(&values[a].abs()).then(a.cmp(&b)));
    idx
}

/// Flips `v` so that its largest-magnitude entry (lowest index on ties) is
/// positive.
pub fn canonical_sign(v: &mut DVector<f64>) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if !v.is_empty() && v[best] < 0.0 {
        v.neg_mut();
    }
}

/// Top adjacency eigenvector of a connected graph with a simple top eigenvalue.
pub fn eigen_centrality(sd: &SpectralDecomposition, g: &Graph) -> Result<CentralityEstimate> {
    if sd.n() != g.n() {
        return Err(Error::dim("eigen_centrality", g.n(), sd.n()));
    }
    if !is_connected(g) {
        return Err(Error::Domain(
            "graph is disconnected; the Perron vector is not unique".into(),
        ));
    }
    if sd.n() >= 2 {
        let (l1, l2) = (sd.eigenvalues[0], sd.eigenvalues[1]);
        if l1 - l2 <= EIGEN_TIE_TOL * l1.abs().max(1.0) {
            return Err(Error::Degenerate(format!(
                "top adjacency eigenvalue is not simple (lambda_1 = {l1}, lambda_2 = {l2})"
            )));
        }
    }
    CentralityEstimate::new(sd.top_vector(), Method::GroundTruth)
}
